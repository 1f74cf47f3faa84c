#ifndef CFCAL_BAYES_OPT_HPP
#define CFCAL_BAYES_OPT_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cfcal/de.hpp"

namespace cfcal {

/// Gaussian-process regressor with a Matern-5/2 kernel over inputs
/// normalized to the unit box, standardized targets, and observation
/// jitter. Fixed hyperparameters; this backs the DE tuner, it is not a
/// general-purpose GP.
class GpRegressor {
public:
    explicit GpRegressor(double lengthscale = 0.25, double jitter = 1e-8);

    void fit(const std::vector<std::vector<double>>& X,
             const std::vector<double>& y);

    struct Prediction {
        double mean;
        double sd;
    };
    Prediction predict(const std::vector<double>& x) const;

    std::size_t n_train() const { return X_.size(); }

private:
    double kernel(const std::vector<double>& a,
                  const std::vector<double>& b) const;

    double lengthscale_;
    double jitter_;
    std::vector<std::vector<double>> X_;
    std::vector<double> alpha_;          // K^{-1} (y - mean) in std units
    std::vector<std::vector<double>> chol_;  // lower Cholesky factor of K
    double y_mean_ = 0.0;
    double y_std_ = 1.0;
};

/// Expected improvement for minimization at predicted (mean, sd) against the
/// incumbent best observed value.
double expected_improvement(double mean, double sd, double best);

using HyperBounds = std::array<std::pair<double, double>, 3>;  // CR, F, lambda

struct BoEvaluation {
    double crossover_prob, differential_weight, lambda;
    double rmse;   // unregularized mean RMSE of the DE run's best candidate
};

struct BoResult {
    BoEvaluation incumbent;
    std::vector<BoEvaluation> trace;
};

/// Sequential model-based tuning of (CR, F, lambda): 5 seeded random
/// warm-start points, then GP + expected-improvement proposals maximized by
/// random multi-start within the bounds.
BoResult bayes_opt_tune(const Dataset& data, const HyperBounds& bounds,
                        int budget, const DeConfig& de_base_config,
                        std::uint64_t seed);

/// Same loop against an arbitrary objective; used by tests with cheap
/// synthetic objectives.
BoResult bayes_opt_tune_objective(
    const std::function<double(double, double, double)>& objective,
    const HyperBounds& bounds, int budget, std::uint64_t seed);

} // namespace cfcal

#endif
