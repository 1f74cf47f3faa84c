#include "cfcal/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cfcal/rng.hpp"

namespace cfcal {

GpRegressor::GpRegressor(double lengthscale, double jitter)
    : lengthscale_(lengthscale), jitter_(jitter) {
    if (!(lengthscale > 0.0)) throw ConfigError("lengthscale must be positive");
    if (!(jitter > 0.0)) throw ConfigError("jitter must be positive");
}

double GpRegressor::kernel(const std::vector<double>& a,
                           const std::vector<double>& b) const {
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - b[i]) / lengthscale_;
        r2 += d * d;
    }
    const double r = std::sqrt(5.0 * r2);
    return (1.0 + r + r * r / 3.0) * std::exp(-r);
}

void GpRegressor::fit(const std::vector<std::vector<double>>& X,
                      const std::vector<double>& y) {
    if (X.size() != y.size() || X.empty())
        throw ConfigError("GpRegressor::fit: bad training set");
    X_ = X;
    const auto n = static_cast<Eigen::Index>(X.size());

    double sum = 0.0;
    for (double v : y) sum += v;
    y_mean_ = sum / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - y_mean_) * (v - y_mean_);
    y_std_ = std::sqrt(ss / static_cast<double>(y.size()));
    if (y_std_ < 1e-12) y_std_ = 1.0;   // constant targets

    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            K(i, j) = kernel(X_[static_cast<std::size_t>(i)],
                             X_[static_cast<std::size_t>(j)]);
    K.diagonal().array() += jitter_;

    Eigen::VectorXd ys(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ys(i) = (y[static_cast<std::size_t>(i)] - y_mean_) / y_std_;

    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) {
        K.diagonal().array() += 1e-6;
        llt.compute(K);
        if (llt.info() != Eigen::Success)
            throw ConfigError("GpRegressor::fit: kernel matrix not PD");
    }
    const Eigen::VectorXd alpha = llt.solve(ys);
    const Eigen::MatrixXd L = llt.matrixL();

    alpha_.assign(alpha.data(), alpha.data() + n);
    chol_.assign(static_cast<std::size_t>(n),
                 std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            chol_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                L(i, j);
}

GpRegressor::Prediction GpRegressor::predict(const std::vector<double>& x) const {
    if (X_.empty()) throw ConfigError("GpRegressor::predict: not fitted");
    const std::size_t n = X_.size();
    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i) kstar[i] = kernel(x, X_[i]);

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += kstar[i] * alpha_[i];

    // v = L^{-1} k*, var = k(x,x) - v'v
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = kstar[i];
        for (std::size_t j = 0; j < i; ++j) s -= chol_[i][j] * v[j];
        v[i] = s / chol_[i][i];
    }
    double var = kernel(x, x);
    for (std::size_t i = 0; i < n; ++i) var -= v[i] * v[i];
    var = std::max(var, 0.0);

    return {y_mean_ + y_std_ * mean, y_std_ * std::sqrt(var)};
}

double expected_improvement(double mean, double sd, double best) {
    if (sd <= 0.0) return std::max(best - mean, 0.0);
    const double z = (best - mean) / sd;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    return sd * (z * cdf + pdf);
}

namespace {

constexpr int kWarmStart = 5;
constexpr int kAcqSamples = 2048;

std::vector<double> normalize(const std::array<double, 3>& x,
                              const HyperBounds& bounds) {
    std::vector<double> out(3);
    for (int i = 0; i < 3; ++i)
        out[static_cast<std::size_t>(i)] =
            (x[static_cast<std::size_t>(i)] - bounds[i].first) /
            (bounds[i].second - bounds[i].first);
    return out;
}

} // namespace

BoResult bayes_opt_tune_objective(
    const std::function<double(double, double, double)>& objective,
    const HyperBounds& bounds, int budget, std::uint64_t seed) {
    if (budget < kWarmStart)
        throw ConfigError("bayes_opt_tune: budget must be at least 5");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi))
            throw ConfigError("bayes_opt_tune: degenerate bounds");

    Rng rng = make_rng(seed, 0xb0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto sample_point = [&]() {
        std::array<double, 3> x;
        for (int i = 0; i < 3; ++i)
            x[static_cast<std::size_t>(i)] =
                bounds[i].first + u01(rng) * (bounds[i].second - bounds[i].first);
        return x;
    };

    BoResult result;
    std::vector<std::vector<double>> X;
    std::vector<double> y;

    auto evaluate = [&](const std::array<double, 3>& x) {
        const double val = objective(x[0], x[1], x[2]);
        result.trace.push_back({x[0], x[1], x[2], val});
        X.push_back(normalize(x, bounds));
        y.push_back(val);
    };

    for (int i = 0; i < kWarmStart && i < budget; ++i) evaluate(sample_point());

    GpRegressor gp;
    for (int it = kWarmStart; it < budget; ++it) {
        gp.fit(X, y);
        const double best = *std::min_element(y.begin(), y.end());
        std::array<double, 3> best_x{};
        double best_ei = -1.0;
        for (int s = 0; s < kAcqSamples; ++s) {
            const std::array<double, 3> cand = sample_point();
            const auto pred = gp.predict(normalize(cand, bounds));
            const double ei = expected_improvement(pred.mean, pred.sd, best);
            if (ei > best_ei) {
                best_ei = ei;
                best_x = cand;
            }
        }
        evaluate(best_x);
    }

    std::size_t arg = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i)
        if (result.trace[i].rmse < result.trace[arg].rmse) arg = i;
    result.incumbent = result.trace[arg];
    return result;
}

BoResult bayes_opt_tune(const Dataset& data, const HyperBounds& bounds,
                        int budget, const DeConfig& de_base_config,
                        std::uint64_t seed) {
    auto objective = [&](double cr, double f, double lambda) {
        DeConfig config = de_base_config;
        config.crossover_prob = cr;
        config.differential_weight = f;
        config.lambda = lambda;
        const DeResult de = run_de(config, data);
        return fitness(de.best.params, data, 0.0);
    };
    return bayes_opt_tune_objective(objective, bounds, budget, seed);
}

} // namespace cfcal
