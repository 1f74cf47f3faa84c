#ifndef CFCAL_PROB_MODEL_HPP
#define CFCAL_PROB_MODEL_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "cfcal/idm.hpp"
#include "cfcal/trajectory.hpp"

namespace cfcal {

enum class Formulation { Pooled, Hierarchical, Individual };

Formulation parse_formulation(const std::string& name);
const char* formulation_name(Formulation f);

/// Which probabilistic formulation is being calibrated and the scale of the
/// Gaussian priors centered on the literature values.
struct ModelSpec {
    Formulation formulation = Formulation::Pooled;
    double prior_sigma = 10.0;
    IdmParams prior_mean = literature_params();
    std::size_t n_drivers = 1;

    static constexpr int k = kIdmParamCount;

    /// Latent dimension: k (pooled), n*k (individual), (n+2)*k
    /// (hierarchical: per-driver standard-normal variates plus population
    /// means and raw population scales).
    std::size_t latent_dim() const;

    // Hierarchical layout offsets.
    std::size_t norm_index(std::size_t driver, int param) const {
        return driver * k + static_cast<std::size_t>(param);
    }
    std::size_t mu_index(int param) const {
        return n_drivers * k + static_cast<std::size_t>(param);
    }
    std::size_t sigma_raw_index(int param) const {
        return (n_drivers + 1) * k + static_cast<std::size_t>(param);
    }

    void validate() const;
};

/// Flat latent vector HMC walks over; layout is defined by ModelSpec.
struct LatentState {
    std::vector<double> theta;
};

/// Human-readable name of latent position i (for posterior export).
std::string latent_label(const ModelSpec& spec, std::size_t i);

/// Noise floor shared with metrics: degenerate constant-acceleration
/// instances get this observation std instead of zero.
inline constexpr double kSigmaFloor = 0.01;

double softplus(double x);
double sigmoid(double x);

/// IDM parameters of one driver implied by the latent state. For the
/// hierarchical formulation this is the non-centered recomposition
/// mu + softplus(sigma_raw) * theta_norm. May return an invalid IdmParams;
/// density evaluation guards with -infinity.
IdmParams realize_params(const ModelSpec& spec, const LatentState& state,
                         std::size_t driver);

/// Spec + dataset bound together with per-instance noise scales cached.
/// All evaluation methods are pure and thread-safe.
class IdmModel {
public:
    IdmModel(ModelSpec spec, const Dataset& data);

    const ModelSpec& spec() const { return spec_; }
    const Dataset& data() const { return *data_; }

    /// Latent state at the prior mean (zeros for the standard-normal
    /// variates); always has finite density.
    LatentState init_state() const;

    double log_prior(const LatentState& state) const;
    double log_likelihood(const LatentState& state) const;
    double log_joint(const LatentState& state) const;

    /// Exact gradient of log_joint. Throws std::domain_error when the state
    /// lies in the -infinity region.
    std::vector<double> grad_log_joint(const LatentState& state) const;

private:
    ModelSpec spec_;
    const Dataset* data_;
    std::vector<double> sigma_;             // per-instance noise scale
    std::vector<std::size_t> driver_of_;    // per-instance driver index
};

} // namespace cfcal

#endif
