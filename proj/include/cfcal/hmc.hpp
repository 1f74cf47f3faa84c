#ifndef CFCAL_HMC_HPP
#define CFCAL_HMC_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "cfcal/prob_model.hpp"
#include "cfcal/rng.hpp"

namespace cfcal {

/// Differentiable log-density target. grad may throw std::domain_error for
/// states with zero density; callers treat that as a rejected proposal.
struct HmcTarget {
    std::function<double(const std::vector<double>&)> log_prob;
    std::function<std::vector<double>(const std::vector<double>&)> grad;
};

HmcTarget make_target(const IdmModel& model);

struct HmcConfig {
    double step_size = 0.01;
    int n_leapfrog = 20;
    int base_run_steps = 1500;    // first run length; runs grow by this much
    int max_total_steps = 9000;   // cap on a single run's length
    double convergence_tol = 1e-2;
    double tail_fraction = 0.2;   // portion of a run the statistic averages
    std::uint64_t seed = 0;
    std::vector<double> mass;     // per-dimension; empty = identity

    void validate() const;
};

struct Chain {
    std::vector<std::vector<double>> samples;  // init plus one per step
    std::vector<double> log_joints;
    std::vector<char> accepted;                // accepted[0] refers to init
    HmcConfig config;

    std::size_t size() const { return samples.size(); }
    double acceptance_rate() const;
};

/// n_steps of half-kick / drift / half-kick updates, in place. Returns false
/// (leaving no guarantees on state/momentum) if the gradient is undefined or
/// non-finite anywhere along the trajectory.
bool leapfrog(std::vector<double>& state, std::vector<double>& momentum,
              const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn,
              double step_size, int n_steps,
              const std::vector<double>& mass = {});

struct StepResult {
    std::vector<double> state;
    double log_prob;
    bool accepted;
};

/// One HMC transition: momentum resample, leapfrog proposal, Metropolis
/// correction. current_log_prob must equal target.log_prob(current).
StepResult hmc_step(Rng& rng, const std::vector<double>& current,
                    double current_log_prob, const HmcTarget& target,
                    const HmcConfig& config);

/// Sequential chain of n_steps transitions from init; deterministic given
/// config.seed and the stream id.
Chain run_chain(const HmcTarget& target, const std::vector<double>& init,
                int n_steps, const HmcConfig& config,
                std::uint64_t stream = 0);

struct RestartResult {
    Chain posterior;                 // last run with first half discarded
    std::vector<int> schedule_log;   // lengths of the runs performed
    std::vector<double> run_stats;   // tail-mean log joint per run
    bool converged = false;
};

/// The incremental-restart protocol: fresh chains of growing length
/// (base, 2*base, ...) from the same initialization until the tail-mean log
/// joint stabilizes to within convergence_tol relative change, or a run of
/// max_total_steps has been spent.
RestartResult restart_calibrate(const HmcTarget& target,
                                const std::vector<double>& init,
                                const HmcConfig& config);

RestartResult restart_calibrate(const IdmModel& model, const HmcConfig& config);

/// Per-dimension mass from the negative diagonal curvature of the log joint
/// at `at` (central differences of the gradient), floored at `floor_mass`.
/// Computed once before sampling; the kernel itself never adapts.
std::vector<double> curvature_mass(const HmcTarget& target,
                                   const std::vector<double>& at,
                                   double floor_mass = 1.0);

/// Per-driver IDM parameter draws implied by every retained sample.
/// Result is indexed [driver][sample].
std::vector<std::vector<IdmParams>> posterior_params(const ModelSpec& spec,
                                                     const Chain& chain);

} // namespace cfcal

#endif
