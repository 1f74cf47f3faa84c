#include "cfcal/hmc.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cfcal {

HmcTarget make_target(const IdmModel& model) {
    return HmcTarget{
        [&model](const std::vector<double>& x) {
            return model.log_joint(LatentState{x});
        },
        [&model](const std::vector<double>& x) {
            return model.grad_log_joint(LatentState{x});
        }};
}

void HmcConfig::validate() const {
    if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
    if (n_leapfrog < 1) throw ConfigError("n_leapfrog must be at least 1");
    if (base_run_steps < 1) throw ConfigError("base_run_steps must be at least 1");
    if (max_total_steps < base_run_steps)
        throw ConfigError("max_total_steps must be >= base_run_steps");
    if (!(convergence_tol > 0.0))
        throw ConfigError("convergence_tol must be positive");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw ConfigError("tail_fraction must lie in (0, 1]");
    for (double m : mass)
        if (!(m > 0.0)) throw ConfigError("mass entries must be positive");
}

double Chain::acceptance_rate() const {
    if (accepted.size() <= 1) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < accepted.size(); ++i) acc += accepted[i] ? 1 : 0;
    return acc / static_cast<double>(accepted.size() - 1);
}

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

bool leapfrog(std::vector<double>& state, std::vector<double>& momentum,
              const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn,
              double step_size, int n_steps,
              const std::vector<double>& mass) {
    const std::size_t dim = state.size();
    auto inv_mass = [&](std::size_t i) {
        return mass.empty() ? 1.0 : 1.0 / mass[i];
    };
    try {
        std::vector<double> g = grad_fn(state);
        if (!all_finite(g)) return false;
        for (int step = 0; step < n_steps; ++step) {
            for (std::size_t i = 0; i < dim; ++i)
                momentum[i] += 0.5 * step_size * g[i];
            for (std::size_t i = 0; i < dim; ++i)
                state[i] += step_size * momentum[i] * inv_mass(i);
            g = grad_fn(state);
            if (!all_finite(g)) return false;
            for (std::size_t i = 0; i < dim; ++i)
                momentum[i] += 0.5 * step_size * g[i];
        }
    } catch (const std::domain_error&) {
        return false;
    }
    return true;
}

StepResult hmc_step(Rng& rng, const std::vector<double>& current,
                    double current_log_prob, const HmcTarget& target,
                    const HmcConfig& config) {
    const std::size_t dim = current.size();
    std::normal_distribution<double> unit(0.0, 1.0);

    std::vector<double> momentum(dim);
    double kinetic0 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double m = config.mass.empty() ? 1.0 : config.mass[i];
        momentum[i] = std::sqrt(m) * unit(rng);
        kinetic0 += 0.5 * momentum[i] * momentum[i] / m;
    }

    std::vector<double> proposal = current;
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    const double u = ur(rng);   // drawn unconditionally to keep streams aligned

    if (!leapfrog(proposal, momentum, target.grad, config.step_size,
                  config.n_leapfrog, config.mass))
        return {current, current_log_prob, false};

    const double proposal_log_prob = target.log_prob(proposal);
    double kinetic1 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double m = config.mass.empty() ? 1.0 : config.mass[i];
        kinetic1 += 0.5 * momentum[i] * momentum[i] / m;
    }

    const double h0 = -current_log_prob + kinetic0;
    const double h1 = -proposal_log_prob + kinetic1;
    const double log_accept = h0 - h1;   // overflow/NaN falls through to reject
    if (std::isfinite(log_accept) && std::log(u) < log_accept)
        return {std::move(proposal), proposal_log_prob, true};
    return {current, current_log_prob, false};
}

Chain run_chain(const HmcTarget& target, const std::vector<double>& init,
                int n_steps, const HmcConfig& config, std::uint64_t stream) {
    config.validate();
    if (!config.mass.empty() && config.mass.size() != init.size())
        throw ConfigError("mass vector dimension does not match state");
    const double init_lp = target.log_prob(init);
    if (!std::isfinite(init_lp))
        throw ConfigError("run_chain: initial state has zero density");

    Rng rng = make_rng(config.seed, stream);
    Chain chain;
    chain.config = config;
    chain.samples.reserve(static_cast<std::size_t>(n_steps) + 1);
    chain.samples.push_back(init);
    chain.log_joints.push_back(init_lp);
    chain.accepted.push_back(1);

    std::vector<double> x = init;
    double lp = init_lp;
    for (int step = 0; step < n_steps; ++step) {
        StepResult r = hmc_step(rng, x, lp, target, config);
        x = r.state;
        lp = r.log_prob;
        chain.samples.push_back(x);
        chain.log_joints.push_back(lp);
        chain.accepted.push_back(r.accepted ? 1 : 0);
    }
    return chain;
}

namespace {

double tail_mean(const std::vector<double>& values, double fraction) {
    const std::size_t n = values.size();
    std::size_t m = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));
    if (m < 1) m = 1;
    double sum = 0.0;
    for (std::size_t i = n - m; i < n; ++i) sum += values[i];
    return sum / static_cast<double>(m);
}

} // namespace

RestartResult restart_calibrate(const HmcTarget& target,
                                const std::vector<double>& init,
                                const HmcConfig& config) {
    config.validate();
    RestartResult result;
    Chain last;
    for (int run = 0;; ++run) {
        const long proposed = static_cast<long>(config.base_run_steps) * (run + 1);
        if (proposed > config.max_total_steps) break;
        const int n_steps = static_cast<int>(proposed);
        last = run_chain(target, init, n_steps, config,
                         static_cast<std::uint64_t>(run));
        result.schedule_log.push_back(n_steps);
        result.run_stats.push_back(
            tail_mean(last.log_joints, config.tail_fraction));
        const std::size_t r = result.run_stats.size();
        if (r >= 2) {
            const double prev = result.run_stats[r - 2];
            const double curr = result.run_stats[r - 1];
            const double denom = std::max(std::abs(prev),
                                          std::numeric_limits<double>::min());
            if (std::abs(curr - prev) / denom < config.convergence_tol) {
                result.converged = true;
                break;
            }
        }
    }
    if (result.schedule_log.empty())
        throw ConfigError("restart_calibrate: budget allows no runs");

    // Retain the last run with its first half discarded as burn-in.
    const std::size_t n = last.samples.size();
    const std::size_t burn = n / 2;
    Chain& post = result.posterior;
    post.config = last.config;
    post.samples.assign(last.samples.begin() + burn, last.samples.end());
    post.log_joints.assign(last.log_joints.begin() + burn,
                           last.log_joints.end());
    post.accepted.assign(last.accepted.begin() + burn, last.accepted.end());
    return result;
}

RestartResult restart_calibrate(const IdmModel& model,
                                const HmcConfig& config) {
    const HmcTarget target = make_target(model);
    const LatentState init = model.init_state();
    return restart_calibrate(target, init.theta, config);
}

std::vector<double> curvature_mass(const HmcTarget& target,
                                   const std::vector<double>& at,
                                   double floor_mass) {
    const std::size_t dim = at.size();
    std::vector<double> mass(dim);
    const std::vector<double> g0 = target.grad(at);
    std::vector<double> x = at;
    auto grad_at = [&](std::size_t i, double xi, double& out) {
        x[i] = xi;
        bool ok = true;
        try {
            const double g = target.grad(x)[i];
            ok = std::isfinite(g);
            if (ok) out = g;
        } catch (const std::domain_error&) {
            ok = false;
        }
        x[i] = at[i];
        return ok;
    };
    for (std::size_t i = 0; i < dim; ++i) {
        const double h = 1e-4 * std::max(1.0, std::abs(at[i]));
        double gp = 0.0, gm = 0.0;
        const bool has_p = grad_at(i, at[i] + h, gp);
        const bool has_m = grad_at(i, at[i] - h, gm);
        double curv;
        if (has_p && has_m) {
            curv = -(gp - gm) / (2.0 * h);
        } else if (has_p) {   // validity boundary below; one-sided estimate
            curv = -(gp - g0[i]) / h;
        } else if (has_m) {
            curv = -(g0[i] - gm) / h;
        } else {
            curv = floor_mass;
        }
        mass[i] = std::isfinite(curv) ? std::max(curv, floor_mass) : floor_mass;
    }
    return mass;
}

std::vector<std::vector<IdmParams>> posterior_params(const ModelSpec& spec,
                                                     const Chain& chain) {
    if (chain.samples.empty())
        throw ConfigError("posterior_params: empty chain");
    std::vector<std::vector<IdmParams>> out(spec.n_drivers);
    for (std::size_t d = 0; d < spec.n_drivers; ++d) {
        out[d].reserve(chain.samples.size());
        for (const auto& sample : chain.samples)
            out[d].push_back(realize_params(spec, LatentState{sample}, d));
    }
    return out;
}

} // namespace cfcal
