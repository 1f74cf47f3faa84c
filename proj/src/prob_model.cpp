#include "cfcal/prob_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfcal/dual.hpp"

namespace cfcal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;

// log N(x | mean, sd^2)
double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

} // namespace

Formulation parse_formulation(const std::string& name) {
    if (name == "pooled") return Formulation::Pooled;
    if (name == "hierarchical") return Formulation::Hierarchical;
    if (name == "individual") return Formulation::Individual;
    throw ConfigError("unknown formulation '" + name +
                      "' (expected pooled, hierarchical, or individual)");
}

const char* formulation_name(Formulation f) {
    switch (f) {
        case Formulation::Pooled: return "pooled";
        case Formulation::Hierarchical: return "hierarchical";
        case Formulation::Individual: return "individual";
    }
    return "?";
}

std::size_t ModelSpec::latent_dim() const {
    switch (formulation) {
        case Formulation::Pooled: return k;
        case Formulation::Individual: return n_drivers * k;
        case Formulation::Hierarchical: return (n_drivers + 2) * k;
    }
    return 0;
}

void ModelSpec::validate() const {
    if (!(prior_sigma > 0.0))
        throw ConfigError("prior_sigma must be positive");
    if (n_drivers < 1) throw ConfigError("n_drivers must be at least 1");
    require_valid_params(prior_mean);
}

std::string latent_label(const ModelSpec& spec, std::size_t i) {
    const int k = ModelSpec::k;
    switch (spec.formulation) {
        case Formulation::Pooled:
            return kIdmParamNames[i];
        case Formulation::Individual:
            return "theta[d" + std::to_string(i / k) + "]." +
                   kIdmParamNames[i % k];
        case Formulation::Hierarchical: {
            const std::size_t nk = spec.n_drivers * k;
            if (i < nk)
                return "norm[d" + std::to_string(i / k) + "]." +
                       kIdmParamNames[i % k];
            if (i < nk + k) return std::string("mu.") + kIdmParamNames[i - nk];
            return std::string("sigma_raw.") + kIdmParamNames[i - nk - k];
        }
    }
    return "?";
}

double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

IdmParams realize_params(const ModelSpec& spec, const LatentState& state,
                         std::size_t driver) {
    if (driver >= spec.n_drivers)
        throw ConfigError("driver index out of range");
    IdmParams p;
    switch (spec.formulation) {
        case Formulation::Pooled:
            for (int j = 0; j < ModelSpec::k; ++j) p[j] = state.theta[j];
            break;
        case Formulation::Individual:
            for (int j = 0; j < ModelSpec::k; ++j)
                p[j] = state.theta[driver * ModelSpec::k + j];
            break;
        case Formulation::Hierarchical:
            for (int j = 0; j < ModelSpec::k; ++j) {
                const double mu = state.theta[spec.mu_index(j)];
                const double scale =
                    softplus(state.theta[spec.sigma_raw_index(j)]);
                const double norm = state.theta[spec.norm_index(driver, j)];
                p[j] = mu + scale * norm;
            }
            break;
    }
    return p;
}

IdmModel::IdmModel(ModelSpec spec, const Dataset& data)
    : spec_(spec), data_(&data) {
    spec_.validate();
    if (data.n_drivers() != spec_.n_drivers)
        throw ConfigError("ModelSpec n_drivers does not match dataset");
    sigma_.reserve(data.n_instances());
    driver_of_.reserve(data.n_instances());
    for (const auto& inst : data.instances) {
        sigma_.push_back(std::max(instance_stats(inst).std_a, kSigmaFloor));
        driver_of_.push_back(data.driver_index(inst.driver_id));
    }
}

LatentState IdmModel::init_state() const {
    // Start at the prior mean, except that parameters whose mean sits
    // exactly on a validity boundary (s1 = 0 for the literature values) are
    // nudged inside; a chain started on the wall rejects almost every
    // trajectory.
    IdmParams start = spec_.prior_mean;
    if (start.s1 == 0.0) start.s1 = 0.1;
    if (start.T == 0.0) start.T = 0.1;
    if (start.s0 == 0.0) start.s0 = 0.1;

    LatentState state;
    state.theta.assign(spec_.latent_dim(), 0.0);
    switch (spec_.formulation) {
        case Formulation::Pooled:
            for (int j = 0; j < ModelSpec::k; ++j) state.theta[j] = start[j];
            break;
        case Formulation::Individual:
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < ModelSpec::k; ++j)
                    state.theta[d * ModelSpec::k + j] = start[j];
            break;
        case Formulation::Hierarchical:
            for (int j = 0; j < ModelSpec::k; ++j)
                state.theta[spec_.mu_index(j)] = start[j];
            // theta_norm and sigma_raw stay at zero.
            break;
    }
    return state;
}

double IdmModel::log_prior(const LatentState& state) const {
    const double sp = spec_.prior_sigma;
    double lp = 0.0;
    switch (spec_.formulation) {
        case Formulation::Pooled:
            for (int j = 0; j < ModelSpec::k; ++j)
                lp += normal_logpdf(state.theta[j], spec_.prior_mean[j], sp);
            break;
        case Formulation::Individual:
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < ModelSpec::k; ++j)
                    lp += normal_logpdf(state.theta[d * ModelSpec::k + j],
                                        spec_.prior_mean[j], sp);
            break;
        case Formulation::Hierarchical:
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < ModelSpec::k; ++j)
                    lp += normal_logpdf(
                        state.theta[spec_.norm_index(d, j)], 0.0, 1.0);
            for (int j = 0; j < ModelSpec::k; ++j) {
                lp += normal_logpdf(state.theta[spec_.mu_index(j)],
                                    spec_.prior_mean[j], sp);
                lp += normal_logpdf(state.theta[spec_.sigma_raw_index(j)],
                                    0.0, sp);
            }
            break;
    }
    return lp;
}

double IdmModel::log_likelihood(const LatentState& state) const {
    std::vector<IdmParams> by_driver(spec_.n_drivers);
    for (std::size_t d = 0; d < spec_.n_drivers; ++d) {
        by_driver[d] = realize_params(spec_, state, d);
        if (!params_valid(by_driver[d])) return kNegInf;
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < data_->instances.size(); ++i) {
        const CfInstance& inst = data_->instances[i];
        const IdmParams& p = by_driver[driver_of_[i]];
        const double sd = sigma_[i];
        const double norm_const = -0.5 * kLogTwoPi - std::log(sd);
        const double inv_var = 1.0 / (sd * sd);
        for (std::size_t t = 0; t < inst.size(); ++t) {
            const double pred =
                predict_accel_t(p, inst.v[t], inst.dv[t], inst.s[t]);
            const double r = inst.a_obs[t] - pred;
            ll += norm_const - 0.5 * r * r * inv_var;
        }
    }
    return ll;
}

double IdmModel::log_joint(const LatentState& state) const {
    const double ll = log_likelihood(state);
    if (ll == kNegInf) return kNegInf;
    return log_prior(state) + ll;
}

std::vector<double> IdmModel::grad_log_joint(const LatentState& state) const {
    const int k = ModelSpec::k;
    const double sp2 = spec_.prior_sigma * spec_.prior_sigma;
    std::vector<double> grad(spec_.latent_dim(), 0.0);

    // Likelihood gradients with respect to each driver's realized 7
    // parameters, via dual-number evaluation of the model equations.
    std::vector<IdmParamsT<Dual<kIdmParamCount>>> dual_params(spec_.n_drivers);
    for (std::size_t d = 0; d < spec_.n_drivers; ++d) {
        const IdmParams p = realize_params(spec_, state, d);
        if (!params_valid(p))
            throw std::domain_error(
                "grad_log_joint: latent state has zero posterior density");
        for (int j = 0; j < k; ++j)
            dual_params[d][j] = Dual<kIdmParamCount>::variable(p[j], j);
    }

    std::vector<std::array<double, kIdmParamCount>> dldp(
        spec_.n_drivers, std::array<double, kIdmParamCount>{});
    for (std::size_t i = 0; i < data_->instances.size(); ++i) {
        const CfInstance& inst = data_->instances[i];
        const std::size_t d = driver_of_[i];
        const double inv_var = 1.0 / (sigma_[i] * sigma_[i]);
        for (std::size_t t = 0; t < inst.size(); ++t) {
            const auto pred = predict_accel_t(
                dual_params[d], Dual<kIdmParamCount>(inst.v[t]),
                Dual<kIdmParamCount>(inst.dv[t]),
                Dual<kIdmParamCount>(inst.s[t]));
            const double w = (inst.a_obs[t] - pred.val) * inv_var;
            for (int j = 0; j < k; ++j) dldp[d][j] += w * pred.d[j];
        }
    }

    // Chain rule from realized parameters back to the latent layout, then
    // add the analytic prior gradient.
    switch (spec_.formulation) {
        case Formulation::Pooled:
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < k; ++j) grad[j] += dldp[d][j];
            for (int j = 0; j < k; ++j)
                grad[j] -= (state.theta[j] - spec_.prior_mean[j]) / sp2;
            break;
        case Formulation::Individual:
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < k; ++j) {
                    const std::size_t idx = d * k + j;
                    grad[idx] = dldp[d][j] -
                                (state.theta[idx] - spec_.prior_mean[j]) / sp2;
                }
            break;
        case Formulation::Hierarchical:
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < k; ++j) {
                    const double sraw = state.theta[spec_.sigma_raw_index(j)];
                    const double norm = state.theta[spec_.norm_index(d, j)];
                    const double g = dldp[d][j];
                    grad[spec_.mu_index(j)] += g;
                    grad[spec_.norm_index(d, j)] += g * softplus(sraw);
                    grad[spec_.sigma_raw_index(j)] += g * sigmoid(sraw) * norm;
                }
            for (std::size_t d = 0; d < spec_.n_drivers; ++d)
                for (int j = 0; j < k; ++j)
                    grad[spec_.norm_index(d, j)] -=
                        state.theta[spec_.norm_index(d, j)];
            for (int j = 0; j < k; ++j) {
                grad[spec_.mu_index(j)] -=
                    (state.theta[spec_.mu_index(j)] - spec_.prior_mean[j]) / sp2;
                grad[spec_.sigma_raw_index(j)] -=
                    state.theta[spec_.sigma_raw_index(j)] / sp2;
            }
            break;
    }
    return grad;
}

} // namespace cfcal
