#include "cfcal/idm.hpp"

#include <algorithm>
#include <cmath>

namespace cfcal {

void require_valid_params(const IdmParams& p) {
    const std::string violated = check_params(p);
    if (!violated.empty())
        throw ConfigError("invalid IDM parameters: violated " + violated);
}

namespace {

void require_valid_state(const KinematicState& state) {
    if (!(state.s > 0.0))
        throw ConfigError("invalid kinematic state: gap must be positive");
    if (state.v < 0.0)
        throw ConfigError("invalid kinematic state: speed must be nonnegative");
}

} // namespace

double desired_gap(const IdmParams& p, double v, double dv) {
    require_valid_params(p);
    if (v < 0.0) throw ConfigError("desired_gap: speed must be nonnegative");
    return desired_gap_t(p, v, dv);
}

double predict_accel(const IdmParams& p, const KinematicState& state) {
    require_valid_params(p);
    require_valid_state(state);
    return predict_accel_t(p, state.v, state.dv, state.s);
}

std::vector<double> predict_instance(const IdmParams& p,
                                     const CfInstance& inst) {
    require_valid_params(p);
    std::vector<double> out(inst.size());
    for (std::size_t t = 0; t < inst.size(); ++t)
        out[t] = predict_accel_t(p, inst.v[t], inst.dv[t], inst.s[t]);
    return out;
}

CfInstance simulate_forward(const IdmParams& p,
                            const std::vector<double>& leader_speed,
                            const KinematicState& init, double dt) {
    require_valid_params(p);
    require_valid_state(init);
    if (!(dt > 0.0)) throw ConfigError("simulate_forward: dt must be positive");
    if (leader_speed.empty())
        throw ConfigError("simulate_forward: empty leader profile");

    CfInstance traj;
    traj.dt = dt;
    const std::size_t n = leader_speed.size();
    traj.v.reserve(n);
    traj.dv.reserve(n);
    traj.s.reserve(n);
    traj.a_obs.reserve(n);

    double v = init.v;
    double s = init.s;
    for (std::size_t t = 0; t < n; ++t) {
        const double dv = v - leader_speed[t];
        const double accel = predict_accel_t(p, v, dv, s);
        traj.v.push_back(v);
        traj.dv.push_back(dv);
        traj.s.push_back(s);
        traj.a_obs.push_back(accel);
        if (t + 1 == n) break;
        // Semi-implicit Euler: advance speed first, then the gap with it.
        v = std::max(0.0, v + accel * dt);
        s = s - (v - leader_speed[t + 1]) * dt;
        if (!(s > 0.0))
            throw DataError("simulate_forward: gap collapsed at step " +
                            std::to_string(t + 1));
    }
    return traj;
}

} // namespace cfcal
