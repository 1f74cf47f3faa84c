#ifndef CFCAL_SYNTH_HPP
#define CFCAL_SYNTH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cfcal/idm.hpp"
#include "cfcal/trajectory.hpp"

namespace cfcal {

using DriverParams = std::vector<std::pair<std::string, IdmParams>>;

struct SyntheticSpec {
    DriverParams true_params;                        // one entry per driver
    std::vector<std::vector<double>> leader_profiles; // m/s; empty = auto
    double noise_std = 0.1;        // observation noise on a_obs, m/s^2
    int n_instances_per_driver = 3;
    int n_steps = 80;              // profile length when auto-generating
    double dt = 0.1;
    std::uint64_t seed = 0;
};

struct SyntheticResult {
    Dataset data;
    DriverParams truth;
};

/// Forward-simulate follower trajectories for each driver under its true
/// parameters and add Gaussian observation noise to a_obs. Deterministic
/// given the seed. When leader_profiles is empty, varied speed profiles are
/// generated per instance from the seed.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

/// Heterogeneous per-driver parameters drawn around the literature values
/// (relative Gaussian jitter, clipped to validity). s1 stays at zero since
/// its literature value is zero.
DriverParams sample_params_around_literature(int n_drivers, double rel_scale,
                                             std::uint64_t seed);

/// Gap at which predict_accel vanishes for steady following at speed v
/// (root of the acceleration equation in s, closed form).
double equilibrium_gap(const IdmParams& p, double v);

} // namespace cfcal

#endif
