#include "cfcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cfcal/rng.hpp"

namespace cfcal {

double equilibrium_gap(const IdmParams& p, double v) {
    require_valid_params(p);
    const double free_term = 1.0 - std::pow(v / p.v0, p.delta);
    if (!(free_term > 0.0))
        throw ConfigError("equilibrium_gap: speed at or above desired velocity");
    return desired_gap_t(p, v, 0.0) / std::sqrt(free_term);
}

namespace {

// Smoothly varying leader speed: base cruise with two incommensurate
// sinusoids, clipped away from zero.
std::vector<double> make_leader_profile(Rng& rng, int n_steps, double dt) {
    // Stop-and-go excursions spanning standstill to near-desired velocity.
    // Dwelling at v = 0 reads off the jam distance alone, the low-speed
    // ramps separate the sqrt(v) term, and mid-speed cruising pins the
    // headway term; without all three regimes the constant, sqrt(v), and
    // linear-v contributions to the desired gap are nearly collinear.
    // Peaks around 8-9 m/s let followers reach their own free-flow speed
    // (identifying v0 and delta); the clamped troughs give genuine stops.
    std::uniform_real_distribution<double> ubase(3.2, 4.0);
    std::uniform_real_distribution<double> uamp(3.8, 4.6);
    std::uniform_real_distribution<double> uphase(0.0, 6.28318530717958647);
    std::uniform_real_distribution<double> uperiod(8.0, 14.0);
    const double base = ubase(rng);
    const double amp1 = uamp(rng);
    const double amp2 = 0.5 * uamp(rng);
    const double ph1 = uphase(rng);
    const double ph2 = uphase(rng);
    const double w1 = 6.28318530717958647 / uperiod(rng);
    const double w2 = 6.28318530717958647 / uperiod(rng) * 2.7;
    std::vector<double> out(static_cast<std::size_t>(n_steps));
    for (int t = 0; t < n_steps; ++t) {
        const double time = t * dt;
        // Clamping at zero turns the lower sine lobes into genuine stops.
        out[static_cast<std::size_t>(t)] = std::max(
            0.0, base + amp1 * std::sin(w1 * time + ph1) +
                     0.4 * amp2 * std::sin(w2 * time + ph2));
    }
    return out;
}

} // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
    if (!(spec.dt > 0.0)) throw ConfigError("generate_synthetic: dt must be positive");
    if (spec.noise_std < 0.0)
        throw ConfigError("generate_synthetic: noise_std must be nonnegative");
    if (spec.n_instances_per_driver < 1)
        throw ConfigError("generate_synthetic: need at least one instance per driver");
    if (spec.true_params.empty())
        throw ConfigError("generate_synthetic: no drivers given");
    for (const auto& [id, p] : spec.true_params) {
        (void)id;
        require_valid_params(p);
    }

    SyntheticResult result;
    result.truth = spec.true_params;
    for (std::size_t d = 0; d < spec.true_params.size(); ++d) {
        const auto& [driver_id, params] = spec.true_params[d];
        result.data.drivers.push_back(driver_id);
        for (int j = 0; j < spec.n_instances_per_driver; ++j) {
            const std::uint64_t stream =
                d * static_cast<std::uint64_t>(spec.n_instances_per_driver) + j;
            Rng rng = make_rng(spec.seed, stream);

            std::vector<double> leader;
            if (!spec.leader_profiles.empty()) {
                leader = spec.leader_profiles[(d + j) % spec.leader_profiles.size()];
            } else {
                leader = make_leader_profile(rng, spec.n_steps, spec.dt);
            }
            if (leader.size() < 2)
                throw ConfigError("generate_synthetic: leader profile shorter than 2");

            KinematicState init;
            // Start at (or safely below) the driver's desired velocity so an
            // equilibrium gap exists even for slow drivers.
            init.v = std::min(leader.front(), 0.8 * params.v0);
            init.s = equilibrium_gap(params, init.v);

            CfInstance inst = simulate_forward(params, leader, init, spec.dt);
            inst.driver_id = driver_id;
            inst.instance_id = "i" + std::to_string(j);

            if (spec.noise_std > 0.0) {
                std::normal_distribution<double> noise(0.0, spec.noise_std);
                for (double& a : inst.a_obs) a += noise(rng);
            }
            validate_instance(inst);
            result.data.instances.push_back(std::move(inst));
        }
    }
    return result;
}

DriverParams sample_params_around_literature(int n_drivers, double rel_scale,
                                             std::uint64_t seed) {
    if (n_drivers < 1) throw ConfigError("need at least one driver");
    if (rel_scale < 0.0) throw ConfigError("rel_scale must be nonnegative");
    DriverParams out;
    const IdmParams lit = literature_params();
    Rng rng = make_rng(seed, 0x5eed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int d = 0; d < n_drivers; ++d) {
        IdmParams p = lit;
        for (int j = 0; j < kIdmParamCount; ++j) {
            if (j == 6) continue; // s1 literature value is 0; keep it there
            const double scale = rel_scale * std::abs(lit[j]);
            p[j] = std::max(0.05 * std::abs(lit[j]),
                            lit[j] + scale * unit(rng));
        }
        out.emplace_back("d" + std::to_string(d + 1), p);
    }
    return out;
}

} // namespace cfcal
