#ifndef CFCAL_IDM_HPP
#define CFCAL_IDM_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cfcal/dual.hpp"
#include "cfcal/trajectory.hpp"

namespace cfcal {

inline constexpr int kIdmParamCount = 7;

inline constexpr std::array<const char*, kIdmParamCount> kIdmParamNames = {
    "v0", "T", "a", "b", "delta", "s0", "s1"};

/// Intelligent Driver Model parameters, in canonical order
/// {v0, T, a, b, delta, s0, s1}. Scalar is double for plain evaluation or a
/// Dual<N> when propagating derivatives through the model equations.
template <typename Scalar = double>
struct IdmParamsT {
    Scalar v0 = 6.5;     // desired velocity, m/s
    Scalar T = 1.6;      // safe time headway, s
    Scalar a = 0.73;     // maximum acceleration, m/s^2
    Scalar b = 1.67;     // comfortable deceleration, m/s^2
    Scalar delta = 4.0;  // acceleration exponent
    Scalar s0 = 2.0;     // jam distance, m
    Scalar s1 = 0.0;     // second jam-distance term, m

    Scalar& operator[](std::size_t i) { return (&v0)[i]; }
    const Scalar& operator[](std::size_t i) const { return (&v0)[i]; }
};

using IdmParams = IdmParamsT<double>;

/// The Treiber et al. literature defaults {6.5, 1.6, .73, 1.67, 4., 2., 0.},
/// used as prior center, regularization anchor, and baseline.
inline IdmParams literature_params() { return IdmParams{}; }

/// Empty string when valid, else the name of the violated constraint.
template <typename Scalar>
std::string check_params(const IdmParamsT<Scalar>& p) {
    if (!(value_of(p.v0) > 0.0)) return "v0 > 0";
    if (!(value_of(p.T) >= 0.0)) return "T >= 0";
    if (!(value_of(p.a) > 0.0)) return "a > 0";
    if (!(value_of(p.b) > 0.0)) return "b > 0";
    if (!(value_of(p.delta) > 0.0)) return "delta > 0";
    if (!(value_of(p.s0) >= 0.0)) return "s0 >= 0";
    if (!(value_of(p.s1) >= 0.0)) return "s1 >= 0";
    return {};
}

template <typename Scalar>
bool params_valid(const IdmParamsT<Scalar>& p) {
    return check_params(p).empty();
}

/// Throws ConfigError naming the violated invariant.
void require_valid_params(const IdmParams& p);

struct KinematicState {
    double v = 0.0;   // follower speed, m/s
    double dv = 0.0;  // closing speed (follower - leader), m/s
    double s = 1.0;   // gap, m
};

/// Desired gap s*(v, dv) = s0 + s1*sqrt(v/v0) + T*v + v*dv / (2*sqrt(a*b)).
/// Not clamped at zero; strongly negative dv can make it negative and the
/// squared term in the acceleration still contributes.
template <typename Scalar>
Scalar desired_gap_t(const IdmParamsT<Scalar>& p, Scalar v, Scalar dv) {
    using cfcal::sqrt;
    using std::sqrt;
    // v = 0 short-circuit keeps dual-number sqrt away from its singularity;
    // all parameter partials of the skipped term vanish there anyway.
    Scalar out = p.s0 + p.T * v + v * dv / (Scalar(2.0) * sqrt(p.a * p.b));
    if (value_of(v) > 0.0) out += p.s1 * sqrt(v / p.v0);
    return out;
}

/// IDM acceleration a*[1 - (v/v0)^delta - (s*/s)^2].
template <typename Scalar>
Scalar predict_accel_t(const IdmParamsT<Scalar>& p, Scalar v, Scalar dv,
                       Scalar s) {
    using cfcal::pow;
    using std::pow;
    const Scalar sstar = desired_gap_t(p, v, dv);
    const Scalar ratio = sstar / s;
    Scalar out = p.a * (Scalar(1.0) - ratio * ratio);
    if (value_of(v) > 0.0) out -= p.a * pow(v / p.v0, p.delta);
    return out;
}

/// Validated double entry points.
double desired_gap(const IdmParams& p, double v, double dv);
double predict_accel(const IdmParams& p, const KinematicState& state);

/// One predicted acceleration per observed sample; predictions use the
/// observed states directly, with no temporal coupling between steps.
std::vector<double> predict_instance(const IdmParams& p, const CfInstance& inst);

/// Forward simulation under a given leader speed profile with semi-implicit
/// Euler updates; follower speed is floored at zero (no reversing). Throws
/// DataError naming the step if the gap collapses.
CfInstance simulate_forward(const IdmParams& p,
                            const std::vector<double>& leader_speed,
                            const KinematicState& init, double dt);

} // namespace cfcal

#endif
