#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "cfcal/dual.hpp"
#include "cfcal/idm.hpp"
#include "cfcal/rng.hpp"
#include "cfcal/synth.hpp"
#include "cfcal/trajectory.hpp"

using namespace cfcal;

namespace {

// Independent re-derivation of the model equations, written directly from the
// algebra with no shared code, used as an oracle for the library versions.
double oracle_sstar(const IdmParams& p, double v, double dv) {
    double out = p.s0 + p.T * v + v * dv / (2.0 * std::sqrt(p.a * p.b));
    if (v > 0.0) out += p.s1 * std::sqrt(v / p.v0);
    return out;
}

double oracle_accel(const IdmParams& p, double v, double dv, double s) {
    const double r = oracle_sstar(p, v, dv) / s;
    double out = p.a * (1.0 - r * r);
    if (v > 0.0) out -= p.a * std::pow(v / p.v0, p.delta);
    return out;
}

IdmParams random_valid_params(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    IdmParams p;
    p.v0 = 2.0 + 20.0 * u(rng);
    p.T = 3.0 * u(rng);
    p.a = 0.2 + 2.0 * u(rng);
    p.b = 0.2 + 2.0 * u(rng);
    p.delta = 0.5 + 6.0 * u(rng);
    p.s0 = 4.0 * u(rng);
    p.s1 = 4.0 * u(rng);
    return p;
}

} // namespace

TEST_CASE("desired gap at literature parameters matches frozen value") {
    const IdmParams p = literature_params();
    // s* = 2 + 1.6*5 + 5*0.5/(2*sqrt(0.73*1.67)); s1 term vanishes.
    CHECK(desired_gap(p, 5.0, 0.5) ==
          doctest::Approx(11.132114485785168).epsilon(1e-12));
    // At standstill only the jam distance remains.
    CHECK(desired_gap(p, 0.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("predicted acceleration matches frozen values") {
    const IdmParams p = literature_params();
    CHECK(predict_accel(p, {5.0, 0.5, 20.0}) ==
          doctest::Approx(0.24824545786113755).epsilon(1e-12));

    IdmParams q;
    q.v0 = 15.0; q.T = 1.2; q.a = 1.0; q.b = 2.0;
    q.delta = 4.0; q.s0 = 2.0; q.s1 = 3.0;
    CHECK(desired_gap(q, 7.3, -1.1) ==
          doctest::Approx(10.013811227181646).epsilon(1e-12));
    CHECK(predict_accel(q, {7.3, -1.1, 18.0}) ==
          doctest::Approx(0.6344096002048482).epsilon(1e-12));
}

TEST_CASE("library model agrees with independent oracle at random states") {
    Rng rng = make_rng(41);
    std::uniform_real_distribution<double> uv(0.0, 12.0);
    std::uniform_real_distribution<double> udv(-4.0, 4.0);
    std::uniform_real_distribution<double> us(1.0, 60.0);
    for (int i = 0; i < 300; ++i) {
        const IdmParams p = random_valid_params(rng);
        const double v = uv(rng), dv = udv(rng), s = us(rng);
        CHECK(desired_gap(p, v, dv) ==
              doctest::Approx(oracle_sstar(p, v, dv)).epsilon(1e-12));
        CHECK(predict_accel(p, {v, dv, s}) ==
              doctest::Approx(oracle_accel(p, v, dv, s)).epsilon(1e-12));
    }
}

TEST_CASE("qualitative properties of the acceleration") {
    const IdmParams p = literature_params();

    SUBCASE("free road, below desired speed: accelerates, bounded by a") {
        const double acc = predict_accel(p, {3.0, 0.0, 1e9});
        CHECK(acc > 0.0);
        CHECK(acc < p.a);
    }
    SUBCASE("at desired speed on free road the drive term vanishes") {
        CHECK(predict_accel(p, {p.v0, 0.0, 1e9}) ==
              doctest::Approx(0.0).epsilon(1e-6));
    }
    SUBCASE("acceleration decreases as the gap shrinks") {
        double prev = predict_accel(p, {5.0, 0.0, 60.0});
        for (double s : {30.0, 15.0, 8.0, 4.0}) {
            const double cur = predict_accel(p, {5.0, 0.0, s});
            CHECK(cur < prev);
            prev = cur;
        }
    }
    SUBCASE("closing on the leader brakes harder than opening") {
        CHECK(predict_accel(p, {5.0, 2.0, 10.0}) <
              predict_accel(p, {5.0, -2.0, 10.0}));
    }
}

TEST_CASE("parameter validity checks") {
    IdmParams p = literature_params();
    CHECK(params_valid(p));
    p.v0 = 0.0;
    CHECK_FALSE(params_valid(p));
    CHECK(check_params(p) == "v0 > 0");
    p = literature_params();
    p.T = -0.1;
    CHECK(check_params(p) == "T >= 0");
    p = literature_params();
    p.b = -1.0;
    CHECK_THROWS_AS(require_valid_params(p), ConfigError);
    // Boundary values that are allowed.
    p = literature_params();
    p.T = 0.0; p.s0 = 0.0; p.s1 = 0.0;
    CHECK(params_valid(p));
}

TEST_CASE("parameter indexing matches member order") {
    IdmParams p;
    for (int j = 0; j < kIdmParamCount; ++j) p[j] = 10.0 + j;
    CHECK(p.v0 == 10.0);
    CHECK(p.T == 11.0);
    CHECK(p.a == 12.0);
    CHECK(p.b == 13.0);
    CHECK(p.delta == 14.0);
    CHECK(p.s0 == 15.0);
    CHECK(p.s1 == 16.0);
}

TEST_CASE("dual-number parameter gradient matches central differences") {
    Rng rng = make_rng(42);
    std::uniform_real_distribution<double> uv(0.5, 10.0);
    std::uniform_real_distribution<double> udv(-3.0, 3.0);
    std::uniform_real_distribution<double> us(2.0, 50.0);
    for (int trial = 0; trial < 40; ++trial) {
        const IdmParams p = random_valid_params(rng);
        const double v = uv(rng), dv = udv(rng), s = us(rng);

        IdmParamsT<Dual<7>> pd;
        for (int j = 0; j < kIdmParamCount; ++j)
            pd[j] = Dual<7>::variable(p[j], j);
        const Dual<7> out = predict_accel_t(pd, Dual<7>(v), Dual<7>(dv),
                                            Dual<7>(s));
        CHECK(out.val == doctest::Approx(predict_accel(p, {v, dv, s})));

        for (int j = 0; j < kIdmParamCount; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
            IdmParams lo = p, hi = p;
            lo[j] -= h;
            hi[j] += h;
            const double fd = (predict_accel(hi, {v, dv, s}) -
                               predict_accel(lo, {v, dv, s})) / (2.0 * h);
            CHECK(out.d[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("predict_instance maps states pointwise") {
    CfInstance inst;
    inst.driver_id = "d";
    inst.instance_id = "i";
    inst.dt = 0.1;
    inst.v = {2.0, 3.0, 4.0};
    inst.dv = {0.0, 0.5, -0.5};
    inst.s = {10.0, 12.0, 9.0};
    inst.a_obs = {0.0, 0.0, 0.0};
    const IdmParams p = literature_params();
    const std::vector<double> pred = predict_instance(p, inst);
    REQUIRE(pred.size() == 3);
    for (int t = 0; t < 3; ++t)
        CHECK(pred[t] == doctest::Approx(
                  predict_accel(p, {inst.v[t], inst.dv[t], inst.s[t]})));
}

TEST_CASE("equilibrium gap zeroes the acceleration") {
    const IdmParams p = literature_params();
    for (double v : {1.0, 2.5, 4.0, 5.5}) {
        const double se = equilibrium_gap(p, v);
        CHECK(predict_accel(p, {v, 0.0, se}) ==
              doctest::Approx(0.0).epsilon(1e-10));
    }
    CHECK(equilibrium_gap(p, 4.0) ==
          doctest::Approx(9.075976874319148).epsilon(1e-12));
}

TEST_CASE("forward simulation holds an equilibrium state") {
    const IdmParams p = literature_params();
    const double v = 4.0;
    const std::vector<double> leader(200, v);
    KinematicState init;
    init.v = v;
    init.dv = 0.0;
    init.s = equilibrium_gap(p, v);
    const CfInstance inst = simulate_forward(p, leader, init, 0.1);
    REQUIRE(inst.v.size() == leader.size());
    for (std::size_t t = 0; t < inst.v.size(); ++t) {
        CHECK(inst.v[t] == doctest::Approx(v).epsilon(1e-9));
        CHECK(inst.s[t] == doctest::Approx(init.s).epsilon(1e-9));
    }
}

TEST_CASE("forward simulation converges toward equilibrium") {
    const IdmParams p = literature_params();
    const double vl = 4.0;
    const std::vector<double> leader(3000, vl);
    KinematicState init;
    init.v = 1.0;
    init.dv = init.v - vl;
    init.s = 30.0;
    const CfInstance inst = simulate_forward(p, leader, init, 0.1);
    CHECK(inst.v.back() == doctest::Approx(vl).epsilon(1e-3));
    CHECK(inst.s.back() ==
          doctest::Approx(equilibrium_gap(p, vl)).epsilon(1e-2));
}

TEST_CASE("simulated kinematics are internally consistent") {
    const IdmParams p = literature_params();
    std::vector<double> leader(100);
    for (std::size_t t = 0; t < leader.size(); ++t)
        leader[t] = 4.0 + std::sin(0.1 * static_cast<double>(t));
    KinematicState init;
    init.v = 3.0;
    init.dv = init.v - leader.front();
    init.s = 12.0;
    const double dt = 0.1;
    const CfInstance inst = simulate_forward(p, leader, init, dt);
    for (std::size_t t = 0; t + 1 < inst.v.size(); ++t) {
        // Semi-implicit Euler: v' = max(0, v + a*dt), s' = s - (v' - vl')*dt.
        const double acc = predict_accel(p, {inst.v[t], inst.dv[t], inst.s[t]});
        const double vn = std::max(0.0, inst.v[t] + acc * dt);
        CHECK(inst.v[t + 1] == doctest::Approx(vn).epsilon(1e-12));
        CHECK(inst.s[t + 1] ==
              doctest::Approx(inst.s[t] - (vn - leader[t + 1]) * dt)
                  .epsilon(1e-12));
        CHECK(inst.dv[t + 1] ==
              doctest::Approx(inst.v[t + 1] - leader[t + 1]).epsilon(1e-12));
        CHECK(inst.a_obs[t] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("speed never goes negative when the leader stops") {
    const IdmParams p = literature_params();
    std::vector<double> leader(400, 0.0);
    KinematicState init;
    init.v = 5.0;
    init.dv = 5.0;
    init.s = 100.0;
    const CfInstance inst = simulate_forward(p, leader, init, 0.1);
    for (double v : inst.v) CHECK(v >= 0.0);
    // It should come to rest somewhere around the jam distance, not collide.
    CHECK(inst.v.back() == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(inst.s.back() > 0.0);
}

TEST_CASE("gap collapse raises DataError naming the step") {
    // No interaction terms at all: the follower ignores the stopped leader
    // and drives straight into it.
    IdmParams p = literature_params();
    p.s0 = 0.0;
    p.s1 = 0.0;
    p.T = 0.0;
    p.b = 1e6;  // kills the v*dv desired-gap contribution
    std::vector<double> leader(200, 0.0);
    KinematicState init;
    init.v = 5.0;
    init.dv = 5.0;
    init.s = 10.0;
    CHECK_THROWS_AS(simulate_forward(p, leader, init, 0.1), DataError);
    try {
        simulate_forward(p, leader, init, 0.1);
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("gap collapsed") !=
              std::string::npos);
    }
}
