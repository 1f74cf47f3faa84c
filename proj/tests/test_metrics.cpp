#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "cfcal/metrics.hpp"
#include "cfcal/rng.hpp"
#include "cfcal/synth.hpp"
#include "cfcal/trajectory.hpp"

using namespace cfcal;

namespace {

// Numerical-integration oracle for the Gaussian KL divergence:
// KL = \int p(x) ln(p(x)/q(x)) dx over a wide truncation, Simpson's rule.
double kl_by_quadrature(double mu1, double sd1, double mu2, double sd2) {
    const double lo = mu1 - 12.0 * sd1;
    const double hi = mu1 + 12.0 * sd1;
    const int n = 20000;  // even
    const double h = (hi - lo) / n;
    auto logpdf = [](double x, double mu, double sd) {
        const double z = (x - mu) / sd;
        return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
    };
    auto f = [&](double x) {
        const double lp = logpdf(x, mu1, sd1);
        return std::exp(lp) * (lp - logpdf(x, mu2, sd2));
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i)
        acc += f(lo + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace

TEST_CASE("rmse hand values") {
    CHECK(rmse({3.0, 4.0}, {0.0, 0.0}) ==
          doctest::Approx(std::sqrt(25.0 / 2.0)).epsilon(1e-12));
    CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
    CHECK(rmse({2.0}, {-1.0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(rmse({}, {}), ConfigError);
}

TEST_CASE("gaussian_kl closed-form hand values") {
    // Unit-variance mean shift: KL = (mu1-mu2)^2 / 2.
    CHECK(gaussian_kl(0.0, 1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // Wider into narrower: ln(1/2) + 4/2 - 1/2.
    CHECK(gaussian_kl(0.0, 2.0, 0.0, 1.0) ==
          doctest::Approx(0.8068528194400547).epsilon(1e-12));
    // Identical distributions.
    CHECK(gaussian_kl(0.3, 1.7, 0.3, 1.7) == doctest::Approx(0.0));
}

TEST_CASE("gaussian_kl matches numerical integration") {
    Rng rng = make_rng(90);
    std::uniform_real_distribution<double> um(-3.0, 3.0);
    std::uniform_real_distribution<double> us(0.3, 3.0);
    for (int i = 0; i < 20; ++i) {
        const double mu1 = um(rng), mu2 = um(rng);
        const double sd1 = us(rng), sd2 = us(rng);
        CHECK(gaussian_kl(mu1, sd1, mu2, sd2) ==
              doctest::Approx(kl_by_quadrature(mu1, sd1, mu2, sd2))
                  .epsilon(1e-6));
    }
    SUBCASE("KL is nonnegative and asymmetric") {
        CHECK(gaussian_kl(0.0, 1.0, 0.0, 2.0) >= 0.0);
        CHECK(gaussian_kl(0.0, 1.0, 0.0, 2.0) !=
              doctest::Approx(gaussian_kl(0.0, 2.0, 0.0, 1.0)));
    }
}

TEST_CASE("quantile midpoint rule hand values") {
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
    // h = q*n - 0.5 clamped to the ends.
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.0) == doctest::Approx(1.0));
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 1.0) == doctest::Approx(4.0));
    // n=5, q=0.25: h = 0.75 -> 1 + 0.75*(2-1) = 1.75.
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({7.0}, 0.5) == doctest::Approx(7.0));
}

TEST_CASE("summarize_samples against direct formulas") {
    const std::vector<double> xs = {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
    const SampleSummary s = summarize_samples(xs);
    CHECK(s.mean == doctest::Approx(5.0));
    // Sample (n-1) std of the classic example: sqrt(32/7).
    CHECK(s.stddev == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) {
        CHECK(s.quantiles[i] ==
              doctest::Approx(quantile(xs, kQuantileLevels[i])));
    }
}

TEST_CASE("summary statistics are permutation invariant") {
    Rng rng = make_rng(91);
    std::normal_distribution<double> g(1.0, 2.0);
    std::vector<double> xs(101);
    for (double& x : xs) x = g(rng);
    std::vector<double> ys = xs;
    std::shuffle(ys.begin(), ys.end(), rng);
    const SampleSummary a = summarize_samples(xs);
    const SampleSummary b = summarize_samples(ys);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(a.stddev == doctest::Approx(b.stddev).epsilon(1e-12));
    for (int i = 0; i < 5; ++i)
        CHECK(a.quantiles[i] == doctest::Approx(b.quantiles[i]));
}

TEST_CASE("histogram partitions the sample range") {
    const std::vector<double> xs = {0.0, 0.1, 0.5, 0.9, 1.0, 1.0, 0.2};
    const auto bins = histogram(xs, 4);
    REQUIRE(bins.size() == 4);
    CHECK(bins.front().lo == doctest::Approx(0.0));
    CHECK(bins.back().hi == doctest::Approx(1.0));
    std::size_t total = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        total += bins[i].count;
        if (i > 0) CHECK(bins[i].lo == doctest::Approx(bins[i - 1].hi));
    }
    CHECK(total == xs.size());

    SUBCASE("constant samples degrade gracefully") {
        const auto flat = histogram({3.0, 3.0, 3.0}, 5);
        std::size_t n = 0;
        for (const auto& b : flat) n += b.count;
        CHECK(n == 3);
    }
}

TEST_CASE("dataset_rmse and avg_kl on synthetic data") {
    SyntheticSpec spec;
    spec.true_params = sample_params_around_literature(3, 0.1, 5);
    spec.noise_std = 0.0;
    spec.seed = 5;
    const SyntheticResult syn = generate_synthetic(spec);

    std::map<std::string, IdmParams> truth;
    for (const auto& [id, p] : syn.truth) truth[id] = p;

    SUBCASE("true parameters on noiseless data score zero RMSE") {
        CHECK(dataset_rmse(truth, syn.data) ==
              doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("true parameters beat the literature baseline") {
        std::map<std::string, IdmParams> lit;
        for (const auto& [id, p] : truth) lit[id] = literature_params();
        CHECK(dataset_rmse(lit, syn.data) > dataset_rmse(truth, syn.data));
        CHECK(avg_kl(lit, syn.data) >= avg_kl(truth, syn.data));
    }
    SUBCASE("missing driver entry throws") {
        truth.erase(truth.begin());
        CHECK_THROWS_AS(dataset_rmse(truth, syn.data), DataError);
    }
    SUBCASE("avg_kl equals the hand-computed per-instance mean") {
        std::map<std::string, IdmParams> lit;
        for (const auto& [id, p] : truth) lit[id] = literature_params();
        double acc = 0.0;
        auto fit = [](const std::vector<double>& xs) {
            double m = 0.0;
            for (double x : xs) m += x;
            m /= xs.size();
            double ss = 0.0;
            for (double x : xs) ss += (x - m) * (x - m);
            return std::pair<double, double>{m, std::sqrt(ss / (xs.size() - 1))};
        };
        for (const auto& inst : syn.data.instances) {
            const auto [om, os] = fit(inst.a_obs);
            const auto [pm, psd] =
                fit(predict_instance(literature_params(), inst));
            acc += gaussian_kl(om, std::max(os, 0.01), pm,
                               std::max(psd, 0.01));
        }
        CHECK(avg_kl(lit, syn.data) ==
              doctest::Approx(acc / syn.data.instances.size()).epsilon(1e-12));
    }
}

TEST_CASE("report JSON round trip preserves every field") {
    CalibrationReport r;
    r.method = "bayes-hierarchical";
    r.prior_sigma = 10.0;
    r.rmse = 0.123456789012345;
    r.avg_kl = 0.5;
    r.seed = 424242;
    r.schedule_log = {1500, 3000};
    r.converged = true;
    DriverParamSummary d;
    d.driver_id = "d7";
    for (int j = 0; j < kIdmParamCount; ++j) {
        d.params[j].mean = j + 0.25;
        d.params[j].stddev = 0.5 * j;
        for (int q = 0; q < 5; ++q) d.params[j].quantiles[q] = j + 0.1 * q;
    }
    r.driver_summaries.push_back(d);

    const CalibrationReport back = report_from_json(report_to_json(r));
    CHECK(back.method == r.method);
    REQUIRE(back.prior_sigma.has_value());
    CHECK(*back.prior_sigma == doctest::Approx(10.0));
    CHECK_FALSE(back.de_config_echo.has_value());
    CHECK(back.rmse == doctest::Approx(r.rmse).epsilon(1e-15));
    CHECK(back.avg_kl == doctest::Approx(r.avg_kl));
    CHECK(back.seed == r.seed);
    CHECK(back.schedule_log == r.schedule_log);
    CHECK(back.converged == r.converged);
    REQUIRE(back.driver_summaries.size() == 1);
    CHECK(back.driver_summaries[0].driver_id == "d7");
    for (int j = 0; j < kIdmParamCount; ++j) {
        CHECK(back.driver_summaries[0].params[j].mean ==
              doctest::Approx(d.params[j].mean));
        CHECK(back.driver_summaries[0].params[j].stddev ==
              doctest::Approx(d.params[j].stddev));
    }
}

TEST_CASE("build_report_from_samples scores the posterior mean") {
    SyntheticSpec spec;
    spec.true_params = sample_params_around_literature(2, 0.05, 8);
    spec.noise_std = 0.05;
    spec.seed = 8;
    const SyntheticResult syn = generate_synthetic(spec);

    // Degenerate "posterior": every sample equals the truth, so the report
    // must match the point report under the true parameters.
    std::vector<std::vector<IdmParams>> samples;
    std::map<std::string, IdmParams> truth;
    for (const auto& id : syn.data.drivers) {
        for (const auto& [tid, p] : syn.truth)
            if (tid == id) {
                samples.push_back(std::vector<IdmParams>(10, p));
                truth[id] = p;
            }
    }
    const CalibrationReport a =
        build_report_from_samples("bayes-pooled", samples, syn.data);
    const CalibrationReport b = build_report("literature", truth, syn.data);
    CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-9));
    CHECK(a.avg_kl == doctest::Approx(b.avg_kl).epsilon(1e-9));
    REQUIRE(a.driver_summaries.size() == syn.data.drivers.size());
    for (std::size_t d = 0; d < a.driver_summaries.size(); ++d) {
        for (int j = 0; j < kIdmParamCount; ++j) {
            CHECK(a.driver_summaries[d].params[j].stddev ==
                  doctest::Approx(0.0));
        }
    }
}

TEST_CASE("CSV writers emit headers and well-formed rows") {
    CalibrationReport r;
    r.method = "de";
    r.rmse = 0.5;
    r.avg_kl = 0.25;
    std::ostringstream table;
    write_report_table_csv({r}, table);
    const std::string t = table.str();
    CHECK(t.find("method") != std::string::npos);
    CHECK(t.find("de") != std::string::npos);
    CHECK(std::count(t.begin(), t.end(), '\n') == 2);

    std::vector<std::vector<IdmParams>> samples(1);
    for (int i = 0; i < 50; ++i) {
        IdmParams p = literature_params();
        p.v0 = 5.0 + 0.1 * i;
        samples[0].push_back(p);
    }
    std::ostringstream hist;
    write_histograms_csv(samples, {"d0"}, 10, hist);
    const std::string h = hist.str();
    CHECK(h.find("driver_id") != std::string::npos);
    CHECK(h.find("v0") != std::string::npos);
    // 7 parameters x 10 bins + header.
    CHECK(std::count(h.begin(), h.end(), '\n') == 71);
}
