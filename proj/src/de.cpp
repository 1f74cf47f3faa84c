#include "cfcal/de.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cfcal/metrics.hpp"

namespace cfcal {

ParamBounds default_bounds() {
    return ParamBounds{{{0.5, 30.0},   // v0
                        {0.0, 5.0},    // T
                        {0.05, 5.0},   // a
                        {0.05, 5.0},   // b
                        {0.5, 10.0},   // delta
                        {0.0, 10.0},   // s0
                        {0.0, 10.0}}}; // s1
}

void DeConfig::validate() const {
    if (population_size < 4)
        throw ConfigError("population_size must be at least 4");
    if (n_generations < 0)
        throw ConfigError("n_generations must be nonnegative");
    if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0))
        throw ConfigError("crossover_prob must lie in [0, 1]");
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    for (int j = 0; j < kIdmParamCount; ++j) {
        const auto& [lo, hi] = bounds[j];
        if (!(lo < hi))
            throw ConfigError(std::string("bounds for ") + kIdmParamNames[j] +
                              ": lo must be < hi");
    }
}

namespace {

// Calibration-only bound requirement; generic objectives (benchmarks) may
// legitimately use boxes that are not valid IDM parameters.
void require_valid_lower_bounds(const ParamBounds& bounds) {
    for (int j = 0; j < kIdmParamCount; ++j) {
        IdmParams corner = literature_params();
        corner[j] = bounds[j].first;
        if (!params_valid(corner))
            throw ConfigError(std::string("lower bound for ") +
                              kIdmParamNames[j] + " violates validity");
    }
}

} // namespace

double fitness(const IdmParams& params, const Dataset& data, double lambda) {
    if (!params_valid(params))
        return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& inst : data.instances)
        sum += rmse(predict_instance(params, inst), inst.a_obs);
    const double avg = sum / static_cast<double>(data.n_instances());
    const IdmParams lit = literature_params();
    double dist2 = 0.0;
    for (int j = 0; j < kIdmParamCount; ++j)
        dist2 += (params[j] - lit[j]) * (params[j] - lit[j]);
    return avg + lambda * std::sqrt(dist2);
}

void de_generation(Rng& rng, std::vector<Candidate>& population,
                   const DeConfig& config, const DeObjective& objective) {
    const int n = static_cast<int>(population.size());
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_int_distribution<int> pick_coord(0, kIdmParamCount - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int i = 0; i < n; ++i) {
        int r1, r2, r3;
        do { r1 = pick(rng); } while (r1 == i);
        do { r2 = pick(rng); } while (r2 == i || r2 == r1);
        do { r3 = pick(rng); } while (r3 == i || r3 == r1 || r3 == r2);

        const int forced = pick_coord(rng);
        IdmParams trial = population[i].params;
        for (int j = 0; j < kIdmParamCount; ++j) {
            if (j == forced || u(rng) < config.crossover_prob) {
                const double mutant =
                    population[r1].params[j] +
                    config.differential_weight *
                        (population[r2].params[j] - population[r3].params[j]);
                trial[j] = std::clamp(mutant, config.bounds[j].first,
                                      config.bounds[j].second);
            }
        }
        const double f = objective(trial);
        if (f <= population[i].fitness) {
            population[i].params = trial;
            population[i].fitness = f;
        }
    }
}

void de_generation(Rng& rng, std::vector<Candidate>& population,
                   const DeConfig& config, const Dataset& data) {
    de_generation(rng, population, config, [&](const IdmParams& p) {
        return fitness(p, data, config.lambda);
    });
}

DeResult run_de(const DeConfig& config, const DeObjective& objective) {
    config.validate();

    Rng rng = make_rng(config.seed, 0xde);
    std::vector<Candidate> population(
        static_cast<std::size_t>(config.population_size));
    for (auto& cand : population) {
        for (int j = 0; j < kIdmParamCount; ++j) {
            std::uniform_real_distribution<double> u(config.bounds[j].first,
                                                     config.bounds[j].second);
            cand.params[j] = u(rng);
        }
        cand.fitness = objective(cand.params);
    }

    DeResult result;
    result.best = *std::min_element(
        population.begin(), population.end(),
        [](const Candidate& a, const Candidate& b) { return a.fitness < b.fitness; });
    result.history.reserve(static_cast<std::size_t>(config.n_generations));
    for (int gen = 0; gen < config.n_generations; ++gen) {
        de_generation(rng, population, config, objective);
        for (const auto& cand : population)
            if (cand.fitness < result.best.fitness) result.best = cand;
        result.history.push_back(result.best.fitness);
    }
    result.final_population = std::move(population);
    return result;
}

DeResult run_de(const DeConfig& config, const Dataset& data) {
    if (data.instances.empty()) throw DataError("run_de: empty dataset");
    require_valid_lower_bounds(config.bounds);
    return run_de(config, [&](const IdmParams& p) {
        return fitness(p, data, config.lambda);
    });
}

std::vector<double> GridRange::values() const {
    if (!(step > 0.0)) throw ConfigError("grid step must be positive");
    if (hi < lo) throw ConfigError("grid range: hi must be >= lo");
    std::vector<double> out;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(lo + i * step);
    return out;
}

GridRange reference_cr_range() { return {0.1, 0.9, 0.2}; }
GridRange reference_f_range() { return {0.1, 1.9, 0.2}; }
GridRange reference_lambda_range() { return {0.0, 0.0001, 0.0000025}; }

GridResult grid_search(const Dataset& data, const GridRange& cr_range,
                       const GridRange& f_range,
                       const GridRange& lambda_range,
                       const DeConfig& de_base_config) {
    const auto crs = cr_range.values();
    const auto fs = f_range.values();
    const auto lambdas = lambda_range.values();
    if (crs.empty() || fs.empty() || lambdas.empty())
        throw ConfigError("grid_search: empty grid");

    GridResult result;
    result.rows.reserve(crs.size() * fs.size() * lambdas.size());
    for (double cr : crs) {
        for (double f : fs) {
            for (double lambda : lambdas) {
                DeConfig config = de_base_config;
                config.crossover_prob = cr;
                config.differential_weight = f;
                config.lambda = lambda;
                const DeResult de = run_de(config, data);

                // Scored without the regularization term so lambda cannot
                // game the comparison.
                GridRow row;
                row.crossover_prob = cr;
                row.differential_weight = f;
                row.lambda = lambda;
                row.best_params = de.best.params;
                row.best_rmse = fitness(de.best.params, data, 0.0);
                double pop_sum = 0.0;
                for (const auto& cand : de.final_population)
                    pop_sum += fitness(cand.params, data, 0.0);
                row.pop_avg_rmse =
                    pop_sum / static_cast<double>(de.final_population.size());
                result.rows.push_back(row);
            }
        }
    }

    result.best_row = 0;
    for (std::size_t i = 1; i < result.rows.size(); ++i)
        if (result.rows[i].best_rmse < result.rows[result.best_row].best_rmse)
            result.best_row = i;
    return result;
}

} // namespace cfcal
