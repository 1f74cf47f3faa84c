#ifndef CFCAL_DE_HPP
#define CFCAL_DE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cfcal/idm.hpp"
#include "cfcal/rng.hpp"
#include "cfcal/trajectory.hpp"

namespace cfcal {

using ParamBounds = std::array<std::pair<double, double>, kIdmParamCount>;

/// Box constraints wide enough for plausible IDM behavior while keeping
/// every corner a valid parameter vector.
ParamBounds default_bounds();

struct DeConfig {
    double differential_weight = 0.8;  // F
    double crossover_prob = 0.9;       // CR
    double lambda = 0.0;               // regularization weight
    int population_size = 28;
    int n_generations = 300;
    ParamBounds bounds = default_bounds();
    std::uint64_t seed = 0;

    void validate() const;
};

struct Candidate {
    IdmParams params;
    double fitness = 0.0;   // lower is better
};

/// Mean per-instance RMSE of the IDM predictions plus lambda times the
/// Euclidean distance from the literature parameter vector. Invalid
/// parameters score +infinity.
double fitness(const IdmParams& params, const Dataset& data, double lambda);

/// Arbitrary minimization objective over the 7-d parameter box (benchmark
/// functions, the calibration fitness, ...).
using DeObjective = std::function<double(const IdmParams&)>;

/// One rand/1/bin generation: mutation x_r1 + F*(x_r2 - x_r3), binomial
/// crossover with one forced coordinate, clipping to bounds, and greedy
/// selection. Population size is preserved.
void de_generation(Rng& rng, std::vector<Candidate>& population,
                   const DeConfig& config, const DeObjective& objective);
void de_generation(Rng& rng, std::vector<Candidate>& population,
                   const DeConfig& config, const Dataset& data);

struct DeResult {
    Candidate best;                        // best-ever candidate
    std::vector<double> history;           // best-ever fitness per generation
    std::vector<Candidate> final_population;
};

DeResult run_de(const DeConfig& config, const DeObjective& objective);
DeResult run_de(const DeConfig& config, const Dataset& data);

/// Inclusive lo..hi by step; values() materializes the grid axis.
struct GridRange {
    double lo = 0.0, hi = 0.0, step = 1.0;
    std::vector<double> values() const;
};

/// The reference sweep: CR 0.1..0.9 step 0.2, F 0.1..1.9 step 0.2,
/// lambda 0..1e-4 step 2.5e-6 (2050 cells).
GridRange reference_cr_range();
GridRange reference_f_range();
GridRange reference_lambda_range();

struct GridRow {
    double crossover_prob, differential_weight, lambda;
    double best_rmse;       // unregularized mean RMSE of the best candidate
    double pop_avg_rmse;    // unregularized mean RMSE over the final population
    IdmParams best_params;
};

struct GridResult {
    std::vector<GridRow> rows;
    std::size_t best_row = 0;   // argmin by best_rmse
};

/// Exhaustive sweep; every cell runs DE with the same seed for
/// comparability. Scored by the best candidate's unregularized RMSE.
GridResult grid_search(const Dataset& data, const GridRange& cr_range,
                       const GridRange& f_range,
                       const GridRange& lambda_range,
                       const DeConfig& de_base_config);

} // namespace cfcal

#endif
