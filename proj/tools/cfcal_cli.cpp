// cfcal — car-following model calibration toolkit.
//
// Subcommands: ingest, synth, calibrate-bayes, calibrate-de, tune, evaluate,
// report. Every command that involves randomness takes a mandatory --seed and
// produces byte-identical primary outputs on re-runs; wall-clock provenance
// goes to a separate run_log.txt next to the outputs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfcal/bayes_opt.hpp"
#include "cfcal/de.hpp"
#include "cfcal/hmc.hpp"
#include "cfcal/metrics.hpp"
#include "cfcal/prob_model.hpp"
#include "cfcal/synth.hpp"
#include "cfcal/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cfcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNotConverged = 3;

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + out);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << content;
}

// Wall-clock provenance lives here and only here.
void write_run_log(const fs::path& dir, const std::string& command) {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::ostringstream ss;
    ss << "command: " << command << "\n"
       << "finished_unix_time: " << t << "\n";
    write_file(dir / "run_log.txt", ss.str());
}

json params_to_json(const IdmParams& p) {
    json j;
    for (int i = 0; i < kIdmParamCount; ++i) j[kIdmParamNames[i]] = p[i];
    return j;
}

IdmParams params_from_json(const json& j) {
    IdmParams p;
    for (int i = 0; i < kIdmParamCount; ++i)
        p[i] = j.at(kIdmParamNames[i]).get<double>();
    return p;
}

IdmParams parse_param_literal(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != kIdmParamCount)
        throw ConfigError("--params expects 7 comma-separated values");
    IdmParams p;
    for (int i = 0; i < kIdmParamCount; ++i) p[i] = vals[static_cast<std::size_t>(i)];
    require_valid_params(p);
    return p;
}

void write_posterior_csv(const fs::path& path,
                         const std::vector<std::vector<IdmParams>>& samples,
                         const std::vector<std::string>& drivers, int thin) {
    std::ofstream f(path);
    f << "driver_id,parameter_name,sample_index,value\n";
    f << std::setprecision(17);
    for (std::size_t d = 0; d < drivers.size(); ++d)
        for (int j = 0; j < kIdmParamCount; ++j)
            for (std::size_t s = 0; s < samples[d].size(); s += static_cast<std::size_t>(thin))
                f << drivers[d] << ',' << kIdmParamNames[j] << ',' << s << ','
                  << samples[d][s][j] << '\n';
}

std::map<std::string, IdmParams> posterior_csv_means(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open posterior CSV: " + path);
    std::string line;
    if (!std::getline(f, line) ||
        line != "driver_id,parameter_name,sample_index,value")
        throw DataError("bad posterior CSV header in " + path);
    std::map<std::string, std::array<std::pair<double, std::size_t>, kIdmParamCount>> acc;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string driver, pname, sidx, val;
        std::getline(ss, driver, ',');
        std::getline(ss, pname, ',');
        std::getline(ss, sidx, ',');
        std::getline(ss, val, ',');
        int j = -1;
        for (int i = 0; i < kIdmParamCount; ++i)
            if (pname == kIdmParamNames[i]) j = i;
        if (j < 0) throw DataError("unknown parameter name: " + pname);
        auto& slot = acc[driver][static_cast<std::size_t>(j)];
        slot.first += std::stod(val);
        slot.second += 1;
    }
    std::map<std::string, IdmParams> out;
    for (auto& [driver, slots] : acc) {
        IdmParams p;
        for (int j = 0; j < kIdmParamCount; ++j) {
            const auto& [sum, n] = slots[static_cast<std::size_t>(j)];
            if (n == 0) throw DataError("posterior CSV has no samples for " +
                                        driver + "." + kIdmParamNames[j]);
            p[j] = sum / static_cast<double>(n);
        }
        out[driver] = p;
    }
    return out;
}

// ---- subcommand options ----

struct IngestOpts {
    std::string data, out;
};

int cmd_ingest(const IngestOpts& opt) {
    std::ifstream f(opt.data);
    if (!f) throw DataError("cannot open trajectory file: " + opt.data);
    ParseReport parsed = parse_trajectories_lenient(f);

    json summary;
    summary["n_instances"] = parsed.data.n_instances();
    summary["n_drivers"] = parsed.data.n_drivers();
    summary["n_rejected"] = parsed.rejections.size();
    json rej = json::array();
    for (const auto& r : parsed.rejections)
        rej.push_back({{"instance", r.group}, {"reason", r.reason}});
    summary["rejections"] = std::move(rej);

    const fs::path dir = ensure_out_dir(opt.out);
    write_file(dir / "ingest_summary.json", summary.dump(2) + "\n");
    write_run_log(dir, "ingest");
    std::cout << summary.dump(2) << "\n";
    if (parsed.data.instances.empty())
        throw DataError("no instances survived validation");
    return kExitOk;
}

struct SynthOpts {
    int n_drivers = 10;
    int n_instances = 3;
    int n_steps = 80;
    double noise_std = 0.1;
    double dt = 0.1;
    double param_scale = 0.15;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_synth(const SynthOpts& opt) {
    SyntheticSpec spec;
    spec.true_params =
        sample_params_around_literature(opt.n_drivers, opt.param_scale, opt.seed);
    spec.noise_std = opt.noise_std;
    spec.n_instances_per_driver = opt.n_instances;
    spec.n_steps = opt.n_steps;
    spec.dt = opt.dt;
    spec.seed = opt.seed;
    const SyntheticResult result = generate_synthetic(spec);

    const fs::path dir = ensure_out_dir(opt.out);
    std::ofstream csv(dir / "data.csv");
    serialize_trajectories(result.data, csv);

    json truth;
    for (const auto& [id, p] : result.truth) truth[id] = params_to_json(p);
    write_file(dir / "truth.json", truth.dump(2) + "\n");
    write_run_log(dir, "synth");
    std::cout << "wrote " << result.data.n_instances() << " instances for "
              << result.data.n_drivers() << " drivers\n";
    return kExitOk;
}

struct BayesOpts {
    std::string data, out, formulation = "hierarchical";
    double prior_sigma = 10.0;
    double step_size = 0.01;
    int n_leapfrog = 20;
    int base_run_steps = 1500;
    int max_total_steps = 9000;
    double tol = 1e-2;
    int thin = 1;
    bool auto_mass = true;
    std::uint64_t seed = 0;
};

int cmd_calibrate_bayes(const BayesOpts& opt) {
    // Flag problems are reported before any input is touched so a bad
    // invocation is a config error even when the data path is also wrong.
    ModelSpec spec;
    spec.formulation = parse_formulation(opt.formulation);
    spec.prior_sigma = opt.prior_sigma;
    spec.validate();

    const Dataset data = parse_trajectories_file(opt.data);
    spec.n_drivers = data.n_drivers();
    spec.validate();
    IdmModel model(spec, data);

    HmcConfig config;
    config.step_size = opt.step_size;
    config.n_leapfrog = opt.n_leapfrog;
    config.base_run_steps = opt.base_run_steps;
    config.max_total_steps = opt.max_total_steps;
    config.convergence_tol = opt.tol;
    config.seed = opt.seed;
    if (opt.auto_mass) {
        const HmcTarget target = make_target(model);
        config.mass = curvature_mass(target, model.init_state().theta);
    }
    config.validate();

    const RestartResult result = restart_calibrate(model, config);
    const auto samples = posterior_params(spec, result.posterior);

    CalibrationReport report = build_report_from_samples(
        std::string("bayes-") + formulation_name(spec.formulation), samples,
        data);
    report.prior_sigma = spec.prior_sigma;
    report.seed = opt.seed;
    report.schedule_log = result.schedule_log;
    report.converged = result.converged;

    const fs::path dir = ensure_out_dir(opt.out);
    write_file(dir / "report.json", report_to_json(report));
    write_posterior_csv(dir / "posterior.csv", samples, data.drivers, opt.thin);
    {
        std::ofstream hist(dir / "histograms.csv");
        write_histograms_csv(samples, data.drivers, 30, hist);
    }
    write_run_log(dir, "calibrate-bayes");
    std::cout << "rmse=" << report.rmse << " avg_kl=" << report.avg_kl
              << " converged=" << (result.converged ? "yes" : "no")
              << " schedule=[";
    for (std::size_t i = 0; i < result.schedule_log.size(); ++i)
        std::cout << (i ? "," : "") << result.schedule_log[i];
    std::cout << "] accept=" << result.posterior.acceptance_rate() << "\n";
    return result.converged ? kExitOk : kExitNotConverged;
}

struct DeOpts {
    std::string data, out;
    double cr = 0.9, f = 0.8, lambda = 0.0;
    int pop = 28, generations = 300;
    std::string bounds;   // "lo:hi,lo:hi,..." override
    std::uint64_t seed = 0;
};

ParamBounds parse_bounds(const std::string& text) {
    ParamBounds b = default_bounds();
    if (text.empty()) return b;
    std::stringstream ss(text);
    std::string cell;
    int j = 0;
    while (std::getline(ss, cell, ',')) {
        if (j >= kIdmParamCount) throw ConfigError("--bounds: too many entries");
        const auto colon = cell.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--bounds entries must look like lo:hi");
        b[j].first = std::stod(cell.substr(0, colon));
        b[j].second = std::stod(cell.substr(colon + 1));
        ++j;
    }
    if (j != kIdmParamCount)
        throw ConfigError("--bounds expects 7 lo:hi pairs");
    return b;
}

std::string de_config_echo(const DeConfig& c) {
    std::ostringstream ss;
    ss << "CR=" << c.crossover_prob << " F=" << c.differential_weight
       << " lambda=" << c.lambda << " pop=" << c.population_size
       << " gens=" << c.n_generations;
    return ss.str();
}

int cmd_calibrate_de(const DeOpts& opt) {
    const Dataset data = parse_trajectories_file(opt.data);
    DeConfig config;
    config.crossover_prob = opt.cr;
    config.differential_weight = opt.f;
    config.lambda = opt.lambda;
    config.population_size = opt.pop;
    config.n_generations = opt.generations;
    config.bounds = parse_bounds(opt.bounds);
    config.seed = opt.seed;
    config.validate();

    const DeResult result = run_de(config, data);
    std::map<std::string, IdmParams> by_driver;
    for (const auto& id : data.drivers) by_driver[id] = result.best.params;

    CalibrationReport report = build_report("de", by_driver, data);
    report.de_config_echo = de_config_echo(config);
    report.seed = opt.seed;

    json extra;
    extra["best_params"] = params_to_json(result.best.params);
    extra["best_fitness"] = result.best.fitness;
    extra["unregularized_rmse"] = fitness(result.best.params, data, 0.0);
    extra["history"] = result.history;

    const fs::path dir = ensure_out_dir(opt.out);
    write_file(dir / "report.json", report_to_json(report));
    write_file(dir / "de_result.json", extra.dump(2) + "\n");
    write_run_log(dir, "calibrate-de");
    std::cout << "rmse=" << report.rmse << " best_fitness="
              << result.best.fitness << "\n";
    return kExitOk;
}

struct TuneOpts {
    std::string data, out, method = "grid";
    // grid ranges as lo:hi:step
    std::string cr_range, f_range, lambda_range;
    // bo bounds as lo:hi
    std::string cr_bounds = "0.1:0.9", f_bounds = "0.1:1.9",
                lambda_bounds = "0:0.0001";
    int budget = 20;
    int pop = 28, generations = 300;
    std::uint64_t seed = 0;
};

GridRange parse_range(const std::string& text, const GridRange& fallback) {
    if (text.empty()) return fallback;
    GridRange r;
    std::stringstream ss(text);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ':')) vals.push_back(std::stod(cell));
    if (vals.size() != 3)
        throw ConfigError("range must look like lo:hi:step");
    r.lo = vals[0];
    r.hi = vals[1];
    r.step = vals[2];
    return r;
}

std::pair<double, double> parse_pair(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("bounds must look like lo:hi");
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

int cmd_tune(const TuneOpts& opt) {
    const Dataset data = parse_trajectories_file(opt.data);
    DeConfig base;
    base.population_size = opt.pop;
    base.n_generations = opt.generations;
    base.seed = opt.seed;

    const fs::path dir = ensure_out_dir(opt.out);
    std::ofstream csv(dir / "evaluations.csv");
    csv << std::setprecision(17);
    json incumbent;

    if (opt.method == "grid") {
        const GridResult result =
            grid_search(data, parse_range(opt.cr_range, reference_cr_range()),
                        parse_range(opt.f_range, reference_f_range()),
                        parse_range(opt.lambda_range, reference_lambda_range()),
                        base);
        csv << "crossover_prob,differential_weight,lambda,best_rmse,"
               "pop_avg_rmse,v0,T,a,b,delta,s0,s1\n";
        for (const auto& row : result.rows) {
            csv << row.crossover_prob << ',' << row.differential_weight << ','
                << row.lambda << ',' << row.best_rmse << ','
                << row.pop_avg_rmse;
            for (int j = 0; j < kIdmParamCount; ++j)
                csv << ',' << row.best_params[j];
            csv << '\n';
        }
        const GridRow& best = result.rows[result.best_row];
        incumbent = {{"crossover_prob", best.crossover_prob},
                     {"differential_weight", best.differential_weight},
                     {"lambda", best.lambda},
                     {"best_rmse", best.best_rmse},
                     {"pop_avg_rmse", best.pop_avg_rmse},
                     {"best_params", params_to_json(best.best_params)},
                     {"n_cells", result.rows.size()}};
    } else if (opt.method == "bo") {
        HyperBounds bounds = {parse_pair(opt.cr_bounds),
                              parse_pair(opt.f_bounds),
                              parse_pair(opt.lambda_bounds)};
        const BoResult result =
            bayes_opt_tune(data, bounds, opt.budget, base, opt.seed);
        csv << "crossover_prob,differential_weight,lambda,best_rmse\n";
        for (const auto& row : result.trace)
            csv << row.crossover_prob << ',' << row.differential_weight << ','
                << row.lambda << ',' << row.rmse << '\n';
        incumbent = {{"crossover_prob", result.incumbent.crossover_prob},
                     {"differential_weight", result.incumbent.differential_weight},
                     {"lambda", result.incumbent.lambda},
                     {"best_rmse", result.incumbent.rmse},
                     {"n_evaluations", result.trace.size()}};
    } else {
        throw ConfigError("unknown tune method '" + opt.method +
                          "' (expected grid or bo)");
    }

    write_file(dir / "incumbent.json", incumbent.dump(2) + "\n");
    write_run_log(dir, "tune");
    std::cout << incumbent.dump(2) << "\n";
    return kExitOk;
}

struct EvaluateOpts {
    std::string data, out;
    std::string params_literal;   // "6.5,1.6,..."
    std::string posterior_csv;
    std::string de_report;
    std::string method = "evaluate";
};

int cmd_evaluate(const EvaluateOpts& opt) {
    const Dataset data = parse_trajectories_file(opt.data);
    const int sources = (!opt.params_literal.empty()) +
                        (!opt.posterior_csv.empty()) + (!opt.de_report.empty());
    if (sources != 1)
        throw ConfigError(
            "exactly one of --params, --posterior-csv, --de-report required");

    std::map<std::string, IdmParams> by_driver;
    if (!opt.params_literal.empty()) {
        const IdmParams p = parse_param_literal(opt.params_literal);
        for (const auto& id : data.drivers) by_driver[id] = p;
    } else if (!opt.posterior_csv.empty()) {
        by_driver = posterior_csv_means(opt.posterior_csv);
    } else {
        std::ifstream f(opt.de_report);
        if (!f) throw DataError("cannot open DE report: " + opt.de_report);
        json j = json::parse(f);
        const IdmParams p = params_from_json(j.at("best_params"));
        for (const auto& id : data.drivers) by_driver[id] = p;
    }

    const CalibrationReport report = build_report(opt.method, by_driver, data);
    const fs::path dir = ensure_out_dir(opt.out);
    write_file(dir / "report.json", report_to_json(report));
    write_run_log(dir, "evaluate");
    std::cout << "rmse=" << report.rmse << " avg_kl=" << report.avg_kl << "\n";
    return kExitOk;
}

struct ReportOpts {
    std::vector<std::string> inputs;
    std::string out;
};

int cmd_report(const ReportOpts& opt) {
    std::vector<CalibrationReport> reports;
    for (const auto& path : opt.inputs) {
        std::ifstream f(path);
        if (!f) throw DataError("cannot open report: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        reports.push_back(report_from_json(ss.str()));
    }
    const fs::path dir = ensure_out_dir(opt.out);
    std::ofstream csv(dir / "summary_table.csv");
    write_report_table_csv(reports, csv);
    write_run_log(dir, "report");
    std::cout << "wrote " << reports.size() << " rows\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Car-following model calibration toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (flags win over file values)");

    IngestOpts ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate a trajectory CSV");
    c_ingest->add_option("--data", ingest.data, "Trajectory CSV")->required();
    c_ingest->add_option("--out", ingest.out, "Output directory")->required();

    SynthOpts synth;
    auto* c_synth =
        app.add_subcommand("synth", "Generate a synthetic dataset with truth");
    c_synth->add_option("--drivers", synth.n_drivers);
    c_synth->add_option("--instances", synth.n_instances,
                        "Instances per driver");
    c_synth->add_option("--steps", synth.n_steps, "Samples per instance");
    c_synth->add_option("--noise", synth.noise_std, "Observation noise std");
    c_synth->add_option("--dt", synth.dt);
    c_synth->add_option("--param-scale", synth.param_scale,
                        "Relative heterogeneity of true parameters");
    c_synth->add_option("--seed", synth.seed)->required();
    c_synth->add_option("--out", synth.out)->required();

    BayesOpts bayes;
    auto* c_bayes = app.add_subcommand(
        "calibrate-bayes", "HMC calibration with the restart protocol");
    c_bayes->add_option("--data", bayes.data)->required();
    c_bayes->add_option("--out", bayes.out)->required();
    c_bayes->add_option("--formulation", bayes.formulation,
                        "pooled | hierarchical | individual");
    c_bayes->add_option("--prior-sigma", bayes.prior_sigma)
        ->check(CLI::PositiveNumber);
    c_bayes->add_option("--step-size", bayes.step_size);
    c_bayes->add_option("--n-leapfrog", bayes.n_leapfrog);
    c_bayes->add_option("--base-run-steps", bayes.base_run_steps);
    c_bayes->add_option("--max-total-steps", bayes.max_total_steps);
    c_bayes->add_option("--tol", bayes.tol, "Convergence tolerance");
    c_bayes->add_option("--thin", bayes.thin, "Posterior CSV thinning");
    c_bayes->add_flag("--auto-mass,!--no-auto-mass", bayes.auto_mass,
                      "Curvature-scaled mass at initialization (default on)");
    c_bayes->add_option("--seed", bayes.seed)->required();

    DeOpts de;
    auto* c_de =
        app.add_subcommand("calibrate-de", "Differential-evolution calibration");
    c_de->add_option("--data", de.data)->required();
    c_de->add_option("--out", de.out)->required();
    c_de->add_option("--cr", de.cr, "Crossover probability");
    c_de->add_option("--f", de.f, "Differential weight");
    c_de->add_option("--lambda", de.lambda, "Regularization weight");
    c_de->add_option("--pop", de.pop);
    c_de->add_option("--generations", de.generations);
    c_de->add_option("--bounds", de.bounds, "7 lo:hi pairs, comma separated");
    c_de->add_option("--seed", de.seed)->required();

    TuneOpts tune;
    auto* c_tune =
        app.add_subcommand("tune", "DE hyperparameter search (grid or bo)");
    c_tune->add_option("--data", tune.data)->required();
    c_tune->add_option("--out", tune.out)->required();
    c_tune->add_option("--method", tune.method, "grid | bo");
    c_tune->add_option("--cr-range", tune.cr_range, "lo:hi:step");
    c_tune->add_option("--f-range", tune.f_range, "lo:hi:step");
    c_tune->add_option("--lambda-range", tune.lambda_range, "lo:hi:step");
    c_tune->add_option("--cr-bounds", tune.cr_bounds, "lo:hi");
    c_tune->add_option("--f-bounds", tune.f_bounds, "lo:hi");
    c_tune->add_option("--lambda-bounds", tune.lambda_bounds, "lo:hi");
    c_tune->add_option("--budget", tune.budget, "BO evaluation budget");
    c_tune->add_option("--pop", tune.pop);
    c_tune->add_option("--generations", tune.generations);
    c_tune->add_option("--seed", tune.seed)->required();

    EvaluateOpts eval;
    auto* c_eval =
        app.add_subcommand("evaluate", "Score a parameter set on a dataset");
    c_eval->add_option("--data", eval.data)->required();
    c_eval->add_option("--out", eval.out)->required();
    c_eval->add_option("--params", eval.params_literal,
                       "Literal 7-vector v0,T,a,b,delta,s0,s1");
    c_eval->add_option("--posterior-csv", eval.posterior_csv);
    c_eval->add_option("--de-report", eval.de_report,
                       "de_result.json from calibrate-de");
    c_eval->add_option("--method", eval.method, "Method label for the report");

    ReportOpts rep;
    auto* c_report =
        app.add_subcommand("report", "Combine report JSONs into a summary CSV");
    c_report->add_option("--inputs", rep.inputs)->required()->expected(-1);
    c_report->add_option("--out", rep.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUsage : kExitOk;
    }

    try {
        if (c_ingest->parsed()) return cmd_ingest(ingest);
        if (c_synth->parsed()) return cmd_synth(synth);
        if (c_bayes->parsed()) return cmd_calibrate_bayes(bayes);
        if (c_de->parsed()) return cmd_calibrate_de(de);
        if (c_tune->parsed()) return cmd_tune(tune);
        if (c_eval->parsed()) return cmd_evaluate(eval);
        if (c_report->parsed()) return cmd_report(rep);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
