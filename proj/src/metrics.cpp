#include "cfcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "cfcal/prob_model.hpp"
#include "json.hpp"

namespace cfcal {

double rmse(const std::vector<double>& pred, const std::vector<double>& obs) {
    if (pred.size() != obs.size())
        throw ConfigError("rmse: series lengths differ");
    if (pred.empty()) throw ConfigError("rmse: empty series");
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        ss += (pred[i] - obs[i]) * (pred[i] - obs[i]);
    return std::sqrt(ss / static_cast<double>(pred.size()));
}

namespace {

const IdmParams& params_for(
    const std::map<std::string, IdmParams>& params_by_driver,
    const std::string& driver_id) {
    auto it = params_by_driver.find(driver_id);
    if (it == params_by_driver.end())
        throw DataError("missing parameters for driver " + driver_id);
    return it->second;
}

} // namespace

double dataset_rmse(const std::map<std::string, IdmParams>& params_by_driver,
                    const Dataset& data) {
    if (data.instances.empty()) throw DataError("dataset_rmse: empty dataset");
    double sum = 0.0;
    for (const auto& inst : data.instances) {
        const IdmParams& p = params_for(params_by_driver, inst.driver_id);
        sum += rmse(predict_instance(p, inst), inst.a_obs);
    }
    return sum / static_cast<double>(data.n_instances());
}

double gaussian_kl(double mu1, double sd1, double mu2, double sd2) {
    if (!(sd1 > 0.0) || !(sd2 > 0.0))
        throw ConfigError("gaussian_kl: standard deviations must be positive");
    const double dm = mu1 - mu2;
    return std::log(sd2 / sd1) + (sd1 * sd1 + dm * dm) / (2.0 * sd2 * sd2) -
           0.5;
}

double avg_kl(const std::map<std::string, IdmParams>& params_by_driver,
              const Dataset& data) {
    if (data.instances.empty()) throw DataError("avg_kl: empty dataset");
    double sum = 0.0;
    for (const auto& inst : data.instances) {
        const IdmParams& p = params_for(params_by_driver, inst.driver_id);
        const InstanceStats obs = instance_stats(inst);

        CfInstance pred_inst = inst;
        pred_inst.a_obs = predict_instance(p, inst);
        const InstanceStats pred = instance_stats(pred_inst);

        sum += gaussian_kl(obs.mean_a, std::max(obs.std_a, kSigmaFloor),
                           pred.mean_a, std::max(pred.std_a, kSigmaFloor));
    }
    return sum / static_cast<double>(data.n_instances());
}

double quantile(std::vector<double> samples, double q) {
    if (samples.empty()) throw ConfigError("quantile: empty samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double h = q * n - 0.5;   // midpoint rule
    h = std::clamp(h, 0.0, n - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
    const double w = h - std::floor(h);
    return (1.0 - w) * samples[lo] + w * samples[hi];
}

SampleSummary summarize_samples(const std::vector<double>& samples) {
    if (samples.empty()) throw ConfigError("summarize_samples: empty samples");
    SampleSummary s;
    double sum = 0.0;
    for (double x : samples) sum += x;
    s.mean = sum / static_cast<double>(samples.size());
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.stddev = samples.size() > 1
                   ? std::sqrt(ss / static_cast<double>(samples.size() - 1))
                   : 0.0;
    for (std::size_t i = 0; i < kQuantileLevels.size(); ++i)
        s.quantiles[i] = quantile(samples, kQuantileLevels[i]);
    return s;
}

std::vector<HistogramBin> histogram(const std::vector<double>& samples,
                                    int n_bins) {
    if (samples.empty()) throw ConfigError("histogram: empty samples");
    if (n_bins < 1) throw ConfigError("histogram: need at least one bin");
    const auto [lo_it, hi_it] =
        std::minmax_element(samples.begin(), samples.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) hi = lo + 1.0;   // degenerate constant samples
    const double width = (hi - lo) / n_bins;
    std::vector<HistogramBin> bins;
    bins.reserve(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i)
        bins.push_back({lo + i * width, lo + (i + 1) * width, 0});
    for (double x : samples) {
        int idx = static_cast<int>((x - lo) / width);
        idx = std::clamp(idx, 0, n_bins - 1);
        ++bins[static_cast<std::size_t>(idx)].count;
    }
    return bins;
}

namespace {

std::vector<DriverParamSummary> summarize_point(
    const std::map<std::string, IdmParams>& params_by_driver,
    const Dataset& data) {
    std::vector<DriverParamSummary> out;
    for (const auto& id : data.drivers) {
        const IdmParams& p = params_for(params_by_driver, id);
        DriverParamSummary s;
        s.driver_id = id;
        for (int j = 0; j < kIdmParamCount; ++j)
            s.params[j] = summarize_samples({p[j]});
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

CalibrationReport build_report(
    const std::string& method,
    const std::map<std::string, IdmParams>& params_by_driver,
    const Dataset& data) {
    CalibrationReport report;
    report.method = method;
    report.rmse = dataset_rmse(params_by_driver, data);
    report.avg_kl = avg_kl(params_by_driver, data);
    report.driver_summaries = summarize_point(params_by_driver, data);
    return report;
}

CalibrationReport build_report_from_samples(
    const std::string& method,
    const std::vector<std::vector<IdmParams>>& samples_by_driver,
    const Dataset& data) {
    if (samples_by_driver.size() != data.n_drivers())
        throw ConfigError("build_report_from_samples: driver count mismatch");

    std::map<std::string, IdmParams> means;
    CalibrationReport report;
    report.method = method;
    for (std::size_t d = 0; d < data.n_drivers(); ++d) {
        DriverParamSummary s;
        s.driver_id = data.drivers[d];
        IdmParams mean;
        for (int j = 0; j < kIdmParamCount; ++j) {
            std::vector<double> vals;
            vals.reserve(samples_by_driver[d].size());
            for (const auto& p : samples_by_driver[d]) vals.push_back(p[j]);
            s.params[j] = summarize_samples(vals);
            mean[j] = s.params[j].mean;
        }
        report.driver_summaries.push_back(std::move(s));
        means[data.drivers[d]] = mean;
    }
    report.rmse = dataset_rmse(means, data);
    report.avg_kl = avg_kl(means, data);
    return report;
}

namespace {

using nlohmann::json;

json summary_to_json(const SampleSummary& s) {
    return json{{"mean", s.mean},
                {"stddev", s.stddev},
                {"q05", s.quantiles[0]},
                {"q25", s.quantiles[1]},
                {"q50", s.quantiles[2]},
                {"q75", s.quantiles[3]},
                {"q95", s.quantiles[4]}};
}

SampleSummary summary_from_json(const json& j) {
    SampleSummary s;
    s.mean = j.at("mean");
    s.stddev = j.at("stddev");
    s.quantiles = {j.at("q05"), j.at("q25"), j.at("q50"), j.at("q75"),
                   j.at("q95")};
    return s;
}

} // namespace

std::string report_to_json(const CalibrationReport& report) {
    json j;
    j["method"] = report.method;
    if (report.prior_sigma) j["prior_sigma"] = *report.prior_sigma;
    if (report.de_config_echo) j["de_config"] = *report.de_config_echo;
    j["rmse"] = report.rmse;
    j["avg_kl"] = report.avg_kl;
    j["seed"] = report.seed;
    j["schedule_log"] = report.schedule_log;
    j["converged"] = report.converged;
    json drivers = json::array();
    for (const auto& ds : report.driver_summaries) {
        json d;
        d["driver_id"] = ds.driver_id;
        for (int p = 0; p < kIdmParamCount; ++p)
            d[kIdmParamNames[p]] = summary_to_json(ds.params[p]);
        drivers.push_back(std::move(d));
    }
    j["drivers"] = std::move(drivers);
    return j.dump(2) + "\n";
}

CalibrationReport report_from_json(const std::string& text) {
    json j = json::parse(text);
    CalibrationReport report;
    report.method = j.at("method");
    if (j.contains("prior_sigma")) report.prior_sigma = j["prior_sigma"];
    if (j.contains("de_config"))
        report.de_config_echo = j["de_config"].get<std::string>();
    report.rmse = j.at("rmse");
    report.avg_kl = j.at("avg_kl");
    report.seed = j.at("seed");
    report.schedule_log = j.at("schedule_log").get<std::vector<int>>();
    report.converged = j.at("converged");
    for (const auto& d : j.at("drivers")) {
        DriverParamSummary ds;
        ds.driver_id = d.at("driver_id");
        for (int p = 0; p < kIdmParamCount; ++p)
            ds.params[p] = summary_from_json(d.at(kIdmParamNames[p]));
        report.driver_summaries.push_back(std::move(ds));
    }
    return report;
}

void write_report_table_csv(const std::vector<CalibrationReport>& reports,
                            std::ostream& out) {
    out << "method,prior_sigma,rmse,avg_kl,converged\n";
    out << std::setprecision(17);
    for (const auto& r : reports) {
        out << r.method << ',';
        if (r.prior_sigma)
            out << *r.prior_sigma;
        out << ',' << r.rmse << ',' << r.avg_kl << ','
            << (r.converged ? 1 : 0) << '\n';
    }
}

void write_histograms_csv(
    const std::vector<std::vector<IdmParams>>& samples_by_driver,
    const std::vector<std::string>& driver_ids, int n_bins,
    std::ostream& out) {
    if (samples_by_driver.size() != driver_ids.size())
        throw ConfigError("write_histograms_csv: driver count mismatch");
    out << "driver_id,parameter,bin_lo,bin_hi,count\n";
    out << std::setprecision(17);
    for (std::size_t d = 0; d < driver_ids.size(); ++d) {
        for (int j = 0; j < kIdmParamCount; ++j) {
            std::vector<double> vals;
            vals.reserve(samples_by_driver[d].size());
            for (const auto& p : samples_by_driver[d]) vals.push_back(p[j]);
            for (const auto& bin : histogram(vals, n_bins))
                out << driver_ids[d] << ',' << kIdmParamNames[j] << ','
                    << bin.lo << ',' << bin.hi << ',' << bin.count << '\n';
        }
    }
}

} // namespace cfcal
