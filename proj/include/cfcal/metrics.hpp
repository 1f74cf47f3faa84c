#ifndef CFCAL_METRICS_HPP
#define CFCAL_METRICS_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfcal/idm.hpp"
#include "cfcal/trajectory.hpp"

namespace cfcal {

/// Root mean squared error between two equal-length series.
double rmse(const std::vector<double>& pred, const std::vector<double>& obs);

/// Mean over instances of the per-instance RMSE of IDM predictions under
/// each driver's parameters. Throws DataError for a driver with no entry.
double dataset_rmse(const std::map<std::string, IdmParams>& params_by_driver,
                    const Dataset& data);

/// Closed-form KL(N(mu1, sd1^2) || N(mu2, sd2^2)).
double gaussian_kl(double mu1, double sd1, double mu2, double sd2);

/// Per instance, Gaussian fits to observed and predicted accelerations are
/// compared with KL(observed || predicted), stds floored at kSigmaFloor;
/// averaged over instances.
double avg_kl(const std::map<std::string, IdmParams>& params_by_driver,
              const Dataset& data);

inline constexpr std::array<double, 5> kQuantileLevels = {0.05, 0.25, 0.50,
                                                          0.75, 0.95};

struct SampleSummary {
    double mean = 0.0;
    double stddev = 0.0;                  // sample (n-1) std
    std::array<double, 5> quantiles{};    // at kQuantileLevels
};

/// Midpoint-interpolated quantile of a sample set at probability level q.
double quantile(std::vector<double> samples, double q);

SampleSummary summarize_samples(const std::vector<double>& samples);

struct HistogramBin {
    double lo, hi;
    std::size_t count;
};

std::vector<HistogramBin> histogram(const std::vector<double>& samples,
                                    int n_bins);

struct DriverParamSummary {
    std::string driver_id;
    std::array<SampleSummary, kIdmParamCount> params;
};

struct CalibrationReport {
    std::string method;   // bayes-pooled | bayes-hierarchical |
                          // bayes-individual | de | literature
    std::optional<double> prior_sigma;
    std::optional<std::string> de_config_echo;
    double rmse = 0.0;
    double avg_kl = 0.0;
    std::vector<DriverParamSummary> driver_summaries;
    // Provenance (no wall-clock fields; outputs must be reproducible).
    std::uint64_t seed = 0;
    std::vector<int> schedule_log;
    bool converged = true;
};

/// Assemble the metric pair and per-driver summaries for a point-parameter
/// calibration result.
CalibrationReport build_report(
    const std::string& method,
    const std::map<std::string, IdmParams>& params_by_driver,
    const Dataset& data);

/// Same, for posterior sample sets (indexed [driver][sample] in the order of
/// data.drivers); point predictions use per-driver posterior means.
CalibrationReport build_report_from_samples(
    const std::string& method,
    const std::vector<std::vector<IdmParams>>& samples_by_driver,
    const Dataset& data);

std::string report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const std::string& text);

/// Table-1-shaped summary: one CSV row per report.
void write_report_table_csv(const std::vector<CalibrationReport>& reports,
                            std::ostream& out);

/// Histogram export: driver_id, parameter, bin_lo, bin_hi, count.
void write_histograms_csv(
    const std::vector<std::vector<IdmParams>>& samples_by_driver,
    const std::vector<std::string>& driver_ids, int n_bins, std::ostream& out);

} // namespace cfcal

#endif
