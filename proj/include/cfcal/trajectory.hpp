#ifndef CFCAL_TRAJECTORY_HPP
#define CFCAL_TRAJECTORY_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfcal {

/// Bad input data (malformed rows, QC violations). CLI maps this to exit 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration or arguments. CLI maps this to exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One car-following episode: aligned, uniformly sampled time series for a
/// single follower behind a single leader.
struct CfInstance {
    std::string driver_id;
    std::string instance_id;
    double dt = 0.1;                // seconds per sample, uniform
    std::vector<double> v;          // follower speed, m/s
    std::vector<double> dv;         // relative speed v_follower - v_leader, m/s
    std::vector<double> s;          // bumper-to-bumper gap, m
    std::vector<double> a_obs;      // observed follower acceleration, m/s^2

    std::size_t size() const { return v.size(); }
};

/// Throws DataError naming the instance if any CfInstance invariant fails.
void validate_instance(const CfInstance& inst);

struct Dataset {
    std::vector<CfInstance> instances;
    std::vector<std::string> drivers;   // distinct driver ids, insertion order

    std::size_t n_instances() const { return instances.size(); }
    std::size_t n_drivers() const { return drivers.size(); }
    /// Index of a driver id in `drivers`; throws DataError if absent.
    std::size_t driver_index(const std::string& driver_id) const;
};

struct InstanceStats {
    double mean_a = 0.0;
    double std_a = 0.0;   // sample (n-1) standard deviation
};

/// Mean and sample standard deviation of the observed accelerations.
InstanceStats instance_stats(const CfInstance& inst);

/// Parse the CSV trajectory format (header required, columns driver_id,
/// instance_id, time_s, v_mps, dv_mps, gap_m, accel_mps2). Rows must be
/// grouped by (driver, instance) and time-sorted; dt is inferred from
/// consecutive timestamps and must be uniform within an instance.
Dataset parse_trajectories(std::istream& in);
Dataset parse_trajectories_file(const std::string& path);

/// Lenient variant for ingest reporting: instances failing QC are dropped
/// and listed instead of aborting the parse. Structurally malformed rows
/// still throw (group boundaries become meaningless).
struct ParseReport {
    Dataset data;
    struct Rejection {
        std::string group;    // "driver/instance"
        std::string reason;
    };
    std::vector<Rejection> rejections;
};
ParseReport parse_trajectories_lenient(std::istream& in);

/// Inverse of parse_trajectories; parse(serialize(d)) == d.
void serialize_trajectories(const Dataset& data, std::ostream& out);

} // namespace cfcal

#endif
