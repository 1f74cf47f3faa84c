#include "cfcal/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cfcal {

void validate_instance(const CfInstance& inst) {
    const std::string tag = inst.driver_id + "/" + inst.instance_id;
    const std::size_t n = inst.v.size();
    if (n < 2)
        throw DataError("instance " + tag + ": series shorter than 2 samples");
    if (inst.dv.size() != n || inst.s.size() != n || inst.a_obs.size() != n)
        throw DataError("instance " + tag + ": series lengths differ");
    if (!(inst.dt > 0.0))
        throw DataError("instance " + tag + ": nonpositive dt");
    for (std::size_t t = 0; t < n; ++t) {
        if (!(inst.s[t] > 0.0))
            throw DataError("instance " + tag + ": nonpositive gap at sample " +
                            std::to_string(t));
        if (inst.v[t] < 0.0)
            throw DataError("instance " + tag + ": negative speed at sample " +
                            std::to_string(t));
    }
}

std::size_t Dataset::driver_index(const std::string& driver_id) const {
    auto it = std::find(drivers.begin(), drivers.end(), driver_id);
    if (it == drivers.end())
        throw DataError("unknown driver id: " + driver_id);
    return static_cast<std::size_t>(it - drivers.begin());
}

InstanceStats instance_stats(const CfInstance& inst) {
    const std::size_t n = inst.a_obs.size();
    double sum = 0.0;
    for (double x : inst.a_obs) sum += x;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : inst.a_obs) ss += (x - mean) * (x - mean);
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var)};
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& cell, std::size_t line_no,
                    const char* col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw DataError("row " + std::to_string(line_no) + ": cannot parse " +
                        std::string(col) + " value '" + cell + "'");
    }
}

constexpr const char* kHeader =
    "driver_id,instance_id,time_s,v_mps,dv_mps,gap_m,accel_mps2";

} // namespace

namespace {

Dataset parse_impl(std::istream& in,
                   std::vector<ParseReport::Rejection>* rejections);

} // namespace

Dataset parse_trajectories(std::istream& in) {
    return parse_impl(in, nullptr);
}

ParseReport parse_trajectories_lenient(std::istream& in) {
    ParseReport report;
    report.data = parse_impl(in, &report.rejections);
    return report;
}

namespace {

Dataset parse_impl(std::istream& in,
                   std::vector<ParseReport::Rejection>* rejections) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError("empty input: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw DataError("bad header row; expected '" + std::string(kHeader) +
                        "'");

    Dataset data;
    CfInstance cur;
    std::vector<double> times;
    bool open = false;

    auto close_instance = [&]() {
        if (!open) return;
        const std::string tag = cur.driver_id + "/" + cur.instance_id;
        try {
            if (times.size() < 2)
                throw DataError("instance " + tag +
                                ": series shorter than 2 samples");
            const double dt = times[1] - times[0];
            for (std::size_t t = 1; t < times.size(); ++t) {
                if (std::abs((times[t] - times[t - 1]) - dt) >
                    1e-9 * std::max(1.0, std::abs(dt)))
                    throw DataError("instance " + tag +
                                    ": non-uniform dt at sample " +
                                    std::to_string(t));
            }
            cur.dt = dt;
            validate_instance(cur);
            if (std::find(data.drivers.begin(), data.drivers.end(),
                          cur.driver_id) == data.drivers.end())
                data.drivers.push_back(cur.driver_id);
            data.instances.push_back(std::move(cur));
        } catch (const DataError& e) {
            if (!rejections) throw;
            rejections->push_back({tag, e.what()});
        }
        cur = CfInstance{};
        times.clear();
        open = false;
    };

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_row(line);
        if (cells.size() != 7)
            throw DataError("row " + std::to_string(line_no) + ": expected 7 columns, got " +
                            std::to_string(cells.size()));
        if (open && (cells[0] != cur.driver_id || cells[1] != cur.instance_id))
            close_instance();
        if (!open) {
            cur.driver_id = cells[0];
            cur.instance_id = cells[1];
            open = true;
        }
        times.push_back(parse_double(cells[2], line_no, "time_s"));
        cur.v.push_back(parse_double(cells[3], line_no, "v_mps"));
        cur.dv.push_back(parse_double(cells[4], line_no, "dv_mps"));
        cur.s.push_back(parse_double(cells[5], line_no, "gap_m"));
        cur.a_obs.push_back(parse_double(cells[6], line_no, "accel_mps2"));
    }
    close_instance();
    if (data.instances.empty() && !rejections)
        throw DataError("no data rows");
    return data;
}

} // namespace

Dataset parse_trajectories_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trajectory file: " + path);
    return parse_trajectories(in);
}

void serialize_trajectories(const Dataset& data, std::ostream& out) {
    out << kHeader << '\n';
    out << std::setprecision(17);
    for (const auto& inst : data.instances) {
        for (std::size_t t = 0; t < inst.size(); ++t) {
            out << inst.driver_id << ',' << inst.instance_id << ','
                << static_cast<double>(t) * inst.dt << ',' << inst.v[t] << ','
                << inst.dv[t] << ',' << inst.s[t] << ',' << inst.a_obs[t]
                << '\n';
        }
    }
}

} // namespace cfcal
