#include "sfdl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

constexpr double kFeetToMeters = 0.3048;

// Feature scaling keeps every input O(1) for typical highway motion.
constexpr double kPositionScale = 10.0;  // m
constexpr double kSpeedScale = 10.0;     // m/s
constexpr double kAccelScale = 3.0;      // m/s^2

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_double(const std::string& field) {
    if (field.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        // Non-numeric text.
        return std::nullopt;
    }
}

}  // namespace

TrajectoryDataset::TrajectoryDataset(std::vector<TrajectoryRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) {
        return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame_id < b.frame_id;
    });
    std::size_t start = 0;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (i > 0 && records_[i].vehicle_id == records_[i - 1].vehicle_id &&
            records_[i].frame_id == records_[i - 1].frame_id) {
            throw InvalidInput("vehicle " + std::to_string(records_[i].vehicle_id) +
                               " has frame " + std::to_string(records_[i].frame_id) + " twice");
        }
        const bool last = i + 1 == records_.size() || records_[i + 1].vehicle_id != records_[i].vehicle_id;
        if (last) {
            index_[records_[i].vehicle_id] = {start, i + 1};
            start = i + 1;
        }
    }
}

std::vector<VehicleId> TrajectoryDataset::vehicle_ids() const {
    std::vector<VehicleId> ids;
    ids.reserve(index_.size());
    for (const auto& [id, range] : index_) ids.push_back(id);
    return ids;
}

std::span<const TrajectoryRecord> TrajectoryDataset::track(VehicleId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return {};
    return std::span<const TrajectoryRecord>(records_).subspan(it->second.first,
                                                               it->second.second - it->second.first);
}

IngestReport parse_trajectory_csv(std::istream& in, const IngestOptions& options) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("trajectory CSV is empty");
    const auto header = split(line);

    const auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("trajectory CSV is missing required column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto& c = options.columns;
    const std::size_t col_vehicle = column(c.vehicle_id);
    const std::size_t col_frame = column(c.frame_id);
    const std::size_t col_x = column(c.x);
    const std::size_t col_y = column(c.y);
    const std::size_t col_vel = column(c.velocity);
    const std::size_t col_acc = column(c.acceleration);
    const std::size_t col_lane = column(c.lane_id);
    const double unit = options.feet_to_meters ? kFeetToMeters : 1.0;

    IngestReport report;
    std::vector<TrajectoryRecord> records;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++report.rows_read;
        const auto fields = split(line);
        if (fields.size() < header.size()) {
            ++report.rows_dropped;
            continue;
        }
        const auto vehicle = parse_double(fields[col_vehicle]);
        const auto frame = parse_double(fields[col_frame]);
        const auto x = parse_double(fields[col_x]);
        const auto y = parse_double(fields[col_y]);
        const auto vel = parse_double(fields[col_vel]);
        const auto acc = parse_double(fields[col_acc]);
        const auto lane = parse_double(fields[col_lane]);
        const bool usable = vehicle && frame && x && y && vel && acc && lane &&
                            std::isfinite(*vehicle) && std::isfinite(*frame) && std::isfinite(*x) &&
                            std::isfinite(*y) && std::isfinite(*vel) && std::isfinite(*acc) &&
                            std::isfinite(*lane);
        if (!usable) {
            ++report.rows_dropped;
            continue;
        }
        records.push_back({static_cast<VehicleId>(*vehicle), static_cast<std::int64_t>(*frame),
                           *x * unit, *y * unit, *vel * unit, *acc * unit, static_cast<int>(*lane)});
    }

    // Repeated (vehicle, frame) rows keep their first occurrence in file order.
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame_id < b.frame_id;
    });
    const auto last = std::unique(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.vehicle_id == b.vehicle_id && a.frame_id == b.frame_id;
    });
    report.rows_dropped += static_cast<std::size_t>(records.end() - last);
    records.erase(last, records.end());

    if (records.empty()) throw InvalidInput("trajectory CSV has no usable rows");
    report.dataset = TrajectoryDataset(std::move(records));
    return report;
}

IngestReport ingest_trajectory_csv(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory CSV '" + path.string() + "'");
    return parse_trajectory_csv(in, options);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryDataset& dataset) {
    out << "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,v_Acc,Lane_ID\n";
    char buf[256];
    for (const auto& r : dataset.records()) {
        std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%d\n",
                      static_cast<long long>(r.vehicle_id), static_cast<long long>(r.frame_id), r.x,
                      r.y, r.velocity, r.acceleration, r.lane_id);
        out << buf;
    }
}

TrajectoryDataset apply_observation_noise(const TrajectoryDataset& clean,
                                          std::span<const NoiseSpec> noisy, std::mt19937_64& rng) {
    std::vector<TrajectoryRecord> records(clean.records().begin(), clean.records().end());
    for (const auto& spec : noisy) {
        if (!(spec.stddev >= 0.0)) throw InvalidInput("noise stddev must be nonnegative");
        if (spec.stddev == 0.0) continue;
        std::normal_distribution<double> noise(0.0, spec.stddev);
        for (auto& r : records) {
            if (r.vehicle_id != spec.vehicle_id) continue;
            r.x += noise(rng);
            r.y += noise(rng);
        }
    }
    return TrajectoryDataset(std::move(records));
}

std::optional<TrajectorySample> make_sample(std::span<const TrajectoryRecord> track,
                                            std::size_t anchor, const WindowSpec& spec) {
    const std::size_t back = spec.history_frames();
    const std::size_t ahead = spec.horizon_frames();
    if (anchor < back || anchor + ahead >= track.size()) return std::nullopt;
    const auto first = anchor - back;
    const auto last = anchor + ahead;
    if (track[last].frame_id - track[first].frame_id != static_cast<std::int64_t>(last - first)) {
        return std::nullopt;
    }

    const auto& a = track[anchor];
    const double step_seconds = static_cast<double>(spec.stride_frames) * kFrameSeconds;
    TrajectorySample sample;
    sample.history.reserve(spec.history_len * kFeatureCount);
    for (std::size_t t = 0; t < spec.history_len; ++t) {
        const std::size_t idx = first + t * spec.stride_frames;
        const auto& r = track[idx];
        // Backward difference where the previous stride exists, else forward.
        const auto& prev = idx >= spec.stride_frames ? track[idx - spec.stride_frames] : r;
        const auto& next = idx >= spec.stride_frames ? r : track[idx + spec.stride_frames];
        const double vx = (next.x - prev.x) / step_seconds;
        const double vy = (next.y - prev.y) / step_seconds;
        const double heading = std::atan2(vy, vx);
        sample.history.push_back((r.x - a.x) / kPositionScale);
        sample.history.push_back((r.y - a.y) / kPositionScale);
        sample.history.push_back(r.velocity / kSpeedScale);
        sample.history.push_back(r.acceleration / kAccelScale);
        sample.history.push_back(static_cast<double>(r.lane_id - a.lane_id));
        sample.history.push_back(vx / kSpeedScale);
        sample.history.push_back(vy / kSpeedScale);
        sample.history.push_back(std::sin(heading));
        sample.history.push_back(std::cos(heading));
    }
    sample.target.reserve(spec.horizon);
    for (std::size_t h = 1; h <= spec.horizon; ++h) {
        const auto& r = track[anchor + h * spec.stride_frames];
        sample.target.push_back({r.x - a.x, r.y - a.y});
    }
    return sample;
}

}  // namespace sfdl
