#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sfdl/model.hpp"
#include "sfdl/swarm.hpp"

namespace sfdl {

// NGSIM frames are 0.1 s apart.
inline constexpr double kFrameSeconds = 0.1;

struct TrajectoryRecord {
    VehicleId vehicle_id = 0;
    std::int64_t frame_id = 0;
    double x = 0.0;             // meters
    double y = 0.0;             // meters
    double velocity = 0.0;      // m/s
    double acceleration = 0.0;  // m/s^2
    int lane_id = 0;

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

// Records sorted by (vehicle, frame) with frames strictly increasing per vehicle.
class TrajectoryDataset {
public:
    TrajectoryDataset() = default;

    // Sorts the input. Throws InvalidInput on a repeated (vehicle, frame) pair.
    explicit TrajectoryDataset(std::vector<TrajectoryRecord> records);

    std::span<const TrajectoryRecord> records() const noexcept { return records_; }
    std::vector<VehicleId> vehicle_ids() const;
    std::span<const TrajectoryRecord> track(VehicleId id) const;
    bool contains(VehicleId id) const { return index_.contains(id); }
    std::size_t vehicle_count() const noexcept { return index_.size(); }

    friend bool operator==(const TrajectoryDataset& a, const TrajectoryDataset& b) {
        return a.records_ == b.records_;
    }

private:
    std::vector<TrajectoryRecord> records_;
    std::map<VehicleId, std::pair<std::size_t, std::size_t>> index_;
};

struct ColumnMap {
    std::string vehicle_id = "Vehicle_ID";
    std::string frame_id = "Frame_ID";
    std::string x = "Local_X";
    std::string y = "Local_Y";
    std::string velocity = "v_Vel";
    std::string acceleration = "v_Acc";
    std::string lane_id = "Lane_ID";
};

struct IngestOptions {
    ColumnMap columns;
    bool feet_to_meters = false;  // raw NGSIM exports use feet
};

struct IngestReport {
    TrajectoryDataset dataset;
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;  // non-finite, malformed, or duplicate rows
};

// Throws SchemaError naming a missing column, InvalidInput when no usable row
// remains, std::runtime_error when the file cannot be opened.
IngestReport ingest_trajectory_csv(const std::filesystem::path& path, const IngestOptions& options = {});
IngestReport parse_trajectory_csv(std::istream& in, const IngestOptions& options = {});

void write_trajectory_csv(std::ostream& out, const TrajectoryDataset& dataset);

// Zero-mean Gaussian noise on the (x, y) observations of the listed vehicles.
struct NoiseSpec {
    VehicleId vehicle_id = 0;
    double stddev = 0.0;  // meters
};
TrajectoryDataset apply_observation_noise(const TrajectoryDataset& clean,
                                          std::span<const NoiseSpec> noisy, std::mt19937_64& rng);

// Geometry of one training window in frames.
struct WindowSpec {
    std::size_t history_len = 10;
    std::size_t horizon = 10;
    std::size_t stride_frames = 5;  // 0.5 s between samples

    std::size_t history_frames() const noexcept { return (history_len - 1) * stride_frames; }
    std::size_t horizon_frames() const noexcept { return horizon * stride_frames; }
};

inline constexpr std::size_t kFeatureCount = 9;

// Builds one sample anchored at `track[anchor]` (the newest history point).
// Returns std::nullopt when the window would leave the track or cross a frame gap.
std::optional<TrajectorySample> make_sample(std::span<const TrajectoryRecord> track,
                                            std::size_t anchor, const WindowSpec& spec);

}  // namespace sfdl
