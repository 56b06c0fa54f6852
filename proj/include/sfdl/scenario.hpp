#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sfdl/credibility.hpp"
#include "sfdl/dataset.hpp"
#include "sfdl/model.hpp"
#include "sfdl/swarm.hpp"

namespace sfdl {

inline constexpr int kScenarioSchemaVersion = 1;

enum class DataSource { synthetic, trajectory_csv };
enum class AccuracyMode { per_waypoint, per_trajectory };

struct CsvSource {
    std::filesystem::path path;
    IngestOptions options;
};

struct SyntheticOptions {
    // Scales every random acceleration and lateral sway; 0 gives constant-velocity tracks.
    double perturbation = 1.0;
    double speed_min = 20.0;  // m/s
    double speed_max = 30.0;  // m/s
    double vehicle_spacing = 15.0;  // m between consecutive vehicles of a group
    double lane_width = 3.7;        // m
    int lanes = 3;
};

struct Scenario {
    int schema_version = kScenarioSchemaVersion;
    std::string name = "custom";
    std::vector<std::size_t> group_layout;
    std::size_t total_vehicles = 0;
    std::size_t rounds = 50;
    std::uint64_t seed = 1;
    DataSource data_source = DataSource::synthetic;
    std::vector<NoiseSpec> noisy_clients;
    double distance_threshold = 100.0;  // m
    double visual_range = 100.0;        // m

    double frac = 0.8;              // comm-efficient client fraction
    std::size_t local_epochs = 1;   // comm-efficient local epochs per round
    CredibilityRule credibility_rule = CredibilityRule::product;
    MergeRule merge_rule = MergeRule::chain_average;
    AccuracyMode accuracy_mode = AccuracyMode::per_waypoint;
    double test_fraction = 0.1;
    std::size_t max_test_samples = 400;
    double round_duration_s = 2.0;  // data each vehicle collects per round
    bool persist_optimizer = false;  // carry optimizer moments across rounds instead of resetting them
    PredictorConfig predictor = default_simulation_predictor();
    SyntheticOptions synthetic;
    CsvSource csv;

    // Throws InvalidInput describing the first violated invariant.
    void validate() const;

    std::size_t round_frames() const;
    WindowSpec window() const;

    static PredictorConfig default_simulation_predictor();
};

// "high" {10, 6}, "medium" {6, 4}, "low" {2, 3}.
Scenario preset(const std::string& name);

// Scenario files are JSON objects carrying `schema_version: 1`. Unknown keys,
// wrong types, or a different version raise SchemaError; value-level
// violations raise InvalidInput.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string dump_scenario(const Scenario& scenario);

std::string to_string(DataSource source);
std::string to_string(AccuracyMode mode);
std::string to_string(MergeRule rule);
std::string to_string(Optimizer optimizer);
AccuracyMode parse_accuracy_mode(const std::string& name);

// Independent, reproducible generator for one named stochastic stream.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

// Vehicle ids are 1..total_vehicles, assigned group by group.
TrajectoryDataset generate_clean_tracks(const Scenario& scenario);

// Clean tracks with the scenario's observation noise applied.
TrajectoryDataset generate_synthetic(const Scenario& scenario);

}  // namespace sfdl
