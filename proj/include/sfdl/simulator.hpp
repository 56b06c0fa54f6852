#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfdl/credibility.hpp"
#include "sfdl/dataset.hpp"
#include "sfdl/federation.hpp"
#include "sfdl/scenario.hpp"
#include "sfdl/swarm.hpp"

namespace sfdl {

// Link and byte counts at 4 bytes per parameter. Bytes cover the
// edge-to-global channel: one model up and one model down per link.
struct LinkLedger {
    std::uint64_t intra_group_links = 0;
    std::uint64_t edge_to_global_links = 0;
    std::uint64_t total_two_way_links = 0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;

    LinkLedger& operator+=(const LinkLedger& other);
    friend bool operator==(const LinkLedger&, const LinkLedger&) = default;
};

inline constexpr std::uint64_t kBytesPerParameter = 4;

LinkLedger round_links(std::uint64_t intra, std::uint64_t edge_to_global, std::size_t dim);

struct GroupReport {
    std::string group_id;
    std::vector<VehicleId> members;
    double p = 1.0;
    double q = 1.0;
    double weight = 0.0;
    std::optional<double> delta;  // effectiveness comparison, absent on the first round
};

struct RoundMetrics {
    Framework framework = Framework::sfdl;
    std::size_t round = 0;
    double loss = 0.0;
    double prediction_error = 0.0;
    double prediction_accuracy = 0.0;
    double global_objective = 0.0;
    std::size_t participants = 0;
    LinkLedger links;       // this round
    LinkLedger cumulative;  // since round 0
    std::vector<GroupReport> groups;
    std::vector<double> upload_weights;
    std::vector<VehicleId> skipped;
    std::string global_digest;
    std::string batch_digest;
    bool aborted = false;
    std::string diagnostic;
};

// Quality of `params` on `samples` under the three evaluation indicators.
struct Evaluation {
    double loss = 0.0;
    double prediction_error = 0.0;
    double prediction_accuracy = 0.0;
};
Evaluation evaluate(const ParameterVector& params, std::span<const TrajectorySample> samples,
                    const PredictorConfig& config, AccuracyMode mode = AccuracyMode::per_waypoint);

// One scenario run. All frameworks share the same tracks, per-round batches,
// held-out test slice and initial global model.
class Experiment {
public:
    Experiment(Scenario scenario, std::vector<Framework> frameworks);

    // Uses `observed` for training and `clean` for the held-out test slice.
    Experiment(Scenario scenario, std::vector<Framework> frameworks, TrajectoryDataset observed,
               TrajectoryDataset clean);

    const Scenario& scenario() const noexcept { return scenario_; }
    std::span<const Framework> frameworks() const noexcept { return frameworks_; }
    std::size_t round() const noexcept { return round_; }
    bool finished() const noexcept { return round_ >= scenario_.rounds; }
    std::span<const VehicleId> vehicle_ids() const noexcept { return vehicle_ids_; }
    std::span<const TrajectorySample> test_set() const noexcept { return test_set_; }
    const ParameterVector& initial_model() const noexcept { return initial_model_; }

    // Local training windows of every vehicle for `round`, held-out windows removed.
    std::map<VehicleId, std::vector<TrajectorySample>> round_batches(std::size_t round) const;

    // Vehicle kinematics at the end of `round`; ids with no record yet are absent.
    std::vector<VehicleState> positions(std::size_t round) const;

    const GlobalModel& global_model(Framework framework) const;
    const std::map<std::string, CredibilityState>& credibility(Framework framework) const;

    // Executes the next round for every framework. A failing framework gets
    // an aborted record and keeps its previous global model.
    std::vector<RoundMetrics> run_round();

private:
    struct FrameworkState {
        Framework framework;
        CentralServer server;
        std::map<VehicleId, AdamState> optimizers;
        std::map<std::string, CredibilityState> credibility;
        LinkLedger cumulative;
        std::mt19937_64 selection_rng;
    };

    void setup(TrajectoryDataset observed, TrajectoryDataset clean);
    RoundMetrics run_framework(FrameworkState& state, const std::vector<VehicleState>& roster,
                               const std::map<VehicleId, std::vector<TrajectorySample>>& batches);
    RoundMetrics run_sfdl(FrameworkState& state, const std::vector<VehicleState>& roster,
                          const std::map<VehicleId, std::vector<TrajectorySample>>& batches);
    RoundMetrics run_baseline(FrameworkState& state, const std::vector<VehicleState>& roster,
                              const std::map<VehicleId, std::vector<TrajectorySample>>& batches);
    FrameworkState& state_for(Framework framework);
    const FrameworkState& state_for(Framework framework) const;

    Scenario scenario_;
    std::vector<Framework> frameworks_;
    std::size_t round_ = 0;
    std::int64_t first_frame_ = 0;
    TrajectoryDataset observed_;
    std::vector<VehicleId> vehicle_ids_;
    std::map<VehicleId, std::vector<std::int64_t>> held_out_;  // anchor frames, sorted
    std::vector<TrajectorySample> test_set_;
    ParameterVector initial_model_;
    std::vector<FrameworkState> states_;
};

struct ExperimentReport {
    Scenario scenario;
    std::vector<Framework> frameworks;
    std::vector<RoundMetrics> records;  // round-major, framework order within a round
};

// Runs every round; `on_record` sees each record as soon as it exists.
// Setup failures propagate; per-round failures outside a framework carry the round index.
ExperimentReport run_experiment(const Scenario& scenario, std::span<const Framework> frameworks,
                                const std::function<void(const RoundMetrics&)>& on_record = {});

// Loads the scenario's data source (synthetic or CSV) into observed and clean datasets.
std::pair<TrajectoryDataset, TrajectoryDataset> load_scenario_data(const Scenario& scenario);

std::string group_key(const SwarmGroup& group);

}  // namespace sfdl
