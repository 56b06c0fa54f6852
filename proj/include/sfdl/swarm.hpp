#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfdl/model.hpp"
#include "sfdl/parameter_vector.hpp"
#include "sfdl/waypoint.hpp"

namespace sfdl {

using VehicleId = std::int64_t;

struct VehicleState {
    VehicleId id = 0;
    Waypoint position;
    double speed = 0.0;         // m/s
    double acceleration = 0.0;  // m/s^2
    int lane = 0;
    double orientation = 0.0;  // radians, heading of travel
    std::string task = "trajectory";
    std::vector<TrajectorySample> dataset;
    ParameterVector model;
    AdamState optimizer;
    double gamma = 1.0;
};

using VehicleRegistry = std::map<VehicleId, VehicleState>;

// Occupancy of the four directions around a vehicle, each entry the closeness
// 1 - d^2/R^2 of the nearest neighbor in that direction (0 if none within R).
struct EnvironmentMatrix {
    double right = 0.0;
    double left = 0.0;
    double behind = 0.0;
    double front = 0.0;
};

struct SwarmGroup {
    std::vector<VehicleId> members;  // ascending id; this is also the chain order
    std::string task;
    ParameterVector group_model;
};

enum class MergeRule { chain_average, weighted_average, minimum, maximum, median };

struct SwarmRoundResult {
    ParameterVector group_model;
    std::vector<VehicleId> contributors;
    std::vector<ParameterVector> trained_models;  // after local training, chain order
    std::vector<ParameterVector> chain_models;    // model each contributor holds after merging
    std::vector<AdamState> optimizer_states;
    std::vector<VehicleId> skipped;  // members without local data this round
    std::size_t intra_links = 0;

    bool has_upload() const noexcept { return !contributors.empty(); }
};

double environment_entry(const VehicleState& from, const VehicleState& to, double visual_range);

EnvironmentMatrix environment_matrix(const VehicleState& vehicle,
                                     std::span<const VehicleState> neighbors, double visual_range);

// Connected components of the graph linking same-task vehicles whose distance
// is at most `distance_threshold`. Groups are ordered by their smallest id.
std::vector<SwarmGroup> form_groups(std::span<const VehicleState> vehicles,
                                    double distance_threshold);

ParameterVector chain_merge_pairwise(const ParameterVector& incoming, const ParameterVector& local);

// Sum(gamma_k * m_k) / Sum(gamma_k).
ParameterVector weighted_merge(std::span<const std::pair<ParameterVector, double>> models);

ParameterVector elementwise_min(std::span<const ParameterVector> models);
ParameterVector elementwise_max(std::span<const ParameterVector> models);
ParameterVector elementwise_median(std::span<const ParameterVector> models);

// Folds already-trained models in chain order under `rule`; returns the model
// each position holds after its merge (the last one is the group model).
std::vector<ParameterVector> chain_fold(std::span<const ParameterVector> trained,
                                        std::span<const double> gammas, MergeRule rule);

// Every member restarts from `global_model`, trains one local epoch, then the
// chain merge runs in member order.
SwarmRoundResult swarm_round(const SwarmGroup& group, const VehicleRegistry& vehicles,
                             const ParameterVector& global_model, const PredictorConfig& config,
                             MergeRule rule = MergeRule::chain_average);

// (1/n) * sum_i [f_i + f_{i-1}], with f_0's predecessor taken as zero.
double group_loss_from_member_losses(std::span<const double> member_losses);

double group_loss(std::span<const ParameterVector> member_models,
                  std::span<const TrajectorySample> test_batch, const PredictorConfig& config);

}  // namespace sfdl
