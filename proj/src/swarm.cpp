#include "sfdl/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

double distance(const Waypoint& a, const Waypoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void require_models(std::span<const ParameterVector> models, const char* context) {
    if (models.empty()) throw InvalidInput(std::string(context) + ": no models to merge");
    for (const auto& m : models) require_same_dim(models.front(), m, context);
}

template <typename Pick>
ParameterVector elementwise(std::span<const ParameterVector> models, const char* context, Pick pick) {
    require_models(models, context);
    const std::size_t dim = models.front().dim();
    ParameterVector out(dim);
    std::vector<double> column(models.size());
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < models.size(); ++k) column[k] = models[k][i];
        out[i] = pick(column);
    }
    return out;
}

// Minimal union-find for group formation.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

double environment_entry(const VehicleState& from, const VehicleState& to, double visual_range) {
    if (!(visual_range > 0.0)) throw InvalidInput("visual range must be positive");
    const double d = distance(from.position, to.position);
    if (d > visual_range) return 0.0;
    return 1.0 - (d * d) / (visual_range * visual_range);
}

EnvironmentMatrix environment_matrix(const VehicleState& vehicle,
                                     std::span<const VehicleState> neighbors, double visual_range) {
    EnvironmentMatrix env;
    const double hx = std::cos(vehicle.orientation);
    const double hy = std::sin(vehicle.orientation);
    for (const auto& other : neighbors) {
        if (other.id == vehicle.id) continue;
        const double entry = environment_entry(vehicle, other, visual_range);
        if (entry <= 0.0) continue;
        const double rx = other.position.x - vehicle.position.x;
        const double ry = other.position.y - vehicle.position.y;
        const double longitudinal = rx * hx + ry * hy;
        const double lateral = -rx * hy + ry * hx;
        double* slot = nullptr;
        if (std::abs(longitudinal) >= std::abs(lateral)) {
            slot = longitudinal >= 0.0 ? &env.front : &env.behind;
        } else {
            slot = lateral > 0.0 ? &env.left : &env.right;
        }
        *slot = std::max(*slot, entry);
    }
    return env;
}

std::vector<SwarmGroup> form_groups(std::span<const VehicleState> vehicles,
                                    double distance_threshold) {
    if (vehicles.empty()) throw InvalidInput("form_groups: no vehicles");
    if (!(distance_threshold > 0.0)) throw InvalidInput("form_groups: threshold must be positive");
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
            if (vehicles[i].id == vehicles[j].id) {
                throw InvalidInput("form_groups: duplicate vehicle id " + std::to_string(vehicles[i].id));
            }
        }
    }

    DisjointSets sets(vehicles.size());
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
            if (vehicles[i].task == vehicles[j].task &&
                distance(vehicles[i].position, vehicles[j].position) <= distance_threshold) {
                sets.unite(i, j);
            }
        }
    }

    std::map<std::size_t, SwarmGroup> by_root;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        auto& group = by_root[sets.find(i)];
        group.task = vehicles[i].task;
        group.members.push_back(vehicles[i].id);
    }
    std::vector<SwarmGroup> groups;
    groups.reserve(by_root.size());
    for (auto& [root, group] : by_root) {
        std::sort(group.members.begin(), group.members.end());
        groups.push_back(std::move(group));
    }
    std::sort(groups.begin(), groups.end(), [](const SwarmGroup& a, const SwarmGroup& b) {
        return a.members.front() < b.members.front();
    });
    return groups;
}

ParameterVector chain_merge_pairwise(const ParameterVector& incoming, const ParameterVector& local) {
    require_same_dim(incoming, local, "chain_merge_pairwise");
    ParameterVector out(local.dim());
    for (std::size_t i = 0; i < out.dim(); ++i) out[i] = (incoming[i] + local[i]) / 2.0;
    return out;
}

ParameterVector weighted_merge(std::span<const std::pair<ParameterVector, double>> models) {
    if (models.empty()) throw InvalidInput("weighted_merge: no models to merge");
    double total = 0.0;
    for (const auto& [model, gamma] : models) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw InvalidInput("weighted_merge: every gamma must be positive");
        }
        require_same_dim(models.front().first, model, "weighted_merge");
        total += gamma;
    }
    ParameterVector out(models.front().first.dim());
    for (const auto& [model, gamma] : models) {
        const double w = gamma / total;
        for (std::size_t i = 0; i < out.dim(); ++i) out[i] += w * model[i];
    }
    return out;
}

ParameterVector elementwise_min(std::span<const ParameterVector> models) {
    return elementwise(models, "elementwise_min",
                       [](std::vector<double>& c) { return *std::min_element(c.begin(), c.end()); });
}

ParameterVector elementwise_max(std::span<const ParameterVector> models) {
    return elementwise(models, "elementwise_max",
                       [](std::vector<double>& c) { return *std::max_element(c.begin(), c.end()); });
}

ParameterVector elementwise_median(std::span<const ParameterVector> models) {
    return elementwise(models, "elementwise_median", [](std::vector<double>& c) {
        std::sort(c.begin(), c.end());
        const std::size_t n = c.size();
        return n % 2 == 1 ? c[n / 2] : (c[n / 2 - 1] + c[n / 2]) / 2.0;
    });
}

std::vector<ParameterVector> chain_fold(std::span<const ParameterVector> trained,
                                        std::span<const double> gammas, MergeRule rule) {
    require_models(trained, "chain_fold");
    if (rule == MergeRule::weighted_average && gammas.size() != trained.size()) {
        throw InvalidInput("chain_fold: one gamma per model required");
    }
    std::vector<ParameterVector> chain;
    chain.reserve(trained.size());
    chain.push_back(trained.front());
    for (std::size_t k = 1; k < trained.size(); ++k) {
        const auto prefix = trained.first(k + 1);
        switch (rule) {
            case MergeRule::chain_average:
                chain.push_back(chain_merge_pairwise(trained[k], chain.back()));
                break;
            case MergeRule::weighted_average: {
                std::vector<std::pair<ParameterVector, double>> weighted;
                for (std::size_t j = 0; j <= k; ++j) weighted.emplace_back(trained[j], gammas[j]);
                chain.push_back(weighted_merge(weighted));
                break;
            }
            case MergeRule::minimum:
                chain.push_back(elementwise_min(prefix));
                break;
            case MergeRule::maximum:
                chain.push_back(elementwise_max(prefix));
                break;
            case MergeRule::median:
                chain.push_back(elementwise_median(prefix));
                break;
        }
    }
    return chain;
}

SwarmRoundResult swarm_round(const SwarmGroup& group, const VehicleRegistry& vehicles,
                             const ParameterVector& global_model, const PredictorConfig& config,
                             MergeRule rule) {
    if (group.members.empty()) throw InvalidInput("swarm_round: empty group");
    check_shape(global_model, config);

    SwarmRoundResult result;
    std::vector<double> gammas;
    for (VehicleId id : group.members) {
        const auto it = vehicles.find(id);
        if (it == vehicles.end()) {
            throw InvalidInput("swarm_round: vehicle " + std::to_string(id) + " is not registered");
        }
        const VehicleState& vehicle = it->second;
        if (vehicle.dataset.empty()) {
            result.skipped.push_back(id);
            continue;
        }
        AdamState state = vehicle.optimizer;
        result.trained_models.push_back(train_epoch(global_model, vehicle.dataset, config, state));
        result.optimizer_states.push_back(std::move(state));
        result.contributors.push_back(id);
        gammas.push_back(vehicle.gamma);
    }

    if (result.contributors.empty()) {
        result.group_model = global_model;
        return result;
    }
    result.chain_models = chain_fold(result.trained_models, gammas, rule);
    result.group_model = result.chain_models.back();
    result.intra_links = result.contributors.size() - 1;
    return result;
}

double group_loss_from_member_losses(std::span<const double> member_losses) {
    if (member_losses.empty()) throw InvalidInput("group_loss: group has no members");
    double total = 0.0;
    double previous = 0.0;
    for (double f : member_losses) {
        total += f + previous;
        previous = f;
    }
    return total / static_cast<double>(member_losses.size());
}

double group_loss(std::span<const ParameterVector> member_models,
                  std::span<const TrajectorySample> test_batch, const PredictorConfig& config) {
    if (test_batch.empty()) throw InvalidInput("group_loss: empty test batch");
    std::vector<double> losses;
    losses.reserve(member_models.size());
    for (const auto& model : member_models) losses.push_back(loss(model, test_batch, config));
    return group_loss_from_member_losses(losses);
}

}  // namespace sfdl
