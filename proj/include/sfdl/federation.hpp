#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sfdl/credibility.hpp"
#include "sfdl/parameter_vector.hpp"
#include "sfdl/swarm.hpp"

namespace sfdl {

enum class Framework { sfdl, fed_avg, comm_efficient };

std::string to_string(Framework framework);
Framework parse_framework(const std::string& name);

struct GlobalModel {
    ParameterVector params;
    std::uint64_t round = 0;
    Framework framework = Framework::sfdl;
};

struct Upload {
    std::string source_id;
    ParameterVector params;
    double weight = 1.0;
    std::uint64_t round = 0;  // global round the uploader trained from
};

// sum_k weight_k * params_k. Weights must already sum to 1 (within 1e-6).
ParameterVector aggregate_sfdl(std::span<const Upload> uploads);

// Unweighted mean; evaluated as aggregate_sfdl with weights 1/K.
ParameterVector aggregate_fedavg(std::span<const Upload> uploads);

// ceil(frac * |clients|) distinct clients drawn uniformly without replacement,
// returned in ascending order.
std::vector<VehicleId> select_clients(std::span<const VehicleId> clients, double frac,
                                      std::mt19937_64& rng);

// (1/|SL|) * sum_i weight_i * group_loss_i.
double global_objective(std::span<const double> group_losses, const WeightVector& weights);

// Single logical aggregator for one framework. Uploads are buffered and
// folded atomically by aggregate(), which advances the round by one.
class CentralServer {
public:
    CentralServer(Framework framework, ParameterVector initial);

    const GlobalModel& model() const noexcept { return model_; }
    std::span<const Upload> pending() const noexcept { return pending_; }

    // Throws InvalidInput for an upload tagged with another round, and
    // ConfigurationError for a dim mismatch.
    void submit(Upload upload);

    // For sfdl the buffered weights are raw credibilities and are normalized
    // over whoever actually uploaded. Returns the normalized weights used.
    WeightVector aggregate();

    // Drops buffered uploads of a round that will not be aggregated.
    void discard_pending() noexcept { pending_.clear(); }

private:
    GlobalModel model_;
    std::vector<Upload> pending_;
};

}  // namespace sfdl
