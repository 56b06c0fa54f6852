#include "sfdl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

void require_uploads(std::span<const Upload> uploads, const char* context) {
    if (uploads.empty()) throw InvalidInput(std::string(context) + ": no uploads");
    for (const auto& u : uploads) require_same_dim(uploads.front().params, u.params, context);
}

ParameterVector weighted_sum(std::span<const Upload> uploads, std::span<const double> weights) {
    ParameterVector out(uploads.front().params.dim());
    for (std::size_t k = 0; k < uploads.size(); ++k) {
        for (std::size_t i = 0; i < out.dim(); ++i) out[i] += weights[k] * uploads[k].params[i];
    }
    return out;
}

}  // namespace

std::string to_string(Framework framework) {
    switch (framework) {
        case Framework::sfdl: return "sfdl";
        case Framework::fed_avg: return "fed-avg";
        case Framework::comm_efficient: return "comm-efficient";
    }
    return "sfdl";
}

Framework parse_framework(const std::string& name) {
    if (name == "sfdl") return Framework::sfdl;
    if (name == "fed-avg") return Framework::fed_avg;
    if (name == "comm-efficient") return Framework::comm_efficient;
    throw InvalidInput("unknown framework '" + name + "'");
}

ParameterVector aggregate_sfdl(std::span<const Upload> uploads) {
    require_uploads(uploads, "aggregate_sfdl");
    std::vector<double> weights;
    weights.reserve(uploads.size());
    double total = 0.0;
    for (const auto& u : uploads) {
        if (!(u.weight >= 0.0) || !std::isfinite(u.weight)) {
            throw InvalidInput("aggregate_sfdl: weights must be nonnegative");
        }
        weights.push_back(u.weight);
        total += u.weight;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw InvalidInput("aggregate_sfdl: weights sum to " + std::to_string(total) + ", expected 1");
    }
    return weighted_sum(uploads, weights);
}

ParameterVector aggregate_fedavg(std::span<const Upload> uploads) {
    require_uploads(uploads, "aggregate_fedavg");
    const std::vector<double> weights(uploads.size(), 1.0 / static_cast<double>(uploads.size()));
    return weighted_sum(uploads, weights);
}

std::vector<VehicleId> select_clients(std::span<const VehicleId> clients, double frac,
                                      std::mt19937_64& rng) {
    if (clients.empty()) throw InvalidInput("select_clients: no clients");
    if (!(frac > 0.0 && frac <= 1.0)) throw InvalidInput("select_clients: frac must lie in (0, 1]");
    const auto n = clients.size();
    // Guard against 0.8 * 10 landing a hair above 8 before the ceiling.
    auto count = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9));
    count = std::clamp<std::size_t>(count, 1, n);

    std::vector<VehicleId> pool(clients.begin(), clients.end());
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

double global_objective(std::span<const double> group_losses, const WeightVector& weights) {
    if (group_losses.empty()) throw InvalidInput("global_objective: no groups");
    if (group_losses.size() != weights.weights.size()) {
        throw InvalidInput("global_objective: one weight per group loss required");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < group_losses.size(); ++i) total += weights.weights[i] * group_losses[i];
    return total / static_cast<double>(group_losses.size());
}

CentralServer::CentralServer(Framework framework, ParameterVector initial) {
    model_.framework = framework;
    model_.params = std::move(initial);
}

void CentralServer::submit(Upload upload) {
    if (upload.round != model_.round) {
        throw InvalidInput("stale upload from " + upload.source_id + ": trained on round " +
                           std::to_string(upload.round) + ", server is at round " +
                           std::to_string(model_.round));
    }
    require_same_dim(model_.params, upload.params, "CentralServer::submit");
    pending_.push_back(std::move(upload));
}

WeightVector CentralServer::aggregate() {
    if (pending_.empty()) throw InvalidInput("aggregate: no uploads received this round");
    WeightVector used;
    if (model_.framework == Framework::sfdl) {
        std::vector<double> raw;
        raw.reserve(pending_.size());
        for (const auto& u : pending_) raw.push_back(u.weight);
        used = normalize_weights(raw);
        for (std::size_t k = 0; k < pending_.size(); ++k) pending_[k].weight = used.weights[k];
        model_.params = aggregate_sfdl(pending_);
    } else {
        used.weights.assign(pending_.size(), 1.0 / static_cast<double>(pending_.size()));
        model_.params = aggregate_fedavg(pending_);
    }
    ++model_.round;
    pending_.clear();
    return used;
}

}  // namespace sfdl
