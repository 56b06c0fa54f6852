#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sfdl {

// Beta(p, q) reputation of one swarm group as tracked by its RSU, plus the
// group-size terms that feed the robustness score.
struct CredibilityState {
    double p = 1.0;
    double q = 1.0;
    std::size_t group_size = 1;
    std::size_t max_group_size = 1;

    friend bool operator==(const CredibilityState&, const CredibilityState&) = default;
};

struct WeightVector {
    std::vector<double> weights;
};

// How robustness and effectiveness combine into a single credibility score.
enum class CredibilityRule { product, mean, effectiveness_only };

inline constexpr double kRobustnessFloor = 0.01;

// log(n) / log(max(k, 2)), floored at kRobustnessFloor. Requires 1 <= n <= k.
double robustness(std::size_t group_size, std::size_t max_group_size);

// Relative loss improvement of the received model over the global model on
// the RSU test batch. std::nullopt when global_loss <= 0 (nothing to compare).
std::optional<double> effectiveness_delta(double global_loss, double received_loss);

// Conjugate Beta update: delta > 0 adds one positive observation, delta <= 0
// one negative, and a missing delta leaves the state as is.
CredibilityState observe(const CredibilityState& state, std::optional<double> delta);

// Posterior mean p / (p + q).
double effectiveness(const CredibilityState& state);

double credibility(const CredibilityState& state, CredibilityRule rule = CredibilityRule::product);

// C_i / sum(C). Throws InvalidInput on an empty list or any nonpositive entry.
WeightVector normalize_weights(std::span<const double> credibilities);

// Beta density on (0, 1), normalized through log-gamma.
double beta_pdf(double x, double p, double q);

CredibilityRule parse_credibility_rule(const std::string& name);
std::string to_string(CredibilityRule rule);

}  // namespace sfdl
