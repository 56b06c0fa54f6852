#include "sfdl/credibility.hpp"

#include <algorithm>
#include <cmath>

#include "sfdl/errors.hpp"

namespace sfdl {

double robustness(std::size_t group_size, std::size_t max_group_size) {
    if (group_size < 1 || max_group_size < 1) {
        throw InvalidInput("robustness: group sizes must be at least 1");
    }
    if (group_size > max_group_size) {
        throw InvalidInput("robustness: group size " + std::to_string(group_size) +
                           " exceeds max group size " + std::to_string(max_group_size));
    }
    const double base = static_cast<double>(std::max<std::size_t>(max_group_size, 2));
    const double raw = std::log(static_cast<double>(group_size)) / std::log(base);
    return std::max(raw, kRobustnessFloor);
}

std::optional<double> effectiveness_delta(double global_loss, double received_loss) {
    if (!(global_loss > 0.0) || !std::isfinite(global_loss) || !std::isfinite(received_loss)) {
        return std::nullopt;
    }
    return (global_loss - received_loss) / global_loss;
}

CredibilityState observe(const CredibilityState& state, std::optional<double> delta) {
    CredibilityState next = state;
    if (!delta) return next;
    if (*delta > 0.0) {
        next.p += 1.0;
    } else {
        next.q += 1.0;
    }
    return next;
}

double effectiveness(const CredibilityState& state) { return state.p / (state.p + state.q); }

double credibility(const CredibilityState& state, CredibilityRule rule) {
    const double e = effectiveness(state);
    switch (rule) {
        case CredibilityRule::product:
            return robustness(state.group_size, state.max_group_size) * e;
        case CredibilityRule::mean:
            return 0.5 * (robustness(state.group_size, state.max_group_size) + e);
        case CredibilityRule::effectiveness_only:
            return e;
    }
    return e;
}

WeightVector normalize_weights(std::span<const double> credibilities) {
    if (credibilities.empty()) throw InvalidInput("normalize_weights: empty credibility list");
    double total = 0.0;
    for (double c : credibilities) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw InvalidInput("normalize_weights: credibilities must be positive and finite");
        }
        total += c;
    }
    WeightVector out;
    out.weights.reserve(credibilities.size());
    for (double c : credibilities) out.weights.push_back(c / total);
    return out;
}

double beta_pdf(double x, double p, double q) {
    if (!(x > 0.0 && x < 1.0)) throw InvalidInput("beta_pdf: x must lie in (0, 1)");
    if (!(p > 0.0) || !(q > 0.0)) throw InvalidInput("beta_pdf: p and q must be positive");
    const double log_beta = std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
    return std::exp((p - 1.0) * std::log(x) + (q - 1.0) * std::log1p(-x) - log_beta);
}

CredibilityRule parse_credibility_rule(const std::string& name) {
    if (name == "product") return CredibilityRule::product;
    if (name == "mean") return CredibilityRule::mean;
    if (name == "effectiveness-only") return CredibilityRule::effectiveness_only;
    throw InvalidInput("unknown credibility rule '" + name + "'");
}

std::string to_string(CredibilityRule rule) {
    switch (rule) {
        case CredibilityRule::product: return "product";
        case CredibilityRule::mean: return "mean";
        case CredibilityRule::effectiveness_only: return "effectiveness-only";
    }
    return "product";
}

}  // namespace sfdl
