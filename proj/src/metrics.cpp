#include "sfdl/metrics.hpp"

#include <cmath>
#include <string>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

void require_pairs(std::span<const Waypoint> predictions, std::span<const Waypoint> observations) {
    if (predictions.size() != observations.size()) {
        throw InvalidInput("metric: " + std::to_string(predictions.size()) + " predictions vs " +
                           std::to_string(observations.size()) + " observations");
    }
    if (predictions.empty()) throw InvalidInput("metric: empty sequence");
}

double distance(const Waypoint& a, const Waypoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double metric_loss(std::span<const Waypoint> predictions, std::span<const Waypoint> observations) {
    require_pairs(predictions, observations);
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double dx = predictions[i].x - observations[i].x;
        const double dy = predictions[i].y - observations[i].y;
        total += dx * dx + dy * dy;
    }
    return total / static_cast<double>(predictions.size());
}

double metric_prediction_error(std::span<const Waypoint> predictions,
                               std::span<const Waypoint> observations) {
    require_pairs(predictions, observations);
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        total += distance(predictions[i], observations[i]);
    }
    return total / static_cast<double>(predictions.size());
}

double metric_prediction_accuracy(std::span<const Waypoint> predictions,
                                  std::span<const Waypoint> observations, double threshold) {
    require_pairs(predictions, observations);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (distance(predictions[i], observations[i]) <= threshold) ++positives;
    }
    return static_cast<double>(positives) / static_cast<double>(predictions.size());
}

double trajectory_prediction_accuracy(std::span<const Waypoint> predictions,
                                      std::span<const Waypoint> observations, std::size_t horizon,
                                      double threshold) {
    require_pairs(predictions, observations);
    if (horizon == 0 || predictions.size() % horizon != 0) {
        throw InvalidInput("trajectory accuracy: sequence length is not a multiple of the horizon");
    }
    const std::size_t trajectories = predictions.size() / horizon;
    std::size_t positives = 0;
    for (std::size_t t = 0; t < trajectories; ++t) {
        const auto error = metric_prediction_error(predictions.subspan(t * horizon, horizon),
                                                   observations.subspan(t * horizon, horizon));
        if (error <= threshold) ++positives;
    }
    return static_cast<double>(positives) / static_cast<double>(trajectories);
}

}  // namespace sfdl
