#pragma once

#include <cstddef>
#include <span>

#include "sfdl/waypoint.hpp"

namespace sfdl {

inline constexpr double kAccuracyThresholdMeters = 10.0;

// Mean squared Euclidean deviation over paired waypoints.
double metric_loss(std::span<const Waypoint> predictions, std::span<const Waypoint> observations);

// Mean Euclidean distance in meters.
double metric_prediction_error(std::span<const Waypoint> predictions,
                               std::span<const Waypoint> observations);

// Fraction of waypoints whose error is at most `threshold` meters.
double metric_prediction_accuracy(std::span<const Waypoint> predictions,
                                  std::span<const Waypoint> observations,
                                  double threshold = kAccuracyThresholdMeters);

// Alternative reading: consecutive runs of `horizon` waypoints form one
// trajectory, which counts as positive when its mean error is within threshold.
double trajectory_prediction_accuracy(std::span<const Waypoint> predictions,
                                      std::span<const Waypoint> observations, std::size_t horizon,
                                      double threshold = kAccuracyThresholdMeters);

}  // namespace sfdl
