#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sfdl/parameter_vector.hpp"
#include "sfdl/waypoint.hpp"

namespace sfdl {

// One training window. `history` is a row-major T x F feature matrix ordered
// oldest to newest; `target` holds the H future positions, expressed as
// displacements from the newest history position.
struct TrajectorySample {
    std::vector<double> history;
    std::vector<Waypoint> target;
};

enum class Optimizer { plain_gradient, adaptive_moment };

struct PredictorConfig {
    std::size_t history_len = 10;
    std::size_t input_features = 9;
    std::size_t horizon = 10;
    std::size_t hidden_width = 32;
    // Width of the bivariate-Gaussian head of the recurrent reference model.
    // Kept for data-format compatibility; the predictor emits (x, y) directly.
    std::size_t output_features = 5;
    double learning_rate = 1e-4;
    Optimizer optimizer = Optimizer::adaptive_moment;
    std::size_t batch_size = 8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    // Multiplies the raw network output, so weights stay O(1) while targets are in meters.
    double output_scale = 1.0;

    std::size_t input_width() const noexcept { return history_len * input_features; }
    std::size_t output_width() const noexcept { return 2 * horizon; }
    std::size_t parameter_count() const noexcept;

    // Throws InvalidInput on any nonpositive size or rate.
    void validate() const;
};

// First and second moment estimates for the adaptive-moment optimizer. Empty
// vectors mean "not yet initialized" and are sized on first use.
struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

// Uniform in [-0.1, 0.1].
ParameterVector initialize_parameters(const PredictorConfig& config, std::mt19937_64& rng);

// Two-layer fully connected network: flattened history -> ReLU hidden -> 2H outputs.
std::vector<Waypoint> predict(const ParameterVector& params, const TrajectorySample& sample,
                              const PredictorConfig& config);

// Mean over every (sample, horizon step) pair of the squared Euclidean error.
double loss(const ParameterVector& params, std::span<const TrajectorySample> batch,
            const PredictorConfig& config);

// Analytic gradient of `loss` by backpropagation.
ParameterVector gradient(const ParameterVector& params, std::span<const TrajectorySample> batch,
                         const PredictorConfig& config);

// One optimizer step over `batch`. For plain gradient descent this is exactly
// params - learning_rate * gradient; `state` is only touched by the adaptive path.
ParameterVector train_step(const ParameterVector& params, std::span<const TrajectorySample> batch,
                           const PredictorConfig& config, AdamState& state);
ParameterVector train_step(const ParameterVector& params, std::span<const TrajectorySample> batch,
                           const PredictorConfig& config);

// One pass over `samples` in consecutive minibatches of config.batch_size.
ParameterVector train_epoch(const ParameterVector& params, std::span<const TrajectorySample> samples,
                            const PredictorConfig& config, AdamState& state);

// Throws ConfigurationError unless params and sample shapes fit the architecture.
void check_shape(const ParameterVector& params, const PredictorConfig& config);
void check_shape(const TrajectorySample& sample, const PredictorConfig& config);

}  // namespace sfdl
