#include "sfdl/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

// Offsets of the four parameter blocks inside the flat vector:
// [W1 hidden x in][b1 hidden][W2 out x hidden][b2 out].
struct Layout {
    std::size_t in;
    std::size_t hidden;
    std::size_t out;
    std::size_t w1;
    std::size_t b1;
    std::size_t w2;
    std::size_t b2;
    std::size_t total;

    explicit Layout(const PredictorConfig& c)
        : in(c.input_width()), hidden(c.hidden_width), out(c.output_width()) {
        w1 = 0;
        b1 = w1 + hidden * in;
        w2 = b1 + hidden;
        b2 = w2 + out * hidden;
        total = b2 + out;
    }
};

struct Activations {
    std::vector<double> pre_hidden;
    std::vector<double> hidden;
    std::vector<double> output;
};

Activations forward(std::span<const double> w, std::span<const double> x, const Layout& l,
                    double scale) {
    Activations a;
    a.pre_hidden.resize(l.hidden);
    a.hidden.resize(l.hidden);
    a.output.resize(l.out);
    for (std::size_t j = 0; j < l.hidden; ++j) {
        double z = w[l.b1 + j];
        const double* row = &w[l.w1 + j * l.in];
        for (std::size_t i = 0; i < l.in; ++i) z += row[i] * x[i];
        a.pre_hidden[j] = z;
        a.hidden[j] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t o = 0; o < l.out; ++o) {
        double z = w[l.b2 + o];
        const double* row = &w[l.w2 + o * l.hidden];
        for (std::size_t j = 0; j < l.hidden; ++j) z += row[j] * a.hidden[j];
        a.output[o] = scale * z;
    }
    return a;
}

void require_batch(std::span<const TrajectorySample> batch) {
    if (batch.empty()) throw InvalidInput("batch must contain at least one sample");
}

}  // namespace

std::size_t PredictorConfig::parameter_count() const noexcept { return Layout(*this).total; }

void PredictorConfig::validate() const {
    if (history_len == 0 || input_features == 0 || horizon == 0 || hidden_width == 0 ||
        output_features == 0) {
        throw InvalidInput("predictor sizes must be positive");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidInput("learning_rate must be a finite nonnegative number");
    }
    if (batch_size == 0) throw InvalidInput("batch_size must be at least 1");
    if (!(output_scale > 0.0)) throw InvalidInput("output_scale must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
        !(adam_epsilon > 0.0)) {
        throw InvalidInput("adaptive-moment hyperparameters out of range");
    }
}

void check_shape(const ParameterVector& params, const PredictorConfig& config) {
    if (params.dim() != config.parameter_count()) {
        throw ConfigurationError("parameter vector has dim " + std::to_string(params.dim()) +
                                 ", architecture expects " +
                                 std::to_string(config.parameter_count()));
    }
}

void check_shape(const TrajectorySample& sample, const PredictorConfig& config) {
    if (sample.history.size() != config.input_width()) {
        throw ConfigurationError("sample history has " + std::to_string(sample.history.size()) +
                                 " entries, architecture expects " +
                                 std::to_string(config.input_width()));
    }
    if (!sample.target.empty() && sample.target.size() != config.horizon) {
        throw ConfigurationError("sample target has " + std::to_string(sample.target.size()) +
                                 " waypoints, architecture expects " +
                                 std::to_string(config.horizon));
    }
}

ParameterVector initialize_parameters(const PredictorConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    ParameterVector params(config.parameter_count());
    for (double& v : params) v = dist(rng);
    return params;
}

std::vector<Waypoint> predict(const ParameterVector& params, const TrajectorySample& sample,
                              const PredictorConfig& config) {
    check_shape(params, config);
    check_shape(sample, config);
    const Layout layout(config);
    const auto act = forward(params.values(), sample.history, layout, config.output_scale);
    std::vector<Waypoint> out(config.horizon);
    for (std::size_t h = 0; h < config.horizon; ++h) {
        out[h] = {act.output[2 * h], act.output[2 * h + 1]};
    }
    return out;
}

double loss(const ParameterVector& params, std::span<const TrajectorySample> batch,
            const PredictorConfig& config) {
    require_batch(batch);
    check_shape(params, config);
    const Layout layout(config);
    double total = 0.0;
    for (const auto& sample : batch) {
        check_shape(sample, config);
        if (sample.target.size() != config.horizon) {
            throw ConfigurationError("training sample is missing its target");
        }
        const auto act = forward(params.values(), sample.history, layout, config.output_scale);
        for (std::size_t h = 0; h < config.horizon; ++h) {
            const double dx = act.output[2 * h] - sample.target[h].x;
            const double dy = act.output[2 * h + 1] - sample.target[h].y;
            total += dx * dx + dy * dy;
        }
    }
    return total / static_cast<double>(batch.size() * config.horizon);
}

ParameterVector gradient(const ParameterVector& params, std::span<const TrajectorySample> batch,
                         const PredictorConfig& config) {
    require_batch(batch);
    check_shape(params, config);
    const Layout l(config);
    const auto w = params.values();
    ParameterVector grad(l.total);
    auto g = grad.values();
    const double norm = 1.0 / static_cast<double>(batch.size() * config.horizon);
    std::vector<double> d_out(l.out);
    std::vector<double> d_hidden(l.hidden);

    for (const auto& sample : batch) {
        check_shape(sample, config);
        if (sample.target.size() != config.horizon) {
            throw ConfigurationError("training sample is missing its target");
        }
        const auto act = forward(w, sample.history, l, config.output_scale);
        for (std::size_t h = 0; h < config.horizon; ++h) {
            d_out[2 * h] = 2.0 * norm * (act.output[2 * h] - sample.target[h].x);
            d_out[2 * h + 1] = 2.0 * norm * (act.output[2 * h + 1] - sample.target[h].y);
        }
        // The output scale sits after the affine map, so it multiplies every
        // upstream derivative once.
        for (double& d : d_out) d *= config.output_scale;

        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (std::size_t o = 0; o < l.out; ++o) {
            g[l.b2 + o] += d_out[o];
            for (std::size_t j = 0; j < l.hidden; ++j) {
                g[l.w2 + o * l.hidden + j] += d_out[o] * act.hidden[j];
                d_hidden[j] += d_out[o] * w[l.w2 + o * l.hidden + j];
            }
        }
        for (std::size_t j = 0; j < l.hidden; ++j) {
            if (act.pre_hidden[j] <= 0.0) continue;
            const double d = d_hidden[j];
            g[l.b1 + j] += d;
            double* row = &g[l.w1 + j * l.in];
            for (std::size_t i = 0; i < l.in; ++i) row[i] += d * sample.history[i];
        }
    }
    return grad;
}

ParameterVector train_step(const ParameterVector& params, std::span<const TrajectorySample> batch,
                           const PredictorConfig& config, AdamState& state) {
    if (!params.all_finite()) {
        const auto it = std::find_if(params.begin(), params.end(),
                                     [](double v) { return !std::isfinite(v); });
        throw NumericError("non-finite parameter before training step",
                           static_cast<std::size_t>(it - params.begin()));
    }
    const auto grad = gradient(params, batch, config);
    for (std::size_t i = 0; i < grad.dim(); ++i) {
        if (!std::isfinite(grad[i])) throw NumericError("non-finite gradient", i);
    }

    ParameterVector next = params;
    const double lr = config.learning_rate;
    if (config.optimizer == Optimizer::plain_gradient) {
        for (std::size_t i = 0; i < next.dim(); ++i) next[i] = params[i] - lr * grad[i];
    } else {
        if (state.first_moment.size() != params.dim()) {
            state.first_moment.assign(params.dim(), 0.0);
            state.second_moment.assign(params.dim(), 0.0);
            state.step = 0;
        }
        ++state.step;
        const double b1 = config.adam_beta1;
        const double b2 = config.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
        for (std::size_t i = 0; i < next.dim(); ++i) {
            const double gi = grad[i];
            state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * gi;
            state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * gi * gi;
            const double m_hat = state.first_moment[i] / c1;
            const double v_hat = state.second_moment[i] / c2;
            next[i] = params[i] - lr * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
    }
    for (std::size_t i = 0; i < next.dim(); ++i) {
        if (!std::isfinite(next[i])) throw NumericError("non-finite parameter after update", i);
    }
    return next;
}

ParameterVector train_step(const ParameterVector& params, std::span<const TrajectorySample> batch,
                           const PredictorConfig& config) {
    AdamState fresh;
    return train_step(params, batch, config, fresh);
}

ParameterVector train_epoch(const ParameterVector& params, std::span<const TrajectorySample> samples,
                            const PredictorConfig& config, AdamState& state) {
    ParameterVector current = params;
    for (std::size_t start = 0; start < samples.size(); start += config.batch_size) {
        const std::size_t count = std::min(config.batch_size, samples.size() - start);
        current = train_step(current, samples.subspan(start, count), config, state);
    }
    return current;
}

}  // namespace sfdl
