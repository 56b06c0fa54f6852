#include "sfdl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

using nlohmann::json;

constexpr std::uint64_t kStreamTracks = 1;
constexpr std::uint64_t kStreamNoise = 2;

void expect_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
    if (!object.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, value] : object.items()) {
        if (!allowed.contains(key)) throw SchemaError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_as(const json& object, const std::string& key, const std::string& where) {
    const auto& v = object.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw SchemaError(where + "." + key + " must be a string");
    } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw SchemaError(where + "." + key + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw SchemaError(where + "." + key + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned() && v.template get<std::int64_t>() < 0) {
                throw SchemaError(where + "." + key + " must be nonnegative");
            }
        }
    } else {
        if (!v.is_number()) throw SchemaError(where + "." + key + " must be a number");
    }
    return v.template get<T>();
}

template <typename T>
void read_optional(const json& object, const std::string& key, const std::string& where, T& out) {
    if (object.contains(key)) out = get_as<T>(object, key, where);
}

Optimizer parse_optimizer(const std::string& name) {
    if (name == "plain-gradient") return Optimizer::plain_gradient;
    if (name == "adaptive-moment") return Optimizer::adaptive_moment;
    throw SchemaError("unknown optimizer '" + name + "'");
}

MergeRule parse_merge_rule(const std::string& name) {
    if (name == "chain-average") return MergeRule::chain_average;
    if (name == "weighted-average") return MergeRule::weighted_average;
    if (name == "minimum") return MergeRule::minimum;
    if (name == "maximum") return MergeRule::maximum;
    if (name == "median") return MergeRule::median;
    throw SchemaError("unknown merge rule '" + name + "'");
}

DataSource parse_data_source(const std::string& name) {
    if (name == "synthetic") return DataSource::synthetic;
    if (name == "trajectory-csv") return DataSource::trajectory_csv;
    throw SchemaError("unknown data_source '" + name + "'");
}

Scenario from_json(const json& j) {
    expect_keys(j,
                {"schema_version", "name", "group_layout", "total_vehicles", "rounds", "seed",
                 "data_source", "noisy_clients", "distance_threshold", "visual_range", "frac",
                 "local_epochs", "credibility_rule", "merge_rule", "accuracy_mode", "test_fraction",
                 "max_test_samples", "round_duration_s", "persist_optimizer", "predictor", "synthetic", "csv"},
                "scenario");
    for (const char* required : {"schema_version", "total_vehicles", "rounds", "seed", "data_source"}) {
        if (!j.contains(required)) throw SchemaError(std::string("scenario is missing '") + required + "'");
    }
    Scenario s;
    s.schema_version = get_as<int>(j, "schema_version", "scenario");
    if (s.schema_version != kScenarioSchemaVersion) {
        throw SchemaError("unsupported schema_version " + std::to_string(s.schema_version));
    }
    read_optional(j, "name", "scenario", s.name);
    s.total_vehicles = get_as<std::size_t>(j, "total_vehicles", "scenario");
    s.rounds = get_as<std::size_t>(j, "rounds", "scenario");
    s.seed = get_as<std::uint64_t>(j, "seed", "scenario");
    s.data_source = parse_data_source(get_as<std::string>(j, "data_source", "scenario"));
    if (j.contains("group_layout")) {
        if (!j["group_layout"].is_array()) throw SchemaError("scenario.group_layout must be an array");
        for (const auto& size : j["group_layout"]) {
            if (!size.is_number_unsigned()) {
                throw SchemaError("scenario.group_layout entries must be nonnegative integers");
            }
            s.group_layout.push_back(size.get<std::size_t>());
        }
    } else if (s.data_source == DataSource::synthetic) {
        throw SchemaError("synthetic scenario is missing 'group_layout'");
    }
    if (j.contains("noisy_clients")) {
        if (!j["noisy_clients"].is_array()) throw SchemaError("scenario.noisy_clients must be an array");
        for (const auto& entry : j["noisy_clients"]) {
            expect_keys(entry, {"vehicle_id", "stddev"}, "noisy_clients entry");
            if (!entry.contains("vehicle_id") || !entry.contains("stddev")) {
                throw SchemaError("noisy_clients entry needs vehicle_id and stddev");
            }
            s.noisy_clients.push_back({get_as<VehicleId>(entry, "vehicle_id", "noisy_clients"),
                                       get_as<double>(entry, "stddev", "noisy_clients")});
        }
    }
    read_optional(j, "distance_threshold", "scenario", s.distance_threshold);
    read_optional(j, "visual_range", "scenario", s.visual_range);
    read_optional(j, "frac", "scenario", s.frac);
    read_optional(j, "local_epochs", "scenario", s.local_epochs);
    if (j.contains("credibility_rule")) {
        try {
            s.credibility_rule = parse_credibility_rule(get_as<std::string>(j, "credibility_rule", "scenario"));
        } catch (const InvalidInput& e) {
            throw SchemaError(e.what());
        }
    }
    if (j.contains("merge_rule")) s.merge_rule = parse_merge_rule(get_as<std::string>(j, "merge_rule", "scenario"));
    if (j.contains("accuracy_mode")) {
        try {
            s.accuracy_mode = parse_accuracy_mode(get_as<std::string>(j, "accuracy_mode", "scenario"));
        } catch (const InvalidInput& e) {
            throw SchemaError(e.what());
        }
    }
    read_optional(j, "test_fraction", "scenario", s.test_fraction);
    read_optional(j, "max_test_samples", "scenario", s.max_test_samples);
    read_optional(j, "round_duration_s", "scenario", s.round_duration_s);
    read_optional(j, "persist_optimizer", "scenario", s.persist_optimizer);

    if (j.contains("predictor")) {
        const auto& p = j["predictor"];
        expect_keys(p, {"hidden_width", "learning_rate", "optimizer", "batch_size", "output_scale"},
                    "predictor");
        read_optional(p, "hidden_width", "predictor", s.predictor.hidden_width);
        read_optional(p, "learning_rate", "predictor", s.predictor.learning_rate);
        read_optional(p, "batch_size", "predictor", s.predictor.batch_size);
        read_optional(p, "output_scale", "predictor", s.predictor.output_scale);
        if (p.contains("optimizer")) s.predictor.optimizer = parse_optimizer(get_as<std::string>(p, "optimizer", "predictor"));
    }
    if (j.contains("synthetic")) {
        const auto& g = j["synthetic"];
        expect_keys(g, {"perturbation", "speed_min", "speed_max", "vehicle_spacing", "lane_width", "lanes"},
                    "synthetic");
        read_optional(g, "perturbation", "synthetic", s.synthetic.perturbation);
        read_optional(g, "speed_min", "synthetic", s.synthetic.speed_min);
        read_optional(g, "speed_max", "synthetic", s.synthetic.speed_max);
        read_optional(g, "vehicle_spacing", "synthetic", s.synthetic.vehicle_spacing);
        read_optional(g, "lane_width", "synthetic", s.synthetic.lane_width);
        read_optional(g, "lanes", "synthetic", s.synthetic.lanes);
    }
    if (j.contains("csv")) {
        const auto& c = j["csv"];
        expect_keys(c, {"path", "feet_to_meters", "column_map"}, "csv");
        if (c.contains("path")) s.csv.path = get_as<std::string>(c, "path", "csv");
        read_optional(c, "feet_to_meters", "csv", s.csv.options.feet_to_meters);
        if (c.contains("column_map")) {
            const auto& m = c["column_map"];
            expect_keys(m, {"vehicle_id", "frame_id", "x", "y", "velocity", "acceleration", "lane_id"},
                        "csv.column_map");
            auto& cols = s.csv.options.columns;
            read_optional(m, "vehicle_id", "column_map", cols.vehicle_id);
            read_optional(m, "frame_id", "column_map", cols.frame_id);
            read_optional(m, "x", "column_map", cols.x);
            read_optional(m, "y", "column_map", cols.y);
            read_optional(m, "velocity", "column_map", cols.velocity);
            read_optional(m, "acceleration", "column_map", cols.acceleration);
            read_optional(m, "lane_id", "column_map", cols.lane_id);
        }
    }
    s.validate();
    return s;
}

}  // namespace

PredictorConfig Scenario::default_simulation_predictor() {
    PredictorConfig config;
    config.optimizer = Optimizer::adaptive_moment;
    config.learning_rate = 1e-3;
    config.batch_size = 8;
    config.output_scale = 10.0;
    return config;
}

void Scenario::validate() const {
    if (schema_version != kScenarioSchemaVersion) throw InvalidInput("unsupported schema_version");
    if (rounds < 1) throw InvalidInput("rounds must be at least 1");
    if (total_vehicles < 1) throw InvalidInput("total_vehicles must be at least 1");
    if (data_source == DataSource::synthetic || !group_layout.empty()) {
        if (group_layout.empty()) throw InvalidInput("group_layout must list at least one group");
        if (std::find(group_layout.begin(), group_layout.end(), std::size_t{0}) != group_layout.end()) {
            throw InvalidInput("group_layout entries must be positive");
        }
        const auto sum = std::accumulate(group_layout.begin(), group_layout.end(), std::size_t{0});
        if (sum != total_vehicles) {
            throw InvalidInput("group_layout sums to " + std::to_string(sum) + " but total_vehicles is " +
                               std::to_string(total_vehicles));
        }
    }
    if (data_source == DataSource::trajectory_csv && csv.path.empty()) {
        throw InvalidInput("trajectory-csv scenario needs csv.path");
    }
    if (!(distance_threshold > 0.0)) throw InvalidInput("distance_threshold must be positive");
    if (!(visual_range > 0.0)) throw InvalidInput("visual_range must be positive");
    if (!(frac > 0.0 && frac <= 1.0)) throw InvalidInput("frac must lie in (0, 1]");
    if (local_epochs < 1) throw InvalidInput("local_epochs must be at least 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidInput("test_fraction must lie in (0, 1)");
    if (max_test_samples < 1) throw InvalidInput("max_test_samples must be at least 1");
    if (!(round_duration_s > 0.0) || round_frames() < 1) {
        throw InvalidInput("round_duration_s must cover at least one frame");
    }
    for (const auto& noisy : noisy_clients) {
        if (!(noisy.stddev >= 0.0) || !std::isfinite(noisy.stddev)) {
            throw InvalidInput("noise stddev must be a finite nonnegative number");
        }
    }
    if (!(synthetic.perturbation >= 0.0) || !(synthetic.speed_min > 0.0) ||
        !(synthetic.speed_max >= synthetic.speed_min) || !(synthetic.vehicle_spacing > 0.0) ||
        !(synthetic.lane_width > 0.0) || synthetic.lanes < 1) {
        throw InvalidInput("synthetic generator options out of range");
    }
    predictor.validate();
    if (predictor.history_len != 10 || predictor.input_features != kFeatureCount) {
        throw InvalidInput("simulation predictor must consume 10 x 9 history windows");
    }
}

std::size_t Scenario::round_frames() const {
    return static_cast<std::size_t>(std::llround(round_duration_s / kFrameSeconds));
}

WindowSpec Scenario::window() const {
    WindowSpec spec;
    spec.history_len = predictor.history_len;
    spec.horizon = predictor.horizon;
    return spec;
}

Scenario preset(const std::string& name) {
    Scenario s;
    s.name = name;
    if (name == "high") {
        s.group_layout = {10, 6};
    } else if (name == "medium") {
        s.group_layout = {6, 4};
    } else if (name == "low") {
        s.group_layout = {2, 3};
    } else {
        throw InvalidInput("unknown preset '" + name + "' (expected high, medium or low)");
    }
    s.total_vehicles = std::accumulate(s.group_layout.begin(), s.group_layout.end(), std::size_t{0});
    return s;
}

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario schema violation: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

std::string dump_scenario(const Scenario& s) {
    json j;
    j["schema_version"] = s.schema_version;
    j["name"] = s.name;
    j["group_layout"] = s.group_layout;
    j["total_vehicles"] = s.total_vehicles;
    j["rounds"] = s.rounds;
    j["seed"] = s.seed;
    j["data_source"] = to_string(s.data_source);
    j["noisy_clients"] = json::array();
    for (const auto& n : s.noisy_clients) {
        j["noisy_clients"].push_back({{"vehicle_id", n.vehicle_id}, {"stddev", n.stddev}});
    }
    j["distance_threshold"] = s.distance_threshold;
    j["visual_range"] = s.visual_range;
    j["frac"] = s.frac;
    j["local_epochs"] = s.local_epochs;
    j["credibility_rule"] = to_string(s.credibility_rule);
    j["merge_rule"] = to_string(s.merge_rule);
    j["accuracy_mode"] = to_string(s.accuracy_mode);
    j["test_fraction"] = s.test_fraction;
    j["max_test_samples"] = s.max_test_samples;
    j["round_duration_s"] = s.round_duration_s;
    j["persist_optimizer"] = s.persist_optimizer;
    j["predictor"] = {{"hidden_width", s.predictor.hidden_width},
                      {"learning_rate", s.predictor.learning_rate},
                      {"optimizer", to_string(s.predictor.optimizer)},
                      {"batch_size", s.predictor.batch_size},
                      {"output_scale", s.predictor.output_scale}};
    j["synthetic"] = {{"perturbation", s.synthetic.perturbation},
                      {"speed_min", s.synthetic.speed_min},
                      {"speed_max", s.synthetic.speed_max},
                      {"vehicle_spacing", s.synthetic.vehicle_spacing},
                      {"lane_width", s.synthetic.lane_width},
                      {"lanes", s.synthetic.lanes}};
    if (s.data_source == DataSource::trajectory_csv) {
        const auto& c = s.csv.options.columns;
        j["csv"] = {{"path", s.csv.path.string()},
                    {"feet_to_meters", s.csv.options.feet_to_meters},
                    {"column_map",
                     {{"vehicle_id", c.vehicle_id}, {"frame_id", c.frame_id}, {"x", c.x}, {"y", c.y},
                      {"velocity", c.velocity}, {"acceleration", c.acceleration}, {"lane_id", c.lane_id}}}};
    }
    return j.dump(2) + "\n";
}

std::string to_string(DataSource source) {
    return source == DataSource::synthetic ? "synthetic" : "trajectory-csv";
}

std::string to_string(AccuracyMode mode) {
    return mode == AccuracyMode::per_waypoint ? "waypoint" : "trajectory";
}

AccuracyMode parse_accuracy_mode(const std::string& name) {
    if (name == "waypoint") return AccuracyMode::per_waypoint;
    if (name == "trajectory") return AccuracyMode::per_trajectory;
    throw InvalidInput("unknown accuracy mode '" + name + "' (expected waypoint or trajectory)");
}

std::string to_string(MergeRule rule) {
    switch (rule) {
        case MergeRule::chain_average: return "chain-average";
        case MergeRule::weighted_average: return "weighted-average";
        case MergeRule::minimum: return "minimum";
        case MergeRule::maximum: return "maximum";
        case MergeRule::median: return "median";
    }
    return "chain-average";
}

std::string to_string(Optimizer optimizer) {
    return optimizer == Optimizer::plain_gradient ? "plain-gradient" : "adaptive-moment";
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5fd1u};
    return std::mt19937_64(seq);
}

TrajectoryDataset generate_clean_tracks(const Scenario& scenario) {
    scenario.validate();
    const auto& opt = scenario.synthetic;
    auto rng = make_rng(scenario.seed, kStreamTracks);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const WindowSpec window = scenario.window();
    const std::size_t frames =
        window.history_frames() + scenario.rounds * scenario.round_frames() + window.horizon_frames() + 1;
    const double duration = static_cast<double>(frames) * kFrameSeconds;
    const double pert = opt.perturbation;

    // Group speed stays within [speed_min - 2, speed_max + 2]; each vehicle adds
    // a bounded sinusoidal longitudinal offset so a group stays chain-connected,
    // and groups start far enough apart that they cannot close the gap in the run.
    constexpr double kGroupAccel = 1.0;      // m/s^2, scaled by perturbation
    constexpr double kSpeedMargin = 2.0;     // m/s
    constexpr double kOffsetAmplitude = 5.0; // m, scaled by perturbation
    constexpr double kOffsetPeriod = 20.0;   // s
    constexpr double kSwayAmplitude = 0.3;   // m, scaled by perturbation
    constexpr double kSwayPeriod = 8.0;      // s
    const double offset_omega = 2.0 * M_PI / kOffsetPeriod;
    const double max_offset_speed = pert * kOffsetAmplitude * offset_omega;
    const double group_gap =
        500.0 + (opt.speed_max - opt.speed_min + 2.0 * kSpeedMargin + 2.0 * max_offset_speed) * duration;

    std::vector<TrajectoryRecord> records;
    records.reserve(scenario.total_vehicles * frames);
    const double dt = kFrameSeconds;
    VehicleId next_id = 1;
    double group_front = 0.0;

    for (std::size_t g = 0; g < scenario.group_layout.size(); ++g) {
        const std::size_t size = scenario.group_layout[g];
        const double lo = std::max(1.0, opt.speed_min - kSpeedMargin);
        const double hi = opt.speed_max + kSpeedMargin;

        // Shared group motion: piecewise-constant acceleration, integrated exactly per frame.
        std::vector<double> pos(frames), vel(frames), acc(frames);
        double y = 0.0;
        double v = opt.speed_min + (opt.speed_max - opt.speed_min) * unit(rng);
        double a = 0.0;
        std::size_t seg_left = 0;
        for (std::size_t f = 0; f < frames; ++f) {
            if (seg_left == 0) {
                seg_left = static_cast<std::size_t>((2.0 + 3.0 * unit(rng)) / dt);
                a = pert * kGroupAccel * (2.0 * unit(rng) - 1.0);
            }
            --seg_left;
            const double used = (v + a * dt > hi || v + a * dt < lo) ? 0.0 : a;
            pos[f] = y;
            vel[f] = v;
            acc[f] = used;
            y += v * dt + 0.5 * used * dt * dt;
            v += used * dt;
        }

        for (std::size_t j = 0; j < size; ++j) {
            const VehicleId id = next_id++;
            const int lane = static_cast<int>(j % static_cast<std::size_t>(opt.lanes)) + 1;
            const double lateral = (static_cast<double>(lane) - 0.5) * opt.lane_width;
            const double sway_phase = 2.0 * M_PI * unit(rng);
            const double offset_phase = 2.0 * M_PI * unit(rng);
            const double start = group_front - static_cast<double>(j) * opt.vehicle_spacing;
            const double amp = pert * kOffsetAmplitude;

            for (std::size_t f = 0; f < frames; ++f) {
                const double t = static_cast<double>(f) * dt;
                const double arg = offset_omega * t + offset_phase;
                const double x =
                    lateral + pert * kSwayAmplitude * std::sin(2.0 * M_PI * t / kSwayPeriod + sway_phase);
                const double along = start + pos[f] + amp * std::sin(arg);
                const double speed = vel[f] + amp * offset_omega * std::cos(arg);
                const double accel = acc[f] - amp * offset_omega * offset_omega * std::sin(arg);
                records.push_back({id, static_cast<std::int64_t>(f), x, along, speed, accel, lane});
            }
        }
        group_front -= group_gap;
    }
    return TrajectoryDataset(std::move(records));
}

TrajectoryDataset generate_synthetic(const Scenario& scenario) {
    const auto clean = generate_clean_tracks(scenario);
    auto rng = make_rng(scenario.seed, kStreamNoise);
    return apply_observation_noise(clean, scenario.noisy_clients, rng);
}

}  // namespace sfdl
