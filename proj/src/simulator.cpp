#include "sfdl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>

#include "sfdl/errors.hpp"
#include "sfdl/metrics.hpp"

namespace sfdl {
namespace {

constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamTestSplit = 3;
constexpr std::uint64_t kStreamInit = 4;
constexpr std::uint64_t kStreamSelection = 5;

const TrajectoryRecord* find_frame(std::span<const TrajectoryRecord> track, std::int64_t frame,
                                   std::size_t* index = nullptr) {
    const auto it = std::lower_bound(track.begin(), track.end(), frame,
                                     [](const TrajectoryRecord& r, std::int64_t f) { return r.frame_id < f; });
    if (it == track.end() || it->frame_id != frame) return nullptr;
    if (index) *index = static_cast<std::size_t>(it - track.begin());
    return &*it;
}

std::uint64_t digest_batches(const VehicleRegistry& registry) {
    std::uint64_t hash = kDigestSeed;
    for (const auto& [id, vehicle] : registry) {
        const double tag = static_cast<double>(id);
        hash = digest_values(std::span<const double>(&tag, 1), hash);
        for (const auto& sample : vehicle.dataset) {
            hash = digest_values(sample.history, hash);
            for (const auto& w : sample.target) {
                const double xy[2] = {w.x, w.y};
                hash = digest_values(xy, hash);
            }
        }
    }
    return hash;
}

void fill_evaluation(RoundMetrics& metrics, const Evaluation& e) {
    metrics.loss = e.loss;
    metrics.prediction_error = e.prediction_error;
    metrics.prediction_accuracy = e.prediction_accuracy;
}

}  // namespace

LinkLedger& LinkLedger::operator+=(const LinkLedger& other) {
    intra_group_links += other.intra_group_links;
    edge_to_global_links += other.edge_to_global_links;
    total_two_way_links += other.total_two_way_links;
    bytes_up += other.bytes_up;
    bytes_down += other.bytes_down;
    return *this;
}

LinkLedger round_links(std::uint64_t intra, std::uint64_t edge_to_global, std::size_t dim) {
    LinkLedger ledger;
    ledger.intra_group_links = intra;
    ledger.edge_to_global_links = edge_to_global;
    ledger.total_two_way_links = intra + edge_to_global;
    ledger.bytes_up = edge_to_global * dim * kBytesPerParameter;
    ledger.bytes_down = ledger.bytes_up;
    return ledger;
}

Evaluation evaluate(const ParameterVector& params, std::span<const TrajectorySample> samples,
                    const PredictorConfig& config, AccuracyMode mode) {
    if (samples.empty()) throw InvalidInput("evaluate: empty sample set");
    std::vector<Waypoint> predicted;
    std::vector<Waypoint> observed;
    predicted.reserve(samples.size() * config.horizon);
    observed.reserve(samples.size() * config.horizon);
    for (const auto& sample : samples) {
        const auto p = predict(params, sample, config);
        predicted.insert(predicted.end(), p.begin(), p.end());
        observed.insert(observed.end(), sample.target.begin(), sample.target.end());
    }
    Evaluation e;
    e.loss = metric_loss(predicted, observed);
    e.prediction_error = metric_prediction_error(predicted, observed);
    e.prediction_accuracy = mode == AccuracyMode::per_waypoint
                                ? metric_prediction_accuracy(predicted, observed)
                                : trajectory_prediction_accuracy(predicted, observed, config.horizon);
    return e;
}

std::string group_key(const SwarmGroup& group) {
    if (group.members.empty()) throw InvalidInput("group_key: empty group");
    return group.task + ":" + std::to_string(group.members.front());
}

std::pair<TrajectoryDataset, TrajectoryDataset> load_scenario_data(const Scenario& scenario) {
    scenario.validate();
    TrajectoryDataset clean;
    if (scenario.data_source == DataSource::synthetic) {
        clean = generate_clean_tracks(scenario);
    } else {
        clean = ingest_trajectory_csv(scenario.csv.path, scenario.csv.options).dataset;
    }
    auto rng = make_rng(scenario.seed, kStreamNoise);
    auto observed = apply_observation_noise(clean, scenario.noisy_clients, rng);
    return {std::move(observed), std::move(clean)};
}

Experiment::Experiment(Scenario scenario, std::vector<Framework> frameworks)
    : scenario_(std::move(scenario)), frameworks_(std::move(frameworks)) {
    auto [observed, clean] = load_scenario_data(scenario_);
    setup(std::move(observed), std::move(clean));
}

Experiment::Experiment(Scenario scenario, std::vector<Framework> frameworks, TrajectoryDataset observed,
                       TrajectoryDataset clean)
    : scenario_(std::move(scenario)), frameworks_(std::move(frameworks)) {
    scenario_.validate();
    setup(std::move(observed), std::move(clean));
}

void Experiment::setup(TrajectoryDataset observed, TrajectoryDataset clean) {
    if (frameworks_.empty()) throw InvalidInput("at least one framework is required");
    std::sort(frameworks_.begin(), frameworks_.end());
    frameworks_.erase(std::unique(frameworks_.begin(), frameworks_.end()), frameworks_.end());

    auto ids = observed.vehicle_ids();
    if (ids.size() < scenario_.total_vehicles) {
        throw InvalidInput("dataset has " + std::to_string(ids.size()) + " vehicles, scenario needs " +
                           std::to_string(scenario_.total_vehicles));
    }
    ids.resize(scenario_.total_vehicles);
    vehicle_ids_ = ids;
    observed_ = std::move(observed);

    first_frame_ = std::numeric_limits<std::int64_t>::max();
    for (VehicleId id : vehicle_ids_) first_frame_ = std::min(first_frame_, observed_.track(id).front().frame_id);

    // Every window any round could hand out, then a seeded held-out slice.
    const auto window = scenario_.window();
    const auto round_frames = static_cast<std::int64_t>(scenario_.round_frames());
    const auto base = first_frame_ + static_cast<std::int64_t>(window.history_frames());
    const auto last = base + static_cast<std::int64_t>(scenario_.rounds) * round_frames;
    std::vector<std::pair<VehicleId, std::int64_t>> candidates;
    for (VehicleId id : vehicle_ids_) {
        const auto track = clean.track(id);
        if (track.empty()) throw InvalidInput("clean dataset lacks vehicle " + std::to_string(id));
        for (std::int64_t frame = base; frame < last; ++frame) {
            std::size_t index = 0;
            if (find_frame(track, frame, &index) && make_sample(track, index, window)) {
                candidates.emplace_back(id, frame);
            }
        }
    }
    if (candidates.size() < 2) throw InvalidInput("dataset too short for a single training window");
    auto split_rng = make_rng(scenario_.seed, kStreamTestSplit);
    std::shuffle(candidates.begin(), candidates.end(), split_rng);
    auto held = static_cast<std::size_t>(std::ceil(scenario_.test_fraction * static_cast<double>(candidates.size())));
    held = std::clamp<std::size_t>(held, 1, candidates.size() - 1);

    std::vector<std::pair<VehicleId, std::int64_t>> test_windows(candidates.begin(),
                                                                 candidates.begin() + static_cast<std::ptrdiff_t>(held));
    for (const auto& [id, frame] : test_windows) held_out_[id].push_back(frame);
    for (auto& [id, frames] : held_out_) std::sort(frames.begin(), frames.end());

    test_windows.resize(std::min(test_windows.size(), scenario_.max_test_samples));
    std::sort(test_windows.begin(), test_windows.end());
    for (const auto& [id, frame] : test_windows) {
        const auto track = clean.track(id);
        std::size_t index = 0;
        find_frame(track, frame, &index);
        test_set_.push_back(*make_sample(track, index, window));
    }

    auto init_rng = make_rng(scenario_.seed, kStreamInit);
    initial_model_ = initialize_parameters(scenario_.predictor, init_rng);
    for (Framework f : frameworks_) {
        states_.push_back(FrameworkState{f, CentralServer(f, initial_model_), {}, {}, {},
                                         make_rng(scenario_.seed, kStreamSelection + static_cast<std::uint64_t>(f))});
    }
}

std::map<VehicleId, std::vector<TrajectorySample>> Experiment::round_batches(std::size_t round) const {
    const auto window = scenario_.window();
    const auto round_frames = static_cast<std::int64_t>(scenario_.round_frames());
    const auto start = first_frame_ + static_cast<std::int64_t>(window.history_frames()) +
                       static_cast<std::int64_t>(round) * round_frames;
    std::map<VehicleId, std::vector<TrajectorySample>> batches;
    for (VehicleId id : vehicle_ids_) {
        auto& batch = batches[id];
        const auto track = observed_.track(id);
        const auto held = held_out_.find(id);
        for (std::int64_t frame = start; frame < start + round_frames; ++frame) {
            if (held != held_out_.end() && std::binary_search(held->second.begin(), held->second.end(), frame)) {
                continue;
            }
            std::size_t index = 0;
            if (!find_frame(track, frame, &index)) continue;
            if (auto sample = make_sample(track, index, window)) batch.push_back(std::move(*sample));
        }
    }
    return batches;
}

std::vector<VehicleState> Experiment::positions(std::size_t round) const {
    const auto window = scenario_.window();
    const auto round_frames = static_cast<std::int64_t>(scenario_.round_frames());
    const auto start = first_frame_ + static_cast<std::int64_t>(window.history_frames()) +
                       static_cast<std::int64_t>(round) * round_frames;
    const auto end = start + round_frames - 1;
    std::vector<VehicleState> roster;
    for (VehicleId id : vehicle_ids_) {
        const auto track = observed_.track(id);
        // Latest record at or before the end of the round, if the vehicle is on the road.
        auto it = std::upper_bound(track.begin(), track.end(), end,
                                   [](std::int64_t f, const TrajectoryRecord& r) { return f < r.frame_id; });
        if (it == track.begin()) continue;
        --it;
        if (it->frame_id < start - static_cast<std::int64_t>(window.history_frames())) continue;
        VehicleState v;
        v.id = id;
        v.position = {it->x, it->y};
        v.speed = it->velocity;
        v.acceleration = it->acceleration;
        v.lane = it->lane_id;
        const auto back = it - std::min<std::ptrdiff_t>(it - track.begin(), 5);
        v.orientation = back == it ? M_PI / 2 : std::atan2(it->y - back->y, it->x - back->x);
        roster.push_back(std::move(v));
    }
    return roster;
}

Experiment::FrameworkState& Experiment::state_for(Framework framework) {
    for (auto& s : states_) {
        if (s.framework == framework) return s;
    }
    throw InvalidInput("framework " + to_string(framework) + " is not part of this experiment");
}

const Experiment::FrameworkState& Experiment::state_for(Framework framework) const {
    return const_cast<Experiment*>(this)->state_for(framework);
}

const GlobalModel& Experiment::global_model(Framework framework) const {
    return state_for(framework).server.model();
}

const std::map<std::string, CredibilityState>& Experiment::credibility(Framework framework) const {
    return state_for(framework).credibility;
}

std::vector<RoundMetrics> Experiment::run_round() {
    if (finished()) throw InvalidInput("experiment already ran all " + std::to_string(scenario_.rounds) + " rounds");
    const auto roster = positions(round_);
    const auto batches = round_batches(round_);

    std::vector<RoundMetrics> records(states_.size());
    if (states_.size() == 1) {
        records[0] = run_framework(states_[0], roster, batches);
    } else {
        std::vector<std::future<RoundMetrics>> pending;
        for (auto& state : states_) {
            pending.push_back(std::async(std::launch::async, [&, s = &state] {
                return run_framework(*s, roster, batches);
            }));
        }
        for (std::size_t i = 0; i < pending.size(); ++i) records[i] = pending[i].get();
    }
    ++round_;
    return records;
}

RoundMetrics Experiment::run_framework(FrameworkState& state, const std::vector<VehicleState>& roster,
                                       const std::map<VehicleId, std::vector<TrajectorySample>>& batches) {
    try {
        if (roster.empty()) throw InvalidInput("no vehicle is on the road this round");
        return state.framework == Framework::sfdl ? run_sfdl(state, roster, batches)
                                                  : run_baseline(state, roster, batches);
    } catch (const std::exception& e) {
        state.server.discard_pending();
        RoundMetrics aborted;
        aborted.framework = state.framework;
        aborted.round = round_;
        aborted.aborted = true;
        aborted.diagnostic = e.what();
        aborted.cumulative = state.cumulative;
        aborted.global_digest = digest_hex(state.server.model().params);
        const auto e_now = evaluate(state.server.model().params, test_set_, scenario_.predictor,
                                    scenario_.accuracy_mode);
        fill_evaluation(aborted, e_now);
        return aborted;
    }
}

RoundMetrics Experiment::run_sfdl(FrameworkState& state, const std::vector<VehicleState>& roster,
                                  const std::map<VehicleId, std::vector<TrajectorySample>>& batches) {
    const auto& config = scenario_.predictor;
    const ParameterVector global = state.server.model().params;
    const auto server_round = state.server.model().round;

    VehicleRegistry registry;
    for (const auto& v : roster) {
        VehicleState vehicle = v;
        vehicle.dataset = batches.at(v.id);
        vehicle.model = global;
        if (const auto it = state.optimizers.find(v.id);
            scenario_.persist_optimizer && it != state.optimizers.end()) {
            vehicle.optimizer = it->second;
        }
        registry.emplace(v.id, std::move(vehicle));
    }

    RoundMetrics metrics;
    metrics.framework = Framework::sfdl;
    metrics.round = round_;
    metrics.batch_digest = to_hex(digest_batches(registry));

    const auto groups = form_groups(roster, scenario_.distance_threshold);
    std::size_t max_size = 1;
    for (const auto& g : groups) max_size = std::max(max_size, g.members.size());

    const double global_loss = loss(global, test_set_, config);
    auto credibility_next = state.credibility;
    auto optimizers_next = state.optimizers;
    std::uint64_t intra = 0;
    std::vector<SwarmRoundResult> results;
    std::vector<GroupReport> reports;

    for (const auto& group : groups) {
        auto result = swarm_round(group, registry, global, config, scenario_.merge_rule);
        metrics.skipped.insert(metrics.skipped.end(), result.skipped.begin(), result.skipped.end());
        if (!result.has_upload()) continue;
        intra += result.intra_links;
        for (std::size_t i = 0; i < result.contributors.size(); ++i) {
            optimizers_next[result.contributors[i]] = result.optimizer_states[i];
        }

        GroupReport report;
        report.group_id = group_key(group);
        report.members = group.members;
        auto& cred = credibility_next[report.group_id];
        cred.group_size = group.members.size();
        cred.max_group_size = max_size;
        // The first round has no earlier aggregate to compare against; the prior stands.
        if (round_ > 0) {
            report.delta = effectiveness_delta(global_loss, loss(result.group_model, test_set_, config));
            cred = observe(cred, report.delta);
        }
        report.p = cred.p;
        report.q = cred.q;
        state.server.submit({report.group_id, result.group_model,
                             sfdl::credibility(cred, scenario_.credibility_rule), server_round});
        reports.push_back(std::move(report));
        results.push_back(std::move(result));
    }

    const auto weights = state.server.aggregate();
    std::vector<double> group_losses;
    for (std::size_t i = 0; i < results.size(); ++i) {
        reports[i].weight = weights.weights[i];
        group_losses.push_back(group_loss(results[i].chain_models, test_set_, config));
    }
    metrics.global_objective = global_objective(group_losses, weights);
    metrics.upload_weights = weights.weights;
    metrics.groups = std::move(reports);
    metrics.participants = results.size();
    metrics.links = round_links(intra, results.size(), global.dim());

    state.credibility = std::move(credibility_next);
    state.optimizers = std::move(optimizers_next);
    state.cumulative += metrics.links;
    metrics.cumulative = state.cumulative;
    metrics.global_digest = digest_hex(state.server.model().params);
    fill_evaluation(metrics, evaluate(state.server.model().params, test_set_, config, scenario_.accuracy_mode));
    return metrics;
}

RoundMetrics Experiment::run_baseline(FrameworkState& state, const std::vector<VehicleState>& roster,
                                      const std::map<VehicleId, std::vector<TrajectorySample>>& batches) {
    const auto& config = scenario_.predictor;
    const ParameterVector global = state.server.model().params;
    const auto server_round = state.server.model().round;

    RoundMetrics metrics;
    metrics.framework = state.framework;
    metrics.round = round_;

    VehicleRegistry offered;
    std::vector<VehicleId> clients;
    for (const auto& v : roster) {
        clients.push_back(v.id);
        VehicleState vehicle = v;
        vehicle.dataset = batches.at(v.id);
        offered.emplace(v.id, std::move(vehicle));
    }
    metrics.batch_digest = to_hex(digest_batches(offered));

    std::size_t epochs = 1;
    if (state.framework == Framework::comm_efficient) {
        clients = select_clients(clients, scenario_.frac, state.selection_rng);
        epochs = scenario_.local_epochs;
    }

    auto optimizers_next = state.optimizers;
    std::vector<double> client_losses;
    for (VehicleId id : clients) {
        const auto& data = offered.at(id).dataset;
        if (data.empty()) {
            metrics.skipped.push_back(id);
            continue;
        }
        AdamState& opt = optimizers_next[id];
        if (!scenario_.persist_optimizer) opt = AdamState{};
        ParameterVector local = global;
        for (std::size_t e = 0; e < epochs; ++e) local = train_epoch(local, data, config, opt);
        client_losses.push_back(loss(local, test_set_, config));
        state.server.submit({std::to_string(id), std::move(local), 1.0, server_round});
    }

    const auto weights = state.server.aggregate();
    metrics.global_objective = global_objective(client_losses, weights);
    metrics.upload_weights = weights.weights;
    metrics.participants = client_losses.size();
    metrics.links = round_links(0, client_losses.size(), global.dim());

    state.optimizers = std::move(optimizers_next);
    state.cumulative += metrics.links;
    metrics.cumulative = state.cumulative;
    metrics.global_digest = digest_hex(state.server.model().params);
    fill_evaluation(metrics, evaluate(state.server.model().params, test_set_, config, scenario_.accuracy_mode));
    return metrics;
}

ExperimentReport run_experiment(const Scenario& scenario, std::span<const Framework> frameworks,
                                const std::function<void(const RoundMetrics&)>& on_record) {
    Experiment experiment(scenario, std::vector<Framework>(frameworks.begin(), frameworks.end()));
    ExperimentReport report;
    report.scenario = scenario;
    report.frameworks.assign(experiment.frameworks().begin(), experiment.frameworks().end());
    while (!experiment.finished()) {
        const auto round = experiment.round();
        std::vector<RoundMetrics> records;
        try {
            records = experiment.run_round();
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(round) + ": " + e.what());
        }
        for (auto& r : records) {
            if (on_record) on_record(r);
            report.records.push_back(std::move(r));
        }
    }
    return report;
}

}  // namespace sfdl
