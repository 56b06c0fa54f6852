#include "sfdl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sfdl/errors.hpp"

namespace sfdl {
namespace {

using nlohmann::json;

json ledger_json(const LinkLedger& l) {
    return {{"links_intra", l.intra_group_links},
            {"links_edge_global", l.edge_to_global_links},
            {"links_total", l.total_two_way_links},
            {"bytes_up", l.bytes_up},
            {"bytes_down", l.bytes_down}};
}

LinkLedger ledger_from_json(const json& j) {
    LinkLedger l;
    l.intra_group_links = j.at("links_intra").get<std::uint64_t>();
    l.edge_to_global_links = j.at("links_edge_global").get<std::uint64_t>();
    l.total_two_way_links = j.at("links_total").get<std::uint64_t>();
    l.bytes_up = j.at("bytes_up").get<std::uint64_t>();
    l.bytes_down = j.at("bytes_down").get<std::uint64_t>();
    return l;
}

json rounded(std::span<const double> values) {
    json out = json::array();
    for (double v : values) out.push_back(round_sig9(v));
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

double round_sig9(double value) {
    if (!std::isfinite(value) || value == 0.0) return value;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return std::strtod(buf, nullptr);
}

json to_json(const RoundMetrics& m) {
    json j;
    j["framework"] = to_string(m.framework);
    j["round"] = m.round;
    j["loss"] = round_sig9(m.loss);
    j["prediction_error"] = round_sig9(m.prediction_error);
    j["accuracy"] = round_sig9(m.prediction_accuracy);
    j["global_objective"] = round_sig9(m.global_objective);
    j["participants"] = m.participants;
    j.update(ledger_json(m.links));
    j["cumulative"] = ledger_json(m.cumulative);
    json groups = json::array();
    for (const auto& g : m.groups) {
        json entry{{"id", g.group_id}, {"members", g.members}, {"p", round_sig9(g.p)},
                   {"q", round_sig9(g.q)}, {"lambda", round_sig9(g.weight)}};
        entry["delta"] = g.delta ? json(round_sig9(*g.delta)) : json(nullptr);
        groups.push_back(std::move(entry));
    }
    j["groups"] = std::move(groups);
    j["upload_weights"] = rounded(m.upload_weights);
    j["skipped"] = m.skipped;
    j["global_digest"] = m.global_digest;
    j["batch_digest"] = m.batch_digest;
    j["aborted"] = m.aborted;
    if (m.aborted) j["diagnostic"] = m.diagnostic;
    return j;
}

RoundMetrics round_metrics_from_json(const json& j) {
    try {
        RoundMetrics m;
        m.framework = parse_framework(j.at("framework").get<std::string>());
        m.round = j.at("round").get<std::size_t>();
        m.loss = j.at("loss").get<double>();
        m.prediction_error = j.at("prediction_error").get<double>();
        m.prediction_accuracy = j.at("accuracy").get<double>();
        m.global_objective = j.value("global_objective", 0.0);
        m.participants = j.value("participants", std::size_t{0});
        m.links = ledger_from_json(j);
        m.cumulative = ledger_from_json(j.at("cumulative"));
        for (const auto& g : j.value("groups", json::array())) {
            GroupReport r;
            r.group_id = g.at("id").get<std::string>();
            r.members = g.at("members").get<std::vector<VehicleId>>();
            r.p = g.at("p").get<double>();
            r.q = g.at("q").get<double>();
            r.weight = g.at("lambda").get<double>();
            if (g.contains("delta") && !g.at("delta").is_null()) r.delta = g.at("delta").get<double>();
            m.groups.push_back(std::move(r));
        }
        m.upload_weights = j.value("upload_weights", std::vector<double>{});
        m.skipped = j.value("skipped", std::vector<VehicleId>{});
        m.global_digest = j.value("global_digest", std::string{});
        m.batch_digest = j.value("batch_digest", std::string{});
        m.aborted = j.value("aborted", false);
        m.diagnostic = j.value("diagnostic", std::string{});
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed round record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("malformed round record: ") + e.what());
    }
}

std::string checkpoint_line(const RoundMetrics& metrics) { return to_json(metrics).dump() + "\n"; }

json summary_json(const ExperimentReport& report) {
    json j;
    j["scenario"] = json::parse(dump_scenario(report.scenario));
    json frameworks = json::object();
    for (Framework f : report.frameworks) {
        json curves{{"round", json::array()}, {"loss", json::array()}, {"prediction_error", json::array()},
                    {"accuracy", json::array()}, {"links_edge_global", json::array()},
                    {"bytes_up", json::array()}};
        const RoundMetrics* last = nullptr;
        std::size_t aborted = 0;
        for (const auto& r : report.records) {
            if (r.framework != f) continue;
            curves["round"].push_back(r.round);
            curves["loss"].push_back(round_sig9(r.loss));
            curves["prediction_error"].push_back(round_sig9(r.prediction_error));
            curves["accuracy"].push_back(round_sig9(r.prediction_accuracy));
            curves["links_edge_global"].push_back(r.cumulative.edge_to_global_links);
            curves["bytes_up"].push_back(r.cumulative.bytes_up);
            aborted += r.aborted ? 1 : 0;
            last = &r;
        }
        json entry{{"rounds", curves["round"].size()}, {"aborted_rounds", aborted}, {"curves", std::move(curves)}};
        if (last) {
            entry["final"] = {{"loss", round_sig9(last->loss)},
                              {"prediction_error", round_sig9(last->prediction_error)},
                              {"accuracy", round_sig9(last->prediction_accuracy)},
                              {"global_digest", last->global_digest}};
            entry["cumulative"] = ledger_json(last->cumulative);
        }
        frameworks[to_string(f)] = std::move(entry);
    }
    j["frameworks"] = std::move(frameworks);
    json records = json::array();
    for (const auto& r : report.records) records.push_back(to_json(r));
    j["records"] = std::move(records);
    return j;
}

std::map<std::string, std::vector<RoundMetrics>> parse_results(std::istream& in) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    std::vector<json> records;
    const json whole = json::parse(text, nullptr, false);
    if (!whole.is_discarded() && whole.is_object() && whole.contains("records")) {
        if (!whole.at("records").is_array()) throw SchemaError("summary 'records' must be an array");
        for (const auto& r : whole.at("records")) records.push_back(r);
    } else {
        std::istringstream lines(text);
        std::string line;
        std::size_t number = 0;
        while (std::getline(lines, line)) {
            ++number;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                throw SchemaError("line " + std::to_string(number) + " is not a JSON object");
            }
            records.push_back(std::move(j));
        }
    }
    if (records.empty()) throw SchemaError("result file holds no round records");

    std::map<std::string, std::vector<RoundMetrics>> series;
    for (const auto& r : records) {
        auto m = round_metrics_from_json(r);
        series[to_string(m.framework)].push_back(std::move(m));
    }
    for (auto& [name, rounds] : series) {
        std::stable_sort(rounds.begin(), rounds.end(),
                         [](const RoundMetrics& a, const RoundMetrics& b) { return a.round < b.round; });
    }
    return series;
}

std::map<std::string, std::vector<RoundMetrics>> read_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open result file '" + path.string() + "'");
    return parse_results(in);
}

void write_run_outputs(const std::filesystem::path& dir, const ExperimentReport& report) {
    std::filesystem::create_directories(dir);
    std::string all;
    std::map<Framework, std::string> per_framework;
    for (const auto& r : report.records) {
        const auto line = checkpoint_line(r);
        all += line;
        per_framework[r.framework] += line;
    }
    write_file(dir / "rounds.jsonl", all);
    for (const auto& [f, text] : per_framework) write_file(dir / (to_string(f) + ".jsonl"), text);
    write_file(dir / "summary.json", summary_json(report).dump(2) + "\n");
    write_file(dir / "scenario.json", dump_scenario(report.scenario));
}

}  // namespace sfdl
