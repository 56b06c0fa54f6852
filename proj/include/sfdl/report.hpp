#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfdl/simulator.hpp"

namespace sfdl {

// Rounds to 9 significant digits so serialized floats diff cleanly.
double round_sig9(double value);

nlohmann::json to_json(const RoundMetrics& metrics);
RoundMetrics round_metrics_from_json(const nlohmann::json& j);

// One JSON object terminated by a newline.
std::string checkpoint_line(const RoundMetrics& metrics);

nlohmann::json summary_json(const ExperimentReport& report);

// Per-framework records found in a checkpoint stream (.jsonl) or a summary
// document; keyed by framework name, each series in round order.
std::map<std::string, std::vector<RoundMetrics>> read_results(const std::filesystem::path& path);
std::map<std::string, std::vector<RoundMetrics>> parse_results(std::istream& in);

// Writes rounds.jsonl, one <framework>.jsonl per framework, summary.json and
// the resolved scenario.json into `dir`.
void write_run_outputs(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace sfdl
