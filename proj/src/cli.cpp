#include "sfdl/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sfdl/errors.hpp"
#include "sfdl/report.hpp"
#include "sfdl/scenario.hpp"
#include "sfdl/simulator.hpp"

namespace sfdl {
namespace {

using nlohmann::json;
using Series = std::map<std::string, std::vector<RoundMetrics>>;

// Carries an exit status out of a subcommand alongside its diagnostic.
struct CommandError : std::runtime_error {
    CommandError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

void require_readable(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CommandError(exit_unreadable, "cannot read '" + path.string() + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double reduction_percent(double reference, double other) {
    return other > 0.0 ? round_sig9(100.0 * (other - reference) / other) : 0.0;
}

struct RunOptions {
    std::string scenario;
    std::string preset;
    std::string frameworks = "sfdl,fed-avg,comm-efficient";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> rounds;
    std::string credibility_rule;
    std::optional<double> frac;
    std::string accuracy_mode;
    std::string out = "sfdl-out";
};

Scenario resolve_scenario(const RunOptions& o) {
    if (!o.scenario.empty() && !o.preset.empty()) {
        throw CommandError(exit_usage, "--scenario and --preset are mutually exclusive");
    }
    if (o.scenario.empty() && o.preset.empty()) throw CommandError(exit_usage, "one of --scenario or --preset is required");

    Scenario s;
    if (!o.scenario.empty()) {
        require_readable(o.scenario);
        try {
            s = load_scenario(o.scenario);
        } catch (const SchemaError& e) {
            throw CommandError(exit_schema, e.what());
        } catch (const InvalidInput& e) {
            throw CommandError(exit_schema, e.what());
        }
    } else {
        try {
            s = preset(o.preset);
        } catch (const InvalidInput& e) {
            throw CommandError(exit_usage, e.what());
        }
    }
    try {
        if (o.seed) s.seed = *o.seed;
        if (o.rounds) s.rounds = *o.rounds;
        if (o.frac) s.frac = *o.frac;
        if (!o.credibility_rule.empty()) s.credibility_rule = parse_credibility_rule(o.credibility_rule);
        if (!o.accuracy_mode.empty()) s.accuracy_mode = parse_accuracy_mode(o.accuracy_mode);
        s.validate();
    } catch (const InvalidInput& e) {
        throw CommandError(exit_usage, e.what());
    }
    return s;
}

std::vector<Framework> resolve_frameworks(const std::string& list) {
    std::vector<Framework> frameworks;
    try {
        for (const auto& name : split_list(list)) frameworks.push_back(parse_framework(name));
    } catch (const InvalidInput& e) {
        throw CommandError(exit_usage, e.what());
    }
    if (frameworks.empty()) throw CommandError(exit_usage, "--frameworks lists no framework");
    return frameworks;
}

Series load_series(const std::string& path) {
    require_readable(path);
    try {
        return read_results(path);
    } catch (const SchemaError& e) {
        throw CommandError(exit_schema, path + ": " + e.what());
    }
}

int command_run(const RunOptions& o, std::ostream& out) {
    const Scenario scenario = resolve_scenario(o);
    const auto frameworks = resolve_frameworks(o.frameworks);
    ExperimentReport report;
    try {
        report = run_experiment(scenario, frameworks);
        write_run_outputs(o.out, report);
    } catch (const std::exception& e) {
        throw CommandError(exit_runtime, e.what());
    }
    for (Framework f : report.frameworks) {
        const RoundMetrics* last = nullptr;
        for (const auto& r : report.records) {
            if (r.framework == f) last = &r;
        }
        if (!last) continue;
        out << to_string(f) << ": rounds=" << last->round + 1 << " loss=" << fmt9(last->loss)
            << " error=" << fmt9(last->prediction_error) << " accuracy=" << fmt9(last->prediction_accuracy)
            << " edge_links=" << last->cumulative.edge_to_global_links
            << " bytes_up=" << last->cumulative.bytes_up << "\n";
    }
    return exit_ok;
}

int command_validate(const std::string& path) {
    require_readable(path);
    try {
        load_scenario(path);
    } catch (const SchemaError& e) {
        throw CommandError(exit_schema, e.what());
    } catch (const InvalidInput& e) {
        throw CommandError(exit_schema, e.what());
    }
    return exit_ok;
}

int command_compare(const std::vector<std::string>& files, std::string reference, const std::string& out_path,
                    std::ostream& out) {
    Series all;
    for (const auto& file : files) {
        for (auto& [name, rounds] : load_series(file)) {
            if (all.count(name)) throw CommandError(exit_schema, "framework " + name + " appears in two inputs");
            all[name] = std::move(rounds);
        }
    }
    if (all.size() < 2) throw CommandError(exit_usage, "compare needs results of at least two frameworks");
    if (reference.empty()) reference = all.count("sfdl") ? "sfdl" : all.begin()->first;
    if (!all.count(reference)) throw CommandError(exit_usage, "reference framework " + reference + " not found");

    const auto& ref = all.at(reference);
    std::map<std::size_t, const RoundMetrics*> ref_by_round;
    for (const auto& r : ref) ref_by_round[r.round] = &r;

    json doc;
    doc["reference"] = reference;
    json rounds = json::array();
    json overhead = json::array();
    for (const auto& [name, series] : all) {
        if (name == reference) continue;
        for (const auto& r : series) {
            const auto it = ref_by_round.find(r.round);
            if (it == ref_by_round.end()) continue;
            const auto& a = *it->second;
            rounds.push_back({{"round", r.round},
                              {"framework", name},
                              {"loss_delta", round_sig9(a.loss - r.loss)},
                              {"prediction_error_delta", round_sig9(a.prediction_error - r.prediction_error)},
                              {"accuracy_delta", round_sig9(a.prediction_accuracy - r.prediction_accuracy)},
                              {"edge_links_delta", static_cast<std::int64_t>(a.links.edge_to_global_links) -
                                                       static_cast<std::int64_t>(r.links.edge_to_global_links)}});
        }
        // Cumulative totals up to the last round both sides reached.
        const RoundMetrics* last_ref = nullptr;
        const RoundMetrics* last_other = nullptr;
        for (const auto& r : series) {
            if (const auto it = ref_by_round.find(r.round); it != ref_by_round.end()) {
                last_ref = it->second;
                last_other = &r;
            }
        }
        if (!last_ref) continue;
        const auto& cr = last_ref->cumulative;
        const auto& co = last_other->cumulative;
        overhead.push_back(
            {{"framework", name},
             {"rounds", last_other->round + 1},
             {"edge_links_reference", cr.edge_to_global_links},
             {"edge_links_framework", co.edge_to_global_links},
             {"edge_link_reduction_percent",
              reduction_percent(static_cast<double>(cr.edge_to_global_links),
                                static_cast<double>(co.edge_to_global_links))},
             {"bytes_reference", cr.bytes_up + cr.bytes_down},
             {"bytes_framework", co.bytes_up + co.bytes_down},
             {"byte_reduction_percent", reduction_percent(static_cast<double>(cr.bytes_up + cr.bytes_down),
                                                          static_cast<double>(co.bytes_up + co.bytes_down))},
             {"total_links_reference", cr.total_two_way_links},
             {"total_links_framework", co.total_two_way_links},
             {"total_link_reduction_percent", reduction_percent(static_cast<double>(cr.total_two_way_links),
                                                                static_cast<double>(co.total_two_way_links))}});
    }
    doc["rounds"] = std::move(rounds);
    doc["overhead"] = std::move(overhead);
    const auto text = doc.dump(2) + "\n";
    if (out_path.empty()) {
        out << text;
    } else {
        std::ofstream file(out_path, std::ios::binary);
        if (!file || !(file << text)) throw CommandError(exit_runtime, "cannot write '" + out_path + "'");
    }
    return exit_ok;
}

int command_plot_data(const std::string& input, const std::string& out_dir, std::ostream& out) {
    const auto series = load_series(input);
    std::set<std::size_t> rounds;
    for (const auto& [name, records] : series) {
        for (const auto& r : records) rounds.insert(r.round);
    }

    struct Column {
        const char* file;
        std::string (*value)(const RoundMetrics&);
    };
    const Column columns[] = {
        {"loss.csv", [](const RoundMetrics& r) { return fmt9(r.loss); }},
        {"prediction_error.csv", [](const RoundMetrics& r) { return fmt9(r.prediction_error); }},
        {"accuracy.csv", [](const RoundMetrics& r) { return fmt9(r.prediction_accuracy); }},
        {"edge_links.csv", [](const RoundMetrics& r) { return std::to_string(r.cumulative.edge_to_global_links); }},
        {"total_links.csv", [](const RoundMetrics& r) { return std::to_string(r.cumulative.total_two_way_links); }},
        {"bytes.csv",
         [](const RoundMetrics& r) { return std::to_string(r.cumulative.bytes_up + r.cumulative.bytes_down); }},
    };

    try {
        std::filesystem::create_directories(out_dir);
    } catch (const std::filesystem::filesystem_error& e) {
        throw CommandError(exit_runtime, e.what());
    }
    for (const auto& column : columns) {
        std::ostringstream csv;
        csv << "round";
        for (const auto& [name, records] : series) csv << "," << name;
        csv << "\n";
        for (std::size_t round : rounds) {
            csv << round;
            for (const auto& [name, records] : series) {
                csv << ",";
                for (const auto& r : records) {
                    if (r.round == round) {
                        csv << column.value(r);
                        break;
                    }
                }
            }
            csv << "\n";
        }
        const auto path = std::filesystem::path(out_dir) / column.file;
        std::ofstream file(path, std::ios::binary);
        if (!file || !(file << csv.str())) throw CommandError(exit_runtime, "cannot write '" + path.string() + "'");
    }
    out << "wrote " << std::size(columns) << " series covering " << rounds.size() << " rounds to " << out_dir
        << "\n";
    return exit_ok;
}

}  // namespace

int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Swarm-federated trajectory learning simulator"};
    app.name("sfdl_sim");
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run an experiment and write round checkpoints and a summary");
    run_cmd->add_option("--scenario", run.scenario, "scenario file")->envname("SFDL_SCENARIO");
    run_cmd->add_option("--preset", run.preset, "density preset: high, medium or low")->envname("SFDL_PRESET");
    run_cmd->add_option("--frameworks", run.frameworks, "comma-separated: sfdl,fed-avg,comm-efficient")
        ->envname("SFDL_FRAMEWORKS");
    run_cmd->add_option("--seed", run.seed, "override the scenario seed")->envname("SFDL_SEED");
    run_cmd->add_option("--rounds", run.rounds, "override the number of rounds")->envname("SFDL_ROUNDS");
    run_cmd->add_option("--credibility-rule", run.credibility_rule, "product, mean or effectiveness-only")
        ->envname("SFDL_CREDIBILITY_RULE");
    run_cmd->add_option("--frac", run.frac, "comm-efficient client fraction in (0, 1]")->envname("SFDL_FRAC");
    run_cmd->add_option("--accuracy-mode", run.accuracy_mode, "waypoint or trajectory")
        ->envname("SFDL_ACCURACY_MODE");
    run_cmd->add_option("--out", run.out, "output directory")->envname("SFDL_OUT");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a scenario file against the schema");
    validate_cmd->add_option("--scenario", validate_path, "scenario file")->envname("SFDL_SCENARIO")->required();

    std::vector<std::string> compare_files;
    std::string compare_reference;
    std::string compare_out;
    auto* compare_cmd = app.add_subcommand("compare", "per-round deltas and overhead reduction between frameworks");
    compare_cmd->add_option("files", compare_files, "result files (.jsonl or summary.json)")->required();
    compare_cmd->add_option("--reference", compare_reference, "framework the others are compared against");
    compare_cmd->add_option("--out", compare_out, "write the comparison here instead of stdout")
        ->envname("SFDL_OUT");

    std::string plot_input;
    std::string plot_out = ".";
    auto* plot_cmd = app.add_subcommand("plot-data", "emit CSV series for loss, error, accuracy and links");
    plot_cmd->add_option("file", plot_input, "result file (.jsonl or summary.json)")->required();
    plot_cmd->add_option("--out", plot_out, "output directory")->envname("SFDL_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "sfdl_sim: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (run_cmd->parsed()) return command_run(run, out);
        if (validate_cmd->parsed()) return command_validate(validate_path);
        if (compare_cmd->parsed()) return command_compare(compare_files, compare_reference, compare_out, out);
        if (plot_cmd->parsed()) return command_plot_data(plot_input, plot_out, out);
    } catch (const CommandError& e) {
        err << "sfdl_sim: " << e.what() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        err << "sfdl_sim: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}

int cli_run(int argc, const char* const* argv) { return cli_run(argc, argv, std::cout, std::cerr); }

}  // namespace sfdl
