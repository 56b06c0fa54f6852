#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sfdl/errors.hpp"
#include "sfdl/report.hpp"

using namespace sfdl;

namespace {

RoundMetrics sample_record() {
    RoundMetrics r;
    r.framework = Framework::sfdl;
    r.round = 3;
    r.loss = 12.345678912345;
    r.prediction_error = 3.25;
    r.prediction_accuracy = 0.875;
    r.global_objective = 1.0 / 3.0;
    r.participants = 5;
    r.links = round_links(3, 2, 10);
    r.cumulative = round_links(12, 8, 10);
    r.groups = {{"trajectory:1", {1, 2}, 2.0, 1.0, 0.6, std::nullopt},
                {"trajectory:3", {3, 4, 5}, 1.0, 2.0, 0.4, -0.125}};
    r.upload_weights = {0.6, 0.4};
    r.skipped = {4};
    r.global_digest = "00ff";
    r.batch_digest = "abcd";
    return r;
}

}  // namespace

TEST(Report, RoundsToNineSignificantDigits) {
    EXPECT_EQ(round_sig9(1.0 / 3.0), 0.333333333);
    EXPECT_EQ(round_sig9(123456789.6), 123456790.0);
    EXPECT_EQ(round_sig9(0.0), 0.0);
    EXPECT_TRUE(std::isinf(round_sig9(std::numeric_limits<double>::infinity())));
    EXPECT_TRUE(std::isnan(round_sig9(std::nan(""))));
}

TEST(Report, RecordSurvivesJsonRoundTrip) {
    const auto r = sample_record();
    const auto back = round_metrics_from_json(to_json(r));
    EXPECT_EQ(back.framework, r.framework);
    EXPECT_EQ(back.round, r.round);
    EXPECT_EQ(back.loss, round_sig9(r.loss));
    EXPECT_EQ(back.links, r.links);
    EXPECT_EQ(back.cumulative, r.cumulative);
    ASSERT_EQ(back.groups.size(), 2u);
    EXPECT_FALSE(back.groups[0].delta.has_value());
    EXPECT_EQ(*back.groups[1].delta, -0.125);
    EXPECT_EQ(back.groups[1].members, (std::vector<VehicleId>{3, 4, 5}));
    EXPECT_EQ(back.skipped, r.skipped);
    EXPECT_EQ(back.global_digest, r.global_digest);
    EXPECT_EQ(checkpoint_line(back), checkpoint_line(r));
    EXPECT_EQ(checkpoint_line(r).find('\n'), checkpoint_line(r).size() - 1);
}

TEST(Report, MalformedRecordIsSchemaError) {
    auto j = to_json(sample_record());
    j.erase("loss");
    EXPECT_THROW(round_metrics_from_json(j), SchemaError);
    j = to_json(sample_record());
    j["framework"] = "fedprox";
    EXPECT_THROW(round_metrics_from_json(j), SchemaError);
    std::istringstream junk("{\"not\": \"a record\"}\n");
    EXPECT_THROW(parse_results(junk), SchemaError);
}

TEST(Report, SummaryAndCheckpointStreamParseAlike) {
    auto s = preset("low");
    s.rounds = 3;
    const std::vector<Framework> frameworks{Framework::sfdl, Framework::fed_avg};
    const auto report = run_experiment(s, frameworks);

    std::stringstream jsonl;
    for (const auto& r : report.records) jsonl << checkpoint_line(r);
    std::stringstream summary(summary_json(report).dump(2));
    const auto a = parse_results(jsonl);
    const auto b = parse_results(summary);
    ASSERT_EQ(a.size(), 2u);
    ASSERT_EQ(b.size(), 2u);
    for (const auto& [name, series] : a) {
        ASSERT_EQ(series.size(), 3u) << name;
        for (std::size_t i = 0; i < series.size(); ++i) {
            EXPECT_EQ(series[i].round, i);
            EXPECT_EQ(checkpoint_line(series[i]), checkpoint_line(b.at(name)[i]));
        }
    }

    const auto j = summary_json(report);
    EXPECT_EQ(j.at("frameworks").at("sfdl").at("rounds"), 3);
    EXPECT_EQ(j.at("frameworks").at("fed-avg").at("curves").at("loss").size(), 3u);
}

TEST(Report, RunOutputsLandOnDisk) {
    auto s = preset("low");
    s.rounds = 2;
    const std::vector<Framework> frameworks{Framework::sfdl, Framework::fed_avg};
    const auto report = run_experiment(s, frameworks);
    const auto dir = std::filesystem::temp_directory_path() / "sfdl_report_outputs";
    std::filesystem::remove_all(dir);
    write_run_outputs(dir, report);
    for (const char* f : {"rounds.jsonl", "sfdl.jsonl", "fed-avg.jsonl", "summary.json", "scenario.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    EXPECT_EQ(read_results(dir / "sfdl.jsonl").at("sfdl").size(), 2u);
    EXPECT_EQ(read_results(dir / "summary.json").size(), 2u);
    EXPECT_NO_THROW(load_scenario(dir / "scenario.json"));
    std::filesystem::remove_all(dir);
}
