#include <gtest/gtest.h>

#include <set>

#include "sfdl/errors.hpp"
#include "sfdl/federation.hpp"
#include "test_support.hpp"

using namespace sfdl;
using sfdl::testing::random_params;

namespace {

ParameterVector naive_weighted_sum(const std::vector<Upload>& uploads) {
    ParameterVector out(uploads.front().params.dim());
    for (std::size_t i = 0; i < out.dim(); ++i) {
        double acc = 0.0;
        for (const auto& u : uploads) acc += u.weight * u.params[i];
        out[i] = acc;
    }
    return out;
}

std::vector<Upload> random_uploads(std::mt19937_64& rng, std::size_t k, std::size_t dim) {
    std::uniform_real_distribution<double> w(0.1, 1.0);
    std::vector<Upload> uploads;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        uploads.push_back({std::to_string(i), random_params(dim, rng, 5.0), w(rng), 0});
        total += uploads.back().weight;
    }
    for (auto& u : uploads) u.weight /= total;
    return uploads;
}

}  // namespace

TEST(Federation, WeightedAggregateMatchesOracleBitForBit) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto uploads = random_uploads(rng, 1 + rng() % 5, 1 + rng() % 8);
        EXPECT_EQ(aggregate_sfdl(uploads), naive_weighted_sum(uploads));
    }
}

TEST(Federation, UniformWeightsReduceToFedAvg) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        auto uploads = random_uploads(rng, 1 + rng() % 5, 1 + rng() % 8);
        for (auto& u : uploads) u.weight = 1.0 / static_cast<double>(uploads.size());
        EXPECT_EQ(aggregate_sfdl(uploads), aggregate_fedavg(uploads));
    }
}

TEST(Federation, AggregateRejectsBadInput) {
    EXPECT_THROW(aggregate_sfdl({}), InvalidInput);
    std::vector<Upload> off{{"a", ParameterVector{1.0}, 0.6, 0}, {"b", ParameterVector{2.0}, 0.6, 0}};
    EXPECT_THROW(aggregate_sfdl(off), InvalidInput);
    std::vector<Upload> dims{{"a", ParameterVector{1.0}, 0.5, 0}, {"b", ParameterVector{2.0, 3.0}, 0.5, 0}};
    EXPECT_THROW(aggregate_sfdl(dims), ConfigurationError);
    EXPECT_THROW(aggregate_fedavg(dims), ConfigurationError);
}

TEST(Federation, SelectionCardinalityAndMembership) {
    std::vector<VehicleId> clients(16);
    for (std::size_t i = 0; i < clients.size(); ++i) clients[i] = static_cast<VehicleId>(100 + i);
    std::mt19937_64 rng(1);
    const auto picked = select_clients(clients, 0.8, rng);
    EXPECT_EQ(picked.size(), 13u);
    EXPECT_TRUE(std::is_sorted(picked.begin(), picked.end()));
    EXPECT_EQ(std::set<VehicleId>(picked.begin(), picked.end()).size(), picked.size());
    for (VehicleId id : picked) EXPECT_NE(std::find(clients.begin(), clients.end(), id), clients.end());

    const std::vector<VehicleId> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_EQ(select_clients(ten, 0.8, rng).size(), 8u);
    EXPECT_EQ(select_clients(ten, 1.0, rng), ten);
    EXPECT_EQ(select_clients(ten, 0.01, rng).size(), 1u);
    EXPECT_THROW(select_clients(ten, 0.0, rng), InvalidInput);
    EXPECT_THROW(select_clients({}, 0.5, rng), InvalidInput);
}

TEST(Federation, SelectionIsSeededAndRoughlyUniform) {
    const std::vector<VehicleId> clients{1, 2, 3, 4, 5};
    std::mt19937_64 a(9), b(9);
    EXPECT_EQ(select_clients(clients, 0.6, a), select_clients(clients, 0.6, b));

    std::mt19937_64 rng(10);
    std::map<VehicleId, int> hits;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        for (VehicleId id : select_clients(clients, 0.4, rng)) ++hits[id];
    }
    for (VehicleId id : clients) EXPECT_NEAR(hits[id] / static_cast<double>(trials), 0.4, 0.02);
}

TEST(Federation, GlobalObjectiveIsMeanWeightedLoss) {
    const std::vector<double> losses{2.0, 4.0};
    EXPECT_DOUBLE_EQ(global_objective(losses, WeightVector{{0.25, 0.75}}), (0.5 + 3.0) / 2.0);
    EXPECT_THROW(global_objective(losses, WeightVector{{1.0}}), InvalidInput);
}

TEST(Federation, ServerNormalizesCredibilitiesAndAdvances) {
    CentralServer server(Framework::sfdl, ParameterVector{0.0, 0.0});
    server.submit({"g1", ParameterVector{1.0, 2.0}, 1.0, 0});
    server.submit({"g2", ParameterVector{3.0, 6.0}, 3.0, 0});
    const auto w = server.aggregate();
    EXPECT_DOUBLE_EQ(w.weights[0], 0.25);
    EXPECT_DOUBLE_EQ(w.weights[1], 0.75);
    EXPECT_EQ(server.model().params, (ParameterVector{0.25 * 1.0 + 0.75 * 3.0, 0.25 * 2.0 + 0.75 * 6.0}));
    EXPECT_EQ(server.model().round, 1u);
    EXPECT_TRUE(server.pending().empty());

    EXPECT_THROW(server.submit({"g1", ParameterVector{1.0, 1.0}, 1.0, 0}), InvalidInput);
    EXPECT_THROW(server.submit({"g1", ParameterVector{1.0}, 1.0, 1}), ConfigurationError);
    EXPECT_THROW(server.aggregate(), InvalidInput);
}

TEST(Federation, BaselineServerIgnoresUploadWeights) {
    CentralServer server(Framework::fed_avg, ParameterVector{0.0});
    server.submit({"1", ParameterVector{1.0}, 5.0, 0});
    server.submit({"2", ParameterVector{3.0}, 1.0, 0});
    server.aggregate();
    EXPECT_DOUBLE_EQ(server.model().params[0], 2.0);
}

TEST(Federation, DiscardDropsPendingRound) {
    CentralServer server(Framework::sfdl, ParameterVector{1.0});
    server.submit({"g", ParameterVector{2.0}, 1.0, 0});
    server.discard_pending();
    EXPECT_TRUE(server.pending().empty());
    EXPECT_EQ(server.model().round, 0u);
    EXPECT_EQ(server.model().params, ParameterVector{1.0});
}

TEST(Federation, FrameworkNamesRoundTrip) {
    for (auto f : {Framework::sfdl, Framework::fed_avg, Framework::comm_efficient}) {
        EXPECT_EQ(parse_framework(to_string(f)), f);
    }
    EXPECT_THROW(parse_framework("fedprox"), InvalidInput);
}
