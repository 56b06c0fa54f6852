#include <gtest/gtest.h>

#include <algorithm>

#include "sfdl/errors.hpp"
#include "sfdl/swarm.hpp"
#include "test_support.hpp"

using namespace sfdl;
using sfdl::testing::random_batch;
using sfdl::testing::random_params;
using sfdl::testing::tiny_config;

namespace {

VehicleState at(VehicleId id, double x, double y, std::string task = "trajectory") {
    VehicleState v;
    v.id = id;
    v.position = {x, y};
    v.orientation = M_PI / 2;  // heading +y
    v.task = std::move(task);
    return v;
}

}  // namespace

TEST(Swarm, PairwiseMergeIsTheMidpoint) {
    const ParameterVector a{1.0, -2.0, 4.0};
    const ParameterVector b{3.0, 2.0, 0.5};
    const auto m = chain_merge_pairwise(a, b);
    EXPECT_EQ(m, (ParameterVector{2.0, 0.0, 2.25}));
    EXPECT_THROW(chain_merge_pairwise(a, ParameterVector{1.0}), ConfigurationError);
}

TEST(Swarm, ChainFoldMatchesHandUnrolledAverages) {
    std::mt19937_64 rng(17);
    for (std::size_t n = 2; n <= 4; ++n) {
        std::vector<ParameterVector> m;
        for (std::size_t k = 0; k < n; ++k) m.push_back(random_params(6, rng));
        const std::vector<double> gammas(n, 1.0);
        const auto chain = chain_fold(m, gammas, MergeRule::chain_average);
        ASSERT_EQ(chain.size(), n);
        for (std::size_t i = 0; i < 6; ++i) {
            double expect = m[0][i];
            EXPECT_EQ(chain[0][i], expect);
            for (std::size_t k = 1; k < n; ++k) {
                expect = (expect + m[k][i]) / 2.0;
                EXPECT_NEAR(chain[k][i], expect, 1e-12);
            }
        }
    }
}

TEST(Swarm, WeightedMergeMatchesNaiveFormula) {
    const std::vector<std::pair<ParameterVector, double>> models{
        {ParameterVector{1.0, 2.0}, 1.0}, {ParameterVector{3.0, -2.0}, 3.0}};
    const auto m = weighted_merge(models);
    EXPECT_DOUBLE_EQ(m[0], (1.0 + 9.0) / 4.0);
    EXPECT_DOUBLE_EQ(m[1], (2.0 - 6.0) / 4.0);
    const std::vector<std::pair<ParameterVector, double>> bad{{ParameterVector{1.0}, 0.0}};
    EXPECT_THROW(weighted_merge(bad), InvalidInput);
}

TEST(Swarm, ElementwiseRules) {
    const std::vector<ParameterVector> m{{1.0, 5.0, -1.0}, {3.0, 2.0, 0.0}, {2.0, 9.0, -4.0}};
    EXPECT_EQ(elementwise_min(m), (ParameterVector{1.0, 2.0, -4.0}));
    EXPECT_EQ(elementwise_max(m), (ParameterVector{3.0, 9.0, 0.0}));
    EXPECT_EQ(elementwise_median(m), (ParameterVector{2.0, 5.0, -1.0}));
    const std::vector<ParameterVector> even{{1.0}, {4.0}};
    EXPECT_DOUBLE_EQ(elementwise_median(even)[0], 2.5);
}

TEST(Swarm, ChainFoldStaysInsideElementwiseHull) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        std::vector<ParameterVector> m;
        for (std::size_t k = 0; k < n; ++k) m.push_back(random_params(5, rng, 10.0));
        const std::vector<double> gammas(n, 1.0);
        const auto lo = elementwise_min(m);
        const auto hi = elementwise_max(m);
        for (auto rule : {MergeRule::chain_average, MergeRule::weighted_average, MergeRule::median}) {
            const auto out = chain_fold(m, gammas, rule).back();
            for (std::size_t i = 0; i < 5; ++i) {
                EXPECT_GE(out[i], lo[i] - 1e-12);
                EXPECT_LE(out[i], hi[i] + 1e-12);
            }
        }
    }
}

TEST(Swarm, EnvironmentSectorsFollowHeading) {
    const auto ego = at(1, 0.0, 0.0);
    const std::vector<VehicleState> others{at(2, 0.0, 30.0), at(3, 0.0, -60.0), at(4, -3.7, 0.0),
                                           at(5, 3.7, 0.0), at(6, 0.0, 150.0)};
    const auto env = environment_matrix(ego, others, 100.0);
    EXPECT_DOUBLE_EQ(env.front, 1.0 - 900.0 / 10000.0);
    EXPECT_DOUBLE_EQ(env.behind, 1.0 - 3600.0 / 10000.0);
    // Heading +y: negative x is on the left, positive x on the right.
    EXPECT_DOUBLE_EQ(env.left, 1.0 - 3.7 * 3.7 / 10000.0);
    EXPECT_DOUBLE_EQ(env.right, 1.0 - 3.7 * 3.7 / 10000.0);
    EXPECT_EQ(environment_entry(ego, others[4], 100.0), 0.0);
}

TEST(Swarm, GroupsAreTransitiveComponentsPerTask) {
    const std::vector<VehicleState> v{at(4, 0.0, 0.0),      at(2, 0.0, 90.0),  at(9, 0.0, 180.0),
                                      at(1, 0.0, 1000.0),   at(7, 0.0, 1050.0), at(3, 0.0, 20.0, "other")};
    const auto groups = form_groups(v, 100.0);
    ASSERT_EQ(groups.size(), 3u);
    EXPECT_EQ(groups[0].members, (std::vector<VehicleId>{1, 7}));
    EXPECT_EQ(groups[1].members, (std::vector<VehicleId>{2, 4, 9}));
    EXPECT_EQ(groups[2].members, (std::vector<VehicleId>{3}));
    EXPECT_EQ(groups[2].task, "other");
}

TEST(Swarm, GroupFormingRejectsDuplicates) {
    const std::vector<VehicleState> v{at(1, 0.0, 0.0), at(1, 0.0, 5.0)};
    EXPECT_THROW(form_groups(v, 100.0), InvalidInput);
    EXPECT_THROW(form_groups({}, 100.0), InvalidInput);
}

TEST(Swarm, RoundFoldsLocallyTrainedModels) {
    std::mt19937_64 rng(21);
    auto c = tiny_config();
    c.learning_rate = 1e-2;
    const auto global = random_params(c.parameter_count(), rng, 0.5);
    VehicleRegistry reg;
    for (VehicleId id : {3, 5, 8}) {
        auto v = at(id, 0.0, static_cast<double>(id));
        v.dataset = random_batch(c, rng, 4);
        reg.emplace(id, std::move(v));
    }
    reg.emplace(6, at(6, 0.0, 6.0));  // no local data
    SwarmGroup group{{3, 5, 6, 8}, "trajectory", {}};
    const auto r = swarm_round(group, reg, global, c);

    EXPECT_EQ(r.contributors, (std::vector<VehicleId>{3, 5, 8}));
    EXPECT_EQ(r.skipped, (std::vector<VehicleId>{6}));
    EXPECT_EQ(r.intra_links, 2u);
    for (std::size_t k = 0; k < 3; ++k) {
        AdamState fresh;
        EXPECT_EQ(r.trained_models[k], train_epoch(global, reg.at(r.contributors[k]).dataset, c, fresh));
    }
    for (std::size_t i = 0; i < global.dim(); ++i) {
        const auto& t = r.trained_models;
        EXPECT_NEAR(r.group_model[i], ((t[0][i] + t[1][i]) / 2 + t[2][i]) / 2, 1e-12);
    }
}

TEST(Swarm, RoundWithoutDataReturnsGlobal) {
    const auto c = tiny_config();
    const ParameterVector global(c.parameter_count(), 0.25);
    VehicleRegistry reg;
    reg.emplace(1, at(1, 0.0, 0.0));
    const auto r = swarm_round({{1}, "trajectory", {}}, reg, global, c);
    EXPECT_FALSE(r.has_upload());
    EXPECT_EQ(r.group_model, global);
    EXPECT_THROW(swarm_round({{2}, "trajectory", {}}, reg, global, c), InvalidInput);
}

TEST(Swarm, GroupLossSumsNeighbouringMembers) {
    const std::vector<double> f{1.0, 2.0, 3.0};
    // ((1 + 0) + (2 + 1) + (3 + 2)) / 3
    EXPECT_DOUBLE_EQ(group_loss_from_member_losses(f), 3.0);
    const std::vector<double> one{4.0};
    EXPECT_DOUBLE_EQ(group_loss_from_member_losses(one), 4.0);
    EXPECT_THROW(group_loss_from_member_losses({}), InvalidInput);
}
