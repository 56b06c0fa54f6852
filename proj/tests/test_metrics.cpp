#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sfdl/errors.hpp"
#include "sfdl/metrics.hpp"

using namespace sfdl;

TEST(Metrics, IdenticalSequencesAreExact) {
    const std::vector<Waypoint> a{{1.0, 2.0}, {-3.0, 0.5}};
    EXPECT_EQ(metric_loss(a, a), 0.0);
    EXPECT_EQ(metric_prediction_error(a, a), 0.0);
    EXPECT_EQ(metric_prediction_accuracy(a, a), 1.0);
}

TEST(Metrics, ThreeFourOffset) {
    const std::vector<Waypoint> p{{3.0, 4.0}};
    const std::vector<Waypoint> o{{0.0, 0.0}};
    EXPECT_EQ(metric_loss(p, o), 25.0);
    EXPECT_EQ(metric_prediction_error(p, o), 5.0);
}

TEST(Metrics, ErrorIsMeanDistance) {
    const std::vector<Waypoint> p{{3.0, 4.0}, {1.0, 1.0}};
    const std::vector<Waypoint> o{{0.0, 0.0}, {1.0, 1.0}};
    EXPECT_EQ(metric_prediction_error(p, o), 2.5);
}

TEST(Metrics, AccuracyAppliesTenMeterThreshold) {
    const std::vector<Waypoint> o{{0.0, 0.0}, {0.0, 0.0}};
    const std::vector<Waypoint> p{{3.0, 4.0}, {9.0, 12.0}};  // errors 5 and 15
    EXPECT_EQ(metric_prediction_accuracy(p, o), 0.5);
    const std::vector<Waypoint> edge{{6.0, 8.0}};  // exactly 10 m
    const std::vector<Waypoint> zero{{0.0, 0.0}};
    EXPECT_EQ(metric_prediction_accuracy(edge, zero), 1.0);
}

TEST(Metrics, MismatchedOrEmptyInputIsRejected) {
    const std::vector<Waypoint> one{{0.0, 0.0}};
    const std::vector<Waypoint> two{{0.0, 0.0}, {1.0, 1.0}};
    EXPECT_THROW(metric_loss(one, two), InvalidInput);
    EXPECT_THROW(metric_prediction_error(one, two), InvalidInput);
    EXPECT_THROW(metric_prediction_accuracy(one, two), InvalidInput);
    EXPECT_THROW(metric_loss({}, {}), InvalidInput);
}

TEST(Metrics, TrajectoryAccuracyClassifiesWholeHorizons) {
    const std::vector<Waypoint> o(4, Waypoint{0.0, 0.0});
    // First trajectory errors 5 and 15 (mean 10, positive), second 15 and 15.
    const std::vector<Waypoint> p{{3.0, 4.0}, {9.0, 12.0}, {9.0, 12.0}, {12.0, 9.0}};
    EXPECT_EQ(trajectory_prediction_accuracy(p, o, 2), 0.5);
    EXPECT_THROW(trajectory_prediction_accuracy(p, o, 3), InvalidInput);
}

class MetricProperties : public ::testing::Test {
protected:
    std::mt19937_64 rng{2718};
    std::pair<std::vector<Waypoint>, std::vector<Waypoint>> random_pairs() {
        std::uniform_real_distribution<double> u(-20.0, 20.0);
        const std::size_t n = 1 + rng() % 40;
        std::vector<Waypoint> p(n), o(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = {u(rng), u(rng)};
            o[i] = {u(rng), u(rng)};
        }
        return {p, o};
    }
};

TEST_F(MetricProperties, LossDominatesSquaredError) {
    for (int trial = 0; trial < 500; ++trial) {
        const auto [p, o] = random_pairs();
        const double e = metric_prediction_error(p, o);
        EXPECT_GE(metric_loss(p, o), e * e - 1e-9);
    }
}

TEST_F(MetricProperties, EqualDistancesMakeLossEqualSquaredError) {
    std::vector<Waypoint> p, o;
    for (int i = 0; i < 8; ++i) {
        const double a = 0.7 * i;
        p.push_back({4.0 * std::cos(a), 4.0 * std::sin(a)});
        o.push_back({0.0, 0.0});
    }
    EXPECT_NEAR(metric_loss(p, o), std::pow(metric_prediction_error(p, o), 2), 1e-12);
}

TEST_F(MetricProperties, AccuracyIsMonotoneInThreshold) {
    for (int trial = 0; trial < 500; ++trial) {
        const auto [p, o] = random_pairs();
        const double a20 = metric_prediction_accuracy(p, o, 20.0);
        const double a10 = metric_prediction_accuracy(p, o, 10.0);
        const double a5 = metric_prediction_accuracy(p, o, 5.0);
        EXPECT_GE(a20, a10);
        EXPECT_GE(a10, a5);
        EXPECT_GE(a5, 0.0);
        EXPECT_LE(a20, 1.0);
    }
}

TEST_F(MetricProperties, LockstepPermutationLeavesMetricsUnchanged) {
    for (int trial = 0; trial < 200; ++trial) {
        auto [p, o] = random_pairs();
        std::vector<std::size_t> order(p.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Waypoint> pp, oo;
        for (auto i : order) {
            pp.push_back(p[i]);
            oo.push_back(o[i]);
        }
        EXPECT_NEAR(metric_loss(p, o), metric_loss(pp, oo), 1e-9);
        EXPECT_NEAR(metric_prediction_error(p, o), metric_prediction_error(pp, oo), 1e-12);
        EXPECT_EQ(metric_prediction_accuracy(p, o), metric_prediction_accuracy(pp, oo));
    }
}
