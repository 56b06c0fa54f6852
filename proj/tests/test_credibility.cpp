#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sfdl/credibility.hpp"
#include "sfdl/errors.hpp"

using namespace sfdl;

namespace {

// Composite Simpson rule on [a, b] with n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST(Credibility, RobustnessIsLogRatioWithFloor) {
    EXPECT_DOUBLE_EQ(robustness(4, 4), 1.0);
    EXPECT_DOUBLE_EQ(robustness(2, 4), 0.5);
    EXPECT_DOUBLE_EQ(robustness(3, 9), 0.5);
    EXPECT_DOUBLE_EQ(robustness(1, 6), kRobustnessFloor);
    EXPECT_DOUBLE_EQ(robustness(1, 1), kRobustnessFloor);
    EXPECT_THROW(robustness(5, 4), InvalidInput);
    EXPECT_THROW(robustness(0, 4), InvalidInput);
}

TEST(Credibility, RobustnessIsMonotoneInGroupSize) {
    for (std::size_t k = 2; k <= 20; ++k) {
        for (std::size_t n = 2; n <= k; ++n) EXPECT_GT(robustness(n, k), robustness(n - 1, k) - 1e-15);
    }
}

TEST(Credibility, DeltaIsRelativeImprovement) {
    EXPECT_DOUBLE_EQ(*effectiveness_delta(10.0, 8.0), 0.2);
    EXPECT_DOUBLE_EQ(*effectiveness_delta(10.0, 12.0), -0.2);
    EXPECT_FALSE(effectiveness_delta(0.0, 1.0).has_value());
}

TEST(Credibility, ObserveUpdatesBetaCounts) {
    const CredibilityState prior;
    EXPECT_EQ(observe(prior, 0.1).p, 2.0);
    EXPECT_EQ(observe(prior, 0.1).q, 1.0);
    EXPECT_EQ(observe(prior, 0.0).q, 2.0);
    EXPECT_EQ(observe(prior, -0.3).q, 2.0);
    EXPECT_EQ(observe(prior, std::nullopt), prior);
}

TEST(Credibility, TwentyObservationsConverge) {
    CredibilityState good, bad;
    for (int i = 0; i < 20; ++i) {
        good = observe(good, 1.0);
        bad = observe(bad, -1.0);
    }
    EXPECT_NEAR(effectiveness(good), 21.0 / 22.0, 1e-12);
    EXPECT_NEAR(effectiveness(bad), 1.0 / 22.0, 1e-12);
}

TEST(Credibility, ObservationOrderDoesNotMatter) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> deltas;
        for (int i = 0; i < 30; ++i) deltas.push_back(std::uniform_real_distribution<double>(-1, 1)(rng));
        CredibilityState a;
        for (double d : deltas) a = observe(a, d);
        std::shuffle(deltas.begin(), deltas.end(), rng);
        CredibilityState b;
        for (double d : deltas) b = observe(b, d);
        EXPECT_EQ(a, b);
    }
}

TEST(Credibility, CombinationRules) {
    CredibilityState s{3.0, 1.0, 2, 4};
    EXPECT_DOUBLE_EQ(credibility(s, CredibilityRule::product), 0.5 * 0.75);
    EXPECT_DOUBLE_EQ(credibility(s, CredibilityRule::mean), 0.5 * (0.5 + 0.75));
    EXPECT_DOUBLE_EQ(credibility(s, CredibilityRule::effectiveness_only), 0.75);
    for (auto rule : {CredibilityRule::product, CredibilityRule::mean, CredibilityRule::effectiveness_only}) {
        EXPECT_EQ(parse_credibility_rule(to_string(rule)), rule);
    }
    EXPECT_THROW(parse_credibility_rule("max"), InvalidInput);
}

TEST(Credibility, NormalizedWeightsFormOrderedSimplex) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(1e-3, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> c(1 + rng() % 12);
        for (double& v : c) v = u(rng);
        const auto w = normalize_weights(c).weights;
        ASSERT_EQ(w.size(), c.size());
        EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-9);
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (std::size_t j = 0; j < c.size(); ++j) {
                if (c[i] > c[j]) EXPECT_GE(w[i], w[j]);
            }
        }
    }
}

TEST(Credibility, NormalizeRejectsDegenerateInput) {
    EXPECT_THROW(normalize_weights({}), InvalidInput);
    const std::vector<double> zero{1.0, 0.0};
    EXPECT_THROW(normalize_weights(zero), InvalidInput);
    const std::vector<double> nan{1.0, std::nan("")};
    EXPECT_THROW(normalize_weights(nan), InvalidInput);
}

TEST(Credibility, BetaDensityMatchesClosedFormAndQuadrature) {
    // Beta(2, 3) = 12 x (1 - x)^2.
    EXPECT_NEAR(beta_pdf(0.3, 2.0, 3.0), 12.0 * 0.3 * 0.49, 1e-12);
    EXPECT_NEAR(beta_pdf(0.5, 1.0, 1.0), 1.0, 1e-12);
    for (auto [p, q] : {std::pair{2.0, 3.0}, std::pair{5.0, 2.0}, std::pair{21.0, 1.0}, std::pair{3.5, 7.25}}) {
        // Every shape here has p, q >= 1, so the density is finite up to the endpoints.
        const auto f = [&](double x) { return beta_pdf(std::clamp(x, 1e-15, 1.0 - 1e-15), p, q); };
        EXPECT_NEAR(simpson(f, 0.0, 1.0, 20000), 1.0, 1e-6) << p << "," << q;
        const auto xf = [&](double x) { return x * f(x); };
        EXPECT_NEAR(simpson(xf, 0.0, 1.0, 20000), p / (p + q), 1e-6) << p << "," << q;
    }
    EXPECT_THROW(beta_pdf(0.0, 1.0, 1.0), InvalidInput);
    EXPECT_THROW(beta_pdf(0.5, 0.0, 1.0), InvalidInput);
}
