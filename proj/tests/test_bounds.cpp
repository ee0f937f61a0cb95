#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "exitsim/bounds.hpp"

using namespace exitsim;

TEST(Beta, ClosedFormsAgree) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
    for (int i = 0; i < 10000; ++i) {
        const double alpha = u(gen), p = u(gen);
        const BetaValue v = beta_of(alpha, p);
        EXPECT_NEAR(v.beta, v.beta_alt, 1e-12 * std::max(1.0, v.beta));
    }
}

TEST(Beta, KnownPoint) {
    const BetaValue v = beta_of(0.5, 0.5);
    EXPECT_DOUBLE_EQ(v.r, 1.0);
    EXPECT_DOUBLE_EQ(v.beta, 2.0);
}

TEST(Beta, Errors) {
    EXPECT_THROW(beta_of(0.5, 0.0), ParameterError);
    EXPECT_THROW(beta_of(0.5, 1.0), ParameterError);
    EXPECT_THROW(beta_of(0.0, 0.3), ParameterError);
    EXPECT_THROW(beta_of(1.0, 0.3), ParameterError);
    EXPECT_THROW(beta_of(0.5, std::nan("")), ParameterError);
}

TEST(AlphaHat, PostCondition) {
    for (double p : {0.01, 0.1, 0.25, 0.4, 0.49}) {
        const auto a = alpha_hat(p);
        ASSERT_TRUE(a.has_value()) << p;
        EXPECT_GT(*a, p);
        EXPECT_LT(*a, 1.0);
        EXPECT_LT(beta_of(*a, p).beta, 1.0);
        EXPECT_GE(beta_of(*a - 1e-9, p).beta, 1.0 - 1e-9);
    }
}

TEST(AlphaHat, AbsentFromOneHalf) {
    EXPECT_FALSE(alpha_hat(0.5).has_value());
    EXPECT_FALSE(alpha_hat(0.8).has_value());
    EXPECT_THROW(alpha_hat(0.0), ParameterError);
}

TEST(AlphaHat, IncreasesWithP) {
    double prev = 0.0;
    for (double p : {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45}) {
        const double a = *alpha_hat(p);
        EXPECT_GT(a, prev);
        prev = a;
    }
}

TEST(RangeProb, ZeroThreshold) {
    const Estimate e = range_prob(0.0, 1000, 1);
    EXPECT_EQ(e.mean, 1.0);
    EXPECT_EQ(e.se, 0.0);
}

TEST(RangeProb, MonotoneInC) {
    double prev = 1.0;
    for (double c : {0.5, 1.0, 2.0, 4.0}) {
        const double p = range_prob(c, 2000, 3).mean;
        EXPECT_LE(p, prev);
        prev = p;
    }
}

TEST(RangeProb, FinerGridSeesMore) {
    // nested paths: the finer grid contains every coarse node
    const double c = 3.0;
    EXPECT_GE(range_prob(c, 2000, 5, 14).mean, range_prob(c, 2000, 5, 12).mean);
}

TEST(RangeProb, WithinReflectionBounds) {
    // P(max >= r) <= P(range >= r) <= P(max >= r/2) + P(-min >= r/2)
    const double c = 2.0, r = range_threshold(c);
    const Estimate e = range_prob(c, 20000, 7);
    EXPECT_GE(e.mean, 2.0 * (1.0 - normal_cdf(r)) - 4 * e.se);
    EXPECT_LE(e.mean, 4.0 * (1.0 - normal_cdf(r / 2)) + 4 * e.se);
}

TEST(RangeProb, Errors) {
    EXPECT_THROW(range_prob(-1.0, 1000, 1), ParameterError);
    EXPECT_THROW(range_prob(1.0, 10, 1), ParameterError);
    EXPECT_THROW(range_prob(1.0, 1000, 1, 10), ParameterError);
}

TEST(GammaProb, TinyDeltaIsCertain) {
    EXPECT_GE(gamma_prob(1.0, 1.0, 1e-4, 20000, 1).mean, 0.999);
}

TEST(GammaProb, DominatesGamblersRuin) {
    EXPECT_NEAR(gamblers_ruin_bound(1.0, 1.0), 0.853553390593273762, 1e-15);
    const Estimate g = gamma_prob(1.0, 1.0, 4.0, 20000, 2);
    EXPECT_GE(g.mean, gamblers_ruin_bound(1.0, 1.0) - 3 * g.se);
}

TEST(GammaProb, DecreasesWithDelta) {
    double prev = 1.0;
    for (double delta : {0.01, 0.1, 1.0, 10.0}) {
        const double g = gamma_prob(1.0, 0.5, delta, 20000, 3).mean;
        EXPECT_LE(g, prev);
        prev = g;
    }
    EXPECT_THROW(gamma_prob(0.0, 1.0, 1.0, 100, 1), ParameterError);
}

TEST(GammaProb, IncreasesWithC) {
    double prev = 0.0;
    for (double c : {0.25, 0.5, 1.0, 2.0}) {
        const double g = gamma_prob(c, 1.0, 1.0, 20000, 4).mean;
        EXPECT_GE(g, prev);
        prev = g;
    }
}

TEST(GammaProb, StandardErrorIsCalibrated) {
    std::vector<double> vals;
    double se2 = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Estimate e = gamma_prob(1.0, 1.0, 4.0, 1000, 100 + s);
        vals.push_back(e.mean);
        se2 += e.se * e.se;
    }
    double m = 0, v = 0;
    for (double x : vals) m += x;
    m /= 100.0;
    for (double x : vals) v += (x - m) * (x - m);
    v /= 99.0;
    const double ratio = std::sqrt(v / (se2 / 100.0));
    EXPECT_GT(ratio, 1.0 / 1.5);
    EXPECT_LT(ratio, 1.5);
}

TEST(Nu0, Cases) {
    EXPECT_THROW(nu0(0.3, 0.0), UndefinedResultError);
    EXPECT_THROW(nu0(0.3, 1.5), ParameterError);
    EXPECT_EQ(*nu0(0.3, 1.0), 0.0);
    EXPECT_FALSE(nu0(std::nullopt, 0.5).has_value());
    EXPECT_NEAR(*nu0(0.75, 0.5), 0.5, 1e-15);
}

TEST(NuRemark, Values) {
    EXPECT_NEAR(nu_remark(0.0, 1.0), 0.241970724519143350, 1e-16);
    EXPECT_NEAR(nu_remark(1.0, 0.5), 0.215963866052752208, 1e-16);
    EXPECT_NEAR(nu_remark(0.5, 0.1) / 1.15418979400596924e-21, 1.0, 1e-12);
    EXPECT_THROW(nu_remark(0.0, 0.0), DomainError);
    EXPECT_THROW(nu_remark(-1.0, 1.0), ParameterError);
}

TEST(ComputeBounds, Pipeline) {
    const BoundConstants k = compute_bounds(0.5, 20.0, 1.0, 1.0, 1.0, 0.3, 4000, 4000, 11);
    EXPECT_GT(k.p, 0.0);
    EXPECT_LT(k.p, 1.0);
    EXPECT_GT(k.gamma, 0.0);
    EXPECT_NEAR(k.nu_remark, nu_remark(1.0, 0.5), 1e-15);
    EXPECT_NEAR(k.beta, beta_of(0.3, k.p).beta, 1e-15);
    EXPECT_EQ(k.alpha_hat.has_value(), k.p < 0.5);
    EXPECT_EQ(k.nu0.has_value(), k.alpha_hat.has_value());
    EXPECT_THROW(compute_bounds(0.0, 4.0, 1.0, 1.0, 1.0, 0.3, 4000, 4000, 11), DomainError);
}

TEST(Lemma31, FrequenciesAndErgodicMedian) {
    const Lemma31Report r = lemma31_check(0.5, 8.0, 60, 4000, 3);
    const double alpha = 1.0 - normal_cdf(1.0);
    EXPECT_NEAR(r.alpha, 0.158655253931457051, 1e-12);
    for (std::size_t m = 0; m < r.frequency.size(); ++m) EXPECT_NEAR(r.frequency[m], alpha, 5 * r.frequency_se[m] + 1e-3);
    EXPECT_NEAR(r.ergodic_median, alpha, 0.03);
    // the limit statement is a.s.; at k = 30 an independent simulation gives 0.78
    EXPECT_NEAR(r.fraction_within, 0.78, 0.03);
}

TEST(Lemma31, Errors) {
    EXPECT_THROW(lemma31_check(0.5, 6.0, 60, 10, 1), ParameterError);
    EXPECT_THROW(lemma31_check(1.0, 8.0, 60, 10, 1), ParameterError);
    EXPECT_THROW(lemma31_check(0.5, 8.0, 10, 10, 1), ParameterError);
    EXPECT_THROW(lemma31_check(0.5, 8.0, 60, 0, 1), ParameterError);
}
