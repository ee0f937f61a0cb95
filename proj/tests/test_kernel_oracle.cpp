#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "exitsim/kernel_oracle.hpp"

using namespace exitsim;

namespace {

KernelProblem bump_problem(double a, double t0 = 0.0) {
    return KernelProblem(a, KernelData::from_density(bump_density(0.5, 0.25)), t0);
}

}  // namespace

// Values from a 30-digit sine-series evaluation (independent quadrature).
TEST(IntervalSolution, FrozenBumpValues) {
    EXPECT_NEAR(interval_solution(bump_problem(1.0), 0.1, 0.5), 1.17717110738441621, 1e-9);
    EXPECT_NEAR(interval_solution(bump_problem(1.0), 0.1, 0.1), 0.347331853901009480, 1e-9);
    EXPECT_NEAR(interval_solution(bump_problem(0.25), 0.1, 0.5), 2.11255585566165529, 1e-9);
    EXPECT_NEAR(IntervalSeries(bump_problem(1.01), 0.1).mass(), 0.733424108266774924, 1e-9);
}

TEST(IntervalSolution, SingleSineModeDecays) {
    const double a = 0.7;
    const KernelProblem p(a, KernelData::sine_mode(1));
    for (double t : {0.01, 0.1, 0.5}) {
        const double expect = std::exp(-a * std::numbers::pi * std::numbers::pi * t / 2);
        EXPECT_NEAR(interval_solution(p, t, 0.5), expect, 1e-10);
        EXPECT_NEAR(interval_solution(p, t, 0.25), expect * std::sin(std::numbers::pi / 4), 1e-10);
    }
}

TEST(IntervalSolution, VanishesAtEndpoints) {
    const KernelProblem p = bump_problem(1.0);
    EXPECT_EQ(interval_solution(p, 0.05, 0.0), 0.0);
    EXPECT_EQ(interval_solution(p, 0.05, 1.0), 0.0);
}

TEST(IntervalSolution, ZeroElapsedTimeReturnsData) {
    const KernelProblem p = bump_problem(1.0, 0.2);
    const InitialDensity d = bump_density(0.5, 0.25);
    for (double x : {0.3, 0.5, 0.71}) EXPECT_EQ(interval_solution(p, 0.2, x), d(x));
}

TEST(IntervalSolution, TruncationErrors) {
    const KernelProblem p = bump_problem(1.0);
    EXPECT_THROW(IntervalSeries(p, 0.1, 0), ParameterError);
    EXPECT_THROW(interval_solution(p, -0.1, 0.5), DomainError);
    const IntervalSeries s(p, 0.1);
    EXPECT_GE(s.terms(), 16);
    EXPECT_LT(s.tail_bound(), 1e-10);
    // a short series is off by no more than its reported tail bound
    const IntervalSeries short_series(p, 0.1, 3);
    EXPECT_LE(std::abs(short_series.value(0.3) - s.value(0.3)), short_series.tail_bound() + 1e-10);
}

TEST(IntervalSolution, AgreesWithHalflineNearTheWall) {
    const KernelProblem p = bump_problem(1.0);
    for (double t : {0.002, 0.005, 0.01}) {
        for (double x : {0.0, 0.05, 0.1, 0.2}) {
            EXPECT_NEAR(interval_solution(p, t, x), halfline_solution(p, t, x), 1e-6) << t << " " << x;
        }
    }
}

TEST(IntervalSolution, BelowHalflineSolution) {
    const KernelProblem p = bump_problem(0.8);
    for (double t : {0.02, 0.1, 0.4}) {
        for (int i = 0; i <= 20; ++i) {
            const double x = i / 20.0;
            EXPECT_LE(interval_solution(p, t, x), halfline_solution(p, t, x) + 1e-8);
        }
    }
}

TEST(IntervalSolution, MaximumPrinciple) {
    const KernelProblem p = bump_problem(1.0);
    const double sup = p.data().sup;
    for (double t : {1e-3, 0.01, 0.1}) {
        for (int i = 0; i <= 40; ++i) {
            const double v = interval_solution(p, t, i / 40.0);
            EXPECT_GE(v, -1e-10);
            EXPECT_LE(v, sup + 1e-10);
        }
    }
}

TEST(KernelOracle, Linearity) {
    const Bump f(0.4, 0.2, 1.0), g(0.6, 0.3, 2.0);
    // same support for all three, so the quadrature nodes coincide
    const KernelProblem pf(1.0, KernelData::from_function(f, 0.2, 0.9, f.peak()));
    const KernelProblem pg(1.0, KernelData::from_function(g, 0.2, 0.9, g.peak()));
    const KernelProblem ps(1.0, KernelData::from_function([&](double y) { return 3.0 * f(y) - 0.5 * g(y); }, 0.2,
                                                         0.9, 3.0 * f.peak() + 0.5 * g.peak()));
    for (double x : {0.1, 0.35, 0.8}) {
        EXPECT_NEAR(halfline_solution(ps, 0.05, x), 3.0 * halfline_solution(pf, 0.05, x) - 0.5 * halfline_solution(pg, 0.05, x),
                    1e-12);
        EXPECT_NEAR(interval_solution(ps, 0.05, x), 3.0 * interval_solution(pf, 0.05, x) - 0.5 * interval_solution(pg, 0.05, x),
                    1e-12);
    }
}

TEST(HalflineSolution, ZeroAtTheWall) {
    const KernelProblem p = bump_problem(1.0);
    for (double t : {1e-4, 0.1, 2.0}) EXPECT_EQ(halfline_solution(p, t, 0.0), 0.0);
}

TEST(HalflineSolution, TendsToInitialData) {
    const KernelProblem p = bump_problem(1.0);
    const InitialDensity d = bump_density(0.5, 0.25);
    for (double x : {0.4, 0.5, 0.6}) EXPECT_NEAR(halfline_solution(p, 1e-8, x), d(x), 1e-6);
}

TEST(HalflineSolution, DomainErrors) {
    const KernelProblem p = bump_problem(1.0, 0.5);
    EXPECT_THROW(halfline_solution(p, 0.5, 0.1), DomainError);
    EXPECT_THROW(mass_flux(p, 0.4), DomainError);
    EXPECT_THROW(halfline_solution(p, 0.6, -0.1), DomainError);
}

TEST(HalflineMass, LosesMassOverTime) {
    const KernelProblem p = bump_problem(1.0);
    const double m1 = halfline_mass(p, 0.05), m2 = halfline_mass(p, 0.2);
    EXPECT_LT(m1, 1.0);
    EXPECT_LT(m2, m1);
    // the mass formula is the integral of the solution
    const double direct = GaussLegendre(64).integrate([&](double x) { return halfline_solution(p, 0.05, x); }, 0.0, 4.0, 64);
    EXPECT_NEAR(direct, m1, 1e-9);
}

TEST(MassFlux, ZeroData) {
    const KernelProblem p(1.0, KernelData::from_function([](double) { return 0.0; }, 0.2, 0.8, 0.0));
    EXPECT_EQ(mass_flux(p, 0.1), 0.0);
}

TEST(MassFlux, MatchesTimeDerivativeOfMass) {
    const KernelProblem p = bump_problem(1.0);
    const double t = 0.1, h = 1e-4;
    const double fd = (halfline_mass(p, t + h) - halfline_mass(p, t - h)) / (2 * h);
    EXPECT_NEAR(mass_flux(p, t), -fd, 1e-6);
}

TEST(MassFlux, EqualsHalfDiffusionTimesWallSlope) {
    const KernelProblem p = bump_problem(0.6);
    const double t = 0.1, h = 1e-4;
    // fourth-order one-sided slope at 0, using psi(0) = 0
    const double f1 = halfline_solution(p, t, h), f2 = halfline_solution(p, t, 2 * h);
    const double f3 = halfline_solution(p, t, 3 * h), f4 = halfline_solution(p, t, 4 * h);
    const double slope = (48 * f1 - 36 * f2 + 16 * f3 - 3 * f4) / (12 * h);
    EXPECT_NEAR(mass_flux(p, t), 0.5 * p.a() * slope, 1e-8 * std::max(1.0, std::abs(slope)));
}

TEST(MassFlux, MatchesYIntegralForm) {
    // (2 pi a s^3)^(-1/2) int y f(y) exp(-y^2 / (2 a s)) dy by an independent adaptive rule
    const double a = 1.3, t = 0.07;
    const KernelProblem p = bump_problem(a);
    const InitialDensity d = bump_density(0.5, 0.25);
    const double integral = adaptive_integrate([&](double y) { return y * d(y) * std::exp(-y * y / (2 * a * t)); },
                                               0.25, 0.75, 1e-15, 20);
    EXPECT_NEAR(mass_flux(p, t), integral / std::sqrt(2 * std::numbers::pi * a * t * t * t), 1e-8);
}

TEST(KernelData, GridDataInterpolates) {
    const KernelData d = KernelData::from_grid({0.0, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(d(0.25), 0.5);
    EXPECT_DOUBLE_EQ(d(0.5), 1.0);
    // hat function: first sine coefficient is 8 / pi^2
    const KernelProblem p(1.0, d);
    const double t = 0.3;
    const double expect = 8.0 / (std::numbers::pi * std::numbers::pi) * std::exp(-std::numbers::pi * std::numbers::pi * t / 2);
    EXPECT_NEAR(interval_solution(p, t, 0.5), expect, 1e-6);
}
