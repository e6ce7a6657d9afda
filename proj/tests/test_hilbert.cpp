#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sapsim/hilbert.hpp"
#include "support/oracles.hpp"

namespace sapsim {
namespace {

using testing::std_normals;

PathEnsemble scalar_samples(const std::vector<double>& xs) {
    PathEnsemble ens(TimeGrid{1.0, 1}, xs.size(), 1, 0);
    for (std::size_t i = 0; i < xs.size(); ++i) ens.state(i, 0)[0] = xs[i];
    return ens;
}

TEST(HilbertVec, RejectsZeroDimension) {
    EXPECT_THROW(HilbertVec(std::size_t{0}), InvalidInput);
    EXPECT_THROW(HilbertVec(std::vector<double>{}), InvalidInput);
}

TEST(HilbertVec, FiniteFactoryRejectsNaN) {
    EXPECT_THROW(HilbertVec::finite({1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
    EXPECT_NO_THROW(HilbertVec::finite({1.0, 2.0}));
}

TEST(HilbertVec, ArithmeticChecksDimensions) {
    HilbertVec a{1.0, 2.0};
    const HilbertVec b{1.0, 2.0, 3.0};
    EXPECT_THROW(a += b, InvalidInput);
    EXPECT_EQ((HilbertVec{1.0, 2.0} + HilbertVec{3.0, 4.0}), (HilbertVec{4.0, 6.0}));
    EXPECT_EQ((2.0 * HilbertVec{1.0, -1.0}), (HilbertVec{2.0, -2.0}));
}

TEST(Norm, ZeroVectorIsZero) { EXPECT_EQ(norm(HilbertVec(4)), 0.0); }

TEST(Norm, BasisVectorIsOne) { EXPECT_EQ(norm(HilbertVec::basis(4, 0)), 1.0); }

TEST(Norm, PythagoreanTriple) { EXPECT_EQ(norm(HilbertVec{3.0, 4.0, 0.0, 0.0}), 5.0); }

TEST(Norm, NonFiniteEntryThrows) {
    HilbertVec v{1.0, 0.0};
    v[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(norm(v), InvalidInput);
    v[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(norm(v), InvalidInput);
}

TEST(Norm, TriangleInequalityAndHomogeneity) {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> scale(-10.0, 10.0);
    for (int trial = 0; trial < 2000; ++trial) {
        HilbertVec u(8), v(8);
        for (std::size_t n = 0; n < 8; ++n) {
            u[n] = normal(gen);
            v[n] = normal(gen);
        }
        const double s = scale(gen);
        EXPECT_LE(norm(u + v), (norm(u) + norm(v)) * (1.0 + 1e-12));
        EXPECT_NEAR(norm(s * u), std::abs(s) * norm(u), 1e-12 * std::abs(s) * norm(u));
    }
}

TEST(NormPow, MatchesNormPower) {
    const HilbertVec v{1.0, -2.0, 0.5};
    for (double p : {2.0, 2.5, 3.0, 4.0}) {
        EXPECT_NEAR(norm_pow(v.coeffs(), p), std::pow(norm(v), p), 1e-13 * std::pow(norm(v), p));
    }
}

TEST(TimeGrid, StepsForRequiresIntegerMultiple) {
    const TimeGrid grid{0.01, 101};
    EXPECT_EQ(grid.steps_for(1.0), 100u);
    EXPECT_EQ(grid.steps_for(0.0), 0u);
    EXPECT_THROW(grid.steps_for(0.015), InvalidInput);
    EXPECT_DOUBLE_EQ(grid.horizon(), 1.0);
}

TEST(PthMoment, DeterministicEnsembleIsExact) {
    const TimeGrid grid{0.5, 3};
    const PathEnsemble ens = testing::deterministic_ensemble(
        grid, 50, 3, [](double) { return HilbertVec{0.0, 2.0, 0.0}; });
    for (std::size_t k = 0; k < grid.points; ++k) {
        const Estimate e = pth_moment(ens, k, 4.0);
        EXPECT_EQ(e.mean, 16.0);
        EXPECT_EQ(e.std_error, 0.0);
        EXPECT_EQ(e.samples, 50u);
    }
}

TEST(PthMoment, GaussianFourthMoment) {
    const Estimate e = pth_moment(scalar_samples(std_normals(100000, 1)), 0, 4.0);
    EXPECT_LE(std::abs(e.mean - 3.0), 3.0 * e.std_error);
}

TEST(PthMoment, GaussianSecondMoment) {
    const Estimate e = pth_moment(scalar_samples(std_normals(100000, 2)), 0, 2.0);
    EXPECT_LE(std::abs(e.mean - 1.0), 3.0 * e.std_error);
}

TEST(PthMoment, ErrorShrinksWithMorePaths) {
    double small = 0.0, large = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        small += std::abs(pth_moment(scalar_samples(std_normals(1000, 100 + seed)), 0, 2.0).mean - 1.0);
        large += std::abs(pth_moment(scalar_samples(std_normals(100000, 200 + seed)), 0, 2.0).mean - 1.0);
    }
    EXPECT_LT(large, small);
}

TEST(PthMoment, RejectsBadOrderAndIndex) {
    const PathEnsemble ens = scalar_samples({1.0, 2.0});
    EXPECT_THROW(pth_moment(ens, 0, 1.5), InvalidInput);
    EXPECT_THROW(pth_moment(ens, 1, 2.0), InvalidInput);
}

TEST(PthMoment, EmptyEnsembleThrows) {
    PathEnsemble ens = scalar_samples({1.0, 2.0});
    ens.mark_invalid(0);
    ens.mark_invalid(1);
    EXPECT_THROW(pth_moment(ens, 0, 2.0), InvalidInput);
}

TEST(PthMoment, InvalidPathsAreExcludedAndCounted) {
    PathEnsemble ens = scalar_samples({1.0, 100.0, 3.0});
    ens.mark_invalid(1);
    const Estimate e = pth_moment(ens, 0, 2.0);
    EXPECT_DOUBLE_EQ(e.mean, 5.0);
    EXPECT_EQ(e.samples, 2u);
    EXPECT_EQ(moment_series(ens, 2.0).excluded_paths, 1u);
}

TEST(PthMoment, ElementaryPowerInequalityOnSampledPairs) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> normal;
    for (double p : {2.0, 3.0, 4.0}) {
        for (int trial = 0; trial < 20; ++trial) {
            PathEnsemble x(TimeGrid{1.0, 1}, 200, 4, 0), y(TimeGrid{1.0, 1}, 200, 4, 0),
                sum(TimeGrid{1.0, 1}, 200, 4, 0);
            const double shift = normal(gen);
            for (std::size_t i = 0; i < 200; ++i) {
                for (std::size_t n = 0; n < 4; ++n) {
                    x.state(i, 0)[n] = normal(gen) + shift;
                    y.state(i, 0)[n] = 3.0 * normal(gen);
                    sum.state(i, 0)[n] = x.state(i, 0)[n] + y.state(i, 0)[n];
                }
            }
            const double lhs = pth_moment(sum, 0, p).mean;
            const double rhs =
                std::pow(2.0, p - 1.0) * (pth_moment(x, 0, p).mean + pth_moment(y, 0, p).mean);
            EXPECT_LE(lhs, rhs * (1.0 + 1e-12));
        }
    }
}

TEST(MeanEstimate, UnbiasedStandardError) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const Estimate e = mean_estimate(xs);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    // Sample variance 5/3, so stderr = sqrt(5/12).
    EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 12.0), 1e-15);
    EXPECT_THROW(mean_estimate(std::vector<double>{}), InvalidInput);
    EXPECT_EQ(mean_estimate(std::vector<double>{7.0}).std_error, 0.0);
}

TEST(MeanEstimate, CompensatedSumKeepsSmallTerms) {
    std::vector<double> xs(1001, 1e-16);
    xs[0] = 1.0;
    EXPECT_DOUBLE_EQ(mean_estimate(xs).mean * 1001.0, 1.0 + 1000 * 1e-16);
}

TEST(SupPnorm, ConstantSeries) {
    MomentSeries s;
    s.p = 4.0;
    for (int k = 0; k < 5; ++k) s.push_back(k, {16.0, 0.0, 1});
    EXPECT_DOUBLE_EQ(sup_pnorm(s), 2.0);
}

TEST(SupPnorm, SelectsMaximum) {
    MomentSeries s;
    s.p = 2.0;
    s.push_back(0.0, {0.0, 0.0, 1});
    s.push_back(1.0, {1.0, 0.0, 1});
    s.push_back(2.0, {0.5, 0.0, 1});
    EXPECT_DOUBLE_EQ(sup_pnorm(s), 1.0);
}

TEST(SupPnorm, SingletonAndEmpty) {
    MomentSeries s;
    s.p = 2.0;
    EXPECT_THROW(sup_pnorm(s), InvalidInput);
    s.push_back(0.0, {9.0, 0.0, 1});
    EXPECT_DOUBLE_EQ(sup_pnorm(s), 3.0);
}

TEST(DifferenceMomentSeries, RequiresMatchingEnsembles) {
    const PathEnsemble a(TimeGrid{0.1, 3}, 2, 2, 0);
    const PathEnsemble b(TimeGrid{0.1, 4}, 2, 2, 0);
    EXPECT_THROW(difference_moment_series(a, b, 2.0), InvalidInput);
}

TEST(DifferenceMomentSeries, PairsPathsAndSkipsInvalidOnEitherSide) {
    PathEnsemble a(TimeGrid{0.1, 1}, 3, 1, 0), b(TimeGrid{0.1, 1}, 3, 1, 0);
    a.state(0, 0)[0] = 1.0;
    a.state(1, 0)[0] = 5.0;
    a.state(2, 0)[0] = 2.0;
    b.state(2, 0)[0] = 4.0;
    b.mark_invalid(1);
    const MomentSeries d = difference_moment_series(a, b, 2.0);
    EXPECT_DOUBLE_EQ(d.estimate[0], (1.0 + 4.0) / 2.0);
    EXPECT_EQ(d.excluded_paths, 1u);
}

TEST(WriteCsv, HeaderAndRoundTrip) {
    MomentSeries s;
    s.p = 2.0;
    s.push_back(0.0, {1.0 / 3.0, 0.1, 10});
    s.push_back(0.25, {std::exp(1.0), 0.0, 10});
    std::ostringstream os;
    write_csv(os, s);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,estimate,stderr");
    for (std::size_t k = 0; k < s.size(); ++k) {
        std::getline(is, line);
        double t = 0, e = 0, se = 0;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &e, &se), 3);
        EXPECT_EQ(t, s.t[k]);
        EXPECT_EQ(e, s.estimate[k]);
        EXPECT_EQ(se, s.std_error[k]);
    }
}

}  // namespace
}  // namespace sapsim
