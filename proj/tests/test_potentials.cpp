#include "hmc/errors.hpp"
#include "hmc/potentials.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hmc;

namespace
{
Potential two_scale()
{
    Vector ev(2), b(2);
    ev << 1.0, 4.0;
    b << 1.0, -1.0;
    return Potential::quadratic_diagonal(ev, b);
}

std::vector<Potential> suite()
{
    RandomStream s(5, 0);
    std::vector<Potential> ps;
    ps.push_back(two_scale());
    ps.push_back(Potential::quadratic_spread(6, 0.5, 30.0, test::normal_vector(s, 6)));
    ps.push_back(Potential::quadratic_matrix(test::random_spd(s, 4, 2.0, 9.0), test::normal_vector(s, 4)));
    ps.push_back(Potential::logcosh(3, 1.0, 100.0));
    ps.push_back(Potential::logcosh(5, 0.5, 1.0));
    return ps;
}
}  // namespace

TEST(Quadratic, ValueAndGradientAtOrigin)
{
    auto const p = two_scale();
    Vector const x = Vector::Zero(2);
    EXPECT_DOUBLE_EQ(p.value(x), 2.5);
    Vector const g = p.gradient(x);
    EXPECT_DOUBLE_EQ(g(0), -1.0);
    EXPECT_DOUBLE_EQ(g(1), 4.0);
    EXPECT_DOUBLE_EQ(p.mu(), 1.0);
    EXPECT_DOUBLE_EQ(p.lipschitz(), 4.0);
    EXPECT_DOUBLE_EQ(p.kappa(), 4.0);
}

TEST(Quadratic, MinimizerIsCenter)
{
    auto const p = two_scale();
    EXPECT_EQ(p.minimizer(), (Vector(2) << 1.0, -1.0).finished());
    EXPECT_LT(p.gradient(p.minimizer()).norm(), 1e-15);
}

TEST(Quadratic, SpreadTwoDimensionalIsTwoScaleGaussian)
{
    auto const p = Potential::quadratic_spread(2, 1.0, 100.0);
    ASSERT_NE(p.quadratic(), nullptr);
    EXPECT_DOUBLE_EQ(p.quadratic()->eigenvalues(0), 1.0);
    EXPECT_DOUBLE_EQ(p.quadratic()->eigenvalues(1), 100.0);
}

TEST(Quadratic, DenseMatrixMatchesDirectProduct)
{
    RandomStream s(11, 0);
    Matrix const a = test::random_spd(s, 5, 1.0, 20.0);
    Vector const b = test::normal_vector(s, 5);
    auto const p = Potential::quadratic_matrix(a, b);
    EXPECT_NEAR(p.mu(), 1.0, 1e-12);
    EXPECT_NEAR(p.lipschitz(), 20.0, 1e-12);
    for (int k = 0; k < 20; ++k)
    {
        Vector const x = test::normal_vector(s, 5, 3.0);
        Vector const direct = a * (x - b);
        EXPECT_LT((p.gradient(x) - direct).norm(), 1e-12 * (1 + direct.norm()));
        EXPECT_NEAR(p.value(x), 0.5 * (x - b).dot(a * (x - b)), 1e-12 * (1 + p.value(x)));
    }
}

TEST(Quadratic, RejectsBadParameters)
{
    Vector ev(2);
    ev << 0.0, 1.0;
    EXPECT_THROW(Potential::quadratic_diagonal(ev), InputError);
    ev << 1.0, 5.0;
    EXPECT_THROW(Potential::quadratic_diagonal(ev, {}, 2.0, 5.0), InputError);
    EXPECT_THROW(Potential::quadratic_diagonal(ev, {}, 1.0, 4.0), InputError);
    EXPECT_THROW(Potential::quadratic_diagonal(ev, Vector::Zero(3)), InputError);
    EXPECT_THROW(Potential::quadratic_spread(2, 3.0, 1.0), InputError);
}

TEST(LogCosh, ValueAndGradientAtOne)
{
    auto const p = Potential::logcosh(1, 1.0, 2.0);
    Vector const x = Vector::Constant(1, 1.0);
    EXPECT_NEAR(p.gradient(x)(0), 1.7615941559557649, 1e-15);
    EXPECT_NEAR(p.value(x), 0.9337808304830271, 1e-15);
    EXPECT_EQ(p.minimizer(), Vector::Zero(1));
}

TEST(LogCosh, LargeArgumentsStayFinite)
{
    auto const p = Potential::logcosh(1, 1.0, 3.0);
    Vector const x = Vector::Constant(1, 1000.0);
    double const expect = 0.5 * 1e6 + 2.0 * (1000.0 - std::log(2.0));
    EXPECT_NEAR(p.value(x), expect, 1e-9 * expect);
    EXPECT_NEAR(p.gradient(x)(0), 1000.0 + 2.0, 1e-12);
}

TEST(LogCosh, RejectsBadParameters)
{
    EXPECT_THROW(Potential::logcosh(0, 1.0, 2.0), InputError);
    EXPECT_THROW(Potential::logcosh(2, 0.0, 2.0), InputError);
    EXPECT_THROW(Potential::logcosh(2, 2.0, 1.0), InputError);
}

TEST(PotentialKindNames, RoundTrip)
{
    EXPECT_EQ(parse_potential_kind(to_string(PotentialKind::quadratic)), PotentialKind::quadratic);
    EXPECT_EQ(parse_potential_kind(to_string(PotentialKind::logcosh)), PotentialKind::logcosh);
    EXPECT_THROW(parse_potential_kind("banana"), InputError);
}

TEST(Potentials, GradientMatchesCentralDifferences)
{
    RandomStream s(3, 0);
    for (auto const& p : suite())
    {
        for (int k = 0; k < 20; ++k)
        {
            Vector x = test::normal_vector(s, p.dim(), 2.0);
            Vector const g = p.gradient(x);
            for (Eigen::Index i = 0; i < p.dim(); ++i)
            {
                double const h = 1e-5 * (1 + std::abs(x(i)));
                Vector xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                double const fd = (p.value(xp) - p.value(xm)) / (2 * h);
                EXPECT_NEAR(fd, g(i), 1e-6 * (1 + std::abs(g(i))) * p.lipschitz());
            }
        }
    }
}

TEST(Potentials, SecantCurvatureLiesBetweenMuAndL)
{
    RandomStream s(4, 0);
    for (auto const& p : suite())
    {
        for (int k = 0; k < 200; ++k)
        {
            Vector const x = test::normal_vector(s, p.dim(), 3.0);
            Vector const y = test::normal_vector(s, p.dim(), 3.0);
            double const c = directional_secant_curvature(p, x, y);
            EXPECT_GE(c, p.mu() * (1 - 1e-10));
            EXPECT_LE(c, p.lipschitz() * (1 + 1e-10));
        }
    }
}

TEST(Potentials, GradientIsLipschitzAndStronglyMonotone)
{
    RandomStream s(6, 0);
    for (auto const& p : suite())
    {
        for (int k = 0; k < 200; ++k)
        {
            Vector const x = test::normal_vector(s, p.dim(), 3.0);
            Vector const y = test::normal_vector(s, p.dim(), 3.0);
            double const dist = (x - y).norm();
            Vector const dg = p.gradient(x) - p.gradient(y);
            EXPECT_LE(dg.norm(), p.lipschitz() * dist * (1 + 1e-12));
            double const lower = p.value(x) + p.gradient(x).dot(y - x) + 0.5 * p.mu() * dist * dist;
            EXPECT_GE(p.value(y), lower - 1e-10 * (1 + std::abs(p.value(y))));
        }
    }
}

TEST(Potentials, CurvatureOfIdenticalPointsIsDegenerate)
{
    auto const p = Potential::logcosh(2, 1.0, 2.0);
    Vector const x = Vector::Ones(2);
    EXPECT_THROW(directional_secant_curvature(p, x, x), DegenerateInputError);
}

TEST(Potentials, DimensionMismatchIsAnInputError)
{
    auto const p = Potential::logcosh(3, 1.0, 2.0);
    EXPECT_THROW(p.value(Vector::Zero(2)), InputError);
    EXPECT_THROW(p.gradient(Vector::Zero(4)), InputError);
}

TEST(Potentials, HamiltonianEnergyAddsKineticTerm)
{
    auto const p = two_scale();
    PhaseState const s{Vector::Zero(2), (Vector(2) << 3.0, 4.0).finished()};
    EXPECT_DOUBLE_EQ(hamiltonian_energy(p, s), 2.5 + 12.5);
}
