#include "pathtrace/pathtrace.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pathtrace;

namespace {

Matrix row(std::initializer_list<double> v)
{
    Matrix m(1, static_cast<Index>(v.size()));
    Index i = 0;
    for (double d : v) m(0, i++) = d;
    return m;
}

Vector vec(std::initializer_list<double> v)
{
    Vector x(static_cast<Index>(v.size()));
    Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

} // namespace

TEST(SolveBordered, DecoupledSystem)
{
    const Vector y = solve_bordered(row({1.0, 0.0}), vec({0.0, 1.0}), vec({3.0}), 0.0);
    EXPECT_NEAR(y[0], 3.0, 1e-15);
    EXPECT_NEAR(y[1], 0.0, 1e-15);
}

TEST(SolveBordered, HandSolvedTwoByTwo)
{
    const double s = 1.0 / std::sqrt(2.0);
    const BorderedSystem sys{row({2.0, 1.0}), vec({s, s}), vec({1.0}), 0.0};
    const Vector y = solve_bordered(sys);
    EXPECT_NEAR(y[0], 1.0, 1e-14);
    EXPECT_NEAR(y[1], -1.0, 1e-14);
}

TEST(SolveBordered, AgreesWithFullPivotEliminationOnRandomStacks)
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(1, 30);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = dim(rng);
        const Matrix a = random_matrix(n, n + 1, rng);
        const Vector border = random_matrix(n + 1, 1, rng).col(0);
        const Vector top = random_matrix(n, 1, rng).col(0);
        const double bottom = g(rng);
        const Matrix m = stack_bordered(a, border);
        Eigen::JacobiSVD<Matrix> svd(m);
        const double cond = svd.singularValues()(0) / svd.singularValues()(n);
        if (cond > 1e6) continue;
        Vector rhs(n + 1);
        rhs << top, bottom;
        const Vector y = solve_bordered(a, border, top, bottom);
        const Vector ref = oracle::solve_full_pivot(m, rhs);
        EXPECT_LE((y - ref).norm(), 1e-10 * (1.0 + ref.norm()));
        EXPECT_LE((m * y - rhs).norm(), 1e-10 * (1.0 + rhs.norm()));
    }
}

TEST(SolveBordered, ZeroBottomGivesBorderOrthogonalSolution)
{
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 1 + trial % 12;
        const Matrix a = random_matrix(n, n + 1, rng);
        const Vector border = random_matrix(n + 1, 1, rng).col(0);
        const Vector y = solve_bordered(a, border, random_matrix(n, 1, rng).col(0), 0.0);
        EXPECT_LE(std::abs(border.dot(y)), 1e-10 * y.norm());
    }
}

TEST(SolveBordered, SingularStackIsSolverError)
{
    EXPECT_THROW(solve_bordered(row({1.0, 1.0}), vec({2.0, 2.0}), vec({1.0}), 0.0), SolverError);
    EXPECT_THROW(solve_bordered(row({1.0, NAN}), vec({0.0, 1.0}), vec({1.0}), 0.0), SolverError);
}

TEST(SolveBordered, ShapeMismatchRejected)
{
    EXPECT_THROW(solve_bordered(row({1.0, 0.0}), vec({1.0, 0.0, 0.0}), vec({1.0}), 0.0), std::invalid_argument);
}

TEST(NullspaceTangent, CoordinateRow)
{
    const Vector t = nullspace_tangent(row({1.0, 0.0}));
    EXPECT_NEAR(t[0], 0.0, 1e-15);
    EXPECT_NEAR(t[1], 1.0, 1e-15);
}

TEST(NullspaceTangent, DiagonalRow)
{
    const double s = 1.0 / std::sqrt(2.0);
    const Vector t = nullspace_tangent(row({s, s}));
    EXPECT_NEAR(std::abs(t[0]), s, 1e-14);
    EXPECT_NEAR(t[0], -t[1], 1e-14);
    EXPECT_GE(t[1], 0.0);
}

TEST(NullspaceTangent, HintFixesOrientation)
{
    const Vector t = nullspace_tangent(row({1.0, 1.0}), vec({1.0, -0.2}));
    EXPECT_GT(t[0], 0.0);
    const Vector t2 = nullspace_tangent(row({1.0, 1.0}), vec({-1.0, 0.2}));
    EXPECT_GT(-t2[0], 0.0);
}

TEST(NullspaceTangent, RandomFullRankMatrices)
{
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + trial % 25;
        const Matrix a = random_matrix(n, n + 1, rng);
        const Vector hint = random_matrix(n + 1, 1, rng).col(0);
        const Vector t = nullspace_tangent(a, hint, 5);
        EXPECT_NEAR(t.norm(), 1.0, 1e-12);
        EXPECT_LE((a * t).norm(), 1e-9 * a.norm());
        EXPECT_GT(hint.dot(t), 0.0);
        const Vector t0 = nullspace_tangent(a, std::nullopt, 5);
        EXPECT_GE(t0[n], 0.0);
    }
}

TEST(NullspaceTangent, HintOrthogonalToNullspaceFallsBackToRandomRows)
{
    // the hint (1, 0) is orthogonal to the nullspace (0, 1) of [1 0], so [A; hint] is singular
    const Vector t = nullspace_tangent(row({1.0, 0.0}), vec({1.0, 0.0}));
    EXPECT_NEAR(std::abs(t[1]), 1.0, 1e-14);
}

TEST(NullspaceTangent, RankDeficientIsSolverError)
{
    Matrix a(2, 3);
    a << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0;
    EXPECT_THROW(nullspace_tangent(a), SolverError);
    EXPECT_THROW(nullspace_tangent(row({0.0, 0.0})), SolverError);
}

TEST(NullspaceTangent, SeededRetriesAreReproducible)
{
    std::mt19937_64 rng(34);
    const Matrix a = random_matrix(6, 7, rng);
    EXPECT_EQ(nullspace_tangent(a, std::nullopt, 99), nullspace_tangent(a, std::nullopt, 99));
}
