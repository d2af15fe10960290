#include "pathtrace/pathtrace.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pathtrace;
using namespace pathtrace::fem;

namespace {

FemProblem bratu(double gamma = 100.0, int elems = 20)
{
    FemProblemSpec s;
    s.kind = FemKind::bratu_modified;
    s.gamma = gamma;
    return FemProblem(s, Mesh1D::uniform(elems));
}

FemProblem manufactured(int elems = 20)
{
    FemProblemSpec s;
    s.kind = FemKind::manufactured;
    return FemProblem(s, Mesh1D::uniform(elems));
}

void expect_fd_agreement(const Problem& p, std::mt19937_64& rng, double u_half, double l_lo, double l_hi)
{
    std::uniform_real_distribution<double> du(-u_half, u_half), dl(l_lo, l_hi);
    const Index n = p.dim();
    for (int i = 0; i < 100; ++i) {
        Vector x(n + 1);
        for (Index k = 0; k < n; ++k) x[k] = du(rng);
        x[n] = dl(rng);
        const Matrix a = jacobian_at(p, x);
        const Matrix fd = oracle::fd_jacobian([&](const Vector& y) { return residual_at(p, y); }, x);
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c <= n; ++c)
                ASSERT_NEAR(a(r, c), fd(r, c), 1e-5 * (1.0 + std::abs(a(r, c)))) << p.label() << " (" << r << "," << c << ")";
    }
}

} // namespace

TEST(Mesh, UniformMeshShape)
{
    const auto m = Mesh1D::uniform(20);
    EXPECT_EQ(m.nodes.size(), 41u);
    EXPECT_EQ(m.dofs(), 39);
    EXPECT_EQ(m.nodes.front(), 0.0);
    EXPECT_EQ(m.nodes.back(), 1.0);
    for (std::size_t i = 1; i < m.nodes.size(); ++i) EXPECT_GT(m.nodes[i], m.nodes[i - 1]);
    EXPECT_NO_THROW(m.validate());
}

TEST(Mesh, InvalidMeshesRejected)
{
    EXPECT_THROW(Mesh1D::uniform(0), ConfigError);
    Mesh1D m = Mesh1D::uniform(2);
    m.nodes[2] = m.nodes[1];
    EXPECT_THROW(m.validate(), ConfigError);
    m = Mesh1D::uniform(2);
    m.nodes.pop_back();
    EXPECT_THROW(m.validate(), ConfigError);
}

TEST(FemSpec, InvariantsEnforced)
{
    FemProblemSpec s;
    s.gamma = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = {};
    s.eta = 0.5;
    EXPECT_THROW(s.validate(), ConfigError);
    s = {};
    s.quadrature_points = 2;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Bratu, ZeroLoadZeroSolution)
{
    const auto p = bratu();
    EXPECT_EQ(p.residual(Vector::Zero(p.dim()), 0.0).norm(), 0.0);
}

TEST(Bratu, UnloadedStateUnderLoadIsMinusLambdaTimesBasisIntegral)
{
    // quadratic Lagrange basis integrals: h/3 at a shared vertex, 2h/3 at a mid-node
    const auto p = bratu();
    const double h = 1.0 / 20.0, lambda = 1.7;
    const Vector r = p.residual(Vector::Zero(p.dim()), lambda);
    for (Index i = 0; i < p.dim(); ++i) {
        const double integral = (i % 2 == 0) ? 2.0 * h / 3.0 : h / 3.0;
        EXPECT_NEAR(r[i], -lambda * integral, 1e-14);
        EXPECT_LT(r[i], 0.0);
    }
}

TEST(Bratu, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 rng(21);
    expect_fd_agreement(bratu(), rng, 0.02, 0.0, 4.0);
}

TEST(Bratu, CompressionRelation)
{
    // gamma u'' + lambda e^{gamma u} = 0 with u = w / gamma is w'' + lambda e^w = 0; in the
    // weak form int(gamma u' phi' - lambda e^{gamma u} phi) the rows coincide (scale factor 1)
    const auto p1 = bratu(1.0), p100 = bratu(100.0);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> dw(-1.5, 1.5), dl(0.0, 4.0);
    for (int i = 0; i < 20; ++i) {
        Vector w(p1.dim());
        for (Index k = 0; k < w.size(); ++k) w[k] = dw(rng);
        const double l = dl(rng);
        const Vector r1 = p1.residual(w, l);
        const Vector r100 = p100.residual(w / 100.0, l);
        EXPECT_LE((r1 - r100).norm(), 1e-12 * (1.0 + r1.norm()));
        const Matrix j1 = p1.jacobian(w, l), j100 = p100.jacobian(w / 100.0, l);
        EXPECT_TRUE(j100.leftCols(p1.dim()).isApprox(100.0 * j1.leftCols(p1.dim()), 1e-12));
        EXPECT_TRUE(j100.col(p1.dim()).isApprox(j1.col(p1.dim()), 1e-12));
    }
}

TEST(Bratu, OverflowIsEvaluationError)
{
    const auto p = bratu();
    EXPECT_THROW(p.residual(Vector::Constant(p.dim(), 10.0), 1.0), EvaluationError);
}

TEST(Bratu, LowerBranchMatchesClosedForm)
{
    // theta = 2 on the lower branch; the discrete midpoint agrees with the closed form
    const double theta = 2.0;
    const double lambda = oracle::bratu_lambda(theta);
    const auto p = bratu();
    const auto newton = newton_fixed_lambda(p, Vector::Zero(p.dim()), lambda, 1e-10, 20);
    ASSERT_TRUE(newton.converged);
    EXPECT_NEAR(p.diagnostic(newton.u), oracle::bratu_midpoint(theta) / 100.0, 1e-4 * oracle::bratu_midpoint(theta) / 100.0);
}

TEST(Manufactured, ZeroAtLambdaZeroAndOne)
{
    const auto p = manufactured();
    const Vector z = Vector::Zero(p.dim());
    EXPECT_EQ(p.residual(z, 0.0).norm(), 0.0);
    EXPECT_LE(p.residual(z, 1.0).norm(), 1e-15);
}

TEST(Manufactured, InterpolantValues)
{
    const auto& p = manufactured();
    EXPECT_EQ(interpolate_exact(p.spec(), p.mesh(), 0.0).norm(), 0.0);
    EXPECT_LE(interpolate_exact(p.spec(), p.mesh(), 1.0).norm(), 1e-15);
    const double peak = std::pow(2.0, -1.0 / 50.0);
    const Vector u = interpolate_exact(p.spec(), p.mesh(), peak);
    EXPECT_NEAR(u[p.midpoint_dof()], 1.25, 1e-12);
    EXPECT_NEAR(oracle::manufactured_midpoint(20.0, 50.0, peak), 1.25, 1e-12);
}

TEST(Manufactured, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 rng(23);
    expect_fd_agreement(manufactured(), rng, 2.0, 0.5, 1.05);
}

TEST(Manufactured, NegativeLambdaIsDomainError)
{
    const auto p = manufactured();
    FemProblemSpec s = p.spec();
    s.eta = 50.5;
    const FemProblem q(s, p.mesh());
    EXPECT_THROW(q.residual(Vector::Zero(q.dim()), -0.1), DomainError);
}

TEST(Manufactured, NewtonFromInterpolantIsExactToQuadrature)
{
    // u_ex is quadratic in x and lies in the element space, so the interpolant solves the
    // discrete system up to rounding; the nodal error bound C h^3 is met with C = 0
    for (int elems : {10, 20, 40}) {
        const auto p = manufactured(elems);
        for (double lambda : {0.2, 0.5, 0.9}) {
            const Vector ui = interpolate_exact(p.spec(), p.mesh(), lambda);
            const auto newton = newton_fixed_lambda(p, ui, lambda, 1e-12, 3);
            ASSERT_TRUE(newton.converged) << lambda;
            EXPECT_LE(newton.iterations, 3);
            EXPECT_LE((newton.u - ui).lpNorm<Eigen::Infinity>(), 1e-12) << elems << " " << lambda;
        }
    }
}

TEST(Fem, Deterministic)
{
    const auto p = manufactured();
    const Vector u = interpolate_exact(p.spec(), p.mesh(), 0.7) * 1.3;
    EXPECT_EQ(p.residual(u, 0.7), p.residual(u, 0.7));
    EXPECT_EQ(p.jacobian(u, 0.7), p.jacobian(u, 0.7));
}
