#pragma once

// Galerkin discretization of two 1-D model problems on [0, 1] with quadratic
// Lagrange elements and homogeneous Dirichlet conditions. Boundary DOFs are
// eliminated, so a mesh with n elements has N = 2n - 1 unknowns.
//
//   bratu_modified:  gamma u'' + lambda exp(gamma u) = 0
//   manufactured:    u^2 - u'' = r(x, lambda),  u_ex = zeta lambda^eta (1 - lambda^eta)(1 - x) x

#include "pathtrace/problem.hpp"

#include <array>
#include <string>
#include <vector>

namespace pathtrace::fem {

struct Mesh1D {
    std::vector<double> nodes; // 2 * n_elems + 1 ascending nodes, mid-nodes at element centers
    int n_elems = 0;

    static Mesh1D uniform(int n_elems)
    {
        if (n_elems < 1) {
            throw ConfigError({"mesh needs at least one element"});
        }
        Mesh1D m;
        m.n_elems = n_elems;
        const int count = 2 * n_elems + 1;
        m.nodes.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            m.nodes[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(count - 1);
        }
        m.nodes.back() = 1.0;
        return m;
    }

    Index dofs() const { return 2 * n_elems - 1; }

    void validate() const
    {
        std::vector<std::string> bad;
        if (n_elems < 1) {
            bad.emplace_back("n_elems must be positive");
        }
        if (nodes.size() != static_cast<std::size_t>(2 * n_elems + 1)) {
            bad.emplace_back("node count must be 2 * n_elems + 1");
        } else {
            if (nodes.front() != 0.0 || nodes.back() != 1.0) {
                bad.emplace_back("mesh must span [0, 1]");
            }
            for (std::size_t i = 1; i < nodes.size(); ++i) {
                if (!(nodes[i] > nodes[i - 1])) {
                    bad.emplace_back("nodes must be strictly increasing");
                    break;
                }
            }
        }
        if (!bad.empty()) {
            throw ConfigError(std::move(bad));
        }
    }
};

enum class FemKind { bratu_modified, manufactured };

struct FemProblemSpec {
    FemKind kind = FemKind::bratu_modified;
    double gamma = 100.0;
    double zeta = 20.0;
    double eta = 50.0;
    int alpha = 2;
    int quadrature_points = 3;

    void validate() const
    {
        std::vector<std::string> bad;
        if (!(gamma > 0.0)) {
            bad.emplace_back("gamma must be > 0");
        }
        if (!(eta >= 1.0)) {
            bad.emplace_back("eta must be >= 1");
        }
        if (alpha != 2) {
            bad.emplace_back("alpha is fixed at 2");
        }
        if (quadrature_points < 3 || quadrature_points > 5) {
            bad.emplace_back("quadrature_points must be 3, 4 or 5 (exact for degree >= 4)");
        }
        if (!bad.empty()) {
            throw ConfigError(std::move(bad));
        }
    }
};

struct Assembly {
    Vector residual;
    Matrix jacobian; // N x (N + 1)
};

namespace detail {

struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;
};

inline GaussRule gauss_rule(int n)
{
    switch (n) {
    case 3: {
        const double a = std::sqrt(3.0 / 5.0);
        return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
        return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    case 5: {
        const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
        const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
        return {{-b, -a, 0.0, a, b}, {wb, wa, 128.0 / 225.0, wa, wb}};
    }
    default:
        throw ConfigError({"unsupported quadrature rule"});
    }
}

// Reference quadratic basis on [-1, 1] with nodes -1, 0, 1.
inline std::array<double, 3> shape(double xi)
{
    return {0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)};
}

inline std::array<double, 3> shape_deriv(double xi) { return {xi - 0.5, -2.0 * xi, xi + 0.5}; }

// Interior DOF of global node g, or -1 on the Dirichlet boundary.
inline Index dof_of(int g, int n_elems) { return (g == 0 || g == 2 * n_elems) ? Index{-1} : Index{g - 1}; }

struct PowerTerms {
    double g;      // zeta lambda^eta (1 - lambda^eta)
    double dg;     // dg / dlambda
};

inline PowerTerms manufactured_amplitude(const FemProblemSpec& spec, double lambda)
{
    if (lambda < 0.0 && spec.eta != std::floor(spec.eta)) {
        throw DomainError("lambda^eta undefined for lambda < 0 and non-integer eta");
    }
    const double le = std::pow(lambda, spec.eta);
    const double le1 = std::pow(lambda, spec.eta - 1.0);
    return {spec.zeta * le * (1.0 - le), spec.zeta * spec.eta * le1 * (1.0 - 2.0 * le)};
}

template <class Kernel>
Assembly assemble(const FemProblemSpec& spec, const Mesh1D& mesh, const Vector& u, Kernel&& kernel)
{
    const Index n = mesh.dofs();
    if (u.size() != n) {
        throw std::invalid_argument("fem: u has wrong length");
    }
    Assembly out{Vector::Zero(n), Matrix::Zero(n, n + 1)};
    const GaussRule rule = gauss_rule(spec.quadrature_points);
    for (int e = 0; e < mesh.n_elems; ++e) {
        const int g0 = 2 * e;
        const double xl = mesh.nodes[static_cast<std::size_t>(g0)];
        const double xr = mesh.nodes[static_cast<std::size_t>(g0 + 2)];
        const double he = xr - xl;
        const double jac = 0.5 * he;
        std::array<Index, 3> dof{};
        std::array<double, 3> ue{};
        for (int a = 0; a < 3; ++a) {
            dof[a] = dof_of(g0 + a, mesh.n_elems);
            ue[a] = dof[a] >= 0 ? u[dof[a]] : 0.0;
        }
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double xi = rule.points[q];
            const double wq = rule.weights[q] * jac;
            const auto phi = shape(xi);
            auto dphi = shape_deriv(xi);
            for (double& d : dphi) {
                d /= jac;
            }
            double uh = 0.0;
            double duh = 0.0;
            for (int a = 0; a < 3; ++a) {
                uh += ue[a] * phi[a];
                duh += ue[a] * dphi[a];
            }
            const double x = xl + (xi + 1.0) * jac;
            // kernel fills: coefficient of phi_a, of dphi_a, of phi_a phi_b, of dphi_a dphi_b, of phi_a in dR/dlambda
            const auto k = kernel(x, uh, duh);
            for (int a = 0; a < 3; ++a) {
                if (dof[a] < 0) {
                    continue;
                }
                out.residual[dof[a]] += wq * (k.r_phi * phi[a] + k.r_dphi * dphi[a]);
                out.jacobian(dof[a], n) += wq * k.dl_phi * phi[a];
                for (int b = 0; b < 3; ++b) {
                    if (dof[b] < 0) {
                        continue;
                    }
                    out.jacobian(dof[a], dof[b]) += wq * (k.j_phiphi * phi[a] * phi[b] + k.j_dphidphi * dphi[a] * dphi[b]);
                }
            }
        }
    }
    if (!out.residual.allFinite() || !out.jacobian.allFinite()) {
        throw EvaluationError("fem: non-finite assembly (overflow)");
    }
    return out;
}

struct PointKernel {
    double r_phi;
    double r_dphi;
    double j_phiphi;
    double j_dphidphi;
    double dl_phi;
};

} // namespace detail

/// R_i = int(gamma u' phi_i' - lambda exp(gamma u) phi_i) dx, dR/dlambda = -int exp(gamma u) phi_i dx.
inline Assembly assemble_bratu(const FemProblemSpec& spec, const Mesh1D& mesh, const Vector& u, double lambda)
{
    const double gamma = spec.gamma;
    return detail::assemble(spec, mesh, u, [&](double, double uh, double duh) {
        const double ex = std::exp(gamma * uh);
        if (!std::isfinite(ex)) {
            throw EvaluationError("fem: exp(gamma u) overflow");
        }
        return detail::PointKernel{-lambda * ex, gamma * duh, -lambda * gamma * ex, gamma, -ex};
    });
}

/// R_i = int(u^2 phi_i + u' phi_i' - r(x, lambda) phi_i) dx with r = u_ex^2 - u_ex''.
inline Assembly assemble_manufactured(const FemProblemSpec& spec, const Mesh1D& mesh, const Vector& u, double lambda)
{
    const auto amp = detail::manufactured_amplitude(spec, lambda);
    return detail::assemble(spec, mesh, u, [&](double x, double uh, double duh) {
        const double q = (1.0 - x) * x;
        const double r = amp.g * amp.g * q * q + 2.0 * amp.g;
        const double dr = amp.dg * (2.0 * amp.g * q * q + 2.0);
        return detail::PointKernel{uh * uh - r, duh, 2.0 * uh, 1.0, -dr};
    });
}

/// Nodal interpolant (interior DOFs) of the manufactured solution.
inline Vector interpolate_exact(const FemProblemSpec& spec, const Mesh1D& mesh, double lambda)
{
    const auto amp = detail::manufactured_amplitude(spec, lambda);
    Vector u(mesh.dofs());
    for (Index i = 0; i < u.size(); ++i) {
        const double x = mesh.nodes[static_cast<std::size_t>(i + 1)];
        u[i] = amp.g * (1.0 - x) * x;
    }
    return u;
}

class FemProblem final : public Problem {
public:
    FemProblem(FemProblemSpec spec, Mesh1D mesh) : spec_(spec), mesh_(std::move(mesh))
    {
        spec_.validate();
        mesh_.validate();
    }

    const FemProblemSpec& spec() const { return spec_; }
    const Mesh1D& mesh() const { return mesh_; }

    Assembly assemble(const Vector& u, double lambda) const
    {
        return spec_.kind == FemKind::bratu_modified ? assemble_bratu(spec_, mesh_, u, lambda)
                                                     : assemble_manufactured(spec_, mesh_, u, lambda);
    }

    Index dim() const override { return mesh_.dofs(); }
    Vector residual(const Vector& u, double lambda) const override { return assemble(u, lambda).residual; }
    Matrix jacobian(const Vector& u, double lambda) const override { return assemble(u, lambda).jacobian; }

    std::string label() const override { return spec_.kind == FemKind::bratu_modified ? "bratu" : "manufactured"; }

    /// Value at the node closest to x = 0.5 (the midpoint node for uniform meshes).
    double diagnostic(const Vector& u) const override { return u[midpoint_dof()]; }
    std::string diagnostic_name() const override { return "u_mid"; }

    Index midpoint_dof() const
    {
        Index best = 0;
        for (Index i = 0; i < mesh_.dofs(); ++i) {
            if (std::abs(mesh_.nodes[static_cast<std::size_t>(i + 1)] - 0.5) <
                std::abs(mesh_.nodes[static_cast<std::size_t>(best + 1)] - 0.5)) {
                best = i;
            }
        }
        return best;
    }

private:
    FemProblemSpec spec_;
    Mesh1D mesh_;
};

} // namespace pathtrace::fem
