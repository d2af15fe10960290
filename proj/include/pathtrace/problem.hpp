#pragma once

#include "pathtrace/common.hpp"

#include <functional>
#include <string>
#include <utility>

namespace pathtrace {

/**
 * A parameterized nonlinear system F(u, lambda) = 0 with F : R^{N+1} -> R^N.
 *
 * The Jacobian is the rectangular N x (N+1) matrix [dF/du | dF/dlambda].
 * Implementations must be pure: identical inputs give bitwise-identical output.
 */
class Problem {
public:
    virtual ~Problem() = default;

    virtual Index dim() const = 0;
    virtual Vector residual(const Vector& u, double lambda) const = 0;
    virtual Matrix jacobian(const Vector& u, double lambda) const = 0;
    virtual std::string label() const = 0;

    /// Scalar reported for plotting; the single unknown for scalar problems.
    virtual double diagnostic(const Vector& u) const { return u.size() == 1 ? u[0] : u.norm(); }
    virtual std::string diagnostic_name() const { return dim() == 1 ? "u" : "u_norm"; }
};

inline Vector residual_at(const Problem& p, const Vector& x)
{
    const Index n = p.dim();
    return p.residual(x.head(n), x[n]);
}

inline Matrix jacobian_at(const Problem& p, const Vector& x)
{
    const Index n = p.dim();
    return p.jacobian(x.head(n), x[n]);
}

/// Central-difference approximation of [F_u | F_lambda]; step = rel_step * (1 + |x_j|).
inline Matrix jacobian_fd(const Problem& p, const Vector& x, double rel_step = std::sqrt(kMachineEpsilon))
{
    if (!(rel_step > 0.0)) {
        throw std::invalid_argument("jacobian_fd: rel_step must be positive");
    }
    const Index n = p.dim();
    Matrix jac(n, n + 1);
    Vector xp = x;
    for (Index j = 0; j <= n; ++j) {
        const double step = rel_step * (1.0 + std::abs(x[j]));
        xp[j] = x[j] + step;
        const Vector fp = residual_at(p, xp);
        xp[j] = x[j] - step;
        const Vector fm = residual_at(p, xp);
        xp[j] = x[j];
        if (!fp.allFinite() || !fm.allFinite()) {
            throw EvaluationError("non-finite residual while differencing coordinate " + std::to_string(j), j);
        }
        jac.col(j) = (fp - fm) / (2.0 * step);
    }
    return jac;
}

/// Problem assembled from callables; missing Jacobian falls back to jacobian_fd.
class FunctionProblem final : public Problem {
public:
    using ResidualFn = std::function<Vector(const Vector&, double)>;
    using JacobianFn = std::function<Matrix(const Vector&, double)>;

    FunctionProblem(std::string label, Index dim, ResidualFn residual, JacobianFn jacobian = {})
        : label_(std::move(label)), dim_(dim), residual_(std::move(residual)), jacobian_(std::move(jacobian))
    {
    }

    Index dim() const override { return dim_; }
    Vector residual(const Vector& u, double lambda) const override { return residual_(u, lambda); }

    Matrix jacobian(const Vector& u, double lambda) const override
    {
        if (jacobian_) {
            return jacobian_(u, lambda);
        }
        return jacobian_fd(*this, join_point(u, lambda));
    }

    std::string label() const override { return label_; }

private:
    std::string label_;
    Index dim_;
    ResidualFn residual_;
    JacobianFn jacobian_;
};

} // namespace pathtrace
