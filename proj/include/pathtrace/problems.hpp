#pragma once

#include "pathtrace/problem.hpp"

#include <array>
#include <memory>
#include <string>
#include <string_view>

namespace pathtrace {

/// Scalar test functions with severe limit points and cusps.
enum class AnalyticId { fa, fb, fc, fd, fe, fe_inv };

inline std::string_view to_string(AnalyticId id)
{
    switch (id) {
    case AnalyticId::fa: return "fa";
    case AnalyticId::fb: return "fb";
    case AnalyticId::fc: return "fc";
    case AnalyticId::fd: return "fd";
    case AnalyticId::fe: return "fe";
    case AnalyticId::fe_inv: return "fe_inv";
    }
    return "?";
}

inline std::optional<AnalyticId> parse_analytic_id(std::string_view name)
{
    for (auto id : {AnalyticId::fa, AnalyticId::fb, AnalyticId::fc, AnalyticId::fd, AnalyticId::fe, AnalyticId::fe_inv}) {
        if (name == to_string(id)) {
            return id;
        }
    }
    return std::nullopt;
}

namespace detail {

inline double fe_value(double u, double lambda)
{
    const double s = lambda - u - 5.0;
    const double w = u - 20.0;
    return -500.0 * s * s - 10.0 * w * w * w + 0.1 * std::pow(s, 5);
}

// (dFe/du, dFe/dlambda)
inline std::array<double, 2> fe_gradient(double u, double lambda)
{
    const double s = lambda - u - 5.0;
    const double w = u - 20.0;
    const double ds = -1000.0 * s + 0.5 * std::pow(s, 4);
    return {-ds - 30.0 * w * w, ds};
}

} // namespace detail

inline double eval_analytic(AnalyticId id, double u, double lambda)
{
    switch (id) {
    case AnalyticId::fa: return -u * u * lambda * lambda * lambda - lambda / 3.0 + 100.0;
    case AnalyticId::fb: return 2000.0 * lambda * lambda - u * u * u + 6.0 * std::pow(lambda, 5);
    case AnalyticId::fc: return -u * u * u * lambda * lambda - u + 50.0;
    case AnalyticId::fd: return -500.0 * u * u - 10.0 * lambda * lambda * lambda + std::pow(u, 5) / 10.0;
    case AnalyticId::fe: return detail::fe_value(u, lambda);
    case AnalyticId::fe_inv: return detail::fe_value(lambda, u);
    }
    throw ConfigError({"unknown analytic problem"});
}

inline double eval_analytic(std::string_view name, double u, double lambda)
{
    const auto id = parse_analytic_id(name);
    if (!id) {
        throw ConfigError({"unknown problem id '" + std::string(name) + "'"});
    }
    return eval_analytic(*id, u, lambda);
}

/// Hand-derived (dF/du, dF/dlambda).
inline std::array<double, 2> analytic_gradient(AnalyticId id, double u, double lambda)
{
    switch (id) {
    case AnalyticId::fa:
        return {-2.0 * u * lambda * lambda * lambda, -3.0 * u * u * lambda * lambda - 1.0 / 3.0};
    case AnalyticId::fb:
        return {-3.0 * u * u, 4000.0 * lambda + 30.0 * std::pow(lambda, 4)};
    case AnalyticId::fc:
        return {-3.0 * u * u * lambda * lambda - 1.0, -2.0 * u * u * u * lambda};
    case AnalyticId::fd:
        return {-1000.0 * u + 0.5 * std::pow(u, 4), -30.0 * lambda * lambda};
    case AnalyticId::fe:
        return detail::fe_gradient(u, lambda);
    case AnalyticId::fe_inv: {
        // roles of u and lambda exchanged inside the same expression
        const auto g = detail::fe_gradient(lambda, u);
        return {g[1], g[0]};
    }
    }
    throw ConfigError({"unknown analytic problem"});
}

class AnalyticProblem final : public Problem {
public:
    explicit AnalyticProblem(AnalyticId id) : id_(id) {}

    AnalyticId id() const { return id_; }
    Index dim() const override { return 1; }

    Vector residual(const Vector& u, double lambda) const override
    {
        Vector r(1);
        r[0] = eval_analytic(id_, u[0], lambda);
        if (!std::isfinite(r[0])) {
            throw EvaluationError("non-finite residual for " + label());
        }
        return r;
    }

    Matrix jacobian(const Vector& u, double lambda) const override
    {
        const auto g = analytic_gradient(id_, u[0], lambda);
        Matrix a(1, 2);
        a << g[0], g[1];
        if (!a.allFinite()) {
            throw EvaluationError("non-finite Jacobian for " + label());
        }
        return a;
    }

    std::string label() const override { return std::string(to_string(id_)); }

private:
    AnalyticId id_;
};

/// Two straight lines u = lambda and u = -lambda crossing at the origin: F = (u - lambda)(u + lambda).
inline std::unique_ptr<Problem> make_crossing_lines()
{
    return std::make_unique<FunctionProblem>(
        "crossing_lines", 1,
        [](const Vector& u, double lambda) {
            Vector r(1);
            r[0] = (u[0] - lambda) * (u[0] + lambda);
            return r;
        },
        [](const Vector& u, double lambda) {
            Matrix a(1, 2);
            a << 2.0 * u[0], -2.0 * lambda;
            return a;
        });
}

} // namespace pathtrace
