#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pathtrace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kMachineEpsilon = std::numeric_limits<double>::epsilon();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::uint64_t kDefaultSeed = 5489ULL;

/// A residual or Jacobian could not be evaluated (overflow, NaN, domain).
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& what, std::optional<Index> coordinate = std::nullopt)
        : std::runtime_error(what), coordinate_(coordinate) {}

    /// Offending coordinate of x = (u, lambda), when known.
    std::optional<Index> coordinate() const { return coordinate_; }

private:
    std::optional<Index> coordinate_;
};

/// Evaluation outside the domain of the problem (e.g. lambda^eta for lambda < 0).
class DomainError : public EvaluationError {
public:
    using EvaluationError::EvaluationError;
};

/// Singular or ill-conditioned linear system.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration; carries every violation found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v)
    {
        std::string out = "invalid configuration";
        for (const auto& s : v) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// A point x = (u, lambda) on the curve together with its unit tangent v.
struct CurvePoint {
    Vector x;
    Vector v;

    Index dim_u() const { return x.size() - 1; }
    auto u() const { return x.head(dim_u()); }
    double lambda() const { return x[dim_u()]; }
    auto v_u() const { return v.head(dim_u()); }
    double v_lambda() const { return v[dim_u()]; }
};

inline Vector join_point(const Vector& u, double lambda)
{
    Vector x(u.size() + 1);
    x.head(u.size()) = u;
    x[u.size()] = lambda;
    return x;
}

} // namespace pathtrace
