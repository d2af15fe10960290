#pragma once

// Shifted deflation: find further solutions of F(., lambda) = 0 at fixed lambda
// by running Newton on M(u) F(u), M(u) = prod_j (|u - u_j|^{-p} + sigma).

#include "pathtrace/stepper.hpp"

namespace pathtrace {

struct DeflationParams {
    double power = 2.0;
    double shift = 1.0;
    int period = 5;          // accepted continuation steps between scans
    int max_extra = 4;       // solutions sought per scan beyond the current branch
    int newton_max_iters = 30;
    double distinct_rel = 1e-5;

    /// Radius below which two solutions are considered the same.
    double distinct_radius(const Vector& u) const { return distinct_rel * (1.0 + u.norm()); }

    std::vector<std::string> violations() const
    {
        std::vector<std::string> bad;
        if (!(power > 0.0)) bad.emplace_back("deflation power must be > 0");
        if (!(shift >= 0.0)) bad.emplace_back("deflation shift must be >= 0");
        if (period < 1) bad.emplace_back("deflation period must be >= 1");
        if (max_extra < 0) bad.emplace_back("deflation max_extra must be >= 0");
        if (newton_max_iters < 1) bad.emplace_back("deflation newton_max_iters must be >= 1");
        return bad;
    }
};

enum class Trend { increasing, decreasing, unknown };

inline std::string_view to_string(Trend t)
{
    switch (t) {
    case Trend::increasing: return "increasing";
    case Trend::decreasing: return "decreasing";
    case Trend::unknown: return "unknown";
    }
    return "?";
}

struct BranchScan {
    double lambda = 0.0;
    std::vector<Vector> solutions; // solutions[0] is the current branch
    std::optional<double> delta;   // distance to the nearest other solution
    std::optional<std::size_t> nearest;
    Trend trend = Trend::unknown;
};

class DeflationSingular : public SolverError {
public:
    using SolverError::SolverError;
};

/// Returns (m f, m J + f grad(m)^T) for the product of shifted deflation factors.
inline std::pair<Vector, Matrix> deflated_residual(const Vector& f, const Matrix& jac, const Vector& u,
                                                   const std::vector<Vector>& found, const DeflationParams& params)
{
    double m = 1.0;
    Vector grad_log = Vector::Zero(u.size()); // grad(m) / m
    for (const auto& root : found) {
        const Vector d = u - root;
        const double dist = d.norm();
        if (dist <= 1e-14) {
            throw DeflationSingular("deflation: iterate coincides with a found solution");
        }
        const double inv = std::pow(dist, -params.power);
        const double factor = inv + params.shift;
        m *= factor;
        grad_log += (-params.power * inv / (dist * dist) / factor) * d;
    }
    Vector g = m * f;
    Matrix dg = m * jac + f * (m * grad_log).transpose();
    return {std::move(g), std::move(dg)};
}

namespace detail {

inline bool is_distinct(const Vector& u, const std::vector<Vector>& found, const DeflationParams& params)
{
    for (const auto& s : found) {
        if ((u - s).norm() <= std::max(params.distinct_radius(u), params.distinct_radius(s))) {
            return false;
        }
    }
    return true;
}

/// Newton on the deflated system; a root within the distinctness radius of `found` counts as failure.
inline std::optional<Vector> deflated_newton(const Problem& p, Vector u, double lambda,
                                             const std::vector<Vector>& found, const DeflationParams& params, double tol)
{
    const Index n = p.dim();
    try {
        for (int it = 0; it <= params.newton_max_iters; ++it) {
            const Vector f = p.residual(u, lambda);
            if (!f.allFinite()) {
                return std::nullopt;
            }
            if (f.norm() <= tol) {
                if (!is_distinct(u, found, params)) {
                    return std::nullopt;
                }
                return u;
            }
            if (it == params.newton_max_iters) {
                break;
            }
            const Matrix ju = p.jacobian(u, lambda).leftCols(n);
            const auto [g, dg] = deflated_residual(f, ju, u, found, params);
            const Eigen::PartialPivLU<Matrix> lu(dg);
            if (!(lu.rcond() >= kMinReciprocalCondition)) {
                return std::nullopt;
            }
            u -= lu.solve(g);
            if (!u.allFinite()) {
                return std::nullopt;
            }
        }
    } catch (const EvaluationError&) {
        return std::nullopt;
    } catch (const SolverError&) {
        return std::nullopt;
    }
    return std::nullopt;
}

// Where F is flat every point of a small interval satisfies |F| <= tol; two such points are one root
// unless the residual between them rises above tol.
inline bool separated_root(const Problem& p, const Vector& u, double lambda, const std::vector<Vector>& found, double tol)
{
    for (const auto& s : found) {
        try {
            if (p.residual(0.5 * (u + s), lambda).norm() <= tol) {
                return false;
            }
        } catch (const EvaluationError&) {
            // not representable in between: different roots
        }
    }
    return true;
}

} // namespace detail

/**
 * Deflated Newton search at fixed lambda. Guesses are tried in order; after
 * every new solution the sweep restarts from the first guess with the enlarged
 * deflation set, until a full sweep finds nothing or 1 + max_extra solutions
 * are known. A guess that coincides with a known solution is replaced by
 * nudged copies, +/- r (1 + |u|) along the all-ones direction for
 * r = 1e-4, 1e-3, 1e-2, 1e-1. A new solution must be farther than the
 * distinctness radius from every known one and |F| at the midpoint must
 * exceed tol.
 */
inline std::vector<Vector> find_distinct_solutions(const Problem& p, double lambda, const std::vector<Vector>& guesses,
                                                   const DeflationParams& params, double tol)
{
    std::vector<Vector> found;
    if (guesses.empty()) {
        return found;
    }
    const std::size_t cap = 1 + static_cast<std::size_t>(params.max_extra);
    const Index n = p.dim();
    const Vector ones = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    bool progress = true;
    while (progress && found.size() < cap) {
        progress = false;
        for (const auto& guess : guesses) {
            std::vector<Vector> starts;
            if (detail::is_distinct(guess, found, params)) {
                starts.push_back(guess);
            } else {
                // deflated Newton only converges to a root closer than the deflated one, so try several scales
                for (const double rel : {1e-4, 1e-3, 1e-2, 1e-1}) {
                    const double nudge = rel * (1.0 + guess.norm());
                    starts.push_back(guess + nudge * ones);
                    starts.push_back(guess - nudge * ones);
                }
            }
            for (const auto& s : starts) {
                auto sol = detail::deflated_newton(p, s, lambda, found, params, tol);
                if (sol && detail::is_distinct(*sol, found, params) &&
                    detail::separated_root(p, *sol, lambda, found, tol)) {
                    found.push_back(std::move(*sol));
                    progress = true;
                    break;
                }
            }
            if (progress) {
                break;
            }
        }
    }
    return found;
}

/// Branch scan at a converged point: current branch first, then previously found solutions as guesses.
inline BranchScan scan_branches(const Problem& p, const CurvePoint& at, const BranchScan* prev,
                                const DeflationParams& params, double tol)
{
    BranchScan scan;
    scan.lambda = at.lambda();
    std::vector<Vector> guesses{at.u()};
    if (prev) {
        for (const auto& s : prev->solutions) {
            guesses.push_back(s);
        }
    }
    auto sols = find_distinct_solutions(p, scan.lambda, guesses, params, tol);
    const double own_radius = params.distinct_radius(at.u());
    if (sols.empty() || (sols.front() - at.u()).norm() > std::max(own_radius, 1e3 * tol)) {
        // the current branch did not re-converge onto itself
        return scan;
    }
    scan.solutions = std::move(sols);
    for (std::size_t i = 1; i < scan.solutions.size(); ++i) {
        const double d = (scan.solutions[i] - scan.solutions[0]).norm();
        if (!scan.delta || d < *scan.delta) {
            scan.delta = d;
            scan.nearest = i;
        }
    }
    if (prev && !prev->solutions.empty() && !prev->delta && scan.delta) {
        // no other branch last time (delta = infinity), one now
        scan.trend = Trend::decreasing;
    } else if (prev && prev->delta && scan.delta) {
        if (*scan.delta < *prev->delta) {
            scan.trend = Trend::decreasing;
        } else if (*scan.delta > *prev->delta) {
            scan.trend = Trend::increasing;
        }
    }
    return scan;
}

} // namespace pathtrace
