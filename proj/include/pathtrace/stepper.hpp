#pragma once

// Standard Moore-Penrose predictor-corrector continuation.

#include "pathtrace/bordered.hpp"
#include "pathtrace/trace.hpp"

namespace pathtrace {

struct StepControl {
    double h = 0.1;
    double h_min = 1e-4;
    double h_inc = 1.5;
    double h_dec = 0.5;
    int K_min = 5;
    int K_max = 10;
    int k_max = 20;
    double eps_F = 1e-7;
    double eps_x = 1e-7;

    std::vector<std::string> violations() const
    {
        std::vector<std::string> bad;
        if (!(h_min > 0.0)) bad.emplace_back("h_min must be > 0");
        if (!(h >= h_min)) bad.emplace_back("h must be >= h_min");
        if (!(h_dec > 0.0 && h_dec < 1.0)) bad.emplace_back("h_dec must lie in (0, 1)");
        if (!(h_inc > 1.0)) bad.emplace_back("h_inc must be > 1");
        if (!(K_min < K_max && K_max < k_max)) bad.emplace_back("need K_min < K_max < k_max");
        if (K_min < 0) bad.emplace_back("K_min must be >= 0");
        if (!(eps_F > 0.0)) bad.emplace_back("eps_F must be > 0");
        if (!(eps_x > 0.0)) bad.emplace_back("eps_x must be > 0");
        return bad;
    }

    void validate() const
    {
        if (auto bad = violations(); !bad.empty()) {
            throw ConfigError(std::move(bad));
        }
    }
};

enum class StepStatus { converged, max_iters, solver_failure };

struct StepOutcome {
    StepStatus status = StepStatus::solver_failure;
    std::optional<CurvePoint> point;
    int iterations = 0;

    bool converged() const { return status == StepStatus::converged; }
};

inline Vector predict(const Vector& x, const Vector& v, double h) { return x + h * v; }

inline Vector predict(const CurvePoint& p, double h) { return predict(p.x, p.v, h); }

/**
 * Moore-Penrose corrector. Each iteration solves
 *
 *   A(X) d = F(X),   V^T d = 0
 *   A(X) T = A(X) V, V^T T = 0
 *
 * and updates X <- X - d, V <- (V - T) / |V - T|. Convergence is declared when
 * |F(X^k)| <= eps_F at the pre-update iterate and |X^{k+1} - X^k| <= eps_x.
 * The accepted point must also satisfy |F| <= eps_F, and its tangent is
 * projected once more onto the nullspace of A at that point.
 */
inline StepOutcome mp_correct(const Problem& p, const Vector& x0, const Vector& v0, const StepControl& ctl)
{
    StepOutcome out;
    Vector x = x0;
    Vector v = v0;
    try {
        Vector f = residual_at(p, x);
        for (int k = 0; k < ctl.k_max; ++k) {
            out.iterations = k + 1;
            if (!f.allFinite() || !x.allFinite()) {
                out.status = StepStatus::solver_failure;
                return out;
            }
            const Matrix a = jacobian_at(p, x);
            const Vector dx = solve_bordered(a, v, f, 0.0);
            const Vector t = solve_bordered(a, v, a * v, 0.0);
            const Vector x_next = x - dx;
            const Vector z = v - t;
            const double z_norm = z.norm();
            if (!(z_norm > 0.0) || !std::isfinite(z_norm)) {
                out.status = StepStatus::solver_failure;
                return out;
            }
            const Vector v_next = z / z_norm;
            const bool f_small = f.norm() <= ctl.eps_F;
            const bool x_small = dx.norm() <= ctl.eps_x;
            x = x_next;
            v = v_next;
            f = residual_at(p, x);
            if (f_small && x_small && f.allFinite() && f.norm() <= ctl.eps_F) {
                const Matrix a_new = jacobian_at(p, x);
                const Vector t_new = solve_bordered(a_new, v, a_new * v, 0.0);
                Vector v_final = v - t_new;
                v_final /= v_final.norm();
                if (!v_final.allFinite()) {
                    out.status = StepStatus::solver_failure;
                    return out;
                }
                out.status = StepStatus::converged;
                out.point = CurvePoint{x, v_final};
                return out;
            }
        }
    } catch (const SolverError&) {
        out.status = StepStatus::solver_failure;
        return out;
    } catch (const EvaluationError&) {
        out.status = StepStatus::solver_failure;
        return out;
    }
    out.status = StepStatus::max_iters;
    return out;
}

/// Iteration-count step adaptation; h never drops below h_min.
inline StepControl adapt_h(StepControl ctl, int iterations, bool succeeded)
{
    if (!succeeded || iterations > ctl.K_max) {
        ctl.h = std::max(ctl.h * ctl.h_dec, ctl.h_min);
    } else if (iterations < ctl.K_min) {
        ctl.h *= ctl.h_inc;
    }
    return ctl;
}

struct NewtonResult {
    bool converged = false;
    Vector u;
    int iterations = 0;
    std::string failure;
};

/// Newton on F(., lambda) = 0 with the square F_u block; lambda is frozen.
inline NewtonResult newton_fixed_lambda(const Problem& p, const Vector& u0, double lambda, double tol, int max_iters)
{
    NewtonResult res;
    res.u = u0;
    const Index n = p.dim();
    try {
        for (int it = 0; it <= max_iters; ++it) {
            const Vector f = p.residual(res.u, lambda);
            if (!f.allFinite()) {
                res.failure = "non-finite residual";
                return res;
            }
            if (f.norm() <= tol) {
                res.converged = true;
                return res;
            }
            if (it == max_iters) {
                break;
            }
            const Matrix ju = p.jacobian(res.u, lambda).leftCols(n);
            const Eigen::PartialPivLU<Matrix> lu(ju);
            if (!(lu.rcond() >= kMinReciprocalCondition)) {
                res.failure = "singular F_u";
                return res;
            }
            res.u -= lu.solve(f);
            res.iterations = it + 1;
        }
    } catch (const EvaluationError& e) {
        res.failure = e.what();
        return res;
    }
    res.failure = "no convergence within " + std::to_string(max_iters) + " iterations";
    return res;
}

/// Converges (u0, lambda0) onto the curve and attaches the oriented initial tangent.
inline std::optional<CurvePoint> make_start_point(const Problem& p, const Vector& u0, double lambda0,
                                                  const StepControl& ctl, double orientation = 1.0,
                                                  std::uint64_t seed = kDefaultSeed, int max_iters = 50)
{
    const auto newton = newton_fixed_lambda(p, u0, lambda0, ctl.eps_F, max_iters);
    if (!newton.converged) {
        return std::nullopt;
    }
    const Vector x = join_point(newton.u, lambda0);
    Vector v = nullspace_tangent(jacobian_at(p, x), std::nullopt, seed);
    if (orientation < 0.0) {
        v = -v;
    }
    return CurvePoint{x, v};
}

/**
 * Plain predictor-corrector tracing with no safeguards: on failure the step is
 * retried from the same converged point with a smaller h, and the run ends
 * once a step fails at h_min.
 */
inline Trace trace_standard(const Problem& p, const CurvePoint& start, StepControl ctl, const StopRule& stop)
{
    Trace trace;
    trace.points.push_back({start, 0.0, 0});
    if (apply_stop_rule(trace, p, stop)) {
        return trace;
    }
    CurvePoint cur = start;
    while (true) {
        const double h_used = ctl.h;
        const auto outcome = mp_correct(p, predict(cur, ctl.h), cur.v, ctl);
        if (outcome.converged()) {
            cur = *outcome.point;
            trace.points.push_back({cur, h_used, outcome.iterations});
            ctl = adapt_h(ctl, outcome.iterations, true);
            if (apply_stop_rule(trace, p, stop)) {
                return trace;
            }
            continue;
        }
        trace.add_event(EventKind::corrector_failed,
                        {{"h", h_used}, {"status", outcome.status == StepStatus::max_iters ? 1.0 : 2.0}});
        if (ctl.h <= ctl.h_min) {
            trace.add_event(EventKind::h_exhausted, {{"h", ctl.h}, {"lambda", cur.lambda()}});
            trace.finish(Termination::h_exhausted, "h exhausted at h_min");
            return trace;
        }
        ctl = adapt_h(ctl, outcome.iterations, false);
    }
}

} // namespace pathtrace
