#pragma once

// Safeguarded continuation driver: distance / sign / angle checks on every
// accepted step, periodic deflation scans to classify the upcoming critical
// point, and the vertical and horizontal turning-point procedures.

#include "pathtrace/deflation.hpp"

#include <algorithm>

namespace pathtrace {

struct SafeguardParams {
    double c_min = 0.95;
    double delta_max_u = kInf;
    double delta_max_lambda = kInf;
    double delta_crit = kInf;
    double eps_lambda = 1e-5;
    double eps_lambda_star = 0.2; // tangent tilt added after a vertical jump
    double delta_lambda = 1e-4;   // lambda offset of the vertical jump
    double eps_diff = 1e-7;

    /// Rule of thumb: lambda span / 10, u span / 5 and u span / 4 over the difficult region.
    static SafeguardParams from_region(double lambda_span, double u_span)
    {
        SafeguardParams sg;
        sg.delta_max_lambda = lambda_span / 10.0;
        sg.delta_max_u = u_span / 5.0;
        sg.delta_crit = u_span / 4.0;
        return sg;
    }

    std::vector<std::string> violations() const
    {
        std::vector<std::string> bad;
        if (!(c_min > 0.0 && c_min < 1.0)) bad.emplace_back("c_min must lie in (0, 1)");
        if (!(delta_max_u > 0.0)) bad.emplace_back("delta_max_u must be > 0");
        if (!(delta_max_lambda > 0.0)) bad.emplace_back("delta_max_lambda must be > 0");
        if (!(delta_crit > 0.0)) bad.emplace_back("delta_crit must be > 0");
        if (!(delta_crit > delta_max_u)) {
            bad.emplace_back("delta_crit must be greater than delta_max_u (choose delta_crit ~ u span / 4, "
                             "delta_max_u ~ u span / 5)");
        }
        if (!(eps_lambda > 0.0)) bad.emplace_back("eps_lambda must be > 0");
        if (!(eps_lambda_star > 0.0)) bad.emplace_back("eps_lambda_star must be > 0");
        if (!(delta_lambda > 0.0)) bad.emplace_back("delta_lambda must be > 0");
        if (!(eps_diff > 0.0)) bad.emplace_back("eps_diff must be > 0");
        return bad;
    }
};

enum class SafeguardVerdict { accept, reject_distance_u, reject_distance_lambda, reject_sign, reject_angle };

/// First violated criterion in the order: |du|, |dlambda|, sign of v_lambda, angle.
inline SafeguardVerdict check_safeguards(const CurvePoint& prev, const CurvePoint& cand, const SafeguardParams& sg,
                                         bool angle_active, bool sign_active)
{
    if ((cand.u() - prev.u()).norm() > sg.delta_max_u) {
        return SafeguardVerdict::reject_distance_u;
    }
    if (std::abs(cand.lambda() - prev.lambda()) > sg.delta_max_lambda) {
        return SafeguardVerdict::reject_distance_lambda;
    }
    if (sign_active && cand.v_lambda() * prev.v_lambda() < 0.0) {
        return SafeguardVerdict::reject_sign;
    }
    if (angle_active && cand.v.dot(prev.v) < sg.c_min) {
        return SafeguardVerdict::reject_angle;
    }
    return SafeguardVerdict::accept;
}

inline EventKind event_for(SafeguardVerdict v)
{
    switch (v) {
    case SafeguardVerdict::reject_sign: return EventKind::step_rejected_sign;
    case SafeguardVerdict::reject_angle: return EventKind::step_rejected_angle;
    default: return EventKind::step_rejected_distance;
    }
}

enum class RegimeKind { normal, vertical, horizontal };

inline std::string_view to_string(RegimeKind r)
{
    switch (r) {
    case RegimeKind::normal: return "normal";
    case RegimeKind::vertical: return "vertical";
    case RegimeKind::horizontal: return "horizontal";
    }
    return "?";
}

struct Regime {
    RegimeKind kind = RegimeKind::normal;
    std::optional<BranchScan> basis;
};

/// Horizontal only when a close branch (delta < delta_crit) keeps getting closer.
inline Regime classify_regime(const BranchScan& scan, const SafeguardParams& sg)
{
    const bool horizontal = scan.solutions.size() >= 2 && scan.delta && *scan.delta < sg.delta_crit &&
                            scan.trend == Trend::decreasing;
    return {horizontal ? RegimeKind::horizontal : RegimeKind::vertical, scan};
}

struct VerticalJump {
    CurvePoint z_star; // converged point with its nullspace tangent
    Vector w_star;     // tilted secant direction used to resume
    double delta_lambda = 0.0;
    int newton_iterations = 0;
};

inline constexpr int kTurningNewtonIters = 50;

/**
 * Jump across a vertical limit point: Newton at lambda_i +/- delta_lambda
 * (sign of v_lambda) from u_i gives Z*; the secant x_i -> Z* is tilted by
 * +/- eps_lambda_star in lambda so the resumed direction is not vertical.
 * On Newton failure delta_lambda is halved once.
 */
inline std::optional<VerticalJump> vertical_turning_point(const Problem& p, const CurvePoint& xi,
                                                          const SafeguardParams& sg, const StepControl& ctl,
                                                          std::uint64_t seed = kDefaultSeed)
{
    const double dir = xi.v_lambda() > 0.0 ? 1.0 : -1.0;
    const double tilt = dir * sg.eps_lambda_star;
    double dl = sg.delta_lambda;
    for (int attempt = 0; attempt < 2; ++attempt, dl *= 0.5) {
        const double target = xi.lambda() + dir * dl;
        const auto newton = newton_fixed_lambda(p, xi.u(), target, ctl.eps_F, kTurningNewtonIters);
        if (!newton.converged) {
            continue;
        }
        const Vector z = join_point(newton.u, target);
        Vector w = z - xi.x;
        const double wn = w.norm();
        if (!(wn > 0.0)) {
            continue;
        }
        w /= wn;
        Vector w_star = w;
        w_star[w.size() - 1] += tilt;
        w_star /= w_star.norm();
        Vector tangent;
        try {
            tangent = nullspace_tangent(jacobian_at(p, z), w_star, seed);
        } catch (const SolverError&) {
            tangent = w_star;
        }
        return VerticalJump{CurvePoint{z, tangent}, w_star, dl, newton.iterations};
    }
    return std::nullopt;
}

struct HorizontalOutcome {
    enum class End { coincided, frozen, bifurcation_passed, tangent_failed };

    End end = End::frozen;
    std::vector<TracePoint> extension; // points to append after x_i
    CurvePoint resume;                 // point and tangent to continue from
    double h_resume = 0.0;
    double gap = 0.0; // |x_cur - Y_cur| when the branch loop ended
    std::size_t principal_points = 0;
    std::size_t secondary_points = 0;
};

namespace detail {

struct BranchRun {
    CurvePoint cur;
    double h;
    bool active = true;
    std::vector<TracePoint> points;
    Vector order; // u(this branch) - u(other branch) at the current lambda; empty once unknown
};

// Nearest other root at the lambda of c within `radius`, with its tangent. The deflated
// search starts at c -/+ f `offset` for shrinking f, `offset` being the last known separation
// of the branches, then at the usual nudges.
inline std::optional<CurvePoint> nearest_other_root(const Problem& p, const CurvePoint& c, const Vector& offset,
                                                   const DeflationParams& defl, double tol, double radius,
                                                   std::uint64_t seed)
{
    const Vector u = c.u();
    const std::vector<Vector> known{u};
    std::vector<Vector> starts;
    for (const double f : {1.0, 0.25, 0.0625, 0.015625}) {
        starts.push_back(u - f * offset);
        starts.push_back(u + f * offset);
    }
    const Vector ones = Vector::Ones(u.size()) / std::sqrt(static_cast<double>(u.size()));
    for (const double rel : {1e-4, 1e-3, 1e-2}) {
        const double nudge = rel * (1.0 + u.norm());
        starts.push_back(u + nudge * ones);
        starts.push_back(u - nudge * ones);
    }
    std::optional<CurvePoint> best;
    double best_d = radius;
    for (const auto& s : starts) {
        const auto sol = deflated_newton(p, s, c.lambda(), known, defl, tol);
        if (!sol || !is_distinct(*sol, known, defl) || !separated_root(p, *sol, c.lambda(), known, tol)) {
            continue;
        }
        const double d = (*sol - u).norm();
        if (d >= best_d) {
            continue;
        }
        const Vector x = join_point(*sol, c.lambda());
        try {
            best = CurvePoint{x, nullspace_tangent(jacobian_at(p, x), c.v, seed)};
            best_d = d;
        } catch (const SolverError&) {
        } catch (const EvaluationError&) {
        }
    }
    return best;
}

// Near a cusp the two branches run side by side with almost the same tangent, and a step
// of one branch can land on the other without any sign or angle change. The branches may
// not swap sides before they meet: the difference to the nearest parallel root at the new
// lambda must keep its direction.
inline bool keeps_side(const Problem& p, BranchRun& b, const CurvePoint& c, const SafeguardParams& sg,
                       const DeflationParams& defl, double tol, std::uint64_t seed)
{
    if (b.order.size() == 0) {
        return true;
    }
    const auto other = nearest_other_root(p, c, b.order, defl, tol, sg.delta_crit, seed);
    if (!other || std::abs(other->v.dot(c.v)) < sg.c_min) {
        return true;
    }
    const Vector order = c.u() - other->u();
    if (order.dot(b.order) <= 0.0) {
        return false;
    }
    b.order = order;
    return true;
}

// One guarded step on a branch; a sign flip of v_lambda or failure at h_min freezes it.
inline void advance_branch(const Problem& p, BranchRun& b, const SafeguardParams& sg, const StepControl& ctl,
                           const DeflationParams& defl, std::uint64_t seed)
{
    StepControl local = ctl;
    local.h = b.h;
    while (true) {
        const auto out = mp_correct(p, predict(b.cur, local.h), b.cur.v, local);
        if (out.converged()) {
            const auto& c = *out.point;
            const bool ok = (c.u() - b.cur.u()).norm() <= sg.delta_max_u &&
                            std::abs(c.lambda() - b.cur.lambda()) <= sg.delta_max_lambda && c.v.dot(b.cur.v) >= sg.c_min;
            if (ok && c.v_lambda() * b.cur.v_lambda() <= 0.0) {
                b.active = false;
                return;
            }
            if (ok && keeps_side(p, b, c, sg, defl, ctl.eps_F, seed)) {
                b.points.push_back({c, local.h, out.iterations});
                b.cur = c;
                b.h = std::min(b.h, adapt_h(local, out.iterations, true).h); // never grows inside the procedure
                return;
            }
        }
        if (local.h <= local.h_min) {
            b.active = false;
            return;
        }
        local.h = std::max(local.h * local.h_dec, local.h_min);
        b.h = local.h;
    }
}

} // namespace detail

/**
 * Trace the principal branch (from x_i) and the nearest secondary branch (from
 * the scan's closest solution Y_i) alternately toward the fold until they
 * coincide within eps_diff or both freeze, then splice: principal points,
 * followed by the secondary points in reverse order, resuming from Y_i with
 * tangent -w_i. If the branches separate by 2 delta_crit, a bifurcation was
 * passed and only the principal branch is kept.
 */
inline HorizontalOutcome horizontal_turning_point(const Problem& p, const CurvePoint& xi, const BranchScan& scan,
                                                  const SafeguardParams& sg, const StepControl& ctl,
                                                  const DeflationParams& defl, std::size_t max_points,
                                                  std::uint64_t seed = kDefaultSeed)
{
    HorizontalOutcome res;
    res.resume = xi;
    res.h_resume = ctl.h;
    if (!scan.nearest) {
        res.end = HorizontalOutcome::End::tangent_failed;
        return res;
    }
    const Vector y = join_point(scan.solutions[*scan.nearest], xi.lambda());
    Vector w;
    try {
        w = nullspace_tangent(jacobian_at(p, y), xi.v, seed);
    } catch (const SolverError&) {
        res.end = HorizontalOutcome::End::tangent_failed;
        return res;
    } catch (const EvaluationError&) {
        res.end = HorizontalOutcome::End::tangent_failed;
        return res;
    }
    const Index n = p.dim();
    if (xi.v_lambda() != 0.0 && w[n] * xi.v_lambda() < 0.0) {
        w = -w;
    }
    const CurvePoint yi{y, w};

    detail::BranchRun principal{xi, ctl.h, true, {}, xi.u() - y.head(n)};
    detail::BranchRun secondary{yi, ctl.h, true, {{yi, 0.0, 0}}, y.head(n) - xi.u()};

    bool bifurcation = false;
    while ((principal.cur.x - secondary.cur.x).norm() > sg.eps_diff && (principal.active || secondary.active)) {
        if (principal.active) {
            detail::advance_branch(p, principal, sg, ctl, defl, seed);
        }
        if (secondary.active) {
            detail::advance_branch(p, secondary, sg, ctl, defl, seed);
        }
        if ((secondary.cur.u() - principal.cur.u()).norm() >= 2.0 * sg.delta_crit) {
            bifurcation = true;
            break;
        }
        if (principal.points.size() + secondary.points.size() >= max_points) {
            break;
        }
    }

    res.gap = (principal.cur.x - secondary.cur.x).norm();
    res.principal_points = principal.points.size();
    res.secondary_points = secondary.points.size();
    res.extension = std::move(principal.points);
    if (bifurcation) {
        res.end = HorizontalOutcome::End::bifurcation_passed;
        res.resume = principal.cur;
        res.h_resume = principal.h;
        return res;
    }
    res.end = res.gap <= sg.eps_diff ? HorizontalOutcome::End::coincided : HorizontalOutcome::End::frozen;
    for (auto it = secondary.points.rbegin(); it != secondary.points.rend(); ++it) {
        TracePoint tp = *it;
        tp.point.v = -tp.point.v; // travelled in the opposite direction
        res.extension.push_back(std::move(tp));
    }
    res.resume = res.extension.back().point;
    return res;
}

/// Improved continuation: standard MP steps wrapped in safeguards and turning-point procedures.
inline Trace trace_improved(const Problem& p, const CurvePoint& start, StepControl ctl, const SafeguardParams& sg,
                            const DeflationParams& defl, const StopRule& stop, std::uint64_t seed = kDefaultSeed)
{
    Trace trace;
    trace.points.push_back({start, 0.0, 0});
    if (apply_stop_rule(trace, p, stop)) {
        return trace;
    }

    CurvePoint cur = start;
    RegimeKind regime = RegimeKind::normal;
    std::optional<BranchScan> last_scan;
    int since_scan = defl.period;
    bool angle_suspended = false;
    int failures_at_min = 0;

    // Appends points one by one so the stop rule sees each of them.
    auto append = [&](const std::vector<TracePoint>& pts) {
        for (const auto& tp : pts) {
            trace.points.push_back(tp);
            if (apply_stop_rule(trace, p, stop)) {
                return true;
            }
        }
        return false;
    };

    auto vertical_jump = [&]() {
        const auto jump = vertical_turning_point(p, cur, sg, ctl, seed);
        if (!jump) {
            trace.add_event(EventKind::h_exhausted, {{"h", ctl.h}, {"lambda", cur.lambda()}});
            trace.finish(Termination::turning_point_failed, "vertical turning point failed after h exhausted at h_min");
            return false;
        }
        const double dist = (jump->z_star.x - cur.x).norm();
        trace.points.push_back({jump->z_star, dist, jump->newton_iterations});
        trace.add_event(EventKind::vertical_tp_applied, {{"delta_lambda", jump->delta_lambda},
                                                         {"lambda", jump->z_star.lambda()},
                                                         {"w_lambda", jump->w_star[jump->w_star.size() - 1]}});
        cur = CurvePoint{jump->z_star.x, jump->w_star};
        angle_suspended = true;
        ++since_scan;
        return true;
    };

    while (true) {
        if (since_scan >= defl.period) {
            since_scan = 0;
            std::optional<BranchScan> scan;
            try {
                scan = scan_branches(p, cur, last_scan ? &*last_scan : nullptr, defl, ctl.eps_F);
            } catch (const EvaluationError&) {
                trace.add_event(EventKind::branch_scan, {{"lambda", cur.lambda()}, {"skipped", 1.0}});
            }
            if (scan) {
                const Regime r = classify_regime(*scan, sg);
                regime = r.kind;
                const double trend = scan->trend == Trend::decreasing ? -1.0 : (scan->trend == Trend::increasing ? 1.0 : 0.0);
                trace.add_event(EventKind::branch_scan, {{"lambda", scan->lambda},
                                                         {"solutions", static_cast<double>(scan->solutions.size())},
                                                         {"delta", scan->delta.value_or(-1.0)},
                                                         {"trend", trend},
                                                         {"horizontal", regime == RegimeKind::horizontal ? 1.0 : 0.0}});
                last_scan = scan;
                if (regime == RegimeKind::horizontal) {
                    const auto hout = horizontal_turning_point(p, cur, *scan, sg, ctl, defl, stop.max_points, seed);
                    if (hout.end == HorizontalOutcome::End::tangent_failed) {
                        trace.add_event(EventKind::horizontal_tp_applied, {{"aborted", 1.0}});
                        regime = RegimeKind::vertical;
                        if (!vertical_jump()) {
                            return trace;
                        }
                        if (apply_stop_rule(trace, p, stop)) {
                            return trace;
                        }
                        continue;
                    }
                    const std::size_t junction = trace.points.size() + hout.principal_points;
                    if (append(hout.extension)) {
                        return trace;
                    }
                    if (hout.end == HorizontalOutcome::End::bifurcation_passed) {
                        trace.events.push_back({EventKind::bifurcation_passed, trace.last_index(),
                                                {{"lambda", hout.resume.lambda()}, {"gap", hout.gap}}});
                    } else {
                        trace.events.push_back(
                            {EventKind::horizontal_tp_applied, std::min(junction, trace.last_index()),
                             {{"coincided", hout.end == HorizontalOutcome::End::coincided ? 1.0 : 0.0},
                              {"gap", hout.gap},
                              {"principal", static_cast<double>(hout.principal_points)},
                              {"secondary", static_cast<double>(hout.secondary_points)}}});
                    }
                    cur = hout.resume;
                    ctl.h = std::max(hout.h_resume, ctl.h_min);
                    last_scan.reset();
                    regime = RegimeKind::normal;
                    angle_suspended = false;
                    failures_at_min = 0;
                    continue;
                }
            }
        }

        const double h_used = ctl.h;
        const auto out = mp_correct(p, predict(cur, h_used), cur.v, ctl);
        bool rejected_by_safeguard = false;
        if (out.converged()) {
            const auto verdict = check_safeguards(cur, *out.point, sg, !angle_suspended, regime == RegimeKind::vertical);
            if (verdict == SafeguardVerdict::accept) {
                cur = *out.point;
                trace.points.push_back({cur, h_used, out.iterations});
                ctl = adapt_h(ctl, out.iterations, true);
                angle_suspended = false;
                failures_at_min = 0;
                ++since_scan;
                if (apply_stop_rule(trace, p, stop)) {
                    return trace;
                }
                continue;
            }
            rejected_by_safeguard = true;
            const auto& c = *out.point;
            trace.add_event(event_for(verdict), {{"h", h_used},
                                                 {"du", (c.u() - cur.u()).norm()},
                                                 {"dlambda", std::abs(c.lambda() - cur.lambda())},
                                                 {"cos", c.v.dot(cur.v)},
                                                 {"v_lambda", c.v_lambda()}});
        } else {
            trace.add_event(EventKind::corrector_failed,
                            {{"h", h_used}, {"status", out.status == StepStatus::max_iters ? 1.0 : 2.0}});
        }

        if (ctl.h > ctl.h_min) {
            ctl.h = std::max(ctl.h * ctl.h_dec, ctl.h_min);
            failures_at_min = 0;
            continue;
        }
        // stalled at h_min: a safeguard rejection, or three corrector failures in a row
        if (!rejected_by_safeguard && ++failures_at_min < 3) {
            continue;
        }
        failures_at_min = 0;
        if (!vertical_jump()) {
            return trace;
        }
        if (apply_stop_rule(trace, p, stop)) {
            return trace;
        }
    }
}

} // namespace pathtrace
