#pragma once

#include "pathtrace/problem.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pathtrace {

enum class EventKind {
    step_rejected_angle,
    step_rejected_distance,
    step_rejected_sign,
    corrector_failed,
    vertical_tp_applied,
    horizontal_tp_applied,
    bifurcation_passed,
    branch_scan,
    h_exhausted,
};

inline std::string_view to_string(EventKind k)
{
    switch (k) {
    case EventKind::step_rejected_angle: return "step_rejected_angle";
    case EventKind::step_rejected_distance: return "step_rejected_distance";
    case EventKind::step_rejected_sign: return "step_rejected_sign";
    case EventKind::corrector_failed: return "corrector_failed";
    case EventKind::vertical_tp_applied: return "vertical_tp_applied";
    case EventKind::horizontal_tp_applied: return "horizontal_tp_applied";
    case EventKind::bifurcation_passed: return "bifurcation_passed";
    case EventKind::branch_scan: return "branch_scan";
    case EventKind::h_exhausted: return "h_exhausted";
    }
    return "?";
}

struct TraceEvent {
    EventKind kind;
    std::size_t index; // index of the trace point the event refers to
    std::vector<std::pair<std::string, double>> payload;

    std::optional<double> get(std::string_view key) const
    {
        for (const auto& [k, v] : payload) {
            if (k == key) {
                return v;
            }
        }
        return std::nullopt;
    }
};

struct TracePoint {
    CurvePoint point;
    double h = 0.0;     // prediction step that produced the point (0 for the start)
    int iterations = 0; // corrector iterations
};

enum class Termination { running, max_points, left_window, h_exhausted, turning_point_failed };

inline std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::running: return "running";
    case Termination::max_points: return "max_points";
    case Termination::left_window: return "left_window";
    case Termination::h_exhausted: return "h_exhausted";
    case Termination::turning_point_failed: return "turning_point_failed";
    }
    return "?";
}

/// Stop when a converged point leaves the lambda / diagnostic window or the point budget is used.
struct StopRule {
    std::size_t max_points = 10000;
    double lambda_min = -kInf;
    double lambda_max = kInf;
    double diag_min = -kInf;
    double diag_max = kInf;

    bool inside(double lambda, double diag) const
    {
        return lambda >= lambda_min && lambda <= lambda_max && diag >= diag_min && diag <= diag_max;
    }
};

struct Trace {
    std::vector<TracePoint> points;
    std::vector<TraceEvent> events;
    Termination termination = Termination::running;
    std::string reason;

    bool completed() const
    {
        return termination == Termination::left_window || termination == Termination::max_points;
    }

    std::size_t last_index() const { return points.empty() ? 0 : points.size() - 1; }

    void add_event(EventKind kind, std::vector<std::pair<std::string, double>> payload = {})
    {
        events.push_back({kind, last_index(), std::move(payload)});
    }

    std::size_t count(EventKind kind) const
    {
        std::size_t n = 0;
        for (const auto& e : events) {
            n += e.kind == kind ? 1 : 0;
        }
        return n;
    }

    std::map<std::string, std::size_t> event_counts() const
    {
        std::map<std::string, std::size_t> out;
        for (const auto& e : events) {
            ++out[std::string(to_string(e.kind))];
        }
        return out;
    }

    void finish(Termination t, std::string why)
    {
        termination = t;
        reason = std::move(why);
    }
};

/// Applies the stop rule to the most recent point; returns true when the trace must end.
inline bool apply_stop_rule(Trace& trace, const Problem& p, const StopRule& stop)
{
    const auto& last = trace.points.back().point;
    if (!stop.inside(last.lambda(), p.diagnostic(last.u()))) {
        trace.finish(Termination::left_window, "left the lambda/diagnostic window");
        return true;
    }
    if (trace.points.size() >= stop.max_points) {
        trace.finish(Termination::max_points, "reached the maximum number of points");
        return true;
    }
    return false;
}

} // namespace pathtrace
