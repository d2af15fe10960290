#pragma once

// Deterministic CSV / JSON writers for traces.

#include "pathtrace/config.hpp"

#include <array>
#include <charconv>
#include <filesystem>
#include <ostream>

namespace pathtrace {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline std::string value_column(const Problem& p) { return p.dim() == 1 ? "u" : p.diagnostic_name(); }

inline void write_points(std::ostream& os, const Trace& trace, const Problem& p)
{
    os << "index,lambda," << value_column(p) << ",v_lambda,h,iters\n";
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
        const auto& tp = trace.points[i];
        os << i << ',' << format_double(tp.point.lambda()) << ',' << format_double(p.diagnostic(tp.point.u())) << ','
           << format_double(tp.point.v_lambda()) << ',' << format_double(tp.h) << ',' << tp.iterations << '\n';
    }
}

inline void write_events(std::ostream& os, const Trace& trace)
{
    os << "kind,index,payload\n";
    for (const auto& e : trace.events) {
        os << to_string(e.kind) << ',' << e.index << ',';
        for (std::size_t k = 0; k < e.payload.size(); ++k) {
            if (k) os << ';';
            os << e.payload[k].first << '=' << format_double(e.payload[k].second);
        }
        os << '\n';
    }
}

/// Full nodal field (boundary zeros included) every `every` points, plus the last point.
inline void write_fields(std::ostream& os, const Trace& trace, const fem::FemProblem& p, int every)
{
    os << "index,lambda,x,u\n";
    const auto& nodes = p.mesh().nodes;
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
        if (every <= 0 || (i % static_cast<std::size_t>(every) != 0 && i + 1 != trace.points.size())) {
            continue;
        }
        const auto& pt = trace.points[i].point;
        const auto u = pt.u();
        for (std::size_t g = 0; g < nodes.size(); ++g) {
            const bool boundary = g == 0 || g + 1 == nodes.size();
            const double val = boundary ? 0.0 : u[static_cast<Index>(g - 1)];
            os << i << ',' << format_double(pt.lambda()) << ',' << format_double(nodes[g]) << ',' << format_double(val)
               << '\n';
        }
    }
}

inline nlohmann::ordered_json summary_json(const Trace& trace, const RunConfig& cfg, std::uint64_t seed)
{
    nlohmann::ordered_json s;
    s["problem"] = cfg.problem;
    s["mode"] = std::string(to_string(cfg.mode));
    s["termination"] = std::string(to_string(trace.termination));
    s["reason"] = trace.reason;
    s["points"] = trace.points.size();
    if (!trace.points.empty()) {
        double lo = kInf;
        double hi = -kInf;
        for (const auto& tp : trace.points) {
            lo = std::min(lo, tp.point.lambda());
            hi = std::max(hi, tp.point.lambda());
        }
        s["lambda_min"] = format_double(lo);
        s["lambda_max"] = format_double(hi);
    }
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [k, n] : trace.event_counts()) {
        counts[k] = n;
    }
    s["event_counts"] = counts;
    s["seed"] = seed;
    return s;
}

struct OutputPaths {
    std::filesystem::path points;
    std::filesystem::path events;
    std::filesystem::path summary;
    std::filesystem::path fields;

    static OutputPaths in(const std::filesystem::path& dir)
    {
        return {dir / "points.csv", dir / "events.csv", dir / "summary.json", dir / "fields.csv"};
    }
};

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void write_trace(const Trace& trace, const Problem& p, const RunConfig& cfg, std::uint64_t seed,
                        const OutputPaths& paths)
{
    std::error_code ec;
    std::filesystem::create_directories(paths.points.parent_path(), ec);
    auto open = [](const std::filesystem::path& path) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw OutputError("cannot write '" + path.string() + "'");
        }
        return os;
    };
    {
        auto os = open(paths.points);
        write_points(os, trace, p);
    }
    {
        auto os = open(paths.events);
        write_events(os, trace);
    }
    {
        auto os = open(paths.summary);
        os << summary_json(trace, cfg, seed).dump(2) << '\n';
    }
    if (cfg.fields_every > 0) {
        if (const auto* fp = dynamic_cast<const fem::FemProblem*>(&p)) {
            auto os = open(paths.fields);
            write_fields(os, trace, *fp, cfg.fields_every);
        }
    }
}

} // namespace pathtrace
