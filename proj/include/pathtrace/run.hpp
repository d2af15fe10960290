#pragma once

// One continuation run: start point, trace, outputs, exit status.

#include "pathtrace/output.hpp"

#include <iostream>

namespace pathtrace {

enum ExitCode : int { exit_ok = 0, exit_config_error = 1, exit_terminated_early = 2 };

struct RunResult {
    int exit_code = exit_ok;
    Trace trace;
    std::string message;
};

/// Computes the trace for a validated config without writing anything.
inline Trace compute_trace(const RunConfig& cfg, const Problem& p, std::uint64_t seed)
{
    const auto start = make_start_point(p, start_guess(cfg, p.dim()), cfg.lambda0, cfg.step, cfg.orientation, seed);
    if (!start) {
        Trace t;
        t.finish(Termination::turning_point_failed, "start point did not converge");
        return t;
    }
    if (cfg.mode == Mode::standard) {
        return trace_standard(p, *start, cfg.step, cfg.stop);
    }
    return trace_improved(p, *start, cfg.step, cfg.safeguards, cfg.deflation, cfg.stop, seed);
}

inline RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir)
{
    RunResult res;
    std::uint64_t seed = cfg.seed;
    std::unique_ptr<Problem> p;
    try {
        if (auto bad = config_violations(cfg); !bad.empty()) {
            throw ConfigError(std::move(bad));
        }
        seed = effective_seed(cfg.seed);
        p = make_problem(cfg);
        (void)start_guess(cfg, p->dim());
    } catch (const ConfigError& e) {
        res.exit_code = exit_config_error;
        res.message = e.what();
        return res;
    }
    res.trace = compute_trace(cfg, *p, seed);
    try {
        write_trace(res.trace, *p, cfg, seed, OutputPaths::in(out_dir));
    } catch (const OutputError& e) {
        res.exit_code = exit_config_error;
        res.message = e.what();
        return res;
    }
    res.exit_code = res.trace.completed() ? exit_ok : exit_terminated_early;
    res.message = res.trace.reason;
    return res;
}

} // namespace pathtrace
