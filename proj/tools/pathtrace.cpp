// pathtrace: run a continuation from a JSON config, or list the registered problems.

#include "pathtrace/pathtrace.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace {

struct Overrides {
    std::string mode;
    std::string out;
    std::optional<double> c_min, delta_max_u, delta_max_lambda, delta_crit, eps_lambda, eps_lambda_star,
        delta_lambda, eps_diff, deflation_power, deflation_shift, gamma, zeta, eta, h;
    std::optional<int> deflation_period, mesh_elems;
};

void apply(const Overrides& o, pathtrace::RunConfig& c)
{
    auto set = [](const auto& src, auto& dst) {
        if (src) dst = *src;
    };
    set(o.c_min, c.safeguards.c_min);
    set(o.delta_max_u, c.safeguards.delta_max_u);
    set(o.delta_max_lambda, c.safeguards.delta_max_lambda);
    set(o.delta_crit, c.safeguards.delta_crit);
    set(o.eps_lambda, c.safeguards.eps_lambda);
    set(o.eps_lambda_star, c.safeguards.eps_lambda_star);
    set(o.delta_lambda, c.safeguards.delta_lambda);
    set(o.eps_diff, c.safeguards.eps_diff);
    set(o.deflation_period, c.deflation.period);
    set(o.deflation_power, c.deflation.power);
    set(o.deflation_shift, c.deflation.shift);
    set(o.mesh_elems, c.mesh_elems);
    set(o.gamma, c.fem.gamma);
    set(o.zeta, c.fem.zeta);
    set(o.eta, c.fem.eta);
    set(o.h, c.step.h);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical continuation with safeguarded turning-point handling"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("problems", "List the registered problems");

    std::string config_path;
    Overrides o;
    auto* run = app.add_subcommand("run", "Trace a solution curve");
    run->add_option("config", config_path, "JSON configuration file")->required();
    run->add_option("--mode", o.mode, "standard or improved")->check(CLI::IsMember({"standard", "improved"}));
    run->add_option("--out", o.out, "output directory");
    run->add_option("--step", o.h, "initial step length h");
    run->add_option("--c-min", o.c_min, "minimum cosine between consecutive tangents");
    run->add_option("--delta-max-u", o.delta_max_u, "maximum |du| per step");
    run->add_option("--delta-max-lambda", o.delta_max_lambda, "maximum |dlambda| per step");
    run->add_option("--delta-crit", o.delta_crit, "branch distance below which a horizontal point is suspected");
    run->add_option("--eps-lambda", o.eps_lambda, "lambda tolerance (sets delta_lambda = 10 eps_lambda)");
    run->add_option("--eps-lambda-star", o.eps_lambda_star, "lambda tilt of the tangent after a vertical jump");
    run->add_option("--delta-lambda", o.delta_lambda, "lambda offset of the vertical jump");
    run->add_option("--eps-diff", o.eps_diff, "coincidence tolerance of the two branches");
    run->add_option("--deflation-period", o.deflation_period, "accepted steps between branch scans");
    run->add_option("--deflation-power", o.deflation_power, "deflation power p");
    run->add_option("--deflation-shift", o.deflation_shift, "deflation shift sigma");
    run->add_option("--mesh-elems", o.mesh_elems, "number of quadratic elements");
    run->add_option("--gamma", o.gamma, "Bratu gamma");
    run->add_option("--zeta", o.zeta, "manufactured zeta");
    run->add_option("--eta", o.eta, "manufactured eta");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& p : pathtrace::registered_problems()) {
            std::cout << std::left << std::setw(16) << p.id << p.description << '\n';
        }
        return 0;
    }

    pathtrace::RunConfig cfg;
    try {
        cfg = pathtrace::load_config(config_path);
        if (!o.mode.empty()) {
            cfg.mode = *pathtrace::parse_mode(o.mode);
        }
        if (o.eps_lambda && !o.delta_lambda) {
            cfg.safeguards.delta_lambda = 10.0 * *o.eps_lambda;
        }
        apply(o, cfg);
        if (auto bad = pathtrace::config_violations(cfg); !bad.empty()) {
            throw pathtrace::ConfigError(std::move(bad));
        }
    } catch (const pathtrace::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return pathtrace::exit_config_error;
    }

    const std::string out_dir = o.out.empty() ? cfg.out_dir : o.out;
    const auto res = pathtrace::run(cfg, out_dir);
    if (res.exit_code == pathtrace::exit_config_error) {
        std::cerr << res.message << '\n';
        return res.exit_code;
    }
    std::cout << cfg.problem << " (" << to_string(cfg.mode) << "): " << res.trace.points.size() << " points, "
              << to_string(res.trace.termination);
    if (res.exit_code != pathtrace::exit_ok) {
        std::cout << " - " << res.message;
    }
    std::cout << '\n';
    return res.exit_code;
}
