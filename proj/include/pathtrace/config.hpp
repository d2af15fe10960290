#pragma once

// Run configuration: flat JSON document, per-problem defaults, validation.

#include "pathtrace/fem1d.hpp"
#include "pathtrace/problems.hpp"
#include "pathtrace/robust.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>

namespace pathtrace {

enum class Mode { standard, improved };

inline std::string_view to_string(Mode m) { return m == Mode::standard ? "standard" : "improved"; }

inline std::optional<Mode> parse_mode(std::string_view s)
{
    if (s == "standard") return Mode::standard;
    if (s == "improved") return Mode::improved;
    return std::nullopt;
}

/// Box around the hard part of the curve, used to derive the distance thresholds.
struct Region {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
};

struct RunConfig {
    std::string problem;
    Mode mode = Mode::improved;
    std::vector<double> u0{0.0}; // one value fills every unknown
    double lambda0 = 0.0;
    double orientation = 1.0; // sign applied to the initial tangent (lambda component >= 0 before flipping)
    StepControl step;
    SafeguardParams safeguards;
    DeflationParams deflation;
    StopRule stop;
    std::optional<Region> region;
    int mesh_elems = 20;
    fem::FemProblemSpec fem;
    int fields_every = 0; // write the full field every n points (0 = never)
    std::string out_dir = "pathtrace_out";
    std::uint64_t seed = kDefaultSeed;
};

struct ProblemInfo {
    std::string id;
    std::string description;
};

inline const std::vector<ProblemInfo>& registered_problems()
{
    static const std::vector<ProblemInfo> list{
        {"fa", "-u^2 l^3 - l/3 + 100 (horizontal fold at l = 300)"},
        {"fb", "2000 l^2 - u^3 + 6 l^5 (vertical cusp at the origin)"},
        {"fc", "-u^3 l^2 - u + 50 (sharp peak u = 50 at l = 0)"},
        {"fd", "-500 u^2 - 10 l^3 + u^5/10 (horizontal cusp at the origin)"},
        {"fe", "fd sheared along s = l - u - 5, cusp at (u, l) = (20, 25)"},
        {"fe_inv", "fe with u and l exchanged"},
        {"crossing_lines", "(u - l)(u + l), two lines crossing at the origin"},
        {"bratu", "modified Bratu, quadratic FEM, midpoint diagnostic u_mid"},
        {"manufactured", "manufactured solution g(l) x(1-x), quadratic FEM"},
    };
    return list;
}

inline bool is_registered(std::string_view id)
{
    for (const auto& p : registered_problems()) {
        if (p.id == id) {
            return true;
        }
    }
    return false;
}

/// Distance thresholds derived from a region box; only fields not set explicitly are replaced.
inline void derive_from_region(SafeguardParams& sg, const Region& r, bool keep_l, bool keep_u, bool keep_c)
{
    const auto derived = SafeguardParams::from_region(r.lambda_max - r.lambda_min, r.u_max - r.u_min);
    if (!keep_l) sg.delta_max_lambda = derived.delta_max_lambda;
    if (!keep_u) sg.delta_max_u = derived.delta_max_u;
    if (!keep_c) sg.delta_crit = derived.delta_crit;
}

/// Start point, stop window and safeguard thresholds that trace each registered problem.
inline RunConfig problem_defaults(const std::string& id)
{
    RunConfig c;
    c.problem = id;
    auto& sg = c.safeguards;
    auto& st = c.stop;
    auto set_deltas = [&](double dl, double du, double dc) {
        sg.delta_max_lambda = dl;
        sg.delta_max_u = du;
        sg.delta_crit = dc;
    };
    if (id == "fa") {
        c.u0 = {3.5};
        c.lambda0 = 2.0;
        st.lambda_min = 1.5;
        st.lambda_max = 310.0;
        set_deltas(30.0, 1.6, 2.0);
    } else if (id == "fb") {
        c.u0 = {30.0};
        c.lambda0 = -5.0;
        st.lambda_min = -6.0;
        st.lambda_max = 5.0;
        set_deltas(1.0, 12.0, 15.0);
    } else if (id == "fc") {
        c.u0 = {1.7};
        c.lambda0 = -3.0;
        st.lambda_min = -3.5;
        st.lambda_max = 3.0;
        set_deltas(1.0, 10.0, 12.5);
    } else if (id == "fd") {
        c.u0 = {-4.0};
        c.lambda0 = -9.3245;
        st.lambda_min = -20.0;
        st.lambda_max = 20.0;
        st.diag_min = -5.0;
        st.diag_max = 4.0;
        set_deltas(4.0, 1.6, 3.0);
    } else if (id == "fe") {
        c.u0 = {10.68};
        c.lambda0 = 11.68;
        st.lambda_min = 10.0;
        st.lambda_max = 30.0;
        st.diag_min = 10.0;
        st.diag_max = 30.0;
        c.region = Region{11.0, 25.0, 10.0, 20.0};
    } else if (id == "fe_inv") {
        c.u0 = {11.68};
        c.lambda0 = 10.68;
        st.lambda_min = 10.0;
        st.lambda_max = 30.0;
        c.region = Region{10.0, 20.0, 11.0, 25.0};
    } else if (id == "crossing_lines") {
        c.u0 = {-10.0};
        c.lambda0 = -10.0;
        st.lambda_min = -11.0;
        st.lambda_max = 10.0;
        set_deltas(0.5, 0.5, 7.0);
    } else if (id == "bratu") {
        c.fem.kind = fem::FemKind::bratu_modified;
        c.u0 = {0.0};
        c.lambda0 = 0.5;
        st.lambda_min = 0.1;
        st.lambda_max = 10.0;
        st.diag_min = -1.0;
        st.diag_max = 0.04;
        set_deltas(0.1, 0.02, 0.025);
    } else if (id == "manufactured") {
        c.fem.kind = fem::FemKind::manufactured;
        c.u0 = {0.0};
        c.lambda0 = 0.9;
        st.lambda_min = 0.85;
        st.lambda_max = 1.005;
        st.diag_min = -1.0;
        st.diag_max = 2.0;
        set_deltas(0.02, 0.2, 0.25);
    }
    if (c.region) {
        derive_from_region(sg, *c.region, false, false, false);
    }
    return c;
}

/// Every invariant of the owning modules, collected rather than thrown one by one.
inline std::vector<std::string> config_violations(const RunConfig& c)
{
    std::vector<std::string> bad;
    if (!is_registered(c.problem)) {
        bad.push_back("unknown problem '" + c.problem + "'");
    }
    for (auto& s : c.step.violations()) bad.push_back(std::move(s));
    if (c.mode == Mode::improved) {
        for (auto& s : c.safeguards.violations()) bad.push_back(std::move(s));
    }
    for (auto& s : c.deflation.violations()) bad.push_back(std::move(s));
    if (c.u0.empty()) bad.emplace_back("u0 must not be empty");
    if (!(c.orientation == 1.0 || c.orientation == -1.0)) bad.emplace_back("orientation must be 1 or -1");
    if (c.stop.max_points < 2) bad.emplace_back("max_points must be >= 2");
    if (!(c.stop.lambda_min < c.stop.lambda_max)) bad.emplace_back("lambda_min must be < lambda_max");
    if (!(c.stop.diag_min < c.stop.diag_max)) bad.emplace_back("diag_min must be < diag_max");
    if (c.fields_every < 0) bad.emplace_back("fields_every must be >= 0");
    if (c.problem == "bratu" || c.problem == "manufactured") {
        if (c.mesh_elems < 1) bad.emplace_back("mesh_elems must be >= 1");
        try {
            c.fem.validate();
        } catch (const ConfigError& e) {
            for (const auto& s : e.violations()) bad.push_back(s);
        }
    }
    return bad;
}

inline std::unique_ptr<Problem> make_problem(const RunConfig& c)
{
    if (auto id = parse_analytic_id(c.problem)) {
        return std::make_unique<AnalyticProblem>(*id);
    }
    if (c.problem == "crossing_lines") {
        return make_crossing_lines();
    }
    if (c.problem == "bratu" || c.problem == "manufactured") {
        return std::make_unique<fem::FemProblem>(c.fem, fem::Mesh1D::uniform(c.mesh_elems));
    }
    throw ConfigError({"unknown problem '" + c.problem + "'"});
}

/// Starting guess expanded to the problem dimension.
inline Vector start_guess(const RunConfig& c, Index n)
{
    if (c.u0.size() == 1) {
        return Vector::Constant(n, c.u0.front());
    }
    if (static_cast<Index>(c.u0.size()) != n) {
        throw ConfigError({"u0 has " + std::to_string(c.u0.size()) + " entries, problem has " + std::to_string(n) +
                           " unknowns"});
    }
    return Eigen::Map<const Vector>(c.u0.data(), n);
}

/// Seed from PATHTRACE_SEED when set, otherwise the configured one.
inline std::uint64_t effective_seed(std::uint64_t configured)
{
    if (const char* env = std::getenv("PATHTRACE_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') {
            return v;
        }
        throw ConfigError({"PATHTRACE_SEED must be an unsigned integer"});
    }
    return configured;
}

/// Builds a config from a parsed JSON object; unknown keys and bad types are all reported together.
inline RunConfig config_from_json(const nlohmann::json& j)
{
    using nlohmann::json;
    std::vector<std::string> bad;
    if (!j.is_object()) {
        throw ConfigError({"configuration must be a JSON object"});
    }
    if (!j.contains("problem") || !j["problem"].is_string()) {
        throw ConfigError({"missing problem id (key 'problem')"});
    }
    const std::string id = j["problem"].get<std::string>();
    if (!is_registered(id)) {
        throw ConfigError({"unknown problem '" + id + "'"});
    }
    RunConfig c = problem_defaults(id);
    std::set<std::string> seen;

    auto num = [&](const char* key, double& dst) {
        if (!j.contains(key)) return;
        seen.insert(key);
        if (!j[key].is_number()) {
            bad.push_back(std::string(key) + " must be a number");
            return;
        }
        dst = j[key].get<double>();
    };
    auto integer = [&](const char* key, auto& dst) {
        if (!j.contains(key)) return;
        seen.insert(key);
        if (!j[key].is_number_integer()) {
            bad.push_back(std::string(key) + " must be an integer");
            return;
        }
        dst = j[key].get<std::remove_reference_t<decltype(dst)>>();
    };

    seen.insert("problem");
    if (j.contains("mode")) {
        seen.insert("mode");
        const auto m = j["mode"].is_string() ? parse_mode(j["mode"].get<std::string>()) : std::nullopt;
        if (m) {
            c.mode = *m;
        } else {
            bad.emplace_back("mode must be \"standard\" or \"improved\"");
        }
    }
    if (j.contains("u0")) {
        seen.insert("u0");
        const auto& v = j["u0"];
        if (v.is_number()) {
            c.u0 = {v.get<double>()};
        } else if (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
            c.u0 = v.get<std::vector<double>>();
        } else {
            bad.emplace_back("u0 must be a number or a non-empty array of numbers");
        }
    }
    num("lambda0", c.lambda0);
    num("orientation", c.orientation);

    num("h", c.step.h);
    num("h_min", c.step.h_min);
    num("h_inc", c.step.h_inc);
    num("h_dec", c.step.h_dec);
    integer("K_min", c.step.K_min);
    integer("K_max", c.step.K_max);
    integer("k_max", c.step.k_max);
    num("eps_F", c.step.eps_F);
    num("eps_x", c.step.eps_x);

    num("c_min", c.safeguards.c_min);
    num("delta_max_u", c.safeguards.delta_max_u);
    num("delta_max_lambda", c.safeguards.delta_max_lambda);
    num("delta_crit", c.safeguards.delta_crit);
    num("eps_lambda", c.safeguards.eps_lambda);
    num("eps_lambda_star", c.safeguards.eps_lambda_star);
    num("delta_lambda", c.safeguards.delta_lambda);
    num("eps_diff", c.safeguards.eps_diff);
    if (!j.contains("delta_lambda") && j.contains("eps_lambda")) {
        c.safeguards.delta_lambda = 10.0 * c.safeguards.eps_lambda;
    }

    Region r = c.region.value_or(Region{});
    const bool has_region = j.contains("region_lambda_min") || j.contains("region_lambda_max") ||
                            j.contains("region_u_min") || j.contains("region_u_max");
    num("region_lambda_min", r.lambda_min);
    num("region_lambda_max", r.lambda_max);
    num("region_u_min", r.u_min);
    num("region_u_max", r.u_max);
    if (has_region) {
        if (!(r.lambda_max > r.lambda_min && r.u_max > r.u_min)) {
            bad.emplace_back("region must have region_lambda_max > region_lambda_min and region_u_max > region_u_min");
        }
        c.region = r;
    }

    num("deflation_power", c.deflation.power);
    num("deflation_shift", c.deflation.shift);
    integer("deflation_period", c.deflation.period);
    integer("deflation_max_extra", c.deflation.max_extra);
    integer("deflation_newton_max_iters", c.deflation.newton_max_iters);
    num("deflation_distinct_rel", c.deflation.distinct_rel);

    integer("max_points", c.stop.max_points);
    num("lambda_min", c.stop.lambda_min);
    num("lambda_max", c.stop.lambda_max);
    num("diag_min", c.stop.diag_min);
    num("diag_max", c.stop.diag_max);

    integer("mesh_elems", c.mesh_elems);
    num("gamma", c.fem.gamma);
    num("zeta", c.fem.zeta);
    num("eta", c.fem.eta);
    integer("quadrature_points", c.fem.quadrature_points);
    integer("fields_every", c.fields_every);
    integer("seed", c.seed);
    if (j.contains("out_dir")) {
        seen.insert("out_dir");
        if (j["out_dir"].is_string()) {
            c.out_dir = j["out_dir"].get<std::string>();
        } else {
            bad.emplace_back("out_dir must be a string");
        }
    }

    for (const auto& [key, value] : j.items()) {
        if (!seen.count(key)) {
            bad.push_back("unknown key '" + key + "'");
        }
    }

    if (c.region) {
        derive_from_region(c.safeguards, *c.region, j.contains("delta_max_lambda"), j.contains("delta_max_u"),
                           j.contains("delta_crit"));
    }
    for (auto& s : config_violations(c)) bad.push_back(std::move(s));
    if (!bad.empty()) {
        throw ConfigError(std::move(bad));
    }
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot open configuration file '" + path + "'"});
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("configuration is not valid JSON: ") + e.what()});
    }
    return config_from_json(j);
}

} // namespace pathtrace
