#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fracshape/errors.hpp"
#include "fracshape/grid.hpp"
#include "fracshape/io.hpp"
#include "fracshape/limits.hpp"
#include "fracshape/params.hpp"
#include "fracshape/shapeopt.hpp"
#include "fracshape/solve.hpp"
#include "fracshape/spectral.hpp"

namespace fracshape::cli {

using nlohmann::json;

enum ExitCode : int { ok = 0, validation = 2, nonconvergence = 3, guard = 4 };

/// Rejected configuration; `path` names the offending key.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path.empty() ? msg : path + ": " + msg) {}
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"torsion", "eigen", "optimize", "sweep-s", "bbm", "aniso-check", "gamma-dist"};
    return c;
}

/// Predicate string ("all", "empty", "left-half", "disk(r)"), inline 0/1
/// array over the interior cells, or {"file": path} to a mask.json.
struct MaskSource {
    enum class Kind { predicate, cells, file };
    Kind kind = Kind::predicate;
    std::string text = "all";
    std::vector<int> cells;
    bool operator==(const MaskSource&) const = default;
};

struct SolverConfig {
    double tol_grad = 1e-9;
    int max_iter = 50000;
    std::string step_rule = "line_search";
    double eta = 1e-3;
    double beta = 0.5;
    double armijo_c = 1e-4;
    std::string direction = "conjugate";
    bool operator==(const SolverConfig&) const = default;

    SolverOpts opts() const {
        SolverOpts o;
        o.tol_grad = tol_grad;
        o.max_iter = max_iter;
        o.direction = direction == "steepest" ? Direction::steepest : Direction::conjugate;
        if (step_rule == "fixed") o.step_rule = FixedStep{eta};
        else if (step_rule == "backtracking") o.step_rule = Backtracking{beta, armijo_c};
        else o.step_rule = LineSearch{};
        return o;
    }
};

struct ShapeConfig {
    std::string functional = "first_eigenvalue";
    double c = 0.0;
    std::string method = "enumerate";
    double penalty = 0.2;
    int max_iter = 100;
    bool operator==(const ShapeConfig&) const = default;
};

struct SweepConfig {
    std::vector<double> s_list;
    std::string observable = "torsion";
    bool calibrate_kappa = true;
    int axis = 0;
    bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
    std::string command;
    GridSpec grid;
    OperatorParams params = IsoParams{};
    MaskSource mask;
    std::optional<MaskSource> mask_b;
    std::optional<MaskSource> initial_mask;
    SolverConfig solver;
    ShapeConfig shape;
    SweepConfig sweep;
    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline void check_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw ConfigError(join(path, k), "unknown key");
    }
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

inline int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<int>();
}

inline bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return v.get<bool>();
}

inline std::string get_string(const json& v, const std::string& path, const std::vector<std::string>& choices = {}) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    auto s = v.get<std::string>();
    if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
        std::string list;
        for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
        throw ConfigError(path, "expected one of " + list);
    }
    return s;
}

inline std::vector<double> get_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline MaskSource parse_mask(const json& v, const std::string& path) {
    MaskSource m;
    if (v.is_string()) {
        m.text = v.get<std::string>();
        return m;
    }
    if (v.is_array()) {
        m.kind = MaskSource::Kind::cells;
        m.text.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const int c = get_int(v[i], path + "[" + std::to_string(i) + "]");
            if (c != 0 && c != 1) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected 0 or 1");
            m.cells.push_back(c);
        }
        return m;
    }
    if (v.is_object()) {
        check_keys(v, path, {"file"});
        if (!v.contains("file")) throw ConfigError(join(path, "file"), "missing");
        m.kind = MaskSource::Kind::file;
        m.text = get_string(v["file"], join(path, "file"));
        return m;
    }
    throw ConfigError(path, "expected a predicate string, a 0/1 array or {\"file\": path}");
}

inline json mask_to_json(const MaskSource& m) {
    switch (m.kind) {
        case MaskSource::Kind::cells: return m.cells;
        case MaskSource::Kind::file: return json{{"file", m.text}};
        default: return m.text;
    }
}

inline bool aniso_keys(const json& p) { return p.contains("s_vec") || p.contains("p_vec"); }

}  // namespace detail

/// Strict parse: unknown keys and type mismatches raise ConfigError.
inline RunConfig parse_config(const json& j, const std::string& command = {}) {
    using namespace detail;
    check_keys(j, "", {"command", "grid", "params", "mask", "mask_b", "initial_mask", "solver", "shape", "sweep"});
    RunConfig c;
    c.command = command;
    if (j.contains("command")) {
        const auto s = get_string(j["command"], "command", commands());
        if (!command.empty() && s != command) throw ConfigError("command", "config names '" + s + "' but '" + command + "' was requested");
        c.command = s;
    }
    if (c.command.empty()) throw ConfigError("command", "missing");
    if (std::find(commands().begin(), commands().end(), c.command) == commands().end()) {
        throw ConfigError("command", "unknown command '" + c.command + "'");
    }

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g, "grid", {"dim", "box_min", "box_max", "nodes_per_axis", "padding_cells"});
        if (g.contains("dim")) c.grid.dim = get_int(g["dim"], "grid.dim");
        c.grid.box_min.assign(static_cast<std::size_t>(std::max(c.grid.dim, 0)), 0.0);
        c.grid.box_max.assign(static_cast<std::size_t>(std::max(c.grid.dim, 0)), 1.0);
        if (g.contains("box_min")) c.grid.box_min = get_numbers(g["box_min"], "grid.box_min");
        if (g.contains("box_max")) c.grid.box_max = get_numbers(g["box_max"], "grid.box_max");
        if (g.contains("nodes_per_axis")) c.grid.nodes_per_axis = get_int(g["nodes_per_axis"], "grid.nodes_per_axis");
        if (g.contains("padding_cells")) c.grid.padding_cells = get_int(g["padding_cells"], "grid.padding_cells");
    }
    try {
        Grid probe(c.grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("grid", e.what());
    }

    if (j.contains("params")) {
        const auto& p = j["params"];
        if (!p.is_object()) throw ConfigError("params", "expected an object");
        if (aniso_keys(p)) {
            check_keys(p, "params", {"s_vec", "p_vec"});
            AnisoParams a;
            a.s_vec = p.contains("s_vec") ? get_numbers(p["s_vec"], "params.s_vec")
                                          : std::vector<double>(static_cast<std::size_t>(c.grid.dim), 0.5);
            a.p_vec = p.contains("p_vec") ? get_numbers(p["p_vec"], "params.p_vec")
                                          : std::vector<double>(static_cast<std::size_t>(c.grid.dim), 2.0);
            if (a.s_vec.size() != static_cast<std::size_t>(c.grid.dim)) throw ConfigError("params.s_vec", "needs one entry per axis");
            if (a.p_vec.size() != static_cast<std::size_t>(c.grid.dim)) throw ConfigError("params.p_vec", "needs one entry per axis");
            c.params = a;
        } else {
            check_keys(p, "params", {"s", "p", "kappa"});
            IsoParams ip;
            if (p.contains("s")) ip.s = get_number(p["s"], "params.s");
            if (p.contains("p")) ip.p = get_number(p["p"], "params.p");
            if (p.contains("kappa")) ip.kappa = get_number(p["kappa"], "params.kappa");
            try {
                ip.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError("params", e.what());
            }
            c.params = ip;
        }
    }

    if (j.contains("mask")) c.mask = parse_mask(j["mask"], "mask");
    if (j.contains("mask_b")) c.mask_b = parse_mask(j["mask_b"], "mask_b");
    if (j.contains("initial_mask")) c.initial_mask = parse_mask(j["initial_mask"], "initial_mask");

    c.solver.tol_grad = SolverOpts::defaults_for(c.params).tol_grad;
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        check_keys(s, "solver", {"tol_grad", "max_iter", "step_rule", "eta", "beta", "armijo_c", "direction"});
        if (s.contains("tol_grad")) c.solver.tol_grad = get_number(s["tol_grad"], "solver.tol_grad");
        if (s.contains("max_iter")) c.solver.max_iter = get_int(s["max_iter"], "solver.max_iter");
        if (s.contains("step_rule")) c.solver.step_rule = get_string(s["step_rule"], "solver.step_rule", {"line_search", "fixed", "backtracking"});
        if (s.contains("eta")) c.solver.eta = get_number(s["eta"], "solver.eta");
        if (s.contains("beta")) c.solver.beta = get_number(s["beta"], "solver.beta");
        if (s.contains("armijo_c")) c.solver.armijo_c = get_number(s["armijo_c"], "solver.armijo_c");
        if (s.contains("direction")) c.solver.direction = get_string(s["direction"], "solver.direction", {"conjugate", "steepest"});
    }
    if (!(c.solver.tol_grad > 0.0)) throw ConfigError("solver.tol_grad", "must be > 0");
    if (c.solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be >= 1");
    if (!(c.solver.eta > 0.0)) throw ConfigError("solver.eta", "must be > 0");
    if (!(c.solver.beta > 0.0 && c.solver.beta < 1.0)) throw ConfigError("solver.beta", "must lie in (0, 1)");
    if (!(c.solver.armijo_c > 0.0 && c.solver.armijo_c < 1.0)) throw ConfigError("solver.armijo_c", "must lie in (0, 1)");

    c.shape.c = Grid(c.grid).domain_volume();
    if (j.contains("shape")) {
        const auto& s = j["shape"];
        check_keys(s, "shape", {"functional", "c", "method", "penalty", "max_iter"});
        if (s.contains("functional")) c.shape.functional = get_string(s["functional"], "shape.functional", {"first_eigenvalue", "torsional_compliance"});
        if (s.contains("c")) c.shape.c = get_number(s["c"], "shape.c");
        if (s.contains("method")) c.shape.method = get_string(s["method"], "shape.method", {"enumerate", "rearrange"});
        if (s.contains("penalty")) c.shape.penalty = get_number(s["penalty"], "shape.penalty");
        if (s.contains("max_iter")) c.shape.max_iter = get_int(s["max_iter"], "shape.max_iter");
    }
    if (!(c.shape.c >= 0.0) || !std::isfinite(c.shape.c)) throw ConfigError("shape.c", "must be finite and >= 0");
    if (!(c.shape.penalty > 0.0)) throw ConfigError("shape.penalty", "must be > 0");
    if (c.shape.max_iter < 1) throw ConfigError("shape.max_iter", "must be >= 1");

    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        check_keys(s, "sweep", {"s_list", "observable", "calibrate_kappa", "axis"});
        if (s.contains("s_list")) c.sweep.s_list = get_numbers(s["s_list"], "sweep.s_list");
        if (s.contains("observable")) c.sweep.observable = get_string(s["observable"], "sweep.observable", {"torsion", "min_value"});
        if (s.contains("calibrate_kappa")) c.sweep.calibrate_kappa = get_bool(s["calibrate_kappa"], "sweep.calibrate_kappa");
        if (s.contains("axis")) c.sweep.axis = get_int(s["axis"], "sweep.axis");
    }
    if (c.command == "sweep-s" || c.command == "bbm") {
        try {
            validate_s_list(c.sweep.s_list);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("sweep.s_list", e.what());
        }
    }
    if (c.sweep.axis < 0 || c.sweep.axis >= c.grid.dim) throw ConfigError("sweep.axis", "out of range");
    return c;
}

inline RunConfig parse_config(const std::string& text, const std::string& command = {}) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j, command);
}

/// Full configuration with every default filled in; parse_config inverts it.
inline json to_json(const RunConfig& c) {
    json params;
    if (const auto* iso = std::get_if<IsoParams>(&c.params)) {
        params = json{{"s", iso->s}, {"p", iso->p}, {"kappa", iso->kappa}};
    } else {
        const auto& a = std::get<AnisoParams>(c.params);
        params = json{{"s_vec", a.s_vec}, {"p_vec", a.p_vec}};
    }
    json j{{"command", c.command},
           {"grid", io::to_json(c.grid)},
           {"params", params},
           {"mask", detail::mask_to_json(c.mask)},
           {"solver",
            {{"tol_grad", c.solver.tol_grad},
             {"max_iter", c.solver.max_iter},
             {"step_rule", c.solver.step_rule},
             {"eta", c.solver.eta},
             {"beta", c.solver.beta},
             {"armijo_c", c.solver.armijo_c},
             {"direction", c.solver.direction}}},
           {"shape",
            {{"functional", c.shape.functional},
             {"c", c.shape.c},
             {"method", c.shape.method},
             {"penalty", c.shape.penalty},
             {"max_iter", c.shape.max_iter}}},
           {"sweep",
            {{"s_list", c.sweep.s_list},
             {"observable", c.sweep.observable},
             {"calibrate_kappa", c.sweep.calibrate_kappa},
             {"axis", c.sweep.axis}}}};
    if (c.mask_b) j["mask_b"] = detail::mask_to_json(*c.mask_b);
    if (c.initial_mask) j["initial_mask"] = detail::mask_to_json(*c.initial_mask);
    return j;
}

/// Builds the mask described by `src` on `grid`.
inline Mask resolve_mask(const MaskSource& src, const GridPtr& grid, const std::string& path) {
    const auto& spec = grid->spec();
    if (src.kind == MaskSource::Kind::cells) {
        if (src.cells.size() != grid->interior_nodes().size()) {
            throw ConfigError(path, "expected " + std::to_string(grid->interior_nodes().size()) + " cells");
        }
        return Mask::from_interior(grid, src.cells);
    }
    if (src.kind == MaskSource::Kind::file) {
        std::ifstream f(src.text);
        if (!f) throw ConfigError(path + ".file", "cannot open " + src.text);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ".file", std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("cells") || !j.contains("grid")) throw ConfigError(path + ".file", "expected {grid, cells}");
        if (j["grid"] != io::to_json(spec)) throw ConfigError(path + ".file", "mask grid differs from the configured grid");
        MaskSource inline_src;
        inline_src.kind = MaskSource::Kind::cells;
        inline_src.cells = detail::parse_mask(j["cells"], path + ".file.cells").cells;
        return resolve_mask(inline_src, grid, path + ".file");
    }
    const std::string& t = src.text;
    const double cx = 0.5 * (spec.box_min[0] + spec.box_max[0]);
    const double cy = grid->dim() == 2 ? 0.5 * (spec.box_min[1] + spec.box_max[1]) : 0.0;
    if (t == "all") return Mask::full(grid);
    if (t == "empty") return Mask(grid);
    if (t == "left-half") return mask_from_predicate(grid, [&](double x, double) { return x < cx; });
    if (t.rfind("disk(", 0) == 0 && t.back() == ')') {
        double r = 0.0;
        try {
            std::size_t used = 0;
            const auto inner = t.substr(5, t.size() - 6);
            r = std::stod(inner, &used);
            if (used != inner.size()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw ConfigError(path, "cannot read the radius in '" + t + "'");
        }
        if (!(r >= 0.0)) throw ConfigError(path, "radius must be >= 0");
        return mask_from_predicate(grid, [&](double x, double y) { return std::hypot(x - cx, y - cy) <= r; });
    }
    throw ConfigError(path, "unknown predicate '" + t + "' (use all, empty, left-half or disk(r))");
}

struct RunOutcome {
    int code = ok;
    std::string message;
};

namespace detail {

inline CostKind cost_kind(const std::string& s) {
    return s == "torsional_compliance" ? CostKind::torsional_compliance : CostKind::first_eigenvalue;
}

inline void write_json(const std::filesystem::path& p, const json& j) { io::write_text(p.string(), j.dump(2) + "\n"); }

inline void write_stream(const std::filesystem::path& p, const std::ostringstream& os) { io::write_text(p.string(), os.str()); }

inline json sweep_summary(const SweepTable& t) {
    json j = io::sweep_metadata(t);
    return j;
}

}  // namespace detail

/// Runs one command and writes its files into `out`. Never throws.
inline RunOutcome run(const RunConfig& cfg, const std::filesystem::path& out) {
    namespace fs = std::filesystem;
    RunOutcome outcome;
    try {
        fs::create_directories(out);
        const auto grid = build_grid(cfg.grid);
        const auto opts = cfg.solver.opts();
        json results;
        bool converged = true;

        if (cfg.command == "torsion") {
            const Mask mask = resolve_mask(cfg.mask, grid, "mask");
            const auto rep = solve_torsion(mask, cfg.params, opts);
            std::ostringstream csv;
            io::write_field_csv(csv, rep.field);
            detail::write_stream(out / "field.csv", csv);
            results = io::to_json(rep);
            results["degenerate"] = mask.empty();
            results["mask_cells"] = mask.count();
            results["compliance"] = io::number(-rep.field.sum() * grid->cell_volume());
            results["max_value"] = io::number(rep.field.max_abs());
            converged = rep.converged;
        } else if (cfg.command == "eigen") {
            const Mask mask = resolve_mask(cfg.mask, grid, "mask");
            if (mask.empty()) throw ConfigError("mask", "eigen needs a nonempty mask");
            const auto r = first_eigenpair(mask, cfg.params, opts);
            std::ostringstream csv;
            io::write_field_csv(csv, r.field);
            detail::write_stream(out / "field.csv", csv);
            results = io::to_json(r);
            results["mask_cells"] = mask.count();
            converged = r.converged;
        } else if (cfg.command == "optimize") {
            const CostFunctional fn{detail::cost_kind(cfg.shape.functional), cfg.params};
            ShapeResult r;
            if (cfg.shape.method == "enumerate") {
                r = optimize_enumerate(grid, fn, cfg.shape.c, opts);
            } else {
                RearrangeOpts ro;
                ro.penalty = cfg.shape.penalty;
                ro.max_iter = cfg.shape.max_iter;
                ro.solver = opts;
                const Mask init = resolve_mask(cfg.initial_mask.value_or(cfg.mask), grid,
                                               cfg.initial_mask ? "initial_mask" : "mask");
                r = optimize_rearrange(grid, fn, cfg.shape.c, init, ro);
            }
            detail::write_json(out / "mask.json", io::mask_json(r.mask));
            std::ostringstream csv;
            io::write_history_csv(csv, r.history);
            detail::write_stream(out / "history.csv", csv);
            results = io::to_json(r);
        } else if (cfg.command == "sweep-s") {
            SweepTable t;
            if (cfg.sweep.observable == "min_value") {
                const auto* iso = std::get_if<IsoParams>(&cfg.params);
                if (!iso) throw ConfigError("params", "the min_value observable needs isotropic parameters");
                MinProbeOpts mo;
                mo.calibrate = cfg.sweep.calibrate_kappa;
                mo.kappa = iso->kappa;
                mo.solver = opts;
                t = min_value_convergence_probe(grid, detail::cost_kind(cfg.shape.functional), iso->p, cfg.shape.c,
                                                cfg.sweep.s_list, mo);
            } else {
                const Mask mask = resolve_mask(cfg.mask, grid, "mask");
                TorsionSweepOpts so;
                so.calibrate = cfg.sweep.calibrate_kappa;
                so.solver = opts;
                t = sweep_torsion(mask, cfg.params, cfg.sweep.s_list, so);
                for (double c : t.column("converged")) converged = converged && c == 1.0;
            }
            std::ostringstream csv;
            io::write_sweep_csv(csv, t);
            detail::write_stream(out / "sweep.csv", csv);
            detail::write_json(out / "sweep.json", io::sweep_metadata(t));
            results = detail::sweep_summary(t);
        } else if (cfg.command == "bbm") {
            const Field u = reference_bump(grid);
            const auto t = bbm_ratio(u, norm_exponent(cfg.params), cfg.sweep.s_list, cfg.sweep.axis);
            std::ostringstream csv;
            io::write_sweep_csv(csv, t);
            detail::write_stream(out / "sweep.csv", csv);
            detail::write_json(out / "sweep.json", io::sweep_metadata(t));
            results = detail::sweep_summary(t);
        } else if (cfg.command == "aniso-check") {
            const auto* a = std::get_if<AnisoParams>(&cfg.params);
            if (!a) throw ConfigError("params", "aniso-check needs s_vec and p_vec");
            const auto rep = validate_aniso(*a, grid->dim());
            json conds = json::array();
            for (const auto& c : rep.conditions) {
                conds.push_back({{"name", c.name}, {"applicable", c.applicable}, {"passed", c.passed}, {"detail", c.detail}});
            }
            results = json{{"s_bar", io::number(rep.s_bar)},
                           {"sp_bar", io::number(rep.sp_bar)},
                           {"p_star", io::number(rep.p_star)},
                           {"admissible", rep.admissible()},
                           {"conditions", conds}};
            const Mask mask = resolve_mask(cfg.mask, grid, "mask");
            if (rep.admissible() && !mask.empty() && Operator(grid, *a).homogeneous()) {
                results["poincare_constant"] = io::number(poincare_estimate(mask, *a, opts));
            }
        } else if (cfg.command == "gamma-dist") {
            if (!cfg.mask_b) throw ConfigError("mask_b", "gamma-dist needs a second mask");
            const Mask a = resolve_mask(cfg.mask, grid, "mask");
            const Mask b = resolve_mask(*cfg.mask_b, grid, "mask_b");
            const Operator op(grid, cfg.params);
            const auto ua = solve_torsion(op, a, opts);
            const auto ub = solve_torsion(op, b, opts);
            std::ostringstream csv;
            io::write_field_csv(csv, ua.field - ub.field);
            detail::write_stream(out / "field.csv", csv);
            results = json{{"distance", io::number(lp_norm(ua.field - ub.field, norm_exponent(cfg.params)))},
                           {"converged_a", ua.converged},
                           {"converged_b", ub.converged}};
            converged = ua.converged && ub.converged;
        }

        json summary{{"command", cfg.command}, {"config", to_json(cfg)}, {"results", results}, {"converged", converged}};
        detail::write_json(out / "summary.json", summary);
        if (!converged) outcome = {nonconvergence, cfg.command + ": solver did not reach its tolerance"};
    } catch (const ConfigError& e) {
        outcome = {validation, e.what()};
    } catch (const GuardError& e) {
        outcome = {guard, e.what()};
    } catch (const ConvergenceError& e) {
        outcome = {nonconvergence, e.what()};
    } catch (const std::invalid_argument& e) {
        outcome = {validation, e.what()};
    } catch (const std::exception& e) {
        outcome = {validation, e.what()};
    }
    return outcome;
}

/// Reads the config file, runs it and reports failures on `err` as
/// `ERROR <code>: <message>`.
inline int run_file(const std::string& command, const std::string& config_path, const std::string& out_dir,
                    std::ostream& err = std::cerr) {
    std::ifstream f(config_path);
    if (!f) {
        err << "ERROR " << validation << ": cannot open config " << config_path << "\n";
        return validation;
    }
    std::stringstream buf;
    buf << f.rdbuf();
    RunOutcome outcome;
    try {
        const auto cfg = parse_config(buf.str(), command);
        outcome = run(cfg, out_dir);
    } catch (const ConfigError& e) {
        outcome = {validation, e.what()};
    }
    if (outcome.code != ok) err << "ERROR " << outcome.code << ": " << outcome.message << "\n";
    return outcome.code;
}

}  // namespace fracshape::cli
