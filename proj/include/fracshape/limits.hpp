#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracshape/errors.hpp"
#include "fracshape/format.hpp"
#include "fracshape/grid.hpp"
#include "fracshape/operator.hpp"
#include "fracshape/params.hpp"
#include "fracshape/shapeopt.hpp"
#include "fracshape/solve.hpp"
#include "fracshape/spectral.hpp"

namespace fracshape {

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    /// Ordered key/value notes (parameters, grid, diagnostics).
    std::vector<std::pair<std::string, std::string>> metadata;

    void note(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
    void note(std::string key, double value) { note(std::move(key), format_double(value)); }
    void note(std::string key, bool value) { note(std::move(key), std::string(value ? "true" : "false")); }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw std::out_of_range("sweep table: no column " + name);
    }
    std::vector<double> column(const std::string& name) const {
        const auto c = column_index(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    std::optional<std::string> meta(const std::string& key) const {
        for (const auto& [k, v] : metadata) {
            if (k == key) return v;
        }
        return std::nullopt;
    }
};

/// s values must be strictly increasing inside (0, 1).
inline void validate_s_list(const std::vector<double>& s_list) {
    if (s_list.empty()) throw std::invalid_argument("s_list: must not be empty");
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        if (!(s_list[i] > 0.0 && s_list[i] < 1.0)) {
            throw std::invalid_argument("s_list: entries must lie in (0, 1), got " + format_double(s_list[i]));
        }
        if (i > 0 && !(s_list[i] > s_list[i - 1])) throw std::invalid_argument("s_list: must be strictly increasing");
    }
}

/// Product of sin(pi (x - a) / L) over the axes, on the interior.
inline Field reference_bump(const GridPtr& grid) {
    const auto& spec = grid->spec();
    return Field::from_function(grid, [&](double x, double y) {
        double v = std::sin(std::numbers::pi * (x - spec.box_min[0]) / (spec.box_max[0] - spec.box_min[0]));
        if (grid->dim() == 2) v *= std::sin(std::numbers::pi * (y - spec.box_min[1]) / (spec.box_max[1] - spec.box_min[1]));
        return v;
    });
}

inline constexpr double kCalibrationS = 0.999;

/**
 * kappa such that the fractional energy of the reference bump at s = 0.999
 * equals its local energy, both on `grid`.
 */
inline double calibrate_kappa(const GridPtr& grid, double p, double s_ref = kCalibrationS) {
    const Field bump = reference_bump(grid);
    const double local = energy_local(bump, p);
    const double frac = energy_J(bump, IsoParams{s_ref, p, 1.0});
    if (!(frac > 0.0)) throw std::runtime_error("calibrate_kappa: degenerate reference energy");
    return local / frac;
}

namespace detail {

inline OperatorParams at_order(const OperatorParams& base, double s, double kappa) {
    if (const auto* iso = std::get_if<IsoParams>(&base)) return IsoParams{s, iso->p, kappa};
    auto a = std::get<AnisoParams>(base);
    for (auto& si : a.s_vec) si = s;
    return a;
}

inline void note_grid(SweepTable& t, const Grid& g) {
    t.note("dim", static_cast<double>(g.dim()));
    t.note("nodes_per_axis", static_cast<double>(g.n()));
    t.note("padding_cells", static_cast<double>(g.padding()));
    t.note("h", g.h());
}

}  // namespace detail

struct TorsionSweepOpts {
    /// Replace the isotropic kappa with calibrate_kappa on the mask's grid.
    bool calibrate = true;
    std::optional<SolverOpts> solver;
};

/**
 * ||u^s - u^1||_p over s_list for the torsion function of `mask`. With
 * anisotropic parameters every s_i takes the row's value. Rows that fail to
 * converge are kept with converged = 0.
 */
inline SweepTable sweep_torsion(const Mask& mask, const OperatorParams& base, const std::vector<double>& s_list,
                                const TorsionSweepOpts& sopts = {}) {
    validate_s_list(s_list);
    const auto& grid = mask.grid();
    const double p = norm_exponent(base);
    const auto opts = sopts.solver.value_or(SolverOpts::defaults_for(base));
    const bool iso = std::holds_alternative<IsoParams>(base);
    const double kappa = iso ? (sopts.calibrate ? calibrate_kappa(grid, p) : std::get<IsoParams>(base).kappa) : 1.0;

    SweepTable t;
    t.columns = {"s", "distance", "energy", "iterations", "converged"};
    t.note("kind", std::string(iso ? "isotropic" : "anisotropic"));
    t.note("p", p);
    if (iso) {
        t.note("kappa", kappa);
        t.note("kappa_calibrated", sopts.calibrate);
    }
    t.note("mask_cells", static_cast<double>(mask.count()));
    detail::note_grid(t, *grid);

    const Operator local_op(grid, detail::at_order(base, 1.0, kappa));
    const auto u1 = solve_torsion(local_op, mask, opts);
    t.note("local_converged", u1.converged);
    t.note("local_iterations", static_cast<double>(u1.iterations));
    for (double s : s_list) {
        const Operator op(grid, detail::at_order(base, s, kappa));
        const auto us = solve_torsion(op, mask, opts);
        t.rows.push_back({s, lp_norm(us.field - u1.field, p), op.energy(us.field), static_cast<double>(us.iterations),
                          us.converged ? 1.0 : 0.0});
    }
    const auto d = t.column("distance");
    t.note("trend_last_le_first", d.back() <= d.front());
    return t;
}

/**
 * rho(s) = directional fractional energy along `axis` (with the (1 - s) s
 * factor) over (2/p) times the local directional energy. A zero local
 * energy marks the row degenerate with ratio 0.
 */
inline SweepTable bbm_ratio(const Field& u, double p, const std::vector<double>& s_list, int axis = 0) {
    validate_s_list(s_list);
    const auto& grid = u.grid();
    if (axis < 0 || axis >= grid->dim()) throw std::invalid_argument("bbm_ratio: axis out of range");
    auto params_at = [&](double s) {
        return AnisoParams{std::vector<double>(static_cast<std::size_t>(grid->dim()), s),
                           std::vector<double>(static_cast<std::size_t>(grid->dim()), p)};
    };
    const double local = AnisoOperator(grid, params_at(1.0)).axis_energy(u, axis);
    SweepTable t;
    t.columns = {"s", "energy", "local_energy", "ratio", "degenerate"};
    t.note("p", p);
    t.note("axis", static_cast<double>(axis));
    detail::note_grid(t, *grid);
    for (double s : s_list) {
        const double e = AnisoOperator(grid, params_at(s)).axis_energy(u, axis);
        const bool degenerate = !(local > 0.0);
        t.rows.push_back({s, e, local, degenerate ? 0.0 : e / local, degenerate ? 1.0 : 0.0});
    }
    if (t.rows.size() >= 2) {
        const double prev = t.rows[t.rows.size() - 2][3];
        const double last = t.rows.back()[3];
        t.note("last_step_change", prev > 0.0 ? std::abs(last - prev) / prev : std::numeric_limits<double>::quiet_NaN());
    }
    return t;
}

/// Best constant in ||u||_p^p <= C J(u) on the mask, C = 1 / lambda_1.
inline double poincare_estimate(const Mask& mask, const OperatorParams& params,
                                const std::optional<SolverOpts>& opts = std::nullopt) {
    const auto r = first_eigenpair(mask, params, opts.value_or(SolverOpts::defaults_for(params)));
    if (!r.converged) throw ConvergenceError("poincare_estimate: eigen iteration did not converge");
    return 1.0 / r.lambda;
}

inline constexpr std::size_t kMaxProbeCells = 12;

struct MinProbeOpts {
    bool calibrate = true;
    double kappa = 1.0;
    std::optional<SolverOpts> solver;
};

/**
 * Exact minimum of the cost over masks of volume <= c for each s in s_list
 * and for s = 1 (last row). Optimal masks go into the metadata.
 */
inline SweepTable min_value_convergence_probe(const GridPtr& grid, CostKind kind, double p, double c,
                                              const std::vector<double>& s_list, const MinProbeOpts& mopts = {}) {
    validate_s_list(s_list);
    const auto cells = grid->interior_nodes().size();
    if (cells > kMaxProbeCells) {
        throw GuardError("min_value_convergence_probe: " + std::to_string(cells) + " interior cells exceed the limit of 12");
    }
    const double kappa = mopts.calibrate ? calibrate_kappa(grid, p) : mopts.kappa;
    SweepTable t;
    t.columns = {"s", "min_value", "cells"};
    t.note("functional", std::string(to_string(kind)));
    t.note("p", p);
    t.note("c", c);
    t.note("kappa", kappa);
    t.note("kappa_calibrated", mopts.calibrate);
    detail::note_grid(t, *grid);

    auto mask_string = [](const Mask& m) {
        std::string s;
        for (char f : m.interior_flags()) s.push_back(f ? '1' : '0');
        return s;
    };
    auto row = [&](double s) {
        const CostFunctional fn{kind, IsoParams{s, p, kappa}};
        const auto r = optimize_enumerate(grid, fn, c, mopts.solver);
        t.rows.push_back({s, r.cost, static_cast<double>(r.mask.count())});
        t.note("mask_s=" + format_double(s), mask_string(r.mask));
    };
    for (double s : s_list) row(s);
    row(1.0);

    if (s_list.size() < 2) {
        t.note("trend", std::string("skipped: fewer than two s values"));
    } else {
        const double target = t.rows.back()[1];
        const double first = std::abs(t.rows.front()[1] - target);
        const double last = std::abs(t.rows[t.rows.size() - 2][1] - target);
        t.note("first_gap", first);
        t.note("last_gap", last);
        t.note("trend", std::string(last <= first ? "pass" : "fail"));
    }
    return t;
}

}  // namespace fracshape
