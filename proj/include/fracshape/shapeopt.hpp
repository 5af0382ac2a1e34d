#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracshape/errors.hpp"
#include "fracshape/grid.hpp"
#include "fracshape/operator.hpp"
#include "fracshape/parallel.hpp"
#include "fracshape/params.hpp"
#include "fracshape/solve.hpp"
#include "fracshape/spectral.hpp"

namespace fracshape {

enum class CostKind { first_eigenvalue, torsional_compliance };

inline const char* to_string(CostKind k) {
    return k == CostKind::first_eigenvalue ? "first_eigenvalue" : "torsional_compliance";
}

/// lambda_1(A), or the compliance -h^d sum u_A. Both decrease under inclusion.
struct CostFunctional {
    CostKind kind = CostKind::first_eigenvalue;
    OperatorParams params = IsoParams{};
};

enum class ShapeMethod { enumerate, rearrange };

inline const char* to_string(ShapeMethod m) { return m == ShapeMethod::enumerate ? "enumerate" : "rearrange"; }

struct ShapeStep {
    int iter = 0;
    double cost = 0.0;
    double volume = 0.0;
};

struct ShapeResult {
    Mask mask;
    double cost = std::numeric_limits<double>::infinity();
    std::vector<ShapeStep> history;
    ShapeMethod method = ShapeMethod::enumerate;
    /// Every mask whose cost is within 1e-10 of the optimum (enumeration only), best first.
    std::vector<Mask> ties;
    /// True when the budget is below one cell.
    bool degenerate = false;
    /// Rearrangement: the last step reproduced its input.
    bool fixed_point = false;
};

inline constexpr std::size_t kMaxEnumerationCells = 20;
inline constexpr double kTieTolerance = 1e-10;

/// Cost evaluation with one operator shared across masks.
class CostEvaluator {
public:
    CostEvaluator(const GridPtr& grid, CostFunctional fn, SolverOpts opts)
        : op_(grid, fn.params), fn_(std::move(fn)), opts_(opts) {}
    CostEvaluator(const GridPtr& grid, const CostFunctional& fn)
        : CostEvaluator(grid, fn, SolverOpts::defaults_for(fn.params)) {}

    const Operator& op() const { return op_; }
    const CostFunctional& functional() const { return fn_; }
    const SolverOpts& opts() const { return opts_; }

    /// +inf on the empty mask. Throws ConvergenceError if the state solve stalls.
    double operator()(const Mask& mask) const {
        if (mask.empty()) return std::numeric_limits<double>::infinity();
        if (fn_.kind == CostKind::first_eigenvalue) {
            const auto r = first_eigenpair(op_, mask, opts_);
            if (!r.converged) throw ConvergenceError("cost_eval: eigen iteration did not converge");
            return r.lambda;
        }
        const auto r = solve_torsion(op_, mask, opts_);
        if (!r.converged) throw ConvergenceError("cost_eval: torsion solve did not converge");
        return -r.field.sum() * mask.grid()->cell_volume();
    }

private:
    Operator op_;
    CostFunctional fn_;
    SolverOpts opts_;
};

inline double cost_eval(const Mask& mask, const CostFunctional& fn) { return CostEvaluator(mask.grid(), fn)(mask); }

inline double cost_eval(const Mask& mask, const CostFunctional& fn, const SolverOpts& opts) {
    return CostEvaluator(mask.grid(), fn, opts)(mask);
}

/// floor(c / h^d), clamped to the interior cell count.
inline std::size_t cell_budget(const Grid& grid, double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("shapeopt: volume budget must be finite and >= 0");
    const double cells = std::floor(c / grid.cell_volume() + 1e-9);
    return std::min(static_cast<std::size_t>(cells), grid.interior_nodes().size());
}

namespace detail {

/// All masks with exactly k interior cells, lexicographic in the chosen positions.
inline std::vector<Mask> masks_with_cells(const GridPtr& grid, std::size_t k) {
    const auto& nodes = grid->interior_nodes();
    const std::size_t n = nodes.size();
    std::vector<Mask> out;
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    while (true) {
        std::vector<char> c(grid->size(), 0);
        for (auto i : pick) c[nodes[i]] = 1;
        out.emplace_back(grid, std::move(c));
        std::size_t i = k;
        bool advanced = false;
        while (i > 0) {
            --i;
            if (pick[i] < n - k + i) {
                ++pick[i];
                for (std::size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
                advanced = true;
                break;
            }
        }
        if (!advanced) break;
    }
    return out;
}

inline void require_enumerable(const Grid& grid) {
    const auto cells = grid.interior_nodes().size();
    if (cells > kMaxEnumerationCells) {
        throw GuardError("optimize_enumerate: " + std::to_string(cells) + " interior cells exceed the limit of 20");
    }
}

inline ShapeResult pick_best(const std::vector<Mask>& candidates, const std::vector<double>& costs) {
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (costs[a] != costs[b]) return costs[a] < costs[b];
        return candidates[a] < candidates[b];
    });
    ShapeResult r;
    r.method = ShapeMethod::enumerate;
    r.mask = candidates[order.front()];
    r.cost = costs[order.front()];
    const double band = kTieTolerance * std::max(1.0, std::abs(r.cost));
    for (auto i : order) {
        if (costs[i] - r.cost <= band) r.ties.push_back(candidates[i]);
    }
    r.history.push_back({0, r.cost, r.mask.volume()});
    return r;
}

inline std::vector<double> evaluate_all(const CostEvaluator& eval, const std::vector<Mask>& masks) {
    std::vector<double> costs(masks.size(), 0.0);
    parallel_for(masks.size(), [&](std::size_t i) { costs[i] = eval(masks[i]); }, 1 << 16);
    return costs;
}

}  // namespace detail

/**
 * Exact minimizer over masks of volume <= c. The cost decreases under
 * inclusion, so only masks with exactly floor(c / h^d) cells are scanned.
 * Ordering is (cost, lexicographic mask); all masks within 1e-10 of the
 * optimum are returned in `ties`.
 */
inline ShapeResult optimize_enumerate(const GridPtr& grid, const CostFunctional& fn, double c,
                                      const std::optional<SolverOpts>& opts = std::nullopt) {
    detail::require_enumerable(*grid);
    const std::size_t k = cell_budget(*grid, c);
    if (k == 0) {
        ShapeResult r;
        r.mask = Mask(grid);
        r.degenerate = true;
        r.ties.push_back(r.mask);
        r.history.push_back({0, r.cost, 0.0});
        return r;
    }
    const CostEvaluator eval(grid, fn, opts.value_or(SolverOpts::defaults_for(fn.params)));
    const auto masks = detail::masks_with_cells(grid, k);
    return detail::pick_best(masks, detail::evaluate_all(eval, masks));
}

/// Same, scanning every mask with at most floor(c / h^d) cells.
inline ShapeResult optimize_enumerate_unrestricted(const GridPtr& grid, const CostFunctional& fn, double c,
                                                   const std::optional<SolverOpts>& opts = std::nullopt) {
    detail::require_enumerable(*grid);
    const std::size_t k = cell_budget(*grid, c);
    if (k == 0) return optimize_enumerate(grid, fn, c, opts);
    const CostEvaluator eval(grid, fn, opts.value_or(SolverOpts::defaults_for(fn.params)));
    std::vector<Mask> masks;
    for (std::size_t j = 1; j <= k; ++j) {
        auto part = detail::masks_with_cells(grid, j);
        masks.insert(masks.end(), part.begin(), part.end());
    }
    return detail::pick_best(masks, detail::evaluate_all(eval, masks));
}

struct RearrangeOpts {
    int max_iter = 100;
    /// Off-mask penalty of the relaxed state, in units of the full-box
    /// Rayleigh quotient of the constant field.
    double penalty = 0.2;
    std::optional<SolverOpts> solver;
};

namespace detail {

/**
 * State over the whole interior with a zeroth-order penalty off the mask.
 * Inside the mask it approximates the eigenfunction or torsion function of
 * the mask; outside it decays, which ranks cells not yet in the mask.
 */
inline Field relaxed_state(const CostEvaluator& eval, const Mask& mask, double penalty) {
    const auto& grid = mask.grid();
    const auto& op = eval.op();
    const Field one = Field::constant(grid, 1.0);
    const double scale = op.energy(one) / std::pow(lp_norm(one, op.exponent()), op.exponent());
    std::vector<double> v(grid->size(), 0.0);
    for (auto node : grid->interior_nodes()) {
        if (!mask.contains(node)) v[node] = penalty * scale;
    }
    const auto full = Mask::full(grid);
    if (eval.functional().kind == CostKind::first_eigenvalue) {
        const auto r = first_eigenpair(op, full, eval.opts(), v);
        if (!r.converged) throw ConvergenceError("optimize_rearrange: relaxed eigen state did not converge");
        return r.field;
    }
    EnergyMinimizer m(op, one, full);
    m.set_potential(std::move(v));
    const auto r = m.run(eval.opts());
    if (!r.converged) throw ConvergenceError("optimize_rearrange: relaxed torsion state did not converge");
    return r.field;
}

/// The k cells with the largest state value; ties go to the lowest node index.
inline Mask top_cells(const Field& state, std::size_t k) {
    const auto& grid = state.grid();
    auto nodes = grid->interior_nodes();
    std::stable_sort(nodes.begin(), nodes.end(), [&](std::size_t a, std::size_t b) { return state[a] > state[b]; });
    std::vector<char> c(grid->size(), 0);
    for (std::size_t i = 0; i < k && i < nodes.size(); ++i) c[nodes[i]] = 1;
    return Mask(grid, std::move(c));
}

}  // namespace detail

/**
 * Bathtub iteration: A_{k+1} = the floor(c / h^d) cells where the relaxed
 * state of A_k is largest. An initial mask of a different size is brought
 * to the budget by the same step. Stops at a fixed point, after two
 * consecutive cost increases, on a revisited mask, or at max_iter; returns
 * the best mask seen.
 */
inline ShapeResult optimize_rearrange(const GridPtr& grid, const CostFunctional& fn, double c, const Mask& initial,
                                      const RearrangeOpts& ropts = {}) {
    detail::require_same_grid(grid, initial.grid(), "optimize_rearrange");
    const std::size_t k = cell_budget(*grid, c);
    if (k == 0) throw std::invalid_argument("optimize_rearrange: budget is below one cell");
    if (ropts.max_iter < 1) throw std::invalid_argument("optimize_rearrange: max_iter must be >= 1");
    if (!(ropts.penalty > 0.0)) throw std::invalid_argument("optimize_rearrange: penalty must be > 0");
    const CostEvaluator eval(grid, fn, ropts.solver.value_or(SolverOpts::defaults_for(fn.params)));

    ShapeResult r;
    r.method = ShapeMethod::rearrange;
    Mask current = initial;
    if (current.count() != k) current = detail::top_cells(detail::relaxed_state(eval, current, ropts.penalty), k);
    double cost = eval(current);
    r.mask = current;
    r.cost = cost;
    r.history.push_back({0, cost, current.volume()});
    std::set<Mask> seen{current};
    int increases = 0;
    for (int it = 1; it <= ropts.max_iter; ++it) {
        const Mask next = detail::top_cells(detail::relaxed_state(eval, current, ropts.penalty), k);
        if (next == current) {
            r.fixed_point = true;
            break;
        }
        const double next_cost = eval(next);
        r.history.push_back({it, next_cost, next.volume()});
        if (next_cost < r.cost || (next_cost == r.cost && next < r.mask)) {
            r.mask = next;
            r.cost = next_cost;
        }
        increases = next_cost > cost ? increases + 1 : 0;
        if (increases >= 2 || !seen.insert(next).second) break;
        current = next;
        cost = next_cost;
    }
    return r;
}

/// || u_A - u_B ||_p for the torsion functions of A and B.
inline double gamma_distance(const Mask& a, const Mask& b, const OperatorParams& params,
                             const std::optional<SolverOpts>& opts = std::nullopt) {
    detail::require_same_grid(a.grid(), b.grid(), "gamma_distance");
    const Operator op(a.grid(), params);
    const auto o = opts.value_or(SolverOpts::defaults_for(params));
    const auto ua = solve_torsion(op, a, o);
    const auto ub = solve_torsion(op, b, o);
    if (!ua.converged || !ub.converged) throw ConvergenceError("gamma_distance: torsion solve did not converge");
    return lp_norm(ua.field - ub.field, norm_exponent(params));
}

struct SemicontinuityReport {
    /// F(A_k) - F(limit) per element of the sequence.
    std::vector<double> gaps;
    /// gamma distance of A_k to the limit.
    std::vector<double> distances;
    double min_gap = std::numeric_limits<double>::infinity();
    double final_gap = 0.0;
    bool distances_decreasing = true;
    /// The sequence reaches the limit (final distance within tolerance)
    /// while its cost stays below F(limit) by more than 1e-6.
    bool flagged = false;
};

inline constexpr double kSemicontinuitySlack = 1e-6;

/**
 * Empirical lower semicontinuity audit. A violation needs both a gap below
 * -1e-6 at the end of the sequence and a vanishing gamma distance; a gap
 * alone along a sequence that stays away from the limit is not one.
 */
inline SemicontinuityReport semicontinuity_probe(const CostFunctional& fn, const std::vector<Mask>& sequence,
                                                 const Mask& limit, const std::optional<SolverOpts>& opts = std::nullopt,
                                                 double distance_tol = 1e-6) {
    if (sequence.empty()) throw std::invalid_argument("semicontinuity_probe: empty sequence");
    const auto& grid = limit.grid();
    const auto o = opts.value_or(SolverOpts::defaults_for(fn.params));
    const CostEvaluator eval(grid, fn, o);
    const double f_limit = eval(limit);
    SemicontinuityReport rep;
    for (const auto& a : sequence) {
        detail::require_same_grid(grid, a.grid(), "semicontinuity_probe");
        const double gap = eval(a) - f_limit;
        rep.gaps.push_back(std::isnan(gap) ? 0.0 : gap);
        rep.min_gap = std::min(rep.min_gap, rep.gaps.back());
        rep.distances.push_back(gamma_distance(a, limit, fn.params, o));
    }
    for (std::size_t i = 1; i < rep.distances.size(); ++i) {
        if (rep.distances[i] > rep.distances[i - 1] + 2.0 * o.tol_grad) rep.distances_decreasing = false;
    }
    rep.final_gap = rep.gaps.back();
    rep.flagged = rep.final_gap < -kSemicontinuitySlack && rep.distances.back() <= distance_tol;
    return rep;
}

}  // namespace fracshape
