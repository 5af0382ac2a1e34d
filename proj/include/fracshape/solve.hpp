#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fracshape/grid.hpp"
#include "fracshape/operator.hpp"
#include "fracshape/params.hpp"

namespace fracshape {

enum class Direction { steepest, conjugate };

/// Constant step eta along -gradient; no energy check.
struct FixedStep {
    double eta = 1e-3;
};
/// Armijo backtracking: shrink by beta until E decreases by c * <g, du>.
struct Backtracking {
    double beta = 0.5;
    double c = 1e-4;
};
/// Safeguarded secant search for a zero of the directional derivative
/// (exact for p = 2).
struct LineSearch {};

using StepRule = std::variant<LineSearch, Backtracking, FixedStep>;

struct SolverOpts {
    double tol_grad = 1e-9;
    int max_iter = 50000;
    StepRule step_rule = LineSearch{};
    Direction direction = Direction::conjugate;

    /// 1e-9 for p = 2, 1e-7 otherwise.
    static SolverOpts defaults_for(double p) {
        SolverOpts o;
        o.tol_grad = p == 2.0 ? 1e-9 : 1e-7;
        return o;
    }
    static SolverOpts defaults_for(const OperatorParams& params) {
        if (const auto* a = std::get_if<AnisoParams>(&params)) {
            for (double p : a->p_vec) {
                if (p != 2.0) return defaults_for(3.0);
            }
            return defaults_for(2.0);
        }
        return defaults_for(std::get<IsoParams>(params).p);
    }

    void validate() const {
        if (!(tol_grad > 0.0)) throw std::invalid_argument("solver: tol_grad must be > 0");
        if (max_iter < 1) throw std::invalid_argument("solver: max_iter must be >= 1");
    }
};

struct SolveReport {
    Field field;
    int iterations = 0;
    /// Max-norm of the (projected) gradient over the free nodes.
    double final_residual = 0.0;
    /// E(u) = potential(u) - <f, u> at the returned field.
    double energy = 0.0;
    bool converged = false;
    /// Objective after each accepted iteration (index 0 is the initial value).
    std::vector<double> energy_history;
};

/**
 * Convex minimization on the nodes of `free`:
 *
 *   E(u) = op.potential(u) + (1/q) h^d sum V_i |u_i|^q - <f, u>,   u = 0 off `free`,
 *
 * optionally subject to u <= upper nodewise. q is the operator's norm
 * exponent and V >= 0 a zeroth-order potential. The gradient is
 * apply(u) + V phi_q(u) - f restricted to `free`.
 */
class EnergyMinimizer {
public:
    EnergyMinimizer(const Operator& op, Field f, Mask free) : op_(op), f_(std::move(f)), free_(std::move(free)) {
        detail::require_same_grid(op_.grid(), f_.grid(), "solve");
        detail::require_same_grid(op_.grid(), free_.grid(), "solve");
        detail::require_finite(f_, "solve");
        nodes_ = free_.nodes();
    }

    void set_upper_bound(std::vector<double> upper) { upper_ = std::move(upper); }
    void set_potential(std::vector<double> v) { potential_ = std::move(v); }

    double objective(const Field& u) const {
        double e = op_.potential(u) - inner(f_, u);
        if (!potential_.empty()) {
            const double q = op_.exponent();
            std::vector<double> t(u.size());
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = potential_[i] * detail::abs_pow(u[i], q);
            e += u.grid()->cell_volume() * pairwise_sum(t) / q;
        }
        return e;
    }

    /// Gradient restricted to the free nodes (exactly zero elsewhere).
    std::vector<double> gradient(const Field& u) const {
        const Field a = op_.apply(u);
        std::vector<double> g(u.size(), 0.0);
        const double q = op_.exponent();
        for (auto i : nodes_) {
            g[i] = a[i] - f_[i];
            if (!potential_.empty()) g[i] += potential_[i] * detail::signed_pow(u[i], q);
        }
        return g;
    }

    SolveReport run(const SolverOpts& opts, const std::optional<Field>& initial = std::nullopt) const {
        opts.validate();
        const auto& grid = op_.grid();
        SolveReport rep{Field(grid), 0, 0.0, 0.0, true, {}};
        if (nodes_.empty()) {
            rep.energy = 0.0;
            rep.energy_history.push_back(0.0);
            return rep;
        }
        std::vector<double> u(grid->size(), 0.0);
        if (initial) {
            detail::require_same_grid(grid, initial->grid(), "solve");
            for (auto i : nodes_) u[i] = (*initial)[i];
        }
        clamp(u);
        const bool cg = opts.direction == Direction::conjugate && upper_.empty() &&
                        std::holds_alternative<LineSearch>(opts.step_rule);
        return cg ? run_cg(opts, std::move(u)) : run_projected(opts, std::move(u));
    }

private:
    double dot(const std::vector<double>& a, const std::vector<double>& b) const {
        std::vector<double> t(nodes_.size());
        for (std::size_t k = 0; k < nodes_.size(); ++k) t[k] = a[nodes_[k]] * b[nodes_[k]];
        return op_.grid()->cell_volume() * pairwise_sum(t);
    }

    double max_abs(const std::vector<double>& g) const {
        double m = 0.0;
        for (auto i : nodes_) m = std::max(m, std::abs(g[i]));
        return m;
    }

    void clamp(std::vector<double>& u) const {
        if (upper_.empty()) return;
        for (auto i : nodes_) u[i] = std::min(u[i], upper_[i]);
    }

    Field field(const std::vector<double>& u) const { return Field(op_.grid(), u); }

    /// Objective may rise by rounding only.
    static bool descended(double e_new, double e_old) {
        return e_new <= e_old + 1e-12 * std::max(1.0, std::abs(e_old));
    }

    SolveReport run_cg(const SolverOpts& opts, std::vector<double> u) const {
        SolveReport rep{field(u), 0, 0.0, 0.0, false, {}};
        auto g = gradient(rep.field);
        double e = objective(rep.field);
        rep.energy_history.push_back(e);
        std::vector<double> d(u.size(), 0.0);
        for (auto i : nodes_) d[i] = -g[i];
        double t_guess = 0.0;
        const std::size_t restart = std::max<std::size_t>(nodes_.size(), 10);
        int since_restart = 0;

        for (int it = 0;; ++it) {
            rep.final_residual = max_abs(g);
            rep.iterations = it;
            if (rep.final_residual <= opts.tol_grad) {
                rep.converged = true;
                break;
            }
            if (it >= opts.max_iter) break;

            double slope0 = dot(g, d);
            if (!(slope0 < 0.0)) {
                for (auto i : nodes_) d[i] = -g[i];
                slope0 = dot(g, d);
                since_restart = 0;
            }
            if (t_guess <= 0.0) {
                // Unit-size first trial relative to the gradient scale.
                const double dn = max_abs(d);
                t_guess = dn > 0.0 ? 1e-3 / dn : 1.0;
            }

            auto trial = u;
            std::vector<double> g_new;
            double t = line_search(u, d, slope0, t_guess, trial, g_new);
            Field candidate = field(trial);
            double e_new = objective(candidate);
            if (!(t > 0.0) || !descended(e_new, e)) {
                // Fall back to steepest descent with backtracking.
                for (auto i : nodes_) d[i] = -g[i];
                slope0 = dot(g, d);
                t = t_guess;
                bool ok = false;
                for (int k = 0; k < 60; ++k) {
                    for (auto i : nodes_) trial[i] = u[i] + t * d[i];
                    candidate = field(trial);
                    e_new = objective(candidate);
                    if (e_new <= e + 1e-4 * t * slope0) {
                        ok = true;
                        break;
                    }
                    t *= 0.5;
                }
                if (!ok) break;
                g_new = gradient(candidate);
                since_restart = 0;
            }
            t_guess = t;
            double beta = 0.0;
            ++since_restart;
            if (static_cast<std::size_t>(since_restart) < restart) {
                std::vector<double> y(u.size(), 0.0);
                for (auto i : nodes_) y[i] = g_new[i] - g[i];
                beta = std::max(0.0, dot(g_new, y) / dot(g, g));
            } else {
                since_restart = 0;
            }
            for (auto i : nodes_) d[i] = -g_new[i] + beta * d[i];
            u = std::move(trial);
            g = std::move(g_new);
            e = e_new;
            rep.field = std::move(candidate);
            rep.energy_history.push_back(e);
        }
        rep.energy = e;
        return rep;
    }

    /// Finds t > 0 with phi'(t) = <grad(u + t d), d> close to zero. Returns
    /// the step, the point and its gradient; 0 on failure.
    double line_search(const std::vector<double>& u, const std::vector<double>& d, double slope0, double t0,
                       std::vector<double>& point, std::vector<double>& grad_out) const {
        double lo = 0.0, s_lo = slope0;
        double hi = -1.0, s_hi = 0.0;
        double t = t0;
        double best_t = 0.0;
        for (int k = 0; k < 60; ++k) {
            for (auto i : nodes_) point[i] = u[i] + t * d[i];
            grad_out = gradient(field(point));
            const double s = dot(grad_out, d);
            best_t = t;
            if (std::abs(s) <= 1e-3 * std::abs(slope0)) return t;
            if (s < 0.0) {
                lo = t;
                s_lo = s;
            } else {
                hi = t;
                s_hi = s;
            }
            double next;
            if (hi < 0.0) {
                // Not bracketed yet: secant through (0, slope0) and (t, s), capped growth.
                const double sec = s_lo != slope0 ? lo - s_lo * (lo - 0.0) / (s_lo - slope0) : 4.0 * t;
                next = std::isfinite(sec) && sec > t ? std::min(sec * 1.05, 16.0 * t) : 4.0 * t;
            } else {
                next = lo - s_lo * (hi - lo) / (s_hi - s_lo);
                const double width = hi - lo;
                if (!(next > lo + 1e-3 * width && next < hi - 1e-3 * width)) next = 0.5 * (lo + hi);
                if (width <= 1e-15 * hi) return t;
            }
            t = next;
        }
        return best_t;
    }

    SolveReport run_projected(const SolverOpts& opts, std::vector<double> u) const {
        SolveReport rep{field(u), 0, 0.0, 0.0, false, {}};
        auto g = gradient(rep.field);
        double e = objective(rep.field);
        rep.energy_history.push_back(e);
        const auto* fixed = std::get_if<FixedStep>(&opts.step_rule);
        Backtracking bt;
        if (const auto* b = std::get_if<Backtracking>(&opts.step_rule)) bt = *b;
        double t = fixed ? fixed->eta : 0.0;
        std::vector<double> prev_u, prev_g;

        for (int it = 0;; ++it) {
            rep.final_residual = projected_residual(u, g);
            rep.iterations = it;
            if (rep.final_residual <= opts.tol_grad) {
                rep.converged = true;
                break;
            }
            if (it >= opts.max_iter) break;

            std::vector<double> trial = u;
            Field candidate = rep.field;
            double e_new = e;
            if (fixed) {
                for (auto i : nodes_) trial[i] = u[i] - t * g[i];
                clamp(trial);
                candidate = field(trial);
                e_new = objective(candidate);
            } else {
                // Barzilai-Borwein initial step, then Armijo backtracking along the projection arc.
                if (!prev_u.empty()) {
                    std::vector<double> sv(u.size(), 0.0), yv(u.size(), 0.0);
                    for (auto i : nodes_) {
                        sv[i] = u[i] - prev_u[i];
                        yv[i] = g[i] - prev_g[i];
                    }
                    const double sy = dot(sv, yv);
                    if (sy > 0.0) t = dot(sv, sv) / sy;
                }
                if (!(t > 0.0)) {
                    const double gn = max_abs(g);
                    t = gn > 0.0 ? 1e-3 / gn : 1.0;
                }
                bool ok = false;
                for (int k = 0; k < 80; ++k) {
                    for (auto i : nodes_) trial[i] = u[i] - t * g[i];
                    clamp(trial);
                    std::vector<double> du(u.size(), 0.0);
                    for (auto i : nodes_) du[i] = trial[i] - u[i];
                    candidate = field(trial);
                    e_new = objective(candidate);
                    // Slack of a few ulps of e: near the minimum the Armijo
                    // decrease falls below the rounding of the objective.
                    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(e));
                    if (e_new <= e + bt.c * dot(g, du) + slack) {
                        ok = true;
                        break;
                    }
                    t *= bt.beta;
                }
                if (!ok) break;
            }
            prev_u = u;
            prev_g = g;
            u = std::move(trial);
            e = e_new;
            rep.field = std::move(candidate);
            g = gradient(rep.field);
            rep.energy_history.push_back(e);
        }
        rep.energy = e;
        return rep;
    }

    /// Gradient components that are not blocked by an active upper bound.
    double projected_residual(const std::vector<double>& u, const std::vector<double>& g) const {
        double m = 0.0;
        for (auto i : nodes_) {
            const bool blocked = !upper_.empty() && u[i] >= upper_[i] && g[i] < 0.0;
            if (!blocked) m = std::max(m, std::abs(g[i]));
        }
        return m;
    }

    const Operator& op_;
    Field f_;
    Mask free_;
    std::vector<std::size_t> nodes_;
    std::vector<double> upper_;
    std::vector<double> potential_;
};

/// Minimizes J/p - <f, u> over fields supported on `mask`.
inline SolveReport solve_dirichlet(const Operator& op, const Mask& mask, const Field& f, const SolverOpts& opts,
                                   const std::optional<Field>& initial = std::nullopt) {
    return EnergyMinimizer(op, f, mask).run(opts, initial);
}

inline SolveReport solve_dirichlet(const Mask& mask, const Field& f, const OperatorParams& params,
                                   const SolverOpts& opts, const std::optional<Field>& initial = std::nullopt) {
    const Operator op(mask.grid(), params);
    return solve_dirichlet(op, mask, f, opts, initial);
}

/// Torsion function: the solution with f = 1 on the mask.
inline SolveReport solve_torsion(const Operator& op, const Mask& mask, const SolverOpts& opts) {
    auto rep = solve_dirichlet(op, mask, Field::constant(mask.grid(), 1.0), opts);
    if (rep.converged && rep.field.min() < -10.0 * opts.tol_grad) {
        throw std::logic_error("solve_torsion: discrete maximum principle violated");
    }
    return rep;
}

inline SolveReport solve_torsion(const Mask& mask, const OperatorParams& params, const SolverOpts& opts) {
    const Operator op(mask.grid(), params);
    return solve_torsion(op, mask, opts);
}

/// apply(w) - 1 on interior nodes (zero on padding).
inline Field ks_residual(const Field& w, const OperatorParams& params) {
    const Operator op(w.grid(), params);
    return op.apply(w) - Field::constant(w.grid(), 1.0);
}

/// w >= -tol everywhere and apply(w) <= 1 + tol on every interior node.
inline bool ks_member(const Field& w, const OperatorParams& params, double tol) {
    if (w.min() < -tol) return false;
    const Field r = ks_residual(w, params);
    for (auto node : w.grid()->interior_nodes()) {
        if (r[node] > tol) return false;
    }
    return true;
}

/**
 * Minimizer of J/p - int z over z <= max(u, v) on the whole interior, by
 * projected descent from zero. For u, v in K_s the minimizer is max(u, v).
 */
inline Field max_combine(const Field& u, const Field& v, const OperatorParams& params, const SolverOpts& opts) {
    detail::require_same_grid(u.grid(), v.grid(), "max_combine");
    const double tol = 10.0 * opts.tol_grad;
    if (!ks_member(u, params, tol)) throw std::invalid_argument("max_combine: first input is not in K_s");
    if (!ks_member(v, params, tol)) throw std::invalid_argument("max_combine: second input is not in K_s");
    const auto& grid = u.grid();
    const Operator op(grid, params);
    EnergyMinimizer m(op, Field::constant(grid, 1.0), Mask::full(grid));
    std::vector<double> upper(grid->size(), 0.0);
    for (std::size_t i = 0; i < upper.size(); ++i) upper[i] = std::max(u[i], v[i]);
    m.set_upper_bound(std::move(upper));
    SolverOpts o = opts;
    if (std::holds_alternative<LineSearch>(o.step_rule)) o.step_rule = Backtracking{};
    o.direction = Direction::steepest;
    auto rep = m.run(o);
    if (!rep.converged) throw ConvergenceError("max_combine: obstacle solve did not converge");
    return rep.field;
}

/// Solves with both right-hand sides; true iff u <= v + 10 tol_grad.
inline bool comparison_check(const Field& f_u, const Field& f_v, const Mask& mask, const OperatorParams& params,
                             const SolverOpts& opts) {
    for (std::size_t i = 0; i < f_u.size(); ++i) {
        if (f_u[i] > f_v[i]) throw std::invalid_argument("comparison_check: requires f_u <= f_v nodewise");
    }
    const Operator op(mask.grid(), params);
    const auto ru = solve_dirichlet(op, mask, f_u, opts);
    const auto rv = solve_dirichlet(op, mask, f_v, opts);
    if (!ru.converged || !rv.converged) return false;
    const double tol = 10.0 * opts.tol_grad;
    for (std::size_t i = 0; i < f_u.size(); ++i) {
        if (ru.field[i] > rv.field[i] + tol) return false;
    }
    return true;
}

struct MaximalityReport {
    bool passed = true;
    int trials = 0;
    int failures = 0;
    /// Largest w - u_A over all trials and nodes.
    double worst_excess = -std::numeric_limits<double>::infinity();
};

/**
 * Draws feasible competitors w = theta * u_B for random B subset of A and
 * theta in (0, 1] and checks w <= u_A + 10 tol_grad.
 */
inline MaximalityReport maximality_check(const Mask& mask, const OperatorParams& params, int trials,
                                         const SolverOpts& opts, std::uint64_t seed = 7) {
    const Operator op(mask.grid(), params);
    const auto ua = solve_torsion(op, mask, opts);
    if (!ua.converged) throw ConvergenceError("maximality_check: torsion solve did not converge");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(0.5);
    std::uniform_real_distribution<double> theta_dist(0.0, 1.0);
    const auto nodes = mask.nodes();
    const double tol = 10.0 * opts.tol_grad;
    MaximalityReport rep;
    for (int t = 0; t < trials; ++t) {
        Mask b(mask.grid());
        for (auto node : nodes) {
            if (keep(rng)) b = b.with(node, true);
        }
        const double theta = 1.0 - theta_dist(rng);
        const auto ub = solve_torsion(op, b, opts);
        const Field w = ub.field * theta;
        bool ok = ub.converged;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double excess = w[i] - ua.field[i];
            rep.worst_excess = std::max(rep.worst_excess, excess);
            if (excess > tol) ok = false;
        }
        ++rep.trials;
        if (!ok) {
            ++rep.failures;
            rep.passed = false;
        }
    }
    return rep;
}

}  // namespace fracshape
