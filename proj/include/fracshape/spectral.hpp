#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fracshape/operator.hpp"
#include "fracshape/solve.hpp"

namespace fracshape {

struct EigenResult {
    double lambda = 0.0;
    /// Unit L^p norm, nonnegative sum.
    Field field;
    /// Max-norm of apply(u) + V phi(u) - lambda phi(u) on the mask.
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline double pnorm_p(const Field& u, double p) {
    std::vector<double> t(u.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = abs_pow(u[i], p);
    return u.grid()->cell_volume() * pairwise_sum(t);
}

inline double potential_term(const Field& u, const std::vector<double>& v, double p) {
    if (v.empty()) return 0.0;
    std::vector<double> t(u.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = v[i] * abs_pow(u[i], p);
    return u.grid()->cell_volume() * pairwise_sum(t);
}

inline void require_homogeneous(const Operator& op) {
    if (!op.homogeneous()) throw std::invalid_argument("eigen: anisotropic exponents must all be equal");
}

}  // namespace detail

/// J(u) / ||u||_p^p.
inline double rayleigh_quotient(const Operator& op, const Field& u) {
    detail::require_homogeneous(op);
    const double den = detail::pnorm_p(u, op.exponent());
    if (!(den > 0.0)) throw std::invalid_argument("rayleigh_quotient: zero field");
    return op.energy(u) / den;
}

inline double rayleigh_quotient(const Field& u, const OperatorParams& params) {
    return rayleigh_quotient(Operator(u.grid(), params), u);
}

inline constexpr int kEigenMaxOuter = 2000;

/**
 * First eigenpair on `mask` by inverse power iteration: solve
 * apply(w) + V phi(w) = phi(u_k) on the mask, warm-started from the previous
 * iterate, then u_{k+1} = w / ||w||_p. Stops when the relative change of the
 * quotient is below opts.tol_grad. For p = 2 the eigen residual must also be
 * below 100 tol_grad max(1, lambda); for p != 2 the iteration can approach
 * symmetric eigenfunctions sublinearly, so only the quotient is tested.
 */
inline EigenResult first_eigenpair(const Operator& op, const Mask& mask, const SolverOpts& opts,
                                   const std::vector<double>& potential = {}) {
    opts.validate();
    detail::require_homogeneous(op);
    detail::require_same_grid(op.grid(), mask.grid(), "eigen");
    if (mask.empty()) throw std::invalid_argument("eigen: empty mask");
    const auto& grid = op.grid();
    const double p = op.exponent();
    const auto nodes = mask.nodes();

    auto quotient = [&](const Field& u) {
        return (op.energy(u) + detail::potential_term(u, potential, p)) / detail::pnorm_p(u, p);
    };
    auto normalize = [&](const Field& w) { return w * (1.0 / std::pow(detail::pnorm_p(w, p), 1.0 / p)); };
    auto residual = [&](const Field& u, double lambda) {
        const Field a = op.apply(u);
        double r = 0.0;
        for (auto i : nodes) {
            double g = a[i] - lambda * detail::signed_pow(u[i], p);
            if (!potential.empty()) g += potential[i] * detail::signed_pow(u[i], p);
            r = std::max(r, std::abs(g));
        }
        return r;
    };

    // Start from the torsion-like state, which is positive on the mask.
    SolverOpts inner = opts;
    inner.tol_grad = std::max(opts.tol_grad, 1e-2);
    EnergyMinimizer start(op, Field::constant(grid, 1.0), mask);
    if (!potential.empty()) start.set_potential(potential);
    Field u = normalize(start.run(inner).field);
    double lambda = quotient(u);
    Field w = u;

    EigenResult out{lambda, u, 0.0, 0, false};
    for (int k = 1; k <= kEigenMaxOuter; ++k) {
        std::vector<double> rhs(grid->size(), 0.0);
        for (auto i : nodes) rhs[i] = detail::signed_pow(u[i], p);
        inner.tol_grad = std::max(0.1 * opts.tol_grad, std::pow(0.1, k));
        EnergyMinimizer m(op, Field(grid, std::move(rhs)), mask);
        if (!potential.empty()) m.set_potential(potential);
        const auto rep = m.run(inner, w);
        if (!(detail::pnorm_p(rep.field, p) > 0.0)) throw std::runtime_error("eigen: inner solve collapsed to zero");
        w = rep.field;
        u = normalize(w);
        const double next = quotient(u);
        const double change = std::abs(next - lambda) / std::abs(lambda);
        lambda = next;
        out.iterations = k;
        if (change <= opts.tol_grad && rep.converged) {
            const double r = residual(u, lambda);
            if (p != 2.0 || r <= 100.0 * opts.tol_grad * std::max(1.0, lambda)) {
                out.converged = true;
                out.residual = r;
                break;
            }
        }
    }
    if (u.sum() < 0.0) u = u * -1.0;
    out.lambda = lambda;
    out.field = u;
    if (!out.converged) out.residual = residual(u, lambda);
    return out;
}

inline EigenResult first_eigenpair(const Mask& mask, const OperatorParams& params, const SolverOpts& opts,
                                   const std::vector<double>& potential = {}) {
    const Operator op(mask.grid(), params);
    return first_eigenpair(op, mask, opts, potential);
}

}  // namespace fracshape
