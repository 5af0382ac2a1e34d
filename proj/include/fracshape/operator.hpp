#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "fracshape/grid.hpp"
#include "fracshape/parallel.hpp"
#include "fracshape/params.hpp"

namespace fracshape {

namespace detail {

/// |t|^(p-2) t, with the value 0 at t = 0 for every p > 1.
inline double signed_pow(double t, double p) {
    if (t == 0.0) return 0.0;
    if (p == 2.0) return t;
    if (p == 3.0) return std::abs(t) * t;
    return std::pow(std::abs(t), p - 2.0) * t;
}

inline double abs_pow(double t, double p) {
    if (p == 2.0) return t * t;
    const double a = std::abs(t);
    if (p == 3.0) return a * a * a;
    return a == 0.0 ? 0.0 : std::pow(a, p);
}

inline void require_finite(const Field& u, const char* what) {
    for (double v : u.values()) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
    }
}

}  // namespace detail

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Integral of |h|^(-1-sigma) over the two half-lines beyond the given gaps.
inline double exterior_tail_1d(double gap_left, double gap_right, double sigma) {
    return (std::pow(gap_left, -sigma) + std::pow(gap_right, -sigma)) / sigma;
}

/**
 * Integral of |x - y|^(-(2+sigma)) over y outside the rectangle
 * [x0, x1] x [y0, y1], for a point (x, y) inside it.
 *
 * In polar coordinates around the point the radial part is exact,
 * r(theta)^(-sigma) / sigma, where r(theta) is the exit distance of the ray.
 * The angular integral is split at the four corner directions and each
 * smooth piece is integrated with Gauss-Legendre.
 */
inline double exterior_tail_2d(double x, double y, double x0, double x1, double y0, double y1, double sigma,
                               int points = 64) {
    const double dr = x1 - x, dl = x - x0, dt = y1 - y, db = y - y0;
    const auto [gx, gw] = gauss_legendre(points);
    // Side with inward normal distance d, ray angle measured from the normal.
    auto side = [&](double d, double a, double b) {
        double acc = 0.0;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t k = 0; k < gx.size(); ++k) {
            const double phi = mid + half * gx[k];
            acc += gw[k] * std::pow(std::cos(phi) / d, sigma);
        }
        return acc * half;
    };
    double total = 0.0;
    total += side(dr, -std::atan2(db, dr), std::atan2(dt, dr));
    total += side(dt, -std::atan2(dr, dt), std::atan2(dl, dt));
    total += side(dl, -std::atan2(dt, dl), std::atan2(db, dl));
    total += side(db, -std::atan2(dl, db), std::atan2(dr, db));
    return total / sigma;
}

/// Local s = 1 p-Dirichlet energy with forward differences along every axis;
/// nodes beyond the array count as zero.
class LocalOperator {
public:
    LocalOperator(GridPtr grid, double p) : grid_(std::move(grid)), p_(p) {
        if (!(p_ > 1.0)) throw std::invalid_argument("local operator: p must be > 1");
    }

    const GridPtr& grid() const { return grid_; }
    double p() const { return p_; }

    /// h^dim * sum_edges |D u|^p.
    double energy(const Field& u) const {
        detail::require_finite(u, "energy_local");
        const auto& g = *grid_;
        const auto& nodes = g.interior_nodes();
        std::vector<double> terms(nodes.size());
        parallel_for(nodes.size(), [&](std::size_t k) {
            double acc = 0.0;
            for (int axis = 0; axis < g.dim(); ++axis) acc += owned_edges(u, nodes[k], axis);
            terms[k] = acc;
        });
        return g.cell_volume() * pairwise_sum(terms);
    }

    /// Riesz representer of the derivative of energy/p.
    Field apply(const Field& u) const {
        const auto& g = *grid_;
        const double h = g.h();
        std::vector<double> out(g.size(), 0.0);
        const auto& nodes = g.interior_nodes();
        parallel_for(nodes.size(), [&](std::size_t k) {
            const auto node = nodes[k];
            double acc = 0.0;
            for (int axis = 0; axis < g.dim(); ++axis) {
                const double c = u[node];
                const double dm = (c - neighbor(u, node, axis, -1)) / h;
                const double dp = (neighbor(u, node, axis, +1) - c) / h;
                acc += (detail::signed_pow(dm, p_) - detail::signed_pow(dp, p_)) / h;
            }
            out[node] = acc;
        });
        return Field(grid_, std::move(out));
    }

    /// Value of the neighbor along `axis` at offset +-1, zero beyond the array.
    static double neighbor_value(const Grid& g, const Field& u, std::size_t node, int axis, int step) {
        auto mi = g.multi_index(node);
        mi[static_cast<std::size_t>(axis)] += step;
        const int i = mi[static_cast<std::size_t>(axis)];
        if (i < 0 || i >= g.m()) return 0.0;
        return u[g.index(mi[0], mi[1])];
    }

    /// Sum of |D|^p over the edges owned by `node` along `axis`: the edge to
    /// its right neighbor, plus the left edge when the left neighbor is not
    /// an interior node. Every edge with a nonzero endpoint is owned once.
    static double owned_edge_sum(const Grid& g, const Field& u, std::size_t node, int axis, double p) {
        const double h = g.h();
        const double c = u[node];
        double acc = detail::abs_pow((neighbor_value(g, u, node, axis, +1) - c) / h, p);
        const int i = g.multi_index(node)[static_cast<std::size_t>(axis)];
        if (!g.is_interior_index(i - 1)) acc += detail::abs_pow((c - neighbor_value(g, u, node, axis, -1)) / h, p);
        return acc;
    }

private:
    double neighbor(const Field& u, std::size_t node, int axis, int step) const {
        return neighbor_value(*grid_, u, node, axis, step);
    }
    double owned_edges(const Field& u, std::size_t node, int axis) const {
        return owned_edge_sum(*grid_, u, node, axis, p_);
    }

    GridPtr grid_;
    double p_;
};

/**
 * Isotropic fractional p-Laplacian on the padded grid with zero extension:
 *
 *   J(u) = kappa (1-s) [ h^(2d) sum_{i != j} |u_i - u_j|^p / |x_i - x_j|^(d+sp)
 *                        + 2 h^d sum_i |u_i|^p T_i ]
 *
 * Pairs with a padding node are folded into a per-node exterior weight
 * W_i = h^d sum_{j in padding} |x_i - x_j|^(-(d+sp)) + T_i, where T_i is the
 * kernel integral over the complement of the padded box.
 */
class IsoOperator {
public:
    IsoOperator(GridPtr grid, IsoParams params, int tail_points = 64)
        : grid_(std::move(grid)), params_(params) {
        params_.validate();
        if (params_.local()) throw std::invalid_argument("iso operator: s = 1 uses the local operator");
        const auto& g = *grid_;
        const int d = g.dim();
        const int n = g.n();
        const double h = g.h();
        const double expo = d + params_.s * params_.p;
        sigma_ = params_.s * params_.p;
        scale_ = params_.kappa * (1.0 - params_.s);

        if (d == 1) {
            kernel_.assign(static_cast<std::size_t>(n), 0.0);
            for (int k = 1; k < n; ++k) kernel_[static_cast<std::size_t>(k)] = std::pow(k * h, -expo);
        } else {
            kernel_.assign(static_cast<std::size_t>(n) * n, 0.0);
            for (int b = 0; b < n; ++b) {
                for (int a = 0; a < n; ++a) {
                    if (a == 0 && b == 0) continue;
                    kernel_[static_cast<std::size_t>(b) * n + a] = std::pow(h * std::hypot(a, b), -expo);
                }
            }
        }

        const auto& nodes = g.interior_nodes();
        for (auto node : nodes) {
            const auto mi = g.multi_index(node);
            ix_.push_back(mi[0]);
            iy_.push_back(mi[1]);
        }
        tail_.assign(nodes.size(), 0.0);
        exterior_.assign(nodes.size(), 0.0);
        parallel_for(nodes.size(), [&](std::size_t k) {
            const auto node = nodes[k];
            const auto mi = g.multi_index(node);
            double pad = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (g.is_interior(j)) continue;
                const auto mj = g.multi_index(j);
                const double dist = h * std::hypot(mi[0] - mj[0], d == 2 ? mi[1] - mj[1] : 0);
                pad += std::pow(dist, -expo);
            }
            double tail = 0.0;
            const double x = g.coord(node, 0);
            if (d == 1) {
                tail = exterior_tail_1d(x - g.padded_min(0), g.padded_max(0) - x, sigma_);
            } else {
                const double y = g.coord(node, 1);
                tail = exterior_tail_2d(x, y, g.padded_min(0), g.padded_max(0), g.padded_min(1), g.padded_max(1), sigma_,
                                        tail_points);
            }
            tail_[k] = tail;
            exterior_[k] = g.cell_volume() * pad + tail;
        }, g.size());
    }

    const GridPtr& grid() const { return grid_; }
    const IsoParams& params() const { return params_; }
    /// T_i for the i-th interior node.
    const std::vector<double>& tails() const { return tail_; }
    /// W_i for the i-th interior node.
    const std::vector<double>& exterior_weights() const { return exterior_; }

    /// Kernel weight |x_k - x_l|^(-(d+sp)) between the k-th and l-th interior nodes.
    double kernel(std::size_t k, std::size_t l) const {
        const auto da = static_cast<std::size_t>(std::abs(ix_[k] - ix_[l]));
        const auto db = static_cast<std::size_t>(std::abs(iy_[k] - iy_[l]));
        return kernel_[db * static_cast<std::size_t>(grid_->n()) + da];
    }

    double energy(const Field& u) const {
        detail::require_finite(u, "energy_J");
        const auto& g = *grid_;
        const auto& nodes = g.interior_nodes();
        const double vol = g.cell_volume();
        const double p = params_.p;
        std::vector<double> terms(nodes.size());
        parallel_for(nodes.size(), [&](std::size_t k) {
            const double ui = u[nodes[k]];
            double pair = 0.0;
            for (std::size_t l = 0; l < nodes.size(); ++l) {
                if (l == k) continue;
                const double diff = ui - u[nodes[l]];
                if (diff == 0.0) continue;
                pair += kernel(k, l) * detail::abs_pow(diff, p);
            }
            terms[k] = vol * vol * pair + 2.0 * vol * detail::abs_pow(ui, p) * exterior_[k];
        }, nodes.size());
        return scale_ * pairwise_sum(terms);
    }

    Field apply(const Field& u) const {
        const auto& g = *grid_;
        const auto& nodes = g.interior_nodes();
        const double vol = g.cell_volume();
        const double p = params_.p;
        std::vector<double> out(g.size(), 0.0);
        parallel_for(nodes.size(), [&](std::size_t k) {
            const double ui = u[nodes[k]];
            double pair = 0.0;
            for (std::size_t l = 0; l < nodes.size(); ++l) {
                if (l == k) continue;
                const double diff = ui - u[nodes[l]];
                if (diff == 0.0) continue;
                pair += kernel(k, l) * detail::signed_pow(diff, p);
            }
            out[nodes[k]] = scale_ * (2.0 * vol * pair + 2.0 * detail::signed_pow(ui, p) * exterior_[k]);
        }, nodes.size());
        return Field(grid_, std::move(out));
    }

private:
    GridPtr grid_;
    IsoParams params_;
    double sigma_ = 0.0;
    double scale_ = 1.0;
    std::vector<double> kernel_;
    std::vector<int> ix_, iy_;
    std::vector<double> tail_;
    std::vector<double> exterior_;
};

/**
 * Anisotropic pseudo p-Laplacian: a sum of one-dimensional directional
 * energies. For an axis with s_i < 1,
 *
 *   J_i(u) = (1-s_i) s_i [ h^(d+1) sum_lines sum_{a != b} |u_a - u_b|^p_i / |x_a - x_b|^(1+s_i p_i)
 *                          + 2 h^d sum |u|^p_i W_a
 *                          + h^(d-1) S sum_edges |u_{k+1} - u_k|^p_i / h^p_i ]
 *
 * with W_a the 1D exterior weight (padding nodes on the line plus both
 * analytic half-line tails). The last term is the near-field cell integral
 * S = int int_{cell^2} |x-y|^(p(1-s)-1) = 2 h^(1+e) / (e (1+e)), e = p(1-s),
 * applied to the edge difference quotient; it carries the part of the
 * double integral that the diagonal exclusion drops, so that the directional
 * energy tends to (2/p) int |d_i u|^p as s_i -> 1 on a fixed grid.
 * For s_i = 1 the term is (2/p_i) h^d sum_edges |D_i u|^p_i.
 */
class AnisoOperator {
public:
    AnisoOperator(GridPtr grid, AnisoParams params) : grid_(std::move(grid)), params_(std::move(params)) {
        require_admissible(params_, grid_->dim());
        const auto& g = *grid_;
        const double h = g.h();
        const int n = g.n();
        axes_.resize(static_cast<std::size_t>(g.dim()));
        for (int a = 0; a < g.dim(); ++a) {
            auto& ax = axes_[static_cast<std::size_t>(a)];
            ax.s = params_.s_vec[static_cast<std::size_t>(a)];
            ax.p = params_.p_vec[static_cast<std::size_t>(a)];
            ax.local = ax.s == 1.0;
            if (ax.local) {
                ax.scale = 2.0 / ax.p;
                continue;
            }
            ax.scale = (1.0 - ax.s) * ax.s;
            const double sigma = ax.s * ax.p;
            ax.kernel.assign(static_cast<std::size_t>(n), 0.0);
            for (int k = 1; k < n; ++k) ax.kernel[static_cast<std::size_t>(k)] = std::pow(k * h, -(1.0 + sigma));
            ax.exterior.assign(static_cast<std::size_t>(n), 0.0);
            for (int i = 0; i < n; ++i) {
                const int ig = i + g.padding();
                double pad = 0.0;
                for (int j = 0; j < g.m(); ++j) {
                    if (g.is_interior_index(j)) continue;
                    pad += std::pow(std::abs(ig - j) * h, -(1.0 + sigma));
                }
                const double x = g.axis_coord(a, ig);
                ax.exterior[static_cast<std::size_t>(i)] =
                    h * pad + exterior_tail_1d(x - g.padded_min(a), g.padded_max(a) - x, sigma);
            }
            const double e = ax.p * (1.0 - ax.s);
            ax.near_field = 2.0 * std::pow(h, 1.0 + e) / (e * (1.0 + e));
        }
    }

    const GridPtr& grid() const { return grid_; }
    const AnisoParams& params() const { return params_; }

    /// Directional energy J_i along one axis.
    double axis_energy(const Field& u, int axis) const {
        detail::require_finite(u, "energy_aniso");
        const auto& g = *grid_;
        const auto& nodes = g.interior_nodes();
        std::vector<double> terms(nodes.size());
        parallel_for(nodes.size(), [&](std::size_t k) { terms[k] = node_energy(u, nodes[k], axis); }, g.n());
        return axes_[static_cast<std::size_t>(axis)].scale * pairwise_sum(terms);
    }

    /// Sum of the directional energies.
    double energy(const Field& u) const {
        double acc = 0.0;
        for (int a = 0; a < grid_->dim(); ++a) acc += axis_energy(u, a);
        return acc;
    }

    /// sum_i J_i / p_i.
    double potential(const Field& u) const {
        double acc = 0.0;
        for (int a = 0; a < grid_->dim(); ++a) acc += axis_energy(u, a) / axes_[static_cast<std::size_t>(a)].p;
        return acc;
    }

    Field apply(const Field& u) const {
        const auto& g = *grid_;
        const auto& nodes = g.interior_nodes();
        std::vector<double> out(g.size(), 0.0);
        parallel_for(nodes.size(), [&](std::size_t k) {
            double acc = 0.0;
            for (int a = 0; a < g.dim(); ++a) acc += node_gradient(u, nodes[k], a);
            out[nodes[k]] = acc;
        }, g.n());
        return Field(grid_, std::move(out));
    }

private:
    struct Axis {
        double s = 0.5, p = 2.0, scale = 1.0, near_field = 0.0;
        bool local = false;
        std::vector<double> kernel;
        std::vector<double> exterior;
    };

    /// Interior nodes of the line through `node` along `axis`, in order.
    std::size_t line_node(std::size_t node, int axis, int i) const {
        auto mi = grid_->multi_index(node);
        mi[static_cast<std::size_t>(axis)] = i + grid_->padding();
        return grid_->index(mi[0], mi[1]);
    }

    double node_energy(const Field& u, std::size_t node, int axis) const {
        const auto& g = *grid_;
        const auto& ax = axes_[static_cast<std::size_t>(axis)];
        const double vol = g.cell_volume();
        if (ax.local) return vol * LocalOperator::owned_edge_sum(g, u, node, axis, ax.p);
        const double h = g.h();
        const int i = g.multi_index(node)[static_cast<std::size_t>(axis)] - g.padding();
        const double ui = u[node];
        double pair = 0.0;
        for (int j = 0; j < g.n(); ++j) {
            if (j == i) continue;
            const double diff = ui - u[line_node(node, axis, j)];
            if (diff == 0.0) continue;
            pair += ax.kernel[static_cast<std::size_t>(std::abs(i - j))] * detail::abs_pow(diff, ax.p);
        }
        const double edges = LocalOperator::owned_edge_sum(g, u, node, axis, ax.p);
        return vol * h * pair + 2.0 * vol * detail::abs_pow(ui, ax.p) * ax.exterior[static_cast<std::size_t>(i)] +
               (vol / h) * ax.near_field * edges;
    }

    double node_gradient(const Field& u, std::size_t node, int axis) const {
        const auto& g = *grid_;
        const auto& ax = axes_[static_cast<std::size_t>(axis)];
        const double h = g.h();
        const double ui = u[node];
        const double dm = (ui - LocalOperator::neighbor_value(g, u, node, axis, -1)) / h;
        const double dp = (LocalOperator::neighbor_value(g, u, node, axis, +1) - ui) / h;
        const double edge_grad = (detail::signed_pow(dm, ax.p) - detail::signed_pow(dp, ax.p)) / h;
        if (ax.local) return ax.scale * edge_grad;
        const int i = g.multi_index(node)[static_cast<std::size_t>(axis)] - g.padding();
        double pair = 0.0;
        for (int j = 0; j < g.n(); ++j) {
            if (j == i) continue;
            const double diff = ui - u[line_node(node, axis, j)];
            if (diff == 0.0) continue;
            pair += ax.kernel[static_cast<std::size_t>(std::abs(i - j))] * detail::signed_pow(diff, ax.p);
        }
        return ax.scale * (2.0 * h * pair + 2.0 * detail::signed_pow(ui, ax.p) * ax.exterior[static_cast<std::size_t>(i)] +
                           ax.near_field * edge_grad / h);
    }

    GridPtr grid_;
    AnisoParams params_;
    std::vector<Axis> axes_;
};

/// Any of the three discrete operators behind one interface.
class Operator {
public:
    Operator(GridPtr grid, const OperatorParams& params) : params_(params), impl_(make(std::move(grid), params)) {}

    const GridPtr& grid() const {
        return std::visit([](const auto& op) -> const GridPtr& { return op.grid(); }, impl_);
    }
    const OperatorParams& params() const { return params_; }

    /// J(u), or sum_i J_i(u) for anisotropic parameters.
    double energy(const Field& u) const {
        return std::visit([&](const auto& op) { return op.energy(u); }, impl_);
    }

    /// J/p, or sum_i J_i / p_i; its derivative is apply().
    double potential(const Field& u) const {
        if (const auto* a = std::get_if<AnisoOperator>(&impl_)) return a->potential(u);
        return energy(u) / std::get<IsoParams>(params_).p;
    }

    Field apply(const Field& u) const {
        return std::visit([&](const auto& op) { return op.apply(u); }, impl_);
    }

    double exponent() const { return norm_exponent(params_); }

    /// True when every axis shares one exponent (the eigenproblem is then
    /// homogeneous).
    bool homogeneous() const {
        if (const auto* a = std::get_if<AnisoParams>(&params_)) {
            for (double p : a->p_vec) {
                if (p != a->p_vec.front()) return false;
            }
        }
        return true;
    }

private:
    using Impl = std::variant<LocalOperator, IsoOperator, AnisoOperator>;

    static Impl make(GridPtr grid, const OperatorParams& params) {
        if (const auto* iso = std::get_if<IsoParams>(&params)) {
            iso->validate();
            if (iso->local()) return LocalOperator(std::move(grid), iso->p);
            return IsoOperator(std::move(grid), *iso);
        }
        return AnisoOperator(std::move(grid), std::get<AnisoParams>(params));
    }

    OperatorParams params_;
    Impl impl_;
};

inline double energy_local(const Field& u, double p) { return LocalOperator(u.grid(), p).energy(u); }
inline Field apply_local(const Field& u, double p) { return LocalOperator(u.grid(), p).apply(u); }

/// Isotropic energy; s = 1 delegates to the local energy.
inline double energy_J(const Field& u, const IsoParams& params) {
    params.validate();
    if (params.local()) return energy_local(u, params.p);
    return IsoOperator(u.grid(), params).energy(u);
}

inline Field apply_operator(const Field& u, const IsoParams& params) {
    params.validate();
    if (params.local()) return apply_local(u, params.p);
    return IsoOperator(u.grid(), params).apply(u);
}

inline double energy_aniso(const Field& u, const AnisoParams& params) {
    return AnisoOperator(u.grid(), params).energy(u);
}

inline Field apply_aniso(const Field& u, const AnisoParams& params) {
    return AnisoOperator(u.grid(), params).apply(u);
}

}  // namespace fracshape
