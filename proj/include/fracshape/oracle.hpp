#pragma once

// Brute-force references for the tests. Nothing here calls the operator,
// solver or spectral code; the only dependency is the grid.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fracshape/grid.hpp"
#include "fracshape/params.hpp"

namespace fracshape::oracle {

/// Dense operator matrix over the interior nodes (interior order).
struct DenseMatrix {
    GridPtr grid;
    Eigen::MatrixXd values;

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// L u, with u and the result as full grid fields.
    Field multiply(const Field& u) const {
        const auto& nodes = grid->interior_nodes();
        Eigen::VectorXd x(static_cast<Eigen::Index>(nodes.size()));
        for (std::size_t k = 0; k < nodes.size(); ++k) x(static_cast<Eigen::Index>(k)) = u[nodes[k]];
        const Eigen::VectorXd y = values * x;
        std::vector<double> out(grid->size(), 0.0);
        for (std::size_t k = 0; k < nodes.size(); ++k) out[nodes[k]] = y(static_cast<Eigen::Index>(k));
        return Field(grid, std::move(out));
    }
};

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double eps) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), eps, 40);
}

}  // namespace detail

/// Kernel tail beyond the two ends of a segment, |h|^(-1-sigma).
inline double tail_1d(double x, double lo, double hi, double sigma) {
    return std::pow(x - lo, -sigma) / sigma + std::pow(hi - x, -sigma) / sigma;
}

/**
 * Integral of |x - y|^(-(2+sigma)) over the complement of a rectangle, by
 * inclusion-exclusion: four half-planes (closed form) minus the four corner
 * quadrants where adjacent half-planes overlap (adaptive Simpson in angle).
 */
inline double tail_2d(double x, double y, double x0, double x1, double y0, double y1, double sigma) {
    // int_R (1 + t^2)^(-(2+sigma)/2) dt
    const double line = std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (1.0 + sigma)) / std::tgamma(0.5 * (2.0 + sigma));
    auto half_plane = [&](double d) { return line * std::pow(d, -sigma) / sigma; };
    auto quadrant = [&](double a, double b) {
        // {t > a, v > b}: radial part from max(a / cos, b / sin) to infinity.
        auto f = [&](double th) {
            const double r = std::max(a / std::cos(th), b / std::sin(th));
            return std::pow(r, -sigma) / sigma;
        };
        const double split = std::atan2(b, a);
        return detail::adaptive_simpson(f, 1e-300, split, 1e-15) +
               detail::adaptive_simpson(f, split, 0.5 * std::numbers::pi - 1e-300, 1e-15);
    };
    const double dl = x - x0, dr = x1 - x, db = y - y0, dt = y1 - y;
    return half_plane(dl) + half_plane(dr) + half_plane(db) + half_plane(dt) - quadrant(dr, dt) - quadrant(dl, dt) -
           quadrant(dl, db) - quadrant(dr, db);
}

inline constexpr std::size_t kMaxDenseNodes = 4096;

namespace detail {

inline void guard(const Grid& g) {
    if (g.interior_nodes().size() > kMaxDenseNodes) {
        throw GuardError("oracle: dense assembly limited to 4096 interior nodes");
    }
}

inline double distance(const Grid& g, std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (int axis = 0; axis < g.dim(); ++axis) {
        const double d = g.coord(a, axis) - g.coord(b, axis);
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// h^d sum over padding nodes of the kernel plus the analytic tail.
inline double exterior_weight(const Grid& g, std::size_t node, double s) {
    const int d = g.dim();
    const double expo = d + 2.0 * s;
    double pad = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!g.is_interior(j)) pad += std::pow(distance(g, node, j), -expo);
    }
    const double x = g.coord(node, 0);
    const double t = d == 1 ? tail_1d(x, g.padded_min(0), g.padded_max(0), 2.0 * s)
                            : tail_2d(x, g.coord(node, 1), g.padded_min(0), g.padded_max(0), g.padded_min(1),
                                      g.padded_max(1), 2.0 * s);
    return g.cell_volume() * pad + t;
}

}  // namespace detail

/**
 * p = 2 operator matrix. For s < 1:
 *   L_kl = -2 c h^d |x_k - x_l|^(-(d+2s)),  L_kk = c (2 h^d sum_{l != k} |x_k - x_l|^(-(d+2s)) + 2 W_k),
 * with c = kappa (1 - s). For s = 1 the standard (2d+1)-point Laplacian
 * with zero neighbors outside the interior.
 */
inline DenseMatrix assemble_dense_p2(const GridPtr& grid, const IsoParams& params) {
    const auto& g = *grid;
    detail::guard(g);
    const auto& nodes = g.interior_nodes();
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    const double vol = g.cell_volume();
    if (params.s == 1.0) {
        const double h2 = g.h() * g.h();
        for (Eigen::Index k = 0; k < n; ++k) {
            L(k, k) = 2.0 * g.dim() / h2;
            for (Eigen::Index l = 0; l < n; ++l) {
                if (l != k && std::abs(detail::distance(g, nodes[static_cast<std::size_t>(k)],
                                                        nodes[static_cast<std::size_t>(l)]) -
                                       g.h()) < 1e-9 * g.h()) {
                    L(k, l) = -1.0 / h2;
                }
            }
        }
        return {grid, L};
    }
    const double c = params.kappa * (1.0 - params.s);
    const double expo = g.dim() + 2.0 * params.s;
    for (Eigen::Index k = 0; k < n; ++k) {
        double row = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) {
            if (l == k) continue;
            const double w = std::pow(detail::distance(g, nodes[static_cast<std::size_t>(k)], nodes[static_cast<std::size_t>(l)]), -expo);
            L(k, l) = -2.0 * c * vol * w;
            row += w;
        }
        L(k, k) = c * (2.0 * vol * row + 2.0 * detail::exterior_weight(g, nodes[static_cast<std::size_t>(k)], params.s));
    }
    return {grid, L};
}

/// Same matrix, filled column by column with the diagonal assembled last.
inline DenseMatrix assemble_dense_p2_swapped(const GridPtr& grid, const IsoParams& params) {
    const auto& g = *grid;
    detail::guard(g);
    if (params.s == 1.0) return assemble_dense_p2(grid, params);
    const auto& nodes = g.interior_nodes();
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    const double c = params.kappa * (1.0 - params.s);
    const double vol = g.cell_volume();
    for (Eigen::Index l = n - 1; l >= 0; --l) {
        for (Eigen::Index k = n - 1; k >= 0; --k) {
            if (k == l) continue;
            double acc = 0.0;
            for (int axis = 0; axis < g.dim(); ++axis) {
                const double d = g.coord(nodes[static_cast<std::size_t>(k)], axis) - g.coord(nodes[static_cast<std::size_t>(l)], axis);
                acc += d * d;
            }
            L(k, l) = -2.0 * c * vol * std::pow(acc, -0.5 * (g.dim() + 2.0 * params.s));
        }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        double off = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) {
            if (l != k) off -= L(k, l);
        }
        L(k, k) = off + 2.0 * c * detail::exterior_weight(g, nodes[static_cast<std::size_t>(k)], params.s);
    }
    return {grid, L};
}

namespace detail {
inline std::vector<Eigen::Index> mask_rows(const DenseMatrix& L, const Mask& mask) {
    std::vector<Eigen::Index> rows;
    const auto& nodes = L.grid->interior_nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (mask.contains(nodes[k])) rows.push_back(static_cast<Eigen::Index>(k));
    }
    return rows;
}

inline Eigen::MatrixXd restrict(const DenseMatrix& L, const std::vector<Eigen::Index>& rows) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd A(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) A(a, b) = L.values(rows[static_cast<std::size_t>(a)], rows[static_cast<std::size_t>(b)]);
    }
    return A;
}
}  // namespace detail

/// Solves L_mask u = f_mask by Cholesky; u = 0 off the mask.
inline Field dense_solve_p2(const DenseMatrix& L, const Mask& mask, const Field& f) {
    const auto rows = detail::mask_rows(L, mask);
    std::vector<double> out(L.grid->size(), 0.0);
    if (rows.empty()) return Field(L.grid, std::move(out));
    const Eigen::MatrixXd A = detail::restrict(L, rows);
    const auto& nodes = L.grid->interior_nodes();
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) b(static_cast<Eigen::Index>(a)) = f[nodes[static_cast<std::size_t>(rows[a])]];
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw std::runtime_error("dense_solve_p2: restricted matrix is not positive definite");
    const Eigen::VectorXd x = llt.solve(b);
    for (std::size_t a = 0; a < rows.size(); ++a) out[nodes[static_cast<std::size_t>(rows[a])]] = x(static_cast<Eigen::Index>(a));
    return Field(L.grid, std::move(out));
}

struct DenseEigenpair {
    double lambda = 0.0;
    /// Unit discrete L^2 norm, nonnegative sum.
    Field field;
};

/// Smallest eigenpair of the mask-restricted matrix.
inline DenseEigenpair dense_eigen_p2(const DenseMatrix& L, const Mask& mask) {
    const auto rows = detail::mask_rows(L, mask);
    if (rows.empty()) throw std::invalid_argument("dense_eigen_p2: empty mask");
    const Eigen::MatrixXd A = detail::restrict(L, rows);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense_eigen_p2: eigendecomposition failed");
    Eigen::VectorXd v = es.eigenvectors().col(0);
    if (v.sum() < 0.0) v = -v;
    v /= std::sqrt(L.grid->cell_volume()) * v.norm();
    std::vector<double> out(L.grid->size(), 0.0);
    const auto& nodes = L.grid->interior_nodes();
    for (std::size_t a = 0; a < rows.size(); ++a) out[nodes[static_cast<std::size_t>(rows[a])]] = v(static_cast<Eigen::Index>(a));
    return {es.eigenvalues()(0), Field(L.grid, std::move(out))};
}

/**
 * Directional anisotropic energy along `axis` for equal orders s < 1, summed
 * line by line straight from the definition: ordered interior pairs on each
 * line, padding nodes plus the analytic tail for the exterior, and the
 * near-field term S sum |du / h|^p over every edge of the line.
 */
inline double aniso_line_energy(const Field& u, int axis, double s, double p) {
    const auto& g = *u.grid();
    const double h = g.h();
    const int d = g.dim(), n = g.n(), P = g.padding(), M = g.m();
    const double sigma = s * p;
    const double e = p * (1.0 - s);
    const double near = 2.0 * std::pow(h, 1.0 + e) / (e * (1.0 + e));
    auto at = [&](int along, int across) { return axis == 0 ? u[g.index(along, across)] : u[g.index(across, along)]; };
    double pairs = 0.0, tails = 0.0, edges = 0.0;
    const int lines = d == 1 ? 1 : M;
    for (int c = 0; c < lines; ++c) {
        if (d == 2 && !g.is_interior_index(c)) continue;
        for (int a = P; a < P + n; ++a) {
            for (int b = P; b < P + n; ++b) {
                if (a != b) pairs += std::pow(std::abs(at(a, c) - at(b, c)), p) / std::pow(std::abs(a - b) * h, 1.0 + sigma);
            }
            double w = 0.0;
            for (int j = 0; j < M; ++j) {
                if (j < P || j >= P + n) w += h * std::pow(std::abs(a - j) * h, -1.0 - sigma);
            }
            w += tail_1d(g.axis_coord(axis, a), g.padded_min(axis), g.padded_max(axis), sigma);
            tails += std::pow(std::abs(at(a, c)), p) * w;
        }
        for (int a = -1; a < M; ++a) {
            const double lo = a < 0 ? 0.0 : at(a, c);
            const double hi = a + 1 >= M ? 0.0 : at(a + 1, c);
            edges += std::pow(std::abs(hi - lo) / h, p);
        }
    }
    const double hd = std::pow(h, d);
    return (1.0 - s) * s * (hd * h * pairs + 2.0 * hd * tails + hd / h * near * edges);
}

inline constexpr std::size_t kMaxEnumerationCells = 20;

/// Every mask with exactly `budget` interior cells, in lexicographic order of
/// the chosen interior positions. Single consumer.
class MaskEnumerator {
public:
    MaskEnumerator(GridPtr grid, std::size_t budget) : grid_(std::move(grid)), budget_(budget) {
        const auto cells = grid_->interior_nodes().size();
        if (cells > kMaxEnumerationCells) {
            throw GuardError("enumerate_masks: " + std::to_string(cells) + " interior cells exceed the limit of 20");
        }
        if (budget_ > cells) throw std::invalid_argument("enumerate_masks: budget exceeds the number of cells");
        for (std::size_t k = 0; k < budget_; ++k) pick_.push_back(k);
    }

    std::optional<Mask> next() {
        if (done_) return std::nullopt;
        const auto& nodes = grid_->interior_nodes();
        std::vector<char> c(grid_->size(), 0);
        for (auto k : pick_) c[nodes[k]] = 1;
        Mask out(grid_, std::move(c));
        advance(nodes.size());
        return out;
    }

private:
    void advance(std::size_t cells) {
        if (budget_ == 0) {
            done_ = true;
            return;
        }
        std::size_t i = budget_;
        while (i > 0) {
            --i;
            if (pick_[i] < cells - budget_ + i) {
                ++pick_[i];
                for (std::size_t j = i + 1; j < budget_; ++j) pick_[j] = pick_[j - 1] + 1;
                return;
            }
        }
        done_ = true;
    }

    GridPtr grid_;
    std::size_t budget_;
    std::vector<std::size_t> pick_;
    bool done_ = false;
};

inline MaskEnumerator enumerate_masks(const GridPtr& grid, std::size_t cell_budget) {
    return MaskEnumerator(grid, cell_budget);
}

}  // namespace fracshape::oracle
