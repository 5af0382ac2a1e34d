#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracshape/errors.hpp"
#include "fracshape/parallel.hpp"

namespace fracshape {

/**
 * Uniform cell-centered tensor grid over a box, surrounded by a layer of
 * `padding_cells` zero-valued nodes on every side.
 *
 * Node i along an axis sits at box_min + (i - P + 1/2) * h, where P is the
 * padding width; interior nodes are those with P <= i < P + N.
 */
struct GridSpec {
    int dim = 1;
    std::vector<double> box_min{0.0};
    std::vector<double> box_max{1.0};
    int nodes_per_axis = 16;
    int padding_cells = 2;

    bool operator==(const GridSpec&) const = default;
};

class Grid {
public:
    explicit Grid(GridSpec spec) : spec_(std::move(spec)) {
        if (spec_.dim != 1 && spec_.dim != 2) {
            throw std::invalid_argument("grid: dim must be 1 or 2, got " + std::to_string(spec_.dim));
        }
        if (spec_.box_min.size() != static_cast<std::size_t>(spec_.dim) ||
            spec_.box_max.size() != static_cast<std::size_t>(spec_.dim)) {
            throw std::invalid_argument("grid: box_min/box_max must have one entry per axis");
        }
        if (spec_.nodes_per_axis < 2) {
            throw std::invalid_argument("grid: nodes_per_axis must be >= 2");
        }
        if (spec_.padding_cells < 0) {
            throw std::invalid_argument("grid: padding_cells must be >= 0");
        }
        for (int a = 0; a < spec_.dim; ++a) {
            if (!(spec_.box_max[a] > spec_.box_min[a])) {
                throw std::invalid_argument("grid: box_max must exceed box_min on every axis");
            }
        }
        h_ = (spec_.box_max[0] - spec_.box_min[0]) / spec_.nodes_per_axis;
        if (spec_.dim == 2) {
            const double h1 = (spec_.box_max[1] - spec_.box_min[1]) / spec_.nodes_per_axis;
            if (std::abs(h1 - h_) > 1e-12 * h_) {
                throw std::invalid_argument("grid: 2D boxes must be square (uniform mesh width)");
            }
        }
        m_ = spec_.nodes_per_axis + 2 * spec_.padding_cells;
        size_ = spec_.dim == 1 ? static_cast<std::size_t>(m_) : static_cast<std::size_t>(m_) * m_;
        interior_.reserve(static_cast<std::size_t>(std::pow(spec_.nodes_per_axis, spec_.dim)));
        for (std::size_t node = 0; node < size_; ++node) {
            if (is_interior(node)) interior_.push_back(node);
        }
    }

    const GridSpec& spec() const { return spec_; }
    int dim() const { return spec_.dim; }
    /// Interior nodes per axis (N).
    int n() const { return spec_.nodes_per_axis; }
    int padding() const { return spec_.padding_cells; }
    /// Total nodes per axis including padding (N + 2P).
    int m() const { return m_; }
    std::size_t size() const { return size_; }
    double h() const { return h_; }
    double cell_volume() const { return spec_.dim == 1 ? h_ : h_ * h_; }

    double domain_volume() const {
        double v = 1.0;
        for (int a = 0; a < spec_.dim; ++a) v *= spec_.box_max[a] - spec_.box_min[a];
        return v;
    }

    std::array<int, 2> multi_index(std::size_t node) const {
        const int i = static_cast<int>(node);
        if (spec_.dim == 1) return {i, 0};
        return {i % m_, i / m_};
    }

    std::size_t index(int i0, int i1 = 0) const {
        return static_cast<std::size_t>(i1) * (spec_.dim == 2 ? m_ : 0) + static_cast<std::size_t>(i0);
    }

    double axis_coord(int axis, int i) const {
        return spec_.box_min[axis] + (i - spec_.padding_cells + 0.5) * h_;
    }

    double coord(std::size_t node, int axis) const {
        return axis_coord(axis, multi_index(node)[static_cast<std::size_t>(axis)]);
    }

    /// Edges of the padded box (outer faces of the padding layer).
    double padded_min(int axis) const { return spec_.box_min[axis] - spec_.padding_cells * h_; }
    double padded_max(int axis) const { return spec_.box_max[axis] + spec_.padding_cells * h_; }

    bool is_interior_index(int i) const {
        return i >= spec_.padding_cells && i < spec_.padding_cells + spec_.nodes_per_axis;
    }

    bool is_interior(std::size_t node) const {
        const auto mi = multi_index(node);
        return is_interior_index(mi[0]) && (spec_.dim == 1 || is_interior_index(mi[1]));
    }

    /// Interior node indices in ascending order.
    const std::vector<std::size_t>& interior_nodes() const { return interior_; }

    bool operator==(const Grid& o) const { return spec_ == o.spec_; }

private:
    GridSpec spec_;
    double h_ = 0.0;
    int m_ = 0;
    std::size_t size_ = 0;
    std::vector<std::size_t> interior_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(GridSpec spec) { return std::make_shared<const Grid>(std::move(spec)); }

namespace detail {
inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what) {
    if (a.get() != b.get() && !(*a == *b)) {
        throw std::invalid_argument(std::string(what) + ": operands live on different grids");
    }
}
}  // namespace detail

/// Discrete admissible domain: a set of interior cells. Padding is never set.
class Mask {
public:
    Mask() = default;
    explicit Mask(GridPtr grid) : grid_(std::move(grid)), cells_(grid_->size(), 0) {}

    Mask(GridPtr grid, std::vector<char> cells) : grid_(std::move(grid)), cells_(std::move(cells)) {
        if (cells_.size() != grid_->size()) {
            throw std::invalid_argument("mask: cell vector size does not match grid");
        }
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            cells_[i] = cells_[i] ? 1 : 0;
            if (cells_[i] && !grid_->is_interior(i)) {
                throw std::invalid_argument("mask: padding node " + std::to_string(i) + " cannot be set");
            }
        }
        recount();
    }

    static Mask full(const GridPtr& grid) {
        std::vector<char> c(grid->size(), 0);
        for (auto node : grid->interior_nodes()) c[node] = 1;
        return Mask(grid, std::move(c));
    }

    /// Builds a mask from one flag per interior node (interior order).
    static Mask from_interior(const GridPtr& grid, std::span<const int> flags) {
        const auto& interior = grid->interior_nodes();
        if (flags.size() != interior.size()) {
            throw std::invalid_argument("mask: expected " + std::to_string(interior.size()) +
                                        " interior flags, got " + std::to_string(flags.size()));
        }
        std::vector<char> c(grid->size(), 0);
        for (std::size_t k = 0; k < flags.size(); ++k) {
            if (flags[k] != 0 && flags[k] != 1) throw std::invalid_argument("mask: flags must be 0 or 1");
            c[interior[k]] = static_cast<char>(flags[k]);
        }
        return Mask(grid, std::move(c));
    }

    const GridPtr& grid() const { return grid_; }
    bool contains(std::size_t node) const { return cells_[node] != 0; }
    std::size_t count() const { return count_; }
    bool empty() const { return count_ == 0; }
    double volume() const { return static_cast<double>(count_) * grid_->cell_volume(); }
    std::span<const char> cells() const { return cells_; }

    std::vector<int> interior_flags() const {
        std::vector<int> out;
        out.reserve(grid_->interior_nodes().size());
        for (auto node : grid_->interior_nodes()) out.push_back(cells_[node]);
        return out;
    }

    std::vector<std::size_t> nodes() const {
        std::vector<std::size_t> out;
        out.reserve(count_);
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (cells_[i]) out.push_back(i);
        }
        return out;
    }

    Mask with(std::size_t node, bool on) const {
        Mask out = *this;
        if (on && !grid_->is_interior(node)) throw std::invalid_argument("mask: cannot set a padding node");
        out.cells_[node] = on ? 1 : 0;
        out.recount();
        return out;
    }

    Mask united(const Mask& o) const { return combine(o, [](char a, char b) { return a || b; }); }
    Mask intersected(const Mask& o) const { return combine(o, [](char a, char b) { return a && b; }); }
    Mask minus(const Mask& o) const { return combine(o, [](char a, char b) { return a && !b; }); }

    bool subset_of(const Mask& o) const {
        detail::require_same_grid(grid_, o.grid_, "mask");
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (cells_[i] && !o.cells_[i]) return false;
        }
        return true;
    }

    bool operator==(const Mask& o) const { return *grid_ == *o.grid_ && cells_ == o.cells_; }
    /// Lexicographic order on the interior flags.
    bool operator<(const Mask& o) const { return interior_flags() < o.interior_flags(); }

private:
    template <class Op>
    Mask combine(const Mask& o, Op op) const {
        detail::require_same_grid(grid_, o.grid_, "mask");
        std::vector<char> c(cells_.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = op(cells_[i], o.cells_[i]) ? 1 : 0;
        return Mask(grid_, std::move(c));
    }

    void recount() { count_ = static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), char{1})); }

    GridPtr grid_;
    std::vector<char> cells_;
    std::size_t count_ = 0;
};

/// Mask of all interior nodes whose center satisfies `pred(x, y)` (y = 0 in 1D).
inline Mask mask_from_predicate(const GridPtr& grid, const std::function<bool(double, double)>& pred) {
    std::vector<char> c(grid->size(), 0);
    for (auto node : grid->interior_nodes()) {
        const double x = grid->coord(node, 0);
        const double y = grid->dim() == 2 ? grid->coord(node, 1) : 0.0;
        c[node] = pred(x, y) ? 1 : 0;
    }
    return Mask(grid, std::move(c));
}

inline double mask_volume(const Mask& m) { return m.volume(); }

/// One real value per grid node; padding nodes are always zero.
class Field {
public:
    Field() = default;
    explicit Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

    Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_->size()) {
            throw std::invalid_argument("field: value vector size does not match grid");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw std::invalid_argument("field: non-finite value at node " + std::to_string(i));
            }
            if (values_[i] != 0.0 && !grid_->is_interior(i)) {
                throw std::invalid_argument("field: padding node " + std::to_string(i) + " must be zero");
            }
        }
    }

    static Field constant(const GridPtr& grid, double c) {
        std::vector<double> v(grid->size(), 0.0);
        for (auto node : grid->interior_nodes()) v[node] = c;
        return Field(grid, std::move(v));
    }

    static Field from_function(const GridPtr& grid, const std::function<double(double, double)>& fn) {
        std::vector<double> v(grid->size(), 0.0);
        for (auto node : grid->interior_nodes()) {
            v[node] = fn(grid->coord(node, 0), grid->dim() == 2 ? grid->coord(node, 1) : 0.0);
        }
        return Field(grid, std::move(v));
    }

    const GridPtr& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t node) const { return values_[node]; }
    std::size_t size() const { return values_.size(); }

    /// Copy with every node outside `m` set to exactly zero.
    Field supported_on(const Mask& m) const {
        detail::require_same_grid(grid_, m.grid(), "field");
        Field out = *this;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!m.contains(i)) out.values_[i] = 0.0;
        }
        return out;
    }

    Field operator+(const Field& o) const { return zip(o, [](double a, double b) { return a + b; }); }
    Field operator-(const Field& o) const { return zip(o, [](double a, double b) { return a - b; }); }
    Field operator*(double a) const {
        Field out = *this;
        for (auto& v : out.values_) v *= a;
        return out;
    }
    friend Field operator*(double a, const Field& f) { return f * a; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double sum() const { return pairwise_sum(values_); }

    bool operator==(const Field& o) const { return *grid_ == *o.grid_ && values_ == o.values_; }

private:
    template <class Op>
    Field zip(const Field& o, Op op) const {
        detail::require_same_grid(grid_, o.grid_, "field");
        Field out = *this;
        for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = op(values_[i], o.values_[i]);
        return out;
    }

    GridPtr grid_;
    std::vector<double> values_;
};

/// Discrete L^p norm (h^dim * sum |u_i|^p)^(1/p).
inline double lp_norm(const Field& u, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    const auto v = u.values();
    std::vector<double> terms(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) terms[i] = std::pow(std::abs(v[i]), p);
    return std::pow(u.grid()->cell_volume() * pairwise_sum(terms), 1.0 / p);
}

/// h^dim * sum u_i v_i.
inline double inner(const Field& u, const Field& v) {
    detail::require_same_grid(u.grid(), v.grid(), "inner");
    std::vector<double> terms(u.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = u[i] * v[i];
    return u.grid()->cell_volume() * pairwise_sum(terms);
}

}  // namespace fracshape
