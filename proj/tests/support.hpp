#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "fracshape/grid.hpp"

namespace fracshape::testing {

inline GridPtr line(int n, int padding = 2, double a = 0.0, double b = 1.0) {
    GridSpec g;
    g.dim = 1;
    g.box_min = {a};
    g.box_max = {b};
    g.nodes_per_axis = n;
    g.padding_cells = padding;
    return build_grid(g);
}

inline GridPtr square(int n, int padding = 2, double a = 0.0, double b = 1.0) {
    GridSpec g;
    g.dim = 2;
    g.box_min = {a, a};
    g.box_max = {b, b};
    g.nodes_per_axis = n;
    g.padding_cells = padding;
    return build_grid(g);
}

/// Deterministic generator for fields, masks and scalars.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    /// Values in [lo, hi] on the mask nodes (all interior nodes by default).
    Field field(const GridPtr& g, double lo = -1.0, double hi = 1.0) { return field_on(Mask::full(g), lo, hi); }

    Field field_on(const Mask& m, double lo = -1.0, double hi = 1.0) {
        std::vector<double> v(m.grid()->size(), 0.0);
        for (auto node : m.nodes()) v[node] = uniform(lo, hi);
        return Field(m.grid(), std::move(v));
    }

    /// Smooth-ish field: a random combination of low sine modes.
    Field smooth(const GridPtr& g) {
        const double a = uniform(-1, 1), b = uniform(-1, 1), c = uniform(-1, 1);
        const auto& s = g->spec();
        const double L = s.box_max[0] - s.box_min[0];
        return Field::from_function(g, [&](double x, double y) {
            const double t = (x - s.box_min[0]) / L;
            const double r = g->dim() == 2 ? (y - s.box_min[1]) / L : 0.5;
            return a * std::sin(M_PI * t) + b * std::sin(2 * M_PI * t) * std::cos(M_PI * r) + c * t * r;
        });
    }

    /// Nonempty random mask.
    Mask mask(const GridPtr& g, double density = 0.5) {
        Mask m(g);
        for (auto node : g->interior_nodes()) {
            if (coin(density)) m = m.with(node, true);
        }
        if (m.empty()) m = m.with(pick(g->interior_nodes()), true);
        return m;
    }

    /// A strictly nested pair A subset B, both nonempty.
    std::pair<Mask, Mask> nested(const GridPtr& g) {
        Mask b = mask(g, 0.6);
        if (b.count() < 2) {
            for (auto node : g->interior_nodes()) {
                if (!b.contains(node)) {
                    b = b.with(node, true);
                    break;
                }
            }
        }
        const auto nodes = b.nodes();
        Mask a(g);
        for (auto node : nodes) {
            if (coin(0.6)) a = a.with(node, true);
        }
        if (a.empty()) a = a.with(nodes.front(), true);
        if (a == b) a = a.with(nodes.back(), false);
        if (a.empty()) a = a.with(nodes.front(), true);
        return {a, b};
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))];
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

/// max |a - b| / max |b|.
inline double rel_field_err(const Field& a, const Field& b) {
    return (a - b).max_abs() / std::max(1e-300, b.max_abs());
}

}  // namespace fracshape::testing
