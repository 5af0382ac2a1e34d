#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracshape/format.hpp"
#include "fracshape/grid.hpp"
#include "fracshape/limits.hpp"
#include "fracshape/shapeopt.hpp"
#include "fracshape/solve.hpp"
#include "fracshape/spectral.hpp"

namespace fracshape::io {

using nlohmann::json;

/// Finite values as numbers; inf and nan as strings, since JSON has neither.
inline json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

inline json to_json(const GridSpec& g) {
    return json{{"dim", g.dim},
                {"box_min", g.box_min},
                {"box_max", g.box_max},
                {"nodes_per_axis", g.nodes_per_axis},
                {"padding_cells", g.padding_cells}};
}

inline json mask_json(const Mask& m) {
    std::vector<int> cells;
    for (char f : m.interior_flags()) cells.push_back(f ? 1 : 0);
    return json{{"grid", to_json(m.grid()->spec())}, {"cells", cells}};
}

/// `node_index,x[,y],value` over the interior nodes.
inline void write_field_csv(std::ostream& os, const Field& u) {
    const auto& g = *u.grid();
    os << (g.dim() == 1 ? "node_index,x,value\n" : "node_index,x,y,value\n");
    for (auto node : g.interior_nodes()) {
        os << node << ',' << format_double(g.coord(node, 0));
        if (g.dim() == 2) os << ',' << format_double(g.coord(node, 1));
        os << ',' << format_double(u[node]) << '\n';
    }
}

/// `iter,cost,volume`.
inline void write_history_csv(std::ostream& os, const std::vector<ShapeStep>& history) {
    os << "iter,cost,volume\n";
    for (const auto& h : history) os << h.iter << ',' << format_double(h.cost) << ',' << format_double(h.volume) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const SweepTable& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << '\n';
    }
}

inline json sweep_metadata(const SweepTable& t) {
    json meta = json::object();
    for (const auto& [k, v] : t.metadata) meta[k] = v;
    return json{{"columns", t.columns}, {"rows", t.rows.size()}, {"metadata", meta}};
}

/// `i,j,value` for the nonzero entries of any square matrix-like object.
template <class Matrix>
void write_triplets_csv(std::ostream& os, const Matrix& m) {
    os << "i,j,value\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (m(i, j) != 0.0) os << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
        }
    }
}

inline json to_json(const SolveReport& r) {
    return json{{"iterations", r.iterations},
                {"final_residual", number(r.final_residual)},
                {"energy", number(r.energy)},
                {"converged", r.converged}};
}

inline json to_json(const EigenResult& r) {
    return json{{"lambda", number(r.lambda)},
                {"residual", number(r.residual)},
                {"iterations", r.iterations},
                {"converged", r.converged}};
}

inline json to_json(const ShapeResult& r) {
    json ties = json::array();
    for (const auto& m : r.ties) ties.push_back(mask_json(m)["cells"]);
    return json{{"method", to_string(r.method)},
                {"cost", number(r.cost)},
                {"volume", number(r.mask.volume())},
                {"cells", mask_json(r.mask)["cells"]},
                {"ties", ties},
                {"degenerate", r.degenerate},
                {"fixed_point", r.fixed_point},
                {"steps", r.history.size()}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

}  // namespace fracshape::io
