// Acceptance runner: one PASS/FAIL line per criterion with its runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracshape/limits.hpp"
#include "fracshape/oracle.hpp"
#include "fracshape/shapeopt.hpp"

using namespace fracshape;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

GridPtr grid_1d(int n, int padding = 2) { return build_grid(GridSpec{1, {0.0}, {1.0}, n, padding}); }
GridPtr grid_2d(int n, int padding = 2) { return build_grid(GridSpec{2, {0.0, 0.0}, {1.0, 1.0}, n, padding}); }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : e_(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(e_); }
    bool coin(double p) { return std::bernoulli_distribution(p)(e_); }

    Field field_on(const Mask& m, double a = -1.0, double b = 1.0) {
        std::vector<double> v(m.grid()->size(), 0.0);
        for (auto node : m.nodes()) v[node] = uniform(a, b);
        return Field(m.grid(), std::move(v));
    }
    Field field(const GridPtr& g, double a = -1.0, double b = 1.0) { return field_on(Mask::full(g), a, b); }

    Mask mask(const GridPtr& g, double density) {
        Mask m(g);
        for (auto node : g->interior_nodes()) {
            if (coin(density)) m = m.with(node, true);
        }
        if (m.empty()) m = m.with(g->interior_nodes().front(), true);
        return m;
    }

    /// A strictly inside B, both nonempty.
    std::pair<Mask, Mask> nested(const GridPtr& g) {
        Mask b = mask(g, 0.7);
        if (b.count() < 2) b = Mask::full(g);
        Mask a(g);
        for (auto node : b.nodes()) {
            if (coin(0.6)) a = a.with(node, true);
        }
        const auto nodes = b.nodes();
        if (a == b) a = a.with(nodes.back(), false);
        if (a.empty()) a = a.with(nodes.front(), true);
        return {a, b};
    }

private:
    std::mt19937_64 e_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

// 1. p = 2 operator, torsion and eigenvalue against dense linear algebra.
Outcome oracle_equivalence() {
    Outcome o;
    Rng rng(101);
    double worst_apply = 0, worst_solve = 0, worst_eig = 0;
    for (int n : {16, 32, 64}) {
        const auto g = grid_1d(n);
        for (double s : {0.3, 0.5, 0.8}) {
            const IsoParams ip{s, 2.0, 1.0};
            const Operator op(g, ip);
            const auto L = oracle::assemble_dense_p2(g, ip);
            const Field u = rng.field(g);
            worst_apply = std::max(worst_apply, (op.apply(u) - L.multiply(u)).max_abs() / L.multiply(u).max_abs());
            const Mask full = Mask::full(g);
            const auto opts = SolverOpts::defaults_for(2.0);
            const auto t = solve_torsion(op, full, opts);
            o.require(t.converged, "torsion solve did not converge");
            worst_solve = std::max(worst_solve, (t.field - oracle::dense_solve_p2(L, full, Field::constant(g, 1.0))).max_abs());
            const auto e = first_eigenpair(op, full, opts);
            o.require(e.converged, "eigen iteration did not converge");
            const double ref = oracle::dense_eigen_p2(L, full).lambda;
            worst_eig = std::max(worst_eig, std::abs(e.lambda - ref) / ref);
        }
    }
    o.require(worst_apply <= 1e-12, "apply mismatch");
    o.require(worst_solve <= 1e-8, "torsion mismatch");
    o.require(worst_eig <= 1e-8, "eigenvalue mismatch");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("apply ") + fmt(worst_apply) + ", torsion " + fmt(worst_solve) +
                ", lambda " + fmt(worst_eig);
    return o;
}

// 2. Gateaux derivative, monotonicity and homogeneity for p in {1.5, 2, 3}.
Outcome variational_suite() {
    Outcome o;
    Rng rng(102);
    double worst_fd = 0, worst_mono = 0, worst_hom = 0;
    for (double p : {1.5, 2.0, 3.0}) {
        const std::vector<std::pair<GridPtr, OperatorParams>> cases{
            {grid_1d(32), IsoParams{0.5, p, 1.0}},
            {grid_2d(8), IsoParams{0.7, p, 1.0}},
            {grid_1d(32), IsoParams{1.0, p, 1.0}},
            {grid_2d(8), AnisoParams{{0.4, 0.8}, {p, p}}},
        };
        for (const auto& [g, params] : cases) {
            const Operator op(g, params);
            for (int t = 0; t < 30; ++t) {
                const Field u = rng.field(g), v = rng.field(g);
                const double eps = 1e-6;
                const double fd = (op.potential(u + v * eps) - op.potential(u - v * eps)) / (2 * eps);
                const Field au = op.apply(u);
                // Relative to the Cauchy-Schwarz scale of <apply(u), v>.
                const double scale = std::sqrt(inner(au, au) * inner(v, v));
                worst_fd = std::max(worst_fd, std::abs(fd - inner(au, v)) / scale);
                worst_mono = std::max(worst_mono, -inner(au - op.apply(v), u - v));
                const double a = rng.uniform(0.1, 3.0);
                const double e1 = op.energy(u * a), e0 = std::pow(a, p) * op.energy(u);
                worst_hom = std::max(worst_hom, std::abs(e1 - e0) / e0);
                const Field b1 = op.apply(u * a), b0 = au * std::pow(a, p - 1.0);
                worst_hom = std::max(worst_hom, (b1 - b0).max_abs() / b0.max_abs());
            }
        }
    }
    o.require(worst_fd <= 1e-5, "Gateaux check");
    o.require(worst_mono <= 1e-12, "monotonicity");
    o.require(worst_hom <= 1e-12, "homogeneity");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("fd ") + fmt(worst_fd) + ", mono " + fmt(worst_mono) +
                ", hom " + fmt(worst_hom);
    return o;
}

// 3. Comparison, domain monotonicity and maximality.
Outcome order_suite() {
    Outcome o;
    Rng rng(103);
    int comparisons = 0, nested = 0, maximal = 0;
    for (int t = 0; t < 20; ++t) {
        const auto g = grid_1d(24);
        const IsoParams ip{rng.uniform(0.2, 1.0), t % 2 ? 3.0 : 2.0, 1.0};
        const Mask m = rng.mask(g, 0.7);
        const Field fu = rng.field(g);
        const Field fv = fu + rng.field(g, 0.0, 1.0);
        if (comparison_check(fu, fv, m, ip, SolverOpts::defaults_for(ip.p))) ++comparisons;
    }
    for (int t = 0; t < 10; ++t) {
        const auto g = grid_2d(8);
        const AnisoParams ap{{rng.uniform(0.3, 0.9), rng.uniform(0.3, 0.9)}, {2.0, t % 2 ? 2.5 : 2.0}};
        const Mask m = rng.mask(g, 0.7);
        const Field fu = rng.field(g);
        const Field fv = fu + rng.field(g, 0.0, 1.0);
        if (comparison_check(fu, fv, m, ap, SolverOpts::defaults_for(ap))) ++comparisons;
    }
    for (int t = 0; t < 20; ++t) {
        const auto g = t % 2 ? grid_1d(20) : grid_2d(6);
        const IsoParams ip{rng.uniform(0.2, 1.0), t % 4 < 2 ? 2.0 : 3.0, 1.0};
        const auto opts = SolverOpts::defaults_for(ip.p);
        const auto [a, b] = rng.nested(g);
        const auto ua = solve_torsion(a, ip, opts), ub = solve_torsion(b, ip, opts);
        bool ok = ua.converged && ub.converged;
        for (std::size_t i = 0; i < ua.field.size(); ++i) ok = ok && ua.field[i] <= ub.field[i] + 10.0 * opts.tol_grad;
        if (ok) ++nested;
    }
    for (int t = 0; t < 5; ++t) {
        const auto g = t % 2 ? grid_1d(20) : grid_2d(6);
        const IsoParams ip{0.3 + 0.15 * t, t % 2 ? 3.0 : 2.0, 1.0};
        const auto rep = maximality_check(rng.mask(g, 0.8), ip, 20, SolverOpts::defaults_for(ip.p), 200 + t);
        if (rep.passed && rep.trials == 20) ++maximal;
    }
    o.require(comparisons == 30, "comparison failures");
    o.require(nested == 20, "domain monotonicity failures");
    o.require(maximal == 5, "maximality failures");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("comparison ") + std::to_string(comparisons) +
                "/30, nested " + std::to_string(nested) + "/20, maximality " + std::to_string(maximal) + "/5";
    return o;
}

// 4. Torsion functions lie in K_s and max_combine realizes the nodewise max.
Outcome ks_structure() {
    Outcome o;
    Rng rng(104);
    int passed = 0, total = 0;
    double worst = 0;
    for (double p : {2.0, 3.0}) {
        for (int t = 0; t < 5; ++t) {
            const auto g = t % 2 ? grid_1d(24) : grid_2d(7);
            const IsoParams ip{0.3 + 0.1 * t, p, 1.0};
            const auto opts = SolverOpts::defaults_for(p);
            const double tol = 10.0 * opts.tol_grad;
            const Field ua = solve_torsion(rng.mask(g, 0.6), ip, opts).field;
            const Field ub = solve_torsion(rng.mask(g, 0.6), ip, opts).field;
            bool ok = ks_member(ua, ip, tol) && ks_member(ub, ip, tol);
            const Field z = max_combine(ua, ub, ip, opts);
            double err = 0;
            for (std::size_t i = 0; i < z.size(); ++i) err = std::max(err, std::abs(z[i] - std::max(ua[i], ub[i])));
            worst = std::max(worst, err);
            ok = ok && err <= 1e-6 && ks_member(z, ip, tol);
            ++total;
            if (ok) ++passed;
        }
    }
    o.require(passed == total, "K_s check failed");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(passed) + "/" + std::to_string(total) + " pairs, max err " +
                fmt(worst);
    return o;
}

// 5. Enumeration is exact; rearrangement lands within 5% of it.
Outcome shape_exactness() {
    Outcome o;
    Rng rng(105);
    double worst_ratio = 0;
    int cases = 0;
    for (int n : {10, 12}) {
        const auto g = grid_1d(n);
        const double c = 4.0 * g->h();
        for (auto kind : {CostKind::first_eigenvalue, CostKind::torsional_compliance}) {
            for (double p : {2.0, 3.0}) {
                const CostFunctional fn{kind, IsoParams{0.5, p, 1.0}};
                const auto best = optimize_enumerate(g, fn, c);
                const auto wide = optimize_enumerate_unrestricted(g, fn, c);
                o.require(best.mask.count() == 4, "enumeration budget");
                o.require(std::abs(best.cost - wide.cost) <= kTieTolerance * std::max(1.0, std::abs(wide.cost)),
                          "enumeration is not the unrestricted optimum");
                for (int t = 0; t < 5; ++t) {
                    const auto r = optimize_rearrange(g, fn, c, rng.mask(g, 0.5));
                    // Excess over the optimum relative to |optimum|; costs may be negative.
                    const double ratio = 1.0 + (r.cost - best.cost) / std::abs(best.cost);
                    worst_ratio = std::max(worst_ratio, ratio);
                }
                ++cases;
            }
        }
    }
    o.require(worst_ratio <= 1.05, "rearrangement too far from optimum");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(cases) + " cases, worst rearrange ratio " + fmt(worst_ratio);
    return o;
}

// 6. Torsion distances to the local limit and the minimum-value probe.
Outcome s_to_one() {
    Outcome o;
    const auto g = grid_1d(64);
    const auto t = sweep_torsion(Mask::full(g), IsoParams{0.5, 2.0, 1.0}, {0.5, 0.7, 0.9, 0.99});
    const auto d = t.column("distance");
    for (std::size_t i = 1; i < d.size(); ++i) o.require(d[i] <= 1.05 * d[i - 1], "distance increased beyond 5%");
    for (double c : t.column("converged")) o.require(c == 1.0, "sweep solve did not converge");
    std::string probe;
    const auto g10 = grid_1d(10);
    for (auto kind : {CostKind::first_eigenvalue, CostKind::torsional_compliance}) {
        const auto m = min_value_convergence_probe(g10, kind, 2.0, 4.0 * g10->h(), {0.6, 0.95});
        o.require(m.meta("trend") == std::optional<std::string>("pass"), std::string("min probe trend ") + to_string(kind));
        probe += ", " + std::string(to_string(kind)) + " gaps " + fmt(std::stod(*m.meta("first_gap"))) + " -> " +
                 fmt(std::stod(*m.meta("last_gap")));
    }
    std::string dist = "distances";
    for (double x : d) dist += " " + fmt(x);
    o.detail += (o.detail.empty() ? "" : "; ") + dist + probe;
    return o;
}

// 7. BBM ratio stabilizes between s = 0.99 and 0.999.
Outcome bbm() {
    Outcome o;
    const auto g = grid_1d(512);
    std::string detail;
    for (auto [p, limit] : {std::pair{2.0, 0.05}, std::pair{3.0, 0.08}}) {
        const auto t = bbm_ratio(reference_bump(g), p, {0.99, 0.999});
        const auto r = t.column("ratio");
        const double change = std::abs(r[1] - r[0]) / r[0];
        o.require(change <= limit, "ratio change too large");
        detail += (detail.empty() ? "" : ", ") + std::string("p=") + fmt(p) + " rho " + fmt(r[0]) + " -> " + fmt(r[1]) +
                  " (" + fmt(100 * change) + "%)";
    }
    o.detail += (o.detail.empty() ? "" : "; ") + detail;
    return o;
}

// 8. Anisotropic parameters, per-line oracle and Poincare monotonicity.
Outcome aniso_coherence() {
    Outcome o;
    const auto r = validate_aniso(AnisoParams{{0.5, 0.5}, {2.0, 2.0}}, 2);
    o.require(std::abs(r.s_bar - 0.5) < 1e-15 && std::abs(r.sp_bar - 1.0) < 1e-15 && std::abs(r.p_star - 4.0) < 1e-14,
              "parameter values");
    Rng rng(108);
    double worst = 0;
    for (double s : {0.3, 0.5, 0.8}) {
        for (double p : {1.5, 2.0, 3.0}) {
            const AnisoParams ap{{s, s}, {p, p}};
            if (!validate_aniso(ap, 2).admissible()) continue;
            const auto g = grid_2d(8);
            const Field u = rng.field(g);
            const double ref = oracle::aniso_line_energy(u, 0, s, p) + oracle::aniso_line_energy(u, 1, s, p);
            worst = std::max(worst, std::abs(energy_aniso(u, ap) - ref) / ref);
        }
    }
    o.require(worst <= 1e-12, "per-line oracle mismatch");
    int monotone = 0;
    for (int t = 0; t < 5; ++t) {
        const auto g = grid_2d(7);
        const AnisoParams ap{{0.5, 0.8}, {2.0, 2.0}};
        const auto [a, b] = rng.nested(g);
        const double ca = poincare_estimate(a, ap), cb = poincare_estimate(b, ap);
        if (ca > 0.0 && cb > 0.0 && ca <= cb * (1.0 + 1e-8)) ++monotone;
    }
    o.require(monotone == 5, "Poincare monotonicity");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("line oracle ") + fmt(worst) + ", poincare monotone " +
                std::to_string(monotone) + "/5";
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

// 9. Byte-identical CSV outputs across runs and thread counts.
Outcome cli_determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "fracshape_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::pair<std::string, std::string>> configs{
        {"torsion", R"J({"command": "torsion", "grid": {"dim": 1, "nodes_per_axis": 512}, "params": {"s": 0.6, "p": 3}})J"},
        {"eigen", R"J({"command": "eigen", "grid": {"dim": 2, "nodes_per_axis": 16}, "params": {"s": 0.5, "p": 2}, "mask": "disk(0.4)"})J"},
        {"optimize", R"J({"command": "optimize", "grid": {"dim": 2, "nodes_per_axis": 10}, "shape": {"method": "rearrange", "c": 0.3}})J"},
        {"sweep-s", R"J({"command": "sweep-s", "grid": {"dim": 1, "nodes_per_axis": 128}, "sweep": {"s_list": [0.5, 0.9]}})J"},
    };
    int identical = 0, compared = 0;
    for (const auto& [command, text] : configs) {
        const fs::path cfg = root / (command + ".json");
        std::ofstream(cfg) << text;
        std::vector<fs::path> outs;
        for (int threads : {1, 1, 4, 4}) {
            const fs::path out = root / (command + "_" + std::to_string(outs.size()) + "_t" + std::to_string(threads));
            const std::string cmd = std::string(FRACSHAPE_BINARY) + " " + command + " --config " + cfg.string() + " --out " +
                                    out.string() + " --threads " + std::to_string(threads) + " > /dev/null";
            const int rc = std::system(cmd.c_str());
            o.require(rc == 0, command + " run failed");
            outs.push_back(out);
        }
        for (const auto& entry : fs::directory_iterator(outs.front())) {
            if (entry.path().extension() != ".csv") continue;
            const auto ref = slurp(entry.path());
            for (std::size_t k = 1; k < outs.size(); ++k) {
                ++compared;
                if (slurp(outs[k] / entry.path().filename()) == ref) {
                    ++identical;
                } else {
                    o.require(false, command + "/" + entry.path().filename().string() + " differs");
                }
            }
        }
    }
    o.require(compared > 0, "no CSV outputs produced");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(identical) + "/" + std::to_string(compared) +
                " CSV comparisons identical";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"oracle equivalence (p=2)", 30, oracle_equivalence},
        {"variational and structural suite", 60, variational_suite},
        {"order-theoretic suite", 300, order_suite},
        {"K_s structure", 120, ks_structure},
        {"shape optimization exactness", 600, shape_exactness},
        {"s->1 convergence trends", 600, s_to_one},
        {"BBM stabilization", 120, bbm},
        {"anisotropic coherence", 180, aniso_coherence},
        {"CLI determinism", 120, cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.limit_s;
        if (!in_time) out.detail += "; over time limit";
        const bool ok = out.pass && in_time;
        if (!ok) ++failed;
        std::printf("criterion %zu %s: %s (%.2f s, limit %.0f s) %s\n", i + 1, c.name, ok ? "PASS" : "FAIL", secs, c.limit_s,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
