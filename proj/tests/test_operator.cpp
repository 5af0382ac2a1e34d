#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fracshape/operator.hpp"
#include "fracshape/oracle.hpp"
#include "support.hpp"

using namespace fracshape;
using fracshape::testing::Gen;
using fracshape::testing::line;
using fracshape::testing::rel_err;
using fracshape::testing::square;

namespace {

double E(const Operator& op, const Field& u) { return op.potential(u); }

double local_energy_oracle_1d(const Field& u, double p) {
    const auto& g = *u.grid();
    const double h = g.h();
    double acc = 0.0;
    for (int a = -1; a < g.m(); ++a) {
        const double lo = a < 0 ? 0.0 : u[static_cast<std::size_t>(a)];
        const double hi = a + 1 >= g.m() ? 0.0 : u[static_cast<std::size_t>(a + 1)];
        acc += std::pow(std::abs(hi - lo) / h, p);
    }
    return h * acc;
}

std::vector<OperatorParams> param_family(int dim, double p) {
    std::vector<OperatorParams> out{IsoParams{0.3, p, 1.0}, IsoParams{0.8, p, 2.0}, IsoParams{1.0, p, 1.0}};
    if (dim == 1) out.push_back(AnisoParams{{0.6}, {p}});
    if (dim == 2) out.push_back(AnisoParams{{0.5, 0.7}, {p, p}});
    return out;
}

}  // namespace

TEST(EnergyJ, ZeroField) {
    auto g = line(8);
    EXPECT_EQ(energy_J(Field(g), IsoParams{0.5, 2.0, 1.0}), 0.0);
    EXPECT_EQ(apply_operator(Field(g), IsoParams{0.5, 3.0, 1.0}).max_abs(), 0.0);
}

TEST(EnergyJ, ThreeNodeIndicatorByHand) {
    // Pairs: four ordered pairs at distance h, each |1|^2 / h^2, times h^2 -> 4.
    // Tail: gaps 1/2 on both sides, sigma = 1 -> T = 4; 2 h |1|^2 T = 8/3.
    auto g = line(3, 0);
    const Field u(g, std::vector<double>{0.0, 1.0, 0.0});
    EXPECT_NEAR(energy_J(u, IsoParams{0.5, 2.0, 1.0}), 0.5 * (4.0 + 8.0 / 3.0), 1e-14);
}

TEST(EnergyJ, ThreeNodeWithPaddingMatchesBruteForce) {
    auto g = line(3, 2);
    Gen gen(21);
    const Field u = gen.field(g);
    const double s = 0.4, p = 2.5, h = g->h(), sigma = s * p;
    double acc = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!g->is_interior(i)) continue;
        for (std::size_t j = 0; j < g->size(); ++j) {
            if (j == i) continue;
            const double w = std::pow(std::abs(g->coord(i, 0) - g->coord(j, 0)), -1.0 - sigma);
            // Interior pairs appear twice (both orders); padding pairs are
            // the exterior part, counted twice through the symmetric form.
            acc += (g->is_interior(j) ? h * h : 2.0 * h * h) * std::pow(std::abs(u[i] - u[j]), p) * w;
        }
        const double x = g->coord(i, 0);
        acc += 2.0 * h * std::pow(std::abs(u[i]), p) * (std::pow(x + 2 * h, -sigma) + std::pow(1 + 2 * h - x, -sigma)) / sigma;
    }
    EXPECT_NEAR(energy_J(u, IsoParams{s, p, 1.0}), (1.0 - s) * acc, 1e-13 * acc);
}

TEST(EnergyJ, Homogeneity) {
    Gen gen(22);
    auto g = line(24);
    const Field u = gen.field(g);
    const IsoParams ip{0.5, 3.0, 1.0};
    EXPECT_NEAR(energy_J(u * 2.0, ip), 8.0 * energy_J(u, ip), 1e-12 * energy_J(u * 2.0, ip));
}

TEST(EnergyLocal, ZeroAndRampOracle) {
    auto g = line(64, 1);
    EXPECT_EQ(energy_local(Field(g), 2.0), 0.0);
    const Field ramp = Field::from_function(g, [](double x, double) { return x; });
    const double ref = local_energy_oracle_1d(ramp, 2.0);
    EXPECT_NEAR(energy_local(ramp, 2.0), ref, 1e-13 * ref);
    // Interior slope 1 plus the jump down to zero at the right end.
    EXPECT_NEAR(ref, 63.0 / 64.0 + std::pow(1.0 / 128.0, 2) * 64 + std::pow(1.0 - 1.0 / 128.0, 2) * 64, 1e-12);
}

TEST(EnergyLocal, RandomOracleAndHomogeneity) {
    Gen gen(23);
    auto g = line(17, 2);
    for (double p : {1.5, 2.0, 3.0}) {
        const Field u = gen.field(g);
        const double ref = local_energy_oracle_1d(u, p);
        EXPECT_NEAR(energy_local(u, p), ref, 1e-13 * ref);
        EXPECT_NEAR(energy_local(u * -1.7, p), std::pow(1.7, p) * energy_local(u, p), 1e-12 * ref * 3);
    }
}

TEST(ApplyOperator, OddnessAndHomogeneity) {
    Gen gen(24);
    for (int dim : {1, 2}) {
        auto g = dim == 1 ? line(20) : square(7);
        for (double p : {1.5, 2.0, 3.0}) {
            for (const auto& params : param_family(dim, p)) {
                const Operator op(g, params);
                const Field u = gen.field(g);
                const Field a = op.apply(u);
                EXPECT_EQ((op.apply(u * -1.0) + a).max_abs(), 0.0);
                const double alpha = gen.uniform(0.2, 3.0);
                const Field lhs = op.apply(u * alpha);
                const Field rhs = a * std::pow(alpha, p - 1.0);
                EXPECT_LE((lhs - rhs).max_abs(), 1e-12 * rhs.max_abs());
                EXPECT_NEAR(op.energy(u * alpha), std::pow(alpha, p) * op.energy(u), 1e-12 * std::pow(alpha, p) * op.energy(u));
            }
        }
    }
}

TEST(ApplyOperator, GateauxFiniteDifference) {
    Gen gen(25);
    for (int dim : {1, 2}) {
        auto g = dim == 1 ? line(24) : square(6);
        for (double p : {1.5, 2.0, 3.0}) {
            for (const auto& params : param_family(dim, p)) {
                const Operator op(g, params);
                for (int t = 0; t < 10; ++t) {
                    const Field u = gen.field(g), v = gen.field(g);
                    const double eps = 1e-6;
                    const double fd = (E(op, u + v * eps) - E(op, u - v * eps)) / (2 * eps);
                    const double an = inner(op.apply(u), v);
                    EXPECT_LE(std::abs(fd - an), 1e-5 * std::max(std::abs(an), 1e-3 * op.energy(u))) << "dim " << dim << " p " << p;
                }
            }
        }
    }
}

TEST(ApplyOperator, Monotone) {
    Gen gen(26);
    for (int dim : {1, 2}) {
        auto g = dim == 1 ? line(20) : square(6);
        for (double p : {1.5, 2.0, 3.0}) {
            for (const auto& params : param_family(dim, p)) {
                const Operator op(g, params);
                for (int t = 0; t < 10; ++t) {
                    const Field u = gen.field(g), v = gen.field(g);
                    EXPECT_GE(inner(op.apply(u) - op.apply(v), u - v), -1e-12);
                }
            }
        }
    }
}

TEST(ApplyOperator, DualityWithEnergy) {
    Gen gen(27);
    auto g = square(6);
    for (double p : {1.5, 2.0, 3.0}) {
        for (const auto& params : param_family(2, p)) {
            const Operator op(g, params);
            const Field u = gen.field(g);
            EXPECT_NEAR(inner(op.apply(u), u), op.energy(u), 1e-12 * op.energy(u));
        }
    }
}

TEST(ApplyOperator, LocalRejectedByIsoOperator) {
    auto g = line(8);
    EXPECT_THROW(IsoOperator(g, IsoParams{1.0, 2.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(Operator(g, IsoParams{0.0, 2.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(Operator(g, IsoParams{0.5, 1.0, 1.0}), std::invalid_argument);
}

TEST(Tails, PositiveAndGrowingTowardBoundary) {
    for (int dim : {1, 2}) {
        auto g = dim == 1 ? line(16) : square(10);
        const IsoOperator op(g, IsoParams{0.5, 2.0, 1.0});
        const auto& t = op.tails();
        for (double v : t) EXPECT_GT(v, 0.0);
        // Along the first row, from the middle toward the left edge.
        const int n = g->n();
        const std::size_t row = dim == 1 ? 0 : static_cast<std::size_t>(n / 2) * static_cast<std::size_t>(n);
        for (int i = (n - 1) / 2; i > 0; --i) EXPECT_GT(t[row + static_cast<std::size_t>(i - 1)], t[row + static_cast<std::size_t>(i)]);
    }
}

TEST(Tails, TwoDimensionalQuadratureConverges) {
    const double a = exterior_tail_2d(0.3, 0.6, 0, 1, 0, 1, 1.0, 32);
    const double b = exterior_tail_2d(0.3, 0.6, 0, 1, 0, 1, 1.0, 64);
    const double c = exterior_tail_2d(0.3, 0.6, 0, 1, 0, 1, 1.0, 128);
    EXPECT_NEAR(b, c, 1e-10 * c);
    EXPECT_NEAR(a, c, 1e-6 * c);
}

TEST(Aniso, ZeroField) {
    auto g = square(6);
    EXPECT_EQ(energy_aniso(Field(g), AnisoParams{{0.5, 0.5}, {2, 2}}), 0.0);
}

TEST(Aniso, PerLineOracle) {
    Gen gen(28);
    auto g = square(7, 2);
    for (double s : {0.3, 0.5, 0.9}) {
        for (double p : {1.5, 2.0, 3.0}) {
            const AnisoParams ap{{s, s}, {p, p}};
            if (!validate_aniso(ap, 2).admissible()) continue;
            const Field u = gen.field(g);
            const AnisoOperator op(g, ap);
            for (int axis : {0, 1}) {
                const double ref = oracle::aniso_line_energy(u, axis, s, p);
                EXPECT_NEAR(op.axis_energy(u, axis), ref, 1e-12 * ref) << "s " << s << " p " << p << " axis " << axis;
            }
            EXPECT_NEAR(op.energy(u), oracle::aniso_line_energy(u, 0, s, p) + oracle::aniso_line_energy(u, 1, s, p), 1e-12 * op.energy(u));
        }
    }
}

TEST(Aniso, OneDimensionalOracle) {
    Gen gen(29);
    auto g = line(15, 3);
    const Field u = gen.field(g);
    const double ref = oracle::aniso_line_energy(u, 0, 0.7, 2.5);
    EXPECT_NEAR(energy_aniso(u, AnisoParams{{0.7}, {2.5}}), ref, 1e-12 * ref);
}

TEST(Aniso, AxisSwapSymmetry) {
    Gen gen(30);
    auto g = square(6, 1);
    const Field u = gen.field(g);
    std::vector<double> t(g->size(), 0.0);
    for (int i = 0; i < g->m(); ++i) {
        for (int j = 0; j < g->m(); ++j) t[g->index(j, i)] = u[g->index(i, j)];
    }
    const Field ut(g, t);
    const AnisoParams a{{0.4, 0.6}, {2.0, 2.0}}, b{{0.6, 0.4}, {2.0, 2.0}};
    EXPECT_NEAR(energy_aniso(u, a), energy_aniso(ut, b), 1e-13 * energy_aniso(u, a));
    // Unequal exponents: the swapped order violates sortedness, so compare
    // the directional energies directly.
    const AnisoParams c{{0.5, 0.7}, {2.0, 2.0}};
    const AnisoOperator oc(g, c);
    const AnisoOperator od(g, AnisoParams{{0.7, 0.5}, {2.0, 2.0}});
    EXPECT_NEAR(oc.axis_energy(u, 0), od.axis_energy(ut, 1), 1e-13 * oc.axis_energy(u, 0));
}

TEST(Aniso, LocalAxisUsesTwoOverP) {
    Gen gen(31);
    auto g = line(20);
    const Field u = gen.field(g);
    for (double p : {1.5, 2.0, 3.0}) {
        EXPECT_NEAR(energy_aniso(u, AnisoParams{{1.0}, {p}}), 2.0 / p * energy_local(u, p), 1e-13 * energy_local(u, p));
    }
}

TEST(Aniso, InadmissibleRejectedWithConditionName) {
    auto g = square(4);
    try {
        AnisoOperator(g, AnisoParams{{0.5, 0.5}, {3.0, 2.0}});
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("sorted"), std::string::npos);
    }
}

TEST(ValidateAniso, ReferenceValues) {
    const auto r = validate_aniso(AnisoParams{{0.5, 0.5}, {2, 2}}, 2);
    EXPECT_DOUBLE_EQ(r.s_bar, 0.5);
    EXPECT_DOUBLE_EQ(r.sp_bar, 1.0);
    EXPECT_DOUBLE_EQ(r.p_star, 4.0);
    EXPECT_TRUE(r.admissible());
}

TEST(ValidateAniso, DegenerateAndFailing) {
    const auto r = validate_aniso(AnisoParams{{1, 1}, {2, 2}}, 2);
    EXPECT_FALSE(r.conditions[2].applicable);
    EXPECT_TRUE(r.admissible());
    const auto bad = validate_aniso(AnisoParams{{0.5, 0.5}, {3, 2}}, 2);
    EXPECT_FALSE(bad.conditions[1].passed);
    EXPECT_FALSE(bad.admissible());
    const auto one = validate_aniso(AnisoParams{{0.5}, {2}}, 1);
    EXPECT_FALSE(one.conditions[2].applicable);
    EXPECT_THROW(validate_aniso(AnisoParams{{0.5}, {2}}, 2), std::invalid_argument);
    // sp_bar = 1.304, p* = 7.5 <= p_2.
    EXPECT_FALSE(validate_aniso(AnisoParams{{0.5, 0.5}, {1.5, 10}}, 2).admissible());
    EXPECT_TRUE(validate_aniso(AnisoParams{{0.5, 0.5}, {1.5, 5}}, 2).admissible());
    // sp_bar >= n leaves p* undefined.
    const auto super = validate_aniso(AnisoParams{{0.9, 0.9}, {2, 3}}, 2);
    EXPECT_FALSE(super.conditions[2].applicable);
    EXPECT_TRUE(std::isinf(super.p_star));
}
