#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fracshape/grid.hpp"
#include "fracshape/parallel.hpp"
#include "support.hpp"

using namespace fracshape;
using fracshape::testing::Gen;
using fracshape::testing::line;
using fracshape::testing::square;

TEST(Grid, CellCentersWithoutPadding) {
    auto g = line(4, 0);
    EXPECT_EQ(g->size(), 4u);
    EXPECT_DOUBLE_EQ(g->h(), 0.25);
    const std::vector<double> expect{0.125, 0.375, 0.625, 0.875};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g->coord(i, 0), expect[i]);
}

TEST(Grid, PaddingNodesAreExteriorAndZero) {
    auto g = line(4, 2);
    EXPECT_EQ(g->size(), 8u);
    EXPECT_EQ(g->interior_nodes().size(), 4u);
    for (std::size_t i : {0u, 1u, 6u, 7u}) EXPECT_FALSE(g->is_interior(i));
    const Field f = Field::constant(g, 3.0);
    for (std::size_t i : {0u, 1u, 6u, 7u}) EXPECT_EQ(f[i], 0.0);
    EXPECT_THROW(Field(g, std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0}), std::invalid_argument);
}

TEST(Grid, SquareNodeCount) {
    auto g = square(8, 1);
    EXPECT_EQ(g->size(), 100u);
    EXPECT_DOUBLE_EQ(g->h(), 0.125);
    EXPECT_EQ(g->interior_nodes().size(), 64u);
    const auto node = g->index(3, 5);
    EXPECT_EQ(g->multi_index(node)[0], 3);
    EXPECT_EQ(g->multi_index(node)[1], 5);
    EXPECT_DOUBLE_EQ(g->coord(node, 1), (5 - 1 + 0.5) * 0.125);
}

TEST(Grid, RejectsBadSpecs) {
    GridSpec s;
    s.dim = 3;
    EXPECT_THROW(build_grid(s), std::invalid_argument);
    s = GridSpec{};
    s.nodes_per_axis = 1;
    EXPECT_THROW(build_grid(s), std::invalid_argument);
    s = GridSpec{2, {0, 0}, {1, 2}, 4, 1};
    EXPECT_THROW(build_grid(s), std::invalid_argument);
    s = GridSpec{1, {1}, {0}, 4, 1};
    EXPECT_THROW(build_grid(s), std::invalid_argument);
    s = GridSpec{1, {0}, {1}, 4, -1};
    EXPECT_THROW(build_grid(s), std::invalid_argument);
}

TEST(Grid, FieldRejectsNonFinite) {
    auto g = line(3, 0);
    EXPECT_THROW(Field(g, std::vector<double>{0, NAN, 0}), std::invalid_argument);
    EXPECT_THROW(Field(g, std::vector<double>{0, INFINITY, 0}), std::invalid_argument);
}

TEST(LpNorm, ZeroAndDirectFormula) {
    auto g = line(2, 0);
    EXPECT_EQ(lp_norm(Field(g), 2.0), 0.0);
    EXPECT_DOUBLE_EQ(lp_norm(Field::constant(g, 1.0), 2.0), 1.0);
    EXPECT_THROW(lp_norm(Field(g), 0.5), std::invalid_argument);
}

TEST(LpNorm, ReversedSummationOracle) {
    Gen gen(11);
    auto g = square(9, 2);
    for (int t = 0; t < 10; ++t) {
        const Field u = gen.field(g);
        double acc = 0.0;
        for (std::size_t i = u.size(); i-- > 0;) acc += std::pow(std::abs(u[i]), 3.0);
        const double ref = std::cbrt(g->cell_volume() * acc);
        EXPECT_NEAR(lp_norm(u, 3.0), ref, 1e-14 * ref);
    }
}

TEST(LpNorm, Homogeneity) {
    Gen gen(12);
    auto g = line(33);
    for (int t = 0; t < 20; ++t) {
        const Field u = gen.field(g);
        const double a = gen.uniform(-5, 5);
        const double p = gen.uniform(1.0, 4.0);
        const double lhs = lp_norm(u * a, p);
        const double rhs = std::abs(a) * lp_norm(u, p);
        EXPECT_NEAR(lhs, rhs, 1e-13 * rhs);
    }
}

TEST(Mask, PredicateVolumes) {
    auto g = line(10, 2);
    EXPECT_DOUBLE_EQ(mask_volume(mask_from_predicate(g, [](double, double) { return true; })), 1.0);
    EXPECT_EQ(mask_volume(mask_from_predicate(g, [](double, double) { return false; })), 0.0);
    const Mask m = mask_from_predicate(g, [](double x, double) { return x < 0.35; });
    EXPECT_EQ(m.count(), 3u);
    EXPECT_NEAR(m.volume(), 0.3, 1e-15);
    auto s = square(4, 1, 0.0, 2.0);
    EXPECT_DOUBLE_EQ(mask_volume(Mask::full(s)), 4.0);
}

TEST(Mask, PaddingCannotBeSet) {
    auto g = line(4, 1);
    EXPECT_THROW(Mask(g).with(0, true), std::invalid_argument);
    std::vector<char> c(g->size(), 0);
    c.at(c.size() - 1) = 1;
    EXPECT_THROW(Mask(g, c), std::invalid_argument);
}

TEST(Mask, VolumeAdditivityOnDisjointMasks) {
    Gen gen(13);
    auto g = square(7, 1);
    for (int t = 0; t < 20; ++t) {
        const Mask a = gen.mask(g);
        const Mask b = gen.mask(g).minus(a);
        EXPECT_NEAR(a.united(b).volume(), a.volume() + b.volume(), 1e-14);
        EXPECT_EQ(a.united(b).count(), a.count() + b.count());
    }
}

TEST(Mask, SetAlgebraAndOrder) {
    auto g = line(6, 1);
    const std::vector<int> fa{1, 1, 0, 0, 1, 0}, fb{1, 0, 0, 1, 1, 1};
    const Mask a = Mask::from_interior(g, fa), b = Mask::from_interior(g, fb);
    EXPECT_EQ(a.intersected(b).interior_flags(), (std::vector<int>{1, 0, 0, 0, 1, 0}));
    EXPECT_EQ(a.minus(b).interior_flags(), (std::vector<int>{0, 1, 0, 0, 0, 0}));
    EXPECT_TRUE(a.intersected(b).subset_of(a));
    EXPECT_FALSE(a.subset_of(b));
    EXPECT_TRUE(b < a);
}

TEST(Field, SupportedOnZeroesOutside) {
    Gen gen(14);
    auto g = square(6, 2);
    const Mask m = gen.mask(g);
    const Field u = gen.field(g).supported_on(m);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!m.contains(i)) EXPECT_EQ(u[i], 0.0);
    }
}

TEST(Field, InnerProductMatchesWeightedSum) {
    Gen gen(15);
    auto g = line(20);
    const Field u = gen.field(g), v = gen.field(g);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    EXPECT_NEAR(inner(u, v), g->h() * acc, 1e-14);
}

TEST(Parallel, PairwiseSumIsOrderFixedAndThreadIndependent) {
    Gen gen(16);
    std::vector<double> v(1000);
    for (auto& x : v) x = gen.uniform(-1, 1);
    const double a = pairwise_sum(v);
    double naive = 0.0;
    for (double x : v) naive += x;
    EXPECT_NEAR(a, naive, 1e-12);
    std::vector<double> out1(300000), out4(300000);
    set_threads(1);
    parallel_for(out1.size(), [&](std::size_t i) { out1[i] = std::sin(static_cast<double>(i)); }, 1);
    set_threads(4);
    parallel_for(out4.size(), [&](std::size_t i) { out4[i] = std::sin(static_cast<double>(i)); }, 1);
    set_threads(0);
    EXPECT_EQ(out1, out4);
}
