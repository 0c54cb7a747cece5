#include <gtest/gtest.h>

#include <cmath>

#include "hetgrad/geometry.hpp"

using namespace hetgrad;

TEST(Geometry, TrapezoidWeightsIntegrateExactly) {
    const Grid g1(Domain::interval(0.0, 2.0), 33);
    EXPECT_NEAR(g1.weights().sum(), 2.0, 1e-14);
    const Grid g2(Domain::rectangle(0.0, 1.0, -1.0, 2.0), 9);
    EXPECT_NEAR(g2.weights().sum(), 3.0, 1e-14);
    double lin = 0.0;
    for (int i = 0; i < g2.node_count(); ++i) lin += g2.weights()[i] * (g2.coord(i)[0] + 2 * g2.coord(i)[1]);
    EXPECT_NEAR(lin, 0.5 * 3.0 + 2.0 * 1.5, 1e-13);
}

TEST(Geometry, EdgeAndPointWeights) {
    const Grid g(Domain::rectangle(0.0, 1.0, 0.0, 1.0), 11);
    EXPECT_EQ(g.edge_count(), 2 * 10 * 11);
    EXPECT_NEAR(g.edge_weights().head(g.x_edge_count()).sum(), 1.0, 1e-14);
    EXPECT_NEAR(g.point_weights().sum(), 1.0, 1e-14);
    const auto p = g.edge_point(g.y_edge(3, 4));
    EXPECT_NEAR(p[0], 0.3, 1e-15);
    EXPECT_NEAR(p[1], 0.45, 1e-15);
    const auto en = g.edge_nodes(g.x_edge(2, 5));
    EXPECT_EQ(en[0], g.index(2, 5));
    EXPECT_EQ(en[1], g.index(3, 5));
}

TEST(Geometry, BoundaryNodesAndNormals) {
    const Grid g(Domain::rectangle(0.0, 1.0, 0.0, 1.0), 5);
    EXPECT_EQ(g.boundary().size(), 16u);
    double perimeter = 0.0;
    for (const auto& b : g.boundary()) {
        perimeter += b.weight;
        const double nn = std::hypot(b.normal[0], b.normal[1]);
        EXPECT_NEAR(nn, 1.0, 1e-14);
        if (b.faces.size() == 2) EXPECT_EQ(b.weight, 0.0);
    }
    EXPECT_NEAR(perimeter, 3.0, 1e-14);  // corners excluded: 4 faces x 3 interior nodes x 0.25
    EXPECT_EQ(g.nodes_on({Face::left}).size(), 5u);
    const Grid g1(Domain::interval(0.0, 1.0), 8);
    ASSERT_EQ(g1.boundary().size(), 2u);
    EXPECT_EQ(g1.boundary()[0].normal[0], -1.0);
    EXPECT_EQ(g1.boundary()[1].weight, 1.0);
}

TEST(Geometry, NormsAndTrace) {
    auto g = std::make_shared<const Grid>(Domain::interval(0.0, 1.0), 101);
    Eigen::VectorXd v(g->node_count());
    for (int i = 0; i < g->node_count(); ++i) v[i] = g->coord(i)[0];
    const GridFunction u(g, 1, v);
    EXPECT_NEAR(mean(u), 0.5, 1e-14);
    EXPECT_NEAR(lp_norm(u, 2.0), std::sqrt(1.0 / 3.0), 1e-4);
    const auto tr = trace_restrict(u, {Face::right});
    ASSERT_EQ(tr.size(), 1);
    EXPECT_EQ(tr[0], 1.0);
}

class HorizonProperties : public ::testing::TestWithParam<HorizonProfile> {};

TEST_P(HorizonProperties, BoundedPositiveVanishing) {
    for (int n : {1, 2}) {
        const Domain d = n == 1 ? Domain::interval(0.0, 1.0) : Domain::rectangle(0.0, 1.0, 0.0, 2.0);
        const Grid g(d, n == 1 ? 129 : 33);
        const HorizonFunction hz(d, 0.1, GetParam());
        const auto rep = check_horizon(g, hz);
        EXPECT_TRUE(rep.bounded_by_distance);
        EXPECT_TRUE(rep.zero_on_boundary);
        EXPECT_TRUE(rep.positive_inside);
        EXPECT_GT(rep.decay_constant, 0.0);
        for (int i = 0; i < g.node_count(); ++i) {
            const auto x = g.coord(i);
            EXPECT_LE(hz.at(x), 0.1 + 1e-15);
            EXPECT_LE(hz.at(x), d.dist_to_boundary(x.data()) + 1e-15);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Profiles, HorizonProperties,
                         ::testing::Values(HorizonProfile::exponential, HorizonProfile::polynomial_fixture));

TEST(Geometry, HorizonDecaysTowardsBoundary) {
    const Domain d = Domain::interval(0.0, 1.0);
    const HorizonFunction hz(d, 0.05, HorizonProfile::exponential);
    double prev = 0.0;
    for (double x : {1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.3}) {
        const double v = hz.at({x, 0.0});
        EXPECT_GT(v, 0.0) << "x=" << x;
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_LT(hz.at({1e-2, 0.0}), 1e-6 * hz.delta_bar());
    EXPECT_EQ(hz.at({0.0, 0.0}), 0.0);
}

TEST(Geometry, RejectsBadInput) {
    EXPECT_THROW(Grid(Domain::interval(0.0, 1.0), 1), std::invalid_argument);
    EXPECT_THROW(Domain::interval(1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(HorizonFunction(Domain::interval(0.0, 1.0), -0.1, HorizonProfile::exponential),
                 std::invalid_argument);
    EXPECT_THROW(face_from_string("front"), std::invalid_argument);
}
