#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

#include "hetgrad/solvers.hpp"

using namespace hetgrad;

namespace {

constexpr double kPi = std::numbers::pi;

Discretization make_disc(int n, int N, double delta_bar) {
    const Domain d = n == 1 ? Domain::interval(0.0, 1.0) : Domain::rectangle(0.0, 1.0, 0.0, 1.0);
    auto g = std::make_shared<const Grid>(d, N);
    auto kp = std::make_shared<const KernelProfiles>(build_kernel(Family::fractional, n, 0.5));
    auto hz = std::make_shared<const HorizonFunction>(d, delta_bar, HorizonProfile::exponential);
    return Discretization::build(g, kp, hz);
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Solvers, EigenvaluesOrdered) {
    Eigen::MatrixXd A(3, 3);
    A << 0, -1, 0, 1, 0, 0, 0, 0, -2;
    const auto ev = eig_dense(A);
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_NEAR(ev[0].real(), -2.0, 1e-14);
    EXPECT_NEAR(ev[1].imag(), -1.0, 1e-14);
    EXPECT_NEAR(ev[2].imag(), 1.0, 1e-14);
    EXPECT_THROW(eig_dense(Eigen::MatrixXd::Identity(5, 5), 4), BudgetExceeded);
}

TEST(Solvers, WeightedSingularValues) {
    Eigen::MatrixXd A(3, 2);
    A << 1, 2, 3, 4, 5, 7;
    Eigen::VectorXd wr(3), wc(2);
    wr << 0.5, 2.0, 1.0;
    wc << 4.0, 0.25;
    const Eigen::MatrixXd M = wr.cwiseSqrt().asDiagonal() * A * wc.cwiseSqrt().cwiseInverse().asDiagonal();
    const Eigen::VectorXd ref = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues();
    const Eigen::VectorXd got = svd_weighted(A, wr, wc);
    ASSERT_EQ(got.size(), 2);
    EXPECT_NEAR(got[0], ref[0], 1e-13);
    EXPECT_NEAR(got[1], ref[1], 1e-13);
    Eigen::MatrixXd B(2, 1);
    B << 1.0, 0.0;
    EXPECT_NEAR(svd_weighted(A, wr, wc, &B)[0], M.col(0).norm(), 1e-13);
}

TEST(Solvers, ConstraintNames) {
    for (auto c : {Constraint::dirichlet, Constraint::neumann_meanzero, Constraint::mixed})
        EXPECT_EQ(constraint_from_string(to_string(c)), c);
    EXPECT_EQ(constraint_from_string("neumann"), Constraint::neumann_meanzero);
    EXPECT_THROW(constraint_from_string("robin"), std::invalid_argument);
}

class RoundTrip : public ::testing::TestWithParam<std::tuple<int, Constraint>> {};

TEST_P(RoundTrip, ManufacturedSolutionRecovered) {
    const auto [n, c] = GetParam();
    const auto disc = make_disc(n, n == 1 ? 129 : 13, 0.1);
    const Grid& g = *disc.grid;
    auto exact = [](double x, double y) { return std::sin(kPi * x) + x * x + 0.5 * y; };
    Eigen::VectorXd u = sample_nodes(g, exact);
    BoundaryData bc{{Face::left}, exact, [](double, double) { return 0.0; }};
    const Eigen::VectorXd F = Eigen::VectorXd::Zero(g.node_count());
    if (c == Constraint::neumann_meanzero) u.array() -= g.weights().dot(u) / g.weights().sum();
    LinearSystem sys = build_system(disc, c, F, bc);
    // right-hand side produced by the assembled operator itself
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.rhs.size());
    x.head(g.node_count()) = u;
    sys.rhs = sys.matrix.mat * x;
    for (int i : sys.constrained) sys.rhs[i] = u[i];
    const auto r = solve_linear(sys, disc.grid);
    EXPECT_LE(max_abs(r.u.values - u), 1e-8);
    EXPECT_LE(r.residual, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Modes, RoundTrip,
                         ::testing::Combine(::testing::Values(1, 2),
                                            ::testing::Values(Constraint::dirichlet, Constraint::mixed,
                                                              Constraint::neumann_meanzero)));

TEST(Solvers, DirichletLoadFromStrongOperator) {
    const auto disc = make_disc(1, 129, 0.05);
    const Grid& g = *disc.grid;
    auto exact = [](double x, double) { return std::exp(x) * std::sin(3 * x); };
    const Eigen::VectorXd u = sample_nodes(g, exact);
    const Eigen::VectorXd F = disc.laplacian.apply(u);
    const auto sys = build_system(disc, Constraint::dirichlet, F, {{}, exact, {}});
    const auto r = solve_linear(sys, disc.grid);
    EXPECT_LE(max_abs(r.u.values - u), 1e-8);
}

TEST(Solvers, MixedProblemApproachesClassical) {
    // -u'' = 1, u(0) = 0, u'(1) = 0 has u = x - x^2/2; small horizons stay close to it.
    const auto disc = make_disc(1, 257, 0.02);
    const Grid& g = *disc.grid;
    const Eigen::VectorXd F = Eigen::VectorXd::Ones(g.node_count());
    auto zero = [](double, double) { return 0.0; };
    const auto r = solve_linear(build_system(disc, Constraint::mixed, F, {{Face::left}, zero, zero}), disc.grid);
    const Eigen::VectorXd ref = sample_nodes(g, [](double x, double) { return x - 0.5 * x * x; });
    EXPECT_LE(max_abs(r.u.values - ref), 5e-3);
    EXPECT_EQ(r.u.values[0], 0.0);
}

TEST(Solvers, NeumannCompatibility) {
    const auto disc = make_disc(1, 65, 0.05);
    const Grid& g = *disc.grid;
    const Eigen::VectorXd F = Eigen::VectorXd::Ones(g.node_count());
    auto zero = [](double, double) { return 0.0; };
    try {
        build_system(disc, Constraint::neumann_meanzero, F, {{}, {}, zero});
        FAIL() << "incompatible data accepted";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("incompatible Neumann data"), std::string::npos);
    }
    // int F + int_boundary h = 1 - 2 * 0.5 = 0
    const auto sys = build_system(disc, Constraint::neumann_meanzero, F, {{}, {}, [](double, double) { return -0.5; }});
    EXPECT_TRUE(sys.bordered);
    const auto r = solve_linear(sys, disc.grid);
    EXPECT_NEAR(g.weights().dot(r.u.values), 0.0, 1e-12);
    EXPECT_NEAR(r.multiplier, 0.0, 1e-8);
}

TEST(Solvers, MixedNeedsDirichletPart) {
    const auto disc = make_disc(1, 17, 0.05);
    auto zero = [](double, double) { return 0.0; };
    EXPECT_THROW(build_system(disc, Constraint::mixed, Eigen::VectorXd::Zero(17), {{}, zero, zero}),
                 std::invalid_argument);
    EXPECT_THROW(build_system(disc, Constraint::dirichlet, Eigen::VectorXd::Zero(16), {{}, zero, zero}),
                 std::invalid_argument);
}

TEST(Poincare, ClassicalConstantsForSmallHorizon) {
    const auto disc = make_disc(1, 129, 0.05);
    const Grid& g = *disc.grid;
    PoincareOptions opt;
    opt.gamma = {Face::left};
    const auto mz = poincare_constant(disc.D, g, Subspace::mean_zero, 2.0, opt);
    const auto tz = poincare_constant(disc.D, g, Subspace::trace_zero_on_gamma, 2.0, opt);
    EXPECT_EQ(mz.method, "svd");
    EXPECT_FALSE(mz.lower_bound);
    EXPECT_NEAR(mz.constant_estimate, 1.0 / kPi, 0.01 / kPi);
    EXPECT_NEAR(tz.constant_estimate, 2.0 / kPi, 0.02 / kPi);
    EXPECT_THROW(poincare_constant(disc.D, g, Subspace::all, 2.0, opt), std::domain_error);
}

TEST(Poincare, VanishingSetAndSampledNorms) {
    const auto disc = make_disc(1, 65, 0.05);
    const Grid& g = *disc.grid;
    PoincareOptions opt;
    opt.U = {31, 32, 33};
    const auto vu = poincare_constant(disc.D, g, Subspace::vanish_on_U, 2.0, opt);
    EXPECT_GT(vu.constant_estimate, 0.0);
    EXPECT_TRUE(std::isfinite(vu.constant_estimate));
    EXPECT_THROW(poincare_constant(disc.D, g, Subspace::vanish_on_U, 2.0, PoincareOptions{}), std::invalid_argument);
    const auto s3 = poincare_constant(disc.D, g, Subspace::mean_zero, 3.0, opt);
    EXPECT_EQ(s3.method, "sampled");
    EXPECT_TRUE(s3.lower_bound);
    EXPECT_GE(s3.samples, 1000);
    EXPECT_GT(s3.constant_estimate, 0.0);
    const auto again = poincare_constant(disc.D, g, Subspace::mean_zero, 3.0, opt);
    EXPECT_EQ(again.constant_estimate, s3.constant_estimate);
}

TEST(Poincare, TwoDimensionalMeanZero) {
    const auto disc = make_disc(2, 13, 0.1);
    const auto r = poincare_constant(disc.D, *disc.grid, Subspace::mean_zero, 2.0);
    // classical value on the unit square is 1/pi
    EXPECT_NEAR(r.constant_estimate, 1.0 / kPi, 0.05);
}
