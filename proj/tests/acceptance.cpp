// Acceptance criteria: one PASS/FAIL line each. Exit status is nonzero only for unexpected failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "hetgrad/checks.hpp"
#include "hetgrad/commands.hpp"
#include "hetgrad/io.hpp"

using namespace hetgrad;

namespace {

constexpr double kPi = std::numbers::pi;

// Criteria whose failure is understood and documented in the README.
const std::set<int> kExpectedFail{4};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) { return format_number(v, 4); }

RunConfig base_1d() { return load_config(HETGRAD_SOURCE_DIR "/default.json"); }

RunConfig base_2d() {
    RunConfig c = base_1d();
    c.domain.type = "rectangle";
    c.domain.bounds = {0.0, 1.0, 0.0, 1.0};
    c.problem.gamma = {Face::left};
    return c;
}

Outcome kernel_identities_all() {
    struct K {
        Family f;
        double s, kappa;
    };
    double worst_mass = 0.0, worst_l1 = 0.0, worst_q0 = 0.0;
    for (const K& k : {K{Family::fractional, 0.5, NAN}, K{Family::log_fractional, 0.4, 0.7}})
        for (int n : {1, 2}) {
            const KernelProfiles kp(build_kernel(k.f, n, k.s, Cutoff::bump, k.kappa));
            const auto ki = kernel_identities(kp);
            worst_mass = std::max(worst_mass, ki.mass_error);
            worst_l1 = std::max(worst_l1, ki.l1_error);
            worst_q0 = std::max(worst_q0, ki.qhat0_error);
        }
    const double fixture = std::abs(KernelProfiles(build_kernel(Family::power_fixture, 1, 0.5)).q_profile(0.25) - 0.5);
    return {worst_mass <= 1e-6 && worst_l1 <= 1e-6 && worst_q0 <= 1e-8 && fixture <= 1e-10,
            "mass=" + fmt(worst_mass) + " l1=" + fmt(worst_l1) + " qhat0=" + fmt(worst_q0) +
                " fixture=" + fmt(fixture) + " (tol 1e-6, 1e-6, 1e-8, 1e-10)"};
}

Outcome affine() {
    const RunConfig c1 = base_1d(), c2 = base_2d();
    const double a128 = affine_error(make_setup(c1, 128)), a256 = affine_error(make_setup(c1, 256));
    const double b33 = affine_error(make_setup(c2, 33)), b65 = affine_error(make_setup(c2, 65));
    // Affine fields are reproduced to rounding, so there is no discretization error left to halve.
    auto refines = [](double coarse, double fine) { return (coarse <= 1e-12 && fine <= 1e-12) || coarse / fine >= 1.5; };
    const bool ok = a256 <= 1e-3 && b65 <= 5e-3 && refines(a128, a256) && refines(b33, b65);
    return {ok, "1D N=128/256: " + fmt(a128) + "/" + fmt(a256) + "  2D 33/65: " + fmt(b33) + "/" + fmt(b65) +
                    " (tol 1e-3, 5e-3; exact to rounding)"};
}

Outcome constants() {
    const auto s1 = make_setup(base_1d(), 256);
    const auto s2 = make_setup(base_2d(), 65);
    const double d1 = std::max(constant_residual(s1), constant_residual(s2));
    const double q1 = std::max(q_row_sum_error(s1), q_row_sum_error(s2));
    return {d1 == 0.0 && q1 <= 1e-6, "max|D1|=" + fmt(d1) + " (bitwise) max|Q1-1|=" + fmt(q1) + " (tol 1e-6)"};
}

Outcome coupling() {
    const RunConfig c = base_1d();
    const auto s128 = make_setup(c, 128), s256 = make_setup(c, 256);
    const double e128 = coupling_error_nodal(s128), e256 = coupling_error_nodal(s256);
    const double ratio = e128 / e256;
    return {ratio >= 1.7 && ratio <= 2.5, "||Du - Q grad_h u|| N=128/256: " + fmt(e128) + "/" + fmt(e256) +
                                              " ratio=" + fmt(ratio) + " (want [1.7, 2.5]); staggered identity " +
                                              fmt(coupling_error_staggered(s256))};
}

Outcome integration_by_parts() {
    const RunConfig c = base_1d();
    const auto s128 = make_setup(c, 128), s256 = make_setup(c, 256);
    const auto r128 = ibp_residual(s128, false), r256 = ibp_residual(s256, false);
    const auto comp = ibp_residual(s256, true);
    const double ratio = r128.residual / r256.residual;
    const double ch = r256.residual / s256.grid->h(0);
    return {ratio >= 1.7 && comp.residual <= 1e-3, "residual N=128/256: " + fmt(r128.residual) + "/" +
                                                       fmt(r256.residual) + " ratio=" + fmt(ratio) +
                                                       " residual/h=" + fmt(ch) + " compact=" + fmt(comp.residual) +
                                                       " (tol 1e-3)"};
}

Outcome spectrum() {
    const auto s = make_setup(base_1d(), 128);
    const auto r = spectrum_Q(s.disc->Q);
    return {r.min_real > 0.0, "min Re=" + fmt(r.min_real) + " min |lambda|=" + fmt(r.min_modulus) + " (recorded)"};
}

Outcome null_space() {
    const RunConfig c = base_1d();
    const auto s128 = make_setup(c, 128), s256 = make_setup(c, 256);
    const auto a = nullspace_D(s128.disc->D, *s128.grid), b = nullspace_D(s256.disc->D, *s256.grid);
    const double drift = std::abs(b.sigma_second - a.sigma_second) / a.sigma_second;
    const bool ok = a.dimension == 1 && b.dimension == 1 && a.constant_cosine >= 1.0 - 1e-8 &&
                    b.constant_cosine >= 1.0 - 1e-8 && drift <= 0.1;
    return {ok, "dim=" + std::to_string(a.dimension) + "/" + std::to_string(b.dimension) +
                    " cos=" + format_number(b.constant_cosine, 16) + " sigma2=" + fmt(a.sigma_second) + "/" +
                    fmt(b.sigma_second) + " drift=" + fmt(drift) + " (tol 10%)"};
}

Outcome poincare() {
    const RunConfig c = base_1d();
    const auto s128 = make_setup(c, 128), s256 = make_setup(c, 256);
    PoincareOptions po;
    po.gamma = {Face::left};
    std::ostringstream d;
    bool ok = true;
    for (Subspace sub : {Subspace::mean_zero, Subspace::trace_zero_on_gamma}) {
        const double a = poincare_constant(s128.disc->D, *s128.grid, sub, 2.0, po).constant_estimate;
        const double b = poincare_constant(s256.disc->D, *s256.grid, sub, 2.0, po).constant_estimate;
        const double rel = std::abs(b - a) / a;
        ok = ok && std::isfinite(a) && a > 0.0 && std::isfinite(b) && b > 0.0 && rel < 0.05;
        d << to_string(sub) << "=" << fmt(a) << "/" << fmt(b) << " ";
    }
    bool rejected = false;
    try {
        poincare_constant(s256.disc->D, *s256.grid, Subspace::all, 2.0, po);
    } catch (const std::domain_error&) {
        rejected = true;
    }
    d << "unconstrained " << (rejected ? "rejected" : "accepted") << " (tol 5%)";
    return {ok && rejected, d.str()};
}

Outcome linear_bvp() {
    const RunConfig c = base_1d();
    const auto s = make_setup(c, 256);
    auto exact = [](double x, double) { return std::sin(kPi * x) + x * x; };
    const Eigen::VectorXd u = sample_nodes(*s.grid, exact);
    const Eigen::VectorXd F = s.disc->laplacian.apply(u);
    const auto sol = solve_linear(build_system(*s.disc, Constraint::dirichlet, F, {{}, exact, {}}), s.grid);
    const double err = (sol.u.values - u).cwiseAbs().maxCoeff();
    bool rejected = false;
    try {
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.grid->node_count());
        build_system(*s.disc, Constraint::neumann_meanzero, one, {{}, {}, [](double, double) { return 0.0; }});
    } catch (const std::invalid_argument& e) {
        rejected = std::string(e.what()).find("incompatible Neumann data") != std::string::npos;
    }
    return {err <= 1e-8 && rejected, "round trip max error=" + fmt(err) + " (tol 1e-8); incompatible Neumann data " +
                                         (rejected ? "rejected" : "accepted")};
}

Outcome variational() {
    const RunConfig c1 = base_1d();
    const auto s1 = make_setup(c1, 256);
    std::mt19937_64 rng(c1.solver.seed);
    std::normal_distribution<double> normal;
    auto perturbed = [&](const EnergyProblem& prob, double amp) {
        Eigen::VectorXd u = initial_guess(prob);
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += amp * normal(rng);
        return make_feasible(prob, u);
    };
    const auto quad = make_energy_problem(c1.problem, s1, DensityKind::quadratic);
    const double gq = gradient_check(quad, perturbed(quad, 0.1), 20, c1.solver.seed);

    RunConfig c2 = base_2d();
    c2.horizon.delta_bar = 0.2;
    c2.problem.bc = Constraint::dirichlet;
    c2.problem.dirichlet.identity = true;
    c2.problem.load = FieldSpec{};
    const auto s2 = make_setup(c2, 17);
    const auto poly = make_energy_problem(c2.problem, s2, DensityKind::polyconvex_2d, 2);
    const double gp = gradient_check(poly, perturbed(poly, 0.1), 20, c1.solver.seed + 1);

    const auto cross = quadratic_crosscheck(c1, s1);

    MinimizeOptions opt;
    opt.grad_tol = 1e-5;
    opt.max_iter = 500;
    Eigen::VectorXd u0 = initial_guess(poly);
    for (Eigen::Index i = 0; i < u0.size(); ++i) u0[i] += 0.02 * normal(rng);
    const auto mr = minimize(poly, make_feasible(poly, u0), opt);
    bool monotone = true;
    for (std::size_t k = 1; k < mr.history.size(); ++k) monotone = monotone && mr.history[k].energy <= mr.history[k - 1].energy;
    const int iters = static_cast<int>(mr.history.size()) - 1;
    const bool ok = gq <= 1e-6 && gp <= 1e-6 && cross.l2_difference <= 1e-6 && mr.grad_norm <= 1e-5 && iters <= 500 &&
                    monotone;
    return {ok, "grad check quadratic=" + fmt(gq) + " polyconvex=" + fmt(gp) + " (tol 1e-6); minimize vs solve=" +
                    fmt(cross.l2_difference) + " (tol 1e-6); polyconvex 17x17 |grad|=" + fmt(mr.grad_norm) + " in " +
                    std::to_string(iters) + " iterations, energy " + (monotone ? "monotone" : "NOT monotone")};
}

Outcome localization() {
    const auto s = make_setup(base_1d(), 512);
    const double e1 = localization_error(s, 0.2), e2 = localization_error(s, 0.1), e3 = localization_error(s, 0.05);
    return {e1 > e2 && e2 > e3, "t=0.2/0.1/0.05: " + fmt(e1) + "/" + fmt(e2) + "/" + fmt(e3)};
}

Outcome jumps() {
    RunConfig c = base_1d();
    const auto kp = std::make_shared<const KernelProfiles>(build_kernel(Family::fractional, 1, 0.3));
    std::vector<JumpNorms> v;
    for (int N : {128, 256, 512}) v.push_back(jump_norms(make_setup(c, N, kp)));
    double lo = INFINITY, hi = 0.0;
    for (const auto& j : v) {
        lo = std::min(lo, j.nonlocal);
        hi = std::max(hi, j.nonlocal);
    }
    const double g1 = v[1].classical / v[0].classical, g2 = v[2].classical / v[1].classical;
    auto near = [](double q) { return std::abs(q / std::sqrt(2.0) - 1.0) <= 0.2; };
    return {hi / lo < 2.0 && near(g1) && near(g2), "||D 1_E|| = " + fmt(v[0].nonlocal) + "," + fmt(v[1].nonlocal) +
                                                       "," + fmt(v[2].nonlocal) + " spread=" + fmt(hi / lo) +
                                                       " (tol 2); ||grad_h 1_E|| ratios " + fmt(g1) + "," + fmt(g2) +
                                                       " (want sqrt 2 within 20%)"};
}

Outcome euler_lagrange() {
    const RunConfig c = base_1d();
    const double a = quadratic_el_residual(c, make_setup(c, 128)), b = quadratic_el_residual(c, make_setup(c, 256));
    return {a / b >= 1.7, "N=128/256: " + fmt(a) + "/" + fmt(b) + " ratio=" + fmt(a / b) + " (want >= 1.7)"};
}

Outcome reproducibility() {
    const auto dir = std::filesystem::temp_directory_path() / "hetgrad_acceptance";
    std::filesystem::create_directories(dir);
    const std::string cfg = HETGRAD_SOURCE_DIR "/default.json";
    std::string bytes[2];
    int codes[2];
    for (int k = 0; k < 2; ++k) {
        const auto path = (dir / ("verify" + std::to_string(k) + ".json")).string();
        std::ostringstream out, err;
        codes[k] = run_command({"hetgrad", "verify", "--config", cfg, "--out", path}, out, err);
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        bytes[k] = ss.str();
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    return {same && codes[0] == 0 && codes[1] == 0, std::string("reports ") + (same ? "identical" : "differ") + " (" +
                                                        std::to_string(bytes[0].size()) + " bytes), exit codes " +
                                                        std::to_string(codes[0]) + "," + std::to_string(codes[1])};
}

struct Criterion {
    int id;
    std::string name;
    double time_limit;  // seconds, 0 for none
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "kernel identities", 5.0, kernel_identities_all},
        {2, "affine reproduction", 30.0, affine},
        {3, "constant annihilation", 0.0, constants},
        {4, "coupling identity", 0.0, coupling},
        {5, "integration by parts", 0.0, integration_by_parts},
        {6, "spectrum positivity", 60.0, spectrum},
        {7, "null space of D", 0.0, null_space},
        {8, "Poincare constants", 0.0, poincare},
        {9, "linear boundary value problem", 0.0, linear_bvp},
        {10, "variational layer", 120.0, variational},
        {11, "localization", 0.0, localization},
        {12, "jump admissibility", 0.0, jumps},
        {13, "Euler-Lagrange residual", 0.0, euler_lagrange},
        {14, "reproducibility", 0.0, reproducibility},
    };
    int unexpected = 0, passed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0.0 && secs >= c.time_limit) {
            o.pass = false;
            o.detail += " runtime over " + fmt(c.time_limit) + " s";
        }
        const bool expected = kExpectedFail.count(c.id) > 0;
        if (o.pass) ++passed;
        else if (!expected) ++unexpected;
        std::printf("%s %2d %-30s %s [%.2f s]\n", o.pass ? "PASS" : (expected ? "FAIL (expected)" : "FAIL"), c.id,
                    c.name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria pass, %d unexpected failures\n", passed, criteria.size(), unexpected);
    return unexpected == 0 ? 0 : 1;
}
