#include "hetgrad/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "hetgrad/io.hpp"

namespace hetgrad {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

std::string to_string(Status s) {
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        case Status::recorded: return "recorded";
    }
    return "?";
}

json CheckResult::to_json() const {
    return {{"name", name},           {"status", to_string(status)}, {"value", value},
            {"tolerance", tolerance}, {"anchor", anchor},           {"detail", detail}};
}

int VerifyReport::count(Status s) const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [s](const auto& c) { return c.status == s; }));
}

json VerifyReport::to_json() const {
    json rows = json::array();
    for (const auto& c : checks) rows.push_back(c.to_json());
    return {{"checks", rows},
            {"pass", count(Status::pass)},
            {"fail", count(Status::fail)},
            {"recorded", count(Status::recorded)}};
}

Eigen::VectorXd make_load(const ProblemConfig& p, const Grid& g, int components) {
    const int nodes = g.node_count();
    Eigen::VectorXd F(components * nodes);
    for (int i = 0; i < nodes; ++i) {
        const auto x = g.coord(i);
        const double v = p.load.identity ? 0.0 : eval_field(p.load, g.domain(), x[0], x[1]);
        for (int a = 0; a < components; ++a) F[a * nodes + i] = v;
    }
    return F;
}

BoundaryData make_boundary_data(const ProblemConfig& p, const Domain& d) {
    BoundaryData bc;
    bc.gamma = p.bc == Constraint::dirichlet ? d.faces() : p.gamma;
    const FieldSpec gs = p.dirichlet, hs = p.flux;
    bc.g = [gs, d](double x, double y) { return eval_field(gs, d, x, y); };
    bc.h = [hs, d](double x, double y) { return eval_field(hs, d, x, y); };
    return bc;
}

EnergyProblem make_energy_problem(const ProblemConfig& p, const Setup& s, DensityKind density, int components) {
    EnergyProblem prob;
    prob.disc = s.disc;
    prob.density = make_density(density, p.p, p.alpha, p.beta);
    prob.components = components;
    prob.mode = p.bc;
    prob.gamma = p.gamma;
    prob.F = make_load(p, *s.grid, components);
    const Domain d = s.grid->domain();
    const FieldSpec gs = p.dirichlet, hs = p.flux;
    prob.g = [gs, d](double x, double y) -> std::array<double, 2> {
        if (gs.identity) return {x, y};
        const double v = eval_field(gs, d, x, y);
        return {v, v};
    };
    prob.h = [hs, d](double x, double y) -> std::array<double, 2> {
        const double v = eval_field(hs, d, x, y);
        return {v, v};
    };
    prob.prepare();
    return prob;
}

KernelIdentities kernel_identities(const KernelProfiles& kp) {
    KernelIdentities r;
    r.mass_error = std::abs(kernel_mass(kp.spec()) - kp.spec().n);
    r.l1_error = std::abs(kp.l1_norm_Q() - 1.0);
    r.qhat0_error = std::abs(kp.q_hat(0.0) - 1.0);
    return r;
}

namespace {

const Eigen::VectorXd point_weights_blocks(const Grid& g) {
    const int E = g.edge_count();
    Eigen::VectorXd w(g.n() * E);
    for (int k = 0; k < g.n(); ++k) w.segment(k * E, E) = g.point_weights();
    return w;
}

// Pointwise Euclidean norm of a point-space vector field.
double point_norm(const Eigen::VectorXd& v, int n, int E, int e) {
    double a2 = 0.0;
    for (int k = 0; k < n; ++k) a2 += v[k * E + e] * v[k * E + e];
    return std::sqrt(a2);
}

double smooth_u(const Grid& g, double x, double y) {
    return g.n() == 1 ? std::sin(2.0 * kPi * x) : std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
}

std::array<double, 2> smooth_grad(const Grid& g, double x, double y) {
    if (g.n() == 1) return {2.0 * kPi * std::cos(2.0 * kPi * x), 0.0};
    return {2.0 * kPi * std::cos(2.0 * kPi * x) * std::sin(2.0 * kPi * y),
            2.0 * kPi * std::sin(2.0 * kPi * x) * std::cos(2.0 * kPi * y)};
}

double bump(double t) { return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; }

}  // namespace

double affine_error(const Setup& s) {
    const Grid& g = *s.grid;
    const std::array<double, 2> A = g.n() == 1 ? std::array<double, 2>{2.0, 0.0} : std::array<double, 2>{2.0, -3.0};
    const Eigen::VectorXd u = sample_nodes(g, [&](double x, double y) { return A[0] * x + A[1] * y + 1.0; });
    const Eigen::VectorXd Du = s.disc->D.apply(u);
    const Eigen::VectorXd ex = sample_points(g, [&](double, double) { return A; });
    const double anorm = std::hypot(A[0], A[1]);
    double err = 0.0;
    for (int e = 0; e < g.edge_count(); ++e)
        err = std::max(err, point_norm(Du - ex, g.n(), g.edge_count(), e) / anorm);
    return err;
}

double constant_residual(const Setup& s) {
    const Eigen::VectorXd d1 = s.disc->D.apply(Eigen::VectorXd::Ones(s.grid->node_count()));
    return d1.cwiseAbs().maxCoeff();
}

double q_row_sum_error(const Setup& s) {
    const Eigen::VectorXd q1 = s.disc->Q.apply(Eigen::VectorXd::Ones(s.grid->node_count()));
    double err = 0.0;
    for (int i = 0; i < s.grid->node_count(); ++i)
        if (!s.grid->is_boundary(i)) err = std::max(err, std::abs(q1[i] - 1.0));
    return err;
}

double coupling_error_nodal(const Setup& s) {
    const Grid& g = *s.grid;
    const int n = g.n(), E = g.edge_count(), nodes = g.node_count();
    const Eigen::VectorXd u = sample_nodes(g, [&](double x, double y) { return smooth_u(g, x, y); });
    const OperatorMatrix Qp = assemble_Q_points(g, *s.profiles, *s.horizon, s.options);
    const Eigen::VectorXd gu = assemble_grad_nodal(g).apply(u);
    Eigen::VectorXd qg(n * E);
    for (int k = 0; k < n; ++k) qg.segment(k * E, E) = Qp.apply(gu.segment(k * nodes, nodes));
    const Eigen::VectorXd diff = s.disc->D.apply(u) - qg;
    double err = 0.0;
    for (int e = 0; e < E; ++e) err = std::max(err, point_norm(diff, n, E, e));
    return err;
}

double coupling_error_staggered(const Setup& s) {
    const Grid& g = *s.grid;
    const Eigen::VectorXd u = sample_nodes(g, [&](double x, double y) { return smooth_u(g, x, y); });
    const Eigen::VectorXd Du = s.disc->D.apply(u);
    const Eigen::VectorXd qg = s.disc->QE.apply(s.disc->grad.apply(u));
    return (Du - qg).cwiseAbs().maxCoeff() / Du.cwiseAbs().maxCoeff();
}

double adjoint_error(const Setup& s, std::uint64_t seed) {
    const Grid& g = *s.grid;
    const Eigen::VectorXd& w = g.weights();
    const OperatorMatrix Qs = assemble_Qstar(g, s.disc->Q);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const int nodes = g.node_count();
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd a(nodes), b(nodes);
        for (int i = 0; i < nodes; ++i) a[i] = normal(rng);
        for (int i = 0; i < nodes; ++i) b[i] = normal(rng);
        const Eigen::VectorXd qsa = Qs.apply(a), qb = s.disc->Q.apply(b);
        const double lhs = qsa.dot(w.cwiseProduct(b));
        const double rhs = a.dot(w.cwiseProduct(qb));
        auto wn = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(w.cwiseProduct(v))); };
        const double scale = wn(qsa) * wn(b) + wn(a) * wn(qb);
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

IbpResult ibp_residual(const Setup& s, bool compact) {
    const Grid& g = *s.grid;
    const int n = g.n();
    std::function<double(double, double)> phi;
    std::function<std::array<double, 2>(double, double)> psi;
    if (n == 1) {
        phi = [](double x, double) { return std::cos(kPi * x) + x * x; };
        if (compact)
            psi = [](double x, double) { return std::array<double, 2>{bump((x - 0.5) / 0.2), 0.0}; };
        else
            psi = [](double x, double) { return std::array<double, 2>{std::exp(x), 0.0}; };
    } else {
        phi = [](double x, double y) { return std::sin(kPi * x) * std::cos(kPi * y) + x * y; };
        if (compact)
            psi = [](double x, double y) {
                const double b = bump((x - 0.5) / 0.2) * bump((y - 0.5) / 0.2);
                return std::array<double, 2>{b, 0.5 * b};
            };
        else
            psi = [](double x, double y) { return std::array<double, 2>{std::cos(x + y), 1.0 + std::sin(x * y)}; };
    }
    const Eigen::VectorXd ph = sample_nodes(g, phi);
    const Eigen::VectorXd ps = sample_points(g, psi);
    const Eigen::VectorXd Dphi = s.disc->D.apply(ph);
    const double volume_D = Dphi.dot(point_weights_blocks(g).cwiseProduct(ps));
    const double volume_div = ph.dot(g.weights().cwiseProduct(s.disc->div_star.apply(ps)));
    double boundary = 0.0;
    for (const auto& b : g.boundary()) {
        const auto x = g.coord(b.node);
        const auto v = psi(x[0], x[1]);
        boundary += b.weight * ph[b.node] * (v[0] * b.normal[0] + v[1] * b.normal[1]);
    }
    return {std::abs(volume_D + volume_div - boundary), std::abs(volume_D)};
}

double localization_error(const Setup& s, double t) {
    const Grid& g = *s.grid;
    const int n = g.n(), E = g.edge_count();
    const Eigen::VectorXd u = sample_nodes(g, [&](double x, double y) { return smooth_u(g, x, y); });
    const Eigen::VectorXd Du = s.disc->D.apply(u);
    double err = 0.0;
    for (int e = 0; e < E; ++e) {
        const auto p = g.edge_point(e);
        if (g.domain().dist_to_boundary(p.data()) >= t) continue;
        const auto gr = smooth_grad(g, p[0], p[1]);
        double a2 = 0.0;
        for (int k = 0; k < n; ++k) a2 += (Du[k * E + e] - gr[k]) * (Du[k * E + e] - gr[k]);
        err = std::max(err, std::sqrt(a2));
    }
    return err;
}

JumpNorms jump_norms(const Setup& s) {
    const Grid& g = *s.grid;
    const double c = 0.5 * (g.domain().lo[0] + g.domain().hi[0]);
    const Eigen::VectorXd ind = sample_nodes(g, [c](double x, double) { return x > c ? 1.0 : 0.0; });
    const Eigen::VectorXd d = s.disc->D.apply(ind);
    const Eigen::VectorXd gr = s.disc->grad.apply(ind);
    JumpNorms r;
    r.nonlocal = std::sqrt(d.dot(point_weights_blocks(g).cwiseProduct(d)));
    r.classical = std::sqrt(gr.dot(g.edge_weights().cwiseProduct(gr)));
    return r;
}

double gradient_check(const EnergyProblem& prob, const Eigen::VectorXd& u, int directions, std::uint64_t seed) {
    const Eigen::VectorXd G = energy_grad(prob, u);
    const int nodes = prob.disc->grid->node_count();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int k = 0; k < directions; ++k) {
        Eigen::VectorXd v(u.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = prob.constrained[i % nodes] ? 0.0 : normal(rng);
        const double t = 1e-4 / v.cwiseAbs().maxCoeff();
        auto central = [&](double step) {
            return (energy_eval(prob, u + step * v) - energy_eval(prob, u - step * v)) / (2.0 * step);
        };
        // Richardson extrapolation removes the O(t^2) term of the central difference.
        const double fd = (4.0 * central(0.5 * t) - central(t)) / 3.0;
        const double dd = G.dot(v);
        worst = std::max(worst, std::abs(fd - dd) / std::max({std::abs(fd), std::abs(dd), 1e-300}));
    }
    return worst;
}

CrossCheck quadratic_crosscheck(const RunConfig& cfg, const Setup& s) {
    const EnergyProblem prob = make_energy_problem(cfg.problem, s, DensityKind::quadratic);
    MinimizeOptions opt;
    opt.grad_tol = cfg.solver.grad_tol;
    opt.max_iter = cfg.solver.max_iter;
    const MinimizeResult mr = minimize(prob, initial_guess(prob), opt);
    const BoundaryData bc = make_boundary_data(cfg.problem, s.grid->domain());
    const LinearSystem sys = build_system(*s.disc, cfg.problem.bc, prob.F, bc, InteriorForm::variational);
    const SolveResult sr = solve_linear(sys, s.grid, cfg.solver.rtol);
    const Eigen::VectorXd d = mr.u - sr.u.values;
    CrossCheck r;
    r.l2_difference = std::sqrt(d.dot(s.grid->weights().cwiseProduct(d)));
    r.iterations = static_cast<int>(mr.history.size()) - 1;
    r.converged = mr.converged;
    return r;
}

double quadratic_el_residual(const RunConfig& cfg, const Setup& s) {
    const EnergyProblem prob = make_energy_problem(cfg.problem, s, DensityKind::quadratic);
    MinimizeOptions opt;
    opt.grad_tol = cfg.solver.grad_tol;
    opt.max_iter = cfg.solver.max_iter;
    const MinimizeResult mr = minimize(prob, initial_guess(prob), opt);
    return el_residual(prob, mr.u);
}

int coarser(int N) { return N % 2 ? (N + 1) / 2 : N / 2; }

namespace {

int finer(int N) { return N % 2 ? 2 * N - 1 : 2 * N; }

std::string fmt(double v) { return format_number(v, 6); }

CheckResult make(const std::string& name, const std::string& anchor, double tol) {
    CheckResult r;
    r.name = name;
    r.anchor = anchor;
    r.tolerance = tol;
    return r;
}

Status judge(bool ok) { return ok ? Status::pass : Status::fail; }

bool halves(double coarse, double fine, double floor) {
    if (coarse <= floor && fine <= floor) return true;
    return fine > 0.0 ? coarse / fine >= 1.7 : true;
}

}  // namespace

VerifyReport verify_suite(const RunConfig& cfg) {
    VerifyReport rep;
    const int N = cfg.N, Nc = coarser(cfg.N);
    const int n = cfg.dim();
    std::shared_ptr<const KernelProfiles> kp;
    Setup fine, coarse;
    std::string setup_error;
    try {
        kp = std::make_shared<const KernelProfiles>(cfg.kernel_spec());
        fine = make_setup(cfg, N, kp);
        coarse = make_setup(cfg, Nc, kp);
    } catch (const std::exception& e) {
        setup_error = e.what();
    }

    auto run = [&](CheckResult proto, const std::function<void(CheckResult&)>& body) {
        try {
            if (!setup_error.empty()) throw std::runtime_error("setup failed: " + setup_error);
            body(proto);
        } catch (const std::exception& e) {
            proto.status = Status::fail;
            proto.detail = std::string("error: ") + e.what();
        }
        rep.checks.push_back(std::move(proto));
    };

    run(make("kernel_hypotheses", "H0-H4: rho_1 >= 0 radial, int rho_1 = n, lambda <= kappa sandwich near 0", 0.0),
        [&](CheckResult& r) {
            const auto hr = verify_hypotheses(kp->spec(), 2000);
            int failed = 0;
            std::ostringstream d;
            for (const auto& c : hr.checks) {
                if (!c.pass) ++failed;
                d << c.name << "=" << (c.pass ? "ok" : "violated") << "(" << fmt(c.worst_violation) << ") ";
            }
            r.value = failed;
            r.detail = d.str();
            r.status = judge(failed == 0);
        });

    run(make("profile_identities", "int rho_1 = n, ||Q_rho1||_1 = 1, Qhat(0) = 1, q >= C <xi>^(lambda-1)", 1e-6),
        [&](CheckResult& r) {
            const auto ki = kernel_identities(*kp);
            std::vector<std::array<double, 2>> xs;
            for (int k = 1; k <= 8; ++k) {
                const auto& d = fine.grid->domain();
                const double t = k / 9.0;
                xs.push_back({d.lo[0] + t * (d.hi[0] - d.lo[0]), n == 2 ? 0.5 * (d.lo[1] + d.hi[1]) : 0.0});
            }
            const std::vector<double> xis{0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0};
            const auto sr = symbol_lower_bound_check(SymbolEvaluator(kp, fine.horizon), kp->spec().lambda, xs, xis);
            r.value = std::max(ki.mass_error, ki.l1_error);
            r.detail = "mass_err=" + fmt(ki.mass_error) + " l1_err=" + fmt(ki.l1_error) +
                       " qhat0_err=" + fmt(ki.qhat0_error) + " symbol_C=" + fmt(sr.fitted_C);
            r.status = judge(ki.mass_error <= 1e-6 && ki.l1_error <= 1e-6 && ki.qhat0_error <= 1e-8 && sr.pass);
        });

    run(make("horizon", "0 < delta(x) <= dist(x, boundary), delta = 0 on the boundary", 0.0), [&](CheckResult& r) {
        const auto hr = check_horizon(*fine.grid, *fine.horizon);
        r.value = hr.decay_constant;
        r.detail = "clamped_nodes=" + std::to_string(hr.clamped_nodes) + " decay_constant=" + fmt(hr.decay_constant);
        if (!(hr.bounded_by_distance && hr.zero_on_boundary && hr.positive_inside))
            r.status = Status::fail;
        else
            r.status = hr.clamped_nodes > 0 ? Status::recorded : Status::pass;
    });

    run(make("affine_reproduction", "D(A.x + b) = ||Q_rho1||_1 A = A", n == 1 ? 1e-3 : 5e-3), [&](CheckResult& r) {
        const double ef = affine_error(fine), ec = affine_error(coarse);
        r.value = ef;
        r.detail = "coarse=" + fmt(ec) + " fine=" + fmt(ef);
        r.status = judge(ef <= r.tolerance && (ec <= 1e-10 && ef <= 1e-10 ? true : ec / ef >= 1.5));
    });

    run(make("constant_annihilation", "D 1 = 0, Q 1 = 1", 1e-6), [&](CheckResult& r) {
        const double d1 = constant_residual(fine), q1 = q_row_sum_error(fine);
        r.value = q1;
        r.detail = "max|D1|=" + fmt(d1) + " max|Q1-1|=" + fmt(q1);
        r.status = judge(d1 == 0.0 && q1 <= r.tolerance);
    });

    run(make("coupling_identity", "D u = Q grad u", n == 1 ? 1e-10 : 1e-3), [&](CheckResult& r) {
        const double st = coupling_error_staggered(fine);
        const double nf = coupling_error_nodal(fine), nc = coupling_error_nodal(coarse);
        r.value = st;
        r.detail = "staggered_rel=" + fmt(st) + " nodal_coarse=" + fmt(nc) + " nodal_fine=" + fmt(nf) +
                   " nodal_ratio=" + fmt(nc / nf);
        r.status = judge(st <= r.tolerance);
    });

    run(make("adjointness", "<Q* a, b> = <a, Q b>", 1e-12), [&](CheckResult& r) {
        r.value = adjoint_error(fine, cfg.solver.seed);
        r.status = judge(r.value <= r.tolerance);
    });

    run(make("integration_by_parts", "int D phi . psi = -int phi Div* psi + int_bd phi psi . nu", 1e-3),
        [&](CheckResult& r) {
            const auto rf = ibp_residual(fine, false), rc = ibp_residual(coarse, false);
            const auto cf = ibp_residual(fine, true);
            r.value = rf.residual;
            r.detail = "coarse=" + fmt(rc.residual) + " fine=" + fmt(rf.residual) + " ratio=" +
                       fmt(rc.residual / rf.residual) + " compact=" + fmt(cf.residual);
            r.status = judge(halves(rc.residual, rf.residual, 1e-10) && cf.residual <= r.tolerance);
        });

    run(make("spectrum_positivity", "eigenvalues of Q positive and bounded away from zero", 0.0), [&](CheckResult& r) {
        const auto sr = spectrum_Q(fine.disc->Q, cfg.solver.budget);
        r.value = sr.min_real;
        r.detail = "min_re=" + fmt(sr.min_real) + " min_modulus=" + fmt(sr.min_modulus) +
                   " nonpositive=" + std::to_string(sr.nonpositive_real);
        r.status = judge(sr.min_real > 0.0);
    });

    run(make("null_space", "D u = 0 iff u constant", 1e-10), [&](CheckResult& r) {
        const auto nf = nullspace_D(fine.disc->D, *fine.grid, 1e-10, cfg.solver.budget);
        const auto nc = nullspace_D(coarse.disc->D, *coarse.grid, 1e-10, cfg.solver.budget);
        const double drift = std::abs(nf.sigma_second - nc.sigma_second) / nc.sigma_second;
        r.value = nf.dimension;
        r.detail = "dim=" + std::to_string(nc.dimension) + "/" + std::to_string(nf.dimension) +
                   " cos=" + format_number(nf.constant_cosine, 17) + " sigma2=" + fmt(nc.sigma_second) + "/" +
                   fmt(nf.sigma_second) + " drift=" + fmt(drift);
        r.status = judge(nf.dimension == 1 && nc.dimension == 1 && nf.constant_cosine >= 1.0 - 1e-8 &&
                         nc.constant_cosine >= 1.0 - 1e-8 && drift <= 0.1);
    });

    run(make("poincare", "||u||_p <= C ||D u||_p on mean-zero and partial-trace-zero spaces", 0.05),
        [&](CheckResult& r) {
            PoincareOptions po;
            po.gamma = cfg.problem.gamma.empty() ? std::vector<Face>{Face::left} : cfg.problem.gamma;
            po.budget = cfg.solver.budget;
            po.seed = cfg.solver.seed;
            double worst = 0.0;
            std::ostringstream d;
            for (Subspace sub : {Subspace::mean_zero, Subspace::trace_zero_on_gamma}) {
                const double cc = poincare_constant(coarse.disc->D, *coarse.grid, sub, 2.0, po).constant_estimate;
                const double cf = poincare_constant(fine.disc->D, *fine.grid, sub, 2.0, po).constant_estimate;
                const double rel = std::abs(cf - cc) / cc;
                worst = std::max(worst, rel);
                d << to_string(sub) << "=" << fmt(cc) << "/" << fmt(cf) << " ";
            }
            bool kernel_error = false;
            try {
                poincare_constant(fine.disc->D, *fine.grid, Subspace::all, 2.0, po);
            } catch (const std::domain_error&) {
                kernel_error = true;
            }
            d << "unconstrained=" << (kernel_error ? "rejected" : "accepted");
            r.value = worst;
            r.detail = d.str();
            r.status = judge(worst < r.tolerance && kernel_error);
        });

    run(make("localization", "D phi -> grad phi at the boundary", 0.0), [&](CheckResult& r) {
        const double e1 = localization_error(fine, 0.2), e2 = localization_error(fine, 0.1),
                     e3 = localization_error(fine, 0.05);
        r.value = e3;
        r.detail = "t=0.2:" + fmt(e1) + " t=0.1:" + fmt(e2) + " t=0.05:" + fmt(e3);
        r.status = judge(e1 > e2 && e2 > e3);
    });

    run(make("jump_admissibility", "1_E in the nonlocal space when kappa p < 1", 2.0), [&](CheckResult& r) {
        const double kappa = cfg.jump.s;
        if (kappa * cfg.jump.p >= 1.0) {
            r.status = Status::recorded;
            r.detail = "skipped: kappa*p=" + fmt(kappa * cfg.jump.p) + " >= 1";
            return;
        }
        const auto jk = std::make_shared<const KernelProfiles>(build_kernel(Family::fractional, n, cfg.jump.s));
        std::vector<JumpNorms> norms;
        for (int m : {Nc, N, finer(N)}) norms.push_back(jump_norms(make_setup(cfg, m, jk)));
        double lo = INFINITY, hi = 0.0;
        for (const auto& j : norms) {
            lo = std::min(lo, j.nonlocal);
            hi = std::max(hi, j.nonlocal);
        }
        const double g1 = norms[1].classical / norms[0].classical, g2 = norms[2].classical / norms[1].classical;
        auto near = [](double q) { return std::abs(q / std::sqrt(2.0) - 1.0) <= 0.2; };
        r.value = hi / lo;
        r.detail = "D1E=" + fmt(norms[0].nonlocal) + "," + fmt(norms[1].nonlocal) + "," + fmt(norms[2].nonlocal) +
                   " grad_ratios=" + fmt(g1) + "," + fmt(g2);
        r.status = judge(hi / lo < r.tolerance && near(g1) && near(g2));
    });

    run(make("gradient_checks", "d/dt E(u + t v) = <grad E(u), v>", 1e-6), [&](CheckResult& r) {
        std::mt19937_64 rng(cfg.solver.seed);
        std::normal_distribution<double> normal;
        auto perturbed = [&](const EnergyProblem& prob) {
            Eigen::VectorXd u = initial_guess(prob);
            for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += 0.1 * normal(rng);
            return make_feasible(prob, u);
        };
        const auto quad = make_energy_problem(cfg.problem, fine, DensityKind::quadratic);
        const double eq = gradient_check(quad, perturbed(quad), 20, cfg.solver.seed);
        double e2;
        std::string second;
        if (n == 2) {
            ProblemConfig pc = cfg.problem;
            pc.bc = Constraint::dirichlet;
            pc.dirichlet.identity = true;
            pc.load = FieldSpec{};
            const auto poly = make_energy_problem(pc, fine, DensityKind::polyconvex_2d, 2);
            e2 = gradient_check(poly, perturbed(poly), 20, cfg.solver.seed + 1);
            second = "polyconvex_2d";
        } else {
            ProblemConfig pc = cfg.problem;
            pc.p = 3.0;
            const auto pw = make_energy_problem(pc, fine, DensityKind::p_power);
            e2 = gradient_check(pw, perturbed(pw), 20, cfg.solver.seed + 1);
            second = "p_power(3)";
        }
        r.value = std::max(eq, e2);
        r.detail = "quadratic=" + fmt(eq) + " " + second + "=" + fmt(e2);
        r.status = judge(r.value <= r.tolerance);
    });

    run(make("quadratic_crosscheck", "minimizer of the quadratic energy solves the linear system", 1e-6),
        [&](CheckResult& r) {
            const auto cc = quadratic_crosscheck(cfg, fine);
            r.value = cc.l2_difference;
            r.detail = "iterations=" + std::to_string(cc.iterations) + " converged=" + (cc.converged ? "1" : "0");
            r.status = judge(cc.l2_difference <= r.tolerance);
        });

    run(make("el_residual_refinement", "-Div*(D_A f(D u)) = F inside, D_A f(grad u) nu = h on the natural part", 0.0),
        [&](CheckResult& r) {
            const double rc = quadratic_el_residual(cfg, coarse), rf = quadratic_el_residual(cfg, fine);
            r.value = rf;
            r.detail = "coarse=" + fmt(rc) + " fine=" + fmt(rf) + " ratio=" + fmt(rc / rf);
            r.status = judge(halves(rc, rf, 1e-8));
        });

    return rep;
}

}  // namespace hetgrad
