#include "hetgrad/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>

#include "hetgrad/checks.hpp"
#include "hetgrad/config.hpp"
#include "hetgrad/io.hpp"

namespace hetgrad {

using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string out;
};

RunConfig resolve_config(const Common& c) { return c.config.empty() ? default_config() : load_config(c.config); }

std::string out_path(const RunConfig& cfg, const std::string& given, const std::string& fallback) {
    if (!given.empty()) return given;
    return (std::filesystem::path(cfg.output.dir) / fallback).string();
}

OpKind parse_op(const std::string& s) {
    if (s == "D") return OpKind::D;
    if (s == "Q") return OpKind::Q;
    if (s == "Qstar") return OpKind::Qstar;
    if (s == "DivStar") return OpKind::DivStar;
    if (s == "Lap" || s == "Laplacian") return OpKind::Laplacian;
    if (s == "QE") return OpKind::QE;
    if (s == "Grad") return OpKind::GradClassical;
    if (s == "GradNodal") return OpKind::GradNodal;
    if (s == "Div") return OpKind::Div;
    throw UsageError("unknown operator '" + s + "'");
}

OperatorMatrix pick(const Setup& s, OpKind k, bool symmetrize) {
    switch (k) {
        case OpKind::D: return s.disc->D;
        case OpKind::Q: return s.disc->Q;
        case OpKind::Qstar: return assemble_Qstar(*s.grid, s.disc->Q);
        case OpKind::DivStar: return s.disc->div_star;
        case OpKind::Laplacian: return symmetrize ? assemble_laplacian(s.disc->div_star, s.disc->D, true) : s.disc->laplacian;
        case OpKind::QE: return s.disc->QE;
        case OpKind::GradClassical: return s.disc->grad;
        case OpKind::GradNodal: return assemble_grad_nodal(*s.grid);
        case OpKind::Div: return s.disc->div;
        case OpKind::QPoints: return assemble_Q_points(*s.grid, *s.profiles, *s.horizon, s.options);
    }
    throw UsageError("unsupported operator");
}

// Coordinates of the entries of a vector in the given index space.
std::vector<std::vector<double>> coordinate_rows(const Grid& g, Space sp, const Eigen::VectorXd& v) {
    const int n = g.n();
    const int count = (sp == Space::nodes || sp == Space::nodal_vector) ? g.node_count() : g.edge_count();
    const int comps = static_cast<int>(v.size()) / count;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < count; ++i) {
        const auto x = (sp == Space::nodes || sp == Space::nodal_vector) ? g.coord(i) : g.edge_point(i);
        std::vector<double> r{x[0]};
        if (n == 2) r.push_back(x[1]);
        for (int c = 0; c < comps; ++c) r.push_back(v[c * count + i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::string> coordinate_header(int n, int comps) {
    std::vector<std::string> h{"x"};
    if (n == 2) h.push_back("y");
    for (int c = 0; c < comps; ++c) h.push_back(comps == 1 ? "v" : "v" + std::to_string(c));
    return h;
}

json base_summary(const std::string& command, const RunConfig& cfg) {
    return {{"command", command}, {"seed", cfg.solver.seed}};
}

int cmd_kernel(const std::string& family, int n, double s, double kappa, const std::string& out, std::ostream& os) {
    const KernelSpec spec = build_kernel(family_from_string(family), n, s, Cutoff::bump, kappa);
    const KernelProfiles kp(spec);
    const RunConfig cfg = default_config();
    const int rows = 256;
    std::vector<std::vector<double>> table;
    for (int k = 0; k < rows; ++k) {
        const double r = std::pow(10.0, -4.0 + 4.0 * k / (rows - 1));
        const double rr = std::min(r, 1.0 - 1e-12);
        std::vector<double> row{r, rho_bar(spec, rr), kp.q_profile(rr)};
        if (n == 1) {
            const double xi = 50.0 * k / (rows - 1);
            row.push_back(xi);
            row.push_back(kp.q_hat(xi));
        }
        table.push_back(std::move(row));
    }
    std::vector<std::string> header{"r", "rho", "Qbar"};
    if (n == 1) {
        header.push_back("xi");
        header.push_back("Qhat");
    }
    const std::string path = out.empty() ? "kernel.csv" : out;
    write_table_csv(path, header, table, cfg.solver.seed, 12);
    json j = base_summary("kernel", cfg);
    j["family"] = family;
    j["n"] = n;
    j["s"] = s;
    j["normalization_c"] = spec.normalization_c;
    j["mass"] = kernel_mass(spec);
    j["l1_norm_Q"] = kp.l1_norm_Q();
    j["out"] = path;
    os << j.dump() << "\n";
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& os, std::ostream& es) {
    CLI::App app{"heterogeneous-horizon nonlocal gradients", "hetgrad"};
    app.require_subcommand(1);

    Common c;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON configuration file");
        sub->add_option("--out", c.out, "output file");
    };

    std::string family = "fractional";
    int kn = 1;
    double ks = 0.5, kkappa = NAN;
    auto* k = app.add_subcommand("kernel", "tabulate a kernel and its profile");
    k->add_option("--family", family, "fractional, log_fractional or power_fixture");
    k->add_option("--n", kn, "space dimension (1 or 2)");
    k->add_option("--s", ks, "fractional order in (0,1)");
    k->add_option("--kappa", kkappa, "logarithmic exponent (log_fractional)");
    k->add_option("--out", c.out, "output CSV (default kernel.csv)");

    std::string op = "D";
    bool symmetrize = false;
    auto* as = app.add_subcommand("assemble", "assemble an operator to Matrix Market");
    add_common(as);
    as->add_option("--op", op, "D, Q, Qstar, DivStar, Lap, QE, Grad, GradNodal or Div");
    as->add_flag("--symmetrize", symmetrize, "symmetrize the Laplacian in the weighted inner product");

    std::string in;
    auto* ap = app.add_subcommand("apply", "apply an operator to a nodal field");
    add_common(ap);
    ap->add_option("--op", op, "operator name as for assemble");
    ap->add_option("--in", in, "input grid-function CSV")->required();
    ap->add_flag("--symmetrize", symmetrize, "symmetrize the Laplacian");

    std::string bc;
    auto* so = app.add_subcommand("solve", "solve the linear boundary value problem");
    add_common(so);
    so->add_option("--bc", bc, "dirichlet, mixed or neumann_meanzero (overrides the config)");

    auto* ei = app.add_subcommand("eig", "full spectrum of an operator");
    add_common(ei);
    ei->add_option("--op", op, "operator name as for assemble");

    std::string subspace = "mean_zero";
    double p = 2.0;
    auto* po = app.add_subcommand("poincare", "Poincare constant estimate");
    add_common(po);
    po->add_option("--subspace", subspace, "mean_zero, trace_zero_on_gamma or vanish_on_U");
    po->add_option("--p", p, "integrability exponent");

    std::string density, history;
    auto* mi = app.add_subcommand("minimize", "minimize the configured energy");
    add_common(mi);
    mi->add_option("--density", density, "overrides problem.density");
    mi->add_option("--history", history, "CSV of iteration, energy, gradient norm, step");

    auto* ve = app.add_subcommand("verify", "run the invariant suite");
    add_common(ve);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        os << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        es << "hetgrad: " << e.what() << "\n";
        return 2;
    }

    try {
        if (k->parsed()) return cmd_kernel(family, kn, ks, kkappa, c.out, os);

        const RunConfig cfg = resolve_config(c);
        if (as->parsed()) {
            const OpKind kind = parse_op(op);
            const Setup s = make_setup(cfg, cfg.N);
            const OperatorMatrix m = pick(s, kind, symmetrize);
            const std::string path = out_path(cfg, c.out, "op.mtx");
            write_matrix_market(path, m.mat, cfg.solver.seed);
            json j = base_summary("assemble", cfg);
            j["op"] = to_string(kind);
            j["rows"] = m.rows();
            j["cols"] = m.cols();
            j["nnz"] = m.mat.nonZeros();
            j["symmetrized"] = m.symmetrized;
            j["out"] = path;
            os << j.dump() << "\n";
            return 0;
        }
        if (ap->parsed()) {
            const OpKind kind = parse_op(op);
            const Setup s = make_setup(cfg, cfg.N);
            const OperatorMatrix m = pick(s, kind, symmetrize);
            const GridFunction u = read_gridfunction_csv(in, s.grid);
            Eigen::VectorXd src = u.values;
            if (m.col_space == Space::edges) src = s.disc->grad.apply(u.values.head(s.grid->node_count()));
            if (m.col_space == Space::points)
                throw UsageError("operator " + to_string(kind) + " acts on vector fields; apply it to D or Grad output");
            if (src.size() != m.cols()) throw UsageError("input field does not match the operator columns");
            const Eigen::VectorXd v = m.apply(src);
            const std::string path = out_path(cfg, c.out, "applied.csv");
            const auto rows = coordinate_rows(*s.grid, m.row_space, v);
            write_table_csv(path, coordinate_header(s.grid->n(), static_cast<int>(rows.front().size()) - s.grid->n()),
                            rows, cfg.solver.seed);
            json j = base_summary("apply", cfg);
            j["op"] = to_string(kind);
            j["max_abs"] = v.cwiseAbs().maxCoeff();
            j["out"] = path;
            os << j.dump() << "\n";
            return 0;
        }
        if (so->parsed()) {
            RunConfig cc = cfg;
            if (!bc.empty()) cc.problem.bc = constraint_from_string(bc);
            const Setup s = make_setup(cc, cc.N);
            const Eigen::VectorXd F = make_load(cc.problem, *s.grid);
            const LinearSystem sys = build_system(*s.disc, cc.problem.bc, F, make_boundary_data(cc.problem, s.grid->domain()));
            const SolveResult r = solve_linear(sys, s.grid, cc.solver.rtol);
            const std::string path = out_path(cc, c.out, "u.csv");
            write_gridfunction_csv(path, r.u, cc.solver.seed);
            json j = base_summary("solve", cc);
            j["bc"] = to_string(cc.problem.bc);
            j["residual"] = r.residual;
            if (sys.bordered) {
                j["multiplier"] = r.multiplier;
                j["compatibility"] = sys.compatibility;
            }
            j["out"] = path;
            os << j.dump() << "\n";
            return 0;
        }
        if (ei->parsed()) {
            const OpKind kind = parse_op(op);
            const Setup s = make_setup(cfg, cfg.N);
            const OperatorMatrix m = pick(s, kind, false);
            if (m.rows() != m.cols()) throw UsageError("eig needs a square operator");
            const auto ev = eig_dense(Eigen::MatrixXd(m.mat), cfg.solver.budget);
            std::vector<std::vector<double>> rows;
            double min_re = INFINITY, min_mod = INFINITY;
            for (const auto& z : ev) {
                rows.push_back({z.real(), z.imag()});
                min_re = std::min(min_re, z.real());
                min_mod = std::min(min_mod, std::abs(z));
            }
            const std::string path = out_path(cfg, c.out, "spectrum.csv");
            write_table_csv(path, {"re", "im"}, rows, cfg.solver.seed);
            json j = base_summary("eig", cfg);
            j["op"] = to_string(kind);
            j["count"] = ev.size();
            j["min_real"] = min_re;
            j["min_modulus"] = min_mod;
            j["out"] = path;
            os << j.dump() << "\n";
            return 0;
        }
        if (po->parsed()) {
            const Setup s = make_setup(cfg, cfg.N);
            PoincareOptions opt;
            opt.gamma = cfg.problem.gamma;
            opt.seed = cfg.solver.seed;
            opt.budget = cfg.solver.budget;
            const auto r = poincare_constant(s.disc->D, *s.grid, subspace_from_string(subspace), p, opt);
            json j = base_summary("poincare", cfg);
            j["subspace"] = to_string(r.subspace);
            j["p"] = r.p;
            j["method"] = r.method;
            j["constant_estimate"] = r.constant_estimate;
            j["lower_bound"] = r.lower_bound;
            if (r.method == "svd") j["sigma_min"] = r.sigma_min;
            else j["samples"] = r.samples;
            os << j.dump() << "\n";
            return 0;
        }
        if (mi->parsed()) {
            RunConfig cc = cfg;
            if (!density.empty()) cc.problem.density = density_from_string(density);
            const bool poly = cc.problem.density == DensityKind::polyconvex_2d ||
                              cc.problem.density == DensityKind::polyconvex_logdet;
            const Setup s = make_setup(cc, cc.N);
            const EnergyProblem prob = make_energy_problem(cc.problem, s, cc.problem.density, poly ? 2 : 1);
            MinimizeOptions mo;
            mo.grad_tol = cc.solver.grad_tol;
            mo.max_iter = cc.solver.max_iter;
            const MinimizeResult r = minimize(prob, initial_guess(prob), mo);
            const std::string path = out_path(cc, c.out, "u.csv");
            write_gridfunction_csv(path, GridFunction(s.grid, prob.components, r.u), cc.solver.seed);
            if (!history.empty()) {
                std::vector<std::vector<double>> rows;
                for (const auto& h : r.history)
                    rows.push_back({static_cast<double>(h.iter), h.energy, h.grad_norm, h.step});
                write_table_csv(history, {"iter", "energy", "grad_norm", "step"}, rows, cc.solver.seed);
            }
            json j = base_summary("minimize", cc);
            j["density"] = to_string(cc.problem.density);
            j["iterations"] = r.history.size() - 1;
            j["converged"] = r.converged;
            j["max_iter_reached"] = r.hit_max_iter;
            j["stalled"] = r.stalled;
            j["energy"] = r.history.back().energy;
            j["grad_norm"] = r.grad_norm;
            j["el_residual"] = el_residual(prob, r.u);
            j["out"] = path;
            os << j.dump() << "\n";
            return r.converged ? 0 : 1;
        }
        if (ve->parsed()) {
            const VerifyReport rep = verify_suite(cfg);
            json full = rep.to_json();
            full["config"] = cfg.to_json();
            full["seed"] = cfg.solver.seed;
            const std::string path = out_path(cfg, c.out, "verify.json");
            write_json(path, full);
            json j = base_summary("verify", cfg);
            j["pass"] = rep.count(Status::pass);
            j["fail"] = rep.count(Status::fail);
            j["recorded"] = rep.count(Status::recorded);
            j["checks"] = rep.checks.size();
            j["out"] = path;
            os << j.dump() << "\n";
            for (const auto& ch : rep.checks)
                if (ch.status == Status::fail) es << "hetgrad: check " << ch.name << " failed: " << ch.detail << "\n";
            return rep.any_fail() ? 1 : 0;
        }
    } catch (const ConfigError& e) {
        es << "hetgrad: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        es << "hetgrad: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        es << "hetgrad: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace hetgrad
