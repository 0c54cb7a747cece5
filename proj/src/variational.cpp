#include "hetgrad/variational.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace hetgrad {

std::string to_string(DensityKind k) {
    switch (k) {
        case DensityKind::quadratic: return "quadratic";
        case DensityKind::p_power: return "p_power";
        case DensityKind::polyconvex_2d: return "polyconvex_2d";
        case DensityKind::polyconvex_logdet: return "polyconvex_logdet";
    }
    return "?";
}

DensityKind density_from_string(const std::string& s) {
    if (s == "quadratic") return DensityKind::quadratic;
    if (s == "p_power") return DensityKind::p_power;
    if (s == "polyconvex_2d" || s == "polyconvex2d") return DensityKind::polyconvex_2d;
    if (s == "polyconvex_logdet") return DensityKind::polyconvex_logdet;
    throw std::invalid_argument("unknown density '" + s + "'");
}

namespace {

Grad2 cofactor(const Grad2& A) {
    Grad2 c;
    c << A(1, 1), -A(1, 0), -A(0, 1), A(0, 0);
    return c;
}

}  // namespace

double EnergyDensity::value(const Grad2& A) const {
    const double a2 = A.squaredNorm();
    switch (kind) {
        case DensityKind::quadratic: return 0.5 * a2;
        case DensityKind::p_power: return std::pow(a2, 0.5 * p) / p;
        case DensityKind::polyconvex_2d: {
            const double dm1 = A.determinant() - 1.0;
            return alpha * a2 * a2 + beta * dm1 * dm1;
        }
        case DensityKind::polyconvex_logdet: {
            const double det = A.determinant();
            if (!(det > 0.0)) return INFINITY;
            return alpha * a2 * a2 + beta * (det - 1.0 - std::log(det));
        }
    }
    return NAN;
}

Grad2 EnergyDensity::derivative(const Grad2& A) const {
    const double a2 = A.squaredNorm();
    switch (kind) {
        case DensityKind::quadratic: return A;
        case DensityKind::p_power:
            if (a2 == 0.0) return Grad2::Zero();
            return std::pow(a2, 0.5 * (p - 2.0)) * A;
        case DensityKind::polyconvex_2d:
            return 4.0 * alpha * a2 * A + 2.0 * beta * (A.determinant() - 1.0) * cofactor(A);
        case DensityKind::polyconvex_logdet: {
            const double det = A.determinant();
            if (!(det > 0.0)) return Grad2::Constant(NAN);
            return 4.0 * alpha * a2 * A + beta * (1.0 - 1.0 / det) * cofactor(A);
        }
    }
    return Grad2::Constant(NAN);
}

EnergyDensity make_density(DensityKind kind, double p, double alpha, double beta) {
    EnergyDensity d;
    d.kind = kind;
    d.alpha = alpha;
    d.beta = beta;
    switch (kind) {
        case DensityKind::quadratic:
            d.p = 2.0;
            d.coercivity_c = 0.5;
            break;
        case DensityKind::p_power:
            if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("p_power density needs p in (1, inf)");
            d.p = p;
            d.coercivity_c = 1.0 / p;
            break;
        case DensityKind::polyconvex_2d:
        case DensityKind::polyconvex_logdet:
            if (!(alpha > 0.0) || beta < 0.0) throw std::invalid_argument("polyconvex density needs alpha > 0, beta >= 0");
            d.p = 4.0;
            d.coercivity_c = alpha;
            d.upper_p_growth = kind == DensityKind::polyconvex_2d;
            break;
    }
    d.coercivity_C = 0.0;
    return d;
}

void EnergyProblem::prepare() {
    if (!disc) throw std::invalid_argument("energy problem without a discretization");
    const Grid& grid = *disc->grid;
    const int nodes = grid.node_count();
    if (components < 1 || components > 2) throw std::invalid_argument("energy problem: 1 or 2 components");
    if (density.kind == DensityKind::polyconvex_2d || density.kind == DensityKind::polyconvex_logdet) {
        if (grid.n() != 2 || components != 2)
            throw std::invalid_argument("polyconvex density requires a 2D domain and a 2-component field");
    }
    if (!std::isnan(load_exponent)) {
        const double pp = density.p / (density.p - 1.0);
        if (std::abs(load_exponent - pp) > 1e-12 * pp)
            throw std::invalid_argument("exponent mismatch: load exponent must be p/(p-1)");
    }
    if (F.size() == 0) F = Eigen::VectorXd::Zero(components * nodes);
    if (F.size() != components * nodes) throw std::invalid_argument("energy problem: load has the wrong length");

    constrained.assign(nodes, 0);
    natural.clear();
    if (mode == Constraint::dirichlet) {
        for (const auto& b : grid.boundary()) constrained[b.node] = 1;
    } else if (mode == Constraint::mixed) {
        if (gamma.empty()) throw std::invalid_argument("mixed mode needs a nonempty Dirichlet part");
        for (int i : grid.nodes_on(gamma)) constrained[i] = 1;
    }
    for (const auto& b : grid.boundary())
        if (!constrained[b.node]) natural.push_back(b.node);
    if (mode != Constraint::neumann_meanzero && !g) throw std::invalid_argument("energy problem: Dirichlet data missing");

    boundary_load = Eigen::VectorXd::Zero(components * nodes);
    dirichlet = Eigen::VectorXd::Zero(components * nodes);
    for (const auto& b : grid.boundary()) {
        const auto x = grid.coord(b.node);
        if (constrained[b.node]) {
            const auto gv = g(x[0], x[1]);
            for (int a = 0; a < components; ++a) dirichlet[a * nodes + b.node] = gv[a];
        } else if (h) {
            const auto hv = h(x[0], x[1]);
            for (int a = 0; a < components; ++a) boundary_load[a * nodes + b.node] = b.weight * hv[a];
        }
    }
}

namespace {

// D applied to every component; layout [component][direction][edge].
Eigen::VectorXd apply_D(const EnergyProblem& prob, const Eigen::VectorXd& u) {
    const int nodes = prob.disc->grid->node_count();
    const int rows = prob.disc->D.rows();
    Eigen::VectorXd out(prob.components * rows);
    for (int a = 0; a < prob.components; ++a)
        out.segment(a * rows, rows) = prob.disc->D.mat * u.segment(a * nodes, nodes);
    return out;
}

Grad2 gather(const EnergyProblem& prob, const Eigen::VectorXd& Du, int e, int E) {
    const int n = prob.disc->grid->n();
    Grad2 A = Grad2::Zero();
    for (int a = 0; a < prob.components; ++a)
        for (int k = 0; k < n; ++k) A(a, k) = Du[(a * n + k) * E + e];
    return A;
}

void check_size(const EnergyProblem& prob, const Eigen::VectorXd& u) {
    if (prob.constrained.empty()) throw std::invalid_argument("energy problem not prepared");
    if (u.size() != prob.components * prob.disc->grid->node_count())
        throw std::invalid_argument("energy: field has the wrong length");
}

double energy_raw(const EnergyProblem& prob, const Eigen::VectorXd& u) {
    const Grid& grid = *prob.disc->grid;
    const int E = grid.edge_count();
    const Eigen::VectorXd Du = apply_D(prob, u);
    const Eigen::VectorXd& wp = grid.point_weights();
    double s = 0.0;
    for (int e = 0; e < E; ++e) s += wp[e] * prob.density.value(gather(prob, Du, e, E));
    const int nodes = grid.node_count();
    for (int a = 0; a < prob.components; ++a) s -= grid.weights().dot(prob.F.segment(a * nodes, nodes).cwiseProduct(u.segment(a * nodes, nodes)));
    s -= prob.boundary_load.dot(u);
    return s;
}

void project(const EnergyProblem& prob, Eigen::VectorXd& v) {
    if (prob.mode != Constraint::neumann_meanzero) return;
    const Eigen::VectorXd& w = prob.disc->grid->weights();
    const int nodes = static_cast<int>(w.size());
    for (int a = 0; a < prob.components; ++a) {
        auto seg = v.segment(a * nodes, nodes);
        seg -= (w.dot(seg) / w.squaredNorm()) * w;
    }
}

}  // namespace

double energy_eval(const EnergyProblem& prob, const Eigen::VectorXd& u) {
    check_size(prob, u);
    const int nodes = prob.disc->grid->node_count();
    for (int a = 0; a < prob.components; ++a)
        for (int i = 0; i < nodes; ++i) {
            if (!prob.constrained[i]) continue;
            const double gv = prob.dirichlet[a * nodes + i];
            if (std::abs(u[a * nodes + i] - gv) > 1e-12 * (1.0 + std::abs(gv)))
                throw std::invalid_argument("energy: field violates the Dirichlet data");
        }
    const double E = energy_raw(prob, u);
    if (!std::isfinite(E)) throw std::domain_error("energy: non-finite density value");
    return E;
}

Eigen::VectorXd energy_grad(const EnergyProblem& prob, const Eigen::VectorXd& u) {
    check_size(prob, u);
    const Grid& grid = *prob.disc->grid;
    const int n = grid.n(), E = grid.edge_count(), nodes = grid.node_count();
    const Eigen::VectorXd Du = apply_D(prob, u);
    const Eigen::VectorXd& wp = grid.point_weights();
    const int rows = n * E;
    Eigen::VectorXd V(prob.components * rows);
    for (int e = 0; e < E; ++e) {
        const Grad2 G = prob.density.derivative(gather(prob, Du, e, E));
        for (int a = 0; a < prob.components; ++a)
            for (int k = 0; k < n; ++k) V[(a * n + k) * E + e] = wp[e] * G(a, k);
    }
    if (!V.allFinite()) throw std::domain_error("energy gradient: non-finite density derivative");
    Eigen::VectorXd out(prob.components * nodes);
    for (int a = 0; a < prob.components; ++a) {
        out.segment(a * nodes, nodes) = prob.disc->D.mat.transpose() * V.segment(a * rows, rows) -
                                        grid.weights().cwiseProduct(prob.F.segment(a * nodes, nodes)) -
                                        prob.boundary_load.segment(a * nodes, nodes);
        for (int i = 0; i < nodes; ++i)
            if (prob.constrained[i]) out[a * nodes + i] = 0.0;
    }
    return out;
}

Eigen::VectorXd make_feasible(const EnergyProblem& prob, Eigen::VectorXd u) {
    check_size(prob, u);
    const int nodes = prob.disc->grid->node_count();
    for (int a = 0; a < prob.components; ++a)
        for (int i = 0; i < nodes; ++i)
            if (prob.constrained[i]) u[a * nodes + i] = prob.dirichlet[a * nodes + i];
    if (prob.mode == Constraint::neumann_meanzero) {
        const Eigen::VectorXd& w = prob.disc->grid->weights();
        for (int a = 0; a < prob.components; ++a) {
            auto seg = u.segment(a * nodes, nodes);
            seg.array() -= w.dot(seg) / w.sum();
        }
    }
    return u;
}

Eigen::VectorXd initial_guess(const EnergyProblem& prob) {
    const int nodes = prob.disc->grid->node_count();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(prob.components * nodes);
    if (prob.mode == Constraint::neumann_meanzero) return u;
    for (int a = 0; a < prob.components; ++a) {
        BoundaryData bc;
        bc.gamma = prob.mode == Constraint::mixed ? prob.gamma : prob.disc->grid->domain().faces();
        const VectorField gfun = prob.g;
        bc.g = [gfun, a](double x, double y) { return gfun(x, y)[a]; };
        const auto sys = build_system(*prob.disc, prob.mode, Eigen::VectorXd::Zero(nodes), bc);
        u.segment(a * nodes, nodes) = solve_linear(sys, prob.disc->grid).u.values;
    }
    return make_feasible(prob, u);
}

namespace {

// Quadratic-energy Hessian per component, identity on constrained nodes.
class Preconditioner {
public:
    explicit Preconditioner(const EnergyProblem& prob) : prob_(prob) {
        const Grid& grid = *prob.disc->grid;
        const int nodes = grid.node_count();
        const Eigen::VectorXd& w = grid.weights();
        const int E = grid.edge_count();
        Eigen::VectorXd wp(grid.n() * E);
        for (int k = 0; k < grid.n(); ++k) wp.segment(k * E, E) = grid.point_weights();
        const Eigen::SparseMatrix<double> Dm = prob.disc->D.mat;
        Eigen::SparseMatrix<double> M = Dm.transpose() * wp.asDiagonal() * Dm;
        if (prob.mode == Constraint::neumann_meanzero) {
            Eigen::SparseMatrix<double> Wd(nodes, nodes);
            std::vector<Eigen::Triplet<double>> t;
            for (int i = 0; i < nodes; ++i) t.emplace_back(i, i, w[i]);
            Wd.setFromTriplets(t.begin(), t.end());
            M += Wd;
        }
        std::vector<Eigen::Triplet<double>> trip;
        for (int c = 0; c < M.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(M, c); it; ++it)
                if (!prob.constrained[it.row()] && !prob.constrained[it.col()])
                    trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int i = 0; i < nodes; ++i)
            if (prob.constrained[i]) trip.emplace_back(i, i, 1.0);
        M_.resize(nodes, nodes);
        M_.setFromTriplets(trip.begin(), trip.end());
        lu_.compute(M_);
        if (lu_.info() != Eigen::Success) throw std::runtime_error("minimize: preconditioner factorization failed");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& g) const {
        const int nodes = static_cast<int>(M_.rows());
        Eigen::VectorXd out(g.size());
        for (int a = 0; a < prob_.components; ++a) out.segment(a * nodes, nodes) = lu_.solve(g.segment(a * nodes, nodes));
        return out;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
        const int nodes = static_cast<int>(M_.rows());
        Eigen::VectorXd out(v.size());
        for (int a = 0; a < prob_.components; ++a) out.segment(a * nodes, nodes) = M_ * v.segment(a * nodes, nodes);
        return out;
    }

private:
    const EnergyProblem& prob_;
    Eigen::SparseMatrix<double> M_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace

MinimizeResult minimize(const EnergyProblem& prob, const Eigen::VectorXd& u0, const MinimizeOptions& opt) {
    MinimizeResult res;
    Eigen::VectorXd u = make_feasible(prob, u0);
    double E = energy_raw(prob, u);
    if (!std::isfinite(E)) throw std::domain_error("minimize: initial guess has non-finite energy");
    std::unique_ptr<Preconditioner> pre;
    if (opt.precondition) pre = std::make_unique<Preconditioner>(prob);
    auto direction = [&](const Eigen::VectorXd& G) {
        if (!pre) return G;
        Eigen::VectorXd d = pre->solve(G);
        project(prob, d);
        return d;
    };
    Eigen::VectorXd G = energy_grad(prob, u);
    project(prob, G);
    Eigen::VectorXd d = direction(G);
    double t = 1.0, last_step = 0.0;
    for (int it = 0;; ++it) {
        const double gn = G.norm();
        res.history.push_back({it, E, gn, last_step});
        if (gn <= opt.grad_tol) {
            res.converged = true;
            break;
        }
        if (it >= opt.max_iter) {
            res.hit_max_iter = true;
            break;
        }
        const double slope = G.dot(d);
        const double resolution = 1e-13 * (std::abs(E) + 1.0);
        bool accepted = false;
        Eigen::VectorXd un, Gn;
        double En = E;
        if (0.5 * t * slope > resolution) {
            bool any_finite = false;
            for (double step = t; step >= opt.min_step; step *= opt.backtrack) {
                un = u - step * d;
                En = energy_raw(prob, un);
                if (!std::isfinite(En)) continue;
                any_finite = true;
                if (En <= E - opt.armijo_c1 * step * slope) {
                    Gn = energy_grad(prob, un);
                    project(prob, Gn);
                    t = step;
                    accepted = true;
                    break;
                }
            }
            if (!accepted && !any_finite) throw std::domain_error("minimize: non-finite energy along the line search");
        } else {
            // The decrease is below the resolution of E: locate a zero of the directional derivative.
            double lo = 0.0, hi = INFINITY, step = t;
            for (int k = 0; k < 60 && step >= opt.min_step; ++k) {
                un = u - step * d;
                En = energy_raw(prob, un);
                if (!std::isfinite(En) || En > E + resolution) {
                    hi = step;
                    step = 0.5 * (lo + hi);
                    continue;
                }
                Gn = energy_grad(prob, un);
                project(prob, Gn);
                const double dphi = -Gn.dot(d);  // derivative of E(u - step d) in step
                if (std::abs(dphi) <= 0.5 * slope) {
                    t = step;
                    accepted = true;
                    break;
                }
                if (dphi < 0.0) lo = step;
                else hi = step;
                step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
            }
        }
        if (!accepted) {
            res.stalled = true;
            break;
        }
        const Eigen::VectorXd s = un - u, y = Gn - G;
        const double sy = s.dot(y);
        last_step = t;
        // Barzilai-Borwein step, measured in the preconditioner metric when one is used
        const double ss = pre ? s.dot(pre->apply(s)) : s.squaredNorm();
        t = sy > 0.0 ? ss / sy : 2.0 * t;
        u = std::move(un);
        G = std::move(Gn);
        E = En;
        d = direction(G);
    }
    res.grad_norm = G.norm();
    res.u = std::move(u);
    return res;
}

ElResidual el_residual_parts(const EnergyProblem& prob, const Eigen::VectorXd& u) {
    check_size(prob, u);
    const Grid& grid = *prob.disc->grid;
    const int n = grid.n(), E = grid.edge_count(), nodes = grid.node_count();
    const int rows = n * E;
    const Eigen::VectorXd Du = apply_D(prob, u);
    Eigen::VectorXd V(prob.components * rows);
    for (int e = 0; e < E; ++e) {
        const Grad2 G = prob.density.derivative(gather(prob, Du, e, E));
        for (int a = 0; a < prob.components; ++a)
            for (int k = 0; k < n; ++k) V[(a * n + k) * E + e] = G(a, k);
    }
    const Eigen::VectorXd& w = grid.weights();
    ElResidual r;
    double acc = 0.0;
    for (int a = 0; a < prob.components; ++a) {
        const Eigen::VectorXd div = -(prob.disc->div_star.mat * V.segment(a * rows, rows));
        for (int i = 0; i < nodes; ++i) {
            if (grid.is_boundary(i)) continue;
            const double ri = div[i] - prob.F[a * nodes + i];
            acc += w[i] * ri * ri;
        }
    }
    r.interior = std::sqrt(acc);

    if (!prob.natural.empty()) {
        const OperatorMatrix gn = assemble_grad_nodal(grid);
        std::vector<Eigen::VectorXd> grads(prob.components);
        for (int a = 0; a < prob.components; ++a) grads[a] = gn.mat * u.segment(a * nodes, nodes);
        double bacc = 0.0;
        for (const auto& b : grid.boundary()) {
            if (prob.constrained[b.node]) continue;
            Grad2 A = Grad2::Zero();
            for (int a = 0; a < prob.components; ++a)
                for (int k = 0; k < n; ++k) A(a, k) = grads[a][k * nodes + b.node];
            const Grad2 G = prob.density.derivative(A);
            const auto x = grid.coord(b.node);
            const std::array<double, 2> hv = prob.h ? prob.h(x[0], x[1]) : std::array<double, 2>{0.0, 0.0};
            for (int a = 0; a < prob.components; ++a) {
                double flux = 0.0;
                for (int k = 0; k < n; ++k) flux += G(a, k) * b.normal[k];
                bacc += b.weight * (flux - hv[a]) * (flux - hv[a]);
            }
        }
        r.natural = std::sqrt(bacc);
    }
    return r;
}

double el_residual(const EnergyProblem& prob, const Eigen::VectorXd& u) { return el_residual_parts(prob, u).value(); }

}  // namespace hetgrad
