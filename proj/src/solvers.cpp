#include "hetgrad/solvers.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace hetgrad {


std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}
namespace {

// The budget bounds the number of unknowns; tall matrices may carry up to four times as many rows.
void check_budget(Eigen::Index rows, Eigen::Index cols, int budget, const char* what) {
    const Eigen::Index unknowns = std::min(rows, cols);
    if (unknowns > budget || std::max(rows, cols) > 4 * static_cast<Eigen::Index>(budget))
        throw BudgetExceeded(std::string(what) + ": " + std::to_string(rows) + " x " + std::to_string(cols) +
                             " exceeds the dense budget " + std::to_string(budget) + "; reduce N");
}

Eigen::VectorXd point_block_weights(const Grid& g) {
    const int E = g.edge_count();
    Eigen::VectorXd w(g.n() * E);
    for (int k = 0; k < g.n(); ++k) w.segment(k * E, E) = g.point_weights();
    return w;
}

}  // namespace

std::vector<std::complex<double>> eig_dense(const Eigen::MatrixXd& A, int budget) {
    if (A.rows() != A.cols()) throw std::invalid_argument("eig_dense: matrix must be square");
    check_budget(A.rows(), A.cols(), budget, "eig_dense");
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eig_dense: QR iteration did not converge");
    const Eigen::VectorXcd ev = es.eigenvalues();
    std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return out;
}

WeightedSvd svd_weighted_full(const Eigen::MatrixXd& A, const Eigen::VectorXd& w_row, const Eigen::VectorXd& w_col,
                              const Eigen::MatrixXd* basis, int budget) {
    check_budget(A.rows(), A.cols(), budget, "svd_weighted");
    Eigen::MatrixXd M = A;
    if (w_row.size() > 0) {
        if (w_row.size() != A.rows()) throw std::invalid_argument("svd_weighted: row weight length mismatch");
        M = w_row.cwiseSqrt().asDiagonal() * M;
    }
    if (w_col.size() > 0) {
        if (w_col.size() != A.cols()) throw std::invalid_argument("svd_weighted: column weight length mismatch");
        M = M * w_col.cwiseSqrt().cwiseInverse().asDiagonal();
    }
    if (basis) {
        if (basis->rows() != M.cols()) throw std::invalid_argument("svd_weighted: basis has the wrong row count");
        M = M * (*basis);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) throw std::runtime_error("svd_weighted: SVD did not converge");
    return {svd.singularValues(), svd.matrixV()};
}

Eigen::VectorXd svd_weighted(const Eigen::MatrixXd& A, const Eigen::VectorXd& w_row, const Eigen::VectorXd& w_col,
                             const Eigen::MatrixXd* basis, int budget) {
    check_budget(A.rows(), A.cols(), budget, "svd_weighted");
    Eigen::MatrixXd M = A;
    if (w_row.size() > 0) M = w_row.cwiseSqrt().asDiagonal() * M;
    if (w_col.size() > 0) M = M * w_col.cwiseSqrt().cwiseInverse().asDiagonal();
    if (basis) M = M * (*basis);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
    if (svd.info() != Eigen::Success) throw std::runtime_error("svd_weighted: SVD did not converge");
    return svd.singularValues();
}

std::string to_string(Constraint c) {
    switch (c) {
        case Constraint::dirichlet: return "dirichlet";
        case Constraint::neumann_meanzero: return "neumann_meanzero";
        case Constraint::mixed: return "mixed";
    }
    return "?";
}

Constraint constraint_from_string(const std::string& s) {
    if (s == "dirichlet") return Constraint::dirichlet;
    if (s == "neumann_meanzero" || s == "neumann") return Constraint::neumann_meanzero;
    if (s == "mixed") return Constraint::mixed;
    throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

LinearSystem build_system(const Discretization& disc, Constraint c, const Eigen::VectorXd& F, const BoundaryData& bc,
                          InteriorForm form) {
    const Grid& g = *disc.grid;
    const int nodes = g.node_count();
    if (F.size() != nodes) throw std::invalid_argument("build_system: load has the wrong length");

    const Eigen::VectorXd& w = g.weights();
    const SpMat Dt = disc.D.mat.transpose();
    const SpMat flux = w.cwiseInverse().asDiagonal() * (Dt * point_block_weights(g).asDiagonal()) * disc.D.mat;
    const SpMat& strong = disc.laplacian.mat;

    LinearSystem sys;
    sys.constraint = c;
    std::vector<char> is_con(nodes, 0), is_nat(nodes, 0);
    std::vector<double> bweight(nodes, 0.0);
    for (const auto& b : g.boundary()) bweight[b.node] = b.weight;

    if (c == Constraint::dirichlet) {
        for (const auto& b : g.boundary()) is_con[b.node] = 1;
    } else if (c == Constraint::mixed) {
        if (bc.gamma.empty()) throw std::invalid_argument("mixed problem needs a nonempty Dirichlet part");
        for (int i : g.nodes_on(bc.gamma)) is_con[i] = 1;
        for (const auto& b : g.boundary())
            if (!is_con[b.node]) is_nat[b.node] = 1;
    } else {
        for (const auto& b : g.boundary()) is_nat[b.node] = 1;
    }
    if (std::any_of(is_con.begin(), is_con.end(), [](char v) { return v; }) && !bc.g)
        throw std::invalid_argument("build_system: Dirichlet data missing");

    // Neumann problems use the weak rows throughout so that the weights span the left null space.
    const bool weak_inside = form == InteriorForm::variational || c == Constraint::neumann_meanzero;
    const SpMat& inner = weak_inside ? flux : strong;

    std::vector<Eigen::Triplet<double>> trip;
    const int size = nodes + (c == Constraint::neumann_meanzero ? 1 : 0);
    sys.rhs = Eigen::VectorXd::Zero(size);
    Eigen::VectorXd hvals = Eigen::VectorXd::Zero(nodes);
    for (int i = 0; i < nodes; ++i) {
        const auto x = g.coord(i);
        if (is_con[i]) {
            trip.emplace_back(i, i, 1.0);
            sys.rhs[i] = bc.g(x[0], x[1]);
            sys.constrained.push_back(i);
            continue;
        }
        const SpMat& src = is_nat[i] ? flux : inner;
        for (SpMat::InnerIterator it(src, i); it; ++it) trip.emplace_back(i, static_cast<int>(it.col()), it.value());
        sys.rhs[i] = F[i];
        if (is_nat[i]) {
            sys.natural.push_back(i);
            hvals[i] = bc.h ? bc.h(x[0], x[1]) : 0.0;
            sys.rhs[i] += bweight[i] * hvals[i] / w[i];
        }
    }
    if (c == Constraint::neumann_meanzero) {
        sys.bordered = true;
        for (int i = 0; i < nodes; ++i) {
            trip.emplace_back(nodes, i, w[i]);
            trip.emplace_back(i, nodes, w[i]);
        }
        double total = w.dot(F);
        for (int i = 0; i < nodes; ++i) total += bweight[i] * hvals[i];
        sys.compatibility = std::abs(total);
        if (sys.compatibility > 1e-8 * (F.norm() + hvals.norm()) + 1e-300)
            throw std::invalid_argument("incompatible Neumann data: sum w F + sum b h = " + std::to_string(total));
    }
    sys.matrix.kind = OpKind::Laplacian;
    sys.matrix.mat.resize(size, size);
    sys.matrix.mat.setFromTriplets(trip.begin(), trip.end());
    sys.matrix.row_support = disc.laplacian.row_support;
    return sys;
}

SolveResult solve_linear(const LinearSystem& sys, std::shared_ptr<const Grid> grid, double rtol) {
    const int nodes = grid->node_count();
    const Eigen::SparseMatrix<double> A = sys.matrix.mat;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("singular constrained system: " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(sys.rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw std::runtime_error("singular constrained system");
    // Iterative refinement; the stiffness rows scale like h^-2.
    for (int step = 0; step < 3; ++step) {
        const Eigen::VectorXd corr = lu.solve(sys.rhs - A * x);
        if (!corr.allFinite()) break;
        x += corr;
    }
    for (int i : sys.constrained) x[i] = sys.rhs[i];

    const Eigen::VectorXd r = sys.matrix.mat * x - sys.rhs;
    std::vector<char> skip(nodes, 0);
    for (int i : sys.constrained) skip[i] = 1;
    double rn = 0.0, bn = 0.0;
    for (int i = 0; i < nodes; ++i) {
        if (skip[i]) continue;
        rn += r[i] * r[i];
        bn += sys.rhs[i] * sys.rhs[i];
    }
    SolveResult out;
    out.residual = bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
    if (!(out.residual <= std::max(rtol, 1e-10)))
        throw std::runtime_error("solve_linear: residual " + format_double(out.residual) + " above tolerance");
    out.multiplier = sys.bordered ? x[nodes] : 0.0;
    out.u = GridFunction(std::move(grid), 1, x.head(nodes));
    return out;
}

std::string to_string(Subspace s) {
    switch (s) {
        case Subspace::mean_zero: return "mean_zero";
        case Subspace::trace_zero_on_gamma: return "trace_zero_on_gamma";
        case Subspace::vanish_on_U: return "vanish_on_U";
        case Subspace::all: return "all";
    }
    return "?";
}

Subspace subspace_from_string(const std::string& s) {
    if (s == "mean_zero") return Subspace::mean_zero;
    if (s == "trace_zero_on_gamma" || s == "trace_zero") return Subspace::trace_zero_on_gamma;
    if (s == "vanish_on_U") return Subspace::vanish_on_U;
    if (s == "all") return Subspace::all;
    throw std::invalid_argument("unknown subspace '" + s + "'");
}

namespace {

std::vector<char> pinned_nodes(const Grid& g, Subspace sub, const PoincareOptions& opt) {
    std::vector<char> pin(g.node_count(), 0);
    if (sub == Subspace::trace_zero_on_gamma) {
        if (opt.gamma.empty()) throw std::invalid_argument("poincare: trace_zero_on_gamma needs boundary faces");
        for (int i : g.nodes_on(opt.gamma)) pin[i] = 1;
    } else if (sub == Subspace::vanish_on_U) {
        if (opt.U.empty()) throw std::invalid_argument("poincare: vanish_on_U needs a node set");
        for (int i : opt.U) {
            if (i < 0 || i >= g.node_count()) throw std::invalid_argument("poincare: node index out of range");
            pin[i] = 1;
        }
    }
    return pin;
}

double weighted_p_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w, int comps, double p) {
    const Eigen::Index m = w.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        double a2 = 0.0;
        for (int k = 0; k < comps; ++k) a2 += v[k * m + i] * v[k * m + i];
        s += w[i] * std::pow(a2, 0.5 * p);
    }
    return std::pow(s, 1.0 / p);
}

}  // namespace

PoincareReport poincare_constant(const OperatorMatrix& D, const Grid& g, Subspace sub, double p,
                                 const PoincareOptions& opt) {
    if (D.kind != OpKind::D) throw std::invalid_argument("poincare: expects the D matrix");
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("poincare: p must lie in (1, inf)");
    const int nodes = g.node_count();
    const Eigen::VectorXd& w = g.weights();
    const Eigen::VectorXd wp = point_block_weights(g);
    const auto pin = pinned_nodes(g, sub, opt);

    PoincareReport rep;
    rep.p = p;
    rep.subspace = sub;

    if (p == 2.0) {
        rep.method = "svd";
        Eigen::MatrixXd basis;
        if (sub == Subspace::mean_zero) {
            const Eigen::VectorXd c = w.cwiseSqrt().normalized();
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
            const Eigen::MatrixXd Qm = qr.householderQ();
            basis = Qm.rightCols(nodes - 1);
        } else {
            const int free = static_cast<int>(std::count(pin.begin(), pin.end(), 0));
            basis = Eigen::MatrixXd::Zero(nodes, free);
            for (int i = 0, k = 0; i < nodes; ++i)
                if (!pin[i]) basis(i, k++) = 1.0;
        }
        if (basis.cols() == 0) throw std::invalid_argument("poincare: subspace is empty");
        const Eigen::VectorXd s = svd_weighted(Eigen::MatrixXd(D.mat), wp, w, &basis, opt.budget);
        const double smax = s.size() ? s[0] : 0.0;
        rep.sigma_min = basis.cols() > s.size() ? 0.0 : s[s.size() - 1];
        if (!(rep.sigma_min > 1e-12 * std::max(smax, 1.0)))
            throw std::domain_error("poincare: D has a kernel inside the subspace (sigma_min = " +
                                    std::to_string(rep.sigma_min) + ")");
        rep.constant_estimate = 1.0 / rep.sigma_min;
        return rep;
    }

    rep.method = "sampled";
    rep.lower_bound = true;
    if (sub == Subspace::all) {
        const Eigen::VectorXd d1 = D.mat * Eigen::VectorXd::Ones(nodes);
        if (weighted_p_norm(d1, g.point_weights(), g.n(), p) == 0.0)
            throw std::domain_error("poincare: D annihilates constants on the unconstrained space");
    }
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const auto& dom = g.domain();
    const int modes = 6;
    rep.samples = std::max(opt.samples, 1000);
    double best = 0.0;
    for (int s = 0; s < rep.samples; ++s) {
        std::vector<double> a(modes * modes), ph(2 * modes * modes);
        for (auto& v : a) v = normal(rng);
        for (auto& v : ph) v = phase(rng);
        Eigen::VectorXd u(nodes);
        for (int i = 0; i < nodes; ++i) {
            const auto x = g.coord(i);
            const double t0 = (x[0] - dom.lo[0]) / (dom.hi[0] - dom.lo[0]);
            const double t1 = g.n() == 2 ? (x[1] - dom.lo[1]) / (dom.hi[1] - dom.lo[1]) : 0.0;
            double v = 0.0;
            for (int k = 0; k < modes; ++k) {
                for (int l = 0; l < (g.n() == 2 ? modes : 1); ++l) {
                    const int m = k * modes + l;
                    v += a[m] / (1.0 + k + l) * std::cos(std::numbers::pi * k * t0 + ph[2 * m]) *
                         std::cos(std::numbers::pi * l * t1 + ph[2 * m + 1]);
                }
            }
            u[i] = v;
        }
        if (sub == Subspace::mean_zero) u.array() -= w.dot(u) / w.sum();
        for (int i = 0; i < nodes; ++i)
            if (pin[i]) u[i] = 0.0;
        const double num = weighted_p_norm(u, w, 1, p);
        const double den = weighted_p_norm(D.mat * u, g.point_weights(), g.n(), p);
        if (num == 0.0) continue;
        if (!(den > 0.0)) throw std::domain_error("poincare: sampled function in the kernel of D");
        best = std::max(best, num / den);
    }
    rep.constant_estimate = best;
    return rep;
}

}  // namespace hetgrad
