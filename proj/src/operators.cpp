#include "hetgrad/operators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hetgrad/solvers.hpp"
#include "rays.hpp"

namespace hetgrad {

using detail::PolyTerm;
using detail::RowBuilder;
using detail::Segment;
using Row = std::vector<std::pair<int, double>>;

std::string to_string(OpKind k) {
    switch (k) {
        case OpKind::D: return "D";
        case OpKind::Q: return "Q";
        case OpKind::Qstar: return "Qstar";
        case OpKind::DivStar: return "DivStar";
        case OpKind::Laplacian: return "Laplacian";
        case OpKind::GradClassical: return "GradClassical";
        case OpKind::GradNodal: return "GradNodal";
        case OpKind::Div: return "Div";
        case OpKind::QE: return "QE";
        case OpKind::QPoints: return "QPoints";
    }
    return "?";
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HETGRAD_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

namespace {

// Rows are produced independently (possibly in parallel) and stored in a fixed order, so the
// assembled matrix does not depend on the thread count.
template <class Fn>
SpMat assemble_blocks(int items, int blocks, int cols, int threads, Fn fn) {
    std::vector<Row> rows(static_cast<std::size_t>(items) * blocks);
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        std::vector<Row> out(blocks);
        try {
            for (int it = next++; it < items; it = next++) {
                for (auto& r : out) r.clear();
                fn(it, out);
                for (int b = 0; b < blocks; ++b) rows[static_cast<std::size_t>(b) * items + it] = std::move(out[b]);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
            next = items;
        }
    };
    const int nt = std::max(1, std::min(threads, items));
    if (nt == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);

    std::size_t nnz = 0;
    for (const auto& r : rows) nnz += r.size();
    SpMat m(static_cast<Eigen::Index>(rows.size()), cols);
    m.reserve(static_cast<Eigen::Index>(nnz));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m.startVec(static_cast<Eigen::Index>(r));
        for (const auto& [c, v] : rows[r]) m.insertBack(static_cast<Eigen::Index>(r), c) = v;
    }
    m.finalize();
    return m;
}

// Make the storage-order sum of a row exactly zero, matching the order of a sparse mat-vec.
void zero_sum(Row& r) {
    if (r.empty()) return;
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) s += r[k].second;
    r.back().second = -s;
}

bool is_boundary_edge(const Grid& g, int e) {
    if (g.n() == 1) return false;
    const int N = g.N();
    if (e < g.x_edge_count()) {
        const int j = e / (N - 1);
        return j == 0 || j == N - 1;
    }
    const int i = (e - g.x_edge_count()) % N;
    return i == 0 || i == N - 1;
}

// The cell on the inner side of a boundary edge.
Segment inner_cell(const Grid& g, int e) {
    const int N = g.N();
    if (e < g.x_edge_count()) {
        const int i = e % (N - 1), j = e / (N - 1);
        return {0.0, 0.0, i, std::min(j, N - 2)};
    }
    const int k = e - g.x_edge_count();
    const int i = k % N, j = k / N;
    return {0.0, 0.0, std::min(i, N - 2), j};
}

double horizon_at_edge(const Grid& g, const HorizonFunction& hz, int e) {
    const double d = hz.at(g.edge_point(e));
    if (!(d > 0.0) && !is_boundary_edge(g, e))
        throw std::domain_error("horizon vanishes at an interior evaluation point");
    return d;
}

Eigen::VectorXd block_weights(const Grid& g) {
    const int E = g.edge_count();
    Eigen::VectorXd w(g.n() * E);
    for (int k = 0; k < g.n(); ++k) w.segment(k * E, E) = g.point_weights();
    return w;
}

constexpr std::array<double, 2> kNoDir{0.0, 0.0};

}  // namespace

OperatorMatrix assemble_D(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                          const AssemblyOptions& opt) {
    if (kp.spec().n != g.n()) throw std::invalid_argument("assemble_D: kernel and grid dimensions differ");
    const int n = g.n(), E = g.edge_count();
    OperatorMatrix op;
    op.kind = OpKind::D;
    op.row_space = Space::points;
    op.col_space = Space::nodes;
    op.row_support.resize(static_cast<std::size_t>(n) * E);
    for (int e = 0; e < E; ++e) {
        const double d = horizon_at_edge(g, hz, e);
        for (int k = 0; k < n; ++k) op.row_support[k * E + e] = d;
    }

    op.mat = assemble_blocks(E, n, g.node_count(), resolve_threads(opt.threads), [&](int e, std::vector<Row>& out) {
        const auto p = g.edge_point(e);
        const double d = op.row_support[e];
        std::vector<RowBuilder> rb(n);
        std::vector<PolyTerm> terms;
        if (!(d > 0.0)) {
            // classical gradient of the interpolant from the inner cell
            const Segment cell = inner_cell(g, e);
            for (int k = 0; k < n; ++k) {
                detail::slope_terms(g, p, kNoDir, cell, k, terms);
                for (const auto& t : terms) {
                    const auto [tail, head] = g.edge_nodes(t.dof);
                    const double h = g.h(g.edge_axis(t.dof));
                    rb[k].add(tail, -t.c[0] / h);
                    rb[k].add(head, t.c[0] / h);
                }
            }
        } else {
            const int m = detail::ray_count(d, g.h_min(), opt.rays_min, opt.rays_per_h);
            std::vector<PolyTerm> start;
            for (const auto& dir : detail::directions(n, m)) {
                const auto segs = detail::trace_ray(g, p, dir.e, d);
                if (segs.empty()) continue;
                detail::nodal_terms(g, p, dir.e, segs.front(), start);
                double tail_mass = 0.0;  // rho moment of order 0 beyond the first cell
                for (std::size_t q = 0; q < segs.size(); ++q) {
                    const auto& s = segs[q];
                    detail::nodal_terms(g, p, dir.e, s, terms);
                    const double m0 = q > 0 ? detail::rho_moment(kp, 0, s.a, s.b, d) : 0.0;
                    const double m1 = detail::rho_moment(kp, 1, s.a, s.b, d);
                    const double m2 = n == 2 ? detail::rho_moment(kp, 2, s.a, s.b, d) : 0.0;
                    tail_mass += m0;
                    for (const auto& t : terms) {
                        const double v = t.c[0] * m0 + t.c[1] * m1 + t.c[2] * m2;
                        for (int k = 0; k < n; ++k) rb[k].add(t.dof, v * dir.weight * dir.e[k]);
                    }
                }
                for (const auto& t : start) {
                    const double v = -t.c[0] * tail_mass;
                    for (int k = 0; k < n; ++k) rb[k].add(t.dof, v * dir.weight * dir.e[k]);
                }
            }
        }
        for (int k = 0; k < n; ++k) {
            out[k] = rb[k].finish();
            zero_sum(out[k]);
        }
    });
    return op;
}

OperatorMatrix assemble_Q(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                          const AssemblyOptions& opt) {
    if (kp.spec().n != g.n()) throw std::invalid_argument("assemble_Q: kernel and grid dimensions differ");
    const int n = g.n(), nodes = g.node_count();
    OperatorMatrix op;
    op.kind = OpKind::Q;
    op.row_space = Space::nodes;
    op.col_space = Space::nodes;
    op.row_support.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double d = hz.at(g.coord(i));
        if (!(d > 0.0) && !g.is_boundary(i)) throw std::domain_error("horizon vanishes at an interior node");
        op.row_support[i] = d;
    }
    op.mat = assemble_blocks(nodes, 1, nodes, resolve_threads(opt.threads), [&](int i, std::vector<Row>& out) {
        const double d = op.row_support[i];
        if (!(d > 0.0)) {
            out[0] = {{i, 1.0}};
            return;
        }
        const auto p = g.coord(i);
        RowBuilder rb;
        std::vector<PolyTerm> terms;
        const int m = detail::ray_count(d, g.h_min(), opt.rays_min, opt.rays_per_h);
        for (const auto& dir : detail::directions(n, m)) {
            for (const auto& s : detail::trace_ray(g, p, dir.e, d)) {
                detail::nodal_terms(g, p, dir.e, s, terms);
                const double q0 = detail::q_moment(kp, 0, s.a, s.b, d);
                const double q1 = detail::q_moment(kp, 1, s.a, s.b, d);
                const double q2 = n == 2 ? detail::q_moment(kp, 2, s.a, s.b, d) : 0.0;
                for (const auto& t : terms) rb.add(t.dof, (t.c[0] * q0 + t.c[1] * q1 + t.c[2] * q2) * dir.weight);
            }
        }
        out[0] = rb.finish();
    });
    return op;
}

OperatorMatrix assemble_Q_points(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                                 const AssemblyOptions& opt) {
    if (kp.spec().n != g.n()) throw std::invalid_argument("assemble_Q_points: kernel and grid dimensions differ");
    const int n = g.n(), E = g.edge_count();
    OperatorMatrix op;
    op.kind = OpKind::QPoints;
    op.row_space = Space::edges;
    op.col_space = Space::nodes;
    op.row_support.resize(E);
    for (int e = 0; e < E; ++e) op.row_support[e] = horizon_at_edge(g, hz, e);
    op.mat = assemble_blocks(E, 1, g.node_count(), resolve_threads(opt.threads), [&](int e, std::vector<Row>& out) {
        const auto p = g.edge_point(e);
        const double d = op.row_support[e];
        RowBuilder rb;
        std::vector<PolyTerm> terms;
        if (!(d > 0.0)) {
            detail::nodal_terms(g, p, kNoDir, inner_cell(g, e), terms);
            for (const auto& t : terms) rb.add(t.dof, t.c[0]);
        } else {
            const int m = detail::ray_count(d, g.h_min(), opt.rays_min, opt.rays_per_h);
            for (const auto& dir : detail::directions(n, m)) {
                for (const auto& s : detail::trace_ray(g, p, dir.e, d)) {
                    detail::nodal_terms(g, p, dir.e, s, terms);
                    const double q0 = detail::q_moment(kp, 0, s.a, s.b, d);
                    const double q1 = detail::q_moment(kp, 1, s.a, s.b, d);
                    const double q2 = n == 2 ? detail::q_moment(kp, 2, s.a, s.b, d) : 0.0;
                    for (const auto& t : terms)
                        rb.add(t.dof, (t.c[0] * q0 + t.c[1] * q1 + t.c[2] * q2) * dir.weight);
                }
            }
        }
        out[0] = rb.finish();
    });
    return op;
}

OperatorMatrix assemble_QE(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                           const AssemblyOptions& opt) {
    if (kp.spec().n != g.n()) throw std::invalid_argument("assemble_QE: kernel and grid dimensions differ");
    const int n = g.n(), E = g.edge_count();
    OperatorMatrix op;
    op.kind = OpKind::QE;
    op.row_space = Space::points;
    op.col_space = Space::edges;
    op.row_support.resize(static_cast<std::size_t>(n) * E);
    for (int e = 0; e < E; ++e) {
        const double d = horizon_at_edge(g, hz, e);
        for (int k = 0; k < n; ++k) op.row_support[k * E + e] = d;
    }
    op.mat = assemble_blocks(E, n, E, resolve_threads(opt.threads), [&](int e, std::vector<Row>& out) {
        const auto p = g.edge_point(e);
        const double d = op.row_support[e];
        std::vector<RowBuilder> rb(n);
        std::vector<PolyTerm> terms;
        if (!(d > 0.0)) {
            const Segment cell = inner_cell(g, e);
            for (int k = 0; k < n; ++k) {
                detail::slope_terms(g, p, kNoDir, cell, k, terms);
                for (const auto& t : terms) rb[k].add(t.dof, t.c[0]);
            }
        } else {
            const int m = detail::ray_count(d, g.h_min(), opt.rays_min, opt.rays_per_h);
            for (const auto& dir : detail::directions(n, m)) {
                for (const auto& s : detail::trace_ray(g, p, dir.e, d)) {
                    const double q0 = detail::q_moment(kp, 0, s.a, s.b, d);
                    const double q1 = detail::q_moment(kp, 1, s.a, s.b, d);
                    for (int k = 0; k < n; ++k) {
                        detail::slope_terms(g, p, dir.e, s, k, terms);
                        for (const auto& t : terms) rb[k].add(t.dof, (t.c[0] * q0 + t.c[1] * q1) * dir.weight);
                    }
                }
            }
        }
        for (int k = 0; k < n; ++k) out[k] = rb[k].finish();
    });
    return op;
}

OperatorMatrix assemble_Qstar(const Grid& g, const OperatorMatrix& Q) {
    if (Q.kind != OpKind::Q) throw std::invalid_argument("assemble_Qstar: expects a nodal Q");
    const Eigen::VectorXd& w = g.weights();
    OperatorMatrix op;
    op.kind = OpKind::Qstar;
    op.row_space = Space::nodes;
    op.col_space = Space::nodes;
    const SpMat qt = Q.mat.transpose();
    op.mat = w.cwiseInverse().asDiagonal() * qt * w.asDiagonal();
    op.row_support = Q.row_support;
    return op;
}

OperatorMatrix assemble_Qstar(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                              const AssemblyOptions& opt) {
    return assemble_Qstar(g, assemble_Q(g, kp, hz, opt));
}

OperatorMatrix assemble_grad(const Grid& g) {
    const int E = g.edge_count();
    OperatorMatrix op;
    op.kind = OpKind::GradClassical;
    op.row_space = Space::edges;
    op.col_space = Space::nodes;
    op.row_support.assign(E, 0.0);
    op.mat = assemble_blocks(E, 1, g.node_count(), 1, [&](int e, std::vector<Row>& out) {
        const auto [tail, head] = g.edge_nodes(e);
        const double h = g.h(g.edge_axis(e));
        out[0] = {{tail, -1.0 / h}, {head, 1.0 / h}};
    });
    return op;
}

OperatorMatrix assemble_grad_nodal(const Grid& g) {
    const int n = g.n(), N = g.N(), nodes = g.node_count();
    OperatorMatrix op;
    op.kind = OpKind::GradNodal;
    op.row_space = Space::nodal_vector;
    op.col_space = Space::nodes;
    op.row_support.assign(static_cast<std::size_t>(n) * nodes, 0.0);
    op.mat = assemble_blocks(nodes, n, nodes, 1, [&](int node, std::vector<Row>& out) {
        const auto [i, j] = g.ij(node);
        for (int a = 0; a < n; ++a) {
            const int t = a == 0 ? i : j;
            auto at = [&](int s) { return a == 0 ? g.index(s, j) : g.index(i, s); };
            const double h = g.h(a);
            RowBuilder rb;
            if (t == 0) {
                rb.add(at(0), -1.0 / h);
                rb.add(at(1), 1.0 / h);
            } else if (t == N - 1) {
                rb.add(at(N - 2), -1.0 / h);
                rb.add(at(N - 1), 1.0 / h);
            } else {
                rb.add(at(t - 1), -0.5 / h);
                rb.add(at(t + 1), 0.5 / h);
            }
            out[a] = rb.finish();
        }
    });
    return op;
}

OperatorMatrix assemble_div(const Grid& g) {
    const int n = g.n(), N = g.N(), nodes = g.node_count();
    OperatorMatrix op;
    op.kind = OpKind::Div;
    op.row_space = Space::nodes;
    op.col_space = Space::edges;
    op.row_support.assign(nodes, 0.0);
    op.mat = assemble_blocks(nodes, 1, g.edge_count(), 1, [&](int node, std::vector<Row>& out) {
        const auto [i, j] = g.ij(node);
        RowBuilder rb;
        for (int a = 0; a < n; ++a) {
            const int t = a == 0 ? i : j;
            // edge from position s to s+1 along axis a
            auto edge = [&](int s) { return a == 0 ? g.x_edge(s, j) : g.y_edge(i, s); };
            const double h = g.h(a);
            int lo = t - 1;
            if (t == 0) lo = 0;
            if (t == N - 1) lo = N - 3;
            rb.add(edge(lo), -1.0 / h);
            rb.add(edge(lo + 1), 1.0 / h);
        }
        out[0] = rb.finish();
    });
    return op;
}

OperatorMatrix assemble_div_star(const Grid& g, const OperatorMatrix& QE) {
    if (QE.kind != OpKind::QE) throw std::invalid_argument("assemble_div_star: expects Q_E");
    const OperatorMatrix div = assemble_div(g);
    const SpMat qet = QE.mat.transpose();
    const SpMat qe_star = g.edge_weights().cwiseInverse().asDiagonal() * qet * block_weights(g).asDiagonal();
    OperatorMatrix op;
    op.kind = OpKind::DivStar;
    op.row_space = Space::nodes;
    op.col_space = Space::points;
    op.mat = div.mat * qe_star;
    op.row_support.assign(g.node_count(), 0.0);
    return op;
}

OperatorMatrix assemble_div_star(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                                 const AssemblyOptions& opt) {
    return assemble_div_star(g, assemble_QE(g, kp, hz, opt));
}

OperatorMatrix assemble_laplacian(const OperatorMatrix& div_star, const OperatorMatrix& D, bool symmetrize) {
    if (div_star.kind != OpKind::DivStar || D.kind != OpKind::D)
        throw std::invalid_argument("assemble_laplacian: expects DivStar and D");
    OperatorMatrix op;
    op.kind = OpKind::Laplacian;
    op.row_space = Space::nodes;
    op.col_space = Space::nodes;
    op.mat = -(div_star.mat * D.mat);
    if (symmetrize) {
        const SpMat lt = op.mat.transpose();
        op.mat = 0.5 * (op.mat + lt);
        op.symmetrized = true;
    }
    op.row_support = div_star.row_support;
    return op;
}

OperatorMatrix assemble_laplacian(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                                  bool symmetrize, const AssemblyOptions& opt) {
    return assemble_laplacian(assemble_div_star(g, kp, hz, opt), assemble_D(g, kp, hz, opt), symmetrize);
}

Discretization Discretization::build(std::shared_ptr<const Grid> g, std::shared_ptr<const KernelProfiles> kp,
                                     std::shared_ptr<const HorizonFunction> hz, const AssemblyOptions& opt) {
    Discretization z;
    z.grid = std::move(g);
    z.profiles = std::move(kp);
    z.horizon = std::move(hz);
    z.D = assemble_D(*z.grid, *z.profiles, *z.horizon, opt);
    z.Q = assemble_Q(*z.grid, *z.profiles, *z.horizon, opt);
    z.QE = assemble_QE(*z.grid, *z.profiles, *z.horizon, opt);
    z.grad = assemble_grad(*z.grid);
    z.div = assemble_div(*z.grid);
    z.div_star = assemble_div_star(*z.grid, z.QE);
    z.laplacian = assemble_laplacian(z.div_star, z.D, false);
    return z;
}

Eigen::VectorXd sample_nodes(const Grid& g, const std::function<double(double, double)>& f) {
    Eigen::VectorXd v(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) {
        const auto x = g.coord(i);
        v[i] = f(x[0], x[1]);
    }
    return v;
}

Eigen::VectorXd sample_points(const Grid& g, const std::function<std::array<double, 2>(double, double)>& f) {
    const int E = g.edge_count();
    Eigen::VectorXd v(g.n() * E);
    for (int e = 0; e < E; ++e) {
        const auto p = g.edge_point(e);
        const auto val = f(p[0], p[1]);
        for (int k = 0; k < g.n(); ++k) v[k * E + e] = val[k];
    }
    return v;
}

double SymbolEvaluator::operator()(const std::array<double, 2>& x, double xi) const {
    const double d = hz_->at(x);
    if (!(d > 0.0)) return 1.0;
    return kp_->q_hat(d * std::abs(xi));
}

SymbolReport symbol_lower_bound_check(const SymbolEvaluator& ev, double lambda,
                                      const std::vector<std::array<double, 2>>& x_samples,
                                      const std::vector<double>& xi_samples) {
    if (x_samples.empty() || xi_samples.empty()) throw std::invalid_argument("symbol check: empty sample set");
    SymbolReport r;
    r.fitted_C = INFINITY;
    r.min_q = INFINITY;
    for (const auto& x : x_samples) {
        for (double xi : xi_samples) {
            const double q = ev(x, xi);
            r.min_q = std::min(r.min_q, q);
            r.fitted_C = std::min(r.fitted_C, q * std::pow(1.0 + xi * xi, 0.5 * (1.0 - lambda)));
        }
    }
    r.pass = r.fitted_C > 0.0 && r.min_q > 0.0;
    return r;
}

SpectrumReport spectrum_Q(const OperatorMatrix& Q, int budget) {
    SpectrumReport r;
    r.eigenvalues = eig_dense(Eigen::MatrixXd(Q.mat), budget);
    r.min_real = INFINITY;
    r.min_modulus = INFINITY;
    for (const auto& z : r.eigenvalues) {
        r.min_real = std::min(r.min_real, z.real());
        r.min_modulus = std::min(r.min_modulus, std::abs(z));
        if (z.real() <= 0.0) ++r.nonpositive_real;
    }
    return r;
}

NullspaceReport nullspace_D(const OperatorMatrix& D, const Grid& g, double rel_tol, int budget) {
    if (D.kind != OpKind::D) throw std::invalid_argument("nullspace_D: expects D");
    const Eigen::VectorXd& w = g.weights();
    const WeightedSvd svd = svd_weighted_full(Eigen::MatrixXd(D.mat), block_weights(g), w, nullptr, budget);
    const int cols = D.cols();
    NullspaceReport r;
    r.singular_values = Eigen::VectorXd::Zero(cols);
    r.singular_values.head(svd.sigma.size()) = svd.sigma;
    r.sigma_max = cols > 0 ? r.singular_values[0] : 0.0;
    const double tol = rel_tol * r.sigma_max;
    int rank = 0;
    while (rank < cols && r.singular_values[rank] > tol) ++rank;
    r.dimension = cols - rank;
    r.sigma_second = rank > 0 ? r.singular_values[rank - 1] : 0.0;
    const Eigen::MatrixXd Y = svd.V.rightCols(r.dimension);
    r.basis = w.cwiseSqrt().cwiseInverse().asDiagonal() * Y;
    if (r.dimension > 0) {
        const Eigen::VectorXd c = w.cwiseSqrt().normalized();
        r.constant_cosine = (Y.transpose() * c).norm();
    }
    return r;
}

}  // namespace hetgrad
