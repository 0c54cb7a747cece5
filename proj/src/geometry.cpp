#include "hetgrad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hetgrad {

std::string to_string(Face f) {
    switch (f) {
        case Face::left: return "left";
        case Face::right: return "right";
        case Face::bottom: return "bottom";
        case Face::top: return "top";
    }
    return "?";
}

Face face_from_string(const std::string& s) {
    if (s == "left") return Face::left;
    if (s == "right") return Face::right;
    if (s == "bottom") return Face::bottom;
    if (s == "top") return Face::top;
    throw std::invalid_argument("unknown boundary face '" + s + "'");
}

Domain Domain::interval(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("interval requires a < b");
    Domain d;
    d.n = 1;
    d.lo = {a, 0.0};
    d.hi = {b, 0.0};
    return d;
}

Domain Domain::rectangle(double a1, double b1, double a2, double b2) {
    if (!(a1 < b1 && a2 < b2)) throw std::invalid_argument("rectangle requires a < b componentwise");
    Domain d;
    d.n = 2;
    d.lo = {a1, a2};
    d.hi = {b1, b2};
    return d;
}

double Domain::measure() const {
    double m = hi[0] - lo[0];
    if (n == 2) m *= hi[1] - lo[1];
    return m;
}

std::vector<Face> Domain::faces() const {
    if (n == 1) return {Face::left, Face::right};
    return {Face::left, Face::right, Face::bottom, Face::top};
}

double Domain::dist_to_boundary(const double* x) const {
    double d = std::min(x[0] - lo[0], hi[0] - x[0]);
    if (n == 2) d = std::min({d, x[1] - lo[1], hi[1] - x[1]});
    return std::max(d, 0.0);
}

Grid::Grid(const Domain& d, int N) : dom_(d), N_(N) {
    if (N < 4) throw std::invalid_argument("build_grid: N must be at least 4");
    if (d.n != 1 && d.n != 2) throw std::invalid_argument("build_grid: dimension must be 1 or 2");
    for (int a = 0; a < d.n; ++a) {
        if (!(d.lo[a] < d.hi[a])) throw std::invalid_argument("build_grid: degenerate domain");
        h_[a] = (d.hi[a] - d.lo[a]) / (N - 1);
    }
    const int n = d.n;
    count_ = n == 1 ? N : N * N;
    auto trap = [&](int i, int axis) { return (i == 0 || i == N - 1) ? 0.5 * h_[axis] : h_[axis]; };

    w_.resize(count_);
    on_bnd_.assign(count_, 0);
    for (int node = 0; node < count_; ++node) {
        const auto [i, j] = ij(node);
        w_[node] = n == 1 ? trap(i, 0) : trap(i, 0) * trap(j, 1);
    }

    if (n == 1) {
        ex_ = N - 1;
        ey_ = 0;
    } else {
        ex_ = (N - 1) * N;
        ey_ = N * (N - 1);
    }
    we_.resize(ex_ + ey_);
    for (int e = 0; e < ex_ + ey_; ++e) {
        if (n == 1) {
            we_[e] = h_[0];
        } else if (e < ex_) {
            const int j = e / (N - 1);
            we_[e] = h_[0] * trap(j, 1);
        } else {
            const int i = (e - ex_) % N;
            we_[e] = h_[1] * trap(i, 0);
        }
    }
    wp_ = we_ / static_cast<double>(n);

    if (n == 1) {
        bnd_.push_back({0, {-1.0, 0.0}, {Face::left}, 1.0});
        bnd_.push_back({N - 1, {1.0, 0.0}, {Face::right}, 1.0});
    } else {
        for (int node = 0; node < count_; ++node) {
            const auto [i, j] = ij(node);
            BoundaryNode b;
            b.node = node;
            if (i == 0) b.faces.push_back(Face::left);
            if (i == N - 1) b.faces.push_back(Face::right);
            if (j == 0) b.faces.push_back(Face::bottom);
            if (j == N - 1) b.faces.push_back(Face::top);
            if (b.faces.empty()) continue;
            for (Face f : b.faces) {
                if (f == Face::left) b.normal[0] -= 1.0;
                if (f == Face::right) b.normal[0] += 1.0;
                if (f == Face::bottom) b.normal[1] -= 1.0;
                if (f == Face::top) b.normal[1] += 1.0;
            }
            const double len = std::hypot(b.normal[0], b.normal[1]);
            b.normal[0] /= len;
            b.normal[1] /= len;
            if (b.faces.size() == 1) {
                const bool vertical = b.faces[0] == Face::left || b.faces[0] == Face::right;
                b.weight = vertical ? h_[1] : h_[0];
            }
            bnd_.push_back(b);
        }
    }
    for (const auto& b : bnd_) on_bnd_[b.node] = 1;
}

double Grid::h_min() const { return dom_.n == 1 ? h_[0] : std::min(h_[0], h_[1]); }

std::array<double, 2> Grid::coord(int node) const {
    const auto [i, j] = ij(node);
    return {dom_.lo[0] + i * h_[0], dom_.n == 2 ? dom_.lo[1] + j * h_[1] : 0.0};
}

std::vector<int> Grid::nodes_on(const std::vector<Face>& faces) const {
    std::vector<int> out;
    for (const auto& b : bnd_) {
        for (Face f : b.faces) {
            if (std::find(faces.begin(), faces.end(), f) != faces.end()) {
                out.push_back(b.node);
                break;
            }
        }
    }
    return out;
}

std::array<double, 2> Grid::edge_point(int e) const {
    const auto [a, b] = edge_nodes(e);
    const auto xa = coord(a), xb = coord(b);
    return {0.5 * (xa[0] + xb[0]), 0.5 * (xa[1] + xb[1])};
}

std::array<int, 2> Grid::edge_nodes(int e) const {
    if (e < ex_) {
        const int i = e % (N_ - 1), j = e / (N_ - 1);
        return {index(i, j), index(i + 1, j)};
    }
    const int k = e - ex_;
    const int i = k % N_, j = k / N_;
    return {index(i, j), index(i, j + 1)};
}

GridFunction::GridFunction(std::shared_ptr<const Grid> g, int m)
    : grid(std::move(g)), components(m), values(Eigen::VectorXd::Zero(m * grid->node_count())) {}

GridFunction::GridFunction(std::shared_ptr<const Grid> g, int m, Eigen::VectorXd v)
    : grid(std::move(g)), components(m), values(std::move(v)) {
    if (values.size() != m * grid->node_count())
        throw std::invalid_argument("GridFunction: value array length must equal node count x components");
}

double lp_norm(const GridFunction& u, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm: p must lie in (1, inf)");
    const auto& w = u.grid->weights();
    double sum = 0.0;
    for (int i = 0; i < u.grid->node_count(); ++i) {
        double a2 = 0.0;
        for (int c = 0; c < u.components; ++c) a2 += u.at(i, c) * u.at(i, c);
        sum += w[i] * std::pow(a2, 0.5 * p);
    }
    return std::pow(sum, 1.0 / p);
}

double mean(const GridFunction& u, int component) {
    const auto& w = u.grid->weights();
    return w.dot(u.values.segment(component * u.grid->node_count(), u.grid->node_count())) / w.sum();
}

Eigen::VectorXd trace_restrict(const GridFunction& u, const std::vector<Face>& gamma, int component) {
    const auto nodes = u.grid->nodes_on(gamma);
    Eigen::VectorXd out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = u.at(nodes[k], component);
    return out;
}

std::string to_string(HorizonProfile p) {
    return p == HorizonProfile::exponential ? "exponential" : "polynomial_fixture";
}

HorizonProfile horizon_profile_from_string(const std::string& s) {
    if (s == "exponential") return HorizonProfile::exponential;
    if (s == "polynomial_fixture") return HorizonProfile::polynomial_fixture;
    throw std::invalid_argument("unknown horizon profile '" + s + "'");
}

HorizonFunction::HorizonFunction(const Domain& d, double delta_bar, HorizonProfile profile, double gamma)
    : dom_(d), delta_bar_(delta_bar), profile_(profile), gamma_(gamma) {
    if (!(delta_bar > 0.0)) throw std::invalid_argument("build_horizon: delta_bar must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("build_horizon: gamma must lie in (0,1)");
    dmax_ = 1.0;
    for (int a = 0; a < d.n; ++a) dmax_ *= 0.25 * (d.hi[a] - d.lo[a]);
}

double HorizonFunction::smooth_distance(const double* x) const {
    double d = 1.0;
    for (int a = 0; a < dom_.n; ++a) {
        const double f = (x[a] - dom_.lo[a]) * (dom_.hi[a] - x[a]) / (dom_.hi[a] - dom_.lo[a]);
        d *= std::max(f, 0.0);
    }
    return d;
}

double HorizonFunction::eta(const double* x) const {
    const double dt = smooth_distance(x) / dmax_;
    if (dt <= 0.0) return 0.0;
    if (profile_ == HorizonProfile::polynomial_fixture) return std::min(dt, 1.0);
    return std::exp(1.0 - 1.0 / std::min(dt, 1.0));
}

double HorizonFunction::operator()(const double* x) const {
    const double dist = dom_.dist_to_boundary(x);
    const double d = std::min(delta_bar_ * eta(x), dist);
    // The exponential profile leaves the double range near the boundary; keep it positive inside.
    if (dist > 0.0 && !(d > 0.0)) return std::min(std::numeric_limits<double>::min(), dist);
    return d;
}

bool HorizonFunction::clamped(const double* x) const {
    const double dist = dom_.dist_to_boundary(x);
    return dist > 0.0 && delta_bar_ * eta(x) > dist;
}

HorizonFunction build_horizon(const Domain& d, double delta_bar, HorizonProfile profile, double gamma) {
    return HorizonFunction(d, delta_bar, profile, gamma);
}

HorizonReport check_horizon(const Grid& g, const HorizonFunction& hz) {
    HorizonReport r;
    const int n = g.n();
    for (int node = 0; node < g.node_count(); ++node) {
        const auto x = g.coord(node);
        const double d = hz.at(x);
        const double dist = g.domain().dist_to_boundary(x.data());
        if (d > dist) r.bounded_by_distance = false;
        if (g.is_boundary(node)) {
            if (d != 0.0) r.zero_on_boundary = false;
            continue;
        }
        if (!(d > 0.0)) r.positive_inside = false;
        if (hz.clamped(x.data())) ++r.clamped_nodes;
        const auto [i, j] = g.ij(node);
        double grad2 = 0.0;
        for (int a = 0; a < n; ++a) {
            const int lo = a == 0 ? g.index(i - 1, j) : g.index(i, j - 1);
            const int hi = a == 0 ? g.index(i + 1, j) : g.index(i, j + 1);
            const double dd = (hz.at(g.coord(hi)) - hz.at(g.coord(lo))) / (2.0 * g.h(a));
            grad2 += dd * dd;
        }
        if (d > 0.0) r.decay_constant = std::max(r.decay_constant, std::sqrt(grad2) / std::pow(d, 1.0 - hz.gamma()));
    }
    return r;
}

}  // namespace hetgrad
