#include "rays.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hetgrad::detail {

std::vector<Direction> directions(int n, int m) {
    if (n == 1) return {{{1.0, 0.0}, 1.0}, {{-1.0, 0.0}, 1.0}};
    std::vector<Direction> out(m);
    const double dth = 2.0 * std::numbers::pi / m;
    for (int k = 0; k < m; ++k) {
        const double th = (k + 0.5) * dth;
        out[k] = {{std::cos(th), std::sin(th)}, dth};
    }
    return out;
}

int ray_count(double d, double h, int rays_min, double rays_per_h) {
    const int m = std::max(rays_min, static_cast<int>(std::ceil(rays_per_h * d / h)));
    return 4 * ((m + 3) / 4);
}

namespace {

// Cell index along one axis for a ray leaving coordinate x in direction e.
int start_cell(double x, double lo, double h, double e, int ncell) {
    const double t = (x - lo) / h;
    const double rt = std::round(t);
    int k;
    if (std::abs(t - rt) < 1e-10) {
        k = static_cast<int>(rt) - (e < 0.0 ? 1 : 0);
    } else {
        k = static_cast<int>(std::floor(t));
    }
    return std::clamp(k, 0, ncell - 1);
}

}  // namespace

std::vector<Segment> trace_ray(const Grid& g, const std::array<double, 2>& p, const std::array<double, 2>& e,
                               double d) {
    std::vector<Segment> segs;
    const int n = g.n();
    const int nc = g.N() - 1;
    const auto& dom = g.domain();
    int c[2] = {0, 0};
    double tnext[2] = {INFINITY, INFINITY};
    double tstep[2] = {INFINITY, INFINITY};
    int step[2] = {0, 0};
    for (int a = 0; a < n; ++a) {
        const double h = g.h(a);
        c[a] = start_cell(p[a], dom.lo[a], h, e[a], nc);
        if (e[a] > 0.0) {
            step[a] = 1;
            tnext[a] = (dom.lo[a] + (c[a] + 1) * h - p[a]) / e[a];
            tstep[a] = h / e[a];
        } else if (e[a] < 0.0) {
            step[a] = -1;
            tnext[a] = (dom.lo[a] + c[a] * h - p[a]) / e[a];
            tstep[a] = -h / e[a];
        }
        tnext[a] = std::max(tnext[a], 0.0);
    }
    double r0 = 0.0;
    while (r0 < d) {
        const int axis = (n == 2 && tnext[1] < tnext[0]) ? 1 : 0;
        const double r1 = std::min(tnext[axis], d);
        if (r1 > r0) segs.push_back({r0, r1, c[0], c[1]});
        r0 = std::max(r0, r1);
        if (r0 >= d) break;
        c[axis] += step[axis];
        tnext[axis] += tstep[axis];
        if (c[axis] < 0 || c[axis] >= nc) break;  // left the domain; only grazing rays reach here
    }
    return segs;
}

void nodal_terms(const Grid& g, const std::array<double, 2>& p, const std::array<double, 2>& e, const Segment& s,
                 std::vector<PolyTerm>& out) {
    out.clear();
    const auto& dom = g.domain();
    const double xi0 = (p[0] - (dom.lo[0] + s.ci * g.h(0))) / g.h(0);
    const double ax = e[0] / g.h(0);
    if (g.n() == 1) {
        out.push_back({g.index(s.ci), {1.0 - xi0, -ax, 0.0}});
        out.push_back({g.index(s.ci + 1), {xi0, ax, 0.0}});
        return;
    }
    const double eta0 = (p[1] - (dom.lo[1] + s.cj * g.h(1))) / g.h(1);
    const double ay = e[1] / g.h(1);
    auto mul = [](double a0, double a1, double b0, double b1) {
        return std::array<double, 3>{a0 * b0, a0 * b1 + a1 * b0, a1 * b1};
    };
    out.push_back({g.index(s.ci, s.cj), mul(1.0 - xi0, -ax, 1.0 - eta0, -ay)});
    out.push_back({g.index(s.ci + 1, s.cj), mul(xi0, ax, 1.0 - eta0, -ay)});
    out.push_back({g.index(s.ci, s.cj + 1), mul(1.0 - xi0, -ax, eta0, ay)});
    out.push_back({g.index(s.ci + 1, s.cj + 1), mul(xi0, ax, eta0, ay)});
}

void slope_terms(const Grid& g, const std::array<double, 2>& p, const std::array<double, 2>& e, const Segment& s,
                 int k, std::vector<PolyTerm>& out) {
    out.clear();
    const auto& dom = g.domain();
    if (g.n() == 1) {
        out.push_back({g.x_edge(s.ci, 0), {1.0, 0.0, 0.0}});
        return;
    }
    if (k == 0) {
        // x-slope is linear in y across the cell, interpolating bottom and top edges
        const double eta0 = (p[1] - (dom.lo[1] + s.cj * g.h(1))) / g.h(1);
        const double ay = e[1] / g.h(1);
        out.push_back({g.x_edge(s.ci, s.cj), {1.0 - eta0, -ay, 0.0}});
        out.push_back({g.x_edge(s.ci, s.cj + 1), {eta0, ay, 0.0}});
    } else {
        const double xi0 = (p[0] - (dom.lo[0] + s.ci * g.h(0))) / g.h(0);
        const double ax = e[0] / g.h(0);
        out.push_back({g.y_edge(s.ci, s.cj), {1.0 - xi0, -ax, 0.0}});
        out.push_back({g.y_edge(s.ci + 1, s.cj), {xi0, ax, 0.0}});
    }
}

std::vector<std::pair<int, double>> RowBuilder::finish() {
    std::stable_sort(items_.begin(), items_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto& it : items_) {
        if (!out.empty() && out.back().first == it.first)
            out.back().second += it.second;
        else
            out.push_back(it);
    }
    items_.clear();
    return out;
}

double rho_moment(const KernelProfiles& kp, int k, double a, double b, double d) {
    const int n = kp.spec().n;
    const int m = n - 2 + k;
    const double al = a / d, be = b / d;
    double v;
    if (m == n - 2)
        v = kp.g_tail(al) - kp.g_tail(be);
    else
        v = kp.k_moment(m, be) - kp.k_moment(m, al);
    return std::pow(d, k - 1) * v;
}

double q_moment(const KernelProfiles& kp, int k, double a, double b, double d) {
    const int m = kp.spec().n - 1 + k;
    return std::pow(d, k) * (kp.j_moment(m, b / d) - kp.j_moment(m, a / d));
}

}  // namespace hetgrad::detail
