#pragma once

// Exact radial product integration of piecewise-(bi)linear grid data along rays.

#include <array>
#include <utility>
#include <vector>

#include "hetgrad/geometry.hpp"
#include "hetgrad/kernels.hpp"

namespace hetgrad::detail {

struct Direction {
    std::array<double, 2> e;
    double weight;
};

// 1D: {+1, -1}; 2D: m shifted equispaced angles, m a multiple of 4.
std::vector<Direction> directions(int n, int m);
int ray_count(double d, double h, int rays_min, double rays_per_h);

// A linear functional on grid degrees of freedom times a polynomial in r.
struct PolyTerm {
    int dof;
    std::array<double, 3> c;  // coefficients of r^0, r^1, r^2
};

// Segment of the ray p + r e, r in [a, b], inside cell (ci, cj).
struct Segment {
    double a, b;
    int ci, cj;
};

std::vector<Segment> trace_ray(const Grid& g, const std::array<double, 2>& p, const std::array<double, 2>& e,
                               double d);

// Nodal interpolant on a cell restricted to the ray.
void nodal_terms(const Grid& g, const std::array<double, 2>& p, const std::array<double, 2>& e, const Segment& s,
                 std::vector<PolyTerm>& out);

// Component k of the gradient of the nodal interpolant on a cell, in terms of edge slopes.
void slope_terms(const Grid& g, const std::array<double, 2>& p, const std::array<double, 2>& e, const Segment& s,
                 int k, std::vector<PolyTerm>& out);

// Sparse row under construction; finalized into sorted unique (col, value) pairs.
class RowBuilder {
public:
    void add(int col, double v) { items_.emplace_back(col, v); }
    std::vector<std::pair<int, double>> finish();

private:
    std::vector<std::pair<int, double>> items_;
};

// Moments of the rescaled kernels over r in [a, b] for horizon d.
//  rho_moment(k): int_a^b d^{-n} rho-bar(r/d) r^{n-1} r^{k-1} dr
//  q_moment(k):   int_a^b d^{-n} Qbar(r/d)  r^{n-1} r^{k}   dr
double rho_moment(const KernelProfiles& kp, int k, double a, double b, double d);
double q_moment(const KernelProfiles& kp, int k, double a, double b, double d);

}  // namespace hetgrad::detail
