#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace hetgrad {

enum class Face { left, right, bottom, top };
std::string to_string(Face f);
Face face_from_string(const std::string& s);

// Interval (n = 1) or axis-aligned rectangle (n = 2).
struct Domain {
    int n = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    static Domain interval(double a, double b);
    static Domain rectangle(double a1, double b1, double a2, double b2);

    double measure() const;
    std::vector<Face> faces() const;
    // Distance from x to the boundary (x assumed inside).
    double dist_to_boundary(const double* x) const;
};

struct BoundaryNode {
    int node = 0;
    std::array<double, 2> normal{0.0, 0.0};
    std::vector<Face> faces;  // two entries at rectangle corners
    double weight = 0.0;      // boundary quadrature weight (corners carry none)
};

// Uniform tensor grid, nodes i + N*j, trapezoid weights.
class Grid {
public:
    Grid(const Domain& d, int N);

    const Domain& domain() const { return dom_; }
    int n() const { return dom_.n; }
    int N() const { return N_; }
    int node_count() const { return count_; }
    double h(int axis) const { return h_[axis]; }
    double h_min() const;

    int index(int i, int j = 0) const { return i + N_ * j; }
    std::array<int, 2> ij(int node) const { return {node % N_, node / N_}; }
    std::array<double, 2> coord(int node) const;

    const Eigen::VectorXd& weights() const { return w_; }
    const std::vector<BoundaryNode>& boundary() const { return bnd_; }
    bool is_boundary(int node) const { return on_bnd_[node]; }
    // Boundary nodes lying on any of the given faces.
    std::vector<int> nodes_on(const std::vector<Face>& faces) const;

    // Staggered edge points: x-edges (i+1/2, j) first, then y-edges (i, j+1/2).
    int edge_count() const { return ex_ + ey_; }
    int x_edge_count() const { return ex_; }
    int edge_axis(int e) const { return e < ex_ ? 0 : 1; }
    std::array<double, 2> edge_point(int e) const;
    std::array<int, 2> edge_nodes(int e) const;  // tail, head along the edge axis
    int x_edge(int i, int j) const { return i + (N_ - 1) * j; }
    int y_edge(int i, int j) const { return ex_ + i + N_ * j; }
    // Weight of the edge as a carrier of its own slope: h along the axis times trapezoid across.
    const Eigen::VectorXd& edge_weights() const { return we_; }
    // Weight of the edge as a vector-field evaluation point: edge weight / n.
    const Eigen::VectorXd& point_weights() const { return wp_; }

private:
    Domain dom_;
    int N_ = 0;
    int count_ = 0;
    int ex_ = 0, ey_ = 0;
    std::array<double, 2> h_{1.0, 1.0};
    Eigen::VectorXd w_, we_, wp_;
    std::vector<BoundaryNode> bnd_;
    std::vector<char> on_bnd_;
};

// Nodal field with m components stored component-major: values[c * nodes + i].
struct GridFunction {
    std::shared_ptr<const Grid> grid;
    int components = 1;
    Eigen::VectorXd values;

    GridFunction() = default;
    GridFunction(std::shared_ptr<const Grid> g, int m);
    GridFunction(std::shared_ptr<const Grid> g, int m, Eigen::VectorXd v);
    double at(int node, int c = 0) const { return values[c * grid->node_count() + node]; }
};

double lp_norm(const GridFunction& u, double p);
double mean(const GridFunction& u, int component = 0);
Eigen::VectorXd trace_restrict(const GridFunction& u, const std::vector<Face>& gamma, int component = 0);

enum class HorizonProfile { exponential, polynomial_fixture };
std::string to_string(HorizonProfile p);
HorizonProfile horizon_profile_from_string(const std::string& s);

// delta(x) = min(delta_bar * eta(x), dist(x, boundary)).
class HorizonFunction {
public:
    HorizonFunction(const Domain& d, double delta_bar, HorizonProfile profile, double gamma = 0.5);

    double delta_bar() const { return delta_bar_; }
    HorizonProfile profile() const { return profile_; }
    double gamma() const { return gamma_; }
    const Domain& domain() const { return dom_; }

    double smooth_distance(const double* x) const;
    double eta(const double* x) const;
    double operator()(const double* x) const;
    double at(const std::array<double, 2>& x) const { return (*this)(x.data()); }
    // True when the distance clamp is active at x.
    bool clamped(const double* x) const;

private:
    Domain dom_;
    double delta_bar_;
    HorizonProfile profile_;
    double gamma_;
    double dmax_ = 1.0;
};

HorizonFunction build_horizon(const Domain& d, double delta_bar, HorizonProfile profile, double gamma = 0.5);

struct HorizonReport {
    bool bounded_by_distance = true;   // delta <= dist at every node
    bool zero_on_boundary = true;
    bool positive_inside = true;
    int clamped_nodes = 0;             // nodes where the distance clamp is active
    double decay_constant = 0.0;       // fitted C in |grad delta| <= C delta^{1-gamma}
};

HorizonReport check_horizon(const Grid& g, const HorizonFunction& hz);

}  // namespace hetgrad
