#pragma once

#include <Eigen/Sparse>

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hetgrad/geometry.hpp"
#include "hetgrad/kernels.hpp"

namespace hetgrad {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class OpKind { D, Q, Qstar, DivStar, Laplacian, GradClassical, GradNodal, Div, QE, QPoints };
std::string to_string(OpKind k);

// Index spaces. `points` is n component blocks over the edge midpoints; `nodal_vector` is n blocks over nodes.
enum class Space { nodes, edges, points, nodal_vector };

struct OperatorMatrix {
    OpKind kind = OpKind::D;
    Space row_space = Space::nodes;
    Space col_space = Space::nodes;
    SpMat mat;
    std::vector<double> row_support;  // horizon at the row's evaluation point
    bool symmetrized = false;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat * x; }
    int rows() const { return static_cast<int>(mat.rows()); }
    int cols() const { return static_cast<int>(mat.cols()); }
};

struct AssemblyOptions {
    int rays_min = 32;        // angular nodes in 2D
    double rays_per_h = 12.0; // extra angular nodes per cell width of horizon
    int threads = 0;          // 0: HETGRAD_THREADS or 1
};

int resolve_threads(int requested);

// Nonlocal gradient of the nodal interpolant at every edge midpoint (points x nodes).
OperatorMatrix assemble_D(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                          const AssemblyOptions& opt = {});
// Coupling operator on nodal scalars, evaluated at nodes (nodes x nodes).
OperatorMatrix assemble_Q(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                          const AssemblyOptions& opt = {});
// Coupling operator on nodal scalars, evaluated at edge midpoints (edges x nodes).
OperatorMatrix assemble_Q_points(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                                 const AssemblyOptions& opt = {});
// Coupling operator on staggered slopes, evaluated at edge midpoints (points x edges).
OperatorMatrix assemble_QE(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                           const AssemblyOptions& opt = {});
// W^{-1} Q^T W for a nodal Q.
OperatorMatrix assemble_Qstar(const Grid& g, const OperatorMatrix& Q);
OperatorMatrix assemble_Qstar(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                              const AssemblyOptions& opt = {});

// Edge differences (edges x nodes).
OperatorMatrix assemble_grad(const Grid& g);
// Centred differences inside, one-sided on the boundary (nodal_vector x nodes).
OperatorMatrix assemble_grad_nodal(const Grid& g);
// Staggered divergence, centred inside, first-order one-sided at boundary nodes (nodes x edges).
OperatorMatrix assemble_div(const Grid& g);
// Div o Q_E^*, with Q_E^* = W_E^{-1} Q_E^T W_P (nodes x points).
OperatorMatrix assemble_div_star(const Grid& g, const OperatorMatrix& QE);
OperatorMatrix assemble_div_star(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                                 const AssemblyOptions& opt = {});
// -DivStar * D; symmetrized as (L + L^T)/2 only on request.
OperatorMatrix assemble_laplacian(const OperatorMatrix& div_star, const OperatorMatrix& D, bool symmetrize = false);
OperatorMatrix assemble_laplacian(const Grid& g, const KernelProfiles& kp, const HorizonFunction& hz,
                                  bool symmetrize = false, const AssemblyOptions& opt = {});

// Everything assembled once for a configuration.
struct Discretization {
    std::shared_ptr<const Grid> grid;
    std::shared_ptr<const KernelProfiles> profiles;
    std::shared_ptr<const HorizonFunction> horizon;
    OperatorMatrix D, Q, QE, grad, div, div_star, laplacian;

    static Discretization build(std::shared_ptr<const Grid> g, std::shared_ptr<const KernelProfiles> kp,
                                std::shared_ptr<const HorizonFunction> hz, const AssemblyOptions& opt = {});
};

// Values of a smooth function at nodes / edge points.
Eigen::VectorXd sample_nodes(const Grid& g, const std::function<double(double, double)>& f);
Eigen::VectorXd sample_points(const Grid& g, const std::function<std::array<double, 2>(double, double)>& f);

class SymbolEvaluator {
public:
    SymbolEvaluator(std::shared_ptr<const KernelProfiles> kp, std::shared_ptr<const HorizonFunction> hz)
        : kp_(std::move(kp)), hz_(std::move(hz)) {}
    double operator()(const std::array<double, 2>& x, double xi) const;

private:
    std::shared_ptr<const KernelProfiles> kp_;
    std::shared_ptr<const HorizonFunction> hz_;
};

struct SymbolReport {
    double fitted_C = 0.0;  // min of q(x,xi) <xi>^{1-lambda}
    double min_q = 0.0;
    bool pass = false;
};

SymbolReport symbol_lower_bound_check(const SymbolEvaluator& ev, double lambda,
                                      const std::vector<std::array<double, 2>>& x_samples,
                                      const std::vector<double>& xi_samples);

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;
    double min_real = 0.0;
    double min_modulus = 0.0;
    int nonpositive_real = 0;
};

SpectrumReport spectrum_Q(const OperatorMatrix& Q, int budget = 4096);

struct NullspaceReport {
    int dimension = 0;
    Eigen::MatrixXd basis;                // nodal vectors, W-orthonormal columns
    Eigen::VectorXd singular_values;      // descending, padded with zeros to the column count
    double sigma_max = 0.0;
    double sigma_second = 0.0;            // smallest singular value above the null threshold
    double constant_cosine = 0.0;         // W-cosine between the first null vector and constants
};

NullspaceReport nullspace_D(const OperatorMatrix& D, const Grid& g, double rel_tol = 1e-10, int budget = 4096);

}  // namespace hetgrad
