#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetgrad/geometry.hpp"
#include "hetgrad/operators.hpp"

namespace hetgrad {

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Full spectrum of a general dense matrix, ordered by real part then imaginary part.
std::vector<std::complex<double>> eig_dense(const Eigen::MatrixXd& A, int budget = 4096);

struct WeightedSvd {
    Eigen::VectorXd sigma;  // descending
    Eigen::MatrixXd V;      // right singular vectors in the weighted coordinates
};

// SVD of diag(sqrt(w_row)) A diag(1/sqrt(w_col)) B, where B (optional, orthonormal columns) restricts
// the domain to a subspace. Empty weight vectors mean unit weights.
WeightedSvd svd_weighted_full(const Eigen::MatrixXd& A, const Eigen::VectorXd& w_row, const Eigen::VectorXd& w_col,
                              const Eigen::MatrixXd* basis = nullptr, int budget = 4096);
Eigen::VectorXd svd_weighted(const Eigen::MatrixXd& A, const Eigen::VectorXd& w_row, const Eigen::VectorXd& w_col,
                             const Eigen::MatrixXd* basis = nullptr, int budget = 4096);

enum class Constraint { dirichlet, neumann_meanzero, mixed };
std::string to_string(Constraint c);
Constraint constraint_from_string(const std::string& s);

// Interior rows: the assembled Laplacian, or the weak form W^{-1} D^T W_P D.
enum class InteriorForm { strong, variational };

using ScalarField = std::function<double(double, double)>;

struct BoundaryData {
    std::vector<Face> gamma;  // Dirichlet part (mixed); all faces for dirichlet
    ScalarField g;            // Dirichlet values
    ScalarField h;            // natural flux on the rest of the boundary
};

struct LinearSystem {
    Constraint constraint = Constraint::dirichlet;
    OperatorMatrix matrix;          // Laplacian kind, with boundary rows in place
    Eigen::VectorXd rhs;
    std::vector<int> constrained;   // nodes carrying identity rows
    std::vector<int> natural;       // nodes carrying flux-balance rows
    bool bordered = false;          // mean-zero Lagrange row appended
    double compatibility = 0.0;     // |sum w F + sum b h| (neumann only)
};

LinearSystem build_system(const Discretization& disc, Constraint c, const Eigen::VectorXd& F, const BoundaryData& bc,
                          InteriorForm form = InteriorForm::strong);

struct SolveResult {
    GridFunction u;
    double residual = 0.0;     // relative, unconstrained rows
    double multiplier = 0.0;   // Lagrange multiplier of the mean-zero row
};

SolveResult solve_linear(const LinearSystem& sys, std::shared_ptr<const Grid> grid, double rtol = 1e-10);

enum class Subspace { mean_zero, trace_zero_on_gamma, vanish_on_U, all };
std::string to_string(Subspace s);
Subspace subspace_from_string(const std::string& s);

struct PoincareReport {
    double p = 2.0;
    Subspace subspace = Subspace::mean_zero;
    double constant_estimate = 0.0;
    std::string method;       // "svd" or "sampled"
    double sigma_min = 0.0;
    bool lower_bound = false; // sampled estimates only bound the constant from below
    int samples = 0;
};

struct PoincareOptions {
    std::vector<Face> gamma;   // trace_zero_on_gamma
    std::vector<int> U;        // vanish_on_U
    int samples = 1000;
    std::uint64_t seed = 20240611;
    int budget = 4096;
};

PoincareReport poincare_constant(const OperatorMatrix& D, const Grid& g, Subspace sub, double p,
                                 const PoincareOptions& opt = {});

}  // namespace hetgrad
