#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hetgrad/operators.hpp"
#include "hetgrad/solvers.hpp"

namespace hetgrad {

enum class DensityKind { quadratic, p_power, polyconvex_2d, polyconvex_logdet };
std::string to_string(DensityKind k);
DensityKind density_from_string(const std::string& s);

// Rows index the components of u, columns the directions of D. Unused entries stay zero.
using Grad2 = Eigen::Matrix2d;

struct EnergyDensity {
    DensityKind kind = DensityKind::quadratic;
    double p = 2.0;       // p_power exponent; growth exponent otherwise
    double alpha = 1.0;   // polyconvex weights
    double beta = 1.0;
    // f(A) >= c |A|^p - C
    double coercivity_c = 0.5;
    double coercivity_C = 0.0;
    bool upper_p_growth = true;

    double value(const Grad2& A) const;   // +inf outside the effective domain
    Grad2 derivative(const Grad2& A) const;
};

EnergyDensity make_density(DensityKind kind, double p = 2.0, double alpha = 1.0, double beta = 1.0);

using VectorField = std::function<std::array<double, 2>(double, double)>;

struct EnergyProblem {
    std::shared_ptr<const Discretization> disc;
    EnergyDensity density;
    int components = 1;
    Constraint mode = Constraint::dirichlet;
    std::vector<Face> gamma;      // Dirichlet part in mixed mode
    Eigen::VectorXd F;            // component-major nodal load
    VectorField g;                // Dirichlet values
    VectorField h;                // boundary load on the natural part
    double load_exponent = std::numeric_limits<double>::quiet_NaN();  // checked against p' when set

    // Filled by prepare().
    std::vector<char> constrained;
    std::vector<int> natural;
    Eigen::VectorXd boundary_load;  // b_i h(x_i), component-major
    Eigen::VectorXd dirichlet;      // g at constrained nodes, component-major

    void prepare();
};

double energy_eval(const EnergyProblem& prob, const Eigen::VectorXd& u);
Eigen::VectorXd energy_grad(const EnergyProblem& prob, const Eigen::VectorXd& u);

// Dirichlet values imposed and, in the Neumann mode, the weighted mean removed.
Eigen::VectorXd make_feasible(const EnergyProblem& prob, Eigen::VectorXd u);
// Dirichlet modes: quadratic extension of the boundary data with zero load; Neumann: zero.
Eigen::VectorXd initial_guess(const EnergyProblem& prob);

struct MinimizeOptions {
    int max_iter = 20000;
    double grad_tol = 1e-10;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-30;
    bool precondition = true;  // descend in the metric of the quadratic energy
};

struct HistoryEntry {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct MinimizeResult {
    Eigen::VectorXd u;
    std::vector<HistoryEntry> history;
    bool converged = false;
    bool hit_max_iter = false;
    bool stalled = false;  // line search reached the step floor
    double grad_norm = 0.0;
};

MinimizeResult minimize(const EnergyProblem& prob, const Eigen::VectorXd& u0, const MinimizeOptions& opt = {});

struct ElResidual {
    double interior = 0.0;  // weighted L2 of -Div*(D_A f(Du)) - F at interior nodes
    double natural = 0.0;   // boundary-weighted L2 of D_A f(grad_h u) nu - h on the natural part
    double value() const { return std::max(interior, natural); }
};

ElResidual el_residual_parts(const EnergyProblem& prob, const Eigen::VectorXd& u);
double el_residual(const EnergyProblem& prob, const Eigen::VectorXd& u);

}  // namespace hetgrad
