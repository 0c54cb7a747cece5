#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "hetgrad/config.hpp"

namespace hetgrad {

enum class Status { pass, fail, recorded };
std::string to_string(Status s);

struct CheckResult {
    std::string name;
    Status status = Status::fail;
    double value = 0.0;
    double tolerance = 0.0;
    std::string anchor;
    std::string detail;
    nlohmann::json to_json() const;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    int count(Status s) const;
    bool any_fail() const { return count(Status::fail) > 0; }
    nlohmann::json to_json() const;
};

// Problem data from a configuration.
Eigen::VectorXd make_load(const ProblemConfig& p, const Grid& g, int components = 1);
BoundaryData make_boundary_data(const ProblemConfig& p, const Domain& d);
EnergyProblem make_energy_problem(const ProblemConfig& p, const Setup& s, DensityKind density, int components = 1);

// Measurements shared by the verify command and the acceptance suite.
struct KernelIdentities {
    double mass_error = 0.0;   // |int rho_1 - n|
    double l1_error = 0.0;     // | ||Q||_1 - 1 |
    double qhat0_error = 0.0;  // |Qhat(0) - 1|
};
KernelIdentities kernel_identities(const KernelProfiles& kp);

// max |D(A.x + b) - A| / |A| over all evaluation points.
double affine_error(const Setup& s);
// max |D 1| (exactly zero when constants are annihilated bitwise).
double constant_residual(const Setup& s);
// max |Q 1 - 1| over interior rows.
double q_row_sum_error(const Setup& s);
// ||D u - Q grad_h u||_inf with the nodal gradient, u = sin(2 pi x) (times sin(2 pi y) in 2D).
double coupling_error_nodal(const Setup& s);
// ||D u - Q_E grad+ u||_inf / ||D u||_inf for the same u.
double coupling_error_staggered(const Setup& s);
// Relative defect of <Q* a, b>_W = <a, Q b>_W over random vectors.
double adjoint_error(const Setup& s, std::uint64_t seed);

struct IbpResult {
    double residual = 0.0;
    double scale = 0.0;  // magnitude of the volume term
};
// |sum_P w Dphi.psi + sum_i w phi Div*psi - sum_b b phi psi.nu|; compact uses psi supported inside.
IbpResult ibp_residual(const Setup& s, bool compact);

// max |D phi - grad phi| over evaluation points within distance t of the boundary, phi = sin(2 pi x).
double localization_error(const Setup& s, double t);

struct JumpNorms {
    double nonlocal = 0.0;   // ||D 1_E||_{L2}
    double classical = 0.0;  // ||grad+ 1_E||_{L2}
};
JumpNorms jump_norms(const Setup& s);

// Max relative mismatch between the energy gradient and central differences along random directions.
double gradient_check(const EnergyProblem& prob, const Eigen::VectorXd& u, int directions, std::uint64_t seed);

struct CrossCheck {
    double l2_difference = 0.0;
    int iterations = 0;
    bool converged = false;
};
CrossCheck quadratic_crosscheck(const RunConfig& cfg, const Setup& s);

// Euler-Lagrange residual of the quadratic minimizer of the configured problem.
double quadratic_el_residual(const RunConfig& cfg, const Setup& s);

// Coarse resolution used for refinement comparisons (h doubles).
int coarser(int N);

VerifyReport verify_suite(const RunConfig& cfg);

}  // namespace hetgrad
