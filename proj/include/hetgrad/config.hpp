#pragma once

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetgrad/geometry.hpp"
#include "hetgrad/kernels.hpp"
#include "hetgrad/operators.hpp"
#include "hetgrad/solvers.hpp"
#include "hetgrad/variational.hpp"

namespace hetgrad {

constexpr int kConfigVersion = 1;

// Raised for malformed or unknown configuration keys; the message names the key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KernelConfig {
    Family family = Family::fractional;
    double s = 0.5;
    double kappa = std::numeric_limits<double>::quiet_NaN();  // log_fractional only
    double epsilon_H = 0.5;
};

struct DomainConfig {
    std::string type = "interval";
    std::vector<double> bounds{0.0, 1.0};
    Domain make() const;
};

struct HorizonConfig {
    double delta_bar = 0.05;
    HorizonProfile profile = HorizonProfile::exponential;
    double gamma = 0.5;
};

// Nodal data fields: constant + amplitude * prod_a sin(frequency * pi * t_a), t the unit coordinates.
struct FieldSpec {
    double constant = 0.0;
    double amplitude = 0.0;
    double frequency = 1.0;
    bool identity = false;  // vector Dirichlet data g(x) = x
};

struct ProblemConfig {
    DensityKind density = DensityKind::quadratic;
    double p = 2.0;
    double alpha = 1.0;
    double beta = 1.0;
    Constraint bc = Constraint::mixed;
    std::vector<Face> gamma{Face::left};
    FieldSpec load{1.0, 0.0, 1.0, false};
    FieldSpec dirichlet{};
    FieldSpec flux{};
};

struct SolverConfig {
    double rtol = 1e-10;
    double grad_tol = 1e-10;
    int max_iter = 20000;
    std::uint64_t seed = 20240611;
    int budget = 4096;
    int threads = 0;
    int rays_min = 32;
    double rays_per_h = 12.0;
};

// Kernel used by the jump-admissibility check.
struct JumpConfig {
    double s = 0.3;
    double p = 2.0;
};

struct OutputConfig {
    std::string dir = ".";
};

struct RunConfig {
    int version = kConfigVersion;
    KernelConfig kernel;
    DomainConfig domain;
    int N = 256;
    HorizonConfig horizon;
    ProblemConfig problem;
    SolverConfig solver;
    JumpConfig jump;
    OutputConfig output;

    int dim() const { return domain.type == "rectangle" ? 2 : 1; }
    KernelSpec kernel_spec() const;
    AssemblyOptions assembly() const;
    nlohmann::json to_json() const;
};

RunConfig default_config();
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Evaluate a field specification at x on the given domain.
double eval_field(const FieldSpec& f, const Domain& d, double x, double y);

// Grid, kernel profiles, horizon and all operators for a configuration at resolution N.
struct Setup {
    std::shared_ptr<const Grid> grid;
    std::shared_ptr<const KernelProfiles> profiles;
    std::shared_ptr<const HorizonFunction> horizon;
    std::shared_ptr<const Discretization> disc;
    AssemblyOptions options;
};

Setup make_setup(const RunConfig& cfg, int N);
Setup make_setup(const RunConfig& cfg, int N, std::shared_ptr<const KernelProfiles> profiles);

}  // namespace hetgrad
