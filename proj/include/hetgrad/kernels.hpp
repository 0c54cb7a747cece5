#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hetgrad/tables.hpp"

namespace hetgrad {

enum class Family { fractional, log_fractional, power_fixture };
enum class Cutoff { bump, unit };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Radial kernel rho_1(z) = c * w(|z|) * |z|^{-(n+s-1)} [* log(1/|z|)], supported in the unit ball.
struct KernelSpec {
    int n = 1;
    Family family = Family::fractional;
    double s = 0.5;
    Cutoff cutoff = Cutoff::bump;
    double lambda = 0.5;
    double kappa = 0.5;
    double normalization_c = 1.0;
    double epsilon_H = 0.5;
};

// Surface measure of the unit sphere in R^n (2 for n = 1, 2*pi for n = 2).
double sphere_measure(int n);

double cutoff_w(Cutoff w, double r);

// kappa is only read for log_fractional (must lie in (s,1)); NaN selects (s+1)/2.
KernelSpec build_kernel(Family family, int n, double s, Cutoff cutoff = Cutoff::bump,
                        double kappa = std::numeric_limits<double>::quiet_NaN(),
                        double epsilon_H = 0.5);

// Radial representative rho-bar_1(r); zero for r >= 1.
double rho_bar(const KernelSpec& spec, double r);

// n-dimensional integral of rho_1 by independent adaptive quadrature.
double kernel_mass(const KernelSpec& spec);

// Qbar(r) = int_r^1 rho-bar(t)/t dt by adaptive quadrature, split geometrically towards r.
double q_profile_direct(const KernelSpec& spec, double r);

// Tabulated profiles plus the radial moments used by operator assembly.
class KernelProfiles {
public:
    explicit KernelProfiles(const KernelSpec& spec);

    const KernelSpec& spec() const { return spec_; }

    // Qbar(r); 0 for r >= 1. Throws for r <= 0.
    double q_profile(double r) const;
    // G(t) = int_t^1 rho-bar(r) r^{n-2} dr (singular at 0; only differences are used).
    double g_tail(double t) const;
    // K_m(t) = int_0^t rho-bar(r) r^m dr, m in [n-1, 3].
    double k_moment(int m, double t) const;
    // J_m(t) = int_0^t Qbar(r) r^m dr, m in [n-1, 3].
    double j_moment(int m, double t) const;

    // Radial Fourier transform of Q_{rho_1} (Fourier convention exp(-2 pi i x.xi)).
    double q_hat(double xi_mag) const;

    // |S^{n-1}| int_0^1 Qbar(r) r^{n-1} dr.
    double l1_norm_Q() const;

private:
    KernelSpec spec_;
    std::shared_ptr<const RadialTable> qbar_;
    std::shared_ptr<const RadialTable> gtail_;
    std::vector<std::shared_ptr<const RadialTable>> kmom_;  // index m
};

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    double worst_violation = 0.0;  // relative increase (H1) or almost-monotonicity constant (H3/H4)
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    double epsilon_H = 0.5;
    bool all_pass() const;
};

// Sampled checks of (H0), (H1), (H3), (H4) for an arbitrary radial profile.
HypothesisReport verify_hypotheses(const std::function<double(double)>& rho, int n, double lambda,
                                   double kappa, double epsilon_H, int sample_count,
                                   double mass = std::numeric_limits<double>::quiet_NaN());
HypothesisReport verify_hypotheses(const KernelSpec& spec, int sample_count);

}  // namespace hetgrad
