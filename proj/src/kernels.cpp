#include "hetgrad/kernels.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hetgrad {

namespace bq = boost::math::quadrature;

std::string to_string(Family f) {
    switch (f) {
        case Family::fractional: return "fractional";
        case Family::log_fractional: return "log_fractional";
        case Family::power_fixture: return "power_fixture";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "fractional") return Family::fractional;
    if (s == "log_fractional") return Family::log_fractional;
    if (s == "power_fixture") return Family::power_fixture;
    throw std::invalid_argument("unknown kernel family '" + s + "'");
}

double sphere_measure(int n) {
    if (n == 1) return 2.0;
    if (n == 2) return 2.0 * std::numbers::pi;
    throw std::invalid_argument("dimension must be 1 or 2");
}

double cutoff_w(Cutoff w, double r) {
    if (r >= 1.0) return 0.0;
    if (w == Cutoff::unit) return 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

namespace {

// Shape of the kernel without the constant c.
double shape(const KernelSpec& k, double r) {
    if (r >= 1.0) return 0.0;
    double v = cutoff_w(k.cutoff, r) * std::pow(r, -(k.n + k.s - 1.0));
    if (k.family == Family::log_fractional) v *= std::log(1.0 / r);
    return v;
}

// int_0^t r^{beta-1} L(r) dr for small t, L = 1 or log(1/r).
double head_power(double t, double beta, bool logf) {
    if (t <= 0.0) return 0.0;
    const double tb = std::pow(t, beta);
    return logf ? tb * (std::log(1.0 / t) / beta + 1.0 / (beta * beta)) : tb / beta;
}

// Antiderivative of r^{-1-sigma} L(r).
double tail_antideriv(double r, double sigma, bool logf) {
    const double rs = std::pow(r, -sigma);
    return logf ? rs * (-std::log(1.0 / r) / sigma + 1.0 / (sigma * sigma)) : -rs / sigma;
}

double gauss20(const std::function<double(double)>& f, double a, double b) {
    return bq::gauss<double, 20>::integrate(f, a, b);
}

}  // namespace

KernelSpec build_kernel(Family family, int n, double s, Cutoff cutoff, double kappa, double epsilon_H) {
    if (n != 1 && n != 2) throw std::invalid_argument("build_kernel: n must be 1 or 2");
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("build_kernel: s must lie in (0,1) for integrability");
    if (!(epsilon_H > 0.0 && epsilon_H < 1.0)) throw std::invalid_argument("build_kernel: epsilon_H must lie in (0,1)");
    KernelSpec k;
    k.n = n;
    k.family = family;
    k.s = s;
    k.cutoff = family == Family::power_fixture ? Cutoff::unit : cutoff;
    k.epsilon_H = epsilon_H;
    if (cutoff_w(k.cutoff, 0.0) <= 0.0) throw std::invalid_argument("build_kernel: w(0) must be positive");
    k.lambda = s;
    k.kappa = s;
    if (family == Family::log_fractional) {
        k.kappa = std::isnan(kappa) ? 0.5 * (s + 1.0) : kappa;
        if (!(k.kappa > s && k.kappa < 1.0))
            throw std::invalid_argument("build_kernel: log_fractional requires kappa in (s,1)");
    }

    double integral = 0.0;
    if (family == Family::power_fixture) {
        integral = 1.0 / (1.0 - s);  // int_0^1 r^{-s} dr
    } else {
        // int_0^1 w(r) r^{-s} [log(1/r)] dr on the table panels plus the closed-form head
        const bool logf = family == Family::log_fractional;
        const auto t = geometric_grid(kTableMin, kTablePoints);
        integral = cutoff_w(k.cutoff, 0.0) * head_power(t.front(), 1.0 - s, logf);
        KernelSpec unit = k;
        auto f = [&](double r) { return shape(unit, r) * std::pow(r, n - 1); };
        for (std::size_t i = 0; i + 1 < t.size(); ++i) integral += gauss20(f, t[i], t[i + 1]);
    }
    k.normalization_c = n / (sphere_measure(n) * integral);
    return k;
}

double rho_bar(const KernelSpec& spec, double r) {
    if (r <= 0.0) throw std::invalid_argument("rho_bar: r must be positive");
    return spec.normalization_c * shape(spec, r);
}

double kernel_mass(const KernelSpec& spec) {
    bq::tanh_sinh<double> ts;
    auto f = [&](double r) { return r < 1e-200 ? 0.0 : rho_bar(spec, r) * std::pow(r, spec.n - 1); };
    return sphere_measure(spec.n) * ts.integrate(f, 0.0, 1.0);
}

double q_profile_direct(const KernelSpec& spec, double r) {
    if (r <= 0.0) throw std::invalid_argument("q_profile: r must be positive");
    if (r >= 1.0) return 0.0;
    auto f = [&](double t) { return rho_bar(spec, t) / t; };
    double sum = 0.0;
    double a = r;
    while (a < 1.0) {
        const double b = std::min(1.0, 2.0 * a);
        sum += bq::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
        a = b;
    }
    return sum;
}

KernelProfiles::KernelProfiles(const KernelSpec& spec) : spec_(spec) {
    const int n = spec.n;
    const bool logf = spec.family == Family::log_fractional;
    const double cw0 = spec.normalization_c * cutoff_w(spec.cutoff, 0.0);
    const auto t = geometric_grid(kTableMin, kTablePoints);
    const std::size_t P = t.size();
    auto rho = [&](double r) { return rho_bar(spec, r); };

    auto build_tail = [&](double sigma, auto integrand, auto slope) {
        std::vector<double> v(P), d(P);
        v[P - 1] = 0.0;
        for (std::size_t i = P - 1; i-- > 0;) v[i] = v[i + 1] + gauss20(integrand, t[i], t[i + 1]);
        for (std::size_t i = 0; i < P; ++i) d[i] = slope(t[i]);
        const double t0 = t.front(), v0 = v.front();
        auto below = [=](double x) {
            if (x <= 0.0) throw std::invalid_argument("radial profile evaluated at r <= 0");
            return v0 + cw0 * (tail_antideriv(t0, sigma, logf) - tail_antideriv(x, sigma, logf));
        };
        return std::make_shared<const RadialTable>(t, std::move(v), std::move(d), below);
    };

    qbar_ = build_tail(
        n + spec.s - 1.0, [&](double r) { return rho(r) / r; }, [&](double r) { return r >= 1.0 ? 0.0 : -rho(r) / r; });
    gtail_ = build_tail(
        spec.s, [&](double r) { return rho(r) * std::pow(r, n - 2); },
        [&](double r) { return r >= 1.0 ? 0.0 : -rho(r) * std::pow(r, n - 2); });

    kmom_.resize(4);
    for (int m = n - 1; m <= 3; ++m) {
        auto f = [&, m](double r) { return rho(r) * std::pow(r, m); };
        std::vector<double> v(P), d(P);
        const double beta = m - n - spec.s + 2.0;
        v[0] = cw0 * head_power(t[0], beta, logf);
        for (std::size_t i = 0; i + 1 < P; ++i) v[i + 1] = v[i] + gauss20(f, t[i], t[i + 1]);
        for (std::size_t i = 0; i < P; ++i) d[i] = t[i] >= 1.0 ? 0.0 : f(t[i]);
        auto below = [=](double x) { return cw0 * head_power(x, beta, logf); };
        kmom_[m] = std::make_shared<const RadialTable>(t, std::move(v), std::move(d), below);
    }
}

double KernelProfiles::q_profile(double r) const {
    if (r <= 0.0) throw std::invalid_argument("q_profile: r must be positive");
    if (r >= 1.0) return 0.0;
    return (*qbar_)(r);
}

double KernelProfiles::g_tail(double t) const {
    if (t >= 1.0) return 0.0;
    return (*gtail_)(t);
}

double KernelProfiles::k_moment(int m, double t) const {
    if (m < spec_.n - 1 || m > 3) throw std::out_of_range("k_moment: unsupported order");
    if (t <= 0.0) return 0.0;
    return (*kmom_[m])(std::min(t, 1.0));
}

double KernelProfiles::j_moment(int m, double t) const {
    if (t <= 0.0) return 0.0;
    const double tc = std::min(t, 1.0);
    const double q = tc >= 1.0 ? 0.0 : (*qbar_)(tc);
    return (std::pow(tc, m + 1) * q + k_moment(m, tc)) / (m + 1);
}

double KernelProfiles::q_hat(double xi) const {
    if (xi < 0.0) throw std::invalid_argument("q_hat: |xi| must be nonnegative");
    const int n = spec_.n;
    if (n != 1 && n != 2) throw std::invalid_argument("q_hat: unsupported dimension");
    const double two_pi = 2.0 * std::numbers::pi;
    auto f = [&](double r) {
        if (r < 1e-200) return 0.0;
        const double q = q_profile(r);
        if (n == 1) return 2.0 * q * std::cos(two_pi * r * xi);
        return two_pi * q * boost::math::cyl_bessel_j(0, two_pi * r * xi) * r;
    };
    const double width = xi > 0.5 ? 0.5 / xi : 1.0;
    bq::tanh_sinh<double> ts;
    double sum = ts.integrate(f, 0.0, width);
    for (double a = width; a < 1.0; a += width) sum += gauss20(f, a, std::min(1.0, a + width));
    return sum;
}

double KernelProfiles::l1_norm_Q() const {
    bq::tanh_sinh<double> ts;
    const int n = spec_.n;
    auto f = [&](double r) { return r < 1e-200 ? 0.0 : q_profile(r) * std::pow(r, n - 1); };
    return sphere_measure(n) * ts.integrate(f, 0.0, 1.0);
}

bool HypothesisReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

HypothesisReport verify_hypotheses(const std::function<double(double)>& rho, int n, double lambda, double kappa,
                                   double epsilon_H, int sample_count, double mass) {
    if (sample_count < 2) throw std::invalid_argument("verify_hypotheses: sample_count must be >= 2");
    HypothesisReport rep;
    rep.epsilon_H = epsilon_H;
    const auto r = geometric_grid(1e-6, static_cast<std::size_t>(sample_count));
    // keep clear of the support boundary where every profile vanishes
    std::vector<double> rs;
    for (double x : r) rs.push_back(x * (1.0 - 1e-6));

    {
        HypothesisCheck c{"H0", true, 0.0, ""};
        double inf = std::numeric_limits<double>::infinity();
        for (double x : rs)
            if (x <= epsilon_H) inf = std::min(inf, rho(x));
        c.pass = inf > 0.0;
        std::ostringstream os;
        os << "inf rho on (0,eps] = " << inf;
        if (!std::isnan(mass)) {
            c.worst_violation = std::abs(mass - n);
            c.pass = c.pass && c.worst_violation <= 1e-6;
            os << ", |mass - n| = " << c.worst_violation;
        }
        c.detail = os.str();
        rep.checks.push_back(c);
    }
    {
        HypothesisCheck c{"H1", true, 0.0, "r^{n-2} rho decreasing"};
        for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
            const double f0 = std::pow(rs[i], n - 2) * rho(rs[i]);
            const double f1 = std::pow(rs[i + 1], n - 2) * rho(rs[i + 1]);
            if (f1 > f0) c.worst_violation = std::max(c.worst_violation, (f1 - f0) / std::max(f0, 1e-300));
        }
        c.pass = c.worst_violation <= 1e-12;
        rep.checks.push_back(c);
    }
    auto almost = [&](const std::string& name, double expo, bool decreasing) {
        HypothesisCheck c{name, true, 1.0, ""};
        double extreme = std::numeric_limits<double>::quiet_NaN();
        for (double x : rs) {
            if (x > epsilon_H) break;
            const double g = std::pow(x, expo) * rho(x);
            if (std::isnan(extreme)) extreme = g;
            // decreasing: g(t) >= C g(s) for t <= s, constant = max g(s)/min_{t<=s} g(t)
            if (decreasing) {
                extreme = std::min(extreme, g);
                c.worst_violation = std::max(c.worst_violation, g / extreme);
            } else {
                extreme = std::max(extreme, g);
                c.worst_violation = std::max(c.worst_violation, extreme / g);
            }
        }
        c.pass = std::isfinite(c.worst_violation) && c.worst_violation < 1e6;
        std::ostringstream os;
        os << "almost-" << (decreasing ? "decreasing" : "increasing") << " constant " << c.worst_violation;
        c.detail = os.str();
        rep.checks.push_back(c);
    };
    almost("H3", n + lambda - 1.0, true);
    almost("H4", n + kappa - 1.0, false);
    return rep;
}

HypothesisReport verify_hypotheses(const KernelSpec& spec, int sample_count) {
    return verify_hypotheses([&](double r) { return rho_bar(spec, r); }, spec.n, spec.lambda, spec.kappa,
                             spec.epsilon_H, sample_count, kernel_mass(spec));
}

}  // namespace hetgrad
