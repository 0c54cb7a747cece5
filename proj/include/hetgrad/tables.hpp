#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace hetgrad {

// Cubic Hermite table on a geometric grid over [t_min, 1] with exact derivatives.
// Below t_min the value comes from a caller-supplied closed-form tail.
class RadialTable {
public:
    RadialTable(std::vector<double> t, std::vector<double> value, std::vector<double> slope,
                std::function<double(double)> below);

    double operator()(double t) const;
    double t_min() const { return t_.front(); }
    std::size_t size() const { return t_.size(); }

private:
    std::vector<double> t_;
    std::vector<double> v_;
    std::vector<double> d_;
    std::function<double(double)> below_;
    double log_tmin_ = 0.0;
    double inv_log_ratio_ = 0.0;
};

// Geometric grid of `count` points from t_min to 1 inclusive.
std::vector<double> geometric_grid(double t_min, std::size_t count);

constexpr double kTableMin = 1e-8;
constexpr std::size_t kTablePoints = 4096;

}  // namespace hetgrad
