#include "hetgrad/tables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hetgrad {

std::vector<double> geometric_grid(double t_min, std::size_t count) {
    std::vector<double> t(count);
    const double lr = -std::log(t_min) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) t[k] = t_min * std::exp(lr * static_cast<double>(k));
    t.back() = 1.0;
    return t;
}

RadialTable::RadialTable(std::vector<double> t, std::vector<double> value, std::vector<double> slope,
                         std::function<double(double)> below)
    : t_(std::move(t)), v_(std::move(value)), d_(std::move(slope)), below_(std::move(below)) {
    if (t_.size() < 2 || v_.size() != t_.size() || d_.size() != t_.size())
        throw std::invalid_argument("RadialTable: inconsistent sizes");
    log_tmin_ = std::log(t_.front());
    inv_log_ratio_ = static_cast<double>(t_.size() - 1) / (std::log(t_.back()) - log_tmin_);
}

double RadialTable::operator()(double t) const {
    if (t >= t_.back()) return v_.back();
    if (t < t_.front()) return below_(t);
    auto k = static_cast<std::size_t>((std::log(t) - log_tmin_) * inv_log_ratio_);
    k = std::min(k, t_.size() - 2);
    // the log-index guess can be off by one near knots
    while (k > 0 && t < t_[k]) --k;
    while (k + 2 < t_.size() && t > t_[k + 1]) ++k;
    const double h = t_[k + 1] - t_[k];
    const double x = (t - t_[k]) / h;
    const double x2 = x * x, x3 = x2 * x;
    const double h00 = 2 * x3 - 3 * x2 + 1, h10 = x3 - 2 * x2 + x;
    const double h01 = -2 * x3 + 3 * x2, h11 = x3 - x2;
    return h00 * v_[k] + h10 * h * d_[k] + h01 * v_[k + 1] + h11 * h * d_[k + 1];
}

}  // namespace hetgrad
