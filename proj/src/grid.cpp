#include "agestruct/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agestruct/errors.hpp"

namespace agestruct {

namespace {

// Absorbs round-off when dt and spacing are meant to be equal.
constexpr double kCflSlack = 1e-12;

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DomainError(what, "non-finite entry");
    }
}

}  // namespace

AgeGrid::AgeGrid(double max_age, std::size_t n_nodes) : max_age_(max_age), n_nodes_(n_nodes) {
    if (!(max_age > 0.0) || !std::isfinite(max_age)) throw DomainError("age_grid.max_age", "must be positive");
    if (n_nodes < 2) throw DomainError("age_grid.n_nodes", "need at least 2 nodes");
    spacing_ = max_age / static_cast<double>(n_nodes - 1);
}

std::vector<double> AgeGrid::nodes() const {
    std::vector<double> out(n_nodes_);
    for (std::size_t i = 0; i < n_nodes_; ++i) out[i] = node(i);
    return out;
}

TimeGrid::TimeGrid(double horizon, std::size_t n_steps, const AgeGrid& ages)
    : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("time_grid.horizon", "must be positive");
    if (n_steps < 1) throw DomainError("time_grid.n_steps", "need at least 1 step");
    dt_ = horizon / static_cast<double>(n_steps);
    if (dt_ > ages.spacing() * (1.0 + kCflSlack)) {
        throw DomainError("time_grid", "CFL violation: dt = " + std::to_string(dt_) +
                                           " exceeds age spacing " + std::to_string(ages.spacing()));
    }
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> out(size());
    for (std::size_t n = 0; n < size(); ++n) out[n] = time(n);
    return out;
}

Profile::Profile(const AgeGrid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Profile::Profile(const AgeGrid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw DomainError("profile", "length does not match age grid");
    require_finite(values_, "profile");
}

Field2D::Field2D(const TimeGrid& times, const AgeGrid& ages, double fill)
    : times_(times), ages_(ages), values_(times.size() * ages.size(), fill) {}

Profile Field2D::row_profile(std::size_t n) const {
    auto r = row(n);
    return Profile(ages_, std::vector<double>(r.begin(), r.end()));
}

double trapezoid(std::span<const double> f, double spacing) {
    if (f.size() < 2) return 0.0;
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) interior += f[i];
    return spacing * (interior + 0.5 * (f.front() + f.back()));
}

double trapezoid(const Profile& profile) { return trapezoid(profile.values(), profile.grid().spacing()); }

Profile cumulative_integral(const Profile& profile) {
    const double h = profile.grid().spacing();
    Profile out(profile.grid());
    double acc = 0.0;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        acc += 0.5 * h * (profile[i - 1] + profile[i]);
        out[i] = acc;
    }
    return out;
}

double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double x0 = xs[j - 1], x1 = xs[j];
    if (x == x0) return ys[j - 1];
    const double t = (x - x0) / (x1 - x0);
    return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

}  // namespace agestruct
