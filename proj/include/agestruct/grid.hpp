#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agestruct {

// Uniform discretization of [0, max_age] with n_nodes >= 2 nodes.
class AgeGrid {
public:
    AgeGrid(double max_age, std::size_t n_nodes);

    double max_age() const noexcept { return max_age_; }
    std::size_t size() const noexcept { return n_nodes_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t last() const noexcept { return n_nodes_ - 1; }

    // Last node is pinned to max_age exactly.
    double node(std::size_t i) const noexcept {
        return i == n_nodes_ - 1 ? max_age_ : static_cast<double>(i) * spacing_;
    }
    std::vector<double> nodes() const;

    bool operator==(const AgeGrid&) const = default;

private:
    double max_age_;
    std::size_t n_nodes_;
    double spacing_;
};

// Uniform discretization of [0, horizon] into n_steps steps. The constructor
// enforces the upwind stability bound dt <= age spacing.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_steps, const AgeGrid& ages);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return n_steps_; }
    std::size_t size() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return dt_; }

    double time(std::size_t n) const noexcept {
        return n == n_steps_ ? horizon_ : static_cast<double>(n) * dt_;
    }
    std::vector<double> times() const;

    // Trapezoid weight of time node n.
    double weight(std::size_t n) const noexcept {
        return (n == 0 || n == n_steps_) ? 0.5 * dt_ : dt_;
    }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_;
    std::size_t n_steps_;
    double dt_;
};

// Node values of an age profile x(a), lambda(a), eta(a), mu(a), ...
class Profile {
public:
    explicit Profile(const AgeGrid& grid, double fill = 0.0);
    Profile(const AgeGrid& grid, std::vector<double> values);

    template <class F>
    static Profile from_function(const AgeGrid& grid, F&& f) {
        Profile p(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) p.values_[i] = f(grid.node(i));
        return p;
    }

    const AgeGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool operator==(const Profile&) const = default;

private:
    AgeGrid grid_;
    std::vector<double> values_;
};

// Values on the (n_steps+1) x n_nodes time-age grid, row-major by time.
class Field2D {
public:
    Field2D(const TimeGrid& times, const AgeGrid& ages, double fill = 0.0);

    const TimeGrid& time_grid() const noexcept { return times_; }
    const AgeGrid& age_grid() const noexcept { return ages_; }
    std::size_t rows() const noexcept { return times_.size(); }
    std::size_t cols() const noexcept { return ages_.size(); }

    double operator()(std::size_t n, std::size_t i) const noexcept { return values_[n * cols() + i]; }
    double& operator()(std::size_t n, std::size_t i) noexcept { return values_[n * cols() + i]; }

    std::span<const double> row(std::size_t n) const noexcept {
        return std::span<const double>(values_).subspan(n * cols(), cols());
    }
    std::span<double> row(std::size_t n) noexcept {
        return std::span<double>(values_).subspan(n * cols(), cols());
    }
    Profile row_profile(std::size_t n) const;
    std::span<const double> values() const noexcept { return values_; }

    bool same_grids(const Field2D& other) const noexcept {
        return times_ == other.times_ && ages_ == other.ages_;
    }
    bool operator==(const Field2D&) const = default;

private:
    TimeGrid times_;
    AgeGrid ages_;
    std::vector<double> values_;
};

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    bool operator==(const TimeSeries&) const = default;
};

// Composite trapezoid over uniformly spaced samples.
double trapezoid(std::span<const double> f, double spacing);
double trapezoid(const Profile& profile);

// F(a_i) = integral of f over [0, a_i], composite trapezoid, F(0) = 0.
Profile cumulative_integral(const Profile& profile);

// Linear interpolation of tabulated (xs, ys); constant extrapolation outside.
double interpolate(std::span<const double> xs, std::span<const double> ys, double x);

}  // namespace agestruct
