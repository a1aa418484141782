#include "agestruct/stationary.hpp"

#include <cmath>
#include <string>

#include "agestruct/errors.hpp"

namespace agestruct {

namespace {

constexpr int kDivergenceWindow = 10;

struct FixedPoint {
    double value = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

// Damped iteration on a scalar map, started from phi(0).
template <class Phi>
FixedPoint damped_iteration(Phi&& phi, const FixedPointOptions& opt) {
    if (!(opt.tolerance > 0.0)) throw DomainError("tolerance", "must be positive");
    if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw DomainError("damping", "must lie in (0, 1]");
    FixedPoint fp;
    double e = phi(0.0);
    int growing = 0;
    for (int k = 1; k <= opt.max_iter; ++k) {
        const double next = (1.0 - opt.damping) * e + opt.damping * phi(e);
        const double residual = std::abs(next - e);
        if (!std::isfinite(next)) throw ConvergenceError("fixed-point iterate is not finite", residual, k);
        growing = (!fp.history.empty() && residual > fp.history.back()) ? growing + 1 : 0;
        fp.history.push_back(residual);
        e = next;
        if (residual <= opt.tolerance) {
            fp.value = e;
            fp.iterations = k;
            return fp;
        }
        if (growing >= kDivergenceWindow)
            throw ConvergenceError("fixed-point iteration diverging", residual, k);
    }
    throw ConvergenceError("fixed-point iteration did not converge within " + std::to_string(opt.max_iter) +
                               " iterations",
                           fp.history.empty() ? 0.0 : fp.history.back(), opt.max_iter);
}

Profile mortality_profile(const MortalitySpec& m, const AgeGrid& grid, double aggregate) {
    return Profile::from_function(grid, [&](double a) { return m.rate(aggregate, a); });
}

// Integrals over [0, 1] of exp(-d t) and t exp(-d t).
void exp_linear_moments(double d, double& phi1, double& phi2) {
    if (std::abs(d) < 1e-4) {
        phi1 = 1.0 - d / 2.0 + d * d / 6.0 - d * d * d / 24.0;
        phi2 = 0.5 - d / 3.0 + d * d / 8.0 - d * d * d / 30.0;
        return;
    }
    const double e = std::exp(-d);
    phi1 = (1.0 - e) / d;
    phi2 = (1.0 - e - d * e) / (d * d);
}

}  // namespace

StationaryRateProfile stationary_rate_profile(const MortalitySpec& mortality, const Profile& u, double inflow,
                                              double aggregate) {
    const AgeGrid& grid = u.grid();
    const Profile cum = cumulative_integral(mortality_profile(mortality, grid, aggregate));

    // Volterra term via the cumulative trapezoid of exp(M(s)) u(s).
    Profile weighted(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) weighted[i] = std::exp(cum[i]) * u[i];
    const Profile volterra = cumulative_integral(weighted);

    StationaryRateProfile out{Profile(grid), std::nullopt};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double decay = std::exp(-cum[i]);
        out.profile[i] = inflow * decay - decay * volterra[i];
        if (!out.first_negative_age && out.profile[i] < 0.0) out.first_negative_age = grid.node(i);
    }
    return out;
}

TruncatedRateProfile truncated_rate_profile(const MortalitySpec& mortality, const Profile& u, double inflow,
                                            double aggregate) {
    const AgeGrid& grid = u.grid();
    const double h = grid.spacing();
    const Profile raw = stationary_rate_profile(mortality, u, inflow, aggregate).profile;

    TruncatedRateProfile out{Profile(grid), Profile(grid), 0.0, 0.0, std::nullopt};
    std::size_t cross = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (raw[i] < 0.0) {
            cross = i;
            break;
        }
        out.profile[i] = raw[i];
        out.applied[i] = u[i];
    }
    if (cross == grid.size()) {
        out.yield = trapezoid(out.applied);
        out.aggregate = trapezoid(out.profile);
        return out;
    }

    // Locate the zero inside cell [cross-1, cross] by linear interpolation.
    const std::size_t j = cross - 1;
    const double frac = raw[j] / (raw[j] - raw[cross]);
    out.crossing_age = grid.node(j) + frac * h;
    const double partial = frac * h;
    const double u_cross = u[j] + frac * (u[cross] - u[j]);
    const auto head = out.applied.values().first(cross);
    const auto xhead = out.profile.values().first(cross);
    out.yield = trapezoid(head, h) + 0.5 * partial * (u[j] + u_cross);
    out.aggregate = trapezoid(xhead, h) + 0.5 * partial * raw[j];
    return out;
}

Profile effort_profile_at(const MortalitySpec& mortality, const Profile& w, double inflow, double aggregate) {
    const AgeGrid& grid = w.grid();
    Profile rate = mortality_profile(mortality, grid, aggregate);
    for (std::size_t i = 0; i < grid.size(); ++i) rate[i] += w[i];
    const Profile cum = cumulative_integral(rate);
    Profile out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = inflow * std::exp(-cum[i]);
    return out;
}

StationaryEffortResult stationary_effort_profile(const MortalitySpec& mortality, const Profile& w, double inflow,
                                                 const FixedPointOptions& options) {
    if (!(inflow >= 0.0)) throw DomainError("inflow", "must be nonnegative");
    auto phi = [&](double e) { return trapezoid(effort_profile_at(mortality, w, inflow, e)); };
    FixedPoint fp = damped_iteration(phi, options);
    return StationaryEffortResult{effort_profile_at(mortality, w, inflow, fp.value), fp.value, fp.iterations,
                                  std::move(fp.history)};
}

StationaryRateResult stationary_rate_self_consistent(const MortalitySpec& mortality, const Profile& u, double inflow,
                                                     const FixedPointOptions& options) {
    if (!(inflow >= 0.0)) throw DomainError("inflow", "must be nonnegative");
    auto phi = [&](double e) { return truncated_rate_profile(mortality, u, inflow, e).aggregate; };
    FixedPoint fp = damped_iteration(phi, options);
    return StationaryRateResult{truncated_rate_profile(mortality, u, inflow, fp.value), fp.iterations,
                                std::move(fp.history)};
}

Profile stationary_adjoint(const MortalitySpec& mortality, const Profile& eta, double discount_rate,
                           double aggregate) {
    const AgeGrid& grid = eta.grid();
    const double h = grid.spacing();
    Profile rate = mortality_profile(mortality, grid, aggregate);
    for (std::size_t i = 0; i < grid.size(); ++i) rate[i] += discount_rate;
    const Profile cum = cumulative_integral(rate);

    // lambda_i = exp(G_i) * sum_{j >= i} exp(-G_j) * cell_j
    Profile out(grid);
    double suffix = 0.0;
    for (std::size_t j = grid.last(); j-- > 0;) {
        double phi1 = 0.0, phi2 = 0.0;
        exp_linear_moments(cum[j + 1] - cum[j], phi1, phi2);
        const double cell = h * (eta[j] * (phi1 - phi2) + eta[j + 1] * phi2);
        suffix += std::exp(-cum[j]) * cell;
        out[j] = std::exp(cum[j]) * suffix;
    }
    out[grid.last()] = 0.0;
    return out;
}

}  // namespace agestruct
