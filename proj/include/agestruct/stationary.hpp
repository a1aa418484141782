#pragma once

#include <optional>
#include <vector>

#include "agestruct/grid.hpp"
#include "agestruct/scenario.hpp"

namespace agestruct {

struct StationaryRateProfile {
    Profile profile;                          // may be negative; the representation is affine
    std::optional<double> first_negative_age;  // first node where profile < 0
};

// x(a) = p exp(-M(a)) - int_0^a exp(M(s) - M(a)) u(s) ds with M the cumulative
// mortality mu(aggregate, .). Negative values are reported, not raised.
StationaryRateProfile stationary_rate_profile(const MortalitySpec& mortality, const Profile& u, double inflow,
                                              double aggregate = 0.0);

// Rate profile with the nonnegativity constraint enforced: the state is zero
// from the first crossing age onwards and the extraction stops there.
struct TruncatedRateProfile {
    Profile profile;           // max(x, 0), zero beyond the crossing
    Profile applied;           // u_actual on the nodes
    double yield = 0.0;        // int u_actual da, crossing cell integrated to the crossing age
    double aggregate = 0.0;    // int x da, crossing cell integrated the same way
    std::optional<double> crossing_age;
};

TruncatedRateProfile truncated_rate_profile(const MortalitySpec& mortality, const Profile& u, double inflow,
                                            double aggregate = 0.0);

struct FixedPointOptions {
    double tolerance = 1e-10;
    int max_iter = 200;
    double damping = 0.5;
};

struct StationaryEffortResult {
    Profile profile;
    double aggregate = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;  // |E_{k+1} - E_k|
};

// p exp(-int_0^a (mu(a') + alpha E + w)) with E the trapezoid of the profile.
Profile effort_profile_at(const MortalitySpec& mortality, const Profile& w, double inflow, double aggregate);

// Damped iteration E <- (1 - theta) E + theta Phi(E), started from Phi(0).
// Throws ConvergenceError on max_iter exhaustion or 10 consecutive residual increases.
StationaryEffortResult stationary_effort_profile(const MortalitySpec& mortality, const Profile& w, double inflow,
                                                 const FixedPointOptions& options = {});

// Rate profile with truncation and aggregate-dependent mortality, iterated the
// same way as the effort profile. With density_coefficient = 0 it is a single solve.
struct StationaryRateResult {
    TruncatedRateProfile solution;
    int iterations = 0;
    std::vector<double> residual_history;
};

StationaryRateResult stationary_rate_self_consistent(const MortalitySpec& mortality, const Profile& u, double inflow,
                                                     const FixedPointOptions& options = {});

// lambda(a) = int_a^A exp(-int_a^s (r + mu)) eta(s) ds, lambda(A) = 0.
// Each cell integral is evaluated exactly for eta and the exponent linear on the cell.
Profile stationary_adjoint(const MortalitySpec& mortality, const Profile& eta, double discount_rate,
                           double aggregate = 0.0);

}  // namespace agestruct
