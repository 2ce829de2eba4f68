#pragma once

#include "khm/params.hpp"
#include "khm/phase.hpp"
#include "khm/radial.hpp"

#include <cstddef>
#include <vector>

namespace khm {

struct SingularOptions {
    double t0 = -14.0;       // start of the orbit at the interior point
    double t_end = 0.0;      // orbit is carried to this log-radius
    bool refine = false;     // correct the start by fixed-point sweeps on [t0 - span, t0]
    std::size_t refine_points = 2048;
    std::size_t refine_sweeps = 20;
    double refine_span = 10.0;
};

// Deviation from the interior point at t0 from the fixed-point sweeps (zero without forcing).
std::pair<double, double> refined_start(const ProblemParams& p, const SingularOptions& opt);

// Orbit leaving the interior point; RegimeError unless q > q*, NumericalError if it leaves the quadrant.
PhaseTrajectory singular_orbit(const ProblemParams& p, const SingularOptions& opt = {});

// lambda such that the singular solution satisfies w(1) = -1: c x(0) y(0)^k / h(1).
double lambda_tilde(const ProblemParams& p, const SingularOptions& opt = {});
double lambda_tilde_from(const PhaseTrajectory& orbit, const ProblemParams& p);

struct SingularSolution {
    double lambda_tilde = 0.0;
    // limit of r^(1/gamma) (-w(r)) as r -> 0
    double asymptotic_constant = 0.0;
    PhaseTrajectory trajectory;
    RadialProfile profile;  // w on [r_min, 1], w(1) = -1
};

SingularSolution singular_profile(const ProblemParams& p, double r_min, const SingularOptions& opt = {});

// Closed-form singular solution of the power-weight problem at parameter lambda:
// -K r^(-1/gamma), K = (c x_hat y_hat^k / lambda)^(1/(q-k)).
double emden_singular_constant(const ProblemParams& p, double lambda);
RadialProfile emden_singular_U(const ProblemParams& p, double lambda, double r_lo, double r_hi,
                               std::size_t points = 2001);
// Regular power-weight solution with U(0) = -1.
RadialProfile emden_regular_U(const ProblemParams& p, double lambda, double r_max);

// (F_a w)(r) = w(r / a^gamma) / a on the mapped nodes a^gamma r_i.
RadialProfile rescale(const RadialProfile& prof, double a);
// Profile restricted to the grid points inside its range; DomainError if none.
RadialProfile resample(const RadialProfile& prof, const std::vector<double>& grid);

}  // namespace khm
