#pragma once

#include "khm/params.hpp"
#include "khm/radial.hpp"

#include <optional>
#include <string>
#include <vector>

namespace khm {

enum class SweepRoute { phase, profile };
std::string to_string(SweepRoute r);
SweepRoute route_from_string(const std::string& s);

struct BifurcationSample {
    double alpha = 0.0;
    double w1 = 0.0;      // w(1, alpha) at the reference parameter
    double Lambda = 0.0;  // lambda_ref (-w1)^(q-k)
    double delta = 0.0;   // Lambda / lambda_ref - 1, computed without cancellation on the phase route
    int intersections = -1;  // sign changes of (singular - regular) on (0, 1]; -1 when not computed
    bool reached_zero = false;
};

struct Extremum {
    double alpha = 0.0;
    double delta = 0.0;
    double Lambda = 0.0;
    bool is_max = false;
    bool resolved = true;  // |delta| above the route's noise floor
};

struct Crossing {
    double alpha = 0.0;
    int direction = 0;  // +1: Lambda increases through lambda_ref
    bool confirmed = true;
};

struct BifurcationCurve {
    ProblemParams params;
    double lambda_ref = 0.0;
    std::optional<double> lambda_tilde;
    SweepRoute route = SweepRoute::phase;
    double noise_floor = 0.0;
    std::vector<BifurcationSample> samples;
    std::vector<Extremum> extrema;
    std::vector<Crossing> crossings;  // roots of Lambda = lambda_ref
};

struct SweepOptions {
    double alpha_min = 1.0;
    double alpha_max = 1e4;
    std::size_t samples = 400;
    SweepRoute route = SweepRoute::phase;
    unsigned threads = 0;  // 0: hardware concurrency
    bool refine = true;    // golden-section extrema and bisected crossings
};

// Evaluates the shooting map for one parameter set; the reference parameter
// (lambda-tilde when q > q*, otherwise p.lambda or 1) is computed once.
class Shooter {
public:
    explicit Shooter(ProblemParams p);

    const ProblemParams& params() const { return p_; }
    double lambda_ref() const { return lambda_ref_; }
    const std::optional<double>& lambda_tilde() const { return lambda_tilde_; }

    // w(1, alpha) by integrating the radial problem.
    double endpoint(double alpha) const;
    // Regular orbit minus singular orbit in the phase plane.
    BifurcationSample compare(double alpha) const;
    BifurcationSample sample(double alpha, SweepRoute route) const;
    double noise_floor(SweepRoute route) const;

private:
    ProblemParams p_;
    double lambda_ref_ = 1.0;
    std::optional<double> lambda_tilde_;
    double x_hat_ = 0.0, y_hat_ = 0.0, t_sing_ = -14.0;
};

double shoot_endpoint(const ProblemParams& p, double alpha);
BifurcationCurve sweep(const ProblemParams& p, const SweepOptions& opt = {});
BifurcationCurve sweep(const Shooter& s, const SweepOptions& opt = {});

struct SolutionRoot {
    double alpha = 0.0;       // central value in the reference normalisation
    double u0 = 0.0;          // u(0) of the solution of the Dirichlet problem
    double boundary_error = 0.0;
    double residual = 0.0;
    bool validated = false;
};

struct SolutionCount {
    double lambda = 0.0;
    std::size_t count = 0;  // confirmed, validated roots
    std::vector<SolutionRoot> roots;
    std::vector<double> uncertain;  // near-tangential brackets, not counted
};

struct CountOptions {
    bool validate = true;
    unsigned threads = 0;
};

// Roots of Lambda(alpha) = lambda over the sampled range of the curve.
SolutionCount count_solutions(const Shooter& s, double lambda, const BifurcationCurve& curve,
                              const CountOptions& opt = {});
SolutionCount count_solutions(const ProblemParams& p, double lambda, const BifurcationCurve& curve,
                              const CountOptions& opt = {});

struct IntersectionReport {
    int count = 0;
    std::vector<double> zeros;
    std::vector<double> tangencies;  // |a - b| minima below tolerance without a sign change
};

// Sign changes of a - b over [lo, hi] (both profiles evaluated through their interpolants).
// Points where |a - b| <= tol * max(|a|, |b|, 1) carry no sign; runs of them without a
// sign change are reported as tangencies.
IntersectionReport intersection_number(const RadialProfile& a, const RadialProfile& b, double lo, double hi,
                                       double tol = 1e-12);

// Sign changes of (singular - regular) for the central value alpha over (r_lo, R] via the phase route.
IntersectionReport phase_intersections(const Shooter& s, double alpha, double R, double r_lo = 0.0);

double estimate_lambda_star(const BifurcationCurve& curve);

}  // namespace khm
