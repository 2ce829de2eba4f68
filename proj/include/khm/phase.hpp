#pragma once

#include "khm/params.hpp"
#include "khm/radial.hpp"

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace khm {

struct PhaseState {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct RadialPoint {
    double r = 0.0;
    double w = 0.0;
    double dw = 0.0;
};

// x = r^k lambda/c h(r) (-w)^q / (w')^k, y = r w' / (-w), t = ln r. Lambda comes from p.lambda.
PhaseState to_phase(double r, double w, double dw, const ProblemParams& p);
double from_phase(double t, double x, double y, const ProblemParams& p);
RadialPoint recover_point(double t, double x, double y, const ProblemParams& p);

// rho(t) = n - 2 + mu / (1 + e^(2t)) for the decaying weight; n - 2 + mu for the power weight.
// t = -inf / +inf give the two autonomous limits.
double rho(double t, const ProblemParams& p);
std::pair<double, double> vector_field(double t, double x, double y, const ProblemParams& p);

enum class Limit { minus, plus };

using Matrix2 = std::array<std::array<double, 2>, 2>;
Matrix2 linearization(double x, double y, double rho_value, const ProblemParams& p);

enum class PointClass { saddle, stable_node, unstable_node, stable_spiral, unstable_spiral, center, degenerate };
std::string to_string(PointClass c);

struct CriticalPoint {
    std::string label;
    double x = 0.0;
    double y = 0.0;
    std::array<std::complex<double>, 2> eigenvalues;
    PointClass kind = PointClass::degenerate;
};

std::array<std::complex<double>, 2> eigenvalues(const Matrix2& a);
PointClass classify_point(const std::array<std::complex<double>, 2>& ev);
std::vector<CriticalPoint> critical_points(const ProblemParams& p, Limit limit);
// Interior equilibrium of the minus limit.
std::pair<double, double> interior_point(const ProblemParams& p);
// Interior equilibrium of the plus limit.
std::pair<double, double> plus_interior_point(const ProblemParams& p);

// Invariant-region function G = x + (n-2k)(q+1)/(k+1) (k y/(n-2k) - 1).
double g_value(double x, double y, const ProblemParams& p);

enum class EventKind { y_hat_crossing, g_zero, blowup };
std::string to_string(EventKind k);

struct PhaseEvent {
    EventKind kind = EventKind::y_hat_crossing;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    int direction = 0;  // sign of the event function after the event
};

class PhaseTrajectory {
public:
    using Evaluator = std::function<std::pair<double, double>(double)>;

    PhaseTrajectory() = default;
    PhaseTrajectory(std::vector<PhaseState> nodes, Evaluator eval);

    const std::vector<PhaseState>& states() const { return nodes_; }
    double t_begin() const { return nodes_.front().t; }
    double t_end() const { return nodes_.back().t; }
    PhaseState at(double t) const;

    std::vector<PhaseEvent> events;
    bool blew_up = false;

private:
    std::vector<PhaseState> nodes_;
    Evaluator eval_;
};

// Locates crossings of y = y_hat and zeros of G between the nodes (bisection to t_tol).
std::vector<PhaseEvent> find_events(const PhaseTrajectory& traj, const ProblemParams& p, double t_tol = 1e-10);

inline constexpr double kBlowupCeiling = 1e6;

// Orbit of the phase system from (x0, y0) at t0 to t1 (tolerance p.tol).
// Uses the time-dependent field for the decaying weight, the minus limit for the power weight.
PhaseTrajectory integrate_orbit(const ProblemParams& p, double t0, double x0, double y0, double t1);
// Orbit of one of the autonomous limits regardless of weight.
PhaseTrajectory integrate_limit_orbit(const ProblemParams& p, Limit limit, double t0, double x0, double y0, double t1);

// Image of a radial profile (nodes with r > 0) under the phase transform, with events.
PhaseTrajectory pushforward(const RadialProfile& prof, const ProblemParams& p);

struct PortraitOptions {
    std::size_t grid = 6;
    double span = 2.0;
    double x_max = 0.0;  // 0: 1.2 * rho_minus
    double y_max = 0.0;  // 0: 1.2 * (n-2k)/k
};
// Short orbits of an autonomous limit from a grid of starting points.
std::vector<PhaseTrajectory> phase_portrait(const ProblemParams& p, Limit limit, const PortraitOptions& opt = {});

}  // namespace khm
