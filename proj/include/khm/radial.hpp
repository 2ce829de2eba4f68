#pragma once

#include "khm/params.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace khm {

// h(r) = r^(mu-2) * smooth(r); smooth is (1+r^2)^(-mu/2) or 1.
struct Weight {
    WeightKind kind = WeightKind::matukuma;
    double mu = 2.0;

    double h(double r) const;
    double smooth(double r) const;
    // r * smooth'(r) / smooth(r)
    double log_slope(double r) const;
};

Weight weight_of(const ProblemParams& p);
double weight_h(double r, double mu, WeightKind kind);

struct ProfileMeta {
    int n = 11;
    int k = 1;
    double q = 3.0;
    double mu = 2.0;
    double lambda = 0.0;
    double alpha = 0.0;
    WeightKind weight = WeightKind::matukuma;
    double tol = 1e-10;

    static ProfileMeta from(const ProblemParams& p, double lambda, double alpha);
};

// Continuous evaluation of a profile between (and possibly beyond) its nodes.
class ProfileInterpolant {
public:
    virtual ~ProfileInterpolant() = default;
    virtual double lo() const = 0;
    virtual double hi() const = 0;
    // (w, w') at r
    virtual std::pair<double, double> eval(double r) const = 0;
    // Phase coordinates computed without cancellation, when the source allows it.
    virtual std::optional<std::pair<double, double>> phase_xy(double /*r*/) const { return std::nullopt; }
};

class RadialProfile {
public:
    RadialProfile() = default;
    // Nodes must be strictly increasing in r; interp defaults to cubic Hermite on the nodes.
    RadialProfile(ProfileMeta meta, std::vector<double> r, std::vector<double> w, std::vector<double> dw,
                  std::shared_ptr<const ProfileInterpolant> interp = nullptr);

    const ProfileMeta& meta() const { return meta_; }
    const std::vector<double>& r() const { return r_; }
    const std::vector<double>& w() const { return w_; }
    const std::vector<double>& dw() const { return dw_; }
    std::size_t size() const { return r_.size(); }
    bool empty() const { return r_.empty(); }

    double r_min() const;
    double r_max() const;
    // interpolated (w, w'); DomainError outside [r_min, r_max]
    std::pair<double, double> eval(double r) const;
    double value(double r) const { return eval(r).first; }
    double slope(double r) const { return eval(r).second; }
    const ProfileInterpolant& interpolant() const { return *interp_; }

    // Set when the shooting run met w = 0 before the requested radius.
    std::optional<double> zero_radius;

private:
    ProfileMeta meta_;
    std::vector<double> r_, w_, dw_;
    std::shared_ptr<const ProfileInterpolant> interp_;
};

std::shared_ptr<const ProfileInterpolant> hermite_interpolant(std::vector<double> r, std::vector<double> w,
                                                              std::vector<double> dw);

struct IvpOptions {
    // Starting radius; chosen from the local length scale when unset.
    std::optional<double> r_start;
    // > 0: nodes on a log-uniform grid of this size instead of the step nodes.
    std::size_t output_points = 0;
    // Largest step in log-radius.
    double max_step = 0.25;
};

// Shooting solution of the radial problem with w(0) = -alpha, w'(0) = 0 on [0, r_max].
// The parameter lambda is taken from p.lambda.
RadialProfile integrate_ivp(const ProblemParams& p, double alpha, double r_max, const IvpOptions& opt = {});

// Starting radius used by integrate_ivp when none is given.
double ivp_start_radius(const ProblemParams& p, double alpha);

struct PicardOptions {
    std::size_t intervals = 0;  // 0: chosen from r_max and the local length scale
    std::size_t window_panels = 32;
    std::size_t max_sweeps = 500;
};

// Windowed fixed-point solution of the integral form on a uniform grid.
RadialProfile picard_oracle(const ProblemParams& p, double alpha, double r_max, const PicardOptions& opt = {});

// One global application of the integral operator to grid values w (uniform grid on [0, r_max]).
// Returns the new (w, w') pair; used to inspect single iterates.
std::pair<std::vector<double>, std::vector<double>> picard_apply(const ProblemParams& p, double alpha, double r_max,
                                                                 const std::vector<double>& w);

enum class MaximalStatus { converged, diverged, inconclusive };
std::string to_string(MaximalStatus s);

struct MaximalOptions {
    std::size_t intervals = 8192;
    std::size_t max_iterations = 20000;
    double ceiling = 1e8;
};

struct MaximalResult {
    MaximalStatus status = MaximalStatus::inconclusive;
    std::size_t iterations = 0;
    double last_increment = 0.0;
    bool monotone = true;
    // Solution in the shifted form w = u - 1, so alpha = 1 - u(0). Empty unless converged.
    std::optional<RadialProfile> profile;
};

// Monotone iteration from u = 0 for the Dirichlet problem with parameter lambda; tolerance p.tol.
MaximalResult maximal_solution(const ProblemParams& p, double lambda, const MaximalOptions& opt = {});

struct ResidualReport {
    double max_relative = 0.0;
    double at_radius = 0.0;
};

// Relative mismatch between the flux c r^(n-k) w'^k and the accumulated source
// lambda * int s^(n-1) h (-w)^q, measured from the first node, sup over the nodes.
ResidualReport integral_residual(const RadialProfile& prof);

}  // namespace khm
