#include "khm/singular.hpp"

#include "khm/errors.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace khm {

namespace {

void require_supercritical(const ProblemParams& p) {
    p.validate();
    const Regime r = classify_regime(p);
    if (r == Regime::below_critical || r == Regime::critical)
        throw RegimeError("singular solution requires q > q* (regime " + to_string(r) + ")");
}

Matrix2 expm(const Matrix2& a, double h) {
    const double s = (a[0][0] + a[1][1]) / 2;
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double d2 = s * s - det;
    double c0, c1;  // e^(hA) = e^(sh) [c0 I + c1 (A - s I)]
    if (d2 > 0) {
        const double d = std::sqrt(d2);
        c0 = std::cosh(d * h);
        c1 = std::sinh(d * h) / d;
    } else if (d2 < 0) {
        const double om = std::sqrt(-d2);
        c0 = std::cos(om * h);
        c1 = std::sin(om * h) / om;
    } else {
        c0 = 1.0;
        c1 = h;
    }
    const double e = std::exp(s * h);
    return {{{e * (c0 + c1 * (a[0][0] - s)), e * c1 * a[0][1]}, {e * c1 * a[1][0], e * (c0 + c1 * (a[1][1] - s))}}};
}

std::pair<double, double> apply(const Matrix2& m, double u, double v) {
    return {m[0][0] * u + m[0][1] * v, m[1][0] * u + m[1][1] * v};
}

// Profile read off a phase trajectory through the inverse transform.
class PhaseInterpolant final : public ProfileInterpolant {
public:
    PhaseInterpolant(PhaseTrajectory traj, ProblemParams p, double lo, double hi)
        : traj_(std::move(traj)), p_(std::move(p)), lo_(lo), hi_(hi) {}
    double lo() const override { return lo_; }
    double hi() const override { return hi_; }
    std::pair<double, double> eval(double r) const override {
        auto s = traj_.at(std::log(r));
        auto pt = recover_point(s.t, s.x, s.y, p_);
        return {pt.w, pt.dw};
    }
    std::optional<std::pair<double, double>> phase_xy(double r) const override {
        auto s = traj_.at(std::log(r));
        return std::pair{s.x, s.y};
    }

private:
    PhaseTrajectory traj_;
    ProblemParams p_;
    double lo_, hi_;
};

class PowerLawInterpolant final : public ProfileInterpolant {
public:
    PowerLawInterpolant(double K, double expo, double lo, double hi) : K_(K), e_(expo), lo_(lo), hi_(hi) {}
    double lo() const override { return lo_; }
    double hi() const override { return hi_; }
    std::pair<double, double> eval(double r) const override {
        const double w = -K_ * std::pow(r, -e_);
        return {w, -e_ * w / r};
    }

private:
    double K_, e_, lo_, hi_;
};

class ScaledInterpolant final : public ProfileInterpolant {
public:
    ScaledInterpolant(RadialProfile base, double a, double stretch)
        : base_(std::move(base)), a_(a), s_(stretch) {}
    double lo() const override { return base_.r_min() * s_; }
    double hi() const override { return base_.r_max() * s_; }
    std::pair<double, double> eval(double r) const override {
        auto [w, dw] = base_.eval(r / s_);
        return {w / a_, dw / (a_ * s_)};
    }

private:
    RadialProfile base_;
    double a_, s_;
};

}  // namespace

std::pair<double, double> refined_start(const ProblemParams& p, const SingularOptions& opt) {
    require_supercritical(p);
    if (p.weight == WeightKind::power) return {0.0, 0.0};
    const auto [xh, yh] = interior_point(p);
    const double q = p.qv(), k = p.k, mu = p.muv();
    const Matrix2 A0 = linearization(xh, yh, p.rho_minus(), p);
    const std::size_t M = std::max<std::size_t>(opt.refine_points, 2);
    const double ta = opt.t0 - opt.refine_span, h = opt.refine_span / static_cast<double>(M - 1);
    const Matrix2 E = expm(A0, h);

    auto forcing = [&](double t, double xb, double yb) -> std::pair<double, double> {
        const double e = std::exp(2 * t);
        return {-xb * xb - q * xb * yb - (xb + xh) * mu * e / (1 + e), xb * yb / k + yb * yb};
    };
    std::vector<double> X(M, 0.0), Y(M, 0.0), nX(M), nY(M);
    for (std::size_t sweep = 0; sweep < opt.refine_sweeps; ++sweep) {
        nX[0] = 0.0;
        nY[0] = 0.0;
        auto s_prev = forcing(ta, X[0], Y[0]);
        for (std::size_t j = 1; j < M; ++j) {
            const double tj = ta + h * static_cast<double>(j);
            auto s_j = forcing(tj, X[j], Y[j]);
            auto prop = apply(E, nX[j - 1], nY[j - 1]);
            auto prop_s = apply(E, s_prev.first, s_prev.second);
            nX[j] = prop.first + h / 2 * (prop_s.first + s_j.first);
            nY[j] = prop.second + h / 2 * (prop_s.second + s_j.second);
            s_prev = s_j;
        }
        X.swap(nX);
        Y.swap(nY);
    }
    return {X.back(), Y.back()};
}

PhaseTrajectory singular_orbit(const ProblemParams& p, const SingularOptions& opt) {
    require_supercritical(p);
    if (!(opt.t_end > opt.t0)) throw DomainError("singular orbit needs t_end > t0");
    auto [xh, yh] = interior_point(p);
    double x0 = xh, y0 = yh;
    if (opt.refine) {
        auto d = refined_start(p, opt);
        x0 += d.first;
        y0 += d.second;
    }
    auto traj = integrate_orbit(p, opt.t0, x0, y0, opt.t_end);
    for (const auto& s : traj.states())
        if (!(s.x > 0) || !(s.y > 0) || traj.blew_up)
            throw NumericalError("singular orbit left the positive quadrant; q outside the valid range or t0 too large");
    return traj;
}

double lambda_tilde_from(const PhaseTrajectory& orbit, const ProblemParams& p) {
    const auto end = orbit.at(0.0);
    return p.c() * end.x * std::pow(end.y, p.k) / weight_of(p).h(1.0);
}

double lambda_tilde(const ProblemParams& p, const SingularOptions& opt) {
    SingularOptions o = opt;
    o.t_end = std::max(o.t_end, 0.0);
    return lambda_tilde_from(singular_orbit(p, o), p);
}

SingularSolution singular_profile(const ProblemParams& p, double r_min, const SingularOptions& opt) {
    if (!(r_min > 0) || !(r_min < 1)) throw DomainError("singular profile needs 0 < r_min < 1");
    SingularOptions o = opt;
    o.t0 = std::min(o.t0, std::log(r_min) - 1.0);
    o.t_end = std::max(o.t_end, 0.0);
    SingularSolution out;
    out.trajectory = singular_orbit(p, o);
    out.lambda_tilde = lambda_tilde_from(out.trajectory, p);
    out.asymptotic_constant = emden_singular_constant(p, out.lambda_tilde);

    ProblemParams pl = p;
    pl.lambda = out.lambda_tilde;
    std::vector<double> r, w, dw;
    auto push = [&](double t) {
        auto s = out.trajectory.at(t);
        auto pt = recover_point(t, s.x, s.y, pl);
        r.push_back(pt.r);
        w.push_back(pt.w);
        dw.push_back(pt.dw);
    };
    const double tlo = std::log(r_min);
    push(tlo);
    for (const auto& s : out.trajectory.states())
        if (s.t > tlo + 1e-12 && s.t < -1e-12) push(s.t);
    push(0.0);
    auto interp = std::make_shared<PhaseInterpolant>(out.trajectory, pl, r_min, 1.0);
    ProfileMeta meta = ProfileMeta::from(p, out.lambda_tilde, std::numeric_limits<double>::infinity());
    out.profile = RadialProfile(meta, std::move(r), std::move(w), std::move(dw), interp);
    return out;
}

double emden_singular_constant(const ProblemParams& p, double lambda) {
    require_supercritical(p);
    const auto [xh, yh] = interior_point(p);
    return std::pow(p.c() * xh * std::pow(yh, p.k) / lambda, 1.0 / (p.qv() - p.k));
}

RadialProfile emden_singular_U(const ProblemParams& p, double lambda, double r_lo, double r_hi, std::size_t points) {
    if (!(r_lo > 0) || !(r_hi > r_lo)) throw DomainError("closed-form profile needs 0 < r_lo < r_hi");
    const double K = emden_singular_constant(p, lambda);
    const double expo = 1.0 / p.gamma();
    auto interp = std::make_shared<PowerLawInterpolant>(K, expo, r_lo, r_hi);
    points = std::max<std::size_t>(points, 2);
    std::vector<double> r(points), w(points), dw(points);
    const double a = std::log(r_lo), b = std::log(r_hi);
    for (std::size_t i = 0; i < points; ++i) {
        r[i] = i + 1 == points ? r_hi : std::exp(a + (b - a) * static_cast<double>(i) / (points - 1));
        std::tie(w[i], dw[i]) = interp->eval(r[i]);
    }
    ProblemParams pw = p;
    pw.weight = WeightKind::power;
    return RadialProfile(ProfileMeta::from(pw, lambda, std::numeric_limits<double>::infinity()), std::move(r),
                         std::move(w), std::move(dw), interp);
}

RadialProfile emden_regular_U(const ProblemParams& p, double lambda, double r_max) {
    ProblemParams pw = p;
    pw.weight = WeightKind::power;
    pw.lambda = lambda;
    return integrate_ivp(pw, 1.0, r_max);
}

RadialProfile rescale(const RadialProfile& prof, double a) {
    if (!(a > 0) || !std::isfinite(a)) throw ParameterError("require a > 0");
    const auto& m = prof.meta();
    const double gamma = (m.q - m.k) / (2.0 * m.k + m.mu - 2.0);
    const double s = std::pow(a, gamma);
    std::vector<double> r(prof.size()), w(prof.size()), dw(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        r[i] = prof.r()[i] * s;
        w[i] = prof.w()[i] / a;
        dw[i] = prof.dw()[i] / (a * s);
    }
    ProfileMeta meta = m;
    meta.alpha = m.alpha / a;
    RadialProfile out(meta, std::move(r), std::move(w), std::move(dw),
                      std::make_shared<ScaledInterpolant>(prof, a, s));
    return out;
}

RadialProfile resample(const RadialProfile& prof, const std::vector<double>& grid) {
    std::vector<double> r, w, dw;
    for (double x : grid) {
        if (x < prof.r_min() || x > prof.r_max()) continue;
        if (!r.empty() && x <= r.back()) continue;
        auto [a, b] = prof.eval(x);
        r.push_back(x);
        w.push_back(a);
        dw.push_back(b);
    }
    if (r.empty()) throw DomainError("grid does not overlap the profile range");
    return RadialProfile(prof.meta(), std::move(r), std::move(w), std::move(dw));
}

}  // namespace khm
