#include "khm/radial.hpp"

#include "khm/errors.hpp"
#include "khm/ode.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace khm {

double Weight::smooth(double r) const {
    if (kind == WeightKind::power) return 1.0;
    return std::pow(1.0 + r * r, -mu / 2.0);
}

double Weight::h(double r) const {
    const double base = mu == 2.0 ? 1.0 : std::pow(r, mu - 2.0);
    return base * smooth(r);
}

double Weight::log_slope(double r) const {
    if (kind == WeightKind::power) return 0.0;
    const double r2 = r * r;
    return -mu * r2 / (1.0 + r2);
}

Weight weight_of(const ProblemParams& p) { return Weight{p.weight, p.muv()}; }

double weight_h(double r, double mu, WeightKind kind) {
    if (r < 0) throw DomainError("weight needs r >= 0");
    return Weight{kind, mu}.h(r);
}

ProfileMeta ProfileMeta::from(const ProblemParams& p, double lambda, double alpha) {
    ProfileMeta m;
    m.n = p.n;
    m.k = p.k;
    m.q = p.qv();
    m.mu = p.muv();
    m.lambda = lambda;
    m.alpha = alpha;
    m.weight = p.weight;
    m.tol = p.tol;
    return m;
}

namespace {

class HermiteInterpolant final : public ProfileInterpolant {
public:
    HermiteInterpolant(std::vector<double> r, std::vector<double> w, std::vector<double> dw)
        : r_(std::move(r)), w_(std::move(w)), dw_(std::move(dw)) {}

    double lo() const override { return r_.front(); }
    double hi() const override { return r_.back(); }

    std::pair<double, double> eval(double r) const override {
        if (r_.size() == 1) return {w_[0], dw_[0]};
        auto it = std::upper_bound(r_.begin(), r_.end(), r);
        std::size_t i = it == r_.begin() ? 0 : static_cast<std::size_t>(it - r_.begin()) - 1;
        i = std::min(i, r_.size() - 2);
        const double h = r_[i + 1] - r_[i];
        const double s = (r - r_[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        const double w = h00 * w_[i] + h10 * h * dw_[i] + h01 * w_[i + 1] + h11 * h * dw_[i + 1];
        const double d00 = 6 * s * (s - 1) / h, d10 = (1 - s) * (1 - 3 * s);
        const double d01 = -d00, d11 = s * (3 * s - 2);
        const double dw = d00 * w_[i] + d10 * dw_[i] + d01 * w_[i + 1] + d11 * dw_[i + 1];
        return {w, dw};
    }

private:
    std::vector<double> r_, w_, dw_;
};

// Radial problem written in t = ln r with unknowns w and E = F - m J, where
// F = lambda/c * smooth(r) * (-w)^q, J = r^(n-k) (w')^k / r^m is the scaled flux, m = n + mu - 2.
// Then dw/dt = J^(1/k) r^((2k+mu-2)/k) and dE/dt = F (rho(r) - q y) - m E, y = (dw/dt)/(-w).
// E/J = x - m stays accurate as the orbit leaves the origin equilibrium.
struct ShootingModel {
    double source = 0;  // lambda / c
    double q = 0, k = 0, m = 0, rate = 0, slope_pow = 0;
    Weight weight;
    double alpha = 0, C = 0;

    ShootingModel(const ProblemParams& p, double lambda, double alpha_)
        : source(lambda / p.c()), q(p.qv()), k(p.k), m(p.n + p.muv() - 2.0), rate(p.y_rate()),
          slope_pow((p.muv() - 2.0 + p.k) / p.k), weight(weight_of(p)), alpha(alpha_) {
        C = std::pow(source * weight.smooth(0.0) * std::pow(alpha, q - k) / m, 1.0 / k);
    }

    double F(double r, double w) const {
        const double v = std::max(-w, 0.0);
        return source * weight.smooth(r) * std::pow(v, q);
    }
    double J(double r, double w, double E) const { return std::max(F(r, w) - E, 0.0) / m; }

    void rhs(double t, const ode::State<2>& s, ode::State<2>& ds) const {
        const double r = std::exp(t);
        const double w = s[0], E = s[1];
        const double v = std::max(-w, 0.0);
        const double Fq1 = source * weight.smooth(r) * std::pow(v, q - 1.0);  // F / (-w)
        const double Fv = Fq1 * v;
        const double J = std::max(Fv - E, 0.0) / m;
        const double dw = std::pow(J, 1.0 / k) * std::exp(rate * t);
        ds[0] = dw;
        ds[1] = Fv * weight.log_slope(r) - q * Fq1 * dw - m * E;
    }

    // Leading-order behaviour near r = 0 (y ~ C r^rate).
    double x_offset(double r) const {
        const double mu = weight.mu, n = m + 2.0 - mu;
        const double ye = C * std::pow(r, rate);
        double off = -q * m * k / ((k + 1) * mu + n * k - 2.0) * ye;
        if (weight.kind == WeightKind::matukuma) off -= mu * m / (mu + n) * r * r;
        return off;
    }
    double series_w(double r) const { return -alpha * (1.0 - C * std::pow(r, rate) / rate); }
    double series_dw(double r) const { return alpha * C * std::pow(r, rate - 1.0); }
};

class ShootingInterpolant final : public ProfileInterpolant {
public:
    ShootingInterpolant(ShootingModel model, ode::DenseSolution<2> sol, double r0, double r_hi)
        : model_(std::move(model)), sol_(std::move(sol)), r0_(r0), hi_(r_hi) {}

    double lo() const override { return 0.0; }
    double hi() const override { return hi_; }

    std::pair<double, double> eval(double r) const override {
        if (r < r0_) return {model_.series_w(r), model_.series_dw(r)};
        auto s = sol_(std::clamp(std::log(r), sol_.t_lo(), sol_.t_hi()));
        const double J = model_.J(r, s[0], s[1]);
        return {s[0], std::pow(J, 1.0 / model_.k) * std::pow(r, model_.slope_pow)};
    }

    std::optional<std::pair<double, double>> phase_xy(double r) const override {
        if (r <= 0) return std::nullopt;
        if (r < r0_) {
            const double ye = model_.C * std::pow(r, model_.rate);
            return std::pair{model_.m + model_.x_offset(r), ye / (1.0 - ye / model_.rate)};
        }
        const double t = std::clamp(std::log(r), sol_.t_lo(), sol_.t_hi());
        auto s = sol_(t);
        const double F = model_.F(r, s[0]);
        const double J = std::max(F - s[1], 0.0) / model_.m;
        const double dwdt = std::pow(J, 1.0 / model_.k) * std::exp(model_.rate * t);
        return std::pair{F / J, dwdt / (-s[0])};
    }

private:
    ShootingModel model_;
    ode::DenseSolution<2> sol_;
    double r0_, hi_;
};

}  // namespace

std::shared_ptr<const ProfileInterpolant> hermite_interpolant(std::vector<double> r, std::vector<double> w,
                                                              std::vector<double> dw) {
    return std::make_shared<HermiteInterpolant>(std::move(r), std::move(w), std::move(dw));
}

RadialProfile::RadialProfile(ProfileMeta meta, std::vector<double> r, std::vector<double> w, std::vector<double> dw,
                             std::shared_ptr<const ProfileInterpolant> interp)
    : meta_(meta), r_(std::move(r)), w_(std::move(w)), dw_(std::move(dw)), interp_(std::move(interp)) {
    if (r_.empty() || r_.size() != w_.size() || r_.size() != dw_.size())
        throw DomainError("profile needs matching, non-empty node arrays");
    for (std::size_t i = 1; i < r_.size(); ++i)
        if (!(r_[i] > r_[i - 1])) throw DomainError("profile radii must be strictly increasing");
    if (!interp_) interp_ = hermite_interpolant(r_, w_, dw_);
}

double RadialProfile::r_min() const { return r_.front(); }
double RadialProfile::r_max() const { return r_.back(); }

std::pair<double, double> RadialProfile::eval(double r) const {
    const double slack = 1e-12 * std::max(1.0, std::fabs(r_max()));
    if (!(r >= r_min() - slack && r <= r_max() + slack)) {
        std::ostringstream os;
        os << "radius " << r << " outside profile range [" << r_min() << ", " << r_max() << "]";
        throw DomainError(os.str());
    }
    return interp_->eval(std::clamp(r, r_min(), r_max()));
}

double ivp_start_radius(const ProblemParams& p, double alpha) {
    const double lambda = p.lambda.value_or(1.0);
    ShootingModel model(p, lambda, alpha);
    // neglected terms are quadratic in these two small quantities
    const double eps = 1e-2 * std::sqrt(p.tol);
    double t0 = -16.0;
    t0 = std::min(t0, (std::log(eps) - std::log(model.C)) / model.rate);
    if (p.weight == WeightKind::matukuma) t0 = std::min(t0, 0.5 * std::log(eps));
    return std::exp(t0);
}

RadialProfile integrate_ivp(const ProblemParams& p, double alpha, double r_max, const IvpOptions& opt) {
    p.validate();
    if (!p.lambda) throw ParameterError("shooting needs lambda");
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ParameterError("require alpha > 0");
    if (!(r_max > 0) || !std::isfinite(r_max)) throw ParameterError("require r_max > 0");
    const double lambda = *p.lambda;
    ShootingModel model(p, lambda, alpha);

    double r0 = opt.r_start ? *opt.r_start : ivp_start_radius(p, alpha);
    r0 = std::min(r0, 1e-3 * r_max);
    if (!(r0 > 0)) throw ParameterError("require r_start > 0");
    const double t0 = std::log(r0), t1 = std::log(r_max);

    const double w0 = model.series_w(r0);
    const double F0 = model.F(r0, w0);
    const double off = model.x_offset(r0);
    const double E0 = F0 * off / (model.m + off);

    ode::Options<2> o;
    // tol is absolute on w (relative once alpha < 1); the extra factor covers accumulation
    o.rtol = std::max(0.1 * p.tol / std::max(1.0, alpha), 2e-15);
    o.atol = {1e-3 * o.rtol * std::min(alpha, 1.0), std::numeric_limits<double>::min()};
    o.max_step = opt.max_step;
    o.stop = [](double, const ode::State<2>& s) { return s[0] >= 0.0; };
    ode::Stats st;
    auto sol = ode::integrate<2>([&](double t, const ode::State<2>& s, ode::State<2>& ds) { model.rhs(t, s, ds); },
                                 t0, {w0, E0}, t1, o, &st);

    std::optional<double> zero;
    std::size_t keep = sol.size();
    if (st.stopped) {
        const auto& last = sol.segment(sol.size() - 1);
        const double tz = ode::bisect([&](double t) { return sol(t)[0]; }, last.t0, last.t1(), 1e-13);
        zero = std::exp(tz);
        keep = sol.size() - 1;  // drop the node at or beyond the crossing
        if (keep == 0) throw NumericalError("solution reaches zero before the first step");
    }
    const double r_hi = std::exp(sol.node_t(keep));

    std::vector<double> rs{0.0}, ws{-alpha}, dws{0.0};
    auto interp = std::make_shared<ShootingInterpolant>(model, sol, r0, r_hi);
    auto push = [&](double r) {
        auto [w, dw] = interp->eval(r);
        rs.push_back(r);
        ws.push_back(w);
        dws.push_back(dw);
    };
    if (opt.output_points > 1) {
        const double lr0 = t0, lr1 = std::log(r_hi);
        for (std::size_t i = 0; i < opt.output_points; ++i) {
            const double r = i + 1 == opt.output_points
                                 ? r_hi
                                 : std::exp(lr0 + (lr1 - lr0) * static_cast<double>(i) / (opt.output_points - 1));
            push(r);
        }
    } else {
        for (std::size_t i = 0; i <= keep; ++i) push(std::exp(sol.node_t(i)));
    }

    RadialProfile prof(ProfileMeta::from(p, lambda, alpha), std::move(rs), std::move(ws), std::move(dws), interp);
    prof.zero_radius = zero;
    return prof;
}

ResidualReport integral_residual(const RadialProfile& prof) {
    using Gauss = boost::math::quadrature::gauss<double, 10>;
    const auto& m = prof.meta();
    const double c = boost::rational_cast<double>(c_nk(m.n, m.k));
    const Weight wt{m.weight, m.mu};
    auto flux = [&](double r, double dw) { return c * std::pow(r, m.n - m.k) * std::pow(std::max(dw, 0.0), m.k); };
    auto source = [&](double s) {
        const double w = prof.value(s);
        return m.lambda * std::pow(s, m.n - 1) * wt.h(s) * std::pow(std::max(-w, 0.0), m.q);
    };

    const auto& r = prof.r();
    ResidualReport rep;
    const double flux0 = flux(r[0], prof.dw()[0]);
    double acc = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        acc += Gauss::integrate(source, r[i - 1], r[i]);
        const double fi = flux(r[i], prof.dw()[i]);
        const double lhs = fi - flux0;
        const double denom = std::max({std::fabs(fi), std::fabs(acc + flux0), std::numeric_limits<double>::min()});
        const double res = std::fabs(lhs - acc) / denom;
        if (res > rep.max_relative) {
            rep.max_relative = res;
            rep.at_radius = r[i];
        }
    }
    return rep;
}

}  // namespace khm
