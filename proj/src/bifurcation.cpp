#include "khm/bifurcation.hpp"

#include "khm/errors.hpp"
#include "khm/ode.hpp"
#include "khm/phase.hpp"
#include "khm/singular.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace khm {

std::string to_string(SweepRoute r) { return r == SweepRoute::phase ? "phase" : "profile"; }

SweepRoute route_from_string(const std::string& s) {
    if (s == "phase") return SweepRoute::phase;
    if (s == "profile") return SweepRoute::profile;
    throw ParameterError("unknown route '" + s + "' (expected phase or profile)");
}

namespace {

constexpr double kPhaseFloor = 1e-15;

bool supercritical(const ProblemParams& p) {
    const Regime r = classify_regime(p);
    return r == Regime::spiral_window || r == Regime::at_or_above_jl;
}

// Regular orbit and singular orbit carried together as (xs, ys, lx, ly) with
// lx = ln(x_reg / xs), ly = ln(y_reg / ys). The log-ratios stay accurate both while the
// regular orbit leaves the origin and after both orbits have wound into the interior point.
struct DifferenceRun {
    ode::DenseSolution<4> sol;
    double t_start = 0.0;
    double k = 1.0;

    double gap(double t) const {
        const auto s = sol(t);
        return s[2] + k * s[3];
    }
};

DifferenceRun run_difference(const ProblemParams& p, double lambda_ref, double alpha, double x_hat, double y_hat,
                             double t_sing, double t_end) {
    const double k = p.k, q = p.qv(), mu = p.muv(), n = p.n;
    const double m = p.rho_minus(), rate = p.y_rate(), a = (n - 2.0 * k) / k;
    const Weight wt = weight_of(p);
    const double logC = (std::log(lambda_ref / p.c() * wt.smooth(0.0) / m) + (q - k) * std::log(alpha)) / k;
    const double ts = std::min({-20.0, t_sing, (std::log(1e-14) - logC) / rate});

    const double ye = std::exp(logC + rate * ts);
    double off = -q * m * k / ((k + 1) * mu + n * k - 2.0) * ye;
    if (p.weight == WeightKind::matukuma) off -= mu * m / (mu + n) * std::exp(2 * ts);

    ode::State<4> s0{x_hat, y_hat, std::log((m + off) / x_hat), logC + rate * ts - std::log1p(-ye / rate) - std::log(y_hat)};
    ode::Options<4> opt;
    opt.rtol = std::max(0.1 * p.tol, 1e-14);
    opt.max_step = 0.25;
    const double rtol = opt.rtol, atol = 1e-3 * opt.rtol;
    opt.scale_fn = [rtol, atol](const ode::State<4>& y, const ode::State<4>& yn, ode::State<4>& sc) {
        sc[0] = atol + rtol * std::max(std::abs(y[0]), std::abs(yn[0]));
        sc[1] = atol + rtol * std::max(std::abs(y[1]), std::abs(yn[1]));
        const double d = std::max({std::abs(y[2]), std::abs(y[3]), std::abs(yn[2]), std::abs(yn[3])});
        sc[2] = sc[3] = rtol * d + std::numeric_limits<double>::min();
    };
    auto rhs = [&](double t, const ode::State<4>& s, ode::State<4>& ds) {
        const double rh = rho(t, p);
        const double xs = s[0], ys = s[1];
        const double dx = xs * std::expm1(s[2]), dy = ys * std::expm1(s[3]);
        ds[0] = xs * (rh - xs - q * ys);
        ds[1] = ys * (-a + xs / k + ys);
        ds[2] = -dx - q * dy;
        ds[3] = dx / k + dy;
    };
    DifferenceRun run{ode::integrate<4>(rhs, ts, s0, t_end, opt), ts, k};
    return run;
}

// Sign changes of g sampled on the dense output; zeros bisected when wanted.
template <class G>
IntersectionReport count_sign_changes(G&& g, const std::vector<double>& ts, double t_tol, bool locate) {
    IntersectionReport rep;
    double tp = ts.front(), gp = g(tp);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        for (int j = 1; j <= 4; ++j) {
            const double t = ts[i - 1] + (ts[i] - ts[i - 1]) * j / 4.0;
            const double gt = g(t);
            if ((gp < 0 && gt > 0) || (gp > 0 && gt < 0)) {
                ++rep.count;
                if (locate) rep.zeros.push_back(ode::bisect(g, tp, t, t_tol));
            }
            if (gt != 0.0) {
                gp = gt;
                tp = t;
            }
        }
    }
    return rep;
}

std::vector<double> node_times(const ode::DenseSolution<4>& sol) {
    std::vector<double> ts;
    ts.reserve(sol.size() + 1);
    for (std::size_t i = 0; i <= sol.size(); ++i) ts.push_back(sol.node_t(i));
    return ts;
}

}  // namespace

Shooter::Shooter(ProblemParams p) : p_(std::move(p)) {
    p_.validate();
    if (supercritical(p_)) {
        SingularOptions so;
        t_sing_ = so.t0;
        ProblemParams tight = p_;
        tight.tol = std::min(p_.tol, 1e-12);
        lambda_tilde_ = khm::lambda_tilde(tight, so);
        lambda_ref_ = *lambda_tilde_;
        std::tie(x_hat_, y_hat_) = interior_point(p_);
    } else {
        lambda_ref_ = p_.lambda.value_or(1.0);
    }
}

double Shooter::endpoint(double alpha) const {
    ProblemParams pl = p_;
    pl.lambda = lambda_ref_;
    auto prof = integrate_ivp(pl, alpha, 1.0);
    if (prof.zero_radius) return 0.0;
    return prof.value(1.0);
}

BifurcationSample Shooter::compare(double alpha) const {
    if (!lambda_tilde_) throw RegimeError("phase comparison needs q > q* (regime " + to_string(classify_regime(p_)) + ")");
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ParameterError("require alpha > 0");
    const auto run = run_difference(p_, lambda_ref_, alpha, x_hat_, y_hat_, t_sing_, 0.0);
    const double L = run.gap(0.0);
    BifurcationSample s;
    s.alpha = alpha;
    s.delta = std::expm1(L);
    s.Lambda = lambda_ref_ * (1.0 + s.delta);
    s.w1 = -std::exp(L / (p_.qv() - p_.k));
    const auto ts = node_times(run.sol);
    s.intersections = count_sign_changes([&](double t) { return run.gap(t); }, ts, 0.0, false).count;
    return s;
}

BifurcationSample Shooter::sample(double alpha, SweepRoute route) const {
    if (route == SweepRoute::phase) return compare(alpha);
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ParameterError("require alpha > 0");
    ProblemParams pl = p_;
    pl.lambda = lambda_ref_;
    const auto prof = integrate_ivp(pl, alpha, 1.0);
    BifurcationSample s;
    s.alpha = alpha;
    if (prof.zero_radius) {
        s.reached_zero = true;
        return s;
    }
    s.w1 = prof.value(1.0);
    s.delta = std::expm1((p_.qv() - p_.k) * std::log(-s.w1));
    s.Lambda = lambda_ref_ * (1.0 + s.delta);
    return s;
}

double Shooter::noise_floor(SweepRoute route) const {
    if (route == SweepRoute::phase) return kPhaseFloor;
    return 10.0 * (p_.qv() - p_.k) * p_.tol;
}

double shoot_endpoint(const ProblemParams& p, double alpha) { return Shooter(p).endpoint(alpha); }

BifurcationCurve sweep(const ProblemParams& p, const SweepOptions& opt) { return sweep(Shooter(p), opt); }

namespace {

// Largest |delta| of the samples from index i outward until the sign flips.
double lobe(const std::vector<BifurcationSample>& v, std::size_t i, int dir, double shift) {
    const double s0 = v[i].delta - shift;
    double best = std::abs(s0);
    for (long j = static_cast<long>(i) + dir; j >= 0 && j < static_cast<long>(v.size()); j += dir) {
        const double d = v[static_cast<std::size_t>(j)].delta - shift;
        if ((d > 0) != (s0 > 0)) break;
        best = std::max(best, std::abs(d));
    }
    return best;
}

// Bisection in log alpha of delta(alpha) - shift, relative width 1e-8.
double bisect_alpha(const Shooter& s, SweepRoute route, double a, double b, double fa, double shift) {
    double la = std::log(a), lb = std::log(b);
    for (int it = 0; it < 200 && lb - la > 1e-9; ++it) {
        const double lm = 0.5 * (la + lb);
        const double fm = s.sample(std::exp(lm), route).delta - shift;
        if (fm == 0.0) return std::exp(lm);
        if ((fm > 0) == (fa > 0)) {
            la = lm;
            fa = fm;
        } else {
            lb = lm;
        }
    }
    return std::exp(0.5 * (la + lb));
}

BifurcationSample golden(const Shooter& s, SweepRoute route, double a, double b, bool is_max) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double la = std::log(a), lb = std::log(b);
    auto val = [&](double l) {
        auto smp = s.sample(std::exp(l), route);
        return std::pair{is_max ? smp.delta : -smp.delta, smp};
    };
    double l1 = lb - g * (lb - la), l2 = la + g * (lb - la);
    auto f1 = val(l1), f2 = val(l2);
    while (lb - la > 1e-7) {
        if (f1.first > f2.first) {
            lb = l2;
            l2 = l1;
            f2 = f1;
            l1 = lb - g * (lb - la);
            f1 = val(l1);
        } else {
            la = l1;
            l1 = l2;
            f1 = f2;
            l2 = la + g * (lb - la);
            f2 = val(l2);
        }
    }
    return f1.first > f2.first ? f1.second : f2.second;
}

}  // namespace

BifurcationCurve sweep(const Shooter& s, const SweepOptions& opt) {
    if (!(opt.alpha_min > 0) || !(opt.alpha_max > opt.alpha_min)) throw ParameterError("require 0 < alpha_min < alpha_max");
    if (opt.samples < 3) throw ParameterError("require at least 3 samples");
    BifurcationCurve curve;
    curve.params = s.params();
    curve.lambda_ref = s.lambda_ref();
    curve.lambda_tilde = s.lambda_tilde();
    curve.route = s.lambda_tilde() ? opt.route : SweepRoute::profile;
    curve.noise_floor = s.noise_floor(curve.route);
    const SweepRoute route = curve.route;

    const std::size_t N = opt.samples;
    std::vector<BifurcationSample> all(N);
    const double la = std::log(opt.alpha_min), lb = std::log(opt.alpha_max);
    detail::parallel_for(N, opt.threads, [&](std::size_t i) {
        const double alpha = i + 1 == N ? opt.alpha_max : std::exp(la + (lb - la) * static_cast<double>(i) / (N - 1));
        all[i] = s.sample(alpha, route);
    });
    curve.samples = all;

    std::vector<BifurcationSample> v;
    for (const auto& smp : all)
        if (!smp.reached_zero) v.push_back(smp);
    if (v.size() < 3) return curve;

    struct Bracket {
        std::size_t i;
        bool is_max;
    };
    std::vector<Bracket> ext;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const double d0 = v[i - 1].delta, d1 = v[i].delta, d2 = v[i + 1].delta;
        if (d1 > d0 && d1 >= d2) ext.push_back({i, true});
        else if (d1 < d0 && d1 <= d2) ext.push_back({i, false});
    }
    curve.extrema.resize(ext.size());
    detail::parallel_for(ext.size(), opt.threads, [&](std::size_t j) {
        const auto& b = ext[j];
        const auto best = opt.refine ? golden(s, route, v[b.i - 1].alpha, v[b.i + 1].alpha, b.is_max) : v[b.i];
        const auto& pick = (b.is_max ? best.delta >= v[b.i].delta : best.delta <= v[b.i].delta) ? best : v[b.i];
        curve.extrema[j] = {pick.alpha, pick.delta, pick.Lambda, b.is_max, std::abs(pick.delta) > curve.noise_floor};
    });

    std::vector<std::size_t> cross;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if ((v[i].delta < 0 && v[i + 1].delta > 0) || (v[i].delta > 0 && v[i + 1].delta < 0)) cross.push_back(i);
    curve.crossings.resize(cross.size());
    detail::parallel_for(cross.size(), opt.threads, [&](std::size_t j) {
        const std::size_t i = cross[j];
        const auto &a = v[i], &b = v[i + 1];
        double alpha;
        if (opt.refine) {
            alpha = bisect_alpha(s, route, a.alpha, b.alpha, a.delta, 0.0);
        } else {
            const double f = a.delta / (a.delta - b.delta);
            alpha = std::exp(std::log(a.alpha) + f * (std::log(b.alpha) - std::log(a.alpha)));
        }
        const bool ok = lobe(v, i, -1, 0.0) > 10 * curve.noise_floor && lobe(v, i + 1, +1, 0.0) > 10 * curve.noise_floor;
        curve.crossings[j] = {alpha, b.delta > a.delta ? +1 : -1, ok};
    });
    return curve;
}

SolutionCount count_solutions(const Shooter& s, double lambda, const BifurcationCurve& curve, const CountOptions& opt) {
    if (!(lambda > 0) || !std::isfinite(lambda)) throw ParameterError("require lambda > 0");
    const ProblemParams& p = s.params();
    const double shift = lambda / s.lambda_ref() - 1.0;
    const SweepRoute route = curve.route;
    std::vector<BifurcationSample> v;
    for (const auto& smp : curve.samples)
        if (!smp.reached_zero) v.push_back(smp);

    SolutionCount out;
    out.lambda = lambda;
    std::vector<std::size_t> br;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double a = v[i].delta - shift, b = v[i + 1].delta - shift;
        if ((a < 0 && b > 0) || (a > 0 && b < 0)) br.push_back(i);
    }
    std::vector<SolutionRoot> roots(br.size());
    std::vector<char> confirmed(br.size());
    detail::parallel_for(br.size(), opt.threads, [&](std::size_t j) {
        const std::size_t i = br[j];
        const double floor = 10 * curve.noise_floor;
        confirmed[j] = lobe(v, i, -1, shift) > floor && lobe(v, i + 1, +1, shift) > floor;
        SolutionRoot& r = roots[j];
        r.alpha = bisect_alpha(s, route, v[i].alpha, v[i + 1].alpha, v[i].delta - shift, shift);
        const double scale = std::pow(s.lambda_ref() / lambda, 1.0 / (p.qv() - p.k));
        const double alpha = scale * r.alpha;
        r.u0 = 1.0 - alpha;
        if (!opt.validate || !confirmed[j]) return;
        ProblemParams pl = p;
        pl.lambda = lambda;
        const auto prof = integrate_ivp(pl, alpha, 1.0);
        const double w1 = prof.zero_radius ? 0.0 : prof.value(1.0);
        r.boundary_error = std::abs(w1 + 1.0);
        r.residual = integral_residual(prof).max_relative;
        r.validated = r.boundary_error < 1e-6 && r.residual < 1e-6;
    });
    for (std::size_t j = 0; j < br.size(); ++j) {
        if (!confirmed[j]) {
            out.uncertain.push_back(roots[j].alpha);
            continue;
        }
        if (roots[j].validated || !opt.validate) ++out.count;
        out.roots.push_back(roots[j]);
    }
    return out;
}

SolutionCount count_solutions(const ProblemParams& p, double lambda, const BifurcationCurve& curve,
                              const CountOptions& opt) {
    return count_solutions(Shooter(p), lambda, curve, opt);
}

IntersectionReport intersection_number(const RadialProfile& a, const RadialProfile& b, double lo, double hi,
                                       double tol) {
    lo = std::max({lo, a.r_min(), b.r_min()});
    hi = std::min({hi, a.r_max(), b.r_max()});
    if (!(hi > lo)) throw DomainError("profiles do not overlap on the requested interval");
    std::vector<double> nodes{lo, hi};
    for (const auto* pr : {&a, &b})
        for (double r : pr->r())
            if (r > lo && r < hi) nodes.push_back(r);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    auto diff = [&](double r) { return a.value(r) - b.value(r); };
    // samples with |a - b| below tol relative to the profiles are neutral
    auto sign_at = [&](double r) {
        const double va = a.value(r), vb = b.value(r), d = va - vb;
        if (std::abs(d) <= tol * std::max({std::abs(va), std::abs(vb), 1.0})) return 0;
        return d > 0 ? 1 : -1;
    };
    std::vector<double> rs;
    rs.push_back(nodes.front());
    for (std::size_t i = 1; i < nodes.size(); ++i)
        for (int j = 1; j <= 4; ++j) rs.push_back(nodes[i - 1] + (nodes[i] - nodes[i - 1]) * j / 4.0);

    IntersectionReport rep;
    const double bisect_tol = std::max(1e-14, 1e-12 * hi);
    int last = 0;
    double r_last = rs.front();
    std::optional<double> neutral_start;
    for (double r : rs) {
        const int sg = sign_at(r);
        if (sg == 0) {
            if (!neutral_start) neutral_start = r;
            continue;
        }
        if (last != 0 && sg != last) {
            ++rep.count;
            rep.zeros.push_back(ode::bisect(diff, r_last, r, bisect_tol));
        } else if (neutral_start) {
            rep.tangencies.push_back(*neutral_start);
        }
        neutral_start.reset();
        last = sg;
        r_last = r;
    }
    if (neutral_start) rep.tangencies.push_back(*neutral_start);
    return rep;
}

IntersectionReport phase_intersections(const Shooter& s, double alpha, double R, double r_lo) {
    if (!s.lambda_tilde()) throw RegimeError("phase comparison needs q > q*");
    if (!(alpha > 0) || !(R > 0) || !(r_lo >= 0) || !(r_lo < R))
        throw ParameterError("require alpha > 0 and 0 <= r_lo < R");
    ProblemParams p = s.params();
    const auto [xh, yh] = interior_point(p);
    const auto run = run_difference(p, s.lambda_ref(), alpha, xh, yh, -14.0, std::log(R));
    auto ts = node_times(run.sol);
    if (r_lo > 0) {
        const double tl = std::log(r_lo);
        std::erase_if(ts, [tl](double t) { return t <= tl; });
        ts.insert(ts.begin(), tl);
    }
    auto rep = count_sign_changes([&](double t) { return run.gap(t); }, ts, 1e-12, true);
    for (double& z : rep.zeros) z = std::exp(z);
    return rep;
}

double estimate_lambda_star(const BifurcationCurve& curve) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& smp : curve.samples)
        if (!smp.reached_zero) best = std::max(best, smp.delta);
    for (const auto& e : curve.extrema) best = std::max(best, e.delta);
    if (!std::isfinite(best)) throw NumericalError("no usable samples on the curve");
    return curve.lambda_ref * (1.0 + best);
}

}  // namespace khm
