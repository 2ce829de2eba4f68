#include "khm/phase.hpp"

#include "khm/errors.hpp"
#include "khm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace khm {

namespace {

double need_lambda(const ProblemParams& p) {
    if (!p.lambda) throw ParameterError("phase transform needs lambda");
    return *p.lambda;
}

}  // namespace

PhaseState to_phase(double r, double w, double dw, const ProblemParams& p) {
    const double lambda = need_lambda(p);
    if (!(r > 0) || !(w < 0) || !(dw > 0)) throw DomainError("phase transform needs r > 0, w < 0, w' > 0");
    const Weight wt = weight_of(p);
    const double ratio = std::pow(r, (p.muv() - 2.0 + p.k) / p.k) / dw;
    PhaseState s;
    s.t = std::log(r);
    s.x = lambda / p.c() * wt.smooth(r) * std::pow(-w, p.qv()) * std::pow(ratio, p.k);
    s.y = r * dw / (-w);
    return s;
}

double from_phase(double t, double x, double y, const ProblemParams& p) {
    const double lambda = need_lambda(p);
    if (!(x > 0) || !(y > 0) || !std::isfinite(t)) throw DomainError("inverse transform needs x > 0, y > 0");
    const Weight wt = weight_of(p);
    const double r = std::exp(t);
    const double lg = std::log(x) + p.k * std::log(y) - std::log(lambda / p.c()) -
                      (2.0 * p.k + p.muv() - 2.0) * t - std::log(wt.smooth(r));
    return -std::exp(lg / (p.qv() - p.k));
}

RadialPoint recover_point(double t, double x, double y, const ProblemParams& p) {
    RadialPoint pt;
    pt.r = std::exp(t);
    pt.w = from_phase(t, x, y, p);
    pt.dw = y * (-pt.w) / pt.r;
    return pt;
}

double rho(double t, const ProblemParams& p) {
    if (p.weight == WeightKind::power) return p.rho_minus();
    return p.n - 2.0 + p.muv() / (1.0 + std::exp(2.0 * t));
}

std::pair<double, double> vector_field(double t, double x, double y, const ProblemParams& p) {
    const double rh = rho(t, p);
    const double a = (p.n - 2.0 * p.k) / p.k;
    return {x * (rh - x - p.qv() * y), y * (-a + x / p.k + y)};
}

Matrix2 linearization(double x, double y, double rho_value, const ProblemParams& p) {
    const double q = p.qv(), k = p.k;
    return {{{rho_value - 2 * x - q * y, -q * x}, {y / k, x / k + 2 * y - (p.n - 2 * k) / k}}};
}

std::array<std::complex<double>, 2> eigenvalues(const Matrix2& a) {
    const double tr = a[0][0] + a[1][1];
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double disc = tr * tr / 4 - det;
    if (disc >= 0) {
        const double s = std::sqrt(disc);
        // avoid cancellation in the smaller root
        const double big = tr / 2 + (tr >= 0 ? s : -s);
        const double small = big != 0.0 ? det / big : tr / 2 - (tr >= 0 ? s : -s);
        return {std::complex<double>(std::min(big, small)), std::complex<double>(std::max(big, small))};
    }
    const double im = std::sqrt(-disc);
    return {std::complex<double>(tr / 2, -im), std::complex<double>(tr / 2, im)};
}

PointClass classify_point(const std::array<std::complex<double>, 2>& ev) {
    constexpr double tiny = 1e-12;
    if (std::abs(ev[0]) < tiny || std::abs(ev[1]) < tiny) return PointClass::degenerate;
    if (ev[0].imag() != 0.0) {
        if (std::fabs(ev[0].real()) < tiny) return PointClass::center;
        return ev[0].real() < 0 ? PointClass::stable_spiral : PointClass::unstable_spiral;
    }
    const double a = ev[0].real(), b = ev[1].real();
    if (a < 0 && b < 0) return PointClass::stable_node;
    if (a > 0 && b > 0) return PointClass::unstable_node;
    return PointClass::saddle;
}

std::string to_string(PointClass c) {
    switch (c) {
        case PointClass::saddle: return "saddle";
        case PointClass::stable_node: return "stable-node";
        case PointClass::unstable_node: return "unstable-node";
        case PointClass::stable_spiral: return "stable-spiral";
        case PointClass::unstable_spiral: return "unstable-spiral";
        case PointClass::center: return "center";
        case PointClass::degenerate: return "degenerate";
    }
    return "?";
}

std::pair<double, double> interior_point(const ProblemParams& p) {
    const double q = p.qv(), k = p.k, n = p.n, mu = p.muv();
    return {(q * (n - 2 * k) - k * (n - 2 + mu)) / (q - k), (2 * k - 2 + mu) / (q - k)};
}

std::pair<double, double> plus_interior_point(const ProblemParams& p) {
    const double q = p.qv(), k = p.k, n = p.n;
    return {(q * (n - 2 * k) - k * (n - 2)) / (q - k), (2 * k - 2) / (q - k)};
}

std::vector<CriticalPoint> critical_points(const ProblemParams& p, Limit limit) {
    p.validate();
    const double rh = limit == Limit::minus ? p.rho_minus() : p.rho_plus();
    std::vector<std::pair<std::string, std::pair<double, double>>> cand = {
        {"P1", {0.0, 0.0}}, {"P2", {0.0, (p.n - 2.0 * p.k) / p.k}}, {"P3", {rh, 0.0}}};
    const auto in = limit == Limit::minus ? interior_point(p) : plus_interior_point(p);
    if (in.first >= 0 && in.second >= 0) cand.push_back({limit == Limit::minus ? "interior" : "interior+", in});
    std::vector<CriticalPoint> out;
    for (auto& [label, xy] : cand) {
        bool dup = false;
        for (auto& c : out)
            if (std::fabs(c.x - xy.first) < 1e-12 && std::fabs(c.y - xy.second) < 1e-12) dup = true;
        if (dup) continue;
        CriticalPoint c;
        c.label = label;
        c.x = xy.first;
        c.y = xy.second;
        c.eigenvalues = eigenvalues(linearization(c.x, c.y, rh, p));
        c.kind = classify_point(c.eigenvalues);
        out.push_back(c);
    }
    return out;
}

double g_value(double x, double y, const ProblemParams& p) {
    const double nk = p.n - 2.0 * p.k;
    return x + nk * (p.qv() + 1.0) / (p.k + 1.0) * (p.k * y / nk - 1.0);
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::y_hat_crossing: return "y_hat_crossing";
        case EventKind::g_zero: return "g_zero";
        case EventKind::blowup: return "blowup";
    }
    return "?";
}

PhaseTrajectory::PhaseTrajectory(std::vector<PhaseState> nodes, Evaluator eval)
    : nodes_(std::move(nodes)), eval_(std::move(eval)) {
    if (nodes_.empty()) throw DomainError("trajectory needs at least one node");
}

PhaseState PhaseTrajectory::at(double t) const {
    const double lo = std::min(t_begin(), t_end()), hi = std::max(t_begin(), t_end());
    const double slack = 1e-12 * (1.0 + std::fabs(lo) + std::fabs(hi));
    if (t < lo - slack || t > hi + slack) throw DomainError("time outside trajectory range");
    auto [x, y] = eval_(std::clamp(t, lo, hi));
    return {t, x, y};
}

std::vector<PhaseEvent> find_events(const PhaseTrajectory& traj, const ProblemParams& p, double t_tol) {
    const double yhat = interior_point(p).second;
    struct Fn {
        EventKind kind;
        std::function<double(double, double)> f;
    };
    const std::vector<Fn> fns = {{EventKind::y_hat_crossing, [&](double, double y) { return y - yhat; }},
                                 {EventKind::g_zero, [&](double x, double y) { return g_value(x, y, p); }}};
    std::vector<PhaseEvent> out;
    const auto& nodes = traj.states();
    constexpr int sub = 4;
    for (const auto& fn : fns) {
        double t_prev = nodes.front().t;
        double v_prev = fn.f(nodes.front().x, nodes.front().y);
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            for (int s = 1; s <= sub; ++s) {
                const double t =
                    s == sub ? nodes[i].t : nodes[i - 1].t + (nodes[i].t - nodes[i - 1].t) * s / static_cast<double>(sub);
                const PhaseState st = s == sub ? nodes[i] : traj.at(t);
                const double v = fn.f(st.x, st.y);
                if (v_prev != 0.0 && v != 0.0 && (v < 0) != (v_prev < 0)) {
                    const double te = ode::bisect(
                        [&](double tt) {
                            auto z = traj.at(tt);
                            return fn.f(z.x, z.y);
                        },
                        t_prev, t, t_tol);
                    auto z = traj.at(te);
                    out.push_back({fn.kind, te, z.x, z.y, v > 0 ? 1 : -1});
                }
                if (v != 0.0) {
                    t_prev = t;
                    v_prev = v;
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const PhaseEvent& a, const PhaseEvent& b) { return a.t < b.t; });
    return out;
}

namespace {

PhaseTrajectory run_orbit(const ProblemParams& p, std::function<double(double)> rho_of, double t0, double x0,
                          double y0, double t1) {
    p.validate();
    if (!(t1 > t0)) throw DomainError("orbit needs t1 > t0");
    if (!(x0 >= 0) || !(y0 >= 0)) throw DomainError("orbit must start in the closed positive quadrant");
    const double q = p.qv(), k = p.k, a = (p.n - 2.0 * k) / k;
    auto rhs = [&](double t, const ode::State<2>& z, ode::State<2>& dz) {
        dz[0] = z[0] * (rho_of(t) - z[0] - q * z[1]);
        dz[1] = z[1] * (-a + z[0] / k + z[1]);
    };
    ode::Options<2> o;
    o.rtol = p.tol;
    o.atol = ode::Options<2>::filled(1e-8 * p.tol);
    o.max_step = 0.25;
    o.stop = [](double, const ode::State<2>& z) {
        return std::fabs(z[0]) > kBlowupCeiling || std::fabs(z[1]) > kBlowupCeiling;
    };
    ode::Stats st;
    auto sol = std::make_shared<ode::DenseSolution<2>>(ode::integrate<2>(rhs, t0, {x0, y0}, t1, o, &st));
    std::vector<PhaseState> nodes;
    for (std::size_t i = 0; i <= sol->size(); ++i) {
        auto z = sol->node_y(i);
        nodes.push_back({sol->node_t(i), z[0], z[1]});
    }
    PhaseTrajectory traj(std::move(nodes), [sol](double t) {
        auto z = (*sol)(t);
        return std::pair{z[0], z[1]};
    });
    traj.events = find_events(traj, p);
    if (st.stopped) {
        traj.blew_up = true;
        const auto& seg = sol->segment(sol->size() - 1);
        const double te = ode::bisect(
            [&](double t) {
                auto z = (*sol)(t);
                return std::max(std::fabs(z[0]), std::fabs(z[1])) - kBlowupCeiling;
            },
            seg.t0, seg.t1(), 1e-10);
        auto z = (*sol)(te);
        traj.events.push_back({EventKind::blowup, te, z[0], z[1], 1});
    }
    return traj;
}

}  // namespace

PhaseTrajectory integrate_orbit(const ProblemParams& p, double t0, double x0, double y0, double t1) {
    return run_orbit(p, [p](double t) { return rho(t, p); }, t0, x0, y0, t1);
}

PhaseTrajectory integrate_limit_orbit(const ProblemParams& p, Limit limit, double t0, double x0, double y0,
                                      double t1) {
    const double rh = limit == Limit::minus ? p.rho_minus() : p.rho_plus();
    return run_orbit(p, [rh](double) { return rh; }, t0, x0, y0, t1);
}

PhaseTrajectory pushforward(const RadialProfile& prof, const ProblemParams& p) {
    ProblemParams pl = p;
    pl.lambda = prof.meta().lambda;
    std::vector<PhaseState> nodes;
    auto xy_at = [prof, pl](double r) -> std::pair<double, double> {
        if (auto xy = prof.interpolant().phase_xy(r)) return *xy;
        auto [w, dw] = prof.eval(r);
        auto s = to_phase(r, w, dw, pl);
        return {s.x, s.y};
    };
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double r = prof.r()[i];
        if (r <= 0) continue;
        auto [x, y] = xy_at(r);
        nodes.push_back({std::log(r), x, y});
    }
    if (nodes.empty()) throw DomainError("profile has no nodes with r > 0");
    PhaseTrajectory traj(std::move(nodes), [xy_at](double t) { return xy_at(std::exp(t)); });
    traj.events = find_events(traj, pl);
    return traj;
}

std::vector<PhaseTrajectory> phase_portrait(const ProblemParams& p, Limit limit, const PortraitOptions& opt) {
    const double rh = limit == Limit::minus ? p.rho_minus() : p.rho_plus();
    const double xm = opt.x_max > 0 ? opt.x_max : 1.2 * rh;
    const double ym = opt.y_max > 0 ? opt.y_max : 1.2 * (p.n - 2.0 * p.k) / p.k;
    std::vector<PhaseTrajectory> out;
    const std::size_t g = std::max<std::size_t>(opt.grid, 1);
    for (std::size_t i = 1; i <= g; ++i)
        for (std::size_t j = 1; j <= g; ++j) {
            const double x0 = xm * i / (g + 1.0), y0 = ym * j / (g + 1.0);
            out.push_back(integrate_limit_orbit(p, limit, 0.0, x0, y0, opt.span));
        }
    return out;
}

}  // namespace khm
