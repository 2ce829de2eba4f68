#include "khm/errors.hpp"
#include "khm/radial.hpp"
#include "product_simpson.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace khm {

namespace {

// The integral operator on a uniform grid of [0, r_max]:
//   w(r) = -alpha + int_0^r s^pout [ s^-(pin+1) int_0^s t^pin g(t) dt ]^(1/k) ds,
// g = lambda/c * smooth * (-w)^q, pin = n + mu - 3, pout = (mu - 2 + k)/k.
struct GridOperator {
    std::size_t N;
    double h, source, q, k, pin;
    detail::ProductSimpson inner, outer;
    std::vector<double> r, smooth, rpin1, rpout;

    GridOperator(const ProblemParams& p, double lambda, double r_max, std::size_t intervals)
        : N(intervals), h(r_max / intervals), source(lambda / p.c()), q(p.qv()), k(p.k),
          pin(p.n + p.muv() - 3.0), inner(h, intervals / 2, pin),
          outer(h, intervals / 2, (p.muv() - 2.0 + p.k) / p.k), r(N + 1), smooth(N + 1), rpin1(N + 1), rpout(N + 1) {
        const Weight wt = weight_of(p);
        const double pout = (p.muv() - 2.0 + p.k) / p.k;
        for (std::size_t i = 0; i <= N; ++i) {
            r[i] = h * static_cast<double>(i);
            smooth[i] = wt.smooth(r[i]);
            rpin1[i] = std::pow(r[i], pin + 1.0);
            rpout[i] = std::pow(r[i], pout);
        }
    }

    double g_at(std::size_t i, double neg_w) const { return source * smooth[i] * std::pow(std::max(neg_w, 0.0), q); }

    // mean of s^pin g over [0, r_i] scaled back, to the power 1/k
    double v_at(std::size_t i, const std::vector<double>& I, const std::vector<double>& g) const {
        const double mean = i == 0 ? g[0] / (pin + 1.0) : I[i] / rpin1[i];
        return std::pow(std::max(mean, 0.0), 1.0 / k);
    }
};

std::size_t choose_intervals(const ProblemParams& p, double lambda, double alpha, double r_max) {
    const double ell = std::pow(p.c() / (lambda * std::pow(alpha, p.qv() - p.k)), 1.0 / (2.0 * p.k + p.muv() - 2.0));
    const double need = std::max(4096.0 * r_max, 256.0 * r_max / ell);
    const double cap = static_cast<double>(std::size_t{1} << 22);
    return std::bit_ceil(static_cast<std::size_t>(std::min(std::ceil(need), cap)));
}

}  // namespace

RadialProfile picard_oracle(const ProblemParams& p, double alpha, double r_max, const PicardOptions& opt) {
    p.validate();
    if (!p.lambda) throw ParameterError("oracle needs lambda");
    if (!(alpha > 0)) throw ParameterError("require alpha > 0");
    if (!(r_max > 0)) throw ParameterError("require r_max > 0");
    const double lambda = *p.lambda;
    std::size_t N = opt.intervals ? opt.intervals : choose_intervals(p, lambda, alpha, r_max);
    if (N % 2) ++N;
    GridOperator op(p, lambda, r_max, N);

    std::vector<double> w(N + 1, -alpha), g(N + 1), I(N + 1, 0.0), v(N + 1), W(N + 1, 0.0);
    g[0] = op.g_at(0, alpha);
    v[0] = op.v_at(0, I, g);
    const std::size_t panels = N / 2, win = std::max<std::size_t>(1, opt.window_panels);
    const double floor_tol = std::max(p.tol, 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, alpha));

    for (std::size_t ja = 0; ja < panels; ja += win) {
        const std::size_t jb = std::min(panels, ja + win);
        const std::size_t i0 = 2 * ja, i1 = 2 * jb;
        const double slope = op.rpout[i0] * v[i0];
        for (std::size_t i = i0 + 1; i <= i1; ++i) w[i] = w[i0] + slope * (op.r[i] - op.r[i0]);
        bool done = false;
        for (std::size_t sweep = 0; sweep < opt.max_sweeps && !done; ++sweep) {
            for (std::size_t i = i0 + 1; i <= i1; ++i) g[i] = op.g_at(i, -w[i]);
            op.inner.accumulate(g, I, ja, jb);
            for (std::size_t i = i0 + 1; i <= i1; ++i) v[i] = op.v_at(i, I, g);
            op.outer.accumulate(v, W, ja, jb);
            double delta = 0.0;
            for (std::size_t i = i0 + 1; i <= i1; ++i) {
                const double nw = -alpha + W[i];
                delta = std::max(delta, std::fabs(nw - w[i]));
                w[i] = nw;
            }
            if (!std::isfinite(delta)) throw NumericalError("oracle iteration produced non-finite values");
            done = delta < floor_tol;
        }
        if (!done) throw NumericalError("oracle iteration did not settle within the sweep budget");
    }

    std::vector<double> dw(N + 1);
    for (std::size_t i = 0; i <= N; ++i) dw[i] = op.rpout[i] * v[i];
    return RadialProfile(ProfileMeta::from(p, lambda, alpha), op.r, std::move(w), std::move(dw));
}

std::pair<std::vector<double>, std::vector<double>> picard_apply(const ProblemParams& p, double alpha, double r_max,
                                                                 const std::vector<double>& w) {
    p.validate();
    if (!p.lambda) throw ParameterError("oracle needs lambda");
    if (w.size() < 3 || w.size() % 2 == 0) throw DomainError("grid needs an even number of intervals");
    const std::size_t N = w.size() - 1;
    GridOperator op(p, *p.lambda, r_max, N);
    std::vector<double> g(N + 1), I(N + 1, 0.0), v(N + 1), W(N + 1, 0.0);
    for (std::size_t i = 0; i <= N; ++i) g[i] = op.g_at(i, -w[i]);
    op.inner.accumulate(g, I, 0, N / 2);
    for (std::size_t i = 0; i <= N; ++i) v[i] = op.v_at(i, I, g);
    op.outer.accumulate(v, W, 0, N / 2);
    std::vector<double> out(N + 1), dw(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        out[i] = -alpha + W[i];
        dw[i] = op.rpout[i] * v[i];
    }
    return {out, dw};
}

std::string to_string(MaximalStatus s) {
    switch (s) {
        case MaximalStatus::converged: return "converged";
        case MaximalStatus::diverged: return "diverged";
        case MaximalStatus::inconclusive: return "inconclusive";
    }
    return "?";
}

MaximalResult maximal_solution(const ProblemParams& p, double lambda, const MaximalOptions& opt) {
    p.validate();
    if (!(lambda > 0) || !std::isfinite(lambda)) throw ParameterError("require lambda > 0");
    std::size_t N = std::max<std::size_t>(opt.intervals, 2);
    if (N % 2) ++N;
    GridOperator op(p, lambda, 1.0, N);

    MaximalResult res;
    std::vector<double> u(N + 1, 0.0), g(N + 1), I(N + 1, 0.0), v(N + 1), W(N + 1, 0.0), nu(N + 1);
    const double slack = 1e-13;
    for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
        for (std::size_t i = 0; i <= N; ++i) g[i] = op.g_at(i, 1.0 - u[i]);
        op.inner.accumulate(g, I, 0, N / 2);
        for (std::size_t i = 0; i <= N; ++i) v[i] = op.v_at(i, I, g);
        op.outer.accumulate(v, W, 0, N / 2);
        double delta = 0.0, lowest = 0.0;
        for (std::size_t i = 0; i <= N; ++i) {
            nu[i] = -(W[N] - W[i]);
            if (nu[i] > u[i] + slack * std::max(1.0, std::fabs(u[i]))) res.monotone = false;
            delta = std::max(delta, std::fabs(nu[i] - u[i]));
            lowest = std::min(lowest, nu[i]);
        }
        u.swap(nu);
        res.last_increment = delta;
        if (!std::isfinite(lowest) || -lowest > opt.ceiling) {
            res.status = MaximalStatus::diverged;
            return res;
        }
        if (delta < p.tol) {
            res.status = MaximalStatus::converged;
            break;
        }
    }
    if (res.status != MaximalStatus::converged) {
        res.iterations = opt.max_iterations;
        return res;
    }
    std::vector<double> w(N + 1), dw(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        w[i] = u[i] - 1.0;
        dw[i] = op.rpout[i] * v[i];
    }
    res.profile = RadialProfile(ProfileMeta::from(p, lambda, 1.0 - u[0]), op.r, std::move(w), std::move(dw));
    return res;
}

}  // namespace khm
