#pragma once

// Dormand-Prince 8(5,3) explicit Runge-Kutta with 7th-order dense output.
// Coefficients follow the published tableau (same values scipy ships).

#include "khm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace khm::ode {

template <std::size_t N>
using State = std::array<double, N>;

namespace tableau {
    inline constexpr double C[16] = {0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0, 1.0, 0.1, 0.2, 0.7777777777777778};
    inline constexpr double A[16][16] = {
        {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259, 0.0, 0.0, 0.0, 0.0},
        {0.056167502283047954, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25350021021662483, -0.2462390374708025, -0.12419142326381637, 0.15329179827876568, 0.00820105229563469, 0.007567897660545699, -0.008298, 0.0, 0.0, 0.0},
        {0.03183464816350214, 0.0, 0.0, 0.0, 0.0, 0.028300909672366776, 0.053541988307438566, -0.05492374857139099, 0.0, 0.0, -0.00010834732869724932, 0.0003825710908356584, -0.00034046500868740456, 0.1413124436746325, 0.0, 0.0},
        {-0.42889630158379194, 0.0, 0.0, 0.0, 0.0, -4.697621415361164, 7.683421196062599, 4.06898981839711, 0.3567271874552811, 0.0, 0.0, 0.0, -0.0013990241651590145, 2.9475147891527724, -9.15095847217987, 0.0}};
    inline constexpr double B[12] = {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259};
    inline constexpr double E3[13] = {-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0};
    inline constexpr double E5[13] = {0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0};
    inline constexpr double D[4][16] = {
        {-8.428938276109013, 0.0, 0.0, 0.0, 0.0, 0.5667149535193777, -3.0689499459498917, 2.38466765651207, 2.117034582445028, -0.871391583777973, 2.2404374302607883, 0.6315787787694688, -0.08899033645133331, 18.148505520854727, -9.194632392478356, -4.436036387594894},
        {10.427508642579134, 0.0, 0.0, 0.0, 0.0, 242.28349177525817, 165.20045171727028, -374.5467547226902, -22.113666853125306, 7.733432668472264, -30.674084731089398, -9.332130526430229, 15.697238121770845, -31.139403219565178, -9.35292435884448, 35.81684148639408},
        {19.985053242002433, 0.0, 0.0, 0.0, 0.0, -387.0373087493518, -189.17813819516758, 527.8081592054236, -11.57390253995963, 6.8812326946963, -1.0006050966910838, 0.7777137798053443, -2.778205752353508, -60.19669523126412, 84.32040550667716, 11.99229113618279},
        {-25.69393346270375, 0.0, 0.0, 0.0, 0.0, -154.18974869023643, -231.5293791760455, 357.6391179106141, 93.40532418362432, -37.45832313645163, 104.0996495089623, 29.8402934266605, -43.53345659001114, 96.32455395918828, -39.17726167561544, -149.72683625798564}};
}  // namespace tableau

template <std::size_t N>
struct Segment {
    double t0 = 0.0;
    double h = 0.0;
    State<N> y0{};
    std::array<State<N>, 7> F{};

    double t1() const { return t0 + h; }
    State<N> y1() const {
        State<N> y = y0;
        for (std::size_t i = 0; i < N; ++i) y[i] += F[0][i];
        return y;
    }
    State<N> operator()(double t) const {
        const double x = (t - t0) / h;
        State<N> y{};
        for (int j = 6; j >= 0; --j) {
            const double m = (j % 2 == 0) ? x : 1.0 - x;
            for (std::size_t i = 0; i < N; ++i) y[i] = (y[i] + F[j][i]) * m;
        }
        for (std::size_t i = 0; i < N; ++i) y[i] += y0[i];
        return y;
    }
};

// Piecewise polynomial continuation of an accepted-step sequence.
template <std::size_t N>
class DenseSolution {
public:
    DenseSolution() = default;
    DenseSolution(double t0, const State<N>& y0) : t_start_(t0), y_start_(y0) {}

    void push(const Segment<N>& s) { segs_.push_back(s); }
    void truncate(std::size_t count) { segs_.resize(std::min(count, segs_.size())); }

    bool empty() const { return segs_.empty(); }
    std::size_t size() const { return segs_.size(); }
    const Segment<N>& segment(std::size_t i) const { return segs_[i]; }

    double t_begin() const { return t_start_; }
    double t_end() const { return segs_.empty() ? t_start_ : segs_.back().t1(); }
    double t_lo() const { return std::min(t_begin(), t_end()); }
    double t_hi() const { return std::max(t_begin(), t_end()); }

    // Step nodes t_0 < t_1 < ... (in integration order), size() + 1 of them.
    double node_t(std::size_t i) const { return i == 0 ? t_start_ : segs_[i - 1].t1(); }
    State<N> node_y(std::size_t i) const { return i == 0 ? y_start_ : segs_[i - 1].y1(); }

    bool contains(double t) const {
        const double slack = 1e-12 * (1.0 + std::fabs(t_hi()) + std::fabs(t_lo()));
        return t >= t_lo() - slack && t <= t_hi() + slack;
    }

    State<N> operator()(double t) const {
        if (segs_.empty()) {
            if (t != t_start_) throw DomainError("dense solution is a single point");
            return y_start_;
        }
        if (!contains(t)) {
            std::ostringstream os;
            os << "time " << t << " outside dense range [" << t_lo() << ", " << t_hi() << "]";
            throw DomainError(os.str());
        }
        return segs_[locate(t)](t);
    }

    std::size_t locate(double t) const {
        const bool fwd = segs_.front().h > 0;
        auto it = std::upper_bound(segs_.begin(), segs_.end(), t, [fwd](double v, const Segment<N>& s) {
            return fwd ? v < s.t0 : v > s.t0;
        });
        std::size_t i = static_cast<std::size_t>(it - segs_.begin());
        return i == 0 ? 0 : i - 1;
    }

private:
    double t_start_ = 0.0;
    State<N> y_start_{};
    std::vector<Segment<N>> segs_;
};

template <std::size_t N>
struct Options {
    double rtol = 1e-10;
    State<N> atol = filled(1e-12);
    double max_step = std::numeric_limits<double>::infinity();
    double first_step = 0.0;  // 0: automatic
    double fixed_step = 0.0;  // > 0: constant steps, no error control
    std::size_t max_steps = 2'000'000;
    // Replaces the per-component error scale atol + rtol * max(|y|, |y_new|).
    std::function<void(const State<N>& y, const State<N>& y_new, State<N>& scale)> scale_fn;
    // Checked after every accepted step; true ends the integration there.
    std::function<bool(double t, const State<N>& y)> stop;

    static State<N> filled(double v) {
        State<N> s;
        s.fill(v);
        return s;
    }
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t nfev = 0;
    bool stopped = false;
};

namespace detail {

template <std::size_t N>
bool finite(const State<N>& y) {
    for (double v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

template <std::size_t N>
double rms(const State<N>& v, const State<N>& scale) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += (v[i] / scale[i]) * (v[i] / scale[i]);
    return std::sqrt(s / N);
}

}  // namespace detail

// Integrates y' = f(t, y) from t0 to t1; f has signature void(double, const State&, State&).
template <std::size_t N, class Rhs>
DenseSolution<N> integrate(Rhs&& f, double t0, const State<N>& y0, double t1, const Options<N>& opt,
                           Stats* stats_out = nullptr) {
    using namespace tableau;
    constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0, err_exp = -1.0 / 8.0;

    Stats stats;
    DenseSolution<N> sol(t0, y0);
    if (!detail::finite(y0)) throw NumericalError("non-finite initial state");
    if (t1 == t0) return sol;
    const double dir = t1 > t0 ? 1.0 : -1.0;

    auto eval = [&](double t, const State<N>& y, State<N>& dy) {
        f(t, y, dy);
        ++stats.nfev;
    };

    auto scale_of = [&](const State<N>& y, const State<N>& y_new, State<N>& sc) {
        if (opt.scale_fn) {
            opt.scale_fn(y, y_new, sc);
            return;
        }
        for (std::size_t i = 0; i < N; ++i)
            sc[i] = opt.atol[i] + opt.rtol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
    };

    double t = t0;
    State<N> y = y0, fy{};
    eval(t, y, fy);

    double h_abs = 0.0;
    if (opt.fixed_step > 0.0) {
        h_abs = opt.fixed_step;
    } else if (opt.first_step > 0.0) {
        h_abs = opt.first_step;
    } else {
        State<N> sc;
        scale_of(y, y, sc);
        const double d0 = detail::rms(y, sc), d1 = detail::rms(fy, sc);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, std::fabs(t1 - t0));
        State<N> y1, f1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h0 * dir * fy[i];
        eval(t + h0 * dir, y1, f1);
        State<N> df;
        for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - fy[i];
        const double d2 = detail::finite(f1) ? detail::rms(df, sc) / h0 : std::numeric_limits<double>::infinity();
        const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                       : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
        h_abs = std::min({100 * h0, h1, std::fabs(t1 - t0), opt.max_step});
    }

    std::array<State<N>, 16> K{};
    while (dir * (t1 - t) > 0) {
        if (stats.accepted >= opt.max_steps) throw NumericalError("step budget exhausted");
        const double min_step = 10.0 * std::fabs(std::nextafter(t, dir * std::numeric_limits<double>::infinity()) - t);
        h_abs = std::min(h_abs, opt.max_step);

        bool accepted = false, rejected = false;
        double h = 0.0, t_new = t;
        State<N> y_new{}, f_new{};
        while (!accepted) {
            if (h_abs < min_step) {
                std::ostringstream os;
                os << "step size underflow at t=" << t;
                throw NumericalError(os.str());
            }
            t_new = t + dir * h_abs;
            if (dir * (t_new - t1) > 0) t_new = t1;
            h = t_new - t;
            h_abs = std::fabs(h);

            K[0] = fy;
            for (int s = 1; s < 12; ++s) {
                State<N> ys = y;
                for (int j = 0; j < s; ++j) {
                    if (A[s][j] == 0.0) continue;
                    for (std::size_t i = 0; i < N; ++i) ys[i] += h * A[s][j] * K[j][i];
                }
                eval(t + C[s] * h, ys, K[s]);
            }
            y_new = y;
            for (int j = 0; j < 12; ++j) {
                if (B[j] == 0.0) continue;
                for (std::size_t i = 0; i < N; ++i) y_new[i] += h * B[j] * K[j][i];
            }
            eval(t_new, y_new, f_new);
            K[12] = f_new;

            if (opt.fixed_step > 0.0) {
                if (!detail::finite(y_new)) throw NumericalError("non-finite state in fixed-step mode");
                accepted = true;
                break;
            }

            double err = std::numeric_limits<double>::infinity();
            if (detail::finite(y_new) && detail::finite(f_new)) {
                State<N> sc;
                scale_of(y, y_new, sc);
                double e5 = 0.0, e3 = 0.0;
                for (std::size_t i = 0; i < N; ++i) {
                    double a5 = 0.0, a3 = 0.0;
                    for (int j = 0; j < 13; ++j) {
                        a5 += E5[j] * K[j][i];
                        a3 += E3[j] * K[j][i];
                    }
                    a5 /= sc[i];
                    a3 /= sc[i];
                    e5 += a5 * a5;
                    e3 += a3 * a3;
                }
                if (e5 == 0.0 && e3 == 0.0)
                    err = 0.0;
                else
                    err = h_abs * e5 / std::sqrt((e5 + 0.01 * e3) * N);
                if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
            }

            if (err < 1.0) {
                double factor = err == 0.0 ? max_factor : std::min(max_factor, safety * std::pow(err, err_exp));
                if (rejected) factor = std::min(1.0, factor);
                h_abs *= factor;
                accepted = true;
            } else {
                h_abs *= std::isfinite(err) ? std::max(min_factor, safety * std::pow(err, err_exp)) : min_factor;
                rejected = true;
                ++stats.rejected;
            }
        }

        // extra stages for the dense interpolant
        for (int s = 13; s < 16; ++s) {
            State<N> ys = y;
            for (int j = 0; j < s; ++j) {
                if (A[s][j] == 0.0) continue;
                for (std::size_t i = 0; i < N; ++i) ys[i] += h * A[s][j] * K[j][i];
            }
            eval(t + C[s] * h, ys, K[s]);
        }
        Segment<N> seg;
        seg.t0 = t;
        seg.h = h;
        seg.y0 = y;
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = y_new[i] - y[i];
            seg.F[0][i] = dy;
            seg.F[1][i] = h * K[0][i] - dy;
            seg.F[2][i] = 2 * dy - h * (f_new[i] + K[0][i]);
            for (int r = 0; r < 4; ++r) {
                double acc = 0.0;
                for (int j = 0; j < 16; ++j) acc += D[r][j] * K[j][i];
                seg.F[3 + r][i] = h * acc;
            }
        }
        sol.push(seg);
        ++stats.accepted;

        t = t_new;
        y = y_new;
        fy = f_new;
        if (opt.stop && opt.stop(t, y)) {
            stats.stopped = true;
            break;
        }
    }
    if (stats_out) *stats_out = stats;
    return sol;
}

// Bisection for a sign change of g(t) on [a, b] using a continuous evaluator.
template <class G>
double bisect(G&& g, double a, double b, double tol_t, int max_iter = 200) {
    double ga = g(a);
    for (int it = 0; it < max_iter && std::fabs(b - a) > tol_t; ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if (gm == 0.0) return m;
        if ((gm < 0) == (ga < 0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace khm::ode
