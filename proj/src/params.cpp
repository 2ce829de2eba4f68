#include "khm/params.hpp"

#include "khm/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace khm {

namespace {

bool is_integral(double v) {
    return std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 1e15;
}

// Decimal literal -> exact rational if it fits in 64-bit numerator/denominator.
std::optional<Rational> exact_decimal(std::string_view s) {
    bool neg = false;
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
    long long num = 0, den = 1;
    bool any = false, dot = false;
    for (; i < s.size(); ++i) {
        char ch = s[i];
        if (ch == '.') {
            if (dot) return std::nullopt;
            dot = true;
            continue;
        }
        if (ch == 'e' || ch == 'E') break;
        if (ch < '0' || ch > '9') return std::nullopt;
        if (num > (std::numeric_limits<long long>::max() - 9) / 10) return std::nullopt;
        num = num * 10 + (ch - '0');
        if (dot) {
            if (den > std::numeric_limits<long long>::max() / 10) return std::nullopt;
            den *= 10;
        }
        any = true;
    }
    if (!any) return std::nullopt;
    if (i < s.size()) {
        int ex = 0;
        auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + s.size(), ex);
        if (ec != std::errc() || p != s.data() + s.size() || std::abs(ex) > 15) return std::nullopt;
        for (; ex > 0; --ex) {
            if (std::llabs(num) > std::numeric_limits<long long>::max() / 10) return std::nullopt;
            num *= 10;
        }
        for (; ex < 0; ++ex) {
            if (den > std::numeric_limits<long long>::max() / 10) return std::nullopt;
            den *= 10;
        }
    }
    Rational r(num, den);
    return neg ? -r : r;
}

double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

}  // namespace

Exponent::Exponent(double v) : value_(v) {
    if (is_integral(v)) exact_ = Rational(static_cast<long long>(v));
}

Exponent::Exponent(Rational r) : value_(to_double(r)), exact_(r) {}

Exponent Exponent::parse(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw ParameterError("empty numeric value");
    auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        auto a = exact_decimal(text.substr(0, slash));
        auto b = exact_decimal(text.substr(slash + 1));
        if (!a || !b || b->numerator() == 0) throw ParameterError("cannot parse '" + std::string(text) + "'");
        return Exponent(*a / *b);
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ParameterError("cannot parse '" + std::string(text) + "'");
    Exponent e;
    e.value_ = v;
    if (auto r = exact_decimal(text)) e.exact_ = *r;
    return e;
}

std::string Exponent::str() const {
    if (exact_) {
        if (exact_->denominator() == 1) return std::to_string(exact_->numerator());
        return std::to_string(exact_->numerator()) + "/" + std::to_string(exact_->denominator());
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value_);
    return std::string(buf, res.ptr);
}

Exponent operator-(const Exponent& a, long long b) {
    if (a.exact_) return Exponent(*a.exact_ - b);
    Exponent e;
    e.value_ = a.value_ - static_cast<double>(b);
    return e;
}

Exponent operator+(const Exponent& a, long long b) { return a - (-b); }

std::string to_string(WeightKind w) { return w == WeightKind::matukuma ? "matukuma" : "power"; }

WeightKind weight_from_string(std::string_view s) {
    if (s == "matukuma") return WeightKind::matukuma;
    if (s == "power") return WeightKind::power;
    throw ParameterError("unknown weight '" + std::string(s) + "' (matukuma|power)");
}

void ProblemParams::validate() const {
    if (k < 1) throw ParameterError("require k >= 1");
    if (n <= 2 * k) throw ParameterError("require n > 2k");
    if (!std::isfinite(qv()) || qv() <= k) throw ParameterError("require q > k");
    if (!std::isfinite(muv()) || muv() < 2.0) throw ParameterError("require mu >= 2");
    if (!(tol > 0.0) || !std::isfinite(tol) || tol >= 1e-2) throw ParameterError("require 0 < tol < 1e-2");
    if (lambda && (!(*lambda > 0.0) || !std::isfinite(*lambda))) throw ParameterError("require lambda > 0");
}

double ProblemParams::c() const { return to_double(c_nk(n, k)); }

ProblemParams canonical_params() { return ProblemParams{}; }

ProblemParams secondary_params() {
    ProblemParams p;
    p.n = 13;
    p.k = 2;
    p.q = 5.0;
    return p;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::below_critical: return "below-critical";
        case Regime::critical: return "critical";
        case Regime::spiral_window: return "spiral-window";
        case Regime::at_or_above_jl: return "at-or-above-JL";
    }
    return "?";
}

Rational c_nk(int n, int k) {
    if (k < 0 || n < 1 || k > n) throw ParameterError("c_nk needs 0 <= k <= n, n >= 1");
    // running product stays integral: C(n, j) = C(n, j-1) * (n-j+1) / j
    long long b = 1;
    for (int j = 1; j <= k; ++j) {
        long long g = std::gcd(b, static_cast<long long>(j));
        long long num = b / g, den = j / g;
        long long m = (n - j + 1) / den;
        b = num * m;
    }
    return Rational(b, n);
}

Exponent q_star(int n, int k, const Exponent& sigma) {
    if (n <= 2 * k) throw ParameterError("require n > 2k");
    if (sigma.exact()) {
        Rational s = *sigma.exact();
        return Exponent((Rational((n + 2) * k) + s * (k + 1)) / (n - 2 * k));
    }
    Exponent e(((n + 2.0) * k + sigma.value() * (k + 1)) / (n - 2.0 * k));
    return e;
}

double q_jl(int n, int k, double sigma) {
    const double kk = k, nn = n;
    if (!(nn > 2 * kk + 8 + 4 * sigma / kk)) return std::numeric_limits<double>::infinity();
    const double rad = kk * (2 * kk + sigma) * ((kk + 1) * nn - kk * (2 - sigma));
    const double root = 2.0 * std::sqrt(std::max(rad, 0.0));
    const double num = kk * (kk + 1) * nn - kk * kk * (2 - sigma) + 2 * kk + sigma - root;
    const double den = kk * (kk + 1) * nn - 2 * kk * kk * (kk + 3) - 2 * kk * sigma - root;
    return kk * num / den;
}

double q_jl_by_discriminant(int n, int k, double mu) {
    auto disc = [&](double q) {
        const double xh = (q * (n - 2 * k) - k * (n - 2 + mu)) / (q - k);
        const double yh = (2 * k - 2 + mu) / (q - k);
        return (yh - xh) * (yh - xh) - 4 * xh * yh * (q - k) / k;
    };
    double lo = q_star(n, k, Exponent(mu - 2)).value();
    double hi = lo + 1.0;
    while (disc(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (disc(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Regime classify_regime(const ProblemParams& p) {
    p.validate();
    const Exponent qs = q_star(p.n, p.k, p.sigma());
    if (p.q.exact() && qs.exact()) {
        if (*p.q.exact() == *qs.exact()) return Regime::critical;
        if (*p.q.exact() < *qs.exact()) return Regime::below_critical;
    } else {
        const double d = p.qv() - qs.value();
        if (std::fabs(d) <= kCriticalBand * std::max(1.0, std::fabs(qs.value()))) return Regime::critical;
        if (d < 0) return Regime::below_critical;
    }
    const double jl = q_jl(p.n, p.k, p.sigma().value());
    if (std::isfinite(jl) && p.qv() >= jl - kCriticalBand * std::max(1.0, jl)) return Regime::at_or_above_jl;
    return Regime::spiral_window;
}

double d_mu(double mu) {
    if (!(mu >= 2.0)) throw ParameterError("require mu >= 2");
    if (mu == 2.0) return 1.0;
    if (mu <= 4.0) {
        const double a = mu / 2.0, b = (mu - 2.0) / 2.0;
        return std::pow(a, a) / std::pow(b, b);
    }
    return std::pow(2.0, mu / 2.0);
}

double lambda_star_lower_bound(const ProblemParams& p) {
    p.validate();
    const double q = p.qv(), k = p.k;
    const double binom = to_double(c_nk(p.n, p.k) * static_cast<long long>(p.n));
    return d_mu(p.muv()) * binom * std::pow(2 * k / (q - k), k) * std::pow((q - k) / q, q);
}

}  // namespace khm
