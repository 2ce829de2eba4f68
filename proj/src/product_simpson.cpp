#include "product_simpson.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace khm::detail {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 10>;

// int_0^b xi^p L_i(xi) dxi for the quadratic Lagrange basis on {0, 1, 2}
std::array<double, 3> origin_moments(double p, double b) {
    auto mom = [&](int m) { return std::pow(b, p + m + 1) / (p + m + 1); };
    const double m0 = mom(0), m1 = mom(1), m2 = mom(2);
    return {(m2 - 3 * m1 + 2 * m0) / 2, -m2 + 2 * m1, (m2 - m1) / 2};
}

// Full Gauss-Legendre rule on [-1, 1] expanded from the tabulated half.
struct Rule {
    std::vector<double> x, w;
    Rule() {
        const auto& a = Gauss::abscissa();
        const auto& wt = Gauss::weights();
        for (std::size_t i = 0; i < a.size(); ++i) {
            x.push_back(a[i]);
            w.push_back(wt[i]);
            if (a[i] != 0.0) {
                x.push_back(-a[i]);
                w.push_back(wt[i]);
            }
        }
    }
};

const Rule& rule() {
    static const Rule r;
    return r;
}

// int_0^b (1 + xi/A)^p L_i(xi) dxi; the integrand is analytic well beyond [0, b] for A >= 2
std::array<double, 3> shifted_moments(double p, double a_over_h, double b) {
    const Rule& g = rule();
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double xi = 0.5 * b * (g.x[i] + 1.0);
        const double f = g.w[i] * 0.5 * b * std::pow(1.0 + xi / a_over_h, p);
        out[0] += f * (xi - 1) * (xi - 2) / 2;
        out[1] -= f * xi * (xi - 2);
        out[2] += f * xi * (xi - 1) / 2;
    }
    return out;
}

}  // namespace

ProductSimpson::ProductSimpson(double h, std::size_t panels, double p) : h_(h), full_(panels), half_(panels) {
    const double hp1 = std::pow(h, p + 1);
    full_[0] = origin_moments(p, 2.0);
    half_[0] = origin_moments(p, 1.0);
    for (int i = 0; i < 3; ++i) {
        full_[0][i] *= hp1;
        half_[0][i] *= hp1;
    }
    for (std::size_t j = 1; j < panels; ++j) {
        const double a_over_h = 2.0 * static_cast<double>(j);
        const double scale = h * std::pow(a_over_h * h, p);
        full_[j] = shifted_moments(p, a_over_h, 2.0);
        half_[j] = shifted_moments(p, a_over_h, 1.0);
        for (int i = 0; i < 3; ++i) {
            full_[j][i] *= scale;
            half_[j][i] *= scale;
        }
    }
}

void ProductSimpson::accumulate(const std::vector<double>& g, std::vector<double>& out, std::size_t ja,
                                std::size_t jb) const {
    for (std::size_t j = ja; j < jb; ++j) {
        const std::size_t i = 2 * j;
        const auto& f = full_[j];
        const auto& s = half_[j];
        out[i + 1] = out[i] + s[0] * g[i] + s[1] * g[i + 1] + s[2] * g[i + 2];
        out[i + 2] = out[i] + f[0] * g[i] + f[1] * g[i + 1] + f[2] * g[i + 2];
    }
}

}  // namespace khm::detail
