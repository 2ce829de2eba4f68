#pragma once

#include <boost/rational.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace khm {

using Rational = boost::rational<long long>;

// A real number that remembers an exact rational form when one is known.
// Parsed strings ("13/9", "2.5", "3") are exact; generic doubles are not,
// except integral ones.
class Exponent {
public:
    Exponent() = default;
    Exponent(double v);  // NOLINT(google-explicit-constructor)
    Exponent(Rational r);  // NOLINT(google-explicit-constructor)

    static Exponent parse(std::string_view text);

    double value() const { return value_; }
    const std::optional<Rational>& exact() const { return exact_; }
    std::string str() const;

    friend Exponent operator-(const Exponent& a, long long b);
    friend Exponent operator+(const Exponent& a, long long b);

private:
    double value_ = 0.0;
    std::optional<Rational> exact_;
};

enum class WeightKind { matukuma, power };

std::string to_string(WeightKind w);
WeightKind weight_from_string(std::string_view s);

struct ProblemParams {
    int n = 11;
    int k = 1;
    Exponent q = 3.0;
    Exponent mu = 2.0;
    std::optional<double> lambda;
    WeightKind weight = WeightKind::matukuma;
    double tol = 1e-10;

    // Throws ParameterError naming the violated constraint.
    void validate() const;

    double qv() const { return q.value(); }
    double muv() const { return mu.value(); }
    Exponent sigma() const { return mu - 2; }
    double c() const;
    double rho_minus() const { return n - 2 + muv(); }
    double rho_plus() const { return n - 2; }
    // growth exponent of y near the origin equilibrium: (2k+mu-2)/k
    double y_rate() const { return (2.0 * k + muv() - 2.0) / k; }
    // scaling exponent of the self-similar family: (q-k)/(2k+mu-2)
    double gamma() const { return (qv() - k) / (2.0 * k + muv() - 2.0); }
};

ProblemParams canonical_params();
ProblemParams secondary_params();

enum class Regime { below_critical, critical, spiral_window, at_or_above_jl };

std::string to_string(Regime r);

Rational c_nk(int n, int k);
Exponent q_star(int n, int k, const Exponent& sigma);
// +inf when the dimension is too small for the spiral window to close.
double q_jl(int n, int k, double sigma);
// q_jl via the root of the eigenvalue discriminant at the interior point;
// independent of the closed form, used for cross-checks.
double q_jl_by_discriminant(int n, int k, double mu);

Regime classify_regime(const ProblemParams& p);
double d_mu(double mu);
double lambda_star_lower_bound(const ProblemParams& p);

// Real band used where exact comparison is unavailable.
inline constexpr double kCriticalBand = 1e-12;

}  // namespace khm
