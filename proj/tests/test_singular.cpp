#include "doctest.h"

#include "khm/errors.hpp"
#include "khm/singular.hpp"

#include <cmath>

using namespace khm;

namespace {

// Independent scipy runs (DOP853 and Radau, rtol 1e-13) of the phase system from the interior point.
constexpr double kLambdaTildeCanonical = 11.38358051630904;
constexpr double kLambdaTildeSecondary = 97.6670392618271;

ProblemParams tight(ProblemParams p) {
    p.tol = 1e-12;
    return p;
}

}  // namespace

TEST_CASE("singular parameter against the frozen references") {
    CHECK(std::fabs(lambda_tilde(tight(canonical_params())) - kLambdaTildeCanonical) < 1e-9);
    CHECK(std::fabs(lambda_tilde(tight(secondary_params())) - kLambdaTildeSecondary) < 1e-9);
    SingularOptions deep;
    deep.t0 = -16.0;
    CHECK(std::fabs(lambda_tilde(tight(canonical_params()), deep) - kLambdaTildeCanonical) < 1e-9);
}

TEST_CASE("singular parameter is stable under the tolerance") {
    for (auto base : {canonical_params(), secondary_params()}) {
        base.tol = 1e-12;
        const double ref = lambda_tilde(base);
        for (double tol : {1e-8, 1e-10}) {
            auto p = base;
            p.tol = tol;
            CHECK(std::fabs(lambda_tilde(p) / ref - 1) < 1e-6);
        }
    }
}

TEST_CASE("start refinement is a small correction") {
    auto p = tight(canonical_params());
    SingularOptions plain, refined;
    plain.t0 = refined.t0 = -10.0;
    refined.refine = true;
    auto d = refined_start(p, refined);
    CHECK(std::fabs(d.first) > 0.0);
    CHECK(std::fabs(d.first) < 1e-6);
    auto a = singular_orbit(p, plain).at(0.0), b = singular_orbit(p, refined).at(0.0);
    CHECK(std::fabs(a.x - b.x) < 1e-6);
    CHECK(std::fabs(a.y - b.y) < 1e-6);
    // the sweep's leading term: x-deviation ~ -(2I - A0)^-1 (x_hat mu e^(2t), 0)
    const double e = std::exp(2 * refined.t0);
    auto A = linearization(8.0, 1.0, p.rho_minus(), p);
    const double m00 = 2 - A[0][0], m01 = -A[0][1], m10 = -A[1][0], m11 = 2 - A[1][1];
    const double det = m00 * m11 - m01 * m10;
    const double lead = m11 * (-8.0 * 2.0 * e) / det;
    CHECK(d.first == doctest::Approx(lead).epsilon(1e-2));
}

TEST_CASE("no singular solution at or below the lower critical exponent") {
    auto p = canonical_params();
    p.q = 1.2;
    CHECK_THROWS_AS(lambda_tilde(p), RegimeError);
    p.q = Exponent::parse("13/9");
    CHECK_THROWS_AS(singular_orbit(p), RegimeError);
}

TEST_CASE("singular profile near the origin and at the boundary") {
    for (auto base : {canonical_params(), secondary_params()}) {
        auto p = tight(base);
        auto sol = singular_profile(p, 1e-5);
        const double g = p.gamma();
        auto scaled = [&](double r) { return std::pow(r, 1.0 / g) * -sol.profile.value(r); };
        CHECK(std::fabs(scaled(1e-4) / scaled(1e-5) - 1) < 1e-2);
        CHECK(std::fabs(scaled(1e-5) / sol.asymptotic_constant - 1) < 1e-6);
        CHECK(sol.profile.value(1.0) == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(integral_residual(sol.profile).max_relative < 1e-6);
        for (std::size_t i = 1; i < sol.profile.size(); ++i) CHECK(sol.profile.w()[i] > sol.profile.w()[i - 1]);
    }
}

TEST_CASE("closed-form power-weight singular solution") {
    for (auto base : {canonical_params(), secondary_params()}) {
        auto p = tight(base);
        const double lt = lambda_tilde(p);
        auto U = emden_singular_U(p, lt, 0.1, 10.0);
        CHECK(integral_residual(U).max_relative < 1e-9);
        // self-similar: invariant under the scaling
        auto V = rescale(U, 7.5);
        for (double r : {0.9, 2.0, 9.0}) CHECK(V.value(r) == doctest::Approx(U.value(r)).epsilon(1e-13));
    }
}

TEST_CASE("scaling operator composes") {
    auto p = tight(canonical_params());
    auto U = emden_regular_U(p, lambda_tilde(p), 50.0);
    auto once = rescale(rescale(U, 3.0), 5.0);
    auto both = rescale(U, 15.0);
    for (double r : {0.5, 2.0, 30.0}) CHECK(once.value(r) == doctest::Approx(both.value(r)).epsilon(1e-13));
    auto same = rescale(U, 1.0);
    CHECK(same.value(3.0) == U.value(3.0));
    CHECK(both.meta().alpha == doctest::Approx(1.0 / 15.0));
    CHECK_THROWS_AS(resample(U, {100.0, 200.0}), DomainError);
    auto part = resample(U, {0.5, 1.0, 100.0});
    CHECK(part.size() == 2);
}

TEST_CASE("regular power-weight orbit winds into the interior point") {
    for (auto base : {canonical_params(), secondary_params()}) {
        auto p = tight(base);
        const double lt = lambda_tilde(p);
        auto U = emden_regular_U(p, lt, 1e3);
        ProblemParams pw = p;
        pw.weight = WeightKind::power;
        auto traj = pushforward(U, pw);
        std::vector<PhaseEvent> cross;
        for (auto& e : traj.events)
            if (e.kind == EventKind::y_hat_crossing) cross.push_back(e);
        REQUIRE(cross.size() >= 4);
        const double xh = interior_point(p).first;
        CHECK(cross[1].x < cross[3].x);
        CHECK(cross[3].x < xh);
        CHECK(xh < cross[2].x);
        CHECK(cross[2].x < cross[0].x);
    }
}
