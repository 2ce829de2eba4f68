#include "doctest.h"

#include "khm/ode.hpp"

#include <cmath>

using namespace khm;

namespace {

void oscillator(double, const ode::State<2>& y, ode::State<2>& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
}

}  // namespace

TEST_CASE("adaptive run reproduces the harmonic oscillator") {
    ode::Options<2> opt;
    opt.rtol = 1e-12;
    opt.atol = ode::Options<2>::filled(1e-14);
    ode::Stats st;
    auto sol = ode::integrate<2>(oscillator, 0.0, {1.0, 0.0}, 20.0, opt, &st);
    auto y = sol.node_y(sol.size());
    CHECK(std::fabs(y[0] - std::cos(20.0)) < 1e-10);
    CHECK(std::fabs(y[1] + std::sin(20.0)) < 1e-10);
    CHECK(st.accepted > 10);
    // dense output between the nodes
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = 0.02 * i;
        auto z = sol(t);
        worst = std::max(worst, std::fabs(z[0] - std::cos(t)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("fixed steps converge at eighth order") {
    auto err_for = [](int steps) {
        ode::Options<2> opt;
        opt.fixed_step = 10.0 / steps;
        auto sol = ode::integrate<2>(oscillator, 0.0, {1.0, 0.0}, 10.0, opt);
        return std::fabs(sol.node_y(sol.size())[0] - std::cos(10.0));
    };
    const double e1 = err_for(20), e2 = err_for(40);
    const double order = std::log2(e1 / e2);
    CHECK(order > 7.5);
    CHECK(order < 8.5);
}

TEST_CASE("backward integration and stop hook") {
    ode::Options<1> opt;
    opt.rtol = 1e-12;
    opt.atol = ode::Options<1>::filled(1e-14);
    auto decay = [](double, const ode::State<1>& y, ode::State<1>& dy) { dy[0] = -y[0]; };
    auto sol = ode::integrate<1>(decay, 2.0, {1.0}, 0.0, opt);
    CHECK(sol.node_y(sol.size())[0] == doctest::Approx(std::exp(2.0)).epsilon(1e-11));
    CHECK(sol(1.0)[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-11));

    opt.stop = [](double, const ode::State<1>& y) { return y[0] < 0.5; };
    ode::Stats st;
    auto part = ode::integrate<1>(decay, 0.0, {1.0}, 10.0, opt, &st);
    CHECK(st.stopped);
    const double tz = ode::bisect([&](double t) { return part(t)[0] - 0.5; }, part.t_begin(), part.t_end(), 1e-13);
    CHECK(tz == doctest::Approx(std::log(2.0)).epsilon(1e-11));
}

TEST_CASE("out of range evaluation is a domain error") {
    ode::Options<2> opt;
    auto sol = ode::integrate<2>(oscillator, 0.0, {1.0, 0.0}, 1.0, opt);
    CHECK_THROWS_AS(sol(1.5), DomainError);
}

TEST_CASE("finite-time blowup surfaces as a numerical error") {
    ode::Options<1> opt;
    auto blow = [](double, const ode::State<1>& y, ode::State<1>& dy) { dy[0] = y[0] * y[0]; };
    CHECK_THROWS_AS(ode::integrate<1>(blow, 0.0, {1.0}, 2.0, opt), NumericalError);
}
