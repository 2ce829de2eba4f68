#include "doctest.h"

#include "khm/errors.hpp"
#include "khm/io.hpp"
#include "khm/singular.hpp"

#include <cmath>
#include <cstring>
#include <limits>

using namespace khm;

TEST_CASE("number formatting") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1e-300) == "1e-300");
    CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(std::isinf(io::parse_double("inf")));
    CHECK(io::number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::number_from(io::json("inf")) == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(io::parse_double("1.5x"), ParameterError);
    for (double v : {M_PI, 1.0 / 3.0, -2.5e-17, 6.02214076e23, std::nextafter(1.0, 2.0)})
        CHECK(io::parse_double(io::format_double(v)) == v);
}

TEST_CASE("profile CSV round trip is exact") {
    ProblemParams p = canonical_params();
    p.lambda = 7.0;
    const auto prof = integrate_ivp(p, 3.0, 1.0);
    const auto text = io::profile_csv(prof);
    CHECK(text.rfind("r,w,dw\n", 0) == 0);
    const auto cols = io::read_profile_csv(text);
    REQUIRE(cols.r.size() == prof.size());
    CHECK(std::memcmp(cols.r.data(), prof.r().data(), sizeof(double) * prof.size()) == 0);
    CHECK(std::memcmp(cols.w.data(), prof.w().data(), sizeof(double) * prof.size()) == 0);
    CHECK(std::memcmp(cols.dw.data(), prof.dw().data(), sizeof(double) * prof.size()) == 0);
    CHECK_THROWS_AS(io::read_profile_csv("x,y\n1,2\n"), ParameterError);
}

TEST_CASE("profile JSON carries the metadata block") {
    const auto sing = singular_profile(canonical_params(), 1e-3);
    const auto j = io::profile_json(sing.profile);
    for (const char* key : {"n", "k", "q", "mu", "lambda", "alpha", "weight", "tol"}) CHECK(j["metadata"].contains(key));
    CHECK(j["metadata"]["alpha"] == "inf");
    CHECK(j["metadata"]["weight"] == "matukuma");
    CHECK(j["r"].size() == sing.profile.size());
}

TEST_CASE("parameters through JSON") {
    ProblemParams p = secondary_params();
    p.q = Exponent::parse("13/3");
    p.lambda = 2.5;
    const auto back = io::params_from_json(io::params_json(p));
    CHECK(back.n == 13);
    CHECK(back.k == 2);
    REQUIRE(back.q.exact());
    CHECK(*back.q.exact() == Rational(13, 3));
    CHECK(back.lambda == 2.5);
    const auto partial = io::params_from_json(io::json::parse(R"({"q": 5, "mu": "5/2"})"));
    CHECK(partial.n == 11);
    CHECK(partial.qv() == 5.0);
    CHECK(partial.muv() == 2.5);
    CHECK_THROWS_AS(io::params_from_json(io::json::parse(R"({"n": "eleven"})")), ParameterError);
}

TEST_CASE("sweep output columns") {
    SweepOptions o;
    o.alpha_max = 100.0;
    o.samples = 10;
    const auto c = sweep(canonical_params(), o);
    const auto csv = io::sweep_csv(c);
    CHECK(csv.rfind("alpha,w1,Lambda\n", 0) == 0);
    const auto j = io::curve_json(c);
    CHECK(j["crossings"].is_array());
    CHECK(j["route"] == "phase");
}
