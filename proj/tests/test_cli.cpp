#include "doctest.h"

#include "khm/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;
using khm::io::json;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("khm_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    const auto log = scratch() / "stdout.txt";
    const std::string cmd = std::string(KHM_CLI) + " " + args + " > " + log.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = khm::io::read_file(log.string());
    return r;
}

json cli_json(const std::string& args) {
    auto r = cli(args);
    REQUIRE(r.code == 0);
    return json::parse(r.out);
}

std::string dir(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("exponents") {
    auto j = cli_json("exponents --n 11 --k 1 --mu 2 --q 3");
    CHECK(j["q_star"].get<double>() == doctest::Approx(13.0 / 9.0).epsilon(1e-15));
    CHECK(j["q_jl"].get<double>() == doctest::Approx(6.9220246).epsilon(1e-7));
    CHECK(j["regime"] == "spiral-window");
    CHECK(j["bound"].get<double>() == doctest::Approx(88.0 / 27.0).epsilon(1e-14));
    CHECK(cli("exponents --n 3 --k 2").code == 2);
    CHECK(cli_json("exponents --n 10 --k 1 --mu 2 --q 3")["q_jl"] == "inf");
    CHECK(cli("exponents --q banana").code == 2);
    CHECK(cli("--bogus exponents").code == 2);
}

TEST_CASE("singular outputs are deterministic") {
    auto a = cli_json("singular --out " + dir("s1"));
    CHECK(std::fabs(a["lambda_tilde"].get<double>() - 11.38358051630904) < 1e-9);
    REQUIRE(fs::exists(dir("s1") + "/singular_profile.csv"));
    cli_json("singular --out " + dir("s2"));
    for (const char* f : {"/singular.json", "/singular_profile.csv"})
        CHECK(khm::io::read_file(dir("s1") + f) == khm::io::read_file(dir("s2") + f));
    CHECK(cli("singular --q 1.2 --out " + dir("s3")).code == 3);
    CHECK(!fs::exists(dir("s3") + "/singular_profile.csv"));
}

TEST_CASE("sweep then count at the singular parameter") {
    auto s = cli_json("sweep --samples 200 --out " + dir("sw"));
    CHECK(s["crossings"].size() >= 3);
    const std::string lt = khm::io::format_double(s["lambda_tilde"].get<double>());
    auto c = cli_json("count --samples 200 --lambda " + lt + " --out " + dir("sw"));
    CHECK(c["count"].get<int>() >= 3);
    std::ifstream csv(dir("sw") + "/sweep.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "alpha,w1,Lambda");
}

TEST_CASE("intersections and maximal solution") {
    CHECK(cli_json("intersect --alpha 10000 --out " + dir("in"))["count"].get<int>() >= 5);
    auto m = cli_json("maximal --lambda-frac 0.5 --out " + dir("mx"));
    CHECK(m["status"] == "converged");
    CHECK(m["residual"].get<double>() < 1e-6);
    CHECK(fs::exists(dir("mx") + "/maximal.csv"));
    CHECK(cli("maximal --out " + dir("mx2")).code == 2);
}

TEST_CASE("config file with flag precedence") {
    const auto cfg = dir("cfg.json");
    khm::io::write_file(cfg, R"({"q": 1.2, "samples": 12, "alpha_max": 50})");
    CHECK(cli("--config " + cfg + " singular --out " + dir("c1")).code == 3);
    auto j = cli_json("--config " + cfg + " --q 3 sweep --out " + dir("c2"));
    CHECK(j["samples"].get<int>() == 12);
    CHECK(j["params"]["q"] == "3");
    khm::io::write_file(cfg, "[1, 2]");
    CHECK(cli("--config " + cfg + " exponents").code == 2);
    CHECK(cli("--config " + dir("missing.json") + " exponents").code == 2);
}

TEST_CASE("phase outputs") {
    auto j = cli_json("phase --singular --out " + dir("ph"));
    CHECK(j["source"] == "singular");
    std::ifstream csv(dir("ph") + "/phase.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,x,y");
    CHECK(cli_json("phase --portrait minus --grid 3 --out " + dir("pp"))["orbits"].get<int>() == 9);
}
