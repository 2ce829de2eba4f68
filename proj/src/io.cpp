#include "khm/io.hpp"

#include "khm/errors.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace khm::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParameterError("not a number: '" + s + "'");
    return v;
}

json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

double number_from(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_double(j.get<std::string>());
    throw ParameterError("expected a number, got " + j.dump());
}

json params_json(const ProblemParams& p) {
    json j;
    j["n"] = p.n;
    j["k"] = p.k;
    j["q"] = p.q.str();
    j["mu"] = p.mu.str();
    j["weight"] = to_string(p.weight);
    j["tol"] = p.tol;
    if (p.lambda) j["lambda"] = number(*p.lambda);
    return j;
}

namespace {

Exponent exponent_from(const json& j) {
    if (j.is_string()) return Exponent::parse(j.get<std::string>());
    if (j.is_number_integer()) return Exponent(static_cast<double>(j.get<long long>()));
    if (j.is_number()) return Exponent(j.get<double>());
    throw ParameterError("expected an exponent, got " + j.dump());
}

int int_from(const json& j, const char* key) {
    if (!j.is_number_integer()) throw ParameterError(std::string("expected an integer for ") + key);
    return j.get<int>();
}

}  // namespace

ProblemParams params_from_json(const json& j, ProblemParams base) {
    if (!j.is_object()) throw ParameterError("configuration must be a JSON object");
    if (j.contains("n")) base.n = int_from(j["n"], "n");
    if (j.contains("k")) base.k = int_from(j["k"], "k");
    if (j.contains("q")) base.q = exponent_from(j["q"]);
    if (j.contains("mu")) base.mu = exponent_from(j["mu"]);
    if (j.contains("weight")) base.weight = weight_from_string(j["weight"].get<std::string>());
    if (j.contains("tol")) base.tol = number_from(j["tol"]);
    if (j.contains("lambda")) base.lambda = number_from(j["lambda"]);
    return base;
}

json meta_json(const ProfileMeta& m) {
    json j;
    j["n"] = m.n;
    j["k"] = m.k;
    j["q"] = number(m.q);
    j["mu"] = number(m.mu);
    j["lambda"] = number(m.lambda);
    j["alpha"] = number(m.alpha);
    j["weight"] = to_string(m.weight);
    j["tol"] = number(m.tol);
    return j;
}

std::string profile_csv(const RadialProfile& prof) {
    std::string out = "r,w,dw\n";
    for (std::size_t i = 0; i < prof.size(); ++i) {
        out += format_double(prof.r()[i]);
        out += ',';
        out += format_double(prof.w()[i]);
        out += ',';
        out += format_double(prof.dw()[i]);
        out += '\n';
    }
    return out;
}

json profile_json(const RadialProfile& prof) {
    json j;
    j["metadata"] = meta_json(prof.meta());
    json r = json::array(), w = json::array(), dw = json::array();
    for (std::size_t i = 0; i < prof.size(); ++i) {
        r.push_back(number(prof.r()[i]));
        w.push_back(number(prof.w()[i]));
        dw.push_back(number(prof.dw()[i]));
    }
    j["r"] = std::move(r);
    j["w"] = std::move(w);
    j["dw"] = std::move(dw);
    if (prof.zero_radius) j["zero_radius"] = number(*prof.zero_radius);
    return j;
}

ProfileColumns read_profile_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "r,w,dw") throw ParameterError("profile CSV must start with 'r,w,dw'");
    ProfileColumns cols;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find(','), b = line.find(',', a + 1);
        if (a == std::string::npos || b == std::string::npos) throw ParameterError("malformed profile row: " + line);
        cols.r.push_back(parse_double(line.substr(0, a)));
        cols.w.push_back(parse_double(line.substr(a + 1, b - a - 1)));
        cols.dw.push_back(parse_double(line.substr(b + 1)));
    }
    return cols;
}

std::string trajectory_csv(const PhaseTrajectory& traj) {
    std::string out = "t,x,y\n";
    for (const auto& s : traj.states()) out += format_double(s.t) + ',' + format_double(s.x) + ',' + format_double(s.y) + '\n';
    return out;
}

json events_json(const std::vector<PhaseEvent>& events) {
    json arr = json::array();
    for (const auto& e : events)
        arr.push_back({{"kind", to_string(e.kind)}, {"t", number(e.t)}, {"x", number(e.x)}, {"y", number(e.y)},
                       {"direction", e.direction}});
    return arr;
}

std::string sweep_csv(const BifurcationCurve& curve) {
    std::string out = "alpha,w1,Lambda\n";
    for (const auto& s : curve.samples) {
        if (s.reached_zero) continue;
        out += format_double(s.alpha) + ',' + format_double(s.w1) + ',' + format_double(s.Lambda) + '\n';
    }
    return out;
}

json curve_json(const BifurcationCurve& curve) {
    json j;
    j["params"] = params_json(curve.params);
    j["route"] = to_string(curve.route);
    j["lambda_ref"] = number(curve.lambda_ref);
    j["lambda_tilde"] = curve.lambda_tilde ? number(*curve.lambda_tilde) : json(nullptr);
    j["noise_floor"] = number(curve.noise_floor);
    j["samples"] = curve.samples.size();
    json cr = json::array();
    for (const auto& c : curve.crossings)
        cr.push_back({{"alpha", number(c.alpha)}, {"direction", c.direction}, {"confirmed", c.confirmed}});
    j["crossings"] = std::move(cr);
    json ex = json::array();
    for (const auto& e : curve.extrema)
        ex.push_back({{"alpha", number(e.alpha)}, {"kind", e.is_max ? "max" : "min"}, {"lambda", number(e.Lambda)},
                      {"delta", number(e.delta)}, {"resolved", e.resolved}});
    j["extrema"] = std::move(ex);
    j["lambda_star_estimate"] = number(estimate_lambda_star(curve));
    return j;
}

json count_json(const SolutionCount& count) {
    json j;
    j["lambda"] = number(count.lambda);
    j["count"] = count.count;
    json roots = json::array();
    for (const auto& r : count.roots)
        roots.push_back({{"alpha", number(r.alpha)}, {"u0", number(r.u0)}, {"boundary_error", number(r.boundary_error)},
                         {"residual", number(r.residual)}, {"validated", r.validated}});
    j["roots"] = std::move(roots);
    json unc = json::array();
    for (double a : count.uncertain) unc.push_back(number(a));
    j["uncertain"] = std::move(unc);
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace khm::io
