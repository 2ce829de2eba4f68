// Command-line driver: exponents, singular, sweep, count, intersect, phase, maximal.
#include "khm/bifurcation.hpp"
#include "khm/errors.hpp"
#include "khm/io.hpp"
#include "khm/params.hpp"
#include "khm/phase.hpp"
#include "khm/radial.hpp"
#include "khm/singular.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

using namespace khm;
using io::json;

namespace {

enum Exit { ok = 0, validation = 2, regime = 3, numerical = 4 };

// Options that can also come from the JSON config (key = flag name with '_' for '-').
class Binder {
public:
    json cfg = json::object();

    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& flag, T& var, const std::string& help) {
        auto* opt = app->add_option(flag, var, help);
        if constexpr (!is_optional<T>::value) opt->capture_default_str();
        std::string key = flag.substr(2);
        for (auto& c : key)
            if (c == '-') c = '_';
        merges_.push_back([this, opt, key, &var] {
            if (opt->count() == 0 && cfg.contains(key)) assign(var, cfg[key]);
        });
        return opt;
    }
    CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
        auto* opt = app->add_flag(name, var, help);
        std::string key = name.substr(2);
        for (auto& c : key)
            if (c == '-') c = '_';
        merges_.push_back([this, opt, key, &var] {
            if (opt->count() == 0 && cfg.contains(key)) var = cfg[key].get<bool>();
        });
        return opt;
    }
    void merge() {
        for (auto& m : merges_) m();
    }

private:
    template <class T>
    struct is_optional : std::false_type {};
    template <class T>
    struct is_optional<std::optional<T>> : std::true_type {};

    static void assign(double& v, const json& j) { v = io::number_from(j); }
    static void assign(int& v, const json& j) { v = j.get<int>(); }
    static void assign(unsigned& v, const json& j) { v = j.get<unsigned>(); }
    static void assign(std::size_t& v, const json& j) { v = j.get<std::size_t>(); }
    static void assign(std::string& v, const json& j) { v = j.is_string() ? j.get<std::string>() : j.dump(); }
    static void assign(std::optional<double>& v, const json& j) { v = io::number_from(j); }

    std::vector<std::function<void()>> merges_;
};

struct Globals {
    int n = 11, k = 1;
    std::string q = "3", mu = "2", weight = "matukuma";
    double tol = 1e-10;
    std::string out = ".";
    std::string config;

    ProblemParams params() const {
        ProblemParams p;
        p.n = n;
        p.k = k;
        p.q = Exponent::parse(q);
        p.mu = Exponent::parse(mu);
        p.weight = weight_from_string(weight);
        p.tol = tol;
        p.validate();
        return p;
    }
    std::string path(const std::string& name) const { return (std::filesystem::path(out) / name).string(); }
};

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

// lambda from an absolute value or a multiple of the reference parameter
double resolve_lambda(const std::optional<double>& lambda, const std::optional<double>& frac, const Shooter* s) {
    if (lambda && frac) throw ParameterError("give --lambda or --lambda-frac, not both");
    if (lambda) return *lambda;
    if (!frac) throw ParameterError("require --lambda or --lambda-frac");
    if (!s || !s->lambda_tilde()) throw RegimeError("--lambda-frac needs q > q* (a singular parameter)");
    return *frac * s->lambda_ref();
}

struct SweepArgs {
    double alpha_min = 1.0, alpha_max = 1e4;
    std::size_t samples = 400;
    std::string route = "phase";
    unsigned threads = 0;
    bool no_refine = false;

    void bind(Binder& b, CLI::App* cmd) {
        b.add(cmd, "--alpha-min", alpha_min, "smallest central value");
        b.add(cmd, "--alpha-max", alpha_max, "largest central value");
        b.add(cmd, "--samples", samples, "log-uniform samples");
        b.add(cmd, "--route", route, "phase or profile");
        b.add(cmd, "--threads", threads, "worker threads (0: all cores)");
        b.flag(cmd, "--no-refine", no_refine, "skip extremum and crossing refinement");
    }
    SweepOptions options() const {
        SweepOptions o;
        o.alpha_min = alpha_min;
        o.alpha_max = alpha_max;
        o.samples = samples;
        o.route = route_from_string(route);
        o.threads = threads;
        o.refine = !no_refine;
        return o;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Radial solutions, singular solutions and bifurcation diagrams for weighted k-Hessian problems"};
    app.require_subcommand(1);
    app.fallthrough();
    Binder b;
    Globals g;
    b.add(&app, "--n", g.n, "dimension");
    b.add(&app, "--k", g.k, "Hessian order");
    b.add(&app, "--q", g.q, "exponent (decimal or p/q)");
    b.add(&app, "--mu", g.mu, "weight exponent (decimal or p/q)");
    b.add(&app, "--weight", g.weight, "matukuma or power");
    b.add(&app, "--tol", g.tol, "solver tolerance");
    b.add(&app, "--out", g.out, "output directory");
    app.add_option("--config", g.config, "JSON file with option values; flags take precedence");

    auto* c_exp = app.add_subcommand("exponents", "critical exponents, regime and the lower bound for the extremal parameter");

    auto* c_sing = app.add_subcommand("singular", "singular solution and its parameter");
    double t0 = -14.0, r_min = 1e-6;
    bool refine = false;
    b.add(c_sing, "--t0", t0, "log-radius where the orbit leaves the interior point");
    b.add(c_sing, "--r-min", r_min, "smallest radius of the written profile");
    b.flag(c_sing, "--refine", refine, "correct the start by fixed-point sweeps");

    auto* c_sweep = app.add_subcommand("sweep", "bifurcation diagram over the central value");
    SweepArgs sw;
    sw.bind(b, c_sweep);

    auto* c_count = app.add_subcommand("count", "solutions of the Dirichlet problem at one parameter");
    SweepArgs sw_count;
    sw_count.bind(b, c_count);
    std::optional<double> lambda, lambda_frac;
    b.add(c_count, "--lambda", lambda, "parameter value");
    b.add(c_count, "--lambda-frac", lambda_frac, "parameter as a multiple of the singular parameter");

    auto* c_int = app.add_subcommand("intersect", "sign changes of singular minus regular profile");
    double alpha = 1e4, r_max = 1.0, r_lo = 0.0;
    b.add(c_int, "--alpha", alpha, "central value of the regular profile");
    b.add(c_int, "--r-max", r_max, "right end of the interval");
    b.add(c_int, "--r-lo", r_lo, "left end of the interval (0: origin)");

    auto* c_phase = app.add_subcommand("phase", "phase-plane orbit of a regular or singular profile, or a portrait");
    double ph_alpha = 1.0, ph_r_max = 1.0;
    std::optional<double> ph_lambda, ph_frac;
    bool ph_singular = false;
    std::string portrait;
    std::size_t grid = 6;
    b.add(c_phase, "--alpha", ph_alpha, "central value of the regular profile");
    b.add(c_phase, "--r-max", ph_r_max, "radius where the profile ends");
    b.add(c_phase, "--lambda", ph_lambda, "parameter value (default: singular parameter)");
    b.add(c_phase, "--lambda-frac", ph_frac, "parameter as a multiple of the singular parameter");
    b.flag(c_phase, "--singular", ph_singular, "orbit of the singular solution instead");
    b.add(c_phase, "--portrait", portrait, "minus or plus: short orbits of that autonomous limit");
    b.add(c_phase, "--grid", grid, "portrait starting points per axis");

    auto* c_max = app.add_subcommand("maximal", "maximal solution by monotone iteration");
    std::optional<double> mx_lambda, mx_frac;
    std::size_t intervals = 8192, iterations = 20000;
    b.add(c_max, "--lambda", mx_lambda, "parameter value");
    b.add(c_max, "--lambda-frac", mx_frac, "parameter as a multiple of the singular parameter");
    b.add(c_max, "--intervals", intervals, "grid intervals on [0, 1]");
    b.add(c_max, "--max-iterations", iterations, "iteration cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    }
    if (!g.config.empty()) {
        try {
            b.cfg = json::parse(io::read_file(g.config));
        } catch (const json::exception& e) {
            throw ParameterError(std::string("bad config: ") + e.what());
        }
        if (!b.cfg.is_object()) throw ParameterError("config must be a JSON object");
    }
    b.merge();
    const ProblemParams p = g.params();

    if (c_exp->parsed()) {
        json j;
        j["n"] = p.n;
        j["k"] = p.k;
        j["q"] = p.q.str();
        j["mu"] = p.mu.str();
        const Rational c = c_nk(p.n, p.k);
        j["c_nk"] = boost::rational_cast<double>(c);
        const Exponent qs = q_star(p.n, p.k, p.sigma());
        j["q_star"] = io::number(qs.value());
        if (qs.exact()) j["q_star_exact"] = qs.str();
        j["q_jl"] = io::number(q_jl(p.n, p.k, p.sigma().value()));
        j["regime"] = to_string(classify_regime(p));
        j["bound"] = io::number(lambda_star_lower_bound(p));
        if (app.get_option("--out")->count() || b.cfg.contains("out")) io::write_file(g.path("exponents.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }

    if (c_sing->parsed()) {
        SingularOptions so;
        so.t0 = t0;
        so.refine = refine;
        const auto sol = singular_profile(p, r_min, so);
        json j;
        j["params"] = io::params_json(p);
        j["lambda_tilde"] = io::number(sol.lambda_tilde);
        j["t0"] = io::number(so.t0);
        j["tol"] = io::number(p.tol);
        j["asymptotic_constant"] = io::number(sol.asymptotic_constant);
        j["refine"] = refine;
        const std::string csv = io::profile_csv(sol.profile);
        io::write_file(g.path("singular_profile.csv"), csv);
        io::write_file(g.path("singular.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }

    if (c_sweep->parsed()) {
        const auto curve = sweep(p, sw.options());
        const json j = io::curve_json(curve);
        const std::string csv = io::sweep_csv(curve);
        io::write_file(g.path("sweep.csv"), csv);
        io::write_file(g.path("sweep.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }

    if (c_count->parsed()) {
        const Shooter s(p);
        const double lam = resolve_lambda(lambda, lambda_frac, &s);
        const auto curve = sweep(s, sw_count.options());
        const json j = io::count_json(count_solutions(s, lam, curve));
        io::write_file(g.path("count.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }

    if (c_int->parsed()) {
        const Shooter s(p);
        const auto rep = phase_intersections(s, alpha, r_max, r_lo);
        json j;
        j["alpha"] = io::number(alpha);
        j["r_lo"] = io::number(r_lo);
        j["r_max"] = io::number(r_max);
        j["lambda_tilde"] = io::number(s.lambda_ref());
        j["count"] = rep.count;
        json zs = json::array();
        for (double z : rep.zeros) zs.push_back(io::number(z));
        j["zeros"] = std::move(zs);
        io::write_file(g.path("intersect.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }

    if (c_phase->parsed()) {
        if (!portrait.empty()) {
            if (portrait != "minus" && portrait != "plus") throw ParameterError("--portrait must be minus or plus");
            PortraitOptions po;
            po.grid = grid;
            const auto orbits = phase_portrait(p, portrait == "minus" ? Limit::minus : Limit::plus, po);
            std::string csv = "orbit,t,x,y\n";
            for (std::size_t i = 0; i < orbits.size(); ++i)
                for (const auto& st : orbits[i].states())
                    csv += std::to_string(i) + ',' + io::format_double(st.t) + ',' + io::format_double(st.x) + ',' +
                           io::format_double(st.y) + '\n';
            io::write_file(g.path("portrait.csv"), csv);
            json j;
            j["limit"] = portrait;
            j["orbits"] = orbits.size();
            json pts = json::array();
            for (const auto& cp : critical_points(p, portrait == "minus" ? Limit::minus : Limit::plus))
                pts.push_back({{"label", cp.label}, {"x", io::number(cp.x)}, {"y", io::number(cp.y)}, {"kind", to_string(cp.kind)}});
            j["critical_points"] = std::move(pts);
            emit(j);
            return ok;
        }
        PhaseTrajectory traj;
        json j;
        if (ph_singular) {
            traj = singular_orbit(p);
            j["source"] = "singular";
        } else {
            std::optional<Shooter> s;
            if (!ph_lambda) s.emplace(p);
            const double lam = ph_lambda || ph_frac ? resolve_lambda(ph_lambda, ph_frac, s ? &*s : nullptr)
                                                    : s->lambda_ref();
            ProblemParams pl = p;
            pl.lambda = lam;
            const auto prof = integrate_ivp(pl, ph_alpha, ph_r_max);
            traj = pushforward(prof, pl);
            j["source"] = "regular";
            j["alpha"] = io::number(ph_alpha);
            j["lambda"] = io::number(lam);
        }
        traj.events = find_events(traj, p);
        j["events"] = io::events_json(traj.events);
        const std::string csv = io::trajectory_csv(traj);
        io::write_file(g.path("phase.csv"), csv);
        io::write_file(g.path("phase_events.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }

    if (c_max->parsed()) {
        std::optional<Shooter> s;
        if (mx_frac) s.emplace(p);
        const double lam = resolve_lambda(mx_lambda, mx_frac, s ? &*s : nullptr);
        MaximalOptions mo;
        mo.intervals = intervals;
        mo.max_iterations = iterations;
        const auto res = maximal_solution(p, lam, mo);
        json j;
        j["params"] = io::params_json(p);
        j["lambda"] = io::number(lam);
        j["status"] = to_string(res.status);
        j["iterations"] = res.iterations;
        j["last_increment"] = io::number(res.last_increment);
        j["monotone"] = res.monotone;
        if (res.profile) {
            const auto rep = integral_residual(*res.profile);
            j["u0"] = io::number(1.0 - res.profile->meta().alpha);
            j["residual"] = io::number(rep.max_relative);
            io::write_file(g.path("maximal.csv"), io::profile_csv(*res.profile));
        }
        io::write_file(g.path("maximal.json"), j.dump(2) + "\n");
        emit(j);
        return ok;
    }
    return validation;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const RegimeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return regime;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical;
    }
}
