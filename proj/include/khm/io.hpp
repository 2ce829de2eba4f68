#pragma once

#include "khm/bifurcation.hpp"
#include "khm/params.hpp"
#include "khm/phase.hpp"
#include "khm/radial.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace khm::io {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& s);
// Finite values as numbers, the rest as the strings above.
json number(double v);
double number_from(const json& j);

json params_json(const ProblemParams& p);
// Fields absent from j keep their values in base.
ProblemParams params_from_json(const json& j, ProblemParams base = {});

json meta_json(const ProfileMeta& m);
std::string profile_csv(const RadialProfile& prof);
json profile_json(const RadialProfile& prof);

struct ProfileColumns {
    std::vector<double> r, w, dw;
};
ProfileColumns read_profile_csv(const std::string& text);

std::string trajectory_csv(const PhaseTrajectory& traj);
json events_json(const std::vector<PhaseEvent>& events);

std::string sweep_csv(const BifurcationCurve& curve);
json curve_json(const BifurcationCurve& curve);
json count_json(const SolutionCount& count);

// Writes through a temporary file in the same directory, then renames.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace khm::io
