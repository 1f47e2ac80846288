#pragma once

#include <string>

#include <json.hpp>

#include "setcbf/approx.hpp"
#include "setcbf/model.hpp"
#include "setcbf/sets.hpp"

namespace setcbf {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

// {"rep": "hpoly"|"vpoly"|"zonotope"|"box", ...}
nlohmann::json set_to_json(const ConvexSet& s);
ConvexSet set_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const LtiModel& m);
// accepts discrete {"A", "B"} or continuous {"Ac", "Bc", "dt"} forms
LtiModel model_from_json(const nlohmann::json& j);

nlohmann::json approx_to_json(const ApproxCbf& a);
ApproxCbf approx_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace setcbf
