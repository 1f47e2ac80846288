#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setcbf/cbf.hpp"
#include "setcbf/filter.hpp"
#include "setcbf/invariance.hpp"
#include "setcbf/model.hpp"
#include "setcbf/predictive.hpp"
#include "setcbf/rng.hpp"
#include "setcbf/stochastic.hpp"

namespace setcbf {

struct UdesPolicy {
    enum class Kind { Constant, Random, File };
    Kind kind = Kind::Random;
    Eigen::VectorXd constant;
    std::string path;
};

struct SetSource {
    enum class Kind { ComputeHPoly, LoadSetFile, Predictive };
    Kind kind = Kind::ComputeHPoly;
    double tol = 1e-9;
    int max_iter = 100;
    std::string path;        // load-set-file
    int verify_samples = 500;
    int horizon = 10;        // predictive
    Eigen::MatrixXd Q, R_lqr;
    std::optional<ConvexSet> W_pred;  // tube disturbance for the predictive build
};

struct NuPolicy {
    enum class Kind { None, Contract, Fixed };
    Kind kind = Kind::None;
    double value = 1.0;  // Fixed
};

struct StochasticScenario {
    Eigen::MatrixXd K;
    DisturbanceSpec w;
    double px = 0.9;
    double pu = 0.9;
};

struct Scenario {
    std::string name;
    LtiModel model;
    ConvexSet X;
    ConvexSet U;
    SetSource source;
    std::optional<ConvexSet> W;
    NuPolicy nu_policy;
    ClassKappaE alpha = ClassKappaE::linear(1.0);
    UdesPolicy u_des;
    Eigen::VectorXd x0;
    int steps = 200;
    std::uint64_t seed = 1;
    double rho = std::numeric_limits<double>::quiet_NaN();  // NaN: per-mode default
    HMode h_mode = HMode::Exact;
    bool fallback = false;
    std::optional<StochasticScenario> stochastic;
};

struct Trajectory {
    int nx = 0;
    int nu = 0;
    std::vector<int> k;
    std::vector<Eigen::VectorXd> x;
    std::vector<Eigen::VectorXd> u_des;
    std::vector<Eigen::VectorXd> u;
    std::vector<double> h;
    std::vector<double> gamma_plus;
    std::vector<char> intervened;
    std::vector<int> iters;
    std::vector<double> solve_us;
    bool aborted = false;
    int abort_step = -1;
    std::string error;
};

struct ResolvedSet {
    ConvexSet omega_tilde;  // the (robust) invariant set before contraction
    double nu = 1.0;
    ConvexSet safe_set;     // scaling set of the CBF (nu * omega_tilde)
    std::string report;
};

// Resolve the scenario's safe-set source (compute, load-and-verify, or predictive
// parameters; the predictive path is resolved in prepare()).
ResolvedSet resolve_safe_set(const Scenario& s);

// Everything derivable once per scenario, so repeated seeded rollouts are cheap.
struct ScenarioContext {
    Scenario scenario;
    std::optional<FilterSpec> nominal;           // H-rep/V-rep/zonotope filter
    std::optional<PredictiveCbf> predictive;
    std::optional<StochasticFilterSpec> stochastic;
    double nu = 1.0;
    std::string report;
};

ScenarioContext prepare(const Scenario& s);

Trajectory run(const ScenarioContext& ctx);
Trajectory run(const Scenario& s);

std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(const std::string& name);

std::string trajectory_csv(const Trajectory& t);

Scenario scenario_from_json(const nlohmann::json& j);

// seeded desired-input generator (uniform over the bounding box of U,
// rejection-sampled into U)
Eigen::VectorXd random_u_des(const ConvexSet& U, Rng& rng);

}  // namespace setcbf
