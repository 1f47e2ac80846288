#pragma once

#include <optional>
#include <vector>

#include "setcbf/cbf.hpp"
#include "setcbf/filter.hpp"
#include "setcbf/model.hpp"
#include "setcbf/sets.hpp"

namespace setcbf {

// Infinite-horizon discrete LQR gain (u = K x) by Riccati iteration.
Eigen::MatrixXd dlqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

struct PredictiveSafeSet {
    LtiModel model;
    int N = 0;
    std::vector<HPolytope> X_stage;  // X_0 .. X_{N-1}
    std::vector<HPolytope> U_stage;  // U_0 .. U_{N-1}
    HPolytope X_f;                   // robust positively invariant terminal set
    Eigen::MatrixXd K_t;
    std::optional<ConvexSet> W;
};

// Iterative row-offset tightening along the horizon plus the maximal robust PI
// terminal set of the closed loop x+ = (A + B K_t) x + w.
PredictiveSafeSet build_tightening(const LtiModel& model, const ConvexSet& X, const ConvexSet& U,
                                   const std::optional<ConvexSet>& W, const Eigen::MatrixXd& K_t,
                                   int N);

struct PredictiveCbf {
    PredictiveSafeSet safe_set;
    ClassKappaE alpha;
};

struct PredictiveEval {
    double gamma = 0.0;
    Eigen::VectorXd u0;  // first input of the minimizing trajectory
};

PredictiveEval eval_gamma_predictive(const PredictiveCbf& p, const Eigen::VectorXd& x);

// Minimal gamma making the scaled-constraint horizon program feasible from x.
double gamma_predictive(const PredictiveCbf& p, const Eigen::VectorXd& x);

FilterResult step_predictive(const PredictiveCbf& p, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u_des, const Eigen::MatrixXd& R, double rho);

// Rollout context mirroring SafetyFilter (warm starts, optional carryover h).
class PredictiveFilter {
  public:
    PredictiveFilter(PredictiveCbf cbf, Eigen::MatrixXd R, double rho,
                     HMode h_mode = HMode::Exact);

    FilterResult step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_des);

    void reset();

    const PredictiveCbf& cbf() const { return cbf_; }

  private:
    PredictiveCbf cbf_;
    Eigen::MatrixXd R_;
    double rho_;
    HMode h_mode_;
    std::optional<double> carry_gamma_;
    Eigen::VectorXd warm_z_, warm_y_;
};

}  // namespace setcbf
