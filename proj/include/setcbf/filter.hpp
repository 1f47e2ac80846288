#pragma once

#include <optional>

#include "setcbf/cbf.hpp"
#include "setcbf/model.hpp"
#include "setcbf/sets.hpp"
#include "setcbf/solver.hpp"

namespace setcbf {

enum class HMode { Exact, Carryover };

struct FilterSpec {
    LtiModel model;
    ConvexSet U;
    SetCbf cbf;
    Eigen::MatrixXd R;  // input deviation weight; empty means identity
    double rho = 0.0;   // gamma+ penalty (Carryover mode wants a small positive value)
    HMode h_mode = HMode::Exact;
    bool fallback = false;  // opt-in pure invariance step when the QP is infeasible
    SolverSettings solver;
};

struct FilterResult {
    Eigen::VectorXd u;
    double gamma_plus = 0.0;
    double h_current = 0.0;
    bool intervened = false;
    SolveStatus status = SolveStatus::Optimal;
    int iterations = 0;
    double solve_us = 0.0;
    bool fallback_used = false;
    bool margin_degenerate = false;  // approximate filter: epsilon >= 1
};

// One rollout's worth of per-step state (carryover gamma and warm starts).
class SafetyFilter {
  public:
    explicit SafetyFilter(FilterSpec spec);

    FilterResult step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_des);

    void reset();

    const FilterSpec& spec() const { return spec_; }

  private:
    FilterSpec spec_;
    HPolytope u_poly_;
    std::optional<double> carry_gamma_;
    Eigen::VectorXd warm_z_, warm_y_;
};

}  // namespace setcbf
