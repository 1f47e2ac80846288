#pragma once

#include <optional>

#include "setcbf/filter.hpp"

namespace setcbf {

struct DisturbanceSpec {
    enum class Kind { Gaussian, UniformBox };
    Kind kind = Kind::Gaussian;
    Eigen::MatrixXd sigma_w;  // Gaussian covariance (n_w x n_w)
    Box support;              // UniformBox support
};

// Inverse standard normal CDF; rational approximation refined to ~1e-15.
double normal_quantile(double p);

struct TightenedSets {
    HPolytope Xbar;
    HPolytope Ubar;
    Eigen::MatrixXd sigma_inf;  // stationary error covariance (Gaussian case)
};

// Per-row probabilistic-reachable-set offsets for the error dynamics
// e+ = (A + BK) e + G w, using the stationary covariance (Gaussian) or the
// worst-case accumulated support (bounded uniform).
TightenedSets tighten_constraints(const LtiModel& model, const Eigen::MatrixXd& K,
                                  const DisturbanceSpec& w, const HPolytope& X,
                                  const Eigen::VectorXd& px, const HPolytope& U,
                                  const Eigen::VectorXd& pu, int horizon_for_prs = 100000);

struct StochasticFilterSpec {
    LtiModel model;     // disturbance enters through model.G
    Eigen::MatrixXd K;  // error feedback pi(e) = K e; A + BK Schur stable
    DisturbanceSpec w;
    Eigen::VectorXd px, pu;
    HPolytope Xbar, Ubar;  // tightened constraint sets
    FilterSpec nominal;    // nominal filter on z-dynamics (U = Ubar, cbf over tightened sets)
};

// Nominal filter on z with error feedback: u = v* + K (x - z), z+ = A z + B v*.
class StochasticFilter {
  public:
    explicit StochasticFilter(StochasticFilterSpec spec);

    struct StepResult {
        Eigen::VectorXd u;
        Eigen::VectorXd z_next;
        FilterResult nominal;
    };

    // z initializes to x on the first call
    StepResult step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_des);

    void reset();

    const Eigen::VectorXd& z() const { return z_.value(); }

  private:
    StochasticFilterSpec spec_;
    SafetyFilter nominal_;
    std::optional<Eigen::VectorXd> z_;
};

double spectral_radius(const Eigen::MatrixXd& M);

}  // namespace setcbf
