#pragma once

#include <optional>
#include <vector>

#include "setcbf/model.hpp"
#include "setcbf/sets.hpp"

namespace setcbf {

struct InvarianceProblem {
    LtiModel model;
    ConvexSet X;
    ConvexSet U;
    std::optional<ConvexSet> W;  // artificial disturbance set for robust invariance
};

struct InvarianceResult {
    HPolytope omega;  // origin-form (robust) control invariant set
    int iterations = 0;
    bool converged = false;
    double support_gap = 0.0;
    double nu = 1.0;  // contraction factor, 1 when W is absent
};

// Backward fixed point Omega_{k+1} = Pre(Omega_k) /\ X. The returned iterate is
// re-verified for (robust) control invariance; non-converged but verified
// iterates are returned with converged = false.
InvarianceResult maximal_ci_set(const InvarianceProblem& p, int max_iter = 100, double tol = 1e-6);

struct InvarianceViolation {
    Eigen::VectorXd x;
    double margin = 0.0;
};

struct VerificationReport {
    bool passed = false;
    int checked = 0;
    std::vector<InvarianceViolation> violations;
};

// Exact vertex checks in low dimension / at given vertices, sampled boundary
// checks otherwise. The report is probabilistic for sampled representations.
VerificationReport verify_invariance(const ConvexSet& omega, const InvarianceProblem& p,
                                     int samples = 1000);

struct ContractionResult {
    double nu = 1.0;
    HPolytope omega;  // nu * omega_tilde, renormalized to origin form
};

// Smallest row-wise nu with omega_tilde (-) W inside nu * omega_tilde.
ContractionResult contract_for_stability(const HPolytope& omega_tilde, const ConvexSet& W);

}  // namespace setcbf
