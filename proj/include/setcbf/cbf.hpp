#pragma once

#include <Eigen/Dense>

#include "setcbf/sets.hpp"

namespace setcbf {

// Extended class-K shaping function: continuous, strictly increasing, alpha(0) = 0.
struct ClassKappaE {
    enum class Kind { Linear, Cubic, Tanh };
    Kind kind = Kind::Linear;
    double s = 1.0;
    double scale = 1.0;  // Tanh only

    double operator()(double r) const;

    static ClassKappaE linear(double s) { return {Kind::Linear, s, 1.0}; }
    static ClassKappaE cubic(double s) { return {Kind::Cubic, s, 1.0}; }
    static ClassKappaE tanh(double s, double scale) { return {Kind::Tanh, s, scale}; }
};

// Barrier h(x) = 1 - gamma_omega(x) over a set with the origin strictly interior.
struct SetCbf {
    ConvexSet omega;
    ClassKappaE alpha;
};

// Validates interiority of the origin and the class-K properties.
SetCbf make_set_cbf(ConvexSet omega, ClassKappaE alpha);

// Minimal scaling of omega containing x. Closed form for H-rep/box, LP otherwise.
double gamma(const SetCbf& cbf, const Eigen::VectorXd& x);

double h(const SetCbf& cbf, const Eigen::VectorXd& x);

// Two-case decrease bound: min(alpha(h), h) for h >= 0, max(alpha(h), h) otherwise.
double delta_h(const SetCbf& cbf, double hx);

// Lipschitz constant of gamma w.r.t. the Euclidean norm (1 / inscribed radius).
double gamma_lipschitz_bound(const SetCbf& cbf);

}  // namespace setcbf
