#pragma once

#include <utility>

#include <Eigen/Dense>

namespace setcbf {

// Zero-order-hold discretization: A = exp(Ac dt), B = int_0^dt exp(Ac s) ds Bc,
// via one matrix exponential of the augmented block [[Ac, Bc], [0, 0]] dt.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> exact_discretize(const Eigen::MatrixXd& Ac,
                                                             const Eigen::MatrixXd& Bc, double dt);

}  // namespace setcbf
