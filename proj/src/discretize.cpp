#include "setcbf/discretize.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "setcbf/errors.hpp"

namespace setcbf {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> exact_discretize(const Eigen::MatrixXd& Ac,
                                                             const Eigen::MatrixXd& Bc, double dt) {
    if (Ac.rows() != Ac.cols()) throw ConfigError("exact_discretize: Ac must be square");
    if (Bc.rows() != Ac.rows()) throw ConfigError("exact_discretize: Bc row count mismatch");
    if (!(dt > 0.0)) throw ConfigError("exact_discretize: dt must be positive");
    const Eigen::Index n = Ac.rows(), m = Bc.cols();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = Ac;
    aug.topRightCorner(n, m) = Bc;
    const Eigen::MatrixXd phi = (aug * dt).exp();
    return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

}  // namespace setcbf
