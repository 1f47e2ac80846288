#pragma once

#include <optional>

#include <Eigen/Dense>

#include "setcbf/errors.hpp"

namespace setcbf {

// x(k+1) = A x(k) + B u(k) [+ G w(k)]
struct LtiModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    std::optional<Eigen::MatrixXd> G;

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }

    void validate() const {
        if (A.rows() != A.cols()) throw ConfigError("model: A must be square");
        if (B.rows() != A.rows()) throw ConfigError("model: B row count mismatch");
        if (G && G->rows() != A.rows()) throw ConfigError("model: G row count mismatch");
    }
};

}  // namespace setcbf
