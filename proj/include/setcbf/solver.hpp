#pragma once

#include <limits>

#include <Eigen/Dense>

namespace setcbf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

struct SolverSettings {
    double eps_abs = 1e-7;
    double eps_rel = 1e-7;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;  // over-relaxation
    bool adaptive_rho = true;
    bool scaling = true;
    bool polish = true;
    int check_interval = 25;
    double eps_infeasible = 1e-6;  // certificate tolerance (relative)
};

// min 1/2 z'Pz + q'z  s.t.  lo <= A z <= hi   (entries of lo/hi may be +-inf)
struct QpProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    // optional warm start (sizes n and m; leave empty for cold start)
    Eigen::VectorXd z0;
    Eigen::VectorXd y0;
};

struct QpSolution {
    SolveStatus status = SolveStatus::MaxIterations;
    Eigen::VectorXd z;
    Eigen::VectorXd y;
    double objective = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    double primal_residual = kInf;
    double dual_residual = kInf;
    bool unbounded = false;  // dual-infeasibility certificate observed
    bool polished = false;
};

QpSolution solve_qp(const QpProblem& problem, const SolverSettings& settings = {});

// P = 0 specialization
QpSolution solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                    const SolverSettings& settings = {});

}  // namespace setcbf
