#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "setcbf/errors.hpp"
#include "setcbf/rng.hpp"
#include "setcbf/solver.hpp"
#include "support/oracles.hpp"

using namespace setcbf;

namespace {

QpProblem scalar_problem(double p, double q, double lo, double hi) {
    QpProblem prob;
    prob.P = Eigen::MatrixXd::Constant(1, 1, p);
    prob.q = Eigen::VectorXd::Constant(1, q);
    prob.A = Eigen::MatrixXd::Identity(1, 1);
    prob.lo = Eigen::VectorXd::Constant(1, lo);
    prob.hi = Eigen::VectorXd::Constant(1, hi);
    return prob;
}

}  // namespace

TEST_CASE("interior unconstrained minimum: min z^2 on [-1, 1]") {
    const QpSolution sol = solve_qp(scalar_problem(2.0, 0.0, -1.0, 1.0));
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.z(0)) < 1e-7);
    CHECK(std::abs(sol.objective) < 1e-9);
}

TEST_CASE("active bound: min (z-2)^2 s.t. z <= 1") {
    // (z-2)^2 = z^2 - 4z + 4; drop the constant, objective at z=1 is 1
    QpProblem prob = scalar_problem(2.0, -4.0, -kInf, 1.0);
    const QpSolution sol = solve_qp(prob);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(sol.z(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(0.5 * 2.0 * sol.z(0) * sol.z(0) - 4.0 * sol.z(0) + 4.0 ==
          doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("empty feasible set: z <= -1 and z >= 1") {
    QpProblem prob;
    prob.P = Eigen::MatrixXd::Zero(1, 1);
    prob.q = Eigen::VectorXd::Zero(1);
    prob.A = Eigen::MatrixXd::Ones(2, 1);
    prob.lo.resize(2);
    prob.hi.resize(2);
    prob.lo << -kInf, 1.0;
    prob.hi << -1.0, kInf;
    const QpSolution sol = solve_qp(prob);
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("lp: min gamma s.t. gamma >= 0.5, gamma >= 0") {
    Eigen::MatrixXd A(2, 1);
    A << 1, 1;
    Eigen::VectorXd lo(2), hi(2);
    lo << 0.5, 0.0;
    hi << kInf, kInf;
    const QpSolution sol = solve_lp(Eigen::VectorXd::Ones(1), A, lo, hi);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(sol.z(0) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("lp: min gamma s.t. gamma >= 0 only") {
    Eigen::MatrixXd A(1, 1);
    A << 1;
    Eigen::VectorXd lo(1), hi(1);
    lo << 0.0;
    hi << kInf;
    const QpSolution sol = solve_lp(Eigen::VectorXd::Ones(1), A, lo, hi);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.z(0)) < 1e-7);
}

TEST_CASE("lp: min -gamma s.t. gamma >= 0 is unbounded") {
    Eigen::MatrixXd A(1, 1);
    A << 1;
    Eigen::VectorXd lo(1), hi(1);
    lo << 0.0;
    hi << kInf;
    const QpSolution sol = solve_lp(-Eigen::VectorXd::Ones(1), A, lo, hi);
    CHECK(sol.unbounded);
    CHECK(sol.status == SolveStatus::MaxIterations);
}

TEST_CASE("configuration errors") {
    QpProblem prob = scalar_problem(2.0, 0.0, -1.0, 1.0);
    prob.q.resize(2);
    CHECK_THROWS_AS(solve_qp(prob), ConfigError);

    QpProblem indef = scalar_problem(-1.0, 0.0, -1.0, 1.0);
    CHECK_THROWS_AS(solve_qp(indef), ConfigError);

    QpProblem bad_bounds = scalar_problem(2.0, 0.0, 1.0, -1.0);
    CHECK_THROWS_AS(solve_qp(bad_bounds), ConfigError);

    QpProblem asym;
    asym.P.resize(2, 2);
    asym.P << 1.0, 0.5, -0.5, 1.0;
    asym.q = Eigen::VectorXd::Zero(2);
    asym.A = Eigen::MatrixXd::Identity(2, 2);
    asym.lo = Eigen::VectorXd::Constant(2, -1.0);
    asym.hi = Eigen::VectorXd::Constant(2, 1.0);
    CHECK_THROWS_AS(solve_qp(asym), ConfigError);
}

TEST_CASE("random QPs match the active-set enumeration oracle") {
    Rng rng(20240711);
    int solved = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 6);
        const int m = 1 + static_cast<int>(rng.next_u64() % 10);
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
        QpProblem prob;
        prob.P = M.transpose() * M;
        prob.q = rng.uniform_vector(n, -1.0, 1.0);
        prob.A.resize(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) prob.A(i, j) = rng.uniform(-1.0, 1.0);
        const Eigen::VectorXd z0 = rng.uniform_vector(n, -1.0, 1.0);
        const Eigen::VectorXd mid = prob.A * z0;
        prob.lo.resize(m);
        prob.hi.resize(m);
        for (int i = 0; i < m; ++i) {
            prob.lo(i) = mid(i) - rng.uniform(0.05, 1.0);
            prob.hi(i) = mid(i) + rng.uniform(0.05, 1.0);
        }
        const auto oracle =
            oracles::active_set_enumeration(prob.P, prob.q, prob.A, prob.lo, prob.hi);
        REQUIRE(oracle.found);
        const QpSolution sol = solve_qp(prob);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(std::abs(sol.objective - oracle.objective) <=
              1e-5 * (1.0 + std::abs(oracle.objective)));
        // stationarity invariant at reported Optimal
        const double station =
            (prob.P * sol.z + prob.q + prob.A.transpose() * sol.y).cwiseAbs().maxCoeff();
        CHECK(station <= 1e-7 * (1.0 + prob.q.cwiseAbs().maxCoeff()));
        ++solved;
    }
    CHECK(solved == 120);
}

TEST_CASE("cost scaling leaves the minimizer unchanged") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
        QpProblem prob;
        prob.P = M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(n, n);
        prob.q = rng.uniform_vector(n, -1.0, 1.0);
        prob.A = Eigen::MatrixXd::Identity(n, n);
        prob.lo = Eigen::VectorXd::Constant(n, -0.5);
        prob.hi = Eigen::VectorXd::Constant(n, 0.5);
        const QpSolution a = solve_qp(prob);
        QpProblem scaled = prob;
        const double c = 1e3;
        scaled.P *= c;
        scaled.q *= c;
        const QpSolution b = solve_qp(scaled);
        REQUIRE(a.status == SolveStatus::Optimal);
        REQUIRE(b.status == SolveStatus::Optimal);
        CHECK((a.z - b.z).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("determinism: identical inputs give identical outputs") {
    QpProblem prob = scalar_problem(2.0, -1.0, -1.0, 1.0);
    const QpSolution a = solve_qp(prob);
    const QpSolution b = solve_qp(prob);
    CHECK(a.z(0) == b.z(0));
    CHECK(a.iterations == b.iterations);
    CHECK(a.objective == b.objective);
}

TEST_CASE("warm start solves to the same answer") {
    Rng rng(4242);
    const int n = 3;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
    QpProblem prob;
    prob.P = M.transpose() * M + Eigen::MatrixXd::Identity(n, n);
    prob.q = rng.uniform_vector(n, -1.0, 1.0);
    prob.A = Eigen::MatrixXd::Identity(n, n);
    prob.lo = Eigen::VectorXd::Constant(n, -0.3);
    prob.hi = Eigen::VectorXd::Constant(n, 0.3);
    const QpSolution cold = solve_qp(prob);
    QpProblem warm = prob;
    warm.z0 = cold.z;
    warm.y0 = cold.y;
    const QpSolution hot = solve_qp(warm);
    REQUIRE(hot.status == SolveStatus::Optimal);
    CHECK((hot.z - cold.z).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(hot.iterations <= cold.iterations);
}
