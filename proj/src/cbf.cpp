#include "setcbf/cbf.hpp"

#include <cmath>

#include "setcbf/errors.hpp"

namespace setcbf {

namespace {

// gauge LP for a V-polytope: min sum(lambda_i, i>=1) s.t. sum lambda_i v_i = x, lambda >= 0
double gamma_vrep(const VPolytope& v, const Eigen::VectorXd& x) {
    const Eigen::Index n = v.V.rows();
    const Eigen::Index k = v.V.cols() - 1;  // vertices beyond the origin
    if (k < 1) throw ConfigError("gamma: V-polytope needs at least one non-origin vertex");
    const Eigen::MatrixXd Vn = v.V.rightCols(k);
    Eigen::VectorXd c = Eigen::VectorXd::Ones(k);
    Eigen::MatrixXd A(n + k, k);
    A.topRows(n) = Vn;
    A.bottomRows(k) = Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd lo(n + k), hi(n + k);
    lo.head(n) = x;
    hi.head(n) = x;
    lo.tail(k).setZero();
    hi.tail(k).setConstant(kInf);
    SolverSettings st;
    st.eps_abs = st.eps_rel = 1e-9;
    st.max_iter = 50000;
    const QpSolution sol = solve_lp(c, A, lo, hi, st);
    if (sol.status == SolveStatus::Infeasible)
        throw ConeError("gamma: state outside representable cone of the V-polytope");
    if (sol.status != SolveStatus::Optimal)
        throw ConeError("gamma: V-polytope scaling LP did not converge");
    return std::max(0.0, sol.objective);
}

// min gamma s.t. x = gamma c + G lambda, |lambda_j| <= gamma
double gamma_zonotope(const Zonotope& z, const Eigen::VectorXd& x) {
    const Eigen::Index n = z.c.size();
    const Eigen::Index g = z.G.cols();
    const Eigen::Index nv = g + 1;  // lambda, gamma
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(nv);
    cost(g) = 1.0;
    Eigen::MatrixXd A(n + 2 * g + 1, nv);
    A.setZero();
    A.topLeftCorner(n, g) = z.G;
    A.block(0, g, n, 1) = z.c;
    for (Eigen::Index j = 0; j < g; ++j) {
        A(n + 2 * j, j) = 1.0;
        A(n + 2 * j, g) = -1.0;  // lambda_j - gamma <= 0
        A(n + 2 * j + 1, j) = -1.0;
        A(n + 2 * j + 1, g) = -1.0;  // -lambda_j - gamma <= 0
    }
    A(n + 2 * g, g) = 1.0;
    Eigen::VectorXd lo(A.rows()), hi(A.rows());
    lo.head(n) = x;
    hi.head(n) = x;
    lo.segment(n, 2 * g).setConstant(-kInf);
    hi.segment(n, 2 * g).setZero();
    lo(n + 2 * g) = 0.0;
    hi(n + 2 * g) = kInf;
    SolverSettings st;
    st.eps_abs = st.eps_rel = 1e-9;
    st.max_iter = 50000;
    const QpSolution sol = solve_lp(cost, A, lo, hi, st);
    if (sol.status != SolveStatus::Optimal)
        throw ConeError("gamma: zonotope scaling LP infeasible");
    return std::max(0.0, sol.objective);
}

void check_alpha(const ClassKappaE& a) {
    if (std::abs(a(0.0)) > 1e-15) throw ConfigError("alpha(0) must be 0");
    double prev = a(-0.99);
    for (int i = 1; i <= 100; ++i) {
        const double r = -0.99 + i * (2.99 / 100.0);
        const double val = a(r);
        if (val <= prev) throw ConfigError("alpha must be strictly increasing");
        prev = val;
    }
}

void check_origin_interior(const ConvexSet& s) {
    const int n = set_dim(s);
    if (std::holds_alternative<Box>(s)) {
        const auto& b = std::get<Box>(s);
        if (b.lo.maxCoeff() >= -1e-12 || b.hi.minCoeff() <= 1e-12)
            throw ConfigError("cbf: origin must be strictly interior to the box");
        return;
    }
    if (std::holds_alternative<VPolytope>(s)) {
        const auto& v = std::get<VPolytope>(s);
        if (v.V.cols() < 2) throw ConfigError("cbf: V-polytope needs vertices beyond the origin");
        if (v.V.col(0).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("cbf: V-polytope vertex 0 must be the origin");
        for (int i = 0; i < n; ++i) {
            for (const double sgn : {1.0, -1.0}) {
                Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
                d(i) = sgn;
                try {
                    gamma_vrep(v, d);
                } catch (const ConeError&) {
                    throw ConfigError(
                        "cbf: origin must be strictly interior (vertex cone misses an axis)");
                }
            }
        }
        return;
    }
    if (std::holds_alternative<Zonotope>(s)) {
        const auto& z = std::get<Zonotope>(s);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z.G);
        qr.setThreshold(1e-10);
        if (qr.rank() < z.c.size())
            throw ConfigError("cbf: zonotope generators do not span the state space");
        // min t s.t. G lambda = -c, |lambda| <= t ; need t < 1
        const Eigen::Index g = z.G.cols();
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(g + 1);
        cost(g) = 1.0;
        Eigen::MatrixXd A(z.c.size() + 2 * g, g + 1);
        A.setZero();
        A.topLeftCorner(z.c.size(), g) = z.G;
        for (Eigen::Index j = 0; j < g; ++j) {
            A(z.c.size() + 2 * j, j) = 1.0;
            A(z.c.size() + 2 * j, g) = -1.0;
            A(z.c.size() + 2 * j + 1, j) = -1.0;
            A(z.c.size() + 2 * j + 1, g) = -1.0;
        }
        Eigen::VectorXd lo(A.rows()), hi(A.rows());
        lo.head(z.c.size()) = -z.c;
        hi.head(z.c.size()) = -z.c;
        lo.tail(2 * g).setConstant(-kInf);
        hi.tail(2 * g).setZero();
        const QpSolution sol = solve_lp(cost, A, lo, hi);
        if (sol.status != SolveStatus::Optimal || sol.objective >= 1.0 - 1e-12)
            throw ConfigError("cbf: origin must be strictly interior to the zonotope");
        return;
    }
    // H-rep handled by origin-form normalization in make_set_cbf
}

}  // namespace

double ClassKappaE::operator()(double r) const {
    switch (kind) {
        case Kind::Linear:
            return s * r;
        case Kind::Cubic:
            return s * r * r * r + 1e-3 * r;
        case Kind::Tanh:
            return s * scale * std::tanh(r / scale);
    }
    return s * r;
}

SetCbf make_set_cbf(ConvexSet omega, ClassKappaE alpha) {
    check_alpha(alpha);
    if (std::holds_alternative<HPolytope>(omega)) {
        HPolytope p = std::get<HPolytope>(omega);
        if (!p.origin_form) p = to_origin_form(p);
        if (!check_bounded(p)) throw ConfigError("cbf: H-polytope must be bounded");
        omega = p;
    } else {
        check_origin_interior(omega);
    }
    return SetCbf{std::move(omega), alpha};
}

double gamma(const SetCbf& cbf, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw ConfigError("gamma: state must be finite");
    if (set_dim(cbf.omega) != x.size()) throw ConfigError("gamma: dimension mismatch");
    if (std::holds_alternative<HPolytope>(cbf.omega)) {
        const auto& p = std::get<HPolytope>(cbf.omega);
        if (p.H.rows() == 0) return 0.0;
        // origin form: gamma = max(0, max_i H_i x)
        if (p.origin_form) return std::max(0.0, (p.H * x).maxCoeff());
        return std::max(0.0, (p.H * x).cwiseQuotient(p.b).maxCoeff());
    }
    if (std::holds_alternative<Box>(cbf.omega)) {
        const auto& b = std::get<Box>(cbf.omega);
        double g = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) > 0) g = std::max(g, x(i) / b.hi(i));
            else if (x(i) < 0) g = std::max(g, x(i) / b.lo(i));
        }
        return g;
    }
    if (std::holds_alternative<VPolytope>(cbf.omega))
        return gamma_vrep(std::get<VPolytope>(cbf.omega), x);
    return gamma_zonotope(std::get<Zonotope>(cbf.omega), x);
}

double h(const SetCbf& cbf, const Eigen::VectorXd& x) { return 1.0 - gamma(cbf, x); }

double delta_h(const SetCbf& cbf, double hx) {
    const double a = cbf.alpha(hx);
    return hx >= 0.0 ? std::min(a, hx) : std::max(a, hx);
}

double gamma_lipschitz_bound(const SetCbf& cbf) {
    double r = inscribed_radius(cbf.omega);
    const bool exact = std::holds_alternative<HPolytope>(cbf.omega) ||
                       std::holds_alternative<Box>(cbf.omega);
    if (!exact) r *= 0.95;  // sampled radius over-estimates; shrink toward safety
    if (r <= 0.0) throw ConfigError("gamma_lipschitz_bound: set has empty interior");
    return 1.0 / r;
}

}  // namespace setcbf
