#include "setcbf/filter.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "setcbf/errors.hpp"

namespace setcbf {

namespace {

struct EncodedQp {
    QpProblem qp;
    int nu = 0;  // u occupies the first nu variables, gamma+ is variable nu
};

// Variables are (u, gamma+, aux...) with the representation-specific scaled-set
// constraint A x + B u in gamma+ * Omega appended after the shared rows.
EncodedQp encode_step(const FilterSpec& spec, const HPolytope& u_poly, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u_des, double gamma_upper) {
    const int nu = spec.model.nu();
    const int nx = spec.model.nx();
    const Eigen::VectorXd ax = spec.model.A * x;
    const Eigen::MatrixXd& B = spec.model.B;

    int n_aux = 0;
    if (std::holds_alternative<VPolytope>(spec.cbf.omega))
        n_aux = static_cast<int>(std::get<VPolytope>(spec.cbf.omega).V.cols());
    else if (std::holds_alternative<Zonotope>(spec.cbf.omega))
        n_aux = static_cast<int>(std::get<Zonotope>(spec.cbf.omega).G.cols());

    const int nv = nu + 1 + n_aux;
    EncodedQp enc;
    enc.nu = nu;
    enc.qp.P = Eigen::MatrixXd::Zero(nv, nv);
    enc.qp.P.topLeftCorner(nu, nu) = spec.R;
    enc.qp.P(nu, nu) = 2.0 * spec.rho;
    enc.qp.q = Eigen::VectorXd::Zero(nv);
    enc.qp.q.head(nu) = -spec.R * u_des;

    const Eigen::Index mu = u_poly.H.rows();
    Eigen::Index rows = mu + 1;  // input rows + gamma bounds
    if (std::holds_alternative<HPolytope>(spec.cbf.omega) ||
        std::holds_alternative<Box>(spec.cbf.omega)) {
        const HPolytope om = as_hpolytope(spec.cbf.omega);
        rows += om.H.rows();
        enc.qp.A = Eigen::MatrixXd::Zero(rows, nv);
        enc.qp.lo = Eigen::VectorXd::Constant(rows, -kInf);
        enc.qp.hi = Eigen::VectorXd::Constant(rows, kInf);
        Eigen::Index r = 0;
        enc.qp.A.block(r, 0, mu, nu) = u_poly.H;
        enc.qp.hi.segment(r, mu) = u_poly.b;
        r += mu;
        enc.qp.A(r, nu) = 1.0;
        enc.qp.lo(r) = 0.0;
        enc.qp.hi(r) = gamma_upper;
        ++r;
        // H (A x + B u) <= gamma+ b
        enc.qp.A.block(r, 0, om.H.rows(), nu) = om.H * B;
        enc.qp.A.block(r, nu, om.H.rows(), 1) = -om.b;
        enc.qp.hi.segment(r, om.H.rows()) = -om.H * ax;
        return enc;
    }

    if (std::holds_alternative<VPolytope>(spec.cbf.omega)) {
        const auto& v = std::get<VPolytope>(spec.cbf.omega);
        const Eigen::Index k = v.V.cols();
        rows += nx + 1 + 1 + k;  // hull equality, sum, gamma link, lambda >= 0
        enc.qp.A = Eigen::MatrixXd::Zero(rows, nv);
        enc.qp.lo = Eigen::VectorXd::Constant(rows, -kInf);
        enc.qp.hi = Eigen::VectorXd::Constant(rows, kInf);
        Eigen::Index r = 0;
        enc.qp.A.block(r, 0, mu, nu) = u_poly.H;
        enc.qp.hi.segment(r, mu) = u_poly.b;
        r += mu;
        enc.qp.A(r, nu) = 1.0;
        enc.qp.lo(r) = 0.0;
        enc.qp.hi(r) = gamma_upper;
        ++r;
        // A x + B u = sum lambda_i v_i
        enc.qp.A.block(r, 0, nx, nu) = B;
        enc.qp.A.block(r, nu + 1, nx, k) = -v.V;
        enc.qp.lo.segment(r, nx) = -ax;
        enc.qp.hi.segment(r, nx) = -ax;
        r += nx;
        // sum lambda = 1
        enc.qp.A.block(r, nu + 1, 1, k).setOnes();
        enc.qp.lo(r) = 1.0;
        enc.qp.hi(r) = 1.0;
        ++r;
        // 1 - lambda_0 = gamma+
        enc.qp.A(r, nu) = 1.0;
        enc.qp.A(r, nu + 1) = 1.0;
        enc.qp.lo(r) = 1.0;
        enc.qp.hi(r) = 1.0;
        ++r;
        enc.qp.A.block(r, nu + 1, k, k) = Eigen::MatrixXd::Identity(k, k);
        enc.qp.lo.segment(r, k).setZero();
        return enc;
    }

    const auto& z = std::get<Zonotope>(spec.cbf.omega);
    const Eigen::Index g = z.G.cols();
    rows += nx + 2 * g;
    enc.qp.A = Eigen::MatrixXd::Zero(rows, nv);
    enc.qp.lo = Eigen::VectorXd::Constant(rows, -kInf);
    enc.qp.hi = Eigen::VectorXd::Constant(rows, kInf);
    Eigen::Index r = 0;
    enc.qp.A.block(r, 0, mu, nu) = u_poly.H;
    enc.qp.hi.segment(r, mu) = u_poly.b;
    r += mu;
    enc.qp.A(r, nu) = 1.0;
    enc.qp.lo(r) = 0.0;
    enc.qp.hi(r) = gamma_upper;
    ++r;
    // A x + B u = gamma+ c + G lambda
    enc.qp.A.block(r, 0, nx, nu) = B;
    enc.qp.A.block(r, nu, nx, 1) = -z.c;
    enc.qp.A.block(r, nu + 1, nx, g) = -z.G;
    enc.qp.lo.segment(r, nx) = -ax;
    enc.qp.hi.segment(r, nx) = -ax;
    r += nx;
    // |lambda_j| <= gamma+
    for (Eigen::Index j = 0; j < g; ++j) {
        enc.qp.A(r, nu + 1 + j) = 1.0;
        enc.qp.A(r, nu) = -1.0;
        enc.qp.hi(r) = 0.0;
        ++r;
        enc.qp.A(r, nu + 1 + j) = -1.0;
        enc.qp.A(r, nu) = -1.0;
        enc.qp.hi(r) = 0.0;
        ++r;
    }
    return enc;
}

}  // namespace

SafetyFilter::SafetyFilter(FilterSpec spec) : spec_(std::move(spec)) {
    spec_.model.validate();
    if (spec_.rho < 0.0) throw ConfigError("filter: rho must be nonnegative");
    if (spec_.R.size() == 0)
        spec_.R = Eigen::MatrixXd::Identity(spec_.model.nu(), spec_.model.nu());
    if (spec_.R.rows() != spec_.model.nu() || spec_.R.cols() != spec_.model.nu())
        throw ConfigError("filter: R dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(spec_.R);
    if (llt.info() != Eigen::Success) throw ConfigError("filter: R must be positive definite");
    if (set_dim(spec_.cbf.omega) != spec_.model.nx())
        throw ConfigError("filter: safe set dimension mismatch");
    u_poly_ = as_hpolytope(spec_.U);
    if (u_poly_.H.cols() != spec_.model.nu())
        throw ConfigError("filter: input set dimension mismatch");
}

void SafetyFilter::reset() {
    carry_gamma_.reset();
    warm_z_.resize(0);
    warm_y_.resize(0);
}

FilterResult SafetyFilter::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_des) {
    if (!x.allFinite()) throw ConfigError("filter: state must be finite");
    if (u_des.size() != spec_.model.nu()) throw ConfigError("filter: u_des dimension mismatch");

    const double hx = (spec_.h_mode == HMode::Carryover && carry_gamma_)
                          ? 1.0 - *carry_gamma_
                          : h(spec_.cbf, x);
    const double dh = delta_h(spec_.cbf, hx);
    const double gamma_upper = 1.0 - hx + dh;

    EncodedQp enc = encode_step(spec_, u_poly_, x, u_des, gamma_upper);
    if (warm_z_.size() == enc.qp.P.rows() && warm_y_.size() == enc.qp.A.rows()) {
        enc.qp.z0 = warm_z_;
        enc.qp.y0 = warm_y_;
    }

    const auto t0 = std::chrono::steady_clock::now();
    QpSolution sol = solve_qp(enc.qp, spec_.solver);
    FilterResult out;
    out.fallback_used = false;
    if (sol.status == SolveStatus::Infeasible) {
        if (!spec_.fallback) throw InfeasibleError("filter: state outside filter domain");
        // pure invariance step: min gamma+ subject to the set constraint only
        QpProblem lp = enc.qp;
        lp.P.setZero();
        lp.q.setZero();
        lp.q(enc.nu) = 1.0;
        // release the decrease bound on gamma+
        for (Eigen::Index r = 0; r < lp.A.rows(); ++r) {
            if (lp.A(r, enc.nu) == 1.0 && lp.A.row(r).cwiseAbs().sum() == 1.0) {
                lp.hi(r) = kInf;
                break;
            }
        }
        lp.z0.resize(0);
        lp.y0.resize(0);
        sol = solve_qp(lp, spec_.solver);
        if (sol.status != SolveStatus::Optimal)
            throw InfeasibleError("filter: fallback invariance step infeasible");
        out.fallback_used = true;
    }
    const auto t1 = std::chrono::steady_clock::now();

    if (sol.status == SolveStatus::MaxIterations)
        throw InfeasibleError("filter: solver failed to converge");

    warm_z_ = sol.z;
    warm_y_ = sol.y;

    out.u = sol.z.head(enc.nu);
    out.gamma_plus = sol.z(enc.nu);
    out.h_current = hx;
    out.intervened = (out.u - u_des).norm() > 1e-7;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.solve_us =
        std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(t1 - t0).count();
    carry_gamma_ = out.gamma_plus;
    return out;
}

}  // namespace setcbf
