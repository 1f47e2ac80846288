#include "setcbf/predictive.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "setcbf/errors.hpp"
#include "setcbf/rng.hpp"
#include "setcbf/stochastic.hpp"

namespace setcbf {

namespace {

void require_origin_interior(const HPolytope& p, const char* what) {
    for (Eigen::Index i = 0; i < p.H.rows(); ++i) {
        if (p.b(i) / std::max(p.H.row(i).norm(), 1e-300) <= 1e-10)
            throw ConfigError(std::string(what) + ": origin must be strictly interior");
    }
}

// Variable layout of the horizon programs:
//   gamma-term | x_1..x_N | u_0..u_{N-1}        (evaluation LP, x_0 = x fixed)
//   u | gamma+ | x_0..x_N | u_0..u_{N-1}        (filter QP, x_0 = A x + B u)
struct HorizonLp {
    QpProblem qp;
    int nu = 0;
    int N = 0;
};

HorizonLp build_eval_lp(const PredictiveSafeSet& s, const Eigen::VectorXd& x) {
    const int nx = s.model.nx(), nu = s.model.nu(), N = s.N;
    const int nv = 1 + N * nx + N * nu;
    const auto ix = [&](int i) { return 1 + (i - 1) * nx; };  // state x_i, i >= 1
    const auto iu = [&](int i) { return 1 + N * nx + i * nu; };

    Eigen::Index rows = N * nx + 1;  // dynamics + gamma >= 0
    for (int i = 0; i < N; ++i) rows += s.X_stage[i].H.rows() + s.U_stage[i].H.rows();
    rows += s.X_f.H.rows();

    HorizonLp out;
    out.nu = nu;
    out.N = N;
    out.qp.P = Eigen::MatrixXd::Zero(nv, nv);
    out.qp.q = Eigen::VectorXd::Zero(nv);
    out.qp.q(0) = 1.0;
    out.qp.A = Eigen::MatrixXd::Zero(rows, nv);
    out.qp.lo = Eigen::VectorXd::Constant(rows, -kInf);
    out.qp.hi = Eigen::VectorXd::Constant(rows, kInf);

    Eigen::Index r = 0;
    // dynamics: x_{i+1} = A x_i + B u_i with x_0 = x substituted
    for (int i = 0; i < N; ++i) {
        out.qp.A.block(r, ix(i + 1), nx, nx) = Eigen::MatrixXd::Identity(nx, nx);
        if (i > 0) out.qp.A.block(r, ix(i), nx, nx) = -s.model.A;
        out.qp.A.block(r, iu(i), nx, nu) = -s.model.B;
        const Eigen::VectorXd rhs = (i == 0) ? Eigen::VectorXd(s.model.A * x)
                                             : Eigen::VectorXd(Eigen::VectorXd::Zero(nx));
        out.qp.lo.segment(r, nx) = rhs;
        out.qp.hi.segment(r, nx) = rhs;
        r += nx;
    }
    out.qp.A(r, 0) = 1.0;
    out.qp.lo(r) = 0.0;
    ++r;
    // stage constraints: H x_i <= gamma b  (stage 0 pins gamma from x alone)
    for (int i = 0; i < N; ++i) {
        const auto& Xi = s.X_stage[i];
        const Eigen::Index mx = Xi.H.rows();
        if (i == 0) {
            out.qp.A.block(r, 0, mx, 1) = -Xi.b;
            out.qp.hi.segment(r, mx) = -Xi.H * x;
        } else {
            out.qp.A.block(r, ix(i), mx, nx) = Xi.H;
            out.qp.A.block(r, 0, mx, 1) = -Xi.b;
            out.qp.hi.segment(r, mx).setZero();
        }
        r += mx;
        const auto& Ui = s.U_stage[i];
        const Eigen::Index mu = Ui.H.rows();
        out.qp.A.block(r, iu(i), mu, nu) = Ui.H;
        out.qp.A.block(r, 0, mu, 1) = -Ui.b;
        out.qp.hi.segment(r, mu).setZero();
        r += mu;
    }
    out.qp.A.block(r, ix(N), s.X_f.H.rows(), nx) = s.X_f.H;
    out.qp.A.block(r, 0, s.X_f.H.rows(), 1) = -s.X_f.b;
    out.qp.hi.segment(r, s.X_f.H.rows()).setZero();
    return out;
}

HorizonLp build_step_qp(const PredictiveSafeSet& s, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u_des, const Eigen::MatrixXd& R, double rho,
                        double gamma_upper) {
    const int nx = s.model.nx(), nu = s.model.nu(), N = s.N;
    const int nv = nu + 1 + (N + 1) * nx + N * nu;
    const int ig = nu;
    const auto ix = [&](int i) { return nu + 1 + i * nx; };  // x_i, i = 0..N
    const auto iu = [&](int i) { return nu + 1 + (N + 1) * nx + i * nu; };

    Eigen::Index rows = (N + 1) * nx + 1 + s.U_stage[0].H.rows();
    for (int i = 0; i < N; ++i) rows += s.X_stage[i].H.rows() + s.U_stage[i].H.rows();
    rows += s.X_f.H.rows();

    HorizonLp out;
    out.nu = nu;
    out.N = N;
    out.qp.P = Eigen::MatrixXd::Zero(nv, nv);
    out.qp.P.topLeftCorner(nu, nu) = R;
    out.qp.P(ig, ig) = 2.0 * rho;
    out.qp.q = Eigen::VectorXd::Zero(nv);
    out.qp.q.head(nu) = -R * u_des;
    out.qp.A = Eigen::MatrixXd::Zero(rows, nv);
    out.qp.lo = Eigen::VectorXd::Constant(rows, -kInf);
    out.qp.hi = Eigen::VectorXd::Constant(rows, kInf);

    Eigen::Index r = 0;
    // x_0 = A x + B u
    out.qp.A.block(r, ix(0), nx, nx) = Eigen::MatrixXd::Identity(nx, nx);
    out.qp.A.block(r, 0, nx, nu) = -s.model.B;
    out.qp.lo.segment(r, nx) = s.model.A * x;
    out.qp.hi.segment(r, nx) = s.model.A * x;
    r += nx;
    // predicted dynamics
    for (int i = 0; i < N; ++i) {
        out.qp.A.block(r, ix(i + 1), nx, nx) = Eigen::MatrixXd::Identity(nx, nx);
        out.qp.A.block(r, ix(i), nx, nx) = -s.model.A;
        out.qp.A.block(r, iu(i), nx, nu) = -s.model.B;
        out.qp.lo.segment(r, nx).setZero();
        out.qp.hi.segment(r, nx).setZero();
        r += nx;
    }
    // gamma+ in [0, gamma_upper]
    out.qp.A(r, ig) = 1.0;
    out.qp.lo(r) = 0.0;
    out.qp.hi(r) = gamma_upper;
    ++r;
    // filter input in the unscaled input set (U_0 = U)
    {
        const auto& U0 = s.U_stage[0];
        out.qp.A.block(r, 0, U0.H.rows(), nu) = U0.H;
        out.qp.hi.segment(r, U0.H.rows()) = U0.b;
        r += U0.H.rows();
    }
    for (int i = 0; i < N; ++i) {
        const auto& Xi = s.X_stage[i];
        out.qp.A.block(r, ix(i), Xi.H.rows(), nx) = Xi.H;
        out.qp.A.block(r, ig, Xi.H.rows(), 1) = -Xi.b;
        out.qp.hi.segment(r, Xi.H.rows()).setZero();
        r += Xi.H.rows();
        const auto& Ui = s.U_stage[i];
        out.qp.A.block(r, iu(i), Ui.H.rows(), nu) = Ui.H;
        out.qp.A.block(r, ig, Ui.H.rows(), 1) = -Ui.b;
        out.qp.hi.segment(r, Ui.H.rows()).setZero();
        r += Ui.H.rows();
    }
    out.qp.A.block(r, ix(N), s.X_f.H.rows(), nx) = s.X_f.H;
    out.qp.A.block(r, ig, s.X_f.H.rows(), 1) = -s.X_f.b;
    out.qp.hi.segment(r, s.X_f.H.rows()).setZero();
    return out;
}

}  // namespace

Eigen::MatrixXd dlqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw ConfigError("dlqr: dimension mismatch");
    Eigen::MatrixXd P = Q;
    for (int k = 0; k < 100000; ++k) {
        const Eigen::MatrixXd BtP = B.transpose() * P;
        const Eigen::MatrixXd S = R + BtP * B;
        const Eigen::MatrixXd Kk = S.ldlt().solve(BtP * A);
        const Eigen::MatrixXd Pn = Q + A.transpose() * P * A - A.transpose() * P * B * Kk;
        const double delta = (Pn - P).cwiseAbs().maxCoeff();
        P = 0.5 * (Pn + Pn.transpose());
        if (delta <= 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
    }
    const Eigen::MatrixXd BtP = B.transpose() * P;
    return -(R + BtP * B).ldlt().solve(BtP * A);
}

PredictiveSafeSet build_tightening(const LtiModel& model, const ConvexSet& X, const ConvexSet& U,
                                   const std::optional<ConvexSet>& W, const Eigen::MatrixXd& K_t,
                                   int N) {
    model.validate();
    if (N < 1) throw ConfigError("build_tightening: horizon must be >= 1");
    const Eigen::MatrixXd Ak = model.A + model.B * K_t;
    if (spectral_radius(Ak) >= 1.0 - 1e-9)
        throw ConfigError("build_tightening: A + B K_t must be Schur stable");

    HPolytope Xh = remove_redundant(as_hpolytope(X));
    HPolytope Uh = remove_redundant(as_hpolytope(U));
    require_origin_interior(Xh, "build_tightening: X");
    require_origin_interior(Uh, "build_tightening: U");

    const int nx = model.nx();
    const bool robust = W.has_value();

    // accumulated per-row support offsets of (A+BK)^l W along the horizon
    std::vector<Eigen::VectorXd> x_offsets(N + 1, Eigen::VectorXd::Zero(Xh.H.rows()));
    std::vector<Eigen::VectorXd> u_offsets(N + 1, Eigen::VectorXd::Zero(Uh.H.rows()));
    if (robust) {
        Eigen::MatrixXd Akl = Eigen::MatrixXd::Identity(nx, nx);
        for (int i = 1; i <= N; ++i) {
            x_offsets[i] = x_offsets[i - 1];
            u_offsets[i] = u_offsets[i - 1];
            for (Eigen::Index r = 0; r < Xh.H.rows(); ++r)
                x_offsets[i](r) += support(*W, Akl.transpose() * Xh.H.row(r).transpose());
            for (Eigen::Index r = 0; r < Uh.H.rows(); ++r)
                u_offsets[i](r) +=
                    support(*W, Akl.transpose() * (K_t.transpose() * Uh.H.row(r).transpose()));
            Akl = Ak * Akl;
        }
    }

    PredictiveSafeSet out;
    out.model = model;
    out.N = N;
    out.K_t = K_t;
    out.W = W;
    for (int i = 0; i < N; ++i) {
        HPolytope Xi = Xh;
        Xi.b -= x_offsets[i];
        HPolytope Ui = Uh;
        Ui.b -= u_offsets[i];
        const std::string stage = std::to_string(i);
        for (Eigen::Index r = 0; r < Xi.H.rows(); ++r)
            if (Xi.b(r) / std::max(Xi.H.row(r).norm(), 1e-300) <= 1e-10)
                throw ConfigError("build_tightening: state tightening emptied stage " + stage);
        for (Eigen::Index r = 0; r < Ui.H.rows(); ++r)
            if (Ui.b(r) / std::max(Ui.H.row(r).norm(), 1e-300) <= 1e-10)
                throw ConfigError("build_tightening: input tightening emptied stage " + stage);
        out.X_stage.push_back(Xi);
        out.U_stage.push_back(Ui);
    }

    // terminal set: maximal robust PI set of x+ = Ak x + w inside
    // X_N intersected with {x | K_t x in U_N}
    HPolytope XN = Xh;
    XN.b -= x_offsets[N];
    HPolytope UN = Uh;
    UN.b -= u_offsets[N];
    HPolytope seed;
    seed.H.resize(XN.H.rows() + UN.H.rows(), nx);
    seed.H << XN.H, UN.H * K_t;
    seed.b.resize(XN.b.size() + UN.b.size());
    seed.b << XN.b, UN.b;
    HPolytope term = remove_redundant(seed);
    require_origin_interior(term, "build_tightening: terminal seed");

    std::vector<Eigen::VectorXd> dirs;
    for (Eigen::Index i = 0; i < term.H.rows(); ++i) dirs.push_back(term.H.row(i).normalized());
    Rng rng(0x7e51);
    for (int k = 0; k < 10 * nx; ++k) dirs.push_back(rng.unit_vector(nx));

    for (int it = 0; it < 200; ++it) {
        HPolytope pre;
        pre.H = term.H * Ak;
        pre.b = term.b;
        if (robust) {
            for (Eigen::Index r = 0; r < term.H.rows(); ++r)
                pre.b(r) -= support(*W, term.H.row(r).transpose());
        }
        HPolytope next = remove_redundant(intersect(term, pre));
        require_origin_interior(next, "build_tightening: terminal set");
        double gap = 0.0;
        for (const auto& d : dirs)
            gap = std::max(gap,
                           std::abs(support(ConvexSet{term}, d) - support(ConvexSet{next}, d)));
        term = next;
        if (gap <= 1e-9) break;
    }
    // verify robust positive invariance of the terminal iterate
    {
        HPolytope pre;
        pre.H = term.H * Ak;
        pre.b = term.b;
        if (robust) {
            for (Eigen::Index r = 0; r < term.H.rows(); ++r)
                pre.b(r) -= support(*W, term.H.row(r).transpose());
        }
        for (Eigen::Index r = 0; r < pre.H.rows(); ++r) {
            const Eigen::VectorXd d = pre.H.row(r).transpose();
            if (support(ConvexSet{term}, d) > pre.b(r) + 1e-7 * std::max(1.0, d.norm()))
                throw ConfigError("build_tightening: terminal set failed the invariance check");
        }
    }
    out.X_f = term;
    return out;
}

PredictiveEval eval_gamma_predictive(const PredictiveCbf& p, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw ConfigError("gamma_predictive: state must be finite");
    if (x.size() != p.safe_set.model.nx()) throw ConfigError("gamma_predictive: dimension mismatch");
    const HorizonLp lp = build_eval_lp(p.safe_set, x);
    const QpSolution sol = solve_qp(lp.qp);
    if (sol.status != SolveStatus::Optimal)
        throw ConfigError("gamma_predictive: scaling LP did not solve (status suggests a modeling error)");
    PredictiveEval out;
    out.gamma = std::max(0.0, sol.objective);
    out.u0 = sol.z.segment(1 + lp.N * p.safe_set.model.nx(), p.safe_set.model.nu());
    return out;
}

double gamma_predictive(const PredictiveCbf& p, const Eigen::VectorXd& x) {
    return eval_gamma_predictive(p, x).gamma;
}

FilterResult step_predictive(const PredictiveCbf& p, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u_des, const Eigen::MatrixXd& R, double rho) {
    PredictiveFilter f(p, R, rho);
    return f.step(x, u_des);
}

PredictiveFilter::PredictiveFilter(PredictiveCbf cbf, Eigen::MatrixXd R, double rho, HMode h_mode)
    : cbf_(std::move(cbf)), R_(std::move(R)), rho_(rho), h_mode_(h_mode) {
    const int nu = cbf_.safe_set.model.nu();
    if (R_.size() == 0) R_ = Eigen::MatrixXd::Identity(nu, nu);
    if (R_.rows() != nu || R_.cols() != nu) throw ConfigError("predictive filter: R mismatch");
    if (rho_ < 0.0) throw ConfigError("predictive filter: rho must be nonnegative");
}

void PredictiveFilter::reset() {
    carry_gamma_.reset();
    warm_z_.resize(0);
    warm_y_.resize(0);
}

FilterResult PredictiveFilter::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_des) {
    const double hx = (h_mode_ == HMode::Carryover && carry_gamma_)
                          ? 1.0 - *carry_gamma_
                          : 1.0 - gamma_predictive(cbf_, x);
    const double a = cbf_.alpha(hx);
    const double dh = hx >= 0.0 ? std::min(a, hx) : std::max(a, hx);
    const double gamma_upper = 1.0 - hx + dh;

    HorizonLp qp = build_step_qp(cbf_.safe_set, x, u_des, R_, rho_, gamma_upper);
    if (warm_z_.size() == qp.qp.P.rows() && warm_y_.size() == qp.qp.A.rows()) {
        qp.qp.z0 = warm_z_;
        qp.qp.y0 = warm_y_;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const QpSolution sol = solve_qp(qp.qp);
    const auto t1 = std::chrono::steady_clock::now();
    if (sol.status == SolveStatus::Infeasible)
        throw InfeasibleError("predictive filter: state outside filter domain");
    if (sol.status == SolveStatus::MaxIterations)
        throw InfeasibleError("predictive filter: solver failed to converge");

    warm_z_ = sol.z;
    warm_y_ = sol.y;

    FilterResult out;
    out.u = sol.z.head(qp.nu);
    out.gamma_plus = sol.z(qp.nu);
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
