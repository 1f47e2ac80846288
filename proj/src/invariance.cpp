#include "setcbf/invariance.hpp"

#include <algorithm>
#include <cmath>

#include "setcbf/errors.hpp"
#include "setcbf/rng.hpp"

namespace setcbf {

namespace {

void require_origin_interior_hrep(const HPolytope& p, const char* what) {
    for (Eigen::Index i = 0; i < p.H.rows(); ++i) {
        const double nrm = p.H.row(i).norm();
        if (nrm > 1e-300 && p.b(i) / nrm <= 1e-10)
            throw ConfigError(std::string(what) + ": origin must be strictly interior");
    }
}

// vertices of a disturbance set for robust feasibility checks
std::vector<Eigen::VectorXd> disturbance_vertices(const ConvexSet& w, int cap) {
    std::vector<Eigen::VectorXd> out;
    const int n = set_dim(w);
    if (std::holds_alternative<Box>(w)) {
        const auto& b = std::get<Box>(w);
        if (n <= 12) {
            for (long mask = 0; mask < (1L << n); ++mask) {
                Eigen::VectorXd v(n);
                for (int i = 0; i < n; ++i) v(i) = (mask >> i) & 1 ? b.hi(i) : b.lo(i);
                out.push_back(v);
                if (static_cast<int>(out.size()) >= cap) return out;
            }
            return out;
        }
    }
    if (std::holds_alternative<Zonotope>(w)) {
        const auto& z = std::get<Zonotope>(w);
        const int g = static_cast<int>(z.G.cols());
        if (g <= 12) {
            for (long mask = 0; mask < (1L << g); ++mask) {
                Eigen::VectorXd lam(g);
                for (int i = 0; i < g; ++i) lam(i) = (mask >> i) & 1 ? 1.0 : -1.0;
                out.push_back(z.c + z.G * lam);
                if (static_cast<int>(out.size()) >= cap) return out;
            }
            return out;
        }
    }
    if (std::holds_alternative<HPolytope>(w) && set_dim(w) <= 3)
        return enumerate_vertices(std::get<HPolytope>(w));
    // fallback: sampled extreme points via support directions
    Rng rng(0xd1f7);
    for (int k = 0; k < cap; ++k) {
        const Eigen::VectorXd d = rng.unit_vector(n);
        // support point of a box/zonotope in direction d
        if (std::holds_alternative<Box>(w)) {
            const auto& b = std::get<Box>(w);
            Eigen::VectorXd v(n);
            for (int i = 0; i < n; ++i) v(i) = d(i) >= 0 ? b.hi(i) : b.lo(i);
            out.push_back(v);
        } else if (std::holds_alternative<Zonotope>(w)) {
            const auto& z = std::get<Zonotope>(w);
            Eigen::VectorXd lam = (z.G.transpose() * d).cwiseSign();
            out.push_back(z.c + z.G * lam);
        } else {
            throw ConfigError("verify_invariance: unsupported disturbance representation");
        }
    }
    return out;
}

// Feasibility margin of "exists u in U: A x + B u (+ w) stays in omega" at a fixed x.
// Returns the minimal uniform constraint relaxation t; t <= tol means feasible.
double one_step_margin(const ConvexSet& omega, const InvarianceProblem& p,
                       const Eigen::VectorXd& x, const HPolytope& u_poly,
                       const std::vector<Eigen::VectorXd>& w_verts) {
    const int nu = p.model.nu();
    const Eigen::VectorXd ax = p.model.A * x;

    if (std::holds_alternative<HPolytope>(omega) || std::holds_alternative<Box>(omega)) {
        HPolytope target = as_hpolytope(omega);
        Eigen::VectorXd bt = target.b;
        if (p.W) {
            for (Eigen::Index i = 0; i < target.H.rows(); ++i)
                bt(i) -= support(*p.W, target.H.row(i).transpose());
        }
        // vars (u, t): min t s.t. H(Ax+Bu) - t <= bt, Hu u <= bu
        const Eigen::Index mt = target.H.rows(), mu = u_poly.H.rows();
        Eigen::VectorXd c = Eigen::VectorXd::Zero(nu + 1);
        c(nu) = 1.0;
        Eigen::MatrixXd A(mt + mu, nu + 1);
        A.setZero();
        A.topLeftCorner(mt, nu) = target.H * p.model.B;
        A.col(nu).head(mt).setConstant(-1.0);
        A.bottomLeftCorner(mu, nu) = u_poly.H;
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(mt + mu, -kInf);
        Eigen::VectorXd hi(mt + mu);
        hi.head(mt) = bt - target.H * ax;
        hi.tail(mu) = u_poly.b;
        const QpSolution sol = solve_lp(c, A, lo, hi);
        if (sol.status != SolveStatus::Optimal)
            throw ConfigError("verify_invariance: margin LP failed");
        return sol.objective;
    }

    // hull/zonotope targets: robustness through explicit disturbance vertices
    std::vector<Eigen::VectorXd> verts = w_verts;
    if (verts.empty()) verts.push_back(Eigen::VectorXd::Zero(x.size()));

    if (std::holds_alternative<VPolytope>(omega)) {
        const auto& v = std::get<VPolytope>(omega);
        const Eigen::Index k = v.V.cols();
        const Eigen::Index nv = nu + 1 + static_cast<Eigen::Index>(verts.size()) * k;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
        c(nu) = 1.0;
        const Eigen::Index n = x.size();
        const Eigen::Index rows_per = n + 1 + k;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(
            static_cast<Eigen::Index>(verts.size()) * rows_per + 1, nv);
        Eigen::VectorXd lo(A.rows()), hi(A.rows());
        Eigen::Index r = 0;
        for (std::size_t vi = 0; vi < verts.size(); ++vi) {
            const Eigen::Index off = nu + 1 + static_cast<Eigen::Index>(vi) * k;
            // V lambda - B u = Ax + w  (x+ must be a hull point)
            A.block(r, off, n, k) = v.V;
            A.block(r, 0, n, nu) = -p.model.B;
            lo.segment(r, n) = ax + verts[vi];
            hi.segment(r, n) = ax + verts[vi];
            r += n;
            // sum lambda = 1, relaxed by t on both sides
            A.block(r, off, 1, k).setOnes();
            A(r, nu) = -1.0;
            lo(r) = -kInf;
            hi(r) = 1.0;
            ++r;
            // lambda >= -t (elastic nonnegativity)
            A.block(r, off, k, k) = Eigen::MatrixXd::Identity(k, k);
            A.block(r, nu, k, 1).setOnes();
            lo.segment(r, k).setZero();
            hi.segment(r, k).setConstant(kInf);
            r += k;
        }
        A(r, nu) = 1.0;
        lo(r) = 0.0;
        hi(r) = kInf;
        // input constraint handled by appending rows below
        Eigen::MatrixXd Au = Eigen::MatrixXd::Zero(u_poly.H.rows(), nv);
        Au.leftCols(nu) = u_poly.H;
        Eigen::MatrixXd Afull(A.rows() + Au.rows(), nv);
        Afull << A, Au;
        Eigen::VectorXd lof(Afull.rows()), hif(Afull.rows());
        lof << lo, Eigen::VectorXd::Constant(Au.rows(), -kInf);
        hif << hi, u_poly.b;
        const QpSolution sol = solve_lp(c, Afull, lof, hif);
        if (sol.status != SolveStatus::Optimal) return kInf;
        return sol.objective;
    }

    const auto& z = std::get<Zonotope>(omega);
    const Eigen::Index g = z.G.cols();
    const Eigen::Index n = x.size();
    const Eigen::Index nv = nu + 1 + static_cast<Eigen::Index>(verts.size()) * g;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c(nu) = 1.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(verts.size()) * (n + 2 * g) + 1 + u_poly.H.rows(), nv);
    Eigen::VectorXd lo(A.rows()), hi(A.rows());
    Eigen::Index r = 0;
    for (std::size_t vi = 0; vi < verts.size(); ++vi) {
        const Eigen::Index off = nu + 1 + static_cast<Eigen::Index>(vi) * g;
        // G lambda - B u = Ax + w - c
        A.block(r, off, n, g) = z.G;
        A.block(r, 0, n, nu) = -p.model.B;
        lo.segment(r, n) = ax + verts[vi] - z.c;
        hi.segment(r, n) = ax + verts[vi] - z.c;
        r += n;
        // |lambda_j| <= 1 + t
        for (Eigen::Index j = 0; j < g; ++j) {
            A(r, off + j) = 1.0;
            A(r, nu) = -1.0;
            lo(r) = -kInf;
            hi(r) = 1.0;
            ++r;
            A(r, off + j) = -1.0;
            A(r, nu) = -1.0;
            lo(r) = -kInf;
            hi(r) = 1.0;
            ++r;
        }
    }
    A(r, nu) = 1.0;
    lo(r) = 0.0;
    hi(r) = kInf;
    ++r;
    A.block(r, 0, u_poly.H.rows(), nu) = u_poly.H;
    lo.segment(r, u_poly.H.rows()).setConstant(-kInf);
    hi.segment(r, u_poly.H.rows()) = u_poly.b;
    const QpSolution sol = solve_lp(c, A, lo, hi);
    if (sol.status != SolveStatus::Optimal) return kInf;
    return sol.objective;
}

}  // namespace

InvarianceResult maximal_ci_set(const InvarianceProblem& p, int max_iter, double tol) {
    p.model.validate();
    HPolytope X = remove_redundant(as_hpolytope(p.X));
    HPolytope U = remove_redundant(as_hpolytope(p.U));
    require_origin_interior_hrep(X, "maximal_ci_set: X");
    require_origin_interior_hrep(U, "maximal_ci_set: U");
    if (!check_bounded(X)) throw ConfigError("maximal_ci_set: X must be bounded");
    if (!check_bounded(U)) throw ConfigError("maximal_ci_set: U must be bounded");
    if (p.W) {
        const int n = p.model.nx();
        if (!contains(*p.W, Eigen::VectorXd::Zero(n), 1e-9))
            throw ConfigError("maximal_ci_set: W must contain the origin");
    }

    // gap probe directions: constraint normals plus random unit vectors
    const int n = p.model.nx();
    std::vector<Eigen::VectorXd> dirs;
    for (Eigen::Index i = 0; i < X.H.rows(); ++i) dirs.push_back(X.H.row(i).normalized());
    Rng rng(0xfeed5);
    for (int k = 0; k < 10 * n; ++k) dirs.push_back(rng.unit_vector(n));

    HPolytope omega = X;
    double gap = kInf;
    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= max_iter; ++iter) {
        const HPolytope pre = affine_preimage(omega, p.model.A, p.model.B, U, p.W);
        HPolytope next = remove_redundant(intersect(pre, X));
        if (hpoly_is_empty(next)) throw ConfigError("maximal_ci_set: no invariant set containing origin");
        for (Eigen::Index i = 0; i < next.H.rows(); ++i) {
            if (next.b(i) / std::max(next.H.row(i).norm(), 1e-300) <= 1e-10)
                throw ConfigError("maximal_ci_set: no invariant set containing origin");
        }
        gap = 0.0;
        for (const auto& d : dirs)
            gap = std::max(gap, std::abs(support(ConvexSet{omega}, d) - support(ConvexSet{next}, d)));
        omega = next;
        if (gap <= tol) {
            converged = true;
            break;
        }
    }

    // the fixed-point iterate must itself verify: omega inside Pre(omega) /\ X
    const HPolytope pre = affine_preimage(omega, p.model.A, p.model.B, U, p.W);
    const HPolytope target = intersect(pre, X);
    const double ver_tol = std::max(1e-7, 10.0 * tol);
    for (Eigen::Index i = 0; i < target.H.rows(); ++i) {
        const Eigen::VectorXd d = target.H.row(i).transpose();
        if (support(ConvexSet{omega}, d) > target.b(i) + ver_tol * std::max(1.0, d.norm()))
            throw ConfigError("maximal_ci_set: iterate failed the invariance check");
    }

    InvarianceResult out;
    out.omega = to_origin_form(omega);
    out.iterations = std::min(iter, max_iter);
    out.converged = converged;
    out.support_gap = gap;
    out.nu = 1.0;
    if (p.W) {
        const ContractionResult c = contract_for_stability(out.omega, *p.W);
        out.nu = c.nu;
    }
    return out;
}

VerificationReport verify_invariance(const ConvexSet& omega, const InvarianceProblem& p,
                                     int samples) {
    p.model.validate();
    const int n = p.model.nx();
    const HPolytope U = as_hpolytope(p.U);
    const double tol = 1e-7;

    // precondition: origin strictly interior (rejects degenerate sets)
    if (std::holds_alternative<HPolytope>(omega)) {
        to_origin_form(std::get<HPolytope>(omega));
    } else if (std::holds_alternative<Box>(omega)) {
        const auto& b = std::get<Box>(omega);
        if (b.lo.maxCoeff() >= -1e-12 || b.hi.minCoeff() <= 1e-12)
            throw ConfigError("verify_invariance: origin must be strictly interior");
    } else if (std::holds_alternative<Zonotope>(omega)) {
        const auto& z = std::get<Zonotope>(omega);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z.G);
        qr.setThreshold(1e-10);
        if (qr.rank() < n) throw ConfigError("verify_invariance: origin must be strictly interior");
    } else {
        const auto& v = std::get<VPolytope>(omega);
        if (v.V.cols() < 2 || v.V.col(0).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("verify_invariance: V-polytope must pin vertex 0 to the origin");
    }

    std::vector<Eigen::VectorXd> w_verts;
    if (p.W) w_verts = disturbance_vertices(*p.W, samples);

    std::vector<Eigen::VectorXd> points;
    if (std::holds_alternative<VPolytope>(omega)) {
        const auto& v = std::get<VPolytope>(omega);
        for (Eigen::Index j = 0; j < v.V.cols(); ++j) points.push_back(v.V.col(j));
    } else if (std::holds_alternative<Zonotope>(omega)) {
        const auto& z = std::get<Zonotope>(omega);
        const int g = static_cast<int>(z.G.cols());
        if (g <= 12 && (1L << g) <= samples) {
            for (long mask = 0; mask < (1L << g); ++mask) {
                Eigen::VectorXd lam(g);
                for (int i = 0; i < g; ++i) lam(i) = (mask >> i) & 1 ? 1.0 : -1.0;
                points.push_back(z.c + z.G * lam);
            }
        } else {
            Rng rng(0xbadc0de);
            for (int k = 0; k < samples; ++k) {
                Eigen::VectorXd lam(g);
                for (int i = 0; i < g; ++i) lam(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
                points.push_back(z.c + z.G * lam);
            }
        }
    } else {
        const HPolytope hp = as_hpolytope(omega);
        if (n <= 3) {
            points = enumerate_vertices(hp);
        } else {
            // boundary points by ray scaling of the origin-form gauge
            const HPolytope of = to_origin_form(hp);
            Rng rng(0xb0a7);
            for (int k = 0; k < samples; ++k) {
                const Eigen::VectorXd d = rng.unit_vector(n);
                const double g = (of.H * d).maxCoeff();
                if (g > 1e-12) points.push_back(d / g);
            }
        }
    }

    VerificationReport report;
    report.checked = static_cast<int>(points.size());
    for (const auto& x : points) {
        const double margin = one_step_margin(omega, p, x, U, w_verts);
        if (margin > tol) report.violations.push_back({x, margin});
    }
    report.passed = report.violations.empty();
    return report;
}

ContractionResult contract_for_stability(const HPolytope& omega_tilde, const ConvexSet& W) {
    const HPolytope of = omega_tilde.origin_form ? omega_tilde : to_origin_form(omega_tilde);
    double nu = 0.0;
    for (Eigen::Index i = 0; i < of.H.rows(); ++i) {
        const double eta = 1.0 - support(W, of.H.row(i).transpose());
        if (eta <= 0.0)
            throw ConfigError("contract_for_stability: disturbance set too large for contraction");
        nu = std::max(nu, eta);
    }
    if (nu >= 1.0 - 1e-12)
        throw ConfigError("contract_for_stability: need 0 in the interior of W (nu = 1)");
    ContractionResult out;
    out.nu = nu;
    out.omega = HPolytope{of.H / nu, Eigen::VectorXd::Ones(of.H.rows()), true};
    return out;
}

}  // namespace setcbf
