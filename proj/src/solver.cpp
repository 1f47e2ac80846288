#include "setcbf/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "setcbf/errors.hpp"

namespace setcbf {

namespace {

double inf_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

void validate(const QpProblem& p) {
    const auto n = p.P.rows();
    if (p.P.cols() != n) throw ConfigError("solver: P must be square");
    if (p.q.size() != n) throw ConfigError("solver: q size mismatch");
    if (p.A.size() > 0 && p.A.cols() != n) throw ConfigError("solver: A column mismatch");
    const auto m = p.A.rows();
    if (p.lo.size() != m || p.hi.size() != m) throw ConfigError("solver: bound size mismatch");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (p.lo(i) > p.hi(i)) throw ConfigError("solver: lo > hi at row " + std::to_string(i));
    }
    const double pscale = p.P.size() ? p.P.cwiseAbs().maxCoeff() : 0.0;
    const double sym_tol = 1e-12 * std::max(1.0, pscale);
    if (p.P.size() && (p.P - p.P.transpose()).cwiseAbs().maxCoeff() > sym_tol)
        throw ConfigError("solver: P not symmetric");
}

// PSD check: fast LDLT screen, eigensolver only on suspicion.
void check_psd(const Eigen::MatrixXd& P) {
    if (P.rows() == 0) return;
    if (P.isDiagonal(1e-14)) {
        if (P.diagonal().minCoeff() < -1e-8) throw ConfigError("solver: P is not positive semidefinite");
        return;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(P);
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -1e-10 * scale) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) throw ConfigError("solver: P is not positive semidefinite");
}

struct Scaling {
    Eigen::VectorXd D;  // n
    Eigen::VectorXd E;  // m
    double c = 1.0;
};

Scaling ruiz_equilibrate(Eigen::MatrixXd& P, Eigen::VectorXd& q, Eigen::MatrixXd& A,
                         Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
    const Eigen::Index n = P.rows(), m = A.rows();
    Scaling s;
    s.D = Eigen::VectorXd::Ones(n);
    s.E = Eigen::VectorXd::Ones(m);

    for (int pass = 0; pass < 10; ++pass) {
        Eigen::VectorXd dn(n), dm(m);
        for (Eigen::Index j = 0; j < n; ++j) {
            double nrm = inf_norm(P.col(j));
            if (m > 0) nrm = std::max(nrm, inf_norm(A.col(j)));
            dn(j) = (nrm > 1e-12) ? 1.0 / std::sqrt(nrm) : 1.0;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const double nrm = inf_norm(A.row(i).transpose());
            dm(i) = (nrm > 1e-12) ? 1.0 / std::sqrt(nrm) : 1.0;
        }
        P = dn.asDiagonal() * P * dn.asDiagonal();
        q = dn.cwiseProduct(q);
        if (m > 0) {
            A = dm.asDiagonal() * A * dn.asDiagonal();
            lo = lo.cwiseProduct(dm);  // inf * positive stays inf
            hi = hi.cwiseProduct(dm);
        }
        s.D = s.D.cwiseProduct(dn);
        s.E = s.E.cwiseProduct(dm);
    }

    // cost normalization
    double cost_norm = inf_norm(q);
    if (n > 0 && P.size() > 0) {
        double mean_col = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) mean_col += inf_norm(P.col(j));
        mean_col /= static_cast<double>(n);
        cost_norm = std::max(cost_norm, mean_col);
    }
    s.c = 1.0 / std::max(1.0, cost_norm);
    P *= s.c;
    q *= s.c;
    return s;
}

struct Residuals {
    double prim = 0.0;
    double dual = 0.0;
    double eps_prim = 0.0;
    double eps_dual = 0.0;
    double prim_scale = 0.0;  // max(|Ax|, |slack|)
    double dual_scale = 0.0;  // max(|Px|, |A'y|, |q|)
};

struct PolishCandidate {
    Eigen::VectorXd z, y;
    double rp = kInf;
    double rd = kInf;
    bool signs_ok = false;  // dual feasibility of the candidate multipliers
};

// Equality-solve on a detected active set. Degenerate LPs make single-shot
// detection unreliable, so slack-based, dual-based, and combined detections are
// each tried and the best KKT candidate is returned.
PolishCandidate polish_candidate(const QpProblem& p, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& y, double rp) {
    const Eigen::Index n = p.P.rows(), m = p.A.rows();
    const Eigen::VectorXd Az = (m > 0) ? Eigen::VectorXd(p.A * z) : Eigen::VectorXd();
    const double band = std::max(1e-7, 10.0 * rp);
    const double ythresh = 1e-7 * (1.0 + inf_norm(y));

    // side per row: -1 lower, +1 upper, 0 inactive
    auto detect = [&](bool use_slack, bool use_dual) {
        std::vector<int> side(static_cast<std::size_t>(m), 0);
        for (Eigen::Index i = 0; i < m; ++i) {
            const bool lower_ok = std::isfinite(p.lo(i));
            const bool upper_ok = std::isfinite(p.hi(i));
            const double scale_i = std::max({1.0, lower_ok ? std::abs(p.lo(i)) : 0.0,
                                             upper_ok ? std::abs(p.hi(i)) : 0.0});
            if (lower_ok && upper_ok && p.hi(i) - p.lo(i) < 1e-12 * scale_i) {
                side[static_cast<std::size_t>(i)] = -1;  // equality, pin at lo
                continue;
            }
            const bool slack_up = upper_ok && p.hi(i) - Az(i) < band * scale_i;
            const bool slack_lo = lower_ok && Az(i) - p.lo(i) < band * scale_i;
            const bool dual_up = upper_ok && y(i) > ythresh;
            const bool dual_lo = lower_ok && y(i) < -ythresh;
            if ((use_slack && slack_up) || (use_dual && dual_up))
                side[static_cast<std::size_t>(i)] = 1;
            else if ((use_slack && slack_lo) || (use_dual && dual_lo))
                side[static_cast<std::size_t>(i)] = -1;
        }
        return side;
    };

    auto attempt = [&](const std::vector<int>& side) {
        PolishCandidate cand;
        std::vector<Eigen::Index> act;
        for (Eigen::Index i = 0; i < m; ++i)
            if (side[static_cast<std::size_t>(i)] != 0) act.push_back(i);
        const Eigen::Index k = static_cast<Eigen::Index>(act.size());
        Eigen::MatrixXd K(n + k, n + k);
        K.setZero();
        K.topLeftCorner(n, n) = p.P;
        Eigen::VectorXd rhs(n + k);
        rhs.head(n) = -p.q;
        for (Eigen::Index j = 0; j < k; ++j) {
            K.block(n + j, 0, 1, n) = p.A.row(act[j]);
            K.block(0, n + j, n, 1) = p.A.row(act[j]).transpose();
            rhs(n + j) = side[static_cast<std::size_t>(act[j])] > 0 ? p.hi(act[j]) : p.lo(act[j]);
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
        const Eigen::VectorXd sol = cod.solve(rhs);
        cand.z = sol.head(n);
        cand.y = Eigen::VectorXd::Zero(m);
        for (Eigen::Index j = 0; j < k; ++j) cand.y(act[j]) = sol(n + j);
        cand.rp = 0.0;
        cand.signs_ok = true;
        if (m > 0) {
            const Eigen::VectorXd Azn = p.A * cand.z;
            for (Eigen::Index i = 0; i < m; ++i) {
                double v = 0.0;
                if (std::isfinite(p.hi(i))) v = std::max(v, Azn(i) - p.hi(i));
                if (std::isfinite(p.lo(i))) v = std::max(v, p.lo(i) - Azn(i));
                cand.rp = std::max(cand.rp, v);
            }
            for (Eigen::Index j = 0; j < k; ++j) {
                const Eigen::Index i = act[j];
                const bool eq = std::isfinite(p.lo(i)) && std::isfinite(p.hi(i)) &&
                                p.hi(i) - p.lo(i) < 1e-12 * std::max(1.0, std::abs(p.hi(i)));
                if (eq) continue;
                const double yi = cand.y(i);
                if (side[static_cast<std::size_t>(i)] > 0 ? yi < -1e-9 : yi > 1e-9)
                    cand.signs_ok = false;
            }
        }
        Eigen::VectorXd station = p.P * cand.z + p.q;
        if (m > 0) station += p.A.transpose() * cand.y;
        cand.rd = inf_norm(station);
        return cand;
    };

    PolishCandidate best;
    auto consider = [&](const PolishCandidate& cand) {
        const double score = std::max(cand.rp, cand.rd) + (cand.signs_ok ? 0.0 : 1.0);
        if (score < std::max(best.rp, best.rd) + (best.signs_ok ? 0.0 : 1.0)) best = cand;
    };
    std::vector<int> base_side;
    for (const auto& [use_slack, use_dual] :
         {std::pair{false, true}, std::pair{true, false}, std::pair{true, true}}) {
        const std::vector<int> side = detect(use_slack, use_dual);
        consider(attempt(side));
        if (use_slack && use_dual) base_side = side;
        if (best.signs_ok && std::max(best.rp, best.rd) < 1e-12) return best;
    }
    // ambiguous detections (a row within noise of its bound) defeat single-shot
    // polishing; retry with each single non-equality row released
    std::vector<Eigen::Index> droppable;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (base_side[static_cast<std::size_t>(i)] == 0) continue;
        const bool eq = std::isfinite(p.lo(i)) && std::isfinite(p.hi(i)) &&
                        p.hi(i) - p.lo(i) < 1e-12 * std::max(1.0, std::abs(p.hi(i)));
        if (!eq) droppable.push_back(i);
    }
    if (droppable.size() <= 60) {
        for (const Eigen::Index i : droppable) {
            std::vector<int> side = base_side;
            side[static_cast<std::size_t>(i)] = 0;
            consider(attempt(side));
            if (best.signs_ok && std::max(best.rp, best.rd) < 1e-12) break;
        }
    }
    return best;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const SolverSettings& st) {
    validate(problem);
    Eigen::MatrixXd Psym = 0.5 * (problem.P + problem.P.transpose());
    check_psd(Psym);

    const Eigen::Index n = Psym.rows();
    const Eigen::Index m = problem.A.rows();

    // scaled copies
    Eigen::MatrixXd P = Psym;
    Eigen::VectorXd q = problem.q;
    Eigen::MatrixXd A = problem.A;
    Eigen::VectorXd lo = problem.lo, hi = problem.hi;
    Scaling sc;
    if (st.scaling) {
        sc = ruiz_equilibrate(P, q, A, lo, hi);
    } else {
        sc.D = Eigen::VectorXd::Ones(n);
        sc.E = Eigen::VectorXd::Ones(m);
    }

    // per-row rho: stiffer on equality rows
    double rho_base = st.rho;
    auto make_rho = [&](double base) {
        Eigen::VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const bool eq = std::isfinite(lo(i)) && std::isfinite(hi(i)) &&
                            hi(i) - lo(i) < 1e-12 * std::max(1.0, std::abs(hi(i)));
            r(i) = eq ? 1e3 * base : base;
        }
        return r;
    };
    Eigen::VectorXd rho = make_rho(rho_base);

    Eigen::LLT<Eigen::MatrixXd> llt;
    auto refactor = [&]() {
        Eigen::MatrixXd M = P + st.sigma * Eigen::MatrixXd::Identity(n, n);
        if (m > 0) M += A.transpose() * rho.asDiagonal() * A;
        llt.compute(M);
        if (llt.info() != Eigen::Success) throw ConfigError("solver: KKT factorization failed");
    };
    refactor();

    // scaled iterates
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (problem.z0.size() == n) x = sc.D.cwiseInverse().cwiseProduct(problem.z0);
    if (problem.y0.size() == m && m > 0) y = sc.c * sc.E.cwiseInverse().cwiseProduct(problem.y0);
    if (m > 0) zeta = (A * x).cwiseMax(lo).cwiseMin(hi);

    Eigen::VectorXd x_prev = x, y_prev = y;

    QpSolution out;
    out.z = Eigen::VectorXd::Zero(n);
    out.y = Eigen::VectorXd::Zero(m);

    const double q_norm_unscaled = inf_norm(problem.q);
    double y_inf_start = 0.0;

    auto unscaled_residuals = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& zs,
                                  const Eigen::VectorXd& ys) {
        Residuals r;
        const Eigen::VectorXd zu = sc.D.cwiseProduct(xs);
        const Eigen::VectorXd Pz = Psym * zu;
        Eigen::VectorXd station = Pz + problem.q;
        double axu_norm = 0.0, slack_norm = 0.0, aty_norm = 0.0;
        if (m > 0) {
            const Eigen::VectorXd yu = sc.E.cwiseProduct(ys) / sc.c;
            const Eigen::VectorXd Aty = problem.A.transpose() * yu;
            station += Aty;
            aty_norm = inf_norm(Aty);
            const Eigen::VectorXd Axu = problem.A * zu;
            const Eigen::VectorXd slack_u = sc.E.cwiseInverse().cwiseProduct(zs);
            r.prim = inf_norm(Axu - slack_u);
            axu_norm = inf_norm(Axu);
            slack_norm = inf_norm(slack_u);
        }
        r.dual = inf_norm(station);
        r.eps_prim = st.eps_abs + st.eps_rel * std::max(axu_norm, slack_norm);
        r.eps_dual = st.eps_abs + st.eps_rel * q_norm_unscaled;
        r.prim_scale = std::max(axu_norm, slack_norm);
        r.dual_scale = std::max({inf_norm(Pz), aty_norm, q_norm_unscaled});
        return r;
    };

    int iter = 0;
    SolveStatus status = SolveStatus::MaxIterations;
    Residuals res;
    bool early_polished = false;

    const QpProblem unscaled{Psym, problem.q, problem.A, problem.lo, problem.hi, {}, {}};

    for (iter = 1; iter <= st.max_iter; ++iter) {
        // x-update
        Eigen::VectorXd rhs = st.sigma * x - q;
        if (m > 0) rhs += A.transpose() * (rho.cwiseProduct(zeta) - y);
        const Eigen::VectorXd x_tilde = llt.solve(rhs);
        const Eigen::VectorXd x_new = st.alpha * x_tilde + (1.0 - st.alpha) * x;

        Eigen::VectorXd zeta_new = zeta, y_new = y;
        if (m > 0) {
            const Eigen::VectorXd zeta_tilde = A * x_tilde;
            const Eigen::VectorXd v =
                st.alpha * zeta_tilde + (1.0 - st.alpha) * zeta + rho.cwiseInverse().cwiseProduct(y);
            zeta_new = v.cwiseMax(lo).cwiseMin(hi);
            y_new = rho.cwiseProduct(v - zeta_new);
        }

        const Eigen::VectorXd dx = x_new - x;
        const Eigen::VectorXd dy = y_new - y;
        x_prev = x;
        y_prev = y;
        x = x_new;
        zeta = zeta_new;
        y = y_new;

        if (iter % st.check_interval == 0 || iter == st.max_iter) {
            res = unscaled_residuals(x, zeta, y);
            if (res.prim <= res.eps_prim && res.dual <= res.eps_dual) {
                status = SolveStatus::Optimal;
                break;
            }

            // primal infeasibility certificate (delta y)
            if (m > 0) {
                const Eigen::VectorXd dyu = sc.E.cwiseProduct(dy) / sc.c;
                const double dy_norm = inf_norm(dyu);
                if (dy_norm > 1e-14) {
                    bool cert = inf_norm(problem.A.transpose() * dyu) <= st.eps_infeasible * dy_norm;
                    double support = 0.0;
                    for (Eigen::Index i = 0; cert && i < m; ++i) {
                        const double pos = std::max(dyu(i), 0.0), neg = std::min(dyu(i), 0.0);
                        if (!std::isfinite(problem.hi(i)) && pos > st.eps_infeasible * dy_norm) cert = false;
                        if (!std::isfinite(problem.lo(i)) && -neg > st.eps_infeasible * dy_norm) cert = false;
                        if (std::isfinite(problem.hi(i))) support += problem.hi(i) * pos;
                        if (std::isfinite(problem.lo(i))) support += problem.lo(i) * neg;
                    }
                    if (cert && support <= -st.eps_infeasible * dy_norm) {
                        status = SolveStatus::Infeasible;
                        break;
                    }
                }
            }

            // dual infeasibility certificate (delta x) -> unbounded below
            {
                const Eigen::VectorXd dxu = sc.D.cwiseProduct(dx);
                const double dx_norm = inf_norm(dxu);
                if (dx_norm > 1e-14) {
                    bool cert = inf_norm(Psym * dxu) <= st.eps_infeasible * dx_norm &&
                                problem.q.dot(dxu) <= -st.eps_infeasible * dx_norm;
                    if (cert && m > 0) {
                        const Eigen::VectorXd Adx = problem.A * dxu;
                        for (Eigen::Index i = 0; cert && i < m; ++i) {
                            if (std::isfinite(problem.hi(i)) && Adx(i) > st.eps_infeasible * dx_norm)
                                cert = false;
                            if (std::isfinite(problem.lo(i)) && Adx(i) < -st.eps_infeasible * dx_norm)
                                cert = false;
                        }
                    }
                    if (cert) {
                        status = SolveStatus::MaxIterations;
                        out.unbounded = true;
                        break;
                    }
                }
            }

            // divergence window: dual variables exploding while primal residual stuck
            if (iter % 200 == 0 && m > 0) {
                const double y_inf = inf_norm(y);
                if (y_inf > 1e8 * std::max(1.0, y_inf_start) && res.prim > 10.0 * res.eps_prim) {
                    status = SolveStatus::Infeasible;
                    break;
                }
                if (y_inf_start == 0.0) y_inf_start = std::max(y_inf, 1.0);
            }

            if (iter % 200 == 0 && iter < st.max_iter) {
                const double pr = res.prim / std::max(res.prim_scale, 1e-30);
                const double dr = res.dual / std::max(res.dual_scale, 1e-30);

                // a primally settled iterate often pins the exact active set;
                // a sign-consistent machine-precision KKT candidate is optimal
                if (st.polish && pr < 1e-2) {
                    const Eigen::VectorXd zu = sc.D.cwiseProduct(x);
                    const Eigen::VectorXd yu =
                        (m > 0) ? Eigen::VectorXd(sc.E.cwiseProduct(y) / sc.c)
                                : Eigen::VectorXd::Zero(0);
                    const PolishCandidate cand = polish_candidate(unscaled, zu, yu, res.prim);
                    if (cand.signs_ok &&
                        std::max(cand.rp, cand.rd) <= 1e-10 * std::max(1.0, q_norm_unscaled)) {
                        out.z = cand.z;
                        out.y = cand.y;
                        out.primal_residual = cand.rp;
                        out.dual_residual = cand.rd;
                        early_polished = true;
                        status = SolveStatus::Optimal;
                        break;
                    }
                }

                // rho adaptation on a slow cadence with bounded steps
                if (st.adaptive_rho) {
                    const double ratio = std::sqrt(pr / std::max(dr, 1e-30));
                    if (ratio > 5.0 || ratio < 0.2) {
                        const double step = std::clamp(ratio, 0.1, 10.0);
                        rho_base = std::clamp(rho_base * step, 1e-4, 1e4);
                        rho = make_rho(rho_base);
                        refactor();
                    }
                }
            }
        }
    }

    out.status = status;
    out.iterations = std::min(iter, st.max_iter);
    if (early_polished) {
        out.polished = true;
        out.objective = 0.5 * out.z.dot(Psym * out.z) + problem.q.dot(out.z);
        return out;
    }
    out.z = sc.D.cwiseProduct(x);
    out.y = (m > 0) ? Eigen::VectorXd(sc.E.cwiseProduct(y) / sc.c) : Eigen::VectorXd::Zero(0);
    if (status != SolveStatus::Infeasible) {
        res = unscaled_residuals(x, zeta, y);
        out.primal_residual = res.prim;
        out.dual_residual = res.dual;
        if (st.polish && !out.unbounded) {
            const PolishCandidate cand =
                polish_candidate(unscaled, out.z, out.y, out.primal_residual);
            const bool improves =
                status == SolveStatus::Optimal &&
                std::max(cand.rp, cand.rd) <=
                    std::max({out.primal_residual, out.dual_residual, st.eps_abs});
            // a verified KKT point is optimal no matter how the iteration ended
            const bool certifies =
                std::max(cand.rp, cand.rd) <= 1e-10 * std::max(1.0, q_norm_unscaled);
            if (cand.signs_ok && (improves || certifies)) {
                out.z = cand.z;
                out.y = cand.y;
                out.primal_residual = cand.rp;
                out.dual_residual = cand.rd;
                out.polished = true;
                if (certifies) status = SolveStatus::Optimal;
                out.status = status;
            }
        }
        out.objective = 0.5 * out.z.dot(Psym * out.z) + problem.q.dot(out.z);
    }
    return out;
}

QpSolution solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, const SolverSettings& settings) {
    QpProblem p;
    const Eigen::Index n = c.size();
    p.P = Eigen::MatrixXd::Zero(n, n);
    p.q = c;
    p.A = A;
    p.lo = lo;
    p.hi = hi;
    return solve_qp(p, settings);
}

}  // namespace setcbf
