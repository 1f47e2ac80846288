#include "setcbf/sets.hpp"

#include <algorithm>
#include <cmath>

#include "setcbf/errors.hpp"
#include "setcbf/rng.hpp"

namespace setcbf {

namespace {

struct DimVisitor {
    int operator()(const HPolytope& p) const { return static_cast<int>(p.H.cols()); }
    int operator()(const VPolytope& p) const { return static_cast<int>(p.V.rows()); }
    int operator()(const Zonotope& z) const { return static_cast<int>(z.c.size()); }
    int operator()(const Box& b) const { return static_cast<int>(b.lo.size()); }
};

// L1 distance from x to the set, as an elastic LP over the given equality system
// M * lambda (+ slacks) = rhs with lambda bounds [llo, lhi] and optional sum row.
double l1_distance_lp(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs,
                      const Eigen::VectorXd& llo, const Eigen::VectorXd& lhi, bool sum_to_one) {
    const Eigen::Index n = M.rows();
    const Eigen::Index k = M.cols();
    const Eigen::Index nv = k + 2 * n;  // lambda, s+, s-
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c.tail(2 * n).setOnes();

    const Eigen::Index rows = n + (sum_to_one ? 1 : 0) + k + 2 * n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, nv);
    Eigen::VectorXd lo(rows), hi(rows);
    Eigen::Index r = 0;
    // M lambda + s+ - s- = rhs
    A.block(0, 0, n, k) = M;
    A.block(0, k, n, n) = Eigen::MatrixXd::Identity(n, n);
    A.block(0, k + n, n, n) = -Eigen::MatrixXd::Identity(n, n);
    lo.segment(0, n) = rhs;
    hi.segment(0, n) = rhs;
    r = n;
    if (sum_to_one) {
        A.block(r, 0, 1, k).setOnes();
        lo(r) = 1.0;
        hi(r) = 1.0;
        ++r;
    }
    A.block(r, 0, k, k) = Eigen::MatrixXd::Identity(k, k);
    lo.segment(r, k) = llo;
    hi.segment(r, k) = lhi;
    r += k;
    A.block(r, k, 2 * n, 2 * n) = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    lo.segment(r, 2 * n).setZero();
    hi.segment(r, 2 * n).setConstant(kInf);

    SolverSettings st;
    st.eps_abs = st.eps_rel = 1e-10;  // membership queries compare against tight tolerances
    st.max_iter = 50000;
    const QpSolution sol = solve_lp(c, A, lo, hi, st);
    if (sol.status != SolveStatus::Optimal) return kInf;
    return std::max(0.0, sol.objective);
}

void normalize_rows(Eigen::MatrixXd& H, Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        const double nrm = H.row(i).norm();
        if (nrm > 1e-300) {
            H.row(i) /= nrm;
            b(i) /= nrm;
        }
    }
}

struct RowSet {
    Eigen::MatrixXd H;
    Eigen::VectorXd b;
};

RowSet dedupe_rows(const Eigen::MatrixXd& H, const Eigen::VectorXd& b) {
    const Eigen::Index m = H.rows();
    std::vector<Eigen::Index> keep;
    std::vector<char> dead(m, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (dead[i]) continue;
        Eigen::Index best = i;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            if (dead[j]) continue;
            if ((H.row(i) - H.row(j)).cwiseAbs().maxCoeff() <= 1e-9) {
                dead[j] = 1;
                if (b(j) < b(best)) best = j;
            }
        }
        keep.push_back(best);
    }
    RowSet out;
    out.H.resize(static_cast<Eigen::Index>(keep.size()), H.cols());
    out.b.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.H.row(static_cast<Eigen::Index>(k)) = H.row(keep[k]);
        out.b(static_cast<Eigen::Index>(k)) = b(keep[k]);
    }
    return out;
}

// LP-based removal; rows assumed normalized. Keeps the represented set identical.
RowSet reduce_rows(Eigen::MatrixXd H, Eigen::VectorXd b, double tol) {
    RowSet rs = dedupe_rows(H, b);
    const Eigen::Index n = rs.H.cols();
    Eigen::Index m = rs.H.rows();
    if (m <= 1) return rs;

    std::vector<char> removed(m, 0);
    std::vector<Eigen::VectorXd> witnesses;

    auto feasible_for_others = [&](const Eigen::VectorXd& x, Eigen::Index skip) {
        for (Eigen::Index r = 0; r < m; ++r) {
            if (removed[r] || r == skip) continue;
            if (rs.H.row(r).dot(x) > rs.b(r) + 1e-9) return false;
        }
        return true;
    };

    for (Eigen::Index i = 0; i < m; ++i) {
        // witness shortcut: a point feasible for the other rows that violates row i
        bool necessary = false;
        for (const auto& w : witnesses) {
            if (rs.H.row(i).dot(w) > rs.b(i) + tol && feasible_for_others(w, i)) {
                necessary = true;
                break;
            }
        }
        if (necessary) continue;

        std::vector<Eigen::Index> others;
        for (Eigen::Index r = 0; r < m; ++r)
            if (!removed[r] && r != i) others.push_back(r);
        Eigen::MatrixXd A(static_cast<Eigen::Index>(others.size()) + 1, n);
        Eigen::VectorXd lo(A.rows()), hi(A.rows());
        for (std::size_t k = 0; k < others.size(); ++k) {
            A.row(static_cast<Eigen::Index>(k)) = rs.H.row(others[k]);
            lo(static_cast<Eigen::Index>(k)) = -kInf;
            hi(static_cast<Eigen::Index>(k)) = rs.b(others[k]);
        }
        A.row(A.rows() - 1) = rs.H.row(i);
        lo(A.rows() - 1) = -kInf;
        hi(A.rows() - 1) = rs.b(i) + 1.0;  // keeps the relaxed LP bounded

        const QpSolution sol = solve_lp(-rs.H.row(i).transpose(), A, lo, hi);
        if (sol.status == SolveStatus::Optimal) {
            const double maxval = -sol.objective;
            if (maxval <= rs.b(i) + tol) {
                removed[i] = 1;
            } else {
                witnesses.push_back(sol.z);
            }
        }
        // on solver trouble the row is kept: harmless for correctness
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m; ++i)
        if (!removed[i]) keep.push_back(i);
    RowSet out;
    out.H.resize(static_cast<Eigen::Index>(keep.size()), n);
    out.b.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.H.row(static_cast<Eigen::Index>(k)) = rs.H.row(keep[k]);
        out.b(static_cast<Eigen::Index>(k)) = rs.b(keep[k]);
    }
    return out;
}

}  // namespace

int set_dim(const ConvexSet& s) { return std::visit(DimVisitor{}, s); }

bool contains(const ConvexSet& s, const Eigen::VectorXd& x, double tol) {
    if (set_dim(s) != x.size()) throw ConfigError("contains: dimension mismatch");
    if (std::holds_alternative<HPolytope>(s)) {
        const auto& p = std::get<HPolytope>(s);
        if (p.H.rows() == 0) return true;
        return (p.H * x - p.b).maxCoeff() <= tol;
    }
    if (std::holds_alternative<Box>(s)) {
        const auto& b = std::get<Box>(s);
        return (x - b.hi).maxCoeff() <= tol && (b.lo - x).maxCoeff() <= tol;
    }
    if (std::holds_alternative<VPolytope>(s)) {
        const auto& v = std::get<VPolytope>(s);
        const Eigen::Index k = v.V.cols();
        return l1_distance_lp(v.V, x, Eigen::VectorXd::Zero(k),
                              Eigen::VectorXd::Constant(k, kInf), true) <= tol;
    }
    const auto& z = std::get<Zonotope>(s);
    const Eigen::Index k = z.G.cols();
    return l1_distance_lp(z.G, x - z.c, Eigen::VectorXd::Constant(k, -1.0),
                          Eigen::VectorXd::Ones(k), false) <= tol;
}

ConvexSet scale(const ConvexSet& s, double gamma) {
    if (gamma < 0.0) throw ConfigError("scale: negative factor");
    if (std::holds_alternative<HPolytope>(s)) {
        const auto& p = std::get<HPolytope>(s);
        HPolytope out{p.H, gamma * p.b, p.origin_form && gamma == 1.0};
        return out;
    }
    if (std::holds_alternative<VPolytope>(s)) {
        return VPolytope{gamma * std::get<VPolytope>(s).V};
    }
    if (std::holds_alternative<Zonotope>(s)) {
        const auto& z = std::get<Zonotope>(s);
        return Zonotope{gamma * z.c, gamma * z.G};
    }
    const auto& b = std::get<Box>(s);
    return Box{gamma * b.lo, gamma * b.hi};
}

double support(const ConvexSet& s, const Eigen::VectorXd& d) {
    if (set_dim(s) != d.size()) throw ConfigError("support: dimension mismatch");
    if (std::holds_alternative<Box>(s)) {
        const auto& b = std::get<Box>(s);
        double v = 0.0;
        for (Eigen::Index i = 0; i < d.size(); ++i) v += std::max(d(i) * b.lo(i), d(i) * b.hi(i));
        return v;
    }
    if (std::holds_alternative<Zonotope>(s)) {
        const auto& z = std::get<Zonotope>(s);
        return z.c.dot(d) + (z.G.transpose() * d).cwiseAbs().sum();
    }
    if (std::holds_alternative<VPolytope>(s)) {
        const auto& v = std::get<VPolytope>(s);
        return (v.V.transpose() * d).maxCoeff();
    }
    const auto& p = std::get<HPolytope>(s);
    if (d.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    if (p.H.rows() == 0) throw ConfigError("support: unbounded set");
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(p.H.rows(), -kInf);
    const QpSolution sol = solve_lp(-d, p.H, lo, p.b);
    if (sol.unbounded || sol.status == SolveStatus::MaxIterations)
        throw ConfigError("support: unbounded set");
    if (sol.status != SolveStatus::Optimal) throw ConfigError("support: infeasible polytope");
    return -sol.objective;
}

HPolytope pontryagin_diff(const HPolytope& a, const ConvexSet& w, bool* empty) {
    if (set_dim(w) != a.H.cols()) throw ConfigError("pontryagin_diff: dimension mismatch");
    if (!contains(w, Eigen::VectorXd::Zero(a.H.cols()), 1e-7))
        throw ConfigError("pontryagin_diff: subtrahend must contain the origin");
    HPolytope out;
    out.H = a.H;
    out.b = a.b;
    for (Eigen::Index i = 0; i < a.H.rows(); ++i)
        out.b(i) -= support(w, a.H.row(i).transpose());
    out.origin_form = false;
    if (empty) *empty = hpoly_is_empty(out);
    return out;
}

HPolytope affine_preimage(const HPolytope& omega, const Eigen::MatrixXd& A,
                          const Eigen::MatrixXd& B, const HPolytope& u_set,
                          const std::optional<ConvexSet>& tightening, const FmOptions& opts) {
    const Eigen::Index nx = A.cols();
    const Eigen::Index nu = B.cols();
    if (omega.H.cols() != A.rows() || A.rows() != B.rows())
        throw ConfigError("affine_preimage: dimension mismatch");
    if (u_set.H.cols() != nu) throw ConfigError("affine_preimage: input set dimension mismatch");

    Eigen::MatrixXd H(omega.H.rows() + u_set.H.rows(), nx + nu);
    Eigen::VectorXd b(H.rows());
    H.topLeftCorner(omega.H.rows(), nx) = omega.H * A;
    H.topRightCorner(omega.H.rows(), nu) = omega.H * B;
    for (Eigen::Index i = 0; i < omega.H.rows(); ++i) {
        b(i) = omega.b(i);
        if (tightening) b(i) -= support(*tightening, omega.H.row(i).transpose());
    }
    H.bottomLeftCorner(u_set.H.rows(), nx).setZero();
    H.bottomRightCorner(u_set.H.rows(), nu) = u_set.H;
    b.tail(u_set.H.rows()) = u_set.b;
    normalize_rows(H, b);

    std::vector<Eigen::Index> cols_left;
    for (Eigen::Index j = 0; j < nu; ++j) cols_left.push_back(nx + j);

    const double coef_tol = 1e-11;
    while (!cols_left.empty()) {
        // greedy: eliminate the column with the smallest projected growth
        std::size_t pick = 0;
        long best_growth = std::numeric_limits<long>::max();
        for (std::size_t k = 0; k < cols_left.size(); ++k) {
            long p = 0, q = 0;
            for (Eigen::Index i = 0; i < H.rows(); ++i) {
                const double a = H(i, cols_left[k]);
                if (a > coef_tol) ++p;
                else if (a < -coef_tol) ++q;
            }
            const long growth = p * q - (p + q);
            if (growth < best_growth) {
                best_growth = growth;
                pick = k;
            }
        }
        const Eigen::Index col = cols_left[pick];
        cols_left.erase(cols_left.begin() + static_cast<long>(pick));

        std::vector<Eigen::Index> pos, neg, zer;
        for (Eigen::Index i = 0; i < H.rows(); ++i) {
            const double a = H(i, col);
            if (a > coef_tol) pos.push_back(i);
            else if (a < -coef_tol) neg.push_back(i);
            else zer.push_back(i);
        }
        const std::size_t new_rows = zer.size() + pos.size() * neg.size();
        if (new_rows > opts.row_cap)
            throw ResourceError("affine_preimage: projection row cap exceeded");

        Eigen::MatrixXd Hn(static_cast<Eigen::Index>(new_rows), H.cols());
        Eigen::VectorXd bn(Hn.rows());
        Eigen::Index r = 0;
        for (const auto i : zer) {
            Hn.row(r) = H.row(i);
            Hn(r, col) = 0.0;
            bn(r) = b(i);
            ++r;
        }
        for (const auto i : pos) {
            for (const auto j : neg) {
                const double ai = H(i, col), aj = H(j, col);
                Hn.row(r) = ai * H.row(j) - aj * H.row(i);
                Hn(r, col) = 0.0;
                bn(r) = ai * b(j) - aj * b(i);
                ++r;
            }
        }
        normalize_rows(Hn, bn);

        // drop trivial rows over the remaining coordinates
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < Hn.rows(); ++i) {
            double coef_max = Hn.row(i).head(nx).cwiseAbs().maxCoeff();
            for (const auto cl : cols_left) coef_max = std::max(coef_max, std::abs(Hn(i, cl)));
            if (coef_max <= coef_tol) {
                if (bn(i) < -1e-9) keep.push_back(i);  // infeasibility marker row
            } else {
                keep.push_back(i);
            }
        }
        Eigen::MatrixXd Hk(static_cast<Eigen::Index>(keep.size()), H.cols());
        Eigen::VectorXd bk(Hk.rows());
        for (std::size_t k = 0; k < keep.size(); ++k) {
            Hk.row(static_cast<Eigen::Index>(k)) = Hn.row(keep[k]);
            bk(static_cast<Eigen::Index>(k)) = bn(keep[k]);
        }

        // redundancy removal on the active coordinates
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < nx; ++j) active.push_back(j);
        for (const auto cl : cols_left) active.push_back(cl);
        Eigen::MatrixXd Ha(Hk.rows(), static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) Ha.col(static_cast<Eigen::Index>(k)) = Hk.col(active[k]);
        RowSet reduced = reduce_rows(Ha, bk, opts.redundancy_tol);
        H = Eigen::MatrixXd::Zero(reduced.H.rows(), nx + nu);
        for (std::size_t k = 0; k < active.size(); ++k)
            H.col(active[k]) = reduced.H.col(static_cast<Eigen::Index>(k));
        b = reduced.b;
    }

    HPolytope out;
    out.H = H.leftCols(nx);
    out.b = b;
    return out;
}

HPolytope remove_redundant(const HPolytope& p, double tol) {
    if (p.H.rows() == 0) return p;
    if (hpoly_is_empty(p)) throw ConfigError("remove_redundant: empty polytope");
    Eigen::MatrixXd H = p.H;
    Eigen::VectorXd b = p.b;
    normalize_rows(H, b);
    RowSet rs = reduce_rows(H, b, tol);
    return HPolytope{rs.H, rs.b, false};
}

double set_distance(const ConvexSet& a, const ConvexSet& b, int directions, std::uint64_t seed) {
    const int n = set_dim(a);
    if (set_dim(b) != n) throw ConfigError("set_distance: dimension mismatch");
    Rng rng(seed);
    double gap = 0.0;
    for (int k = 0; k < directions; ++k) {
        const Eigen::VectorXd d = rng.unit_vector(n);
        gap = std::max(gap, std::abs(support(a, d) - support(b, d)));
    }
    return gap;
}

HPolytope to_origin_form(const HPolytope& p) {
    HPolytope out;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < p.H.rows(); ++i) {
        const double nrm = p.H.row(i).norm();
        if (nrm <= 1e-300) {
            if (p.b(i) < 0) throw ConfigError("to_origin_form: empty polytope");
            continue;  // trivial row
        }
        if (p.b(i) <= 1e-12)
            throw ConfigError("to_origin_form: origin is not strictly in the interior");
        keep.push_back(i);
    }
    out.H.resize(static_cast<Eigen::Index>(keep.size()), p.H.cols());
    out.b = Eigen::VectorXd::Ones(out.H.rows());
    for (std::size_t k = 0; k < keep.size(); ++k)
        out.H.row(static_cast<Eigen::Index>(k)) = p.H.row(keep[k]) / p.b(keep[k]);
    out.origin_form = true;
    return out;
}

HPolytope box_to_hpoly(const Box& b) {
    const Eigen::Index n = b.lo.size();
    HPolytope out;
    out.H = Eigen::MatrixXd::Zero(2 * n, n);
    out.b.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.H(2 * i, i) = 1.0;
        out.b(2 * i) = b.hi(i);
        out.H(2 * i + 1, i) = -1.0;
        out.b(2 * i + 1) = -b.lo(i);
    }
    return out;
}

HPolytope as_hpolytope(const ConvexSet& s) {
    if (std::holds_alternative<HPolytope>(s)) return std::get<HPolytope>(s);
    if (std::holds_alternative<Box>(s)) return box_to_hpoly(std::get<Box>(s));
    throw ConfigError("as_hpolytope: representation has no exact H-form conversion");
}

bool hpoly_is_empty(const HPolytope& p, double tol) {
    if (p.H.rows() == 0) return false;
    const Eigen::Index n = p.H.cols();
    // min t  s.t.  Hx - t <= b
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c(n) = 1.0;
    Eigen::MatrixXd A(p.H.rows(), n + 1);
    A.leftCols(n) = p.H;
    A.col(n).setConstant(-1.0);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(p.H.rows(), -kInf);
    const QpSolution sol = solve_lp(c, A, lo, p.b);
    if (sol.unbounded) return false;
    if (sol.status != SolveStatus::Optimal) return false;
    return sol.objective > tol;
}

bool check_bounded(const HPolytope& p) {
    const Eigen::Index n = p.H.cols();
    if (p.H.rows() == 0) return n == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const double sgn : {1.0, -1.0}) {
            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            d(i) = sgn;
            try {
                support(ConvexSet{p}, d);
            } catch (const ConfigError&) {
                return false;
            }
        }
    }
    return true;
}

HPolytope intersect(const HPolytope& a, const HPolytope& b) {
    if (a.H.cols() != b.H.cols()) throw ConfigError("intersect: dimension mismatch");
    HPolytope out;
    out.H.resize(a.H.rows() + b.H.rows(), a.H.cols());
    out.H << a.H, b.H;
    out.b.resize(a.b.size() + b.b.size());
    out.b << a.b, b.b;
    return out;
}

std::vector<Eigen::VectorXd> enumerate_vertices(const HPolytope& p, double tol) {
    const Eigen::Index n = p.H.cols();
    const Eigen::Index m = p.H.rows();
    std::vector<Eigen::VectorXd> verts;
    auto feasible = [&](const Eigen::VectorXd& x) {
        return m == 0 || (p.H * x - p.b).maxCoeff() <= 1e-7;
    };
    auto push_unique = [&](const Eigen::VectorXd& x) {
        for (const auto& v : verts)
            if ((v - x).norm() <= 1e-8) return;
        verts.push_back(x);
    };
    if (n == 1) {
        double lo = -kInf, hi = kInf;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double h = p.H(i, 0);
            if (h > tol) hi = std::min(hi, p.b(i) / h);
            else if (h < -tol) lo = std::max(lo, p.b(i) / h);
        }
        if (lo <= hi + tol) {
            verts.push_back(Eigen::VectorXd::Constant(1, lo));
            if (hi > lo + 1e-12) verts.push_back(Eigen::VectorXd::Constant(1, hi));
        }
        return verts;
    }
    if (n == 2) {
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                Eigen::Matrix2d M;
                M.row(0) = p.H.row(i);
                M.row(1) = p.H.row(j);
                if (std::abs(M.determinant()) < 1e-10) continue;
                const Eigen::Vector2d x = M.inverse() * Eigen::Vector2d(p.b(i), p.b(j));
                if (feasible(x)) push_unique(x);
            }
        }
        // order counter-clockwise around the centroid
        if (verts.size() > 2) {
            Eigen::Vector2d c = Eigen::Vector2d::Zero();
            for (const auto& v : verts) c += v;
            c /= static_cast<double>(verts.size());
            std::sort(verts.begin(), verts.end(), [&](const auto& a, const auto& b2) {
                return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b2(1) - c(1), b2(0) - c(0));
            });
        }
        return verts;
    }
    if (n == 3) {
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = i + 1; j < m; ++j)
                for (Eigen::Index k = j + 1; k < m; ++k) {
                    Eigen::Matrix3d M;
                    M.row(0) = p.H.row(i);
                    M.row(1) = p.H.row(j);
                    M.row(2) = p.H.row(k);
                    if (std::abs(M.determinant()) < 1e-10) continue;
                    const Eigen::Vector3d x =
                        M.inverse() * Eigen::Vector3d(p.b(i), p.b(j), p.b(k));
                    if (feasible(x)) push_unique(x);
                }
        return verts;
    }
    throw ConfigError("enumerate_vertices: only supported up to dimension 3");
}

double inscribed_radius(const ConvexSet& s, int sample_dirs) {
    const int n = set_dim(s);
    if (std::holds_alternative<HPolytope>(s)) {
        const auto& p = std::get<HPolytope>(s);
        double r = kInf;
        for (Eigen::Index i = 0; i < p.H.rows(); ++i) {
            const double nrm = p.H.row(i).norm();
            if (nrm > 1e-300) r = std::min(r, p.b(i) / nrm);
        }
        return r;
    }
    if (std::holds_alternative<Box>(s)) {
        const auto& b = std::get<Box>(s);
        return std::min(b.hi.minCoeff(), (-b.lo).minCoeff());
    }
    // sampled estimate: max step along each direction before leaving the set
    Rng rng(0x1a5cbf);
    double r = kInf;
    for (int k = 0; k < sample_dirs; ++k) {
        const Eigen::VectorXd d = rng.unit_vector(n);
        double t = kInf;
        if (std::holds_alternative<Zonotope>(s)) {
            const auto& z = std::get<Zonotope>(s);
            const Eigen::Index g = z.G.cols();
            // max t s.t. t d = c + G lambda, |lambda| <= 1
            Eigen::VectorXd c = Eigen::VectorXd::Zero(g + 1);
            c(g) = -1.0;
            Eigen::MatrixXd A(n + g + 1, g + 1);
            A.setZero();
            A.topLeftCorner(n, g) = z.G;
            A.block(0, g, n, 1) = -d;
            A.block(n, 0, g, g) = Eigen::MatrixXd::Identity(g, g);
            A(n + g, g) = 1.0;
            Eigen::VectorXd lo(n + g + 1), hi(n + g + 1);
            lo.head(n) = -z.c;
            hi.head(n) = -z.c;
            lo.segment(n, g).setConstant(-1.0);
            hi.segment(n, g).setOnes();
            lo(n + g) = 0.0;
            hi(n + g) = kInf;
            const QpSolution sol = solve_lp(c, A, lo, hi);
            t = (sol.status == SolveStatus::Optimal) ? -sol.objective : 0.0;
        } else {
            const auto& v = std::get<VPolytope>(s);
            const Eigen::Index kv = v.V.cols();
            Eigen::VectorXd c = Eigen::VectorXd::Zero(kv + 1);
            c(kv) = -1.0;
            Eigen::MatrixXd A(n + 1 + kv + 1, kv + 1);
            A.setZero();
            A.topLeftCorner(n, kv) = v.V;
            A.block(0, kv, n, 1) = -d;
            A.block(n, 0, 1, kv).setOnes();
            A.block(n + 1, 0, kv, kv) = Eigen::MatrixXd::Identity(kv, kv);
            A(n + 1 + kv, kv) = 1.0;
            Eigen::VectorXd lo(A.rows()), hi(A.rows());
            lo.head(n).setZero();
            hi.head(n).setZero();
            lo(n) = 1.0;
            hi(n) = 1.0;
            lo.segment(n + 1, kv).setZero();
            hi.segment(n + 1, kv).setConstant(kInf);
            lo(n + 1 + kv) = 0.0;
            hi(n + 1 + kv) = kInf;
            const QpSolution sol = solve_lp(c, A, lo, hi);
            t = (sol.status == SolveStatus::Optimal) ? -sol.objective : 0.0;
        }
        r = std::min(r, t);
        if (r <= 0.0) return 0.0;
    }
    return r;
}

}  // namespace setcbf
