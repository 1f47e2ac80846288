#pragma once

// Test-only oracles, independent of the library solve paths they cross-check.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "setcbf/rng.hpp"

namespace oracles {

// Global minimum of min 1/2 z'Pz + q'z s.t. lo <= Az <= hi by enumerating
// active subsets (size <= n) and keeping the best feasible stationary point.
struct ActiveSetResult {
    bool found = false;
    double objective = std::numeric_limits<double>::infinity();
    Eigen::VectorXd z;
};

inline ActiveSetResult active_set_enumeration(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                                              const Eigen::MatrixXd& A, const Eigen::VectorXd& lo,
                                              const Eigen::VectorXd& hi, double feas_tol = 1e-7) {
    const Eigen::Index n = P.rows();
    const Eigen::Index m = A.rows();
    ActiveSetResult best;

    auto feasible = [&](const Eigen::VectorXd& z) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double v = A.row(i).dot(z);
            if (v > hi(i) + feas_tol || v < lo(i) - feas_tol) return false;
        }
        return true;
    };
    auto consider = [&](const Eigen::VectorXd& z) {
        if (!z.allFinite() || !feasible(z)) return;
        const double obj = 0.5 * z.dot(P * z) + q.dot(z);
        if (obj < best.objective) {
            best.objective = obj;
            best.z = z;
            best.found = true;
        }
    };

    std::vector<Eigen::Index> subset;
    std::vector<int> side;  // 0 = at lo, 1 = at hi

    std::function<void(Eigen::Index)> rec = [&](Eigen::Index start) {
        {
            const Eigen::Index k = static_cast<Eigen::Index>(subset.size());
            Eigen::MatrixXd K(n + k, n + k);
            K.setZero();
            K.topLeftCorner(n, n) = P;
            Eigen::VectorXd rhs(n + k);
            rhs.head(n) = -q;
            for (Eigen::Index j = 0; j < k; ++j) {
                K.block(n + j, 0, 1, n) = A.row(subset[static_cast<std::size_t>(j)]);
                K.block(0, n + j, n, 1) = A.row(subset[static_cast<std::size_t>(j)]).transpose();
                rhs(n + j) = side[static_cast<std::size_t>(j)]
                                 ? hi(subset[static_cast<std::size_t>(j)])
                                 : lo(subset[static_cast<std::size_t>(j)]);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
            if (lu.isInvertible()) consider(lu.solve(rhs).head(n));
        }
        if (static_cast<Eigen::Index>(subset.size()) >= n) return;
        for (Eigen::Index i = start; i < m; ++i) {
            for (int sd : {0, 1}) {
                if (sd == 0 && !std::isfinite(lo(i))) continue;
                if (sd == 1 && !std::isfinite(hi(i))) continue;
                subset.push_back(i);
                side.push_back(sd);
                rec(i + 1);
                subset.pop_back();
                side.pop_back();
            }
        }
    };
    rec(0);
    return best;
}

// 30-term Taylor matrix exponential with scaling and squaring.
inline Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& M) {
    int s = 0;
    double nrm = M.cwiseAbs().rowwise().sum().maxCoeff();
    while (nrm > 0.5) {
        nrm /= 2.0;
        ++s;
    }
    const Eigen::MatrixXd Ms = M / std::pow(2.0, s);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(M.rows(), M.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = (term * Ms) / static_cast<double>(k);
        sum += term;
    }
    for (int k = 0; k < s; ++k) sum = sum * sum;
    return sum;
}

// dense grid over a box in 2-D
inline std::vector<Eigen::VectorXd> grid_2d(double lo, double hi, int n_per_axis) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < n_per_axis; ++i) {
        for (int j = 0; j < n_per_axis; ++j) {
            Eigen::VectorXd p(2);
            p(0) = lo + (hi - lo) * i / (n_per_axis - 1.0);
            p(1) = lo + (hi - lo) * j / (n_per_axis - 1.0);
            pts.push_back(p);
        }
    }
    return pts;
}

// random bounded polytope around the origin: box plus random cut rows
inline Eigen::MatrixXd random_polytope_rows(setcbf::Rng& rng, int n, int extra_rows,
                                            Eigen::VectorXd& b_out) {
    Eigen::MatrixXd H(2 * n + extra_rows, n);
    b_out.resize(2 * n + extra_rows);
    for (int i = 0; i < n; ++i) {
        H.row(2 * i).setZero();
        H(2 * i, i) = 1.0;
        b_out(2 * i) = rng.uniform(0.5, 2.0);
        H.row(2 * i + 1).setZero();
        H(2 * i + 1, i) = -1.0;
        b_out(2 * i + 1) = rng.uniform(0.5, 2.0);
    }
    for (int r = 0; r < extra_rows; ++r) {
        const Eigen::VectorXd d = rng.unit_vector(n);
        H.row(2 * n + r) = d.transpose();
        b_out(2 * n + r) = rng.uniform(0.3, 2.0);
    }
    return H;
}

}  // namespace oracles
