#include "setcbf/stochastic.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "setcbf/errors.hpp"

namespace setcbf {

double spectral_radius(const Eigen::MatrixXd& M) {
    return M.eigenvalues().cwiseAbs().maxCoeff();
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("normal_quantile: level must be in (0, 1); 1 gives an unbounded quantile");
    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double u = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    } else if (p <= phigh) {
        const double u = p - 0.5, t = u * u;
        x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
            (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    // one Halley refinement against erfc
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

TightenedSets tighten_constraints(const LtiModel& model, const Eigen::MatrixXd& K,
                                  const DisturbanceSpec& w, const HPolytope& X,
                                  const Eigen::VectorXd& px, const HPolytope& U,
                                  const Eigen::VectorXd& pu, int horizon_for_prs) {
    model.validate();
    if (!model.G) throw ConfigError("tighten_constraints: model has no disturbance channel");
    const Eigen::MatrixXd Ak = model.A + model.B * K;
    if (spectral_radius(Ak) >= 1.0 - 1e-9)
        throw ConfigError("tighten_constraints: A + BK must be Schur stable");
    if (px.size() != X.H.rows() || pu.size() != U.H.rows())
        throw ConfigError("tighten_constraints: probability level count mismatch");

    const Eigen::MatrixXd& G = *model.G;
    TightenedSets out;
    out.Xbar = X;
    out.Ubar = U;

    if (w.kind == DisturbanceSpec::Kind::Gaussian) {
        if (w.sigma_w.rows() != G.cols() || w.sigma_w.cols() != G.cols())
            throw ConfigError("tighten_constraints: sigma_w dimension mismatch");
        // stationary covariance of e+ = Ak e + G w
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(model.nx(), model.nx());
        const Eigen::MatrixXd add = G * w.sigma_w * G.transpose();
        for (int k = 0; k < horizon_for_prs; ++k) {
            const Eigen::MatrixXd next = Ak * sigma * Ak.transpose() + add;
            const double delta = (next - sigma).cwiseAbs().maxCoeff();
            sigma = next;
            if (delta <= 1e-10) break;
        }
        out.sigma_inf = sigma;
        for (Eigen::Index i = 0; i < X.H.rows(); ++i) {
            const double zp = normal_quantile(px(i));
            const Eigen::VectorXd hrow = X.H.row(i).transpose();
            out.Xbar.b(i) -= zp * std::sqrt(std::max(0.0, hrow.dot(sigma * hrow)));
        }
        for (Eigen::Index j = 0; j < U.H.rows(); ++j) {
            const double zp = normal_quantile(pu(j));
            const Eigen::VectorXd krow = K.transpose() * U.H.row(j).transpose();
            out.Ubar.b(j) -= zp * std::sqrt(std::max(0.0, krow.dot(sigma * krow)));
        }
    } else {
        // bounded support: worst-case accumulated offsets (valid for any level)
        const ConvexSet wset{w.support};
        auto accumulate = [&](const Eigen::VectorXd& dir) {
            double off = 0.0;
            Eigen::MatrixXd Akl = Eigen::MatrixXd::Identity(model.nx(), model.nx());
            for (int l = 0; l < horizon_for_prs; ++l) {
                const double term = support(wset, G.transpose() * (Akl.transpose() * dir));
                off += term;
                if (term <= 1e-12) break;
                Akl = Ak * Akl;
            }
            return off;
        };
        for (Eigen::Index i = 0; i < X.H.rows(); ++i)
            out.Xbar.b(i) -= accumulate(X.H.row(i).transpose());
        for (Eigen::Index j = 0; j < U.H.rows(); ++j)
            out.Ubar.b(j) -= accumulate(K.transpose() * U.H.row(j).transpose());
    }

    auto check_nonempty = [](const HPolytope& p, const char* name) {
        for (Eigen::Index i = 0; i < p.H.rows(); ++i) {
            if (p.b(i) / std::max(p.H.row(i).norm(), 1e-300) <= 1e-10)
                throw ConfigError(std::string("tighten_constraints: probability levels unattainable (") +
                                  name + " emptied)");
        }
    };
    check_nonempty(out.Xbar, "X");
    check_nonempty(out.Ubar, "U");
    return out;
}

StochasticFilter::StochasticFilter(StochasticFilterSpec spec)
    : spec_(std::move(spec)), nominal_(spec_.nominal) {
    spec_.model.validate();
    const Eigen::MatrixXd Ak = spec_.model.A + spec_.model.B * spec_.K;
    if (spectral_radius(Ak) >= 1.0 - 1e-9)
        throw ConfigError("stochastic filter: A + BK must be Schur stable");
}

void StochasticFilter::reset() {
    z_.reset();
    nominal_.reset();
}

StochasticFilter::StepResult StochasticFilter::step(const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& u_des) {
    if (!z_) z_ = x;  // z(0) = x(0)
    const Eigen::VectorXd e = x - *z_;
    const Eigen::VectorXd correction = spec_.K * e;
    // min G(v + pi(e), u_des) over v -> nominal deviation target u_des - K e
    const Eigen::VectorXd v_des = u_des - correction;
    FilterResult nominal = nominal_.step(*z_, v_des);
    StepResult out;
    out.u = nominal.u + correction;
    out.z_next = spec_.model.A * (*z_) + spec_.model.B * nominal.u;
    out.nominal = nominal;
    z_ = out.z_next;
    return out;
}

}  // namespace setcbf
