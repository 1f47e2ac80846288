#include "setcbf/approx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "setcbf/errors.hpp"
#include "setcbf/rng.hpp"

namespace setcbf {

namespace {

std::vector<std::vector<int>> monomial_exponents(int dim, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dim, 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == dim) {
            out.push_back(cur);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            cur[pos] = e;
            rec(pos + 1, remaining - e);
        }
        cur[pos] = 0;
    };
    rec(0, degree);
    return out;
}

double monomial(const std::vector<int>& exps, const Eigen::VectorXd& x) {
    double v = 1.0;
    for (std::size_t i = 0; i < exps.size(); ++i)
        for (int e = 0; e < exps[i]; ++e) v *= x(static_cast<Eigen::Index>(i));
    return v;
}

struct ForwardPass {
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per hidden layer
    std::vector<Eigen::MatrixXd> post;  // activations per hidden layer
    Eigen::RowVectorXd out;
};

ForwardPass forward(const std::vector<Eigen::MatrixXd>& W, const std::vector<Eigen::VectorXd>& b,
                    const Eigen::MatrixXd& X) {
    ForwardPass f;
    Eigen::MatrixXd cur = X;
    for (std::size_t l = 0; l + 1 < W.size(); ++l) {
        Eigen::MatrixXd z = (W[l] * cur).colwise() + b[l];
        f.pre.push_back(z);
        f.post.push_back(z.array().tanh().matrix());
        cur = f.post.back();
    }
    f.out = (W.back() * cur).colwise() + b.back();
    return f;
}

}  // namespace

double ApproxCbf::gamma_hat(const Eigen::VectorXd& x) const {
    if (model == FitConfig::Model::Polynomial) {
        double v = 0.0;
        for (Eigen::Index k = 0; k < coeffs.size(); ++k)
            v += coeffs(k) * monomial(exponents[static_cast<std::size_t>(k)], x);
        return v;
    }
    const Eigen::VectorXd xn = (x - in_shift).cwiseProduct(in_scale);
    Eigen::VectorXd cur = xn;
    for (std::size_t l = 0; l + 1 < weights.size(); ++l)
        cur = ((weights[l] * cur + biases[l]).array().tanh()).matrix();
    return (weights.back() * cur + biases.back())(0) * out_scale;
}

Eigen::VectorXd ApproxCbf::gamma_gradient(const Eigen::VectorXd& x) const {
    if (model == FitConfig::Model::Polynomial) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
            const auto& exps = exponents[static_cast<std::size_t>(k)];
            for (Eigen::Index d = 0; d < x.size(); ++d) {
                const int e = exps[static_cast<std::size_t>(d)];
                if (e == 0) continue;
                double v = coeffs(k) * e;
                for (Eigen::Index j = 0; j < x.size(); ++j) {
                    const int ej = exps[static_cast<std::size_t>(j)] - (j == d ? 1 : 0);
                    for (int q = 0; q < ej; ++q) v *= x(j);
                }
                g(d) += v;
            }
        }
        return g;
    }
    const Eigen::VectorXd xn = (x - in_shift).cwiseProduct(in_scale);
    std::vector<Eigen::VectorXd> post;
    Eigen::VectorXd cur = xn;
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
        cur = ((weights[l] * cur + biases[l]).array().tanh()).matrix();
        post.push_back(cur);
    }
    Eigen::VectorXd grad = weights.back().row(0).transpose();
    for (std::size_t l = weights.size() - 1; l-- > 0;) {
        const Eigen::VectorXd dtanh =
            (1.0 - post[l].array().square()).matrix();
        grad = weights[l].transpose() * grad.cwiseProduct(dtanh);
    }
    return out_scale * grad.cwiseProduct(in_scale);
}

double ApproxCbf::evaluate(const Eigen::VectorXd& x) const { return 1.0 - gamma_hat(x); }

bool ApproxCbf::in_domain(const Eigen::VectorXd& x) const {
    return (x - domain.hi).maxCoeff() <= 0.0 && (domain.lo - x).maxCoeff() <= 0.0;
}

Dataset sample_dataset(const GammaFn& gamma_fn, const Box& domain, int n, std::uint64_t seed) {
    const int dim = static_cast<int>(domain.lo.size());
    Dataset d;
    d.domain = domain;
    d.seed = seed;
    d.X.resize(dim, n);
    d.y.resize(n);
    Rng rng(seed);
    int accepted = 0;
    int rejects = 0;
    while (accepted < n) {
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) x(i) = rng.uniform(domain.lo(i), domain.hi(i));
        try {
            const double g = gamma_fn(x);
            d.X.col(accepted) = x;
            d.y(accepted) = g;
            ++accepted;
        } catch (const ConeError&) {
            if (++rejects > 100 * std::max(n, 1) + 1000)
                throw ConfigError("sample_dataset: domain mostly outside the representable cone");
        }
    }
    return d;
}

Dataset sample_dataset(const SetCbf& cbf, const Box& domain, int n, std::uint64_t seed) {
    return sample_dataset([&](const Eigen::VectorXd& x) { return gamma(cbf, x); }, domain, n, seed);
}

Dataset sample_dataset(const PredictiveCbf& cbf, const Box& domain, int n, std::uint64_t seed) {
    return sample_dataset([&](const Eigen::VectorXd& x) { return gamma_predictive(cbf, x); },
                          domain, n, seed);
}

ApproxCbf fit(const Dataset& dataset, const FitConfig& config) {
    const int n = static_cast<int>(dataset.X.cols());
    if (n == 0) throw ConfigError("fit: dataset is empty");
    const int dim = static_cast<int>(dataset.X.rows());

    // seeded split
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(config.seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    const int n_val = std::max(1, static_cast<int>(std::lround(config.val_fraction * n)));
    const int n_train = std::max(1, n - n_val);

    Eigen::MatrixXd Xtr(dim, n_train), Xva(dim, std::max(1, n_val));
    Eigen::VectorXd ytr(n_train), yva(std::max(1, n_val));
    for (int i = 0; i < n_train; ++i) {
        Xtr.col(i) = dataset.X.col(idx[static_cast<std::size_t>(i)]);
        ytr(i) = dataset.y(idx[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < n_val; ++i) {
        Xva.col(i) = dataset.X.col(idx[static_cast<std::size_t>(n_train + i)]);
        yva(i) = dataset.y(idx[static_cast<std::size_t>(n_train + i)]);
    }
    if (n_val == 0) {
        Xva = Xtr.leftCols(1);
        yva = ytr.head(1);
    }

    ApproxCbf out;
    out.model = config.model;
    out.domain = dataset.domain;
    out.seed = config.seed;
    out.n_samples = n;

    if (config.model == FitConfig::Model::Polynomial) {
        out.degree = config.poly_degree;
        out.exponents = monomial_exponents(dim, config.poly_degree);
        const Eigen::Index nf = static_cast<Eigen::Index>(out.exponents.size());
        Eigen::MatrixXd F(n_train, nf);
        for (int i = 0; i < n_train; ++i)
            for (Eigen::Index k = 0; k < nf; ++k)
                F(i, k) = monomial(out.exponents[static_cast<std::size_t>(k)], Xtr.col(i));
        out.coeffs = F.colPivHouseholderQr().solve(ytr);
        double max_err = 0.0;
        for (int i = 0; i < n_val; ++i)
            max_err = std::max(max_err, std::abs(out.gamma_hat(Xva.col(i)) - yva(i)));
        out.max_val_error = max_err;
        out.epsilon = config.margin_factor * max_err;
        return out;
    }

    // network: normalize inputs into [-1, 1], scale targets to unit range
    out.in_shift = 0.5 * (dataset.domain.lo + dataset.domain.hi);
    out.in_scale =
        (0.5 * (dataset.domain.hi - dataset.domain.lo)).cwiseMax(1e-12).cwiseInverse();
    out.out_scale = std::max(1e-12, ytr.cwiseAbs().maxCoeff());

    Eigen::MatrixXd Xn = (Xtr.colwise() - out.in_shift).array().colwise() * out.in_scale.array();
    Eigen::RowVectorXd yn = (ytr / out.out_scale).transpose();

    std::vector<int> sizes;
    sizes.push_back(dim);
    for (const int hsize : config.hidden) sizes.push_back(hsize);
    sizes.push_back(1);

    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> bias;
    std::vector<Eigen::MatrixXd> vW;
    std::vector<Eigen::VectorXd> vb;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd Wl(fan_out, fan_in);
        for (Eigen::Index r = 0; r < Wl.rows(); ++r)
            for (Eigen::Index c2 = 0; c2 < Wl.cols(); ++c2) Wl(r, c2) = rng.uniform(-a, a);
        W.push_back(Wl);
        bias.push_back(Eigen::VectorXd::Zero(fan_out));
        vW.push_back(Eigen::MatrixXd::Zero(fan_out, fan_in));
        vb.push_back(Eigen::VectorXd::Zero(fan_out));
    }

    const double inv_n = 1.0 / static_cast<double>(n_train);
    double lr = config.lr;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        ForwardPass f = forward(W, bias, Xn);
        const Eigen::RowVectorXd err = f.out - yn;
        const double loss = 0.5 * inv_n * err.squaredNorm();
        if (!std::isfinite(loss)) {
            std::ostringstream os;
            os << "fit: training diverged at epoch " << epoch << " (lr=" << lr
               << ", momentum=" << config.momentum << ", hidden=";
            for (const int hsize : config.hidden) os << hsize << " ";
            os << ")";
            throw ConfigError(os.str());
        }

        // backprop, full batch
        std::vector<Eigen::MatrixXd> gW(W.size());
        std::vector<Eigen::VectorXd> gb(W.size());
        Eigen::MatrixXd delta = err * inv_n;  // 1 x n
        for (std::size_t l = W.size(); l-- > 0;) {
            const Eigen::MatrixXd& input = (l == 0) ? Xn : f.post[l - 1];
            gW[l] = delta * input.transpose();
            gb[l] = delta.rowwise().sum();
            if (l > 0) {
                const Eigen::MatrixXd dtanh = (1.0 - f.post[l - 1].array().square()).matrix();
                delta = (W[l].transpose() * delta).cwiseProduct(dtanh);
            }
        }
        for (std::size_t l = 0; l < W.size(); ++l) {
            vW[l] = config.momentum * vW[l] - lr * gW[l];
            vb[l] = config.momentum * vb[l] - lr * gb[l];
            W[l] += vW[l];
            bias[l] += vb[l];
        }
        if ((epoch + 1) % std::max(1, config.epochs / 4) == 0) lr *= 0.5;
    }

    out.weights = W;
    out.biases = bias;
    double max_err = 0.0;
    for (int i = 0; i < n_val; ++i)
        max_err = std::max(max_err, std::abs(out.gamma_hat(Xva.col(i)) - yva(i)));
    out.max_val_error = max_err;
    out.epsilon = config.margin_factor * max_err;
    return out;
}

FilterResult step_approx(const ApproxCbf& hbar, const FilterSpec& spec, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u_des, double trust_radius) {
    const int nu = spec.model.nu();
    const HPolytope u_poly = as_hpolytope(spec.U);
    Eigen::MatrixXd R = spec.R;
    if (R.size() == 0) R = Eigen::MatrixXd::Identity(nu, nu);

    const double hx = hbar.evaluate(x);
    const double a = spec.cbf.alpha(hx);
    const double dh = hx >= 0.0 ? std::min(a, hx) : std::max(a, hx);
    // constraint: hbar(Ax + Bu) - eps >= hbar(x) - dh
    const double rhs_level = hx - dh + hbar.epsilon;

    Eigen::VectorXd tr(nu);
    for (int i = 0; i < nu; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nu);
        e(i) = 1.0;
        const double range = support(spec.U, e) + support(spec.U, -e);
        tr(i) = trust_radius > 0.0 ? trust_radius : 0.2 * range;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Eigen::VectorXd u_lin = u_des;
    Eigen::VectorXd u_star = u_des;
    QpSolution sol;
    int total_iters = 0;
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd xplus = spec.model.A * x + spec.model.B * u_lin;
        const double h_at = hbar.evaluate(xplus);
        const Eigen::VectorXd grad_u =
            -spec.model.B.transpose() * hbar.gamma_gradient(xplus);  // d hbar / du
        // h_at + grad_u'(u - u_lin) >= rhs_level
        QpProblem qp;
        qp.P = R;
        qp.q = -R * u_des;
        const Eigen::Index mu = u_poly.H.rows();
        qp.A.resize(mu + 1 + nu, nu);
        qp.lo.resize(qp.A.rows());
        qp.hi.resize(qp.A.rows());
        qp.A.topRows(mu) = u_poly.H;
        qp.lo.head(mu).setConstant(-kInf);
        qp.hi.head(mu) = u_poly.b;
        qp.A.row(mu) = grad_u.transpose();
        qp.lo(mu) = rhs_level - h_at + grad_u.dot(u_lin);
        qp.hi(mu) = kInf;
        qp.A.bottomRows(nu) = Eigen::MatrixXd::Identity(nu, nu);
        qp.lo.tail(nu) = u_des - tr;
        qp.hi.tail(nu) = u_des + tr;
        sol = solve_qp(qp, spec.solver);
        if (sol.status != SolveStatus::Optimal)
            throw InfeasibleError("step_approx: state outside filter domain");
        total_iters += sol.iterations;
        u_star = sol.z;
        u_lin = u_star;  // second pass relinearizes at the solution
    }
    const auto t1 = std::chrono::steady_clock::now();

    FilterResult out;
    out.u = u_star;
    out.h_current = hx;
    out.gamma_plus = hbar.gamma_hat(spec.model.A * x + spec.model.B * u_star);
    out.intervened = (out.u - u_des).norm() > 1e-7;
    out.status = sol.status;
    out.iterations = total_iters;
    out.solve_us =
        std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(t1 - t0).count();
    out.margin_degenerate = hbar.epsilon >= 1.0;
    return out;
}

}  // namespace setcbf
