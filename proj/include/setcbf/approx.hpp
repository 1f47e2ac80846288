#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "setcbf/cbf.hpp"
#include "setcbf/filter.hpp"
#include "setcbf/predictive.hpp"
#include "setcbf/sets.hpp"

namespace setcbf {

struct Dataset {
    Eigen::MatrixXd X;  // one sample per column
    Eigen::VectorXd y;  // gamma values
    Box domain;
    std::uint64_t seed = 0;
};

struct FitConfig {
    enum class Model { Network, Polynomial };
    Model model = Model::Network;
    std::vector<int> hidden = {64, 64};
    int poly_degree = 2;
    int epochs = 4000;
    double lr = 0.05;
    double momentum = 0.9;
    double val_fraction = 0.1;
    double margin_factor = 1.5;
    std::uint64_t seed = 1;
};

// Learned gamma surrogate: tanh MLP or polynomial least-squares, with the
// robustness margin epsilon = margin_factor * max validation error.
struct ApproxCbf {
    FitConfig::Model model = FitConfig::Model::Network;

    // network parameters (input normalized into [-1, 1]^n, output scaled)
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd in_shift, in_scale;
    double out_scale = 1.0;

    // polynomial parameters
    int degree = 0;
    std::vector<std::vector<int>> exponents;
    Eigen::VectorXd coeffs;

    Box domain;
    double epsilon = 0.0;

    // training metadata
    std::uint64_t seed = 0;
    int n_samples = 0;
    double max_val_error = 0.0;

    double gamma_hat(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gamma_gradient(const Eigen::VectorXd& x) const;
    double evaluate(const Eigen::VectorXd& x) const;  // h_bar = 1 - gamma_hat
    bool in_domain(const Eigen::VectorXd& x) const;
};

using GammaFn = std::function<double(const Eigen::VectorXd&)>;

// Uniform samples over the domain box; V-rep cone-infeasible draws are resampled.
Dataset sample_dataset(const GammaFn& gamma_fn, const Box& domain, int n, std::uint64_t seed);
Dataset sample_dataset(const SetCbf& cbf, const Box& domain, int n, std::uint64_t seed);
Dataset sample_dataset(const PredictiveCbf& cbf, const Box& domain, int n, std::uint64_t seed);

ApproxCbf fit(const Dataset& dataset, const FitConfig& config);

// Safety filter directly on the learned barrier (two-pass linearization QP).
// trust_radius < 0 selects the default 0.2 * input range per dimension.
FilterResult step_approx(const ApproxCbf& hbar, const FilterSpec& spec, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u_des, double trust_radius = -1.0);

}  // namespace setcbf
