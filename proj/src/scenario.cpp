#include "setcbf/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "setcbf/discretize.hpp"
#include "setcbf/errors.hpp"
#include "setcbf/json_io.hpp"

namespace setcbf {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

ClassKappaE alpha_from_json(const nlohmann::json& j) {
    const std::string kind = j.value("kind", "linear");
    const double s = j.value("s", 1.0);
    if (kind == "linear") return ClassKappaE::linear(s);
    if (kind == "cubic") return ClassKappaE::cubic(s);
    if (kind == "tanh") return ClassKappaE::tanh(s, j.value("scale", 1.0));
    throw ConfigError("scenario: unknown alpha kind '" + kind + "'");
}

std::vector<Eigen::VectorXd> u_des_from_file(const std::string& path, int nu) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open u_des file " + path);
    std::vector<Eigen::VectorXd> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<int>(vals.size()) != nu)
            throw ConfigError("scenario: u_des row width mismatch in " + path);
        Eigen::VectorXd v(nu);
        for (int i = 0; i < nu; ++i) v(i) = vals[static_cast<std::size_t>(i)];
        rows.push_back(v);
    }
    return rows;
}

double default_rho(const Scenario& s) {
    if (!std::isnan(s.rho)) return s.rho;
    return s.h_mode == HMode::Carryover ? 1e-6 : 0.0;
}

}  // namespace

Eigen::VectorXd random_u_des(const ConvexSet& U, Rng& rng) {
    const int nu = set_dim(U);
    Eigen::VectorXd lo(nu), hi(nu);
    for (int i = 0; i < nu; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nu);
        e(i) = 1.0;
        hi(i) = support(U, e);
        lo(i) = -support(U, -e);
    }
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Eigen::VectorXd u(nu);
        for (int i = 0; i < nu; ++i) u(i) = rng.uniform(lo(i), hi(i));
        if (contains(U, u, 1e-9)) return u;
    }
    throw ConfigError("random_u_des: rejection sampling failed (degenerate input set?)");
}

ResolvedSet resolve_safe_set(const Scenario& s) {
    ResolvedSet out;
    std::ostringstream report;
    if (s.source.kind == SetSource::Kind::Predictive)
        throw ConfigError("resolve_safe_set: predictive sources are resolved by prepare()");

    if (s.source.kind == SetSource::Kind::ComputeHPoly) {
        InvarianceProblem prob{s.model, s.X, s.U, s.W};
        const InvarianceResult res = maximal_ci_set(prob, s.source.max_iter, s.source.tol);
        out.omega_tilde = res.omega;
        report << "computed H-rep invariant set: rows=" << res.omega.H.rows()
               << " iterations=" << res.iterations << " converged=" << res.converged
               << " support_gap=" << res.support_gap << "\n";
        out.nu = 1.0;
        out.safe_set = out.omega_tilde;
        if (s.nu_policy.kind == NuPolicy::Kind::Contract) {
            if (!s.W) throw ConfigError("scenario: nu contraction requires W");
            const ContractionResult c = contract_for_stability(res.omega, *s.W);
            out.nu = c.nu;
            out.safe_set = c.omega;
            report << "contraction: nu=" << c.nu << "\n";
        } else if (s.nu_policy.kind == NuPolicy::Kind::Fixed) {
            out.nu = s.nu_policy.value;
            out.safe_set = scale(out.omega_tilde, out.nu);
            report << "fixed nu=" << out.nu << "\n";
        }
    } else {
        out.omega_tilde = set_from_json(load_json_file(s.source.path));
        InvarianceProblem prob{s.model, s.X, s.U, s.W};
        const VerificationReport ver =
            verify_invariance(out.omega_tilde, prob, s.source.verify_samples);
        report << "loaded set from " << s.source.path << ": checked=" << ver.checked
               << " violations=" << ver.violations.size() << "\n";
        if (!ver.passed) {
            std::ostringstream msg;
            msg << "scenario: loaded set failed invariance verification ("
                << ver.violations.size() << " violations, worst margin "
                << ver.violations.front().margin << ")";
            throw ConfigError(msg.str());
        }
        out.nu = 1.0;
        out.safe_set = out.omega_tilde;
        if (s.nu_policy.kind == NuPolicy::Kind::Contract) {
            if (!s.W) throw ConfigError("scenario: nu contraction requires W");
            if (!std::holds_alternative<HPolytope>(out.omega_tilde))
                throw ConfigError(
                    "scenario: nu contraction needs an H-rep set; use a fixed nu for other "
                    "representations");
            const ContractionResult c =
                contract_for_stability(std::get<HPolytope>(out.omega_tilde), *s.W);
            out.nu = c.nu;
            out.safe_set = c.omega;
            report << "contraction: nu=" << c.nu << "\n";
        } else if (s.nu_policy.kind == NuPolicy::Kind::Fixed) {
            out.nu = s.nu_policy.value;
            out.safe_set = scale(out.omega_tilde, out.nu);
            report << "fixed nu=" << out.nu << "\n";
        }
    }
    out.report = report.str();
    return out;
}

ScenarioContext prepare(const Scenario& s) {
    s.model.validate();
    ScenarioContext ctx;
    ctx.scenario = s;

    if (s.stochastic) {
        if (!s.model.G) throw ConfigError("scenario: stochastic runs need a G channel");
        const HPolytope Xh = as_hpolytope(s.X);
        const HPolytope Uh = as_hpolytope(s.U);
        const Eigen::VectorXd px = Eigen::VectorXd::Constant(Xh.H.rows(), s.stochastic->px);
        const Eigen::VectorXd pu = Eigen::VectorXd::Constant(Uh.H.rows(), s.stochastic->pu);
        const TightenedSets t =
            tighten_constraints(s.model, s.stochastic->K, s.stochastic->w, Xh, px, Uh, pu);
        LtiModel nominal_model{s.model.A, s.model.B, std::nullopt};
        Scenario nominal = s;
        nominal.model = nominal_model;
        nominal.X = t.Xbar;
        nominal.U = t.Ubar;
        nominal.stochastic.reset();
        const ResolvedSet rs = resolve_safe_set(nominal);
        StochasticFilterSpec spec;
        spec.model = s.model;
        spec.K = s.stochastic->K;
        spec.w = s.stochastic->w;
        spec.px = px;
        spec.pu = pu;
        spec.Xbar = t.Xbar;
        spec.Ubar = t.Ubar;
        spec.nominal = FilterSpec{nominal_model,
                                  ConvexSet{t.Ubar},
                                  make_set_cbf(rs.safe_set, s.alpha),
                                  Eigen::MatrixXd(),
                                  default_rho(s),
                                  s.h_mode,
                                  s.fallback,
                                  SolverSettings{}};
        ctx.stochastic = spec;
        ctx.nu = rs.nu;
        ctx.report = rs.report;
        return ctx;
    }

    if (s.source.kind == SetSource::Kind::Predictive) {
        if (s.source.Q.size() == 0 || s.source.R_lqr.size() == 0)
            throw ConfigError("scenario: predictive source needs Q and R_lqr");
        const Eigen::MatrixXd K_t = dlqr_gain(s.model.A, s.model.B, s.source.Q, s.source.R_lqr);
        const PredictiveSafeSet ss =
            build_tightening(s.model, s.X, s.U, s.source.W_pred, K_t, s.source.horizon);
        ctx.predictive = PredictiveCbf{ss, s.alpha};
        std::ostringstream report;
        report << "predictive safe set: N=" << ss.N << " terminal rows=" << ss.X_f.H.rows()
               << "\n";
        ctx.report = report.str();
        return ctx;
    }

    const ResolvedSet rs = resolve_safe_set(s);
    ctx.nu = rs.nu;
    ctx.report = rs.report;
    ctx.nominal = FilterSpec{s.model,
                             s.U,
                             make_set_cbf(rs.safe_set, s.alpha),
                             Eigen::MatrixXd(),
                             default_rho(s),
                             s.h_mode,
                             s.fallback,
                             SolverSettings{}};
    return ctx;
}

Trajectory run(const ScenarioContext& ctx) {
    const Scenario& s = ctx.scenario;
    const int nx = s.model.nx();
    const int nu = s.model.nu();

    Trajectory traj;
    traj.nx = nx;
    traj.nu = nu;
    if (s.steps <= 0) return traj;

    Eigen::VectorXd x = s.x0.size() == nx ? s.x0 : Eigen::VectorXd::Zero(nx);
    Rng rng_u(s.seed);
    Rng rng_w(s.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<Eigen::VectorXd> file_u;
    if (s.u_des.kind == UdesPolicy::Kind::File) file_u = u_des_from_file(s.u_des.path, nu);

    std::optional<SafetyFilter> nominal;
    std::optional<PredictiveFilter> pred;
    std::optional<StochasticFilter> stoch;
    if (ctx.stochastic) {
        stoch.emplace(*ctx.stochastic);
    } else if (ctx.predictive) {
        pred.emplace(*ctx.predictive, Eigen::MatrixXd(), default_rho(s), s.h_mode);
    } else if (ctx.nominal) {
        nominal.emplace(*ctx.nominal);
    } else {
        throw ConfigError("run: scenario context is not prepared");
    }

    // disturbance factor for Gaussian sampling
    Eigen::MatrixXd chol_w;
    if (s.stochastic && s.stochastic->w.kind == DisturbanceSpec::Kind::Gaussian) {
        Eigen::LLT<Eigen::MatrixXd> llt(s.stochastic->w.sigma_w);
        if (llt.info() != Eigen::Success)
            throw ConfigError("run: sigma_w must be positive definite for sampling");
        chol_w = llt.matrixL();
    }

    for (int k = 0; k < s.steps; ++k) {
        Eigen::VectorXd ud;
        switch (s.u_des.kind) {
            case UdesPolicy::Kind::Constant:
                ud = s.u_des.constant;
                break;
            case UdesPolicy::Kind::Random:
                ud = random_u_des(s.U, rng_u);
                break;
            case UdesPolicy::Kind::File:
                if (static_cast<std::size_t>(k) >= file_u.size())
                    throw ConfigError("run: u_des file shorter than the horizon");
                ud = file_u[static_cast<std::size_t>(k)];
                break;
        }

        FilterResult res;
        Eigen::VectorXd u_applied;
        try {
            if (stoch) {
                const auto sr = stoch->step(x, ud);
                res = sr.nominal;
                u_applied = sr.u;
            } else if (pred) {
                res = pred->step(x, ud);
                u_applied = res.u;
            } else {
                res = nominal->step(x, ud);
                u_applied = res.u;
            }
        } catch (const InfeasibleError& e) {
            traj.aborted = true;
            traj.abort_step = k;
            traj.error = e.what();
            return traj;
        }

        traj.k.push_back(k);
        traj.x.push_back(x);
        traj.u_des.push_back(ud);
        traj.u.push_back(u_applied);
        traj.h.push_back(res.h_current);
        traj.gamma_plus.push_back(res.gamma_plus);
        traj.intervened.push_back(res.intervened ? 1 : 0);
        traj.iters.push_back(res.iterations);
        traj.solve_us.push_back(res.solve_us);

        Eigen::VectorXd xn = s.model.A * x + s.model.B * u_applied;
        if (s.stochastic) {
            const auto& w = s.stochastic->w;
            Eigen::VectorXd ws;
            if (w.kind == DisturbanceSpec::Kind::Gaussian) {
                ws = chol_w * rng_w.gaussian_vector(static_cast<int>(chol_w.cols()));
            } else {
                ws.resize(w.support.lo.size());
                for (Eigen::Index i = 0; i < ws.size(); ++i)
                    ws(i) = rng_w.uniform(w.support.lo(i), w.support.hi(i));
            }
            xn += (*s.model.G) * ws;
        }
        x = xn;
    }
    return traj;
}

Trajectory run(const Scenario& s) {
    const ScenarioContext ctx = prepare(s);
    return run(ctx);
}

std::string trajectory_csv(const Trajectory& t) {
    std::ostringstream os;
    os << "k";
    for (int i = 0; i < t.nx; ++i) os << ",x_" << i;
    for (int i = 0; i < t.nu; ++i) os << ",u_des_" << i;
    for (int i = 0; i < t.nu; ++i) os << ",u_" << i;
    os << ",h,gamma_plus,intervened,iters,solve_us\n";
    for (std::size_t r = 0; r < t.k.size(); ++r) {
        os << t.k[r];
        for (int i = 0; i < t.nx; ++i) os << "," << fmt_double(t.x[r](i));
        for (int i = 0; i < t.nu; ++i) os << "," << fmt_double(t.u_des[r](i));
        for (int i = 0; i < t.nu; ++i) os << "," << fmt_double(t.u[r](i));
        os << "," << fmt_double(t.h[r]) << "," << fmt_double(t.gamma_plus[r]) << ","
           << int(t.intervened[r]) << "," << t.iters[r] << "," << fmt_double(t.solve_us[r])
           << "\n";
    }
    if (t.aborted) os << "# aborted at step " << t.abort_step << ": " << t.error << "\n";
    return os.str();
}

std::vector<std::string> builtin_scenario_names() { return {"msd2", "msd2_robust", "motor2d", "motion"}; }

Scenario builtin_scenario(const std::string& name) {
    if (name == "msd2" || name == "msd2_robust") {
        // two-mass spring-damper chain: m = 1 kg, k = 1 N/m, c = 0.5 N s/m, dt = 0.1 s
        Eigen::MatrixXd Ac(4, 4), Bc(4, 2);
        Ac << 0, 1, 0, 0,
            -2, -1.0, 1, 0.5,
            0, 0, 0, 1,
            1, 0.5, -1, -0.5;
        Bc << 0, 0, 1, 0, 0, 0, 0, 1;
        Scenario s;
        s.name = name;
        std::tie(s.model.A, s.model.B) = exact_discretize(Ac, Bc, 0.1);
        s.X = Box{Eigen::VectorXd::Constant(4, -2.0), Eigen::VectorXd::Constant(4, 2.0)};
        s.U = Box{Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
        s.alpha = ClassKappaE::linear(0.5);
        s.u_des.kind = UdesPolicy::Kind::Random;
        s.x0 = Eigen::VectorXd::Zero(4);
        s.steps = 200;
        s.source.tol = 1e-9;
        if (name == "msd2_robust") {
            s.W = Box{Eigen::VectorXd::Constant(4, -0.05), Eigen::VectorXd::Constant(4, 0.05)};
            s.nu_policy.kind = NuPolicy::Kind::Contract;
            s.alpha = ClassKappaE::linear(1.0);
            // start outside the contracted safe set, inside the domain
            s.x0 = Eigen::VectorXd::Zero(4);
            s.x0(0) = 1.97;
            s.x0(1) = 0.5;
        }
        return s;
    }
    if (name == "motor2d") {
        // stable two-state electrical-machine-like LTI with octagonal current limits
        Scenario s;
        s.name = name;
        s.model.A.resize(2, 2);
        s.model.A << 0.9, 0.05, -0.05, 0.9;
        s.model.B.resize(2, 2);
        s.model.B << 0.08, 0.01, 0.01, 0.08;
        HPolytope X;
        X.H.resize(8, 2);
        const double d = 1.0 / std::sqrt(2.0);
        X.H << 1, 0, -1, 0, 0, 1, 0, -1, d, d, d, -d, -d, d, -d, -d;
        X.b.resize(8);
        X.b << 1, 1, 1, 1, 0.99, 0.99, 0.99, 0.99;
        s.X = X;
        s.U = Box{Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
        s.alpha = ClassKappaE::linear(1.0);
        s.u_des.kind = UdesPolicy::Kind::Random;
        s.x0 = Eigen::VectorXd::Zero(2);
        s.steps = 200;
        s.source.tol = 1e-9;
        return s;
    }
    if (name == "motion") {
        // lateral-offset double integrator driven by a predictive safe set
        Scenario s;
        s.name = name;
        Eigen::MatrixXd Ac(2, 2), Bc(2, 1);
        Ac << 0, 1, 0, 0;
        Bc << 0, 1;
        std::tie(s.model.A, s.model.B) = exact_discretize(Ac, Bc, 0.1);
        Eigen::VectorXd xlo(2), xhi(2);
        xlo << -1.0, -0.8;
        xhi << 1.0, 0.8;
        s.X = Box{xlo, xhi};
        s.U = Box{Eigen::VectorXd::Constant(1, -0.5), Eigen::VectorXd::Constant(1, 0.5)};
        s.source.kind = SetSource::Kind::Predictive;
        s.source.horizon = 10;
        s.source.Q = Eigen::MatrixXd::Identity(2, 2);
        s.source.R_lqr = Eigen::MatrixXd::Identity(1, 1);
        s.alpha = ClassKappaE::linear(0.5);
        s.u_des.kind = UdesPolicy::Kind::Constant;
        s.u_des.constant = Eigen::VectorXd::Constant(1, 0.5);
        s.x0 = Eigen::VectorXd::Zero(2);
        s.steps = 300;
        return s;
    }
    throw ConfigError("unknown builtin scenario '" + name + "'");
}

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    s.name = j.value("name", "scenario");
    s.model = model_from_json(j.at("model"));
    s.X = set_from_json(j.at("X"));
    s.U = set_from_json(j.at("U"));
    if (j.contains("W")) s.W = set_from_json(j.at("W"));

    if (j.contains("set_source")) {
        const auto& src = j.at("set_source");
        const std::string type = src.value("type", "compute-hpoly");
        if (type == "compute-hpoly") {
            s.source.kind = SetSource::Kind::ComputeHPoly;
            s.source.tol = src.value("tol", 1e-9);
            s.source.max_iter = src.value("max_iter", 100);
        } else if (type == "load-set-file") {
            s.source.kind = SetSource::Kind::LoadSetFile;
            s.source.path = src.at("path").get<std::string>();
            s.source.verify_samples = src.value("verify_samples", 500);
        } else if (type == "predictive") {
            s.source.kind = SetSource::Kind::Predictive;
            s.source.horizon = src.value("horizon", 10);
            s.source.Q = matrix_from_json(src.at("Q"));
            s.source.R_lqr = matrix_from_json(src.at("R_lqr"));
            if (src.contains("W")) s.source.W_pred = set_from_json(src.at("W"));
        } else {
            throw ConfigError("scenario: unknown set_source type '" + type + "'");
        }
    }

    if (j.contains("nu")) {
        if (j["nu"].is_string() && j["nu"] == "contract") {
            s.nu_policy.kind = NuPolicy::Kind::Contract;
        } else if (j["nu"].is_number()) {
            s.nu_policy.kind = NuPolicy::Kind::Fixed;
            s.nu_policy.value = j["nu"].get<double>();
        } else {
            throw ConfigError("scenario: nu must be \"contract\" or a number");
        }
    }

    if (j.contains("alpha")) s.alpha = alpha_from_json(j.at("alpha"));

    if (j.contains("u_des")) {
        const auto& ud = j.at("u_des");
        const std::string type = ud.value("type", "random");
        if (type == "constant") {
            s.u_des.kind = UdesPolicy::Kind::Constant;
            s.u_des.constant = vector_from_json(ud.at("value"));
        } else if (type == "random") {
            s.u_des.kind = UdesPolicy::Kind::Random;
        } else if (type == "file") {
            s.u_des.kind = UdesPolicy::Kind::File;
            s.u_des.path = ud.at("path").get<std::string>();
        } else {
            throw ConfigError("scenario: unknown u_des type '" + type + "'");
        }
    }

    if (j.contains("x0")) s.x0 = vector_from_json(j.at("x0"));
    s.steps = j.value("steps", 200);
    s.seed = j.value("seed", 1ULL);
    if (j.contains("rho")) s.rho = j["rho"].get<double>();
    if (j.contains("h_mode")) {
        const std::string m = j["h_mode"].get<std::string>();
        if (m == "exact") s.h_mode = HMode::Exact;
        else if (m == "carryover") s.h_mode = HMode::Carryover;
        else throw ConfigError("scenario: h_mode must be 'exact' or 'carryover'");
    }
    s.fallback = j.value("fallback", false);

    if (j.contains("stochastic")) {
        const auto& st = j.at("stochastic");
        StochasticScenario sc;
        sc.K = matrix_from_json(st.at("K"));
        const std::string wkind = st.value("w_kind", "gaussian");
        if (wkind == "gaussian") {
            sc.w.kind = DisturbanceSpec::Kind::Gaussian;
            sc.w.sigma_w = matrix_from_json(st.at("sigma_w"));
        } else if (wkind == "uniform") {
            sc.w.kind = DisturbanceSpec::Kind::UniformBox;
            sc.w.support.lo = vector_from_json(st.at("w_lo"));
            sc.w.support.hi = vector_from_json(st.at("w_hi"));
        } else {
            throw ConfigError("scenario: w_kind must be 'gaussian' or 'uniform'");
        }
        sc.px = st.value("px", 0.9);
        sc.pu = st.value("pu", 0.9);
        s.stochastic = sc;
    }
    return s;
}

}  // namespace setcbf
