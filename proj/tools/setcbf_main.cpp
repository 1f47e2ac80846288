#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "setcbf/approx.hpp"
#include "setcbf/errors.hpp"
#include "setcbf/json_io.hpp"
#include "setcbf/scenario.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("SETCBF_LOG");
    if (!env) return 0;
    const std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[setcbf] " << msg << "\n";
}

setcbf::Scenario load_scenario(const std::string& arg) {
    for (const auto& name : setcbf::builtin_scenario_names())
        if (arg == name) return setcbf::builtin_scenario(name);
    return setcbf::scenario_from_json(setcbf::load_json_file(arg));
}

struct CommonFlags {
    std::int64_t seed = -1;
    int steps = -1;
    double alpha_s = -1.0;
    double rho = std::numeric_limits<double>::quiet_NaN();
    std::string h_mode;
    bool fallback = false;
};

void apply_flags(setcbf::Scenario& s, const CommonFlags& f) {
    if (f.seed >= 0) s.seed = static_cast<std::uint64_t>(f.seed);
    if (f.steps >= 0) s.steps = f.steps;
    if (f.alpha_s > 0.0) s.alpha.s = f.alpha_s;
    if (!std::isnan(f.rho)) s.rho = f.rho;
    if (f.h_mode == "exact") s.h_mode = setcbf::HMode::Exact;
    else if (f.h_mode == "carryover") s.h_mode = setcbf::HMode::Carryover;
    else if (!f.h_mode.empty()) throw setcbf::ConfigError("--h-mode must be exact or carryover");
    if (f.fallback) s.fallback = true;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--seed", f.seed, "override the scenario seed");
    cmd->add_option("--steps", f.steps, "override the rollout length");
    cmd->add_option("--alpha-s", f.alpha_s, "override the class-K slope s");
    cmd->add_option("--rho", f.rho, "override the gamma+ penalty");
    cmd->add_option("--h-mode", f.h_mode, "h evaluation mode: exact|carryover");
    cmd->add_flag("--fallback", f.fallback, "enable the pure-invariance fallback step");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-based control barrier functions and safety filters"};
    app.require_subcommand(1);

    std::string scenario_arg, out_path = "", set_path, state_arg, report_path;
    CommonFlags flags;
    int samples = 20000;
    int verify_samples = 1000;
    double alpha_s_eval = 1.0;
    std::string alpha_kind = "linear";

    auto* compute = app.add_subcommand("compute-invariant-set",
                                       "compute the (robust) control invariant set of a scenario");
    compute->add_option("scenario", scenario_arg, "scenario JSON file or builtin name")->required();
    compute->add_option("-o,--output", out_path, "output set JSON")->required();
    compute->add_option("--report", report_path, "text report path");

    auto* evalc = app.add_subcommand("eval-cbf", "evaluate gamma, h and delta-h at a state");
    evalc->add_option("set", set_path, "set JSON file")->required();
    evalc->add_option("--x", state_arg, "state, comma separated")->required();
    evalc->add_option("--alpha-kind", alpha_kind, "linear|cubic|tanh");
    evalc->add_option("--alpha-s", alpha_s_eval, "class-K slope s");

    auto* sim = app.add_subcommand("simulate", "closed-loop rollout with the safety filter");
    sim->add_option("scenario", scenario_arg, "scenario JSON file or builtin name")->required();
    sim->add_option("-o,--output", out_path, "trajectory CSV path")->required();
    add_common(sim, flags);

    auto* train = app.add_subcommand("train-approx", "fit an approximate CBF for a scenario");
    train->add_option("scenario", scenario_arg, "scenario JSON file or builtin name")->required();
    train->add_option("-o,--output", out_path, "model JSON path")->required();
    train->add_option("--samples", samples, "training sample count");
    CommonFlags train_flags;
    add_common(train, train_flags);

    auto* verify = app.add_subcommand("verify", "verify a stored set against a scenario");
    verify->add_option("set", set_path, "set JSON file")->required();
    verify->add_option("scenario", scenario_arg, "scenario JSON file or builtin name")->required();
    verify->add_option("--samples", verify_samples, "verification sample count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (compute->parsed()) {
            setcbf::Scenario s = load_scenario(scenario_arg);
            const setcbf::ResolvedSet rs = setcbf::resolve_safe_set(s);
            setcbf::save_json_file(out_path, setcbf::set_to_json(rs.omega_tilde));
            log_info("wrote " + out_path);
            if (!report_path.empty()) {
                std::ofstream rep(report_path);
                rep << rs.report;
            }
            std::cout << rs.report;
            return 0;
        }
        if (evalc->parsed()) {
            const setcbf::ConvexSet set = setcbf::set_from_json(setcbf::load_json_file(set_path));
            std::stringstream ss(state_arg);
            std::vector<double> vals;
            std::string cell;
            while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
            Eigen::VectorXd x(static_cast<Eigen::Index>(vals.size()));
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = vals[static_cast<std::size_t>(i)];
            setcbf::ClassKappaE alpha = setcbf::ClassKappaE::linear(alpha_s_eval);
            if (alpha_kind == "cubic") alpha = setcbf::ClassKappaE::cubic(alpha_s_eval);
            else if (alpha_kind == "tanh") alpha = setcbf::ClassKappaE::tanh(alpha_s_eval, 1.0);
            const setcbf::SetCbf cbf = setcbf::make_set_cbf(set, alpha);
            const double g = setcbf::gamma(cbf, x);
            const double hv = 1.0 - g;
            std::cout << "gamma = " << g << "\nh = " << hv
                      << "\ndelta_h = " << setcbf::delta_h(cbf, hv) << "\n";
            return 0;
        }
        if (sim->parsed()) {
            setcbf::Scenario s = load_scenario(scenario_arg);
            apply_flags(s, flags);
            log_info("preparing scenario " + s.name);
            const setcbf::Trajectory traj = setcbf::run(s);
            std::ofstream out(out_path);
            if (!out) throw setcbf::ConfigError("cannot write " + out_path);
            out << setcbf::trajectory_csv(traj);
            if (traj.aborted) {
                std::cerr << "run aborted at step " << traj.abort_step << ": " << traj.error
                          << "\n";
                return 2;
            }
            log_info("wrote " + out_path);
            return 0;
        }
        if (train->parsed()) {
            setcbf::Scenario s = load_scenario(scenario_arg);
            apply_flags(s, train_flags);
            const setcbf::ScenarioContext ctx = setcbf::prepare(s);
            // training domain: twice the bounding box of the state constraints
            const int nx = s.model.nx();
            setcbf::Box domain{Eigen::VectorXd(nx), Eigen::VectorXd(nx)};
            for (int i = 0; i < nx; ++i) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(nx);
                e(i) = 1.0;
                domain.hi(i) = 2.0 * setcbf::support(s.X, e);
                domain.lo(i) = -2.0 * setcbf::support(s.X, -e);
            }
            setcbf::GammaFn gamma_fn;
            if (ctx.predictive) {
                const setcbf::PredictiveCbf& pc = *ctx.predictive;
                gamma_fn = [pc](const Eigen::VectorXd& x) { return gamma_predictive(pc, x); };
            } else if (ctx.nominal) {
                const setcbf::SetCbf& c = ctx.nominal->cbf;
                gamma_fn = [c](const Eigen::VectorXd& x) { return gamma(c, x); };
            } else {
                throw setcbf::ConfigError("train-approx: stochastic scenarios are not supported");
            }
            const setcbf::Dataset ds = setcbf::sample_dataset(gamma_fn, domain, samples, s.seed);
            setcbf::FitConfig cfg;
            cfg.seed = s.seed;
            const setcbf::ApproxCbf model = setcbf::fit(ds, cfg);
            setcbf::save_json_file(out_path, setcbf::approx_to_json(model));
            std::cout << "max validation error = " << model.max_val_error
                      << "\nepsilon = " << model.epsilon << "\n";
            return 0;
        }
        if (verify->parsed()) {
            const setcbf::ConvexSet set = setcbf::set_from_json(setcbf::load_json_file(set_path));
            setcbf::Scenario s = load_scenario(scenario_arg);
            setcbf::InvarianceProblem prob{s.model, s.X, s.U, s.W};
            const setcbf::VerificationReport rep = setcbf::verify_invariance(set, prob, verify_samples);
            std::cout << "checked " << rep.checked << " points, " << rep.violations.size()
                      << " violations\n";
            for (std::size_t i = 0; i < std::min<std::size_t>(rep.violations.size(), 10); ++i) {
                std::cout << "  violation margin " << rep.violations[i].margin << " at x = [";
                for (Eigen::Index c = 0; c < rep.violations[i].x.size(); ++c)
                    std::cout << (c ? ", " : "") << rep.violations[i].x(c);
                std::cout << "]\n";
            }
            return rep.passed ? 0 : 2;
        }
    } catch (const setcbf::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const setcbf::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
