// invsafe command line: gain synthesis, single trajectories, and the three
// benchmark sweeps, with JSON/CSV outputs.
//
// Exit codes: 0 success, 2 bad usage, 3 numerical or I/O failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "invsafe/controllers.hpp"
#include "invsafe/experiments.hpp"
#include "invsafe/plant.hpp"
#include "invsafe/sim.hpp"

namespace {

using namespace invsafe;

constexpr std::uint64_t kDefaultSeed = 42;

struct CliConfig {
    std::string params_file;
    std::string out_dir = "out";
    std::uint64_t seed = kDefaultSeed;
    std::size_t n = 1000;
    double dt = 1e-5;
    double t_end = 50e-3;
    double alpha = 1000.0;
    bool dump_trajectories = false;
    int decimate = 1;
    int threads = 0;

    // single
    std::string controller = "cbf";
    std::string plant_kind = "linear";
    std::string x0_text = "0,0";
    double magnitude = 5.0;
};

// Full config-file schema; plant keys are read by load_params, the rest
// here. Anything else is a typo and rejected.
const std::set<std::string> kKnownConfigKeys = {
    "R",     "L",     "V",  "E",     "omega_nom", "I_max", "V_nom",
    "S_nom", "I_nom", "dt", "t_end", "alpha",     "n",     "seed"};

// Counts uses of a flag anywhere in the command tree (some flags live on
// subcommands).
std::size_t flag_count(const CLI::App* cmd, const std::string& name) {
    std::size_t total = 0;
    if (const CLI::Option* opt = cmd->get_option_no_throw(name)) total += opt->count();
    for (const CLI::App* sub : cmd->get_subcommands([](const CLI::App*) { return true; }))
        total += flag_count(sub, name);
    return total;
}

void apply_config_file(CliConfig& cfg, PlantParams& params, const CLI::App& cmd) {
    if (cfg.params_file.empty()) return;
    params = load_params(cfg.params_file);

    std::ifstream in(cfg.params_file);
    nlohmann::json j;
    in >> j;
    for (const auto& item : j.items())
        if (!kKnownConfigKeys.count(item.key()))
            throw std::runtime_error("unknown key '" + item.key() + "' in " + cfg.params_file);

    // Command-line flags take precedence over config-file values.
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && flag_count(&cmd, flag) == 0)
            field = j[key].get<std::decay_t<decltype(field)>>();
    };
    take("dt", "--dt", cfg.dt);
    take("t_end", "--t-end", cfg.t_end);
    take("alpha", "--alpha", cfg.alpha);
    take("n", "--n", cfg.n);
    take("seed", "--seed", cfg.seed);
}

ExperimentOptions make_options(const CliConfig& cfg, const std::filesystem::path& exp_dir) {
    ExperimentOptions opts;
    opts.sim.dt = cfg.dt;
    opts.sim.t_end = cfg.t_end;
    opts.alpha = cfg.alpha;
    opts.threads = cfg.threads;
    opts.dump_trajectories = cfg.dump_trajectories;
    opts.decimate = cfg.decimate;
    opts.trajectory_dir = exp_dir / "trajectories";
    return opts;
}

std::optional<Vec2> try_parse_x0(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) return std::nullopt;
    try {
        std::size_t used = 0;
        const double d = std::stod(text.substr(0, comma), &used);
        if (used != comma) return std::nullopt;
        const std::string rest = text.substr(comma + 1);
        const double q = std::stod(rest, &used);
        if (used != rest.size()) return std::nullopt;
        return Vec2{d, q};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

Vec2 parse_x0(const std::string& text) {
    const auto parsed = try_parse_x0(text);
    if (!parsed)
        throw std::runtime_error("--x0: expected two comma-separated numbers, e.g. -1.55,-4.76");
    return *parsed;
}

int run_synthesize(const PlantParams& params) {
    const LinearPlant plant = build_linear_plant(params);
    const LqrWeights weights = LqrWeights::benchmark(params);
    const Mat2 p = care_solve(plant, weights);
    const GainMatrix k_lqr{(p * plant.b) * (1.0 / weights.r)};
    const double riccati_residual =
        (plant.a.transpose() * p + p * plant.a -
         outer(p * plant.b, p * plant.b) * (1.0 / weights.r) + weights.q)
            .frobenius_norm();

    const Reference ref = solve_linear_reference(params.current_limit, params);
    const SafeGainCertificate cert = synthesize_safe_gain(plant, ref.x_star);

    nlohmann::json out;
    out["k_lqr"] = {k_lqr.row.d, k_lqr.row.q};
    out["k_safe"] = {cert.gain.row.d, cert.gain.row.q};
    out["lambda"] = cert.lambda;
    out["certificate"] = {{"eig_max", cert.eig_max},
                          {"residual_alignment", cert.residual_alignment},
                          {"margin", -cert.eig_max}};
    out["riccati_residual"] = riccati_residual;
    out["reference"] = {{"x_star", {ref.x_star.d, ref.x_star.q}}, {"u_star", ref.u_star}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_single(const CliConfig& cfg, const PlantParams& params) {
    const LinearPlant plant = build_linear_plant(params);
    const PlantKind kind =
        cfg.plant_kind == "nonlinear" ? PlantKind::nonlinear : PlantKind::linear;
    const Reference ref = kind == PlantKind::linear
                              ? solve_linear_reference(cfg.magnitude, params)
                              : solve_nonlinear_reference(cfg.magnitude, params);
    const GainMatrix k_lqr = lqr_gain(plant, LqrWeights::benchmark(params));

    ControlLaw law;
    if (cfg.controller == "lqr") {
        law = LinearGainLaw{k_lqr};
    } else if (cfg.controller == "safe-k") {
        law = LinearGainLaw{synthesize_safe_gain(plant, ref.x_star).gain};
    } else {
        law = CbfFilteredLaw{k_lqr, BarrierConfig{params.current_limit, cfg.alpha}};
    }

    SimConfig sim_cfg{cfg.dt, cfg.t_end};
    Trajectory traj = simulate(params, kind, law, parse_x0(cfg.x0_text), ref, sim_cfg);
    traj.cost = trajectory_cost(traj, LqrWeights::benchmark(params), ref);

    std::filesystem::create_directories(cfg.out_dir);
    const auto file = std::filesystem::path(cfg.out_dir) / "trajectory.csv";
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    write_trajectory_csv(out, traj, cfg.decimate);

    nlohmann::json info = {{"trajectory", file.string()},
                           {"cost", traj.cost},
                           {"min_h", traj.min_h},
                           {"max_current", traj.max_current},
                           {"unsafe", traj.unsafe}};
    std::cout << info.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Current-magnitude safety filtering for a grid-connected inverter:\n"
        "LQR and safe-gain synthesis, CBF-filtered simulation, and benchmark "
        "sweeps.\nPrecedence: command-line flags override config-file values, "
        "which override\nthe built-in 120 V / 1.5 kVA bench defaults."};
    app.require_subcommand(1);

    CliConfig cfg;
    app.add_option("--params", cfg.params_file,
                   "JSON config file (plant keys R [ohm], L [H], V [V], E [V], "
                   "omega_nom [rad/s], I_max [A], V_nom [V], S_nom [VA], I_nom [A]; "
                   "optional dt, t_end, alpha, n, seed)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", cfg.out_dir, "output directory (default ./out)");
    app.add_option("--threads", cfg.threads,
                   "worker threads for sweeps, 0 = all cores; results do not depend on it");
    app.add_option("--dt", cfg.dt, "integrator step [s] (default 1e-5)")
        ->check(CLI::PositiveNumber);
    app.add_option("--t-end", cfg.t_end, "simulation length [s] (default 0.05)")
        ->check(CLI::PositiveNumber);
    app.add_option("--alpha", cfg.alpha, "barrier decay rate alpha [1/s] (default 1000)")
        ->check(CLI::PositiveNumber);
    app.add_option("--decimate", cfg.decimate,
                   "keep every k-th trajectory CSV row (metrics stay full resolution)")
        ->check(CLI::PositiveNumber);

    auto* synth = app.add_subcommand(
        "synthesize", "print the LQR gain, the safe gain, and its certificate as JSON");

    auto* single = app.add_subcommand("single", "simulate one case and write trajectory.csv");
    single->add_option("--controller", cfg.controller, "lqr | safe-k | cbf (default cbf)")
        ->check(CLI::IsMember({"lqr", "safe-k", "cbf"}));
    single->add_option("--x0", cfg.x0_text, "initial currents 'i_d,i_q' [A] (default 0,0)")
        ->check([](const std::string& value) -> std::string {
            return try_parse_x0(value) ? std::string{}
                                       : "expected two comma-separated numbers, e.g. -1.55,-4.76";
        });
    single->add_option("--magnitude", cfg.magnitude,
                       "reference current magnitude [A] (default 5)");
    single->add_option("--plant", cfg.plant_kind, "linear | nonlinear (default linear)")
        ->check(CLI::IsMember({"linear", "nonlinear"}));

    auto* boundary =
        app.add_subcommand("boundary-sweep", "100 boundary initial conditions, 3 controllers");
    auto* random =
        app.add_subcommand("random-sweep", "random initial conditions and references");
    random->add_option("--n", cfg.n, "number of sampled cases (default 1000)")
        ->check(CLI::PositiveNumber);
    random->add_option("--seed", cfg.seed, "PRNG seed (default 42)");
    auto* nonlinear = app.add_subcommand(
        "nonlinear-compare", "CBF-filtered LQR on the linear vs nonlinear plant");
    for (CLI::App* sweep : {boundary, random, nonlinear})
        sweep->add_flag("--dump-trajectories", cfg.dump_trajectories,
                        "also write one trajectory CSV per case");

    // global flags may appear after the subcommand name
    for (CLI::App* sub : {synth, single, boundary, random, nonlinear}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        PlantParams params = PlantParams::bench_defaults();
        apply_config_file(cfg, params, app);
        params.validate();

        const std::filesystem::path out_root(cfg.out_dir);
        if (app.got_subcommand("synthesize")) return run_synthesize(params);
        if (app.got_subcommand("single")) return run_single(cfg, params);
        if (app.got_subcommand("boundary-sweep")) {
            const auto report = boundary_sweep(params, make_options(cfg, out_root / "boundary"));
            write_report(report, out_root / "boundary");
            std::cout << "wrote " << (out_root / "boundary" / "summary.json").string() << "\n";
            return 0;
        }
        if (app.got_subcommand("random-sweep")) {
            const auto report =
                random_sweep(params, cfg.n, cfg.seed, make_options(cfg, out_root / "random"));
            write_report(report, out_root / "random");
            std::cout << "wrote " << (out_root / "random" / "summary.json").string() << "\n";
            return 0;
        }
        const auto report = nonlinear_compare(params, make_options(cfg, out_root / "nonlinear"));
        write_report(report, out_root / "nonlinear");
        std::cout << "wrote " << (out_root / "nonlinear" / "summary.json").string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
