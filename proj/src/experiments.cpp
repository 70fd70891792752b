#include "invsafe/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "invsafe/rng.hpp"

namespace invsafe {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    int count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    count = std::max(1, std::min<int>(count, static_cast<int>(n)));
    if (count <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct NamedLaw {
    std::string controller;
    std::string plant_name;
    PlantKind kind = PlantKind::linear;
    ControlLaw law;
    Reference ref;
};

CaseRecord run_case(const PlantParams& params, const NamedLaw& named, int case_index,
                    Vec2 x0, const LqrWeights& weights, const ExperimentOptions& opts) {
    Trajectory traj;
    try {
        traj = simulate(params, named.kind, named.law, x0, named.ref, opts.sim);
    } catch (const std::exception& e) {
        char ctx[160];
        std::snprintf(ctx, sizeof(ctx), "case %d (%s, x0 = %.6g, %.6g): ", case_index,
                      named.controller.c_str(), x0.d, x0.q);
        throw std::runtime_error(ctx + std::string(e.what()));
    }
    traj.cost = trajectory_cost(traj, weights, named.ref);

    CaseRecord rec;
    rec.case_index = case_index;
    rec.controller = named.controller;
    rec.plant = named.plant_name;
    rec.x0 = x0;
    rec.x_star = named.ref.x_star;
    rec.cost = traj.cost;
    rec.unsafe = traj.unsafe;
    rec.min_h = traj.min_h;
    rec.max_current = traj.max_current;
    rec.terminal_error = (traj.states.back() - named.ref.x_star).norm();
    for (std::size_t k = 0; k + 1 < traj.filter_active.size(); ++k)
        rec.filter_activations += traj.filter_active[k] ? 1 : 0;

    if (opts.dump_trajectories && !opts.trajectory_dir.empty()) {
        char name[96];
        std::snprintf(name, sizeof(name), "case%04d_%s_%s.csv", case_index,
                      named.controller.c_str(), named.plant_name.c_str());
        std::ofstream out(opts.trajectory_dir / name);
        if (!out)
            throw std::runtime_error("cannot write trajectory file in " +
                                     opts.trajectory_dir.string());
        write_trajectory_csv(out, traj, opts.decimate);
    }
    return rec;
}

// Per-(controller, plant) aggregates in first-appearance order; case costs
// are summed in case order so the result is independent of scheduling.
void aggregate(ExperimentReport& report) {
    report.aggregates.clear();
    for (const CaseRecord& rec : report.cases) {
        auto it = std::find_if(report.aggregates.begin(), report.aggregates.end(),
                               [&](const ControllerAggregate& a) {
                                   return a.controller == rec.controller && a.plant == rec.plant;
                               });
        if (it == report.aggregates.end()) {
            report.aggregates.push_back({rec.controller, rec.plant, 0.0, 0, 0.0, 0.0});
            it = std::prev(report.aggregates.end());
        }
        it->mean_cost += rec.cost;
        it->unsafe_count += rec.unsafe ? 1 : 0;
        it->max_overshoot = std::max(
            it->max_overshoot, std::max(0.0, rec.max_current - report.params.current_limit));
        it->max_terminal_error = std::max(it->max_terminal_error, rec.terminal_error);
    }
    for (ControllerAggregate& a : report.aggregates)
        a.mean_cost /= static_cast<double>(report.n_cases);
}

ExperimentReport run_sweep(const PlantParams& params, const ExperimentOptions& opts,
                           std::string name, std::uint64_t seed,
                           const std::vector<Vec2>& x0s,
                           const std::function<std::vector<NamedLaw>(std::size_t)>& laws_for) {
    if (opts.dump_trajectories && !opts.trajectory_dir.empty())
        std::filesystem::create_directories(opts.trajectory_dir);

    const LqrWeights weights = LqrWeights::benchmark(params);
    ExperimentReport report;
    report.name = std::move(name);
    report.seed = seed;
    report.n_cases = x0s.size();
    report.params = params;
    report.sim = opts.sim;
    report.alpha = opts.alpha;

    const std::size_t per_case = laws_for(0).size();
    report.cases.resize(x0s.size() * per_case);
    parallel_for(x0s.size(), opts.threads, [&](std::size_t i) {
        const std::vector<NamedLaw> laws = laws_for(i);
        for (std::size_t j = 0; j < laws.size(); ++j)
            report.cases[i * per_case + j] =
                run_case(params, laws[j], static_cast<int>(i), x0s[i], weights, opts);
    });
    aggregate(report);
    return report;
}

}  // namespace

std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n < 2) throw std::invalid_argument("linspace: n must be at least 2");
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i)
        values[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return values;
}

ExperimentReport boundary_sweep(const PlantParams& params, const ExperimentOptions& opts) {
    params.validate();
    const LinearPlant plant = build_linear_plant(params);
    const Reference ref = solve_linear_reference(params.current_limit, params);
    const GainMatrix k_lqr = lqr_gain(plant, LqrWeights::benchmark(params));
    const GainMatrix k_safe = synthesize_safe_gain(plant, ref.x_star).gain;
    const BarrierConfig barrier{params.current_limit, opts.alpha};

    std::vector<Vec2> x0s;
    for (double phi : linspace(0.0, kTwoPi - kTwoPi / 100.0, 100))
        x0s.push_back({params.current_limit * std::sin(phi), params.current_limit * std::cos(phi)});

    const std::vector<NamedLaw> laws = {
        {"lqr", "linear", PlantKind::linear, LinearGainLaw{k_lqr}, ref},
        {"safe-k", "linear", PlantKind::linear, LinearGainLaw{k_safe}, ref},
        {"cbf", "linear", PlantKind::linear, CbfFilteredLaw{k_lqr, barrier}, ref},
    };
    return run_sweep(params, opts, "boundary", 0, x0s, [&](std::size_t) { return laws; });
}

ExperimentReport random_sweep(const PlantParams& params, std::size_t n, std::uint64_t seed,
                              const ExperimentOptions& opts) {
    params.validate();
    if (n < 1) throw std::invalid_argument("random_sweep: n must be at least 1");
    const LinearPlant plant = build_linear_plant(params);
    const GainMatrix k_lqr = lqr_gain(plant, LqrWeights::benchmark(params));
    // K(lambda; x*) is invariant to the scale and sign of x*, and every
    // feasible linear reference lies on span(A^-1 B), so one synthesized
    // gain serves every sampled reference.
    const Reference unit_ref = solve_linear_reference(params.current_limit, params);
    const GainMatrix k_safe = synthesize_safe_gain(plant, unit_ref.x_star).gain;
    const BarrierConfig barrier{params.current_limit, opts.alpha};

    // All samples are drawn sequentially up front so the report does not
    // depend on how cases are scheduled across threads.
    Xoshiro256pp rng(seed);
    std::vector<Vec2> x0s(n);
    std::vector<Reference> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double magnitude = rng.uniform(-params.current_limit, params.current_limit);
        const double radius = rng.uniform(0.0, params.current_limit);
        const double phi = rng.uniform(0.0, kTwoPi);
        refs[i] = solve_linear_reference(magnitude, params);
        x0s[i] = {radius * std::cos(phi), radius * std::sin(phi)};
    }

    auto laws_for = [&](std::size_t i) {
        return std::vector<NamedLaw>{
            {"lqr", "linear", PlantKind::linear, LinearGainLaw{k_lqr}, refs[i]},
            {"safe-k", "linear", PlantKind::linear, LinearGainLaw{k_safe}, refs[i]},
            {"cbf", "linear", PlantKind::linear, CbfFilteredLaw{k_lqr, barrier}, refs[i]},
        };
    };
    return run_sweep(params, opts, "random", seed, x0s, laws_for);
}

ExperimentReport nonlinear_compare(const PlantParams& params, const ExperimentOptions& opts) {
    params.validate();
    const LinearPlant plant = build_linear_plant(params);
    const GainMatrix k_lqr = lqr_gain(plant, LqrWeights::benchmark(params));
    const BarrierConfig barrier{params.current_limit, opts.alpha};
    const Reference ref_linear = solve_linear_reference(params.current_limit, params);
    const Reference ref_nonlinear = solve_nonlinear_reference(params.current_limit, params);

    std::vector<Vec2> x0s;
    for (double phi : linspace(0.0, kTwoPi - kTwoPi / 100.0, 100))
        x0s.push_back({params.current_limit * std::sin(phi), params.current_limit * std::cos(phi)});

    const std::vector<NamedLaw> laws = {
        {"cbf", "linear", PlantKind::linear, CbfFilteredLaw{k_lqr, barrier}, ref_linear},
        {"cbf", "nonlinear", PlantKind::nonlinear, CbfFilteredLaw{k_lqr, barrier}, ref_nonlinear},
    };
    return run_sweep(params, opts, "nonlinear", 0, x0s, [&](std::size_t) { return laws; });
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json summary;
    summary["experiment"] = report.name;
    summary["seed"] = report.seed;
    summary["n_cases"] = report.n_cases;
    summary["config"] = {
        {"alpha", report.alpha},
        {"dt", report.sim.dt},
        {"t_end", report.sim.t_end},
        {"plant",
         {{"R", report.params.resistance},
          {"L", report.params.inductance},
          {"V", report.params.inverter_voltage},
          {"E", report.params.grid_voltage},
          {"omega_nom", report.params.omega_nom},
          {"I_max", report.params.current_limit},
          {"V_nom", report.params.nominal_voltage},
          {"S_nom", report.params.nominal_power},
          {"I_nom", report.params.nominal_current}}},
    };
    summary["aggregates"] = nlohmann::json::array();
    for (const ControllerAggregate& a : report.aggregates)
        summary["aggregates"].push_back({{"controller", a.controller},
                                         {"plant", a.plant},
                                         {"mean_cost", a.mean_cost},
                                         {"unsafe_count", a.unsafe_count},
                                         {"max_overshoot", a.max_overshoot},
                                         {"max_terminal_error", a.max_terminal_error}});

    std::ofstream json_out(dir / "summary.json");
    if (!json_out)
        throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    json_out << summary.dump(2) << "\n";

    std::ofstream csv(dir / "cases.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "cases.csv").string());
    csv << "case,controller,plant,x0_d,x0_q,xstar_d,xstar_q,cost,unsafe,min_h,"
           "max_current,terminal_error,filter_activations\n";
    char line[512];
    for (const CaseRecord& r : report.cases) {
        std::snprintf(line, sizeof(line),
                      "%d,%s,%s,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%.12g,%.12g,%.12g,%zu\n",
                      r.case_index, r.controller.c_str(), r.plant.c_str(), r.x0.d, r.x0.q,
                      r.x_star.d, r.x_star.q, r.cost, r.unsafe ? 1 : 0, r.min_h,
                      r.max_current, r.terminal_error, r.filter_activations);
        csv << line;
    }
}

}  // namespace invsafe
