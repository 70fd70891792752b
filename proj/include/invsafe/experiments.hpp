// The three benchmark suites: initial conditions swept around the safety
// boundary, randomly sampled initial conditions and references, and the
// linear-versus-nonlinear plant comparison. Reports are reproducible for a
// fixed seed and independent of the worker-thread count.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "invsafe/plant.hpp"
#include "invsafe/sim.hpp"

namespace invsafe {

// n evenly spaced values from a to b inclusive; n >= 2.
std::vector<double> linspace(double a, double b, std::size_t n);

struct CaseRecord {
    int case_index = 0;
    std::string controller;  // "lqr" | "safe-k" | "cbf"
    std::string plant;       // "linear" | "nonlinear"
    Vec2 x0;
    Vec2 x_star;
    double cost = 0.0;
    bool unsafe = false;
    double min_h = 0.0;
    double max_current = 0.0;
    double terminal_error = 0.0;
    std::size_t filter_activations = 0;
};

struct ControllerAggregate {
    std::string controller;
    std::string plant;
    double mean_cost = 0.0;
    int unsafe_count = 0;
    double max_overshoot = 0.0;  // max over cases of max(0, max_current - I_max)
    double max_terminal_error = 0.0;
};

struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    std::size_t n_cases = 0;
    PlantParams params;
    SimConfig sim;
    double alpha = 1000.0;
    std::vector<CaseRecord> cases;  // sorted by case index, then controller order
    std::vector<ControllerAggregate> aggregates;
};

struct ExperimentOptions {
    SimConfig sim{};
    double alpha = 1000.0;
    int threads = 0;  // <= 0 means all hardware threads
    bool dump_trajectories = false;
    int decimate = 1;
    std::filesystem::path trajectory_dir;  // target for --dump-trajectories
};

// 100 initial conditions (I_max sin(phi), I_max cos(phi)) around the
// boundary, all tracking the linear reference of magnitude +I_max, under
// the LQR gain, the safe gain, and the CBF-filtered LQR law.
ExperimentReport boundary_sweep(const PlantParams& params, const ExperimentOptions& opts);

// n cases with x* sampled by magnitude ~ U[-I_max, I_max] along the feasible
// line and x0 = (r cos phi, r sin phi), r ~ U[0, I_max], phi ~ U[0, 2pi].
// Per case the draw order is (magnitude, r, phi); deterministic in the seed.
ExperimentReport random_sweep(const PlantParams& params, std::size_t n, std::uint64_t seed,
                              const ExperimentOptions& opts);

// CBF-filtered LQR from the boundary initial-condition set on both plants;
// the linear plant tracks solve_linear_reference(I_max), the nonlinear one
// solve_nonlinear_reference(I_max). Reports overshoot and terminal error
// per plant.
ExperimentReport nonlinear_compare(const PlantParams& params, const ExperimentOptions& opts);

// Writes <dir>/summary.json and <dir>/cases.csv.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace invsafe
