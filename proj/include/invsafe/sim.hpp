// Fixed-step closed-loop integration of either plant under a control law,
// with the cost and safety metrics used by the experiment suites.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <variant>
#include <vector>

#include "invsafe/controllers.hpp"
#include "invsafe/plant.hpp"
#include "invsafe/safety_filter.hpp"

namespace invsafe {

enum class PlantKind { linear, nonlinear };

// Plain linear feedback u = u* - K (x - x*). Covers both the LQR gain and
// the safe gain; they differ only in how K was synthesized.
struct LinearGainLaw {
    GainMatrix gain;
};

// Nominal linear feedback passed through the closed-form safety filter.
// The filter constraints are always formulated on the linear plant model,
// also when the trajectory itself integrates the nonlinear dynamics.
struct CbfFilteredLaw {
    GainMatrix nominal_gain;
    BarrierConfig barrier;
};

using ControlLaw = std::variant<LinearGainLaw, CbfFilteredLaw>;

struct SimConfig {
    double dt = 1e-5;      // seconds
    double t_end = 50e-3;  // seconds

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
        if (!(t_end >= dt)) throw std::invalid_argument("SimConfig: t_end must be >= dt");
    }
};

// All per-sample grids have the same length n_steps + 1: the final entries
// of inputs/filter_active record the control the law would apply at the
// terminal state. cost is not filled by simulate (see trajectory_cost).
struct Trajectory {
    std::vector<double> times;          // seconds
    std::vector<Vec2> states;           // ampere
    std::vector<double> inputs;         // radian
    std::vector<double> h_values;       // A^2
    std::vector<unsigned char> filter_active;
    double cost = 0.0;
    double min_h = 0.0;                 // A^2
    double max_current = 0.0;           // ampere
    bool unsafe = false;                // max_current > I_max (1 + 1e-6)
    std::size_t infeasible_relaxed_count = 0;
};

// Integrates dt-steps of classical RK4 on the closed loop; the control law
// is evaluated at every stage state, and the recorded input of a step is
// the evaluation at its start state. Throws std::runtime_error with the
// step index if the state leaves the finite range.
Trajectory simulate(const PlantParams& params, PlantKind kind, const ControlLaw& law,
                    Vec2 x0, const Reference& ref, const SimConfig& cfg);

// 1000 * sum_k dt_k ((x_k - x*)^T Q (x_k - x*) + r (u_k - u*)^2) over the
// applied (left-endpoint) samples.
double trajectory_cost(const Trajectory& traj, const LqrWeights& weights,
                       const Reference& ref);

// Columns t,i_d,i_q,delta,h,filter_active; 9 significant digits. decimate
// keeps every decimate-th row plus the final one.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int decimate = 1);

}  // namespace invsafe
