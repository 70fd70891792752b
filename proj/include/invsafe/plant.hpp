// Inverter-to-grid RL branch model in the dq frame: physical parameters,
// the nonlinear and small-angle (linear) dynamics, power output, and
// feasible steady-state references.
//
// Units: SI throughout (ohm, henry, volt, ampere, rad/s, radian, watt, var).
// All types are immutable values and every operation is a pure function,
// safe to call concurrently.
#pragma once

#include <filesystem>

#include "invsafe/linalg.hpp"

namespace invsafe {

struct PlantParams {
    double resistance = 1.3;           // R, ohm
    double inductance = 3.5e-3;        // L, henry
    double inverter_voltage = 120.0;   // V, volt
    double grid_voltage = 120.0;       // E, volt (V = E is a model assumption)
    double omega_nom = 2.0 * 3.14159265358979323846 * 60.0;  // rad/s
    double current_limit = 5.0;        // |I|max, ampere
    double nominal_voltage = 120.0;    // V_nom, volt
    double nominal_power = 1500.0;     // S_nom, volt-ampere
    double nominal_current = 4.17;     // I_nom, ampere

    // Bench defaults above are the 120 V / 1.5 kVA test system.
    static PlantParams bench_defaults() { return {}; }

    // Throws std::invalid_argument on non-physical values or V != E.
    void validate() const;
};

// Reads any subset of the plant keys {R, L, V, E, omega_nom, I_max, V_nom,
// S_nom, I_nom} from a JSON object, over the bench defaults. Non-plant keys
// are ignored (the CLI owns the rest of the config schema).
PlantParams load_params(const std::filesystem::path& file);

// Small-angle dq model x' = A x + B u with x = (I_d, I_q), u = delta.
struct LinearPlant {
    Mat2 a;   // 1/s
    Vec2 b;   // A/(s*rad)
};

// A feasible steady-state pair: A x* + B u* = 0 (linear case) or the
// nonlinear equilibrium at angle u*.
struct Reference {
    Vec2 x_star;       // ampere
    double u_star = 0.0;  // radian
};

// A = [[-R/L, w], [-w, -R/L]], B = (0, V/L).
LinearPlant build_linear_plant(const PlantParams& params);

// Full dq dynamics: x' = A_rot x + (1/L) * ([V cos d, V sin d] - [E, 0]),
// with the frame fixed at omega_nom.
Vec2 nonlinear_deriv(Vec2 x, double delta, const PlantParams& params);

Vec2 linear_deriv(Vec2 x, double u, const LinearPlant& plant);

struct PowerOutput {
    double active = 0.0;    // P, watt
    double reactive = 0.0;  // Q, var
};

PowerOutput power_output(Vec2 x, double delta, double inverter_voltage);

// Steady state x* = -A^-1 B u* scaled so that ||x*|| = |magnitude| and
// sign(u*) = sign(magnitude). Requires |magnitude| <= current limit.
// Fails when A^-1 B = 0 (no reference direction exists).
Reference solve_linear_reference(double magnitude, const PlantParams& params);
Reference solve_linear_reference(double magnitude, const LinearPlant& plant,
                                 double current_limit);

// Bisection on delta in [0, pi/2] against the monotone steady-state current
// magnitude of the nonlinear model; tolerance 1e-9 A, at most 200 halvings.
// Requires 0 < magnitude <= current limit and reachability in the bracket.
Reference solve_nonlinear_reference(double magnitude, const PlantParams& params);

// Nonlinear steady state for a fixed angle (exposed for tests and the
// reference solver): x(delta) = -A^-1 (1/L)([V cos d - E, V sin d]).
Vec2 nonlinear_steady_state(double delta, const PlantParams& params);

}  // namespace invsafe
