#include "invsafe/plant.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace invsafe {

void PlantParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("PlantParams: ") + name +
                                        " must be positive and finite");
    };
    positive(resistance, "R");
    positive(inductance, "L");
    positive(inverter_voltage, "V");
    positive(grid_voltage, "E");
    positive(omega_nom, "omega_nom");
    positive(current_limit, "I_max");
    positive(nominal_voltage, "V_nom");
    positive(nominal_power, "S_nom");
    positive(nominal_current, "I_nom");
    // The model assumes the inverter and grid voltage magnitudes are equal,
    // so the origin is an equilibrium of the nonlinear dynamics.
    if (std::fabs(inverter_voltage - grid_voltage) >
        1e-9 * std::max(inverter_voltage, grid_voltage))
        throw std::invalid_argument("PlantParams: V must equal E");
}

PlantParams load_params(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw std::runtime_error("cannot open params file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad JSON in " + file.string() + ": " + e.what());
    }
    if (!j.is_object())
        throw std::runtime_error("params file must hold a JSON object: " + file.string());

    PlantParams p = PlantParams::bench_defaults();
    auto read = [&](const char* key, double& field) {
        if (j.contains(key)) {
            if (!j[key].is_number())
                throw std::runtime_error(std::string("params key '") + key +
                                         "' must be a number");
            field = j[key].get<double>();
        }
    };
    read("R", p.resistance);
    read("L", p.inductance);
    read("V", p.inverter_voltage);
    read("E", p.grid_voltage);
    read("omega_nom", p.omega_nom);
    read("I_max", p.current_limit);
    read("V_nom", p.nominal_voltage);
    read("S_nom", p.nominal_power);
    read("I_nom", p.nominal_current);
    p.validate();
    return p;
}

LinearPlant build_linear_plant(const PlantParams& params) {
    params.validate();
    const double rl = params.resistance / params.inductance;
    const double w = params.omega_nom;
    LinearPlant plant;
    plant.a = {-rl, w, -w, -rl};
    plant.b = {0.0, params.inverter_voltage / params.inductance};
    return plant;
}

Vec2 nonlinear_deriv(Vec2 x, double delta, const PlantParams& params) {
    const double rl = params.resistance / params.inductance;
    const double w = params.omega_nom;
    const Mat2 a_rot{-rl, w, -w, -rl};
    const Vec2 input{
        (params.inverter_voltage * std::cos(delta) - params.grid_voltage) / params.inductance,
        params.inverter_voltage * std::sin(delta) / params.inductance};
    return a_rot * x + input;
}

Vec2 linear_deriv(Vec2 x, double u, const LinearPlant& plant) {
    return plant.a * x + plant.b * u;
}

PowerOutput power_output(Vec2 x, double delta, double inverter_voltage) {
    const double vd = inverter_voltage * std::cos(delta);
    const double vq = inverter_voltage * std::sin(delta);
    return {1.5 * (vd * x.d + vq * x.q), 1.5 * (vq * x.d - vd * x.q)};
}

Reference solve_linear_reference(double magnitude, const PlantParams& params) {
    return solve_linear_reference(magnitude, build_linear_plant(params),
                                  params.current_limit);
}

Reference solve_linear_reference(double magnitude, const LinearPlant& plant,
                                 double current_limit) {
    if (std::fabs(magnitude) > current_limit * (1.0 + 1e-12))
        throw std::invalid_argument("solve_linear_reference: |magnitude| exceeds current limit");
    const Vec2 direction = -(plant.a.inverse() * plant.b);  // x* = direction * u*
    const double gain = direction.norm();
    if (gain == 0.0)
        throw std::domain_error("solve_linear_reference: A^-1 B = 0, no reference direction");
    Reference ref;
    ref.u_star = magnitude / gain;
    ref.x_star = direction * ref.u_star;
    return ref;
}

Vec2 nonlinear_steady_state(double delta, const PlantParams& params) {
    const double rl = params.resistance / params.inductance;
    const double w = params.omega_nom;
    const Mat2 a_rot{-rl, w, -w, -rl};
    const Vec2 input{
        (params.inverter_voltage * std::cos(delta) - params.grid_voltage) / params.inductance,
        params.inverter_voltage * std::sin(delta) / params.inductance};
    return -(a_rot.inverse() * input);
}

Reference solve_nonlinear_reference(double magnitude, const PlantParams& params) {
    if (!(magnitude > 0.0))
        throw std::invalid_argument("solve_nonlinear_reference: magnitude must be positive");
    if (magnitude > params.current_limit * (1.0 + 1e-12))
        throw std::invalid_argument("solve_nonlinear_reference: magnitude exceeds current limit");

    constexpr double kPi = 3.14159265358979323846;
    constexpr int kMaxIterations = 200;
    constexpr double kToleranceAmps = 1e-9;

    double lo = 0.0;
    double hi = kPi / 2.0;
    if (nonlinear_steady_state(hi, params).norm() < magnitude)
        throw std::domain_error(
            "solve_nonlinear_reference: magnitude unreachable for delta in [0, pi/2]");

    // ||x(delta)|| grows monotonically from 0 on the bracket, so plain
    // bisection on the magnitude residual converges.
    double mid = 0.0;
    for (int i = 0; i < kMaxIterations; ++i) {
        mid = 0.5 * (lo + hi);
        if (nonlinear_steady_state(mid, params).norm() < magnitude)
            lo = mid;
        else
            hi = mid;
    }
    mid = 0.5 * (lo + hi);

    Reference ref;
    ref.u_star = mid;
    ref.x_star = nonlinear_steady_state(mid, params);
    if (std::fabs(ref.x_star.norm() - magnitude) > kToleranceAmps)
        throw std::runtime_error("solve_nonlinear_reference: bisection did not converge");
    return ref;
}

}  // namespace invsafe
