#include "invsafe/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace invsafe {

namespace {

struct LawEvaluation {
    double u = 0.0;
    bool filter_active = false;
    bool infeasible_relaxed = false;
};

class LawEvaluator {
public:
    LawEvaluator(const ControlLaw& law, const LinearPlant& plant, const Reference& ref)
        : law_(law), plant_(plant), ref_(ref) {}

    LawEvaluation operator()(Vec2 x) const {
        if (const auto* linear = std::get_if<LinearGainLaw>(&law_))
            return {feedback_law(linear->gain, ref_, x), false, false};
        const auto& cbf = std::get<CbfFilteredLaw>(law_);
        const double u_nom = feedback_law(cbf.nominal_gain, ref_, x);
        const FilterStep step = closed_form_filter(
            u_nom, filter_coefficients(x, ref_.x_star, plant_, cbf.barrier));
        return {step.u_bar, step.active, step.infeasible_relaxed};
    }

private:
    const ControlLaw& law_;
    const LinearPlant& plant_;
    const Reference& ref_;
};

}  // namespace

Trajectory simulate(const PlantParams& params, PlantKind kind, const ControlLaw& law,
                    Vec2 x0, const Reference& ref, const SimConfig& cfg) {
    params.validate();
    cfg.validate();
    if (const auto* cbf = std::get_if<CbfFilteredLaw>(&law)) cbf->barrier.validate();
    if (!x0.is_finite())
        throw std::invalid_argument("simulate: initial state is not finite");

    const LinearPlant plant = build_linear_plant(params);
    const LawEvaluator evaluate(law, plant, ref);
    const auto deriv = [&](Vec2 x, double u) {
        return kind == PlantKind::linear ? linear_deriv(x, u, plant)
                                         : nonlinear_deriv(x, u, params);
    };
    const auto stage = [&](Vec2 x) { return deriv(x, evaluate(x).u); };

    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    const double h_limit = params.current_limit * params.current_limit;

    Trajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.inputs.reserve(n_steps + 1);
    traj.h_values.reserve(n_steps + 1);
    traj.filter_active.reserve(n_steps + 1);

    Vec2 x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.h_values.push_back(h_limit - x.squared_norm());

    const double dt = cfg.dt;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const LawEvaluation applied = evaluate(x);
        traj.inputs.push_back(applied.u);
        traj.filter_active.push_back(applied.filter_active ? 1 : 0);
        if (applied.infeasible_relaxed) ++traj.infeasible_relaxed_count;

        const Vec2 k1 = deriv(x, applied.u);
        const Vec2 k2 = stage(x + k1 * (0.5 * dt));
        const Vec2 k3 = stage(x + k2 * (0.5 * dt));
        const Vec2 k4 = stage(x + k3 * dt);
        x = x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);

        if (!x.is_finite())
            throw std::runtime_error("simulate: state became non-finite at step " +
                                     std::to_string(k));
        traj.times.push_back(static_cast<double>(k + 1) * dt);
        traj.states.push_back(x);
        traj.h_values.push_back(h_limit - x.squared_norm());
    }

    const LawEvaluation terminal = evaluate(x);
    traj.inputs.push_back(terminal.u);
    traj.filter_active.push_back(terminal.filter_active ? 1 : 0);
    if (terminal.infeasible_relaxed) ++traj.infeasible_relaxed_count;

    traj.min_h = *std::min_element(traj.h_values.begin(), traj.h_values.end());
    traj.max_current = 0.0;
    for (const Vec2& s : traj.states)
        traj.max_current = std::max(traj.max_current, s.norm());
    traj.unsafe = traj.max_current > params.current_limit * (1.0 + 1e-6);
    return traj;
}

double trajectory_cost(const Trajectory& traj, const LqrWeights& weights,
                       const Reference& ref) {
    if (traj.states.size() < 2 || traj.inputs.size() + 1 < traj.states.size())
        throw std::invalid_argument("trajectory_cost: inconsistent trajectory grids");
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const double dt = traj.times[k + 1] - traj.times[k];
        const Vec2 xe = traj.states[k] - ref.x_star;
        const double ue = traj.inputs[k] - ref.u_star;
        acc += dt * (xe.dot(weights.q * xe) + weights.r * ue * ue);
    }
    return 1000.0 * acc;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int decimate) {
    if (decimate < 1) throw std::invalid_argument("write_trajectory_csv: decimate < 1");
    out << "t,i_d,i_q,delta,h,filter_active\n";
    if (traj.states.empty()) return;
    char line[192];
    const std::size_t last = traj.states.size() - 1;
    for (std::size_t k = 0; k < traj.states.size();
         k = (k == last) ? last + 1 : std::min(k + decimate, last)) {
        std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", traj.times[k],
                      traj.states[k].d, traj.states[k].q, traj.inputs[k], traj.h_values[k],
                      traj.filter_active[k] ? 1 : 0);
        out << line;
    }
}

}  // namespace invsafe
