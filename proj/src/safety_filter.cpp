#include "invsafe/safety_filter.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace invsafe {

double barrier_h(Vec2 x, const BarrierConfig& cfg) {
    return cfg.current_limit * cfg.current_limit - x.squared_norm();
}

double lyapunov_v(Vec2 x, Vec2 x_star) { return (x - x_star).squared_norm(); }

FilterCoefficients filter_coefficients(Vec2 x, Vec2 x_star, const LinearPlant& plant,
                                       const BarrierConfig& cfg) {
    const Vec2 grad_h = x * -2.0;
    const Vec2 grad_v = (x - x_star) * 2.0;
    const Vec2 drift = plant.a * x;
    FilterCoefficients c;
    c.a_cbf = grad_h.dot(plant.b);
    c.b_cbf = -cfg.alpha * barrier_h(x, cfg) - grad_h.dot(drift);
    c.a_clf = grad_v.dot(plant.b);
    c.b_clf = -grad_v.dot(drift);
    return c;
}

FilterStep closed_form_filter(double u_nom, const FilterCoefficients& c) {
    constexpr double kInf = std::numeric_limits<double>::infinity();

    FilterStep step;
    step.a_cbf = c.a_cbf;
    step.b_cbf = c.b_cbf;
    step.a_clf = c.a_clf;
    step.b_clf = c.b_clf;
    step.u_nom = u_nom;
    step.u_lb = -kInf;
    step.u_ub = kInf;

    if (c.a_cbf * u_nom >= c.b_cbf && c.a_clf * u_nom <= c.b_clf) {
        step.u_bar = u_nom;
        step.active = false;
        return step;
    }

    double cbf_lb = -kInf, cbf_ub = kInf;
    if (c.a_cbf > 0.0) {
        cbf_lb = c.b_cbf / c.a_cbf;
    } else if (c.a_cbf < 0.0) {
        cbf_ub = c.b_cbf / c.a_cbf;
    } else if (c.b_cbf > 0.0) {
        // 0 * u >= b_cbf > 0: no input can satisfy the barrier constraint.
        // Unreachable from the safe set (b_cbf <= -2 (R/L) ||x||^2 there).
        throw std::runtime_error("closed_form_filter: CBF constraint unsatisfiable");
    }

    double clf_lb = -kInf, clf_ub = kInf;
    bool clf_impossible = false;
    if (c.a_clf > 0.0) {
        clf_ub = c.b_clf / c.a_clf;
    } else if (c.a_clf < 0.0) {
        clf_lb = c.b_clf / c.a_clf;
    } else if (c.b_clf < 0.0) {
        clf_impossible = true;  // 0 * u <= b_clf < 0
    }

    double lb = std::max(cbf_lb, clf_lb);
    double ub = std::min(cbf_ub, clf_ub);
    if (clf_impossible || lb > ub + 1e-12) {
        // Safety has precedence: keep the CBF half-plane, drop the CLF one.
        step.infeasible_relaxed = true;
        lb = cbf_lb;
        ub = cbf_ub;
    }

    step.u_lb = lb;
    step.u_ub = ub;
    step.u_bar = std::min(ub, std::max(u_nom, lb));
    step.active = step.u_bar != u_nom;
    return step;
}

}  // namespace invsafe
