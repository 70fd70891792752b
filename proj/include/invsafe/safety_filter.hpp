// Current-magnitude safety filter: barrier/Lyapunov functions, their scalar
// constraint coefficients for the linear plant, and the closed-form
// projection of a nominal angle command onto the constraint interval.
// Stateless and thread-safe.
#pragma once

#include "invsafe/linalg.hpp"
#include "invsafe/plant.hpp"

namespace invsafe {

struct BarrierConfig {
    double current_limit = 5.0;  // |I|max, ampere
    double alpha = 1000.0;       // 1/s, linear class-K slope

    void validate() const {
        if (!(current_limit > 0.0)) throw std::invalid_argument("BarrierConfig: I_max <= 0");
        if (!(alpha > 0.0)) throw std::invalid_argument("BarrierConfig: alpha <= 0");
    }
};

// h(x) = I_max^2 - ||x||^2; the safe set is {h >= 0}.
double barrier_h(Vec2 x, const BarrierConfig& cfg);

// V(x) = ||x - x*||^2.
double lyapunov_v(Vec2 x, Vec2 x_star);

// Scalar half-plane coefficients of the two constraints at state x:
//   CBF:  a_cbf * u >= b_cbf
//   CLF:  a_clf * u <= b_clf
struct FilterCoefficients {
    double a_cbf = 0.0;
    double b_cbf = 0.0;
    double a_clf = 0.0;
    double b_clf = 0.0;
};

FilterCoefficients filter_coefficients(Vec2 x, Vec2 x_star, const LinearPlant& plant,
                                       const BarrierConfig& cfg);

struct FilterStep {
    double a_cbf = 0.0, b_cbf = 0.0;
    double a_clf = 0.0, b_clf = 0.0;
    double u_lb = 0.0, u_ub = 0.0;  // interval actually projected onto (+-inf if unbounded)
    double u_nom = 0.0;
    double u_bar = 0.0;
    bool active = false;              // u_bar != u_nom
    bool infeasible_relaxed = false;  // CLF bound dropped, CBF kept
};

// Closed-form scalar QP: pass the nominal through when it satisfies both
// constraints, otherwise clamp it onto [u_lb, u_ub] built from the
// constraint signs. An empty interval keeps the CBF bound and drops the CLF
// one (safety takes precedence over convergence) and flags the step.
// Throws only on an unsatisfiable CBF half-plane (a_cbf = 0, b_cbf > 0),
// which cannot occur for states in the safe set of this plant.
FilterStep closed_form_filter(double u_nom, const FilterCoefficients& coeffs);

}  // namespace invsafe
