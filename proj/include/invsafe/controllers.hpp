// Gain synthesis for the linear inverter plant: the nominal LQR gain, and a
// safe linear gain whose closed loop keeps the current-magnitude disk
// invariant for a given reference direction.
#pragma once

#include "invsafe/linalg.hpp"
#include "invsafe/plant.hpp"

namespace invsafe {

// 1x2 state feedback row, u = u* - K (x - x*).
struct GainMatrix {
    Vec2 row;  // rad/A

    double apply(Vec2 x) const { return row.dot(x); }
    double norm() const { return row.norm(); }
};

struct LqrWeights {
    Mat2 q = Mat2::identity();  // 1/A^2
    double r = 1.0;             // 1/rad^2

    // Q = I, R = V_nom / (10 L): the benchmark weighting for this plant.
    static LqrWeights benchmark(const PlantParams& params) {
        return {Mat2::identity(), params.nominal_voltage / (10.0 * params.inductance)};
    }
};

// Outcome of the safe-gain synthesis. With N = A - B K the closed loop
// satisfies, within the stated tolerances:
//   x*^T N = lambda x*^T          (residual_alignment)
//   eig_max(N + N^T) <= lambda    and  N + N^T < 0 (eig_max <= -margin)
struct SafeGainCertificate {
    GainMatrix gain;
    double lambda = 0.0;               // 1/s, eigenvalue pinned to x*
    double eig_max = 0.0;              // 1/s, largest eigenvalue of N + N^T
    double residual_alignment = 0.0;   // ||x*^T N - lambda x*^T||
};

// Stabilizing solution P of A^T P + P A - P B r^-1 B^T P + Q = 0 via
// Kleinman-Newton iteration (each step a closed-form 2x2 Lyapunov solve).
// Throws if (A, B) is uncontrollable or the iteration fails to converge.
Mat2 care_solve(const LinearPlant& plant, const LqrWeights& weights);

// K = r^-1 B^T P. A - B K is Hurwitz for any stabilizable input.
GainMatrix lqr_gain(const LinearPlant& plant, const LqrWeights& weights);

// The unique gain with x*^T (A - B K) = lambda x*^T, i.e.
// K = (x*^T A - lambda x*^T) / (x*^T B). Requires x*^T B != 0.
GainMatrix safe_gain_from_lambda(const LinearPlant& plant, Vec2 x_star, double lambda);

// Minimizes ||K(lambda)||_2 over the lambda < 0 for which the closed loop
// is certifiable: a log-spaced feasibility scan over lambda in [-1e7, -1e-3)
// followed by golden-section refinement on the feasible interval (the
// feasible set is an interval and the objective is unimodal there).
SafeGainCertificate synthesize_safe_gain(const LinearPlant& plant, Vec2 x_star);

// u = u* - K (x - x*).
double feedback_law(const GainMatrix& gain, const Reference& ref, Vec2 x);

// Checks the quadratic-form inequality z^T M z - z^T M y >= 0 (up to
// numerical slack) under the hypotheses: ||y|| <= ||z||, y is a left
// eigenvector of M, lambda_min(M + M^T) >= lambda, M + M^T >= 0.
// Inputs violating a hypothesis are rejected with std::invalid_argument.
bool check_safety_inequality(const Mat2& m, Vec2 y, Vec2 z);

}  // namespace invsafe
