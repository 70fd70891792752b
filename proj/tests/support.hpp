// Shared generators and brute-force oracles for the unit and acceptance
// suites. Everything here is test-only and independent of the library's
// solution paths.
#pragma once

#include <cmath>
#include <optional>

#include "invsafe/plant.hpp"
#include "invsafe/rng.hpp"
#include "invsafe/safety_filter.hpp"

namespace invsafe::testing {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

struct SafetyInequalityInstance {
    Mat2 m;
    Vec2 y;
    Vec2 z;
};

// Builds M from a chosen left eigenpair so that every hypothesis of the
// quadratic-form safety inequality hold by construction: in the basis {w1, w2},
// y along w1, M_b = [[lambda, 0], [beta, gamma]]; the symmetric part is
// [[2 lambda, beta], [beta, 2 gamma]], and beta^2 <= lambda (2 gamma -
// lambda) pins lambda_min(M + M^T) >= max(lambda, 0).
inline SafetyInequalityInstance safety_inequality_instance(Xoshiro256pp& rng) {
    const double lambda = rng.uniform(0.0, 2.0);
    const double gamma = lambda + rng.uniform(0.0, 3.0);
    const double beta_cap = std::sqrt(std::max(0.0, lambda * (2.0 * gamma - lambda)));
    const double beta = rng.uniform(-beta_cap, beta_cap);

    const double theta = rng.uniform(0.0, kTwoPi);
    const Vec2 w1{std::cos(theta), std::sin(theta)};
    const Vec2 w2{-std::sin(theta), std::cos(theta)};
    // M = Q M_b Q^T with Q = [w1 w2].
    const Mat2 q{w1.d, w2.d, w1.q, w2.q};
    const Mat2 m_b{lambda, 0.0, beta, gamma};
    const Mat2 m = q * m_b * q.transpose();

    const double y_norm = rng.uniform(0.1, 3.0);
    const double z_norm = y_norm * (1.0 + rng.uniform(0.0, 2.0));
    const double psi = rng.uniform(0.0, kTwoPi);
    return {m, w1 * y_norm, Vec2{std::cos(psi), std::sin(psi)} * z_norm};
}

struct RandomPlantCase {
    LinearPlant plant;
    Vec2 x_star;
};

// Random plant with A + A^T < 0 (A = -(G G^T + 0.1 I) + antisymmetric part)
// and a feasible reference x* = -A^-1 B u* with x*^T B bounded away from 0.
inline RandomPlantCase random_safe_plant(Xoshiro256pp& rng) {
    for (;;) {
        const double g00 = rng.uniform(-1.0, 1.0), g01 = rng.uniform(-1.0, 1.0);
        const double g10 = rng.uniform(-1.0, 1.0), g11 = rng.uniform(-1.0, 1.0);
        const Mat2 g{g00, g01, g10, g11};
        const Mat2 s = g * g.transpose() + Mat2::identity() * 0.1;
        const double w = rng.uniform(-2.0, 2.0);
        const Mat2 a = Mat2{0.0, w, -w, 0.0} - s;

        Vec2 b{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        if (b.norm() < 0.3) continue;

        const double u_star = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0);
        const Vec2 x_star = -(a.inverse() * b) * u_star;
        if (std::fabs(x_star.dot(b)) < 1e-6 * std::max(1.0, x_star.norm() * b.norm()))
            continue;
        return {LinearPlant{a, b}, x_star};
    }
}

// Brute-force projection: the feasible grid point closest to u_nom, if any.
inline std::optional<double> grid_projection(double u_nom, const FilterCoefficients& c,
                                             double lo, double hi, int n) {
    std::optional<double> best;
    for (int i = 0; i < n; ++i) {
        const double u = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
        if (c.a_cbf * u >= c.b_cbf && c.a_clf * u <= c.b_clf)
            if (!best || std::fabs(u - u_nom) < std::fabs(*best - u_nom)) best = u;
    }
    return best;
}

// Uniform point in the closed disk of the given radius.
inline Vec2 random_in_disk(Xoshiro256pp& rng, double radius) {
    const double r = radius * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, kTwoPi);
    return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace invsafe::testing
