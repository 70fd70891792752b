#include "invsafe/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace invsafe {

namespace {

// Solves N^T P + P N = -C for symmetric P (unknowns p00, p01, p11) by
// Gaussian elimination with partial pivoting on the 3x3 coefficient matrix.
Mat2 solve_lyapunov(const Mat2& n, const Mat2& c) {
    double a[3][4] = {
        {2.0 * n.m00, 2.0 * n.m10, 0.0, -c.m00},
        {n.m01, n.m00 + n.m11, n.m10, -c.m01},
        {0.0, 2.0 * n.m01, 2.0 * n.m11, -c.m11},
    };
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
        if (std::fabs(a[pivot][col]) < 1e-300)
            throw std::runtime_error("lqr_gain: singular Lyapunov system");
        if (pivot != col)
            for (int k = 0; k < 4; ++k) std::swap(a[col][k], a[pivot][k]);
        for (int row = col + 1; row < 3; ++row) {
            const double f = a[row][col] / a[col][col];
            for (int k = col; k < 4; ++k) a[row][k] -= f * a[col][k];
        }
    }
    double p[3];
    for (int row = 2; row >= 0; --row) {
        double acc = a[row][3];
        for (int k = row + 1; k < 3; ++k) acc -= a[row][k] * p[k];
        p[row] = acc / a[row][row];
    }
    return {p[0], p[1], p[1], p[2]};
}

Mat2 riccati_residual(const Mat2& a, Vec2 b, const Mat2& q, double r, const Mat2& p) {
    const Vec2 pb = p * b;
    return a.transpose() * p + p * a - outer(pb, pb) * (1.0 / r) + q;
}

}  // namespace

Mat2 care_solve(const LinearPlant& plant, const LqrWeights& weights) {
    if (!(weights.r > 0.0))
        throw std::invalid_argument("lqr_gain: R weight must be positive");
    if (sym_eigenvalues(weights.q).lo < -1e-12 * std::max(1.0, weights.q.max_abs()))
        throw std::invalid_argument("lqr_gain: Q weight must be positive semidefinite");

    const Mat2& a = plant.a;
    const Vec2 b = plant.b;
    const Vec2 ab = a * b;
    const double ctrb_det = b.d * ab.q - b.q * ab.d;
    if (std::fabs(ctrb_det) <= 1e-12 * std::max(1.0, b.norm() * ab.norm()))
        throw std::domain_error("lqr_gain: (A, B) is not controllable");
    if (!is_hurwitz(a))
        throw std::runtime_error("lqr_gain: A must be Hurwitz for the K0 = 0 start");

    constexpr int kMaxIterations = 100;
    Vec2 k{0.0, 0.0};  // K0 = 0 is stabilizing since A is Hurwitz
    Mat2 p{};
    for (int it = 0; it < kMaxIterations; ++it) {
        const Mat2 n = a - outer(b, k);
        const Mat2 c = weights.q + outer(k, k) * weights.r;
        p = solve_lyapunov(n, c);
        const Vec2 k_next = (p * b) * (1.0 / weights.r);
        const double step = (k_next - k).norm();
        k = k_next;
        if (step <= 1e-13 * std::max(1.0, k.norm())) break;
    }

    const double res = riccati_residual(a, b, weights.q, weights.r, p).frobenius_norm();
    if (res > 1e-8 * std::max(weights.q.frobenius_norm(), 1e-30))
        throw std::runtime_error("lqr_gain: Riccati iteration did not converge");
    if (sym_eigenvalues(p).lo < -1e-10 * std::max(1.0, p.max_abs()))
        throw std::runtime_error("lqr_gain: Riccati solution is not positive semidefinite");
    return p;
}

GainMatrix lqr_gain(const LinearPlant& plant, const LqrWeights& weights) {
    const Mat2 p = care_solve(plant, weights);
    const GainMatrix gain{(p * plant.b) * (1.0 / weights.r)};
    if (!is_hurwitz(plant.a - outer(plant.b, gain.row)))
        throw std::runtime_error("lqr_gain: closed loop is not Hurwitz");
    return gain;
}

GainMatrix safe_gain_from_lambda(const LinearPlant& plant, Vec2 x_star, double lambda) {
    const double denom = x_star.dot(plant.b);
    if (std::fabs(denom) <= 1e-12 * std::max(1.0, x_star.norm() * plant.b.norm()))
        throw std::domain_error("safe_gain_from_lambda: x*^T B = 0, gain is undefined");
    const Vec2 numerator = left_multiply(x_star, plant.a) - x_star * lambda;
    return {numerator * (1.0 / denom)};
}

SafeGainCertificate synthesize_safe_gain(const LinearPlant& plant, Vec2 x_star) {
    const Mat2 a_sym = plant.a + plant.a.transpose();
    if (!(sym_eigenvalues(a_sym).hi < 0.0))
        throw std::invalid_argument("synthesize_safe_gain: A + A^T must be negative definite");
    const double denom = x_star.dot(plant.b);
    if (std::fabs(denom) <= 1e-12 * std::max(1.0, x_star.norm() * plant.b.norm()))
        throw std::domain_error("synthesize_safe_gain: x*^T B = 0");

    constexpr double kMargin = 1e-8;  // strictness margin on N + N^T < 0
    const Vec2 k_const = left_multiply(x_star, plant.a) * (1.0 / denom);
    const Vec2 k_slope = x_star * (-1.0 / denom);

    auto closed_loop_eig_max = [&](double lambda) {
        const Mat2 n = plant.a - outer(plant.b, k_const + k_slope * lambda);
        return sym_eigenvalues(n + n.transpose()).hi;
    };
    auto feasible = [&](double lambda) {
        const double e = closed_loop_eig_max(lambda);
        return e <= lambda && e <= -kMargin;
    };
    auto objective = [&](double lambda) {
        return (k_const + k_slope * lambda).squared_norm();
    };

    // Log-spaced feasibility scan over lambda in [-1e7, -1e-3). The feasible
    // set is an interval (eig_max of an affine matrix pencil is convex in
    // lambda), so the hull of the feasible grid points is feasible.
    constexpr int kGridPoints = 2001;
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (int i = 0; i < kGridPoints; ++i) {
        const double t = -3.0 + 10.0 * static_cast<double>(i) / (kGridPoints - 1);
        const double lambda = -std::pow(10.0, t);
        if (feasible(lambda)) {
            if (!any) {
                lo = hi = lambda;
                any = true;
            } else {
                lo = std::min(lo, lambda);
                hi = std::max(hi, lambda);
            }
        }
    }
    if (!any)
        throw std::runtime_error(
            "synthesize_safe_gain: no feasible lambda in [-1e7, -1e-3); bad plant data");

    // Golden-section refinement of the (convex) objective on [lo, hi].
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = objective(x1), f2 = objective(x2);
    while (hi - lo > 1e-12 * (std::fabs(lo) + std::fabs(hi) + 1.0)) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = objective(x2);
        }
    }
    const double lambda = 0.5 * (lo + hi);

    SafeGainCertificate cert;
    cert.gain = {k_const + k_slope * lambda};
    cert.lambda = lambda;
    const Mat2 n = plant.a - outer(plant.b, cert.gain.row);
    cert.eig_max = sym_eigenvalues(n + n.transpose()).hi;
    cert.residual_alignment = (left_multiply(x_star, n) - x_star * lambda).norm();

    const double scale = std::max(1.0, x_star.norm() * plant.a.max_abs());
    if (cert.residual_alignment > 1e-8 * scale ||
        cert.eig_max > lambda + 1e-8 * std::max(1.0, std::fabs(lambda)) ||
        cert.eig_max > -kMargin)
        throw std::runtime_error("synthesize_safe_gain: certificate validation failed");
    return cert;
}

double feedback_law(const GainMatrix& gain, const Reference& ref, Vec2 x) {
    return ref.u_star - gain.apply(x - ref.x_star);
}

bool check_safety_inequality(const Mat2& m, Vec2 y, Vec2 z) {
    const double scale = std::max(1.0, m.max_abs());
    if (y.norm() > z.norm() * (1.0 + 1e-12))
        throw std::invalid_argument("check_safety_inequality: requires ||y|| <= ||z||");
    if (y.norm() == 0.0)
        throw std::invalid_argument("check_safety_inequality: y must be a nonzero eigenvector");

    const Vec2 mty = m.transpose() * y;
    const double lambda = mty.dot(y) / y.squared_norm();
    if ((mty - y * lambda).norm() > 1e-8 * scale * y.norm())
        throw std::invalid_argument("check_safety_inequality: y is not a left eigenvector of M");

    const SymEigenvalues eig = sym_eigenvalues(m + m.transpose());
    if (eig.lo < -1e-10 * scale)
        throw std::invalid_argument("check_safety_inequality: M + M^T is not positive semidefinite");
    if (eig.lo < lambda - 1e-10 * scale)
        throw std::invalid_argument("check_safety_inequality: lambda_min(M + M^T) < lambda");

    const double lhs = z.dot(m * z) - z.dot(m * y);
    return lhs >= -1e-10 * z.squared_norm() * m.frobenius_norm();
}

}  // namespace invsafe
