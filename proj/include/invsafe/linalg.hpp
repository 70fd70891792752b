// Small fixed-size linear algebra for the 2-state inverter model.
// Everything is closed form; no external solver is involved.
#pragma once

#include <cmath>
#include <stdexcept>

namespace invsafe {

struct Vec2 {
    double d = 0.0;
    double q = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {d + o.d, q + o.q}; }
    constexpr Vec2 operator-(Vec2 o) const { return {d - o.d, q - o.q}; }
    constexpr Vec2 operator-() const { return {-d, -q}; }
    constexpr Vec2 operator*(double s) const { return {d * s, q * s}; }

    constexpr double dot(Vec2 o) const { return d * o.d + q * o.q; }
    constexpr double squared_norm() const { return d * d + q * q; }
    double norm() const { return std::hypot(d, q); }
    bool is_finite() const { return std::isfinite(d) && std::isfinite(q); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

struct Mat2 {
    double m00 = 0.0, m01 = 0.0;
    double m10 = 0.0, m11 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr Mat2 operator+(const Mat2& o) const {
        return {m00 + o.m00, m01 + o.m01, m10 + o.m10, m11 + o.m11};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {m00 - o.m00, m01 - o.m01, m10 - o.m10, m11 - o.m11};
    }
    constexpr Mat2 operator*(double s) const { return {m00 * s, m01 * s, m10 * s, m11 * s}; }
    constexpr Vec2 operator*(Vec2 v) const {
        return {m00 * v.d + m01 * v.q, m10 * v.d + m11 * v.q};
    }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
                m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
    }

    constexpr Mat2 transpose() const { return {m00, m10, m01, m11}; }
    constexpr double trace() const { return m00 + m11; }
    constexpr double det() const { return m00 * m11 - m01 * m10; }
    double frobenius_norm() const {
        return std::sqrt(m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11);
    }
    double max_abs() const {
        return std::max(std::max(std::fabs(m00), std::fabs(m01)),
                        std::max(std::fabs(m10), std::fabs(m11)));
    }

    // Adjugate over determinant. Throws on a singular matrix.
    Mat2 inverse() const {
        const double dd = det();
        if (dd == 0.0 || !std::isfinite(dd))
            throw std::domain_error("Mat2::inverse: singular matrix");
        const double s = 1.0 / dd;
        return {m11 * s, -m01 * s, -m10 * s, m00 * s};
    }
};

// Row vector times matrix (r^T M), returned as a plain Vec2.
constexpr Vec2 left_multiply(Vec2 r, const Mat2& m) {
    return {r.d * m.m00 + r.q * m.m10, r.d * m.m01 + r.q * m.m11};
}

// Column times row: c r^T.
constexpr Mat2 outer(Vec2 c, Vec2 r) {
    return {c.d * r.d, c.d * r.q, c.q * r.d, c.q * r.q};
}

struct SymEigenvalues {
    double lo = 0.0;
    double hi = 0.0;
};

// Eigenvalues of a symmetric 2x2 matrix (the (0,1) entry is used as the
// off-diagonal; callers pass matrices that are symmetric by construction).
inline SymEigenvalues sym_eigenvalues(const Mat2& s) {
    const double mid = 0.5 * (s.m00 + s.m11);
    const double rad = std::hypot(0.5 * (s.m00 - s.m11), s.m01);
    return {mid - rad, mid + rad};
}

// Routh-Hurwitz for 2x2: both eigenvalue real parts negative.
constexpr bool is_hurwitz(const Mat2& a) { return a.trace() < 0.0 && a.det() > 0.0; }

}  // namespace invsafe
