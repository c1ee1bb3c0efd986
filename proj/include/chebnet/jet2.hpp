#pragma once

// Order-2 bivariate jets: a value together with all partial derivatives
// up to second order in two parameters (p, q).  The mixed partial is
// stored once, so symmetry of second derivatives holds by construction.

#include <cmath>
#include <stdexcept>

namespace chebnet {

struct Jet2 {
    double value = 0.0;
    double d_p = 0.0;
    double d_q = 0.0;
    double d_pp = 0.0;
    double d_pq = 0.0;
    double d_qq = 0.0;

    Jet2() = default;
    explicit Jet2(double v) : value(v) {}
    Jet2(double v, double dp, double dq, double dpp, double dpq, double dqq)
        : value(v), d_p(dp), d_q(dq), d_pp(dpp), d_pq(dpq), d_qq(dqq) {}

    // Seeds for the independent variables.
    static Jet2 var_p(double v) { return Jet2(v, 1.0, 0.0, 0.0, 0.0, 0.0); }
    static Jet2 var_q(double v) { return Jet2(v, 0.0, 1.0, 0.0, 0.0, 0.0); }
    static Jet2 constant(double v) { return Jet2(v); }

    Jet2 operator-() const {
        return Jet2(-value, -d_p, -d_q, -d_pp, -d_pq, -d_qq);
    }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
    return Jet2(a.value + b.value, a.d_p + b.d_p, a.d_q + b.d_q,
                a.d_pp + b.d_pp, a.d_pq + b.d_pq, a.d_qq + b.d_qq);
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
    return Jet2(a.value - b.value, a.d_p - b.d_p, a.d_q - b.d_q,
                a.d_pp - b.d_pp, a.d_pq - b.d_pq, a.d_qq - b.d_qq);
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    return Jet2(a.value * b.value,
                a.d_p * b.value + a.value * b.d_p,
                a.d_q * b.value + a.value * b.d_q,
                a.d_pp * b.value + 2.0 * a.d_p * b.d_p + a.value * b.d_pp,
                a.d_pq * b.value + a.d_p * b.d_q + a.d_q * b.d_p + a.value * b.d_pq,
                a.d_qq * b.value + 2.0 * a.d_q * b.d_q + a.value * b.d_qq);
}

inline Jet2 operator+(const Jet2& a, double c) { return a + Jet2(c); }
inline Jet2 operator+(double c, const Jet2& a) { return Jet2(c) + a; }
inline Jet2 operator-(const Jet2& a, double c) { return a - Jet2(c); }
inline Jet2 operator-(double c, const Jet2& a) { return Jet2(c) - a; }

inline Jet2 operator*(const Jet2& a, double c) {
    return Jet2(a.value * c, a.d_p * c, a.d_q * c, a.d_pp * c, a.d_pq * c, a.d_qq * c);
}
inline Jet2 operator*(double c, const Jet2& a) { return a * c; }

// Composition with a scalar function given its first two derivatives at u.
inline Jet2 compose(const Jet2& u, double f, double f1, double f2) {
    return Jet2(f,
                f1 * u.d_p,
                f1 * u.d_q,
                f2 * u.d_p * u.d_p + f1 * u.d_pp,
                f2 * u.d_p * u.d_q + f1 * u.d_pq,
                f2 * u.d_q * u.d_q + f1 * u.d_qq);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) {
    const double inv = 1.0 / b.value;
    return a * compose(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}
inline Jet2 operator/(const Jet2& a, double c) { return a * (1.0 / c); }
inline Jet2 operator/(double c, const Jet2& b) { return Jet2(c) / b; }

inline Jet2 sin(const Jet2& u) {
    const double s = std::sin(u.value), c = std::cos(u.value);
    return compose(u, s, c, -s);
}

inline Jet2 cos(const Jet2& u) {
    const double s = std::sin(u.value), c = std::cos(u.value);
    return compose(u, c, -s, -c);
}

inline Jet2 tan(const Jet2& u) {
    const double t = std::tan(u.value), s = 1.0 + t * t;
    return compose(u, t, s, 2.0 * t * s);
}

inline Jet2 sinh(const Jet2& u) {
    const double s = std::sinh(u.value), c = std::cosh(u.value);
    return compose(u, s, c, s);
}

inline Jet2 cosh(const Jet2& u) {
    const double s = std::sinh(u.value), c = std::cosh(u.value);
    return compose(u, c, s, c);
}

inline Jet2 tanh(const Jet2& u) {
    const double t = std::tanh(u.value), s = 1.0 - t * t;
    return compose(u, t, s, -2.0 * t * s);
}

inline Jet2 exp(const Jet2& u) {
    const double e = std::exp(u.value);
    return compose(u, e, e, e);
}

inline Jet2 log(const Jet2& u) {
    const double inv = 1.0 / u.value;
    return compose(u, std::log(u.value), inv, -inv * inv);
}

inline Jet2 sqrt(const Jet2& u) {
    const double s = std::sqrt(u.value);
    const double f1 = 0.5 / s;
    return compose(u, s, f1, -0.5 * f1 / u.value);
}

inline Jet2 atan(const Jet2& u) {
    const double d = 1.0 + u.value * u.value;
    return compose(u, std::atan(u.value), 1.0 / d, -2.0 * u.value / (d * d));
}

inline Jet2 acos(const Jet2& u) {
    const double d = 1.0 - u.value * u.value;
    const double s = std::sqrt(d);
    return compose(u, std::acos(u.value), -1.0 / s, -u.value / (s * d));
}

inline Jet2 acosh(const Jet2& u) {
    const double d = u.value * u.value - 1.0;
    const double s = std::sqrt(d);
    return compose(u, std::acosh(u.value), 1.0 / s, -u.value / (s * d));
}

inline Jet2 atanh(const Jet2& u) {
    const double d = 1.0 - u.value * u.value;
    return compose(u, std::atanh(u.value), 1.0 / d, 2.0 * u.value / (d * d));
}

inline bool finite(const Jet2& a) {
    return std::isfinite(a.value) && std::isfinite(a.d_p) && std::isfinite(a.d_q) &&
           std::isfinite(a.d_pp) && std::isfinite(a.d_pq) && std::isfinite(a.d_qq);
}

// A 3-vector of jets; carries a point of space with all partials to order 2.
struct Jet2Vec3 {
    Jet2 x, y, z;

    Jet2Vec3() = default;
    Jet2Vec3(Jet2 xx, Jet2 yy, Jet2 zz) : x(xx), y(yy), z(zz) {}

    Jet2Vec3 operator-() const { return {-x, -y, -z}; }
};

inline Jet2Vec3 operator+(const Jet2Vec3& a, const Jet2Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Jet2Vec3 operator-(const Jet2Vec3& a, const Jet2Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Jet2Vec3 operator*(const Jet2& s, const Jet2Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
}
inline Jet2Vec3 operator*(double s, const Jet2Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
}
inline Jet2Vec3 operator/(const Jet2Vec3& a, const Jet2& s) {
    return {a.x / s, a.y / s, a.z / s};
}

inline Jet2 dot(const Jet2Vec3& a, const Jet2Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Jet2Vec3 cross(const Jet2Vec3& a, const Jet2Vec3& b) {
    return {a.y * b.z - a.z * b.y,
            a.z * b.x - a.x * b.z,
            a.x * b.y - a.y * b.x};
}

// Triple product [u, v, w] = u . (v x w); antisymmetric under any swap.
inline Jet2 triple(const Jet2Vec3& u, const Jet2Vec3& v, const Jet2Vec3& w) {
    return dot(u, cross(v, w));
}

inline Jet2 norm(const Jet2Vec3& a) { return sqrt(dot(a, a)); }

inline bool finite(const Jet2Vec3& a) {
    return finite(a.x) && finite(a.y) && finite(a.z);
}

}  // namespace chebnet
