#pragma once

// Elliptic integrals and Jacobi elliptic functions with support for
// negative parameter m.  Incomplete integrals use Carlson symmetric
// forms; the amplitude comes from a Landen (AGM-type) descent; m < 0 is
// mapped into (0, 1) by the standard parameter transformation.

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace chebnet {

// Carlson symmetric integral R_F(x, y, z), duplication algorithm.
inline double carlson_rf(double x, double y, double z) {
    constexpr double tol = 1e-14;
    const double A0 = (x + y + z) / 3.0;
    const double Q = std::pow(3.0 * tol, -1.0 / 6.0) *
                     std::max({std::fabs(A0 - x), std::fabs(A0 - y), std::fabs(A0 - z)});
    double A = A0;
    double pow4 = 1.0;
    while (pow4 * Q > std::fabs(A)) {
        const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
        const double lam = sx * sy + sx * sz + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        A = 0.25 * (A + lam);
        pow4 *= 0.25;
    }
    // Differences scale by 1/4 each step, so (A - x)/A is already the
    // scaled expansion variable.
    const double X = (A - x) / A;
    const double Y = (A - y) / A;
    const double Z = -(X + Y);
    const double E2 = X * Y - Z * Z;
    const double E3 = X * Y * Z;
    return (1.0 - E2 / 10.0 + E3 / 14.0 + E2 * E2 / 24.0 - 3.0 * E2 * E3 / 44.0) /
           std::sqrt(A);
}

// Carlson symmetric integral R_D(x, y, z), duplication algorithm.
inline double carlson_rd(double x, double y, double z) {
    constexpr double tol = 1e-14;
    const double A0 = (x + y + 3.0 * z) / 5.0;
    const double Q = std::pow(0.25 * tol, -1.0 / 6.0) *
                     std::max({std::fabs(A0 - x), std::fabs(A0 - y), std::fabs(A0 - z)});
    double A = A0;
    double fac = 1.0;
    double sum = 0.0;
    while (fac * Q > std::fabs(A)) {
        const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
        const double lam = sx * sy + sx * sz + sy * sz;
        sum += fac / (sz * (z + lam));
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        A = 0.25 * (A + lam);
    }
    const double X = (A - x) / A;
    const double Y = (A - y) / A;
    const double Z = -(X + Y) / 3.0;
    const double E2 = X * Y - 6.0 * Z * Z;
    const double E3 = (3.0 * X * Y - 8.0 * Z * Z) * Z;
    const double E4 = 3.0 * (X * Y - Z * Z) * Z * Z;
    const double E5 = X * Y * Z * Z * Z;
    const double series = 1.0 - 3.0 * E2 / 14.0 + E3 / 6.0 + 9.0 * E2 * E2 / 88.0 -
                          3.0 * E4 / 22.0 - 9.0 * E2 * E3 / 52.0 + 3.0 * E5 / 26.0;
    return 3.0 * sum + fac * series / (A * std::sqrt(A));
}

namespace detail {

constexpr double kPi = 3.14159265358979323846;

// Incomplete integrals on the principal range s in [0, pi/2].
inline double ellip_f_principal(double s, double m) {
    const double sn = std::sin(s), cs = std::cos(s);
    const double t = 1.0 - m * sn * sn;
    if (t <= 0.0) throw ParamOutOfRange("ellip_F: 1 - m sin^2 t not positive");
    if (sn == 0.0) return 0.0;
    return sn * carlson_rf(cs * cs, t, 1.0);
}

inline double ellip_e_principal(double s, double m) {
    const double sn = std::sin(s), cs = std::cos(s);
    const double t = 1.0 - m * sn * sn;
    if (t <= 0.0) throw ParamOutOfRange("ellip_E: 1 - m sin^2 t not positive");
    if (sn == 0.0) return 0.0;
    return sn * carlson_rf(cs * cs, t, 1.0) -
           m / 3.0 * sn * sn * sn * carlson_rd(cs * cs, t, 1.0);
}

}  // namespace detail

// Complete integral of the first kind K(m), m < 1.
inline double ellip_K(double m) {
    if (m >= 1.0) throw ParamOutOfRange("ellip_K: m must be < 1");
    return carlson_rf(0.0, 1.0 - m, 1.0);
}

// Complete integral of the second kind E(m), m < 1.
inline double ellip_Ec(double m) {
    if (m >= 1.0) throw ParamOutOfRange("ellip_E complete: m must be < 1");
    return carlson_rf(0.0, 1.0 - m, 1.0) - m / 3.0 * carlson_rd(0.0, 1.0 - m, 1.0);
}

// Incomplete integral of the first kind F(s | m) for any real s, m < 1.
inline double ellip_F(double s, double m) {
    if (m >= 1.0) throw ParamOutOfRange("ellip_F: m must be < 1");
    const double n = std::round(s / detail::kPi);
    const double sr = s - n * detail::kPi;  // in [-pi/2, pi/2]
    const double base = (n == 0.0) ? 0.0 : 2.0 * n * ellip_K(m);
    const double f = (sr >= 0.0) ? detail::ellip_f_principal(sr, m)
                                 : -detail::ellip_f_principal(-sr, m);
    return base + f;
}

// Incomplete integral of the second kind E(s | m) for any real s, m < 1.
inline double ellip_E(double s, double m) {
    if (m >= 1.0) throw ParamOutOfRange("ellip_E: m must be < 1");
    const double n = std::round(s / detail::kPi);
    const double sr = s - n * detail::kPi;
    const double base = (n == 0.0) ? 0.0 : 2.0 * n * ellip_Ec(m);
    const double e = (sr >= 0.0) ? detail::ellip_e_principal(sr, m)
                                 : -detail::ellip_e_principal(-sr, m);
    return base + e;
}

struct JacobiValues {
    double am, sn, cn, dn;
};

namespace detail {

// sn for 0 <= m < 1 and u in [-K, K], by descending Landen (Gauss)
// transformation: k1 = (1 - k')/(1 + k'), sn(z|k) = (1 + k1) s /
// (1 + k1 s^2) with s = sn(z/(1 + k1) | k1).  Branch-free.
inline double sn_unit(double u, double m) {
    double k = std::sqrt(m);
    double k1s[32];
    int N = 0;
    while (k > 1e-16 && N < 32) {
        const double kp = std::sqrt((1.0 - k) * (1.0 + k));
        const double k1 = (1.0 - kp) / (1.0 + kp);
        k1s[N++] = k1;
        u /= (1.0 + k1);
        k = k1;
    }
    double s = std::sin(u);
    for (int i = N - 1; i >= 0; --i)
        s = (1.0 + k1s[i]) * s / (1.0 + k1s[i] * s * s);
    return s;
}

}  // namespace detail

// Jacobi amplitude and elliptic functions for m < 1 (m may be negative).
inline JacobiValues jacobi(double x, double m) {
    if (m >= 1.0) throw ParamOutOfRange("jacobi: m must be < 1");

    if (m == 0.0) return {x, std::sin(x), std::cos(x), 1.0};

    // Map negative parameter into (0, 1): with mu = -m/(1 - m),
    // tan am(x | m) = sqrt(1 - mu) tan am(x sqrt(1 - m) | mu).
    if (m < 0.0) {
        const double mu = -m / (1.0 - m);
        const JacobiValues inner = jacobi(x * std::sqrt(1.0 - m), mu);
        const double n = std::round(inner.am / detail::kPi);
        const double th = inner.am - n * detail::kPi;
        const double am =
            n * detail::kPi + std::atan(std::sqrt(1.0 - mu) * std::tan(th));
        const double sn = std::sin(am), cn = std::cos(am);
        return {am, sn, cn, std::sqrt(1.0 - m * sn * sn)};
    }

    // Quasi-periodicity: am(x + 2K) = am(x) + pi; on [-K, K] the
    // amplitude lies in [-pi/2, pi/2] and cn >= 0.
    const double K = ellip_K(m);
    const double n2 = std::round(x / (2.0 * K));
    const double xr = x - 2.0 * K * n2;
    const double sn = detail::sn_unit(xr, m);
    const double amr = std::asin(std::clamp(sn, -1.0, 1.0));
    const double am = n2 * detail::kPi + amr;
    const double s = std::sin(am), c = std::cos(am);
    return {am, s, c, std::sqrt(1.0 - m * s * s)};
}

// Jacobi epsilon: the integral of dn^2, i.e. E(am(x | m) | m).
inline double jacobi_epsilon(double x, double m) {
    return ellip_E(jacobi(x, m).am, m);
}

// Principal inverse of cn: x in [0, K(m)] with cn(x | m) = y, y in [0, 1].
inline double arccn(double y, double m) {
    if (y < -1e-12 || y > 1.0 + 1e-12)
        throw BranchViolation("arccn: argument outside [0, 1]");
    y = std::clamp(y, 0.0, 1.0);
    // cn = cos(am), so am = acos(y) in [0, pi/2] and x = F(am | m).
    return ellip_F(std::acos(y), m);
}

}  // namespace chebnet

