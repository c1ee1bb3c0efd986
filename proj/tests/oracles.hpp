#pragma once

// Independent numerical oracles used by the test suite: adaptive
// Simpson quadrature and plain central differences.  Deliberately kept
// separate from the library implementations they are used to check.

#include <cmath>
#include <functional>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double whole, double tol, int depth) {
    const double c = 0.5 * (a + b);
    const double left = simpson(f, a, c);
    const double right = simpson(f, c, b);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, c, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, c, b, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-14) {
    if (a == b) return 0.0;
    return adaptive_simpson_rec(f, a, b, simpson(f, a, b), tol, 40);
}

// Central difference with one Richardson step.
inline double diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + h / 2.0) - f(x - h / 2.0)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

inline double diff2(const std::function<double(double)>& f, double x, double h = 1e-4) {
    auto second = [&](double hh) {
        return (f(x + hh) - 2.0 * f(x) + f(x - hh)) / (hh * hh);
    };
    return (4.0 * second(h / 2.0) - second(h)) / 3.0;
}

}  // namespace oracles
