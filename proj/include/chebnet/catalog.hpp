#pragma once

// Closed-form surface catalog: builders with analytic jets, closed-form
// inverse Gauss maps where available, and the reparameterization helper
// psi_k linking the two asymptotic-Chebyshev charts of the coaxial
// pseudospherical pair.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "jet2.hpp"
#include "special.hpp"
#include "surface.hpp"

namespace chebnet {

using ParamMap = std::map<std::string, double>;

struct CatalogEntry {
    std::string name;
    std::string description;
    ParamMap defaults;
};

namespace detail {

// Jets of sn, cn, dn and the epsilon integral of dn^2 at a jet argument.
struct EllipticJets {
    Jet2 sn, cn, dn, eps;
};

inline EllipticJets elliptic_jets(const Jet2& W, double m) {
    const JacobiValues j = jacobi(W.value, m);
    const double sn = j.sn, cn = j.cn, dn = j.dn;
    EllipticJets out;
    out.sn = compose(W, sn, cn * dn, -sn * (dn * dn + m * cn * cn));
    out.cn = compose(W, cn, -sn * dn, -cn * dn * dn + m * sn * sn * cn);
    out.dn = compose(W, dn, -m * sn * cn, -m * dn * (cn * cn - sn * sn));
    out.eps = compose(W, ellip_E(j.am, m), dn * dn, -2.0 * m * sn * cn * dn);
    return out;
}

inline double param(const ParamMap& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace detail

// --- Tractroid cores (isodiagonal parameters u, v) -------------------------
//
// Axis variants permute coordinates of the same profile:
//   meridian (v - tanh v), circle (cos u, sin u) / cosh v.
// Orientation stored so the computed unit normal carries the sign(v)
// factor placing it on the outward side.

namespace detail {

inline Jet2Vec3 tractroid_x(const Jet2& U, const Jet2& V) {
    return {V - tanh(V), cos(U) / cosh(V), sin(U) / cosh(V)};
}
inline Jet2Vec3 tractroid_y(const Jet2& U, const Jet2& V) {
    return {cos(U) / cosh(V), V - tanh(V), sin(U) / cosh(V)};
}
inline Jet2Vec3 tractroid_z(const Jet2& U, const Jet2& V) {
    return {cos(U) / cosh(V), sin(U) / cosh(V), V - tanh(V)};
}

// Elliptic-type pseudospherical surface of revolution about the z axis,
// isodiagonal parameters; scale = sin k normalizes K to -1, scale = 1
// keeps the raw profile of curvature -sin^2 k.
inline Jet2Vec3 elliptic_core(const Jet2& U, const Jet2& V, double k, double scale) {
    const double m = -std::tan(k) * std::tan(k);
    const double ck = std::cos(k), sk = std::sin(k);
    const EllipticJets e = elliptic_jets(ck * V, m);
    return {scale * (e.sn * cos(U)), scale * (e.sn * sin(U)),
            scale * ((V - ck * e.eps) / sk)};
}

}  // namespace detail

// --- psi_k machinery (asymptotic-chart matching for the coaxial pair) ------

inline double psi_k(double v, double k) {
    const double sk = std::sin(k), ck = std::cos(k);
    const double vmin = -std::atanh(sk);
    if (v < vmin - 1e-12 || v > 1e-12)
        throw DomainViolation("psi_k: v outside (-artanh(sin k), 0]");
    const double m = -std::tan(k) * std::tan(k);
    return 0.5 * v + arccn(-std::tanh(v) / sk, m) / (2.0 * ck);
}

inline double psi_k_prime(double v, double k) {
    const double ck = std::cos(k);
    const double d = 1.0 - ck * ck * std::cosh(v) * std::cosh(v);
    if (d <= 0.0)
        throw DerivativeSingular("psi_k_prime: square root vanishes at the aperture");
    const double s = std::sqrt(d);
    return (1.0 + s) / (2.0 * s);
}

inline double psi_k_inv(double w, double k) {
    const double sk = std::sin(k), ck = std::cos(k);
    const double m = -std::tan(k) * std::tan(k);
    const double vmin = -std::atanh(sk);
    const double wlo = 0.5 * vmin;                    // psi_k(vmin)
    const double whi = ellip_K(m) / (2.0 * ck);       // psi_k(0)
    if (w < wlo - 1e-10 || w > whi + 1e-10)
        throw DomainViolation("psi_k_inv: w outside the image interval");
    double lo = vmin, hi = 0.0;
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = psi_k(v, k) - w;
        if (std::fabs(f) < 1e-14) break;
        if (f > 0.0)
            hi = v;
        else
            lo = v;
        double step = 0.0;
        bool ok = false;
        // Newton step where the derivative exists, bisection otherwise.
        const double d = 1.0 - ck * ck * std::cosh(v) * std::cosh(v);
        if (d > 1e-14) {
            step = -f / psi_k_prime(v, k);
            const double vn = v + step;
            if (vn > lo && vn < hi) {
                v = vn;
                ok = true;
            }
        }
        if (!ok) v = 0.5 * (lo + hi);
        if (hi - lo < 1e-16) break;
    }
    return v;
}

// --- Inverse Gauss maps (closed forms) --------------------------------------

namespace detail {

inline std::pair<double, double> tractroid_inverse_gauss(double axial, double c1,
                                                         double c2) {
    // Normal is sign(v) (sech v along the axis, tanh v on the circle).
    const double a = std::fabs(axial);
    if (a < 1e-15 || a > 1.0)
        throw OutsideGaussImage("tractroid: axial normal component outside (0, 1]");
    if (a == 1.0) throw OutsideGaussImage("tractroid: rim normal excluded (v = 0)");
    const double v = (axial > 0.0 ? 1.0 : -1.0) * std::acosh(1.0 / a);
    const double u = std::atan2(c2, c1);
    return {u, v};
}

inline std::pair<double, double> elliptic_inverse_gauss(double k, const Vec3& N) {
    const double ck = std::cos(k);
    const double m = -std::tan(k) * std::tan(k);
    if (N.z > -ck + 1e-14 || N.z < -1.0 - 1e-12)
        throw OutsideGaussImage("elliptic: normal outside the polar cap");
    const double dn = std::min(std::fabs(N.z) / ck, 1.0 / ck);
    const double sn2 = (dn * dn - 1.0) / (-m);
    const double sn = std::sqrt(std::max(0.0, sn2));
    const double w = ellip_F(std::asin(std::min(1.0, sn)), m);
    return {std::atan2(N.y, N.x), w / ck};
}

}  // namespace detail

// --- Builders ---------------------------------------------------------------

inline SurfacePatch make_surface(const std::string& name, const ParamMap& params = {}) {
    using namespace detail;
    SurfacePatch patch;
    patch.id = name;
    patch.orientation = +1.0;

    if (name == "plane") {
        patch.domain = {-10.0, 10.0, -10.0, 10.0};
        patch.immersion = [](double p, double q) {
            return Jet2Vec3{Jet2::var_p(p), Jet2::var_q(q), Jet2(0.0)};
        };
        return patch;
    }

    if (name == "sphere") {
        patch.domain = {-3.14, 3.14, -1.45, 1.45};
        patch.immersion = [](double p, double q) {
            const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
            return Jet2Vec3{cos(P) * cos(Q), sin(P) * cos(Q), sin(Q)};
        };
        patch.inverse_gauss = [](const Vec3& N) {
            return std::pair<double, double>{std::atan2(N.y, N.x), std::asin(N.z)};
        };
        return patch;
    }

    if (name == "graph-pq") {
        patch.domain = {-3.0, 3.0, -3.0, 3.0};
        patch.immersion = [](double p, double q) {
            const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
            return Jet2Vec3{P, Q, P * Q};
        };
        return patch;
    }

    if (name == "graph-sincos") {
        patch.domain = {-3.0, 3.0, -3.0, 3.0};
        patch.immersion = [](double p, double q) {
            const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
            return Jet2Vec3{P, Q, sin(P) * cos(Q)};
        };
        return patch;
    }

    if (name == "graph-bump") {
        patch.domain = {-3.0, 3.0, -3.0, 3.0};
        patch.immersion = [](double p, double q) {
            const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
            return Jet2Vec3{P, Q, exp(-0.5 * (P * P + Q * Q))};
        };
        return patch;
    }

    if (name == "translation") {
        // Sum of a unit-speed helix a(p) and a unit-speed circle b(q).
        patch.domain = {-3.0, 3.0, -3.0, 3.0};
        patch.immersion = [](double p, double q) {
            const double s2 = std::sqrt(0.5);
            const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
            const Jet2Vec3 a{cos(s2 * P), sin(s2 * P), s2 * P};
            const Jet2Vec3 b{cos(Q), Jet2(0.0), sin(Q)};
            return a + b;
        };
        return patch;
    }

    if (name == "pseudosphere-x" || name == "pseudosphere-y" ||
        name == "pseudosphere-z") {
        const double v_min = param(params, "v_min", 0.02);
        const double v_max = param(params, "v_max", 4.0);
        if (v_min >= v_max) throw BadParams("pseudosphere: v_min >= v_max");
        if (v_min < 0.0 && v_max > 0.0)
            throw BadParams("pseudosphere: domain must not cross the rim v = 0");
        patch.domain = {-3.2, 3.2, v_min, v_max};
        if (name == "pseudosphere-x") {
            patch.immersion = [](double p, double q) {
                return tractroid_x(Jet2::var_p(p), Jet2::var_q(q));
            };
            patch.inverse_gauss = [](const Vec3& N) {
                return tractroid_inverse_gauss(N.x, N.y, N.z);
            };
        } else if (name == "pseudosphere-y") {
            patch.orientation = -1.0;  // coordinate swap flips handedness
            patch.immersion = [](double p, double q) {
                return tractroid_y(Jet2::var_p(p), Jet2::var_q(q));
            };
            patch.inverse_gauss = [](const Vec3& N) {
                return tractroid_inverse_gauss(N.y, N.x, N.z);
            };
        } else {
            patch.immersion = [](double p, double q) {
                return tractroid_z(Jet2::var_p(p), Jet2::var_q(q));
            };
            patch.inverse_gauss = [](const Vec3& N) {
                return tractroid_inverse_gauss(N.z, N.x, N.y);
            };
        }
        return patch;
    }

    if (name == "pseudosphere-asym" || name == "pseudosphere-z-asym") {
        // Chebyshev parameters x, y with u = x + y, v = x - y.
        const double x_min = param(params, "x_min", 0.0);
        const double x_max = param(params, "x_max", 1.5);
        const double y_min = param(params, "y_min", -1.6);
        const double y_max = param(params, "y_max", -0.1);
        patch.domain = {x_min, x_max, y_min, y_max};
        patch.orientation = -1.0;  // u = x + y, v = x - y reverses the chart
        const bool zaxis = (name == "pseudosphere-z-asym");
        patch.immersion = [zaxis](double x, double y) {
            const Jet2 X = Jet2::var_p(x), Y = Jet2::var_q(y);
            return zaxis ? tractroid_z(X + Y, X - Y) : tractroid_x(X + Y, X - Y);
        };
        patch.inverse_gauss = [zaxis](const Vec3& N) {
            const auto uv = zaxis ? tractroid_inverse_gauss(N.z, N.x, N.y)
                                  : tractroid_inverse_gauss(N.x, N.y, N.z);
            return std::pair<double, double>{0.5 * (uv.first + uv.second),
                                             0.5 * (uv.first - uv.second)};
        };
        return patch;
    }

    if (name == "elliptic" || name == "elliptic-raw") {
        const double k = param(params, "k", 1.0);
        if (k <= 0.0 || k >= 1.5707963267948966)
            throw BadParams("elliptic: need 0 < k < pi/2");
        const double sk = std::sin(k);
        const double scale = (name == "elliptic") ? sk : 1.0;
        const double v_rim = ellip_K(sk * sk);
        const double margin = param(params, "margin", 0.05);
        if (2.0 * margin >= v_rim) throw DomainEmpty("elliptic: margins swallow domain");
        patch.domain = {-3.2, 3.2, margin, v_rim - margin};
        patch.immersion = [k, scale](double p, double q) {
            return elliptic_core(Jet2::var_p(p), Jet2::var_q(q), k, scale);
        };
        patch.inverse_gauss = [k](const Vec3& N) {
            return elliptic_inverse_gauss(k, N);
        };
        return patch;
    }

    if (name == "elliptic-asym") {
        // Chebyshev parameters of the normalized (K = -1) surface:
        // u = (x + y)/sin k, v = (x - y)/sin k.
        const double k = param(params, "k", 1.0);
        if (k <= 0.0 || k >= 1.5707963267948966)
            throw BadParams("elliptic-asym: need 0 < k < pi/2");
        const double sk = std::sin(k);
        const double v_rim = ellip_K(sk * sk);
        const double margin = param(params, "margin", 0.1);
        if (2.0 * margin >= v_rim)
            throw DomainEmpty("elliptic-asym: margins swallow domain");
        const double half = 0.5 * sk * (v_rim - 2.0 * margin);
        patch.domain = {0.0, half, -sk * margin - half, -sk * margin};
        patch.orientation = -1.0;  // u = x + y, v = x - y reverses the chart
        patch.immersion = [k, sk](double x, double y) {
            const Jet2 X = Jet2::var_p(x), Y = Jet2::var_q(y);
            return elliptic_core((X + Y) / sk, (X - Y) / sk, k, sk);
        };
        patch.inverse_gauss = [k, sk](const Vec3& N) {
            const auto uv = elliptic_inverse_gauss(k, N);
            return std::pair<double, double>{0.5 * sk * (uv.first + uv.second),
                                             0.5 * sk * (uv.first - uv.second)};
        };
        return patch;
    }

    throw BadParams("unknown catalog surface: " + name);
}

inline const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"plane", "flat plane z = 0", {}},
        {"sphere", "unit sphere, outward normal", {}},
        {"graph-pq", "graph z = p q", {}},
        {"graph-sincos", "graph z = sin p cos q", {}},
        {"graph-bump", "graph z = exp(-(p^2+q^2)/2)", {}},
        {"translation", "translation surface: helix + circle", {}},
        {"pseudosphere-x",
         "tractroid, axis x, isodiagonal parameters",
         {{"v_min", 0.02}, {"v_max", 4.0}}},
        {"pseudosphere-y",
         "tractroid, axis y, isodiagonal parameters",
         {{"v_min", 0.02}, {"v_max", 4.0}}},
        {"pseudosphere-z",
         "tractroid, axis z, isodiagonal parameters",
         {{"v_min", 0.02}, {"v_max", 4.0}}},
        {"pseudosphere-asym",
         "tractroid, axis x, asymptotic Chebyshev parameters",
         {{"x_min", 0.0}, {"x_max", 1.5}, {"y_min", -1.6}, {"y_max", -0.1}}},
        {"pseudosphere-z-asym",
         "tractroid, axis z, asymptotic Chebyshev parameters",
         {{"x_min", 0.0}, {"x_max", 1.5}, {"y_min", -1.6}, {"y_max", -0.1}}},
        {"elliptic",
         "elliptic-type pseudospherical surface of revolution, normalized to K = -1",
         {{"k", 1.0}, {"margin", 0.05}}},
        {"elliptic-raw",
         "elliptic-type surface of revolution, raw profile (K = -sin^2 k)",
         {{"k", 1.0}, {"margin", 0.05}}},
        {"elliptic-asym",
         "normalized elliptic-type surface, asymptotic Chebyshev parameters",
         {{"k", 1.0}, {"margin", 0.1}}},
    };
    return entries;
}

// Gauss-Newton polish of an inverse-Gauss seed: min |n(p,q) - N|^2.
inline std::pair<double, double> newton_polish(const SurfacePatch& patch,
                                               const Vec3& N, double p, double q,
                                               int max_iter = 50,
                                               double tol = 1e-12) {
    const Rect& d = patch.domain;
    for (int it = 0; it < max_iter; ++it) {
        const NormalJet nj = unit_normal_jet(patch, p, q);
        const Vec3 res = nj.n - N;
        if (norm(res) < tol) return {p, q};
        const double a = dot(nj.n_p, nj.n_p), b = dot(nj.n_p, nj.n_q),
                     c = dot(nj.n_q, nj.n_q);
        const double g1 = dot(nj.n_p, res), g2 = dot(nj.n_q, res);
        const double det = a * c - b * b;
        if (std::fabs(det) < 1e-300)
            throw NewtonDiverged("inverse Gauss: singular normal Jacobian");
        const double dp = -(c * g1 - b * g2) / det;
        const double dq = -(a * g2 - b * g1) / det;
        p = std::min(d.p_max, std::max(d.p_min, p + dp));
        q = std::min(d.q_max, std::max(d.q_min, q + dq));
    }
    const Vec3 n = unit_normal_jet(patch, p, q).n;
    if (norm(n - N) < 1e-9) return {p, q};
    throw NewtonDiverged("inverse Gauss: no convergence in max_iter iterations");
}

// Newton fallback for entries without closed-form inverse Gauss maps:
// Gauss-Newton on |n(p,q) - N| seeded from a coarse grid.
inline std::pair<double, double> newton_inverse_gauss(const SurfacePatch& patch,
                                                      const Vec3& N,
                                                      int grid = 64,
                                                      int max_iter = 50,
                                                      double tol = 1e-12) {
    const Rect& d = patch.domain;
    double best_p = 0.0, best_q = 0.0, best = 1e300;
    for (int i = 1; i < grid; ++i) {
        for (int j = 1; j < grid; ++j) {
            const double p = d.p_min + (d.p_max - d.p_min) * i / grid;
            const double q = d.q_min + (d.q_max - d.q_min) * j / grid;
            double err;
            try {
                const Vec3 n = unit_normal_jet(patch, p, q).n;
                err = dot(n - N, n - N);
            } catch (const Error&) {
                continue;
            }
            if (err < best) {
                best = err;
                best_p = p;
                best_q = q;
            }
        }
    }
    double p = best_p, q = best_q;
    for (int it = 0; it < max_iter; ++it) {
        const NormalJet nj = unit_normal_jet(patch, p, q);
        const Vec3 res = nj.n - N;
        if (norm(res) < tol) return {p, q};
        // Gauss-Newton step for min |n - N|^2.
        const double a = dot(nj.n_p, nj.n_p), b = dot(nj.n_p, nj.n_q),
                     c = dot(nj.n_q, nj.n_q);
        const double g1 = dot(nj.n_p, res), g2 = dot(nj.n_q, res);
        const double det = a * c - b * b;
        if (std::fabs(det) < 1e-300)
            throw NewtonDiverged("inverse Gauss: singular normal Jacobian");
        double dp = -(c * g1 - b * g2) / det;
        double dq = -(a * g2 - b * g1) / det;
        // Keep the iterate inside the domain.
        p = std::min(d.p_max, std::max(d.p_min, p + dp));
        q = std::min(d.q_max, std::max(d.q_min, q + dq));
    }
    const Vec3 n = unit_normal_jet(patch, p, q).n;
    if (norm(n - N) < 1e-9) return {p, q};
    throw NewtonDiverged("inverse Gauss: no convergence in max_iter iterations");
}

// Unified inverse Gauss map: closed form when available, Newton otherwise.
inline std::pair<double, double> inverse_gauss(const SurfacePatch& patch,
                                               const Vec3& N) {
    if (patch.inverse_gauss) return patch.inverse_gauss(N);
    return newton_inverse_gauss(patch, N);
}

}  // namespace chebnet
