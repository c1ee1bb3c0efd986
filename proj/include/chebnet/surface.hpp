#pragma once

// Surface patches: a rectangular parameter domain together with an
// immersion evaluated in order-2 jets, an optional closed-form inverse
// Gauss map, and a stored normal orientation convention.

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "errors.hpp"
#include "jet2.hpp"
#include "vec3.hpp"

namespace chebnet {

struct Rect {
    double p_min = 0.0, p_max = 1.0;
    double q_min = 0.0, q_max = 1.0;

    bool contains(double p, double q, double slack = 0.0) const {
        return p >= p_min - slack && p <= p_max + slack &&
               q >= q_min - slack && q <= q_max + slack;
    }
    double diameter() const {
        const double dp = p_max - p_min, dq = q_max - q_min;
        return std::sqrt(dp * dp + dq * dq);
    }
};

struct SurfacePatch {
    std::string id;
    Rect domain;
    std::function<Jet2Vec3(double, double)> immersion;
    // Maps a unit normal back to parameters, where a closed form exists.
    std::function<std::pair<double, double>(const Vec3&)> inverse_gauss;
    double orientation = +1.0;
    double eps_reg = 1e-10;
};

inline Jet2Vec3 surface_jet(const SurfacePatch& patch, double p, double q) {
    if (!patch.domain.contains(p, q, 1e-12 * (1.0 + patch.domain.diameter())))
        throw DomainViolation(patch.id + ": parameter outside domain");
    Jet2Vec3 r = patch.immersion(p, q);
    if (!finite(r)) throw NonFinite(patch.id + ": immersion not finite");
    return r;
}

// Unit normal with first partials, derived from the immersion jets.
struct NormalJet {
    Vec3 n, n_p, n_q;
};

namespace detail {

inline Vec3 value_of(const Jet2Vec3& v) { return {v.x.value, v.y.value, v.z.value}; }
inline Vec3 dp_of(const Jet2Vec3& v) { return {v.x.d_p, v.y.d_p, v.z.d_p}; }
inline Vec3 dq_of(const Jet2Vec3& v) { return {v.x.d_q, v.y.d_q, v.z.d_q}; }
inline Vec3 dpp_of(const Jet2Vec3& v) { return {v.x.d_pp, v.y.d_pp, v.z.d_pp}; }
inline Vec3 dpq_of(const Jet2Vec3& v) { return {v.x.d_pq, v.y.d_pq, v.z.d_pq}; }
inline Vec3 dqq_of(const Jet2Vec3& v) { return {v.x.d_qq, v.y.d_qq, v.z.d_qq}; }

}  // namespace detail

inline NormalJet unit_normal_jet_from(const Jet2Vec3& r, double orientation,
                                      double eps_reg, const std::string& id) {
    using namespace detail;
    const Vec3 rp = dp_of(r), rq = dq_of(r);
    const Vec3 w = cross(rp, rq);
    const double wn = norm(w);
    if (wn <= eps_reg) throw DegenerateTangent(id + ": |r_p x r_q| below eps_reg");

    // Derivatives of w = r_p x r_q.
    const Vec3 w_p = cross(dpp_of(r), rq) + cross(rp, dpq_of(r));
    const Vec3 w_q = cross(dpq_of(r), rq) + cross(rp, dqq_of(r));

    const Vec3 n = orientation / wn * w;
    // d(w/|w|) = dw/|w| - w (w.dw)/|w|^3
    const Vec3 n_p = orientation * (w_p / wn - dot(w, w_p) / (wn * wn * wn) * w);
    const Vec3 n_q = orientation * (w_q / wn - dot(w, w_q) / (wn * wn * wn) * w);
    return {n, n_p, n_q};
}

inline NormalJet unit_normal_jet(const SurfacePatch& patch, double p, double q) {
    return unit_normal_jet_from(surface_jet(patch, p, q), patch.orientation,
                                patch.eps_reg, patch.id);
}

inline Vec3 gauss_map(const SurfacePatch& patch, double p, double q) {
    return unit_normal_jet(patch, p, q).n;
}

// Central differences with one Richardson step: O(step^4) for smooth fields.
struct FdDerivatives {
    double d_p = 0.0, d_q = 0.0;
    double d_pp = 0.0, d_pq = 0.0, d_qq = 0.0;
};

template <class Field>
FdDerivatives fd_promote(Field&& f, double p, double q, double step,
                         const Rect* domain = nullptr) {
    if (domain) {
        const double h2 = 2.0 * step;
        if (!domain->contains(p - h2, q - h2) || !domain->contains(p + h2, q + h2))
            throw StencilOutOfDomain("fd_promote: 5x5 stencil leaves domain");
    }

    auto at = [&](double a, double b) { return f(a, b); };

    auto grad_hess = [&](double h) {
        FdDerivatives d;
        const double fpp = at(p + h, q), fpm = at(p - h, q);
        const double fqp = at(p, q + h), fqm = at(p, q - h);
        const double f00 = at(p, q);
        d.d_p = (fpp - fpm) / (2.0 * h);
        d.d_q = (fqp - fqm) / (2.0 * h);
        d.d_pp = (fpp - 2.0 * f00 + fpm) / (h * h);
        d.d_qq = (fqp - 2.0 * f00 + fqm) / (h * h);
        d.d_pq = (at(p + h, q + h) - at(p + h, q - h) -
                  at(p - h, q + h) + at(p - h, q - h)) / (4.0 * h * h);
        return d;
    };

    const FdDerivatives c = grad_hess(step);       // error O(h^2)
    const FdDerivatives fine = grad_hess(step / 2.0);
    FdDerivatives out;
    out.d_p = (4.0 * fine.d_p - c.d_p) / 3.0;
    out.d_q = (4.0 * fine.d_q - c.d_q) / 3.0;
    out.d_pp = (4.0 * fine.d_pp - c.d_pp) / 3.0;
    out.d_pq = (4.0 * fine.d_pq - c.d_pq) / 3.0;
    out.d_qq = (4.0 * fine.d_qq - c.d_qq) / 3.0;
    return out;
}

}  // namespace chebnet
