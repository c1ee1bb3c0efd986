#pragma once

// Second-order invariants of curve nets: fundamental coefficients with
// respect to a direction pair, the full invariant record (angle, curvatures,
// torsions, Bortolotti and commutator invariants), net classification,
// the identity suite, and the discrete symmetries T0..T3.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "surface.hpp"

namespace chebnet {

// A scalar carried with its first parameter derivatives; enough to apply
// one more directional derivative to jet-computed quantities.
struct D1 {
    double v = 0.0, dp = 0.0, dq = 0.0;
};

inline D1 operator+(const D1& a, const D1& b) { return {a.v + b.v, a.dp + b.dp, a.dq + b.dq}; }
inline D1 operator-(const D1& a, const D1& b) { return {a.v - b.v, a.dp - b.dp, a.dq - b.dq}; }
inline D1 operator*(const D1& a, const D1& b) {
    return {a.v * b.v, a.dp * b.v + a.v * b.dp, a.dq * b.v + a.v * b.dq};
}
inline D1 operator*(double c, const D1& a) { return {c * a.v, c * a.dp, c * a.dq}; }
inline D1 operator/(const D1& a, const D1& b) {
    const double inv = 1.0 / b.v;
    return {a.v * inv, (a.dp - a.v * inv * b.dp) * inv, (a.dq - a.v * inv * b.dq) * inv};
}

inline D1 sqrt(const D1& a) {
    const double s = std::sqrt(a.v);
    const double f = 0.5 / s;
    return {s, f * a.dp, f * a.dq};
}

inline D1 acos(const D1& a) {
    const double f = -1.0 / std::sqrt(1.0 - a.v * a.v);
    return {std::acos(a.v), f * a.dp, f * a.dq};
}

struct D1Vec3 {
    D1 x, y, z;
};

inline D1Vec3 operator+(const D1Vec3& a, const D1Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline D1Vec3 operator*(const D1& s, const D1Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
}
inline D1 dot(const D1Vec3& a, const D1Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

namespace detail {

inline Vec3 value_of(const D1Vec3& a) { return {a.x.v, a.y.v, a.z.v}; }
inline Vec3 dp_of(const D1Vec3& a) { return {a.x.dp, a.y.dp, a.z.dp}; }
inline Vec3 dq_of(const D1Vec3& a) { return {a.x.dq, a.y.dq, a.z.dq}; }

inline D1 d1_of(const Jet2& u) { return {u.value, u.d_p, u.d_q}; }

}  // namespace detail

// A direction pair X_i = a_i d/dp + b_i d/dq.  Components are supplied as
// jet-valued fields so that derivatives of point-dependent components enter
// the chain rule; only the value and first derivatives are used.
struct DirectionPair {
    using Component = std::function<Jet2(double, double)>;
    Component a1, b1, a2, b2;

    static DirectionPair constant(double A1, double B1, double A2, double B2) {
        auto c = [](double v) {
            return Component([v](double, double) { return Jet2::constant(v); });
        };
        return {c(A1), c(B1), c(A2), c(B2)};
    }
    static DirectionPair coordinate() { return constant(1.0, 0.0, 0.0, 1.0); }
};

struct FundamentalData {
    double I11 = 0, I12 = 0, I22 = 0;
    double II11 = 0, II12 = 0, II22 = 0;
    double detI = 0;
    Vec3 n;
    // [X1, X2] r . n; zero for commuting (e.g. constant-coefficient) fields.
    double commutator_defect = 0;

    // Evaluation context retained for the invariant formulas.
    D1Vec3 X1r, X2r;                  // field derivatives of r with gradients
    Vec3 X1X1r, X1X2r, X2X1r, X2X2r;  // second field derivatives (values)
    Vec3 X1n, X2n;                    // field derivatives of the unit normal
    D1 I11f, I12f, I22f;              // first-form coefficients as fields
    D1Vec3 nf;                        // unit normal as a field
    double a1 = 0, b1 = 0, a2 = 0, b2 = 0;  // component values
    double orient_sign = 1.0;         // sign of [X1 r, X2 r, n]
};

namespace detail {

// Value of X applied to a D1 scalar or vector field.
inline double apply_field(double a, double b, const D1& w) {
    return a * w.dp + b * w.dq;
}
inline Vec3 apply_field(double a, double b, const D1Vec3& w) {
    return a * dp_of(w) + b * dq_of(w);
}

}  // namespace detail

inline FundamentalData fundamental_data(const SurfacePatch& patch, double p,
                                        double q, const DirectionPair& pair) {
    using namespace detail;
    const Jet2Vec3 r = surface_jet(patch, p, q);
    const NormalJet nj = unit_normal_jet_from(r, patch.orientation, patch.eps_reg,
                                              patch.id);

    const D1 a1 = d1_of(pair.a1(p, q)), b1 = d1_of(pair.b1(p, q));
    const D1 a2 = d1_of(pair.a2(p, q)), b2 = d1_of(pair.b2(p, q));

    const double det_comp = a1.v * b2.v - b1.v * a2.v;
    const double scale = std::sqrt((a1.v * a1.v + b1.v * b1.v) *
                                   (a2.v * a2.v + b2.v * b2.v));
    if (std::fabs(det_comp) <= 1e-10 * (scale + 1e-300))
        throw DegeneratePair(patch.id + ": direction pair not transversal");

    const D1Vec3 rpD{{r.x.d_p, r.x.d_pp, r.x.d_pq},
                     {r.y.d_p, r.y.d_pp, r.y.d_pq},
                     {r.z.d_p, r.z.d_pp, r.z.d_pq}};
    const D1Vec3 rqD{{r.x.d_q, r.x.d_pq, r.x.d_qq},
                     {r.y.d_q, r.y.d_pq, r.y.d_qq},
                     {r.z.d_q, r.z.d_pq, r.z.d_qq}};

    FundamentalData f;
    f.X1r = a1 * rpD + b1 * rqD;
    f.X2r = a2 * rpD + b2 * rqD;
    f.a1 = a1.v;
    f.b1 = b1.v;
    f.a2 = a2.v;
    f.b2 = b2.v;
    f.n = nj.n;
    f.nf = D1Vec3{{nj.n.x, nj.n_p.x, nj.n_q.x},
                  {nj.n.y, nj.n_p.y, nj.n_q.y},
                  {nj.n.z, nj.n_p.z, nj.n_q.z}};

    f.X1X1r = apply_field(a1.v, b1.v, f.X1r);
    f.X1X2r = apply_field(a1.v, b1.v, f.X2r);
    f.X2X1r = apply_field(a2.v, b2.v, f.X1r);
    f.X2X2r = apply_field(a2.v, b2.v, f.X2r);
    f.X1n = apply_field(a1.v, b1.v, f.nf);
    f.X2n = apply_field(a2.v, b2.v, f.nf);

    f.I11f = dot(f.X1r, f.X1r);
    f.I12f = dot(f.X1r, f.X2r);
    f.I22f = dot(f.X2r, f.X2r);
    f.I11 = f.I11f.v;
    f.I12 = f.I12f.v;
    f.I22 = f.I22f.v;
    f.detI = f.I11 * f.I22 - f.I12 * f.I12;
    if (f.I11 <= 0.0 || f.I22 <= 0.0 || f.detI <= 0.0)
        throw DegeneratePair(patch.id + ": first form degenerate for the pair");

    f.II11 = dot(f.X1X1r, f.n);
    f.II12 = dot(f.X2X1r, f.n);
    f.II22 = dot(f.X2X2r, f.n);
    f.commutator_defect = dot(f.X1X2r - f.X2X1r, f.n);

    f.orient_sign = triple(value_of(f.X1r), value_of(f.X2r), f.n) >= 0.0 ? 1.0 : -1.0;
    return f;
}

struct InvariantRecord {
    double omega = 0;           // non-oriented intersection angle, in (0, pi)
    double omega_oriented = 0;  // oriented variant, in (0, 2 pi)
    double K = 0, H = 0;
    double sigma = 0;
    double kn1 = 0, kn2 = 0;
    double kg1 = 0, kg2 = 0;
    double tg1 = 0, tg2 = 0;
    double curv1 = 0, curv2 = 0;
    double pi1 = 0, pi2 = 0;
    double iota1 = 0, iota2 = 0;
    double omega_1 = 0, omega_2 = 0;  // arc-length derivatives of omega
    double omega_III = 0;             // spherical-image angle; NaN when K = 0
    double sin_omega = 0, cos_omega = 0;
};

constexpr double kEpsSing = 1e-6;

inline InvariantRecord invariant_record_from(const FundamentalData& f,
                                             double eps_sing = kEpsSing) {
    using namespace detail;
    InvariantRecord rec;
    const double rtI = std::sqrt(f.I11 * f.I22);
    rec.cos_omega = f.I12 / rtI;
    rec.sin_omega = std::sqrt(f.detI) / rtI;
    if (rec.sin_omega <= eps_sing)
        throw SingularNet("invariant_record: sin(omega) below eps_sing");
    rec.omega = std::atan2(rec.sin_omega, rec.cos_omega);
    const double s = f.orient_sign;
    rec.omega_oriented = std::atan2(s * rec.sin_omega, rec.cos_omega);
    if (rec.omega_oriented < 0.0) rec.omega_oriented += 2.0 * 3.14159265358979323846;

    rec.K = (f.II11 * f.II22 - f.II12 * f.II12) / f.detI;
    rec.H = (f.I11 * f.II22 - 2.0 * f.I12 * f.II12 + f.I22 * f.II11) / (2.0 * f.detI);
    rec.sigma = f.II12 / std::sqrt(f.detI);
    rec.kn1 = f.II11 / f.I11;
    rec.kn2 = f.II22 / f.I22;

    // Geodesic curvature of each family; the sign of the triple product is
    // referred to the co-orientation of the pair with the normal, so that
    // the record transforms per the discrete-symmetry table.
    rec.kg1 = s * triple(value_of(f.X1r), f.X1X1r, f.n) / std::pow(f.I11, 1.5);
    rec.kg2 = s * triple(value_of(f.X2r), f.X2X2r, f.n) / std::pow(f.I22, 1.5);

    const double rdet = std::sqrt(f.detI);
    rec.tg1 = -(f.I12 * f.II11 - f.I11 * f.II12) / (f.I11 * rdet);
    rec.tg2 = (f.I12 * f.II22 - f.I22 * f.II12) / (f.I22 * rdet);
    rec.curv1 = std::hypot(rec.kn1, rec.kg1);
    rec.curv2 = std::hypot(rec.kn2, rec.kg2);

    // omega as a field, for the arc-length derivatives.
    const D1 omega_f = acos(f.I12f / sqrt(f.I11f * f.I22f));
    rec.omega_1 = apply_field(f.a1, f.b1, omega_f) / std::sqrt(f.I11);
    rec.omega_2 = apply_field(f.a2, f.b2, omega_f) / std::sqrt(f.I22);

    rec.iota1 = apply_field(f.a2, f.b2, f.I11f) / (std::sqrt(f.I22) * 2.0 * f.I11);
    rec.iota2 = -apply_field(f.a1, f.b1, f.I22f) / (std::sqrt(f.I11) * 2.0 * f.I22);

    const Vec3 X1rv = value_of(f.X1r), X2rv = value_of(f.X2r);
    const double g112 = (dot(X1rv, f.X1X2r) * f.I22 - dot(X2rv, f.X1X2r) * f.I12) / f.detI;
    const double g221 = (f.I11 * dot(X2rv, f.X2X1r) - f.I12 * dot(X1rv, f.X2X1r)) / f.detI;
    rec.pi1 = g112 / std::sqrt(f.I22);
    rec.pi2 = g221 / std::sqrt(f.I11);

    if (std::fabs(rec.K) > 1e-14) {
        const double cot_iii =
            2.0 * rec.H * rec.sigma / rec.K - rec.cos_omega / rec.sin_omega;
        rec.omega_III = std::atan2(1.0, cot_iii);
    } else {
        rec.omega_III = std::nan("");
    }
    return rec;
}

inline InvariantRecord invariant_record(const SurfacePatch& patch, double p,
                                        double q, const DirectionPair& pair,
                                        double eps_sing = kEpsSing) {
    return invariant_record_from(fundamental_data(patch, p, q, pair), eps_sing);
}

// --- classification ---------------------------------------------------------

struct ConcordanceSpec {
    double mu = 1.0, kappa = 1.0, lambda = 0.0;
};

struct PointClassification {
    double p = 0, q = 0;
    bool singular = false;
    double iota_max = 0, pi_max = 0;
    double cond_residual = 0;  // |mu K + kappa sigma + lambda|
    double sigma_abs = 0;
    double kg_res1 = 0, kg_res2 = 0;  // kg1 + omega_1, kg2 - omega_2
};

struct ClassificationReport {
    std::vector<PointClassification> points;
    double max_iota = 0, max_pi = 0, max_cond = 0, max_sigma = 0, max_kg_res = 0;
    int n_singular = 0;
    double tol_chebyshev = 1e-8, tol_conjugate = 1e-9, tol_concordant = 1e-8;
    bool chebyshev = false, conjugate = false, concordant = false;
};

inline ClassificationReport classify_net(
    const SurfacePatch& patch, const DirectionPair& pair,
    const std::vector<std::pair<double, double>>& sample_points,
    const ConcordanceSpec& spec = {}, double tol_chebyshev = 1e-8,
    double tol_conjugate = 1e-9, double tol_concordant = 1e-8) {
    if (sample_points.empty())
        throw BadParams("classify_net: no sample points");
    ClassificationReport rep;
    rep.tol_chebyshev = tol_chebyshev;
    rep.tol_conjugate = tol_conjugate;
    rep.tol_concordant = tol_concordant;
    for (const auto& [p, q] : sample_points) {
        PointClassification pc;
        pc.p = p;
        pc.q = q;
        try {
            const InvariantRecord r = invariant_record(patch, p, q, pair);
            pc.iota_max = std::max(std::fabs(r.iota1), std::fabs(r.iota2));
            pc.pi_max = std::max(std::fabs(r.pi1), std::fabs(r.pi2));
            pc.cond_residual =
                std::fabs(spec.mu * r.K + spec.kappa * r.sigma + spec.lambda);
            pc.sigma_abs = std::fabs(r.sigma);
            pc.kg_res1 = r.kg1 + r.omega_1;
            pc.kg_res2 = r.kg2 - r.omega_2;
            rep.max_iota = std::max(rep.max_iota, pc.iota_max);
            rep.max_pi = std::max(rep.max_pi, pc.pi_max);
            rep.max_cond = std::max(rep.max_cond, pc.cond_residual);
            rep.max_sigma = std::max(rep.max_sigma, pc.sigma_abs);
            rep.max_kg_res = std::max({rep.max_kg_res, std::fabs(pc.kg_res1),
                                       std::fabs(pc.kg_res2)});
        } catch (const SingularNet&) {
            pc.singular = true;
            ++rep.n_singular;
        }
        rep.points.push_back(pc);
    }
    rep.chebyshev = rep.n_singular == 0 && rep.max_iota < tol_chebyshev &&
                    rep.max_pi < tol_chebyshev;
    rep.conjugate = rep.n_singular == 0 && rep.max_sigma < tol_conjugate;
    rep.concordant = rep.chebyshev && rep.max_cond < tol_concordant;
    return rep;
}

// --- identity suite ----------------------------------------------------------

struct Residual {
    std::string name;
    double value = 0;
    double scale = 1;  // magnitude of the participating terms
    double relative() const { return std::fabs(value) / std::max(scale, 1.0); }
};

struct IdentityReport {
    std::vector<Residual> residuals;
    bool zero_gauss = false;
    double max_relative() const {
        double m = 0;
        for (const auto& r : residuals) m = std::max(m, r.relative());
        return m;
    }
};

inline IdentityReport identity_suite(const SurfacePatch& patch, double p, double q,
                                     const DirectionPair& pair) {
    using namespace detail;
    const FundamentalData f = fundamental_data(patch, p, q, pair);
    const InvariantRecord r = invariant_record_from(f);
    IdentityReport rep;
    auto add = [&rep](const std::string& name, double value, double scale) {
        rep.residuals.push_back({name, value, scale});
    };

    const double cot = r.cos_omega / r.sin_omega;
    const double kn[2] = {r.kn1, r.kn2};
    const double tg[2] = {r.tg1, r.tg2};
    const double kg[2] = {r.kg1, r.kg2};
    const double pi[2] = {r.pi1, r.pi2};
    const double om[2] = {r.omega_1, r.omega_2};
    const double sg[2] = {-1.0, 1.0};  // (-1)^i

    for (int i = 0; i < 2; ++i) {
        const std::string k = std::to_string(i + 1);
        add("beetle" + k, tg[i] * tg[i] + kn[i] * kn[i] - 2.0 * r.H * kn[i] + r.K,
            tg[i] * tg[i] + kn[i] * kn[i] + std::fabs(2.0 * r.H * kn[i]) +
                std::fabs(r.K));
        add("torsion-schief" + k, sg[i] * tg[i] - (kn[i] * cot - r.sigma),
            std::fabs(tg[i]) + std::fabs(kn[i] * cot) + std::fabs(r.sigma));
        add("bortolotti-geodesic" + k, pi[i] * r.sin_omega + om[i] - sg[i] * kg[i],
            std::fabs(pi[i]) + std::fabs(om[i]) + std::fabs(kg[i]));
    }
    add("torsion-sum", tg[0] + tg[1] - (kn[1] - kn[0]) * cot,
        std::fabs(tg[0]) + std::fabs(tg[1]) + std::fabs((kn[1] - kn[0]) * cot));
    add("gauss-curvatures",
        r.K - (kn[0] * kn[1] + tg[0] * tg[1] + (kn[0] * tg[1] - kn[1] * tg[0]) * cot),
        std::fabs(r.K) + std::fabs(kn[0] * kn[1]) + std::fabs(tg[0] * tg[1]) +
            std::fabs((kn[0] * tg[1] - kn[1] * tg[0]) * cot));
    add("mean-curvatures", 2.0 * r.H - (kn[0] + kn[1] + (tg[1] - tg[0]) * cot),
        std::fabs(2.0 * r.H) + std::fabs(kn[0]) + std::fabs(kn[1]) +
            std::fabs((tg[1] - tg[0]) * cot));
    add("normal-product", kn[0] * kn[1] - (r.K + r.sigma * r.sigma) * r.sin_omega * r.sin_omega,
        std::fabs(kn[0] * kn[1]) + std::fabs(r.K) + r.sigma * r.sigma);
    add("normal-sum",
        kn[0] + kn[1] - 2.0 * (r.H * r.sin_omega + r.sigma * r.cos_omega) * r.sin_omega,
        std::fabs(kn[0]) + std::fabs(kn[1]) + 2.0 * std::fabs(r.H) +
            2.0 * std::fabs(r.sigma));
    add("commutator1", pi[0] + pi[1] * r.cos_omega - r.iota1,
        std::fabs(pi[0]) + std::fabs(pi[1]) + std::fabs(r.iota1));
    add("commutator2", pi[0] * r.cos_omega + pi[1] + r.iota2,
        std::fabs(pi[0]) + std::fabs(pi[1]) + std::fabs(r.iota2));

    // Geodesic torsion: triple-product form against the coefficient form,
    // referred to the pair's co-orientation.
    const Vec3 X1rv = value_of(f.X1r), X2rv = value_of(f.X2r);
    const double s = f.orient_sign;
    add("torsion-forms1", r.tg1 - s * triple(X1rv, f.n, f.X1n) / f.I11,
        std::fabs(r.tg1) + 1.0);
    add("torsion-forms2", r.tg2 - s * triple(X2rv, f.n, f.X2n) / f.I22,
        std::fabs(r.tg2) + 1.0);

    // Twist decompositions of the unit second derivatives.
    const D1 inv_rt11 = D1{1.0, 0.0, 0.0} / sqrt(f.I11f);
    const D1 inv_rt22 = D1{1.0, 0.0, 0.0} / sqrt(f.I22f);
    const D1Vec3 X1h = inv_rt11 * f.X1r, X2h = inv_rt22 * f.X2r;
    const Vec3 X1hX2hr = (1.0 / std::sqrt(f.I11)) * apply_field(f.a1, f.b1, X2h);
    const Vec3 X2hX1hr = (1.0 / std::sqrt(f.I22)) * apply_field(f.a2, f.b2, X1h);
    const Vec3 X1hv = value_of(X1h), X2hv = value_of(X2h);
    const double ss = r.sigma * r.sin_omega;
    const Vec3 tw1 = X1hX2hr - (ss * f.n + r.pi1 * X1hv - r.pi1 * r.cos_omega * X2hv);
    const Vec3 tw2 = X2hX1hr -
                     (ss * f.n - r.pi2 * r.cos_omega * X1hv + r.pi2 * X2hv);
    add("twist1", norm(tw1), norm(X1hX2hr) + 1.0);
    add("twist2", norm(tw2), norm(X2hX1hr) + 1.0);

    // Weingarten dot-product matrix.
    const Vec3 X1hn = (1.0 / std::sqrt(f.I11)) * f.X1n;
    const Vec3 X2hn = (1.0 / std::sqrt(f.I22)) * f.X2n;
    add("weingarten11", dot(X1hv, X1hn) + r.kn1, std::fabs(r.kn1) + 1.0);
    add("weingarten12", dot(X1hv, X2hn) + ss, std::fabs(ss) + 1.0);
    add("weingarten21", dot(X2hv, X1hn) + ss, std::fabs(ss) + 1.0);
    add("weingarten22", dot(X2hv, X2hn) + r.kn2, std::fabs(r.kn2) + 1.0);

    if (std::fabs(r.K) > 1e-12) {
        const double cot_iii = std::cos(r.omega_III) / std::sin(r.omega_III);
        add("third-form-angle", dot(X1hn, X2hn) - r.K * r.sin_omega * cot_iii,
            std::fabs(dot(X1hn, X2hn)) + std::fabs(r.K));
    } else {
        rep.zero_gauss = true;
    }
    return rep;
}

// --- discrete symmetries ------------------------------------------------------

enum class Symmetry { T0, T1, T2, T3 };

struct SymmetryResult {
    SurfacePatch patch;
    DirectionPair pair;
    std::function<InvariantRecord(const InvariantRecord&)> predict;
};

namespace detail {

inline DirectionPair::Component negate(DirectionPair::Component c) {
    return [c = std::move(c)](double p, double q) { return -c(p, q); };
}

}  // namespace detail

inline SymmetryResult apply_symmetry(Symmetry T, const SurfacePatch& patch,
                                     const DirectionPair& pair) {
    constexpr double pi_c = 3.14159265358979323846;
    SymmetryResult out;
    out.patch = patch;
    out.pair = pair;
    switch (T) {
        case Symmetry::T0: {
            // Ambient mirror z -> -z; flips the orientation of space.
            auto base = patch.immersion;
            out.patch.id += "|T0";
            out.patch.immersion = [base](double p, double q) {
                Jet2Vec3 r = base(p, q);
                r.z = -r.z;
                return r;
            };
            out.patch.inverse_gauss = nullptr;
            out.predict = [](InvariantRecord r) {
                r.H = -r.H;
                r.sigma = -r.sigma;
                r.kn1 = -r.kn1;
                r.kn2 = -r.kn2;
                r.tg1 = -r.tg1;
                r.tg2 = -r.tg2;
                return r;
            };
            break;
        }
        case Symmetry::T1: {
            out.pair.a1 = detail::negate(pair.a1);
            out.pair.b1 = detail::negate(pair.b1);
            out.predict = [pi_c](InvariantRecord r) {
                r.omega = pi_c - r.omega;
                r.cos_omega = -r.cos_omega;
                r.omega_oriented = std::fmod(r.omega_oriented + pi_c, 2.0 * pi_c);
                r.sigma = -r.sigma;
                r.kg2 = -r.kg2;
                r.tg1 = -r.tg1;
                r.tg2 = -r.tg2;
                r.pi2 = -r.pi2;
                r.iota2 = -r.iota2;
                r.omega_2 = -r.omega_2;
                if (std::isfinite(r.omega_III)) r.omega_III = pi_c - r.omega_III;
                return r;
            };
            break;
        }
        case Symmetry::T2: {
            out.pair.a2 = detail::negate(pair.a2);
            out.pair.b2 = detail::negate(pair.b2);
            out.predict = [pi_c](InvariantRecord r) {
                r.omega = pi_c - r.omega;
                r.cos_omega = -r.cos_omega;
                r.omega_oriented = std::fmod(r.omega_oriented + pi_c, 2.0 * pi_c);
                r.sigma = -r.sigma;
                r.kg1 = -r.kg1;
                r.tg1 = -r.tg1;
                r.tg2 = -r.tg2;
                r.pi1 = -r.pi1;
                r.iota1 = -r.iota1;
                r.omega_1 = -r.omega_1;
                if (std::isfinite(r.omega_III)) r.omega_III = pi_c - r.omega_III;
                return r;
            };
            break;
        }
        case Symmetry::T3: {
            out.pair.a1 = pair.a2;
            out.pair.b1 = pair.b2;
            out.pair.a2 = pair.a1;
            out.pair.b2 = pair.b1;
            out.predict = [pi_c](InvariantRecord r) {
                std::swap(r.kn1, r.kn2);
                std::swap(r.curv1, r.curv2);
                const double kg1 = r.kg1, tg1 = r.tg1;
                r.kg1 = -r.kg2;
                r.kg2 = -kg1;
                r.tg1 = -r.tg2;
                r.tg2 = -tg1;
                std::swap(r.pi1, r.pi2);
                const double i1 = r.iota1;
                r.iota1 = -r.iota2;
                r.iota2 = -i1;
                std::swap(r.omega_1, r.omega_2);
                r.omega_oriented = 2.0 * pi_c - r.omega_oriented;
                return r;
            };
            break;
        }
    }
    return out;
}

// The protractor reversion is an output convention, not a geometric map:
// it flips the signs of the oriented quantities in a record.
inline InvariantRecord reverse_protractor(InvariantRecord r) {
    r.omega = -r.omega;
    r.sin_omega = -r.sin_omega;
    r.sigma = -r.sigma;
    r.kg1 = -r.kg1;
    r.kg2 = -r.kg2;
    r.tg1 = -r.tg1;
    r.tg2 = -r.tg2;
    r.omega_1 = -r.omega_1;
    if (std::isfinite(r.omega_III)) r.omega_III = -r.omega_III;
    return r;
}

// --- Chebyshev grids and the Gauss-Mainardi-Codazzi residuals -----------------

// A sampled Chebyshev parameterization: nodes (x0 + i step, y0 + j step)
// carrying the position, the angle field and the h-variables II_ij/sin(omega).
struct ChebyshevGrid {
    int nx = 0, ny = 0;
    double x0 = 0, y0 = 0, step = 0;
    std::vector<Vec3> r;
    std::vector<Vec3> normal;
    std::vector<double> omega, h11, h12, h22;
    std::vector<unsigned char> mask;  // nonzero = valid node
    // Optional extras filled by grid builders: chart parameters of each
    // node and the unit tangents along the two families.
    std::vector<std::pair<double, double>> param;
    std::vector<Vec3> rx, ry;

    int idx(int i, int j) const { return j * nx + i; }
    double x_at(int i) const { return x0 + i * step; }
    double y_at(int j) const { return y0 + j * step; }
    bool valid(int i, int j) const {
        return i >= 0 && i < nx && j >= 0 && j < ny &&
               (mask.empty() || mask[idx(i, j)]);
    }
};

struct GmcResiduals {
    // Residuals of the three equations at interior nodes; NaN elsewhere.
    std::vector<double> gauss, codazzi1, codazzi2;
    double max_gauss = 0, max_codazzi1 = 0, max_codazzi2 = 0;
};

inline GmcResiduals gmc_residuals(const ChebyshevGrid& g) {
    if (g.nx < 3 || g.ny < 3)
        throw StencilOutOfDomain("gmc_residuals: grid too small for stencils");
    const int n = g.nx * g.ny;
    GmcResiduals out;
    out.gauss.assign(n, std::nan(""));
    out.codazzi1.assign(n, std::nan(""));
    out.codazzi2.assign(n, std::nan(""));
    const double h = g.step;
    for (int j = 1; j + 1 < g.ny; ++j) {
        for (int i = 1; i + 1 < g.nx; ++i) {
            bool ok = true;
            for (int dj = -1; dj <= 1 && ok; ++dj)
                for (int di = -1; di <= 1 && ok; ++di)
                    ok = g.valid(i + di, j + dj);
            if (!ok) continue;
            auto ix = [&](int a, int b) { return g.idx(a, b); };
            const double om = g.omega[ix(i, j)];
            const double so = std::sin(om), co = std::cos(om);
            const double om_x = (g.omega[ix(i + 1, j)] - g.omega[ix(i - 1, j)]) / (2 * h);
            const double om_y = (g.omega[ix(i, j + 1)] - g.omega[ix(i, j - 1)]) / (2 * h);
            const double om_xy = (g.omega[ix(i + 1, j + 1)] - g.omega[ix(i + 1, j - 1)] -
                                  g.omega[ix(i - 1, j + 1)] + g.omega[ix(i - 1, j - 1)]) /
                                 (4 * h * h);
            const double h11 = g.h11[ix(i, j)], h12 = g.h12[ix(i, j)],
                         h22 = g.h22[ix(i, j)];
            const double K = h11 * h22 - h12 * h12;
            const double h11_y = (g.h11[ix(i, j + 1)] - g.h11[ix(i, j - 1)]) / (2 * h);
            const double h12_x = (g.h12[ix(i + 1, j)] - g.h12[ix(i - 1, j)]) / (2 * h);
            const double h12_y = (g.h12[ix(i, j + 1)] - g.h12[ix(i, j - 1)]) / (2 * h);
            const double h22_x = (g.h22[ix(i + 1, j)] - g.h22[ix(i - 1, j)]) / (2 * h);

            const double r1 = om_xy + K * so;
            const double r2 = h11_y - (h12_x - h11 * om_y * co / so + h22 * om_x / so);
            const double r3 = h12_y - (h22_x - h11 * om_y / so + h22 * om_x * co / so);
            out.gauss[ix(i, j)] = r1;
            out.codazzi1[ix(i, j)] = r2;
            out.codazzi2[ix(i, j)] = r3;
            out.max_gauss = std::max(out.max_gauss, std::fabs(r1));
            out.max_codazzi1 = std::max(out.max_codazzi1, std::fabs(r2));
            out.max_codazzi2 = std::max(out.max_codazzi2, std::fabs(r3));
        }
    }
    return out;
}

}  // namespace chebnet
