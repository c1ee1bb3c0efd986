#pragma once

// Construction pipeline: parallelism of surface patches by equal normals,
// the mapping tensor and its eigenstructure, middle surfaces, the pair of
// transversal nets following the asymptotic directions of the two parallel
// surfaces, Chebyshev grids with curve tracing, the vector potential of the
// closed tangential form, the associated pair r +- m / kappa, and the
// asymptotic-coordinate (sine-Gordon) analysis of that pair.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "catalog.hpp"
#include "invariants.hpp"
#include "surface.hpp"

namespace chebnet {

// --- chart composition -------------------------------------------------------

// Chain rule to second order: f given as jets in (u, v), composed with the
// reparameterization u(p, q), v(p, q) given as jets in (p, q).
inline Jet2 chain2(const Jet2& f, const Jet2& U, const Jet2& V) {
    Jet2 out;
    out.value = f.value;
    out.d_p = f.d_p * U.d_p + f.d_q * V.d_p;
    out.d_q = f.d_p * U.d_q + f.d_q * V.d_q;
    out.d_pp = f.d_pp * U.d_p * U.d_p + 2.0 * f.d_pq * U.d_p * V.d_p +
               f.d_qq * V.d_p * V.d_p + f.d_p * U.d_pp + f.d_q * V.d_pp;
    out.d_pq = f.d_pp * U.d_p * U.d_q + f.d_pq * (U.d_p * V.d_q + U.d_q * V.d_p) +
               f.d_qq * V.d_p * V.d_q + f.d_p * U.d_pq + f.d_q * V.d_pq;
    out.d_qq = f.d_pp * U.d_q * U.d_q + 2.0 * f.d_pq * U.d_q * V.d_q +
               f.d_qq * V.d_q * V.d_q + f.d_p * U.d_qq + f.d_q * V.d_qq;
    return out;
}

inline Jet2Vec3 chain2(const Jet2Vec3& f, const Jet2& U, const Jet2& V) {
    return {chain2(f.x, U, V), chain2(f.y, U, V), chain2(f.z, U, V)};
}

inline Rect shrink(const Rect& r, double dp, double dq) {
    Rect out{r.p_min + dp, r.p_max - dp, r.q_min + dq, r.q_max - dq};
    if (out.p_min >= out.p_max || out.q_min >= out.q_max)
        throw DomainEmpty("shrink: margins swallow the rectangle");
    return out;
}

// --- parallel pairs ----------------------------------------------------------

enum class ChartMethod { Identity, Sphere, FirstSurface };

// Two patches with parallel (equal) unit normals over a shared chart.  The
// chart carries the common normal field n(p, q) with its first derivatives;
// to_A / to_B map chart points to the parameters of each patch.
struct ParallelPair {
    SurfacePatch A, B;
    Rect chart;
    ChartMethod method = ChartMethod::Sphere;
    double fd_step = 0.005;
    std::function<std::pair<double, double>(double, double)> to_A, to_B;
    std::function<NormalJet(double, double)> chart_normal;
};

namespace detail {

using ToFn = std::function<std::pair<double, double>(double, double)>;
using ChartNormalFn = std::function<NormalJet(double, double)>;

inline NormalJet sphere_chart_normal(double p, double q) {
    const double cp = std::cos(p), sp = std::sin(p);
    const double cq = std::cos(q), sq = std::sin(q);
    NormalJet nj;
    nj.n = {cp * cq, sp * cq, sq};
    nj.n_p = {-sp * cq, cp * cq, 0.0};
    nj.n_q = {-cp * sq, -sp * sq, cq};
    return nj;
}

inline bool inside_frac(const Rect& d, double u, double v, double frac) {
    const double mp = frac * (d.p_max - d.p_min), mq = frac * (d.q_max - d.q_min);
    return u >= d.p_min + mp && u <= d.p_max - mp && v >= d.q_min + mq &&
           v <= d.q_max - mq;
}

// Jacobian of (p, q) -> parameters of S, from the implicit parallelism
// n_S(u, v) = n(p, q): a Gram solve in the tangent plane of the Gauss image.
inline std::array<double, 4> to_jacobian(const SurfacePatch& S, const ToFn& to,
                                         const ChartNormalFn& cn, double p, double q,
                                         std::pair<double, double>* uv = nullptr) {
    const auto [u, v] = to(p, q);
    if (uv) *uv = {u, v};
    const NormalJet nS = unit_normal_jet(S, u, v);
    const NormalJet nc = cn(p, q);
    const double a = dot(nS.n_p, nS.n_p), b = dot(nS.n_p, nS.n_q),
                 c = dot(nS.n_q, nS.n_q);
    const double det = a * c - b * b;
    if (std::fabs(det) < 1e-14)
        throw DegenerateTangent(S.id + ": Gauss map not invertible");
    auto col = [&](const Vec3& rhs) {
        const double g1 = dot(nS.n_p, rhs), g2 = dot(nS.n_q, rhs);
        return std::pair<double, double>{(c * g1 - b * g2) / det,
                                         (a * g2 - b * g1) / det};
    };
    const auto [up, vp] = col(nc.n_p);
    const auto [uq, vq] = col(nc.n_q);
    return {up, uq, vp, vq};  // du/dp, du/dq, dv/dp, dv/dq
}

struct ParamJets {
    Jet2 U, V;
};

// Jets of the parameter maps: values from to(), first derivatives exact from
// the implicit equation, second derivatives by Richardson differences of the
// first derivatives.
inline ParamJets param_jets(const SurfacePatch& S, const ToFn& to,
                            const ChartNormalFn& cn, double p, double q, double h) {
    std::pair<double, double> uv;
    const auto J0 = to_jacobian(S, to, cn, p, q, &uv);
    auto D = [&](bool along_p, double hh) {
        const auto Jm = along_p ? to_jacobian(S, to, cn, p - hh, q)
                                : to_jacobian(S, to, cn, p, q - hh);
        const auto Jp = along_p ? to_jacobian(S, to, cn, p + hh, q)
                                : to_jacobian(S, to, cn, p, q + hh);
        std::array<double, 4> d;
        for (int k = 0; k < 4; ++k) d[k] = (Jp[k] - Jm[k]) / (2.0 * hh);
        return d;
    };
    auto rich = [&](bool along_p) {
        const auto c1 = D(along_p, h);
        const auto c2 = D(along_p, 0.5 * h);
        std::array<double, 4> d;
        for (int k = 0; k < 4; ++k) d[k] = (4.0 * c2[k] - c1[k]) / 3.0;
        return d;
    };
    const auto Dp = rich(true), Dq = rich(false);
    ParamJets out;
    out.U = Jet2(uv.first, J0[0], J0[1], Dp[0], 0.5 * (Dq[0] + Dp[1]), Dq[1]);
    out.V = Jet2(uv.second, J0[2], J0[3], Dp[2], 0.5 * (Dq[2] + Dp[3]), Dq[3]);
    return out;
}

// Largest all-valid square on a scan lattice, shrunk by one cell on each side.
template <class Valid>
Rect largest_valid_square(const std::vector<double>& xs, const std::vector<double>& ys,
                          Valid&& valid, const std::string& what) {
    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    std::vector<int> r(static_cast<size_t>(nx) * ny, 0);
    auto at = [&](int i, int j) -> int& { return r[static_cast<size_t>(j) * nx + i]; };
    int best = 0, bi = 0, bj = 0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            if (!valid(xs[i], ys[j])) continue;
            const int a = i > 0 ? at(i - 1, j) : 0;
            const int b = j > 0 ? at(i, j - 1) : 0;
            const int c = (i > 0 && j > 0) ? at(i - 1, j - 1) : 0;
            at(i, j) = 1 + std::min({a, b, c});
            if (at(i, j) > best) {
                best = at(i, j);
                bi = i;
                bj = j;
            }
        }
    }
    if (best < 4) throw NoOverlap(what + ": no usable region of parallel normals");
    return {xs[bi - best + 2], xs[bi - 1], ys[bj - best + 2], ys[bj - 1]};
}

}  // namespace detail

inline ParallelPair make_parallel(const SurfacePatch& A, const SurfacePatch& B,
                                  const Rect* chart_override = nullptr,
                                  double fd_step = 0.005) {
    using namespace detail;
    ParallelPair pp;
    pp.A = A;
    pp.B = B;
    pp.fd_step = fd_step;

    if (A.id == B.id) {
        pp.method = ChartMethod::Identity;
        pp.chart = chart_override
                       ? *chart_override
                       : shrink(A.domain, 0.05 * (A.domain.p_max - A.domain.p_min),
                                0.05 * (A.domain.q_max - A.domain.q_min));
        auto ident = [](double p, double q) { return std::pair<double, double>{p, q}; };
        pp.to_A = ident;
        pp.to_B = ident;
        const SurfacePatch Ac = A;
        pp.chart_normal = [Ac](double p, double q) { return unit_normal_jet(Ac, p, q); };
        return pp;
    }

    if (A.inverse_gauss && B.inverse_gauss) {
        pp.method = ChartMethod::Sphere;
        pp.chart_normal = [](double p, double q) { return sphere_chart_normal(p, q); };
        const SurfacePatch Ac = A, Bc = B;
        pp.to_A = [Ac](double p, double q) {
            return Ac.inverse_gauss(sphere_chart_normal(p, q).n);
        };
        pp.to_B = [Bc](double p, double q) {
            return Bc.inverse_gauss(sphere_chart_normal(p, q).n);
        };
        if (chart_override) {
            pp.chart = *chart_override;
        } else {
            const int NP = 96, NT = 44;
            std::vector<double> xs(NP), ys(NT);
            for (int i = 0; i < NP; ++i) xs[i] = -3.1 + 6.2 * i / (NP - 1);
            for (int j = 0; j < NT; ++j) ys[j] = -1.5 + 3.0 * j / (NT - 1);
            auto valid = [&](double p, double q) {
                const Vec3 n = sphere_chart_normal(p, q).n;
                try {
                    const auto [ua, va] = Ac.inverse_gauss(n);
                    if (!inside_frac(Ac.domain, ua, va, 0.03)) return false;
                    if (norm(unit_normal_jet(Ac, ua, va).n - n) > 1e-9) return false;
                    const auto [ub, vb] = Bc.inverse_gauss(n);
                    if (!inside_frac(Bc.domain, ub, vb, 0.03)) return false;
                    if (norm(unit_normal_jet(Bc, ub, vb).n - n) > 1e-9) return false;
                } catch (const Error&) {
                    return false;
                }
                return true;
            };
            pp.chart = largest_valid_square(xs, ys, valid, A.id + "|" + B.id);
        }
    } else {
        // Chart = parameters of A; parameters of B found by warm-started Newton.
        pp.method = ChartMethod::FirstSurface;
        const SurfacePatch Ac = A, Bc = B;
        pp.chart_normal = [Ac](double p, double q) { return unit_normal_jet(Ac, p, q); };
        pp.to_A = [](double p, double q) { return std::pair<double, double>{p, q}; };
        auto last = std::make_shared<std::optional<std::pair<double, double>>>();
        pp.to_B = [Ac, Bc, last](double p, double q) {
            const Vec3 n = unit_normal_jet(Ac, p, q).n;
            if (*last) {
                try {
                    const auto r = newton_polish(Bc, n, (*last)->first, (*last)->second);
                    *last = r;
                    return r;
                } catch (const NewtonDiverged&) {
                }
            }
            const auto r = newton_inverse_gauss(Bc, n, 32);
            *last = r;
            return r;
        };
        if (chart_override) {
            pp.chart = *chart_override;
        } else {
            const int N = 24;
            std::vector<double> xs(N), ys(N);
            const Rect& d = A.domain;
            for (int i = 0; i < N; ++i) {
                xs[i] = d.p_min + (d.p_max - d.p_min) * (i + 0.5) / N;
                ys[i] = d.q_min + (d.q_max - d.q_min) * (i + 0.5) / N;
            }
            auto valid = [&](double p, double q) {
                try {
                    const Vec3 n = unit_normal_jet(Ac, p, q).n;
                    const auto [ub, vb] = newton_inverse_gauss(Bc, n, 24);
                    if (!inside_frac(Bc.domain, ub, vb, 0.03)) return false;
                    if (norm(unit_normal_jet(Bc, ub, vb).n - n) > 1e-9) return false;
                } catch (const Error&) {
                    return false;
                }
                return true;
            };
            pp.chart = largest_valid_square(xs, ys, valid, A.id + "|" + B.id);
        }
    }

    // Final validation on a lattice: the two normals agree with the chart's.
    for (int j = 0; j < 9; ++j) {
        for (int i = 0; i < 9; ++i) {
            const double p = pp.chart.p_min + (pp.chart.p_max - pp.chart.p_min) * i / 8.0;
            const double q = pp.chart.q_min + (pp.chart.q_max - pp.chart.q_min) * j / 8.0;
            try {
                const Vec3 n = pp.chart_normal(p, q).n;
                const auto [ua, va] = pp.to_A(p, q);
                const auto [ub, vb] = pp.to_B(p, q);
                if (norm(unit_normal_jet(pp.A, ua, va).n - n) > 1e-9 ||
                    norm(unit_normal_jet(pp.B, ub, vb).n - n) > 1e-9)
                    throw NoOverlap(A.id + "|" + B.id + ": normals disagree on chart");
            } catch (const NoOverlap&) {
                throw;
            } catch (const Error& e) {
                throw NoOverlap(A.id + "|" + B.id + ": chart validation failed: " +
                                e.what());
            }
        }
    }
    return pp;
}

// Both immersions (and their mean) as jets with respect to the shared chart.
struct PairPoint {
    Jet2Vec3 rA, rB, rM;
    Vec3 n;
};

inline PairPoint pair_point(const ParallelPair& pp, double p, double q) {
    PairPoint out;
    out.n = pp.chart_normal(p, q).n;
    if (pp.method == ChartMethod::Identity) {
        out.rA = surface_jet(pp.A, p, q);
        out.rB = surface_jet(pp.B, p, q);
    } else {
        if (pp.method == ChartMethod::FirstSurface) {
            out.rA = surface_jet(pp.A, p, q);
        } else {
            const auto ja =
                detail::param_jets(pp.A, pp.to_A, pp.chart_normal, p, q, pp.fd_step);
            out.rA = chain2(surface_jet(pp.A, ja.U.value, ja.V.value), ja.U, ja.V);
        }
        const auto jb =
            detail::param_jets(pp.B, pp.to_B, pp.chart_normal, p, q, pp.fd_step);
        out.rB = chain2(surface_jet(pp.B, jb.U.value, jb.V.value), jb.U, jb.V);
    }
    out.rM = 0.5 * (out.rA + out.rB);
    return out;
}

// Fundamental forms in the shared chart, with exact first derivatives of the
// first-form coefficients.
struct Forms2 {
    double I11 = 0, I12 = 0, I22 = 0;
    double II11 = 0, II12 = 0, II22 = 0;
    double dI11[2] = {0, 0}, dI12[2] = {0, 0}, dI22[2] = {0, 0};
};

inline Forms2 forms_in_chart(const Jet2Vec3& r, const Vec3& n) {
    using namespace detail;
    const Vec3 rp = dp_of(r), rq = dq_of(r);
    const Vec3 rpp = dpp_of(r), rpq = dpq_of(r), rqq = dqq_of(r);
    Forms2 f;
    f.I11 = dot(rp, rp);
    f.I12 = dot(rp, rq);
    f.I22 = dot(rq, rq);
    f.II11 = dot(rpp, n);
    f.II12 = dot(rpq, n);
    f.II22 = dot(rqq, n);
    f.dI11[0] = 2.0 * dot(rp, rpp);
    f.dI11[1] = 2.0 * dot(rp, rpq);
    f.dI12[0] = dot(rpp, rq) + dot(rp, rpq);
    f.dI12[1] = dot(rpq, rq) + dot(rp, rqq);
    f.dI22[0] = 2.0 * dot(rq, rpq);
    f.dI22[1] = 2.0 * dot(rq, rqq);
    return f;
}

namespace detail {

inline double quad(double g11, double g12, double g22, double a, double b) {
    return g11 * a * a + 2.0 * g12 * a * b + g22 * b * b;
}
inline double bilin(double g11, double g12, double g22, double a1, double b1,
                    double a2, double b2) {
    return g11 * a1 * a2 + g12 * (a1 * b2 + b1 * a2) + g22 * b1 * b2;
}

}  // namespace detail

// --- asymptotic directions ---------------------------------------------------

struct Dir2 {
    double a = 0, b = 0;
};

// Null directions of a symmetric 2x2 form, unit in chart coordinates, with
// the representative angle taken in [0, pi).
inline std::array<Dir2, 2> null_directions(double B11, double B12, double B22) {
    constexpr double pi_c = 3.14159265358979323846;
    const double mean = 0.5 * (B11 + B22), dev = 0.5 * (B11 - B22);
    const double R = std::hypot(dev, B12);
    const double scale = std::fabs(B11) + 2.0 * std::fabs(B12) + std::fabs(B22);
    if (scale < 1e-10)
        throw GenericityViolation("no asymptotic directions: second form vanishes");
    if (R * R - mean * mean <= 1e-12 * scale * scale)
        throw GenericityViolation("no transversal asymptotic directions: form not hyperbolic");
    const double delta = std::atan2(B12, dev);
    const double ac = std::acos(std::clamp(-mean / R, -1.0, 1.0));
    std::array<Dir2, 2> out;
    const double ts[2] = {0.5 * (delta + ac), 0.5 * (delta - ac)};
    for (int i = 0; i < 2; ++i) {
        double t = std::fmod(ts[i], pi_c);
        if (t < 0.0) t += pi_c;
        out[i] = {std::cos(t), std::sin(t)};
    }
    if (out[0].a * out[1].b - out[0].b * out[1].a < 0.0) std::swap(out[0], out[1]);
    return out;
}

// --- mapping tensor ----------------------------------------------------------

// r_B,j = s^1_j r_A,p + s^2_j r_A,q, solved by least squares in the tangent
// plane of A; the two surfaces share that plane, so the residual measures
// only numerical error.
struct MappingTensor {
    double s11 = 0, s12 = 0, s21 = 0, s22 = 0;  // s^i_j
    double xi = 0, eta = 0;
    double det_s = 0;
    double ls_residual = 0;   // projection defect of r_B,j
    double sym_residual = 0;  // asymmetry of II_A . s  (shared conjugacy)
    double ff2_residual = 0;  // II_B vs s^k_i II_A,kj
    double min_asym_angle = 0;  // smallest |sin| angle between A- and B-asymptotics
};

namespace detail {

struct MappingData {
    MappingTensor t;
    Forms2 fA, fB, fM;
    Vec3 n;
    std::array<Dir2, 2> dirA, dirB;
};

inline MappingData mapping_data(const ParallelPair& pp, double p, double q,
                                bool genericity = true) {
    const PairPoint pt = pair_point(pp, p, q);
    MappingData out;
    out.n = pt.n;
    out.fA = forms_in_chart(pt.rA, pt.n);
    out.fB = forms_in_chart(pt.rB, pt.n);
    out.fM = forms_in_chart(pt.rM, pt.n);
    const Vec3 rp = dp_of(pt.rA), rq = dq_of(pt.rA);
    const Vec3 bp = dp_of(pt.rB), bq = dq_of(pt.rB);
    const double E = out.fA.I11, F = out.fA.I12, G = out.fA.I22;
    const double det = E * G - F * F;
    if (det <= 0.0) throw DegenerateTangent(pp.A.id + ": degenerate first form");
    auto solve = [&](const Vec3& rhs, double& c1, double& c2) {
        const double g1 = dot(rp, rhs), g2 = dot(rq, rhs);
        c1 = (G * g1 - F * g2) / det;
        c2 = (E * g2 - F * g1) / det;
    };
    MappingTensor& t = out.t;
    solve(bp, t.s11, t.s21);
    solve(bq, t.s12, t.s22);
    const Vec3 res_p = bp - t.s11 * rp - t.s21 * rq;
    const Vec3 res_q = bq - t.s12 * rp - t.s22 * rq;
    t.ls_residual = std::max(norm(res_p) / (norm(bp) + 1.0),
                             norm(res_q) / (norm(bq) + 1.0));
    t.det_s = t.s11 * t.s22 - t.s12 * t.s21;
    const double tr = t.s11 + t.s22;
    const double frob = std::sqrt(t.s11 * t.s11 + t.s12 * t.s12 + t.s21 * t.s21 +
                                  t.s22 * t.s22);
    const double disc = tr * tr - 4.0 * t.det_s;
    if (disc <= 1e-12 * frob * frob)
        throw DegenerateEigen("mapping tensor: eigenvalues coincide (self-parallel?)");
    const double sq = std::sqrt(disc);
    const double l1 = 0.5 * (tr + sq), l2 = 0.5 * (tr - sq);
    t.xi = std::fabs(l1) >= std::fabs(l2) ? l1 : l2;
    t.eta = std::fabs(l1) >= std::fabs(l2) ? l2 : l1;

    // T = II_A . s must be symmetric (shared conjugate directions).
    const double T11 = out.fA.II11 * t.s11 + out.fA.II12 * t.s21;
    const double T12 = out.fA.II11 * t.s12 + out.fA.II12 * t.s22;
    const double T21 = out.fA.II12 * t.s11 + out.fA.II22 * t.s21;
    const double T22 = out.fA.II12 * t.s12 + out.fA.II22 * t.s22;
    const double Tsc = std::fabs(T11) + std::fabs(T12) + std::fabs(T21) +
                       std::fabs(T22) + 1e-300;
    t.sym_residual = std::fabs(T12 - T21) / Tsc;

    // II_B,ij = s^k_i II_A,kj.
    const double P11 = t.s11 * out.fA.II11 + t.s21 * out.fA.II12;
    const double P12 = t.s11 * out.fA.II12 + t.s21 * out.fA.II22;
    const double P22 = t.s12 * out.fA.II12 + t.s22 * out.fA.II22;
    const double Psc = std::fabs(out.fB.II11) + 2.0 * std::fabs(out.fB.II12) +
                       std::fabs(out.fB.II22) + 1e-300;
    t.ff2_residual = std::max({std::fabs(P11 - out.fB.II11),
                               std::fabs(P12 - out.fB.II12),
                               std::fabs(P22 - out.fB.II22)}) /
                     Psc;

    if (genericity) {
        out.dirA = null_directions(out.fA.II11, out.fA.II12, out.fA.II22);
        out.dirB = null_directions(out.fB.II11, out.fB.II12, out.fB.II22);
        double mn = 2.0;
        for (const Dir2& u : out.dirA) {
            const Vec3 U = u.a * rp + u.b * rq;
            for (const Dir2& w : out.dirB) {
                const Vec3 W = w.a * bp + w.b * bq;
                mn = std::min(mn, norm(cross(U, W)) / (norm(U) * norm(W)));
            }
        }
        t.min_asym_angle = mn;
        if (mn < 1e-6)
            throw GenericityViolation(
                "asymptotic direction shared by the parallel pair");
    }
    return out;
}

}  // namespace detail

inline MappingTensor mapping_tensor(const ParallelPair& pp, double p, double q) {
    return detail::mapping_data(pp, p, q).t;
}

// Auto-selected charts keep to the region where the construction is
// usable: real, separated eigenvalues of the mapping tensor (the middle
// surface is hyperbolic there) and no shared asymptotic directions.
inline ParallelPair restrict_to_generic(ParallelPair pp, int scan_n = 40) {
    std::vector<double> xs(scan_n), ys(scan_n);
    for (int i = 0; i < scan_n; ++i) {
        xs[i] = pp.chart.p_min +
                (pp.chart.p_max - pp.chart.p_min) * (i + 0.5) / scan_n;
        ys[i] = pp.chart.q_min +
                (pp.chart.q_max - pp.chart.q_min) * (i + 0.5) / scan_n;
    }
    auto valid = [&](double p, double q) {
        try {
            const auto d = detail::mapping_data(pp, p, q, true);
            if (std::fabs(1.0 + d.t.xi) < 1e-3) return false;  // cuspidal
        } catch (const Error&) {
            return false;
        }
        return true;
    };
    pp.chart = detail::largest_valid_square(xs, ys, valid,
                                            pp.A.id + "|" + pp.B.id + " generic");
    return pp;
}

// --- residuals of the compatibility equations in local conjugate coordinates --

// At a point, construct commuting representatives of the two eigenfields of
// the mapping tensor (conjugate for both surfaces) and evaluate the Codazzi
// reduction and the eigenvalue transport equations of surface A in these
// coordinates.  Derivatives of the eigen data use Richardson differences
// with branch continuity.
struct PetersonResiduals {
    double mc1 = 0, mc2 = 0;      // Codazzi reduction in conjugate coordinates
    double marg1 = 0, marg2 = 0;  // eigenvalue transport (reduced form)
    double cov1 = 0, cov2 = 0;    // covariant symmetry s^k_{1;2} = s^k_{2;1}
    double conjA = 0, conjB = 0;  // |II(u, w)| for both surfaces, relative
    double xi = 0;
};

inline PetersonResiduals peterson_residuals(const ParallelPair& pp, double p,
                                            double q, double h = 0.005) {
    using namespace detail;
    const MappingData c0 = mapping_data(pp, p, q, false);
    const double xi0 = c0.t.xi;

    // Center eigenvectors, canonically oriented.
    auto eig_vec = [](double s11, double s12, double s21, double s22, double lam) {
        const Dir2 c1{s12, lam - s11};
        const Dir2 c2{lam - s22, s21};
        const double n1 = std::hypot(c1.a, c1.b), n2 = std::hypot(c2.a, c2.b);
        Dir2 v = n1 >= n2 ? c1 : c2;
        const double nn = std::max(n1, n2);
        if (nn < 1e-14) throw DegenerateEigen("eigenvector not isolated");
        v.a /= nn;
        v.b /= nn;
        if (v.a < 0.0 || (v.a == 0.0 && v.b < 0.0)) {
            v.a = -v.a;
            v.b = -v.b;
        }
        return v;
    };
    const Dir2 u0 = eig_vec(c0.t.s11, c0.t.s12, c0.t.s21, c0.t.s22, c0.t.xi);
    const Dir2 w0 = eig_vec(c0.t.s11, c0.t.s12, c0.t.s21, c0.t.s22, c0.t.eta);

    // Aligned eigen data at a nearby point.
    struct EigPt {
        Dir2 u, w;
        double xi;
        Forms2 fA;
        MappingTensor t;
    };
    auto eig_at = [&](double x, double y) {
        const MappingData c = mapping_data(pp, x, y, false);
        EigPt e;
        e.fA = c.fA;
        e.t = c.t;
        const bool flip = std::fabs(c.t.xi - xi0) > std::fabs(c.t.eta - xi0);
        e.xi = flip ? c.t.eta : c.t.xi;
        const double other = flip ? c.t.xi : c.t.eta;
        e.u = eig_vec(c.t.s11, c.t.s12, c.t.s21, c.t.s22, e.xi);
        e.w = eig_vec(c.t.s11, c.t.s12, c.t.s21, c.t.s22, other);
        if (e.u.a * u0.a + e.u.b * u0.b < 0.0) {
            e.u.a = -e.u.a;
            e.u.b = -e.u.b;
        }
        if (e.w.a * w0.a + e.w.b * w0.b < 0.0) {
            e.w.a = -e.w.a;
            e.w.b = -e.w.b;
        }
        return e;
    };

    // Richardson gradient of an N-vector-valued field.
    auto rich = [&](auto&& f) {
        auto d = [&](bool ap, double hh) {
            const auto m = ap ? f(p - hh, q) : f(p, q - hh);
            const auto pl = ap ? f(p + hh, q) : f(p, q + hh);
            auto out = pl;
            for (size_t k = 0; k < out.size(); ++k) out[k] = (pl[k] - m[k]) / (2.0 * hh);
            return out;
        };
        auto one = [&](bool ap) {
            const auto a = d(ap, h);
            const auto b = d(ap, 0.5 * h);
            auto out = a;
            for (size_t k = 0; k < out.size(); ++k) out[k] = (4.0 * b[k] - a[k]) / 3.0;
            return out;
        };
        return std::pair{one(true), one(false)};
    };

    // Derivatives of the eigen fields and of s.
    auto eig_field = [&](double x, double y) {
        const EigPt e = eig_at(x, y);
        return std::array<double, 9>{e.u.a, e.u.b, e.w.a, e.w.b, e.xi,
                                     e.t.s11, e.t.s12, e.t.s21, e.t.s22};
    };
    const auto [Ep, Eq] = rich(eig_field);

    // Commutator [u, w] = (grad w) u - (grad u) w, then the structure
    // coefficients [u, w] = alpha u + beta w.
    const double lie_a = (Ep[2] * u0.a + Eq[2] * u0.b) - (Ep[0] * w0.a + Eq[0] * w0.b);
    const double lie_b = (Ep[3] * u0.a + Eq[3] * u0.b) - (Ep[1] * w0.a + Eq[1] * w0.b);
    const double den = u0.a * w0.b - u0.b * w0.a;
    if (std::fabs(den) < 1e-12)
        throw DegenerateEigen("eigen directions not transversal");
    const double alpha = (lie_a * w0.b - lie_b * w0.a) / den;
    const double beta = (u0.a * lie_b - u0.b * lie_a) / den;

    // Rescalings U = f u, W = g w with f = g = 1 here, chosen so that
    // [U, W] vanishes at the point: u.f = 0, w.f = alpha, u.g = -beta, w.g = 0.
    auto solve_dir = [&](double du, double dw) {
        // rows u0^T, w0^T applied to the gradient.
        return std::array<double, 2>{(du * w0.b - dw * u0.b) / den,
                                     (u0.a * dw - w0.a * du) / den};
    };
    const auto grad_f = solve_dir(0.0, alpha);
    const auto grad_g = solve_dir(-beta, 0.0);

    // Scalar fields built from the raw (unscaled) eigen data.
    auto raw_fields = [&](double x, double y) {
        const EigPt e = eig_at(x, y);
        const double Iaa = quad(e.fA.I11, e.fA.I12, e.fA.I22, e.u.a, e.u.b);
        const double Iab =
            bilin(e.fA.I11, e.fA.I12, e.fA.I22, e.u.a, e.u.b, e.w.a, e.w.b);
        const double Ibb = quad(e.fA.I11, e.fA.I12, e.fA.I22, e.w.a, e.w.b);
        const double Baa = quad(e.fA.II11, e.fA.II12, e.fA.II22, e.u.a, e.u.b);
        const double Bbb = quad(e.fA.II11, e.fA.II12, e.fA.II22, e.w.a, e.w.b);
        return std::array<double, 6>{Iaa, Iab, Ibb, Baa, Bbb, e.xi};
    };
    const auto F0 = raw_fields(p, q);
    const auto [Fp, Fq] = rich(raw_fields);

    // Directional derivatives along the commuting representatives at the
    // point, including the scaling gradients (f = g = 1 at the point).
    auto dir_a = [&](int k, double fcorr) {
        return u0.a * Fp[k] + u0.b * Fq[k] + fcorr;
    };
    auto dir_b = [&](int k, double fcorr) {
        return w0.a * Fp[k] + w0.b * Fq[k] + fcorr;
    };
    auto along = [&](const std::array<double, 2>& gr, const Dir2& d) {
        return gr[0] * d.a + gr[1] * d.b;
    };
    // Local metric g_ab and its coordinate derivatives: I_aa = f^2 Iaa, etc.
    const double g11 = F0[0], g12 = F0[1], g22 = F0[2];
    const double d1g11 = dir_a(0, 2.0 * along(grad_f, u0) * F0[0]);
    const double d2g11 = dir_b(0, 2.0 * along(grad_f, w0) * F0[0]);
    const double d1g12 =
        dir_a(1, (along(grad_f, u0) + along(grad_g, u0)) * F0[1]);
    const double d2g12 =
        dir_b(1, (along(grad_f, w0) + along(grad_g, w0)) * F0[1]);
    const double d1g22 = dir_a(2, 2.0 * along(grad_g, u0) * F0[2]);
    const double d2g22 = dir_b(2, 2.0 * along(grad_g, w0) * F0[2]);
    const double detg = g11 * g22 - g12 * g12;
    if (detg <= 0.0) throw DegenerateTangent("local conjugate metric degenerate");
    const double gi11 = g22 / detg, gi12 = -g12 / detg, gi22 = g11 / detg;
    auto gamma = [&](int k, int i, int j) {
        // dg[l][m] = d_l g_{..} with the symmetric index pair m.
        auto dg = [&](int l, int a, int b) {
            if (a == 1 && b == 1) return l == 1 ? d1g11 : d2g11;
            if (a == 2 && b == 2) return l == 1 ? d1g22 : d2g22;
            return l == 1 ? d1g12 : d2g12;
        };
        auto gi = [&](int a, int b) {
            if (a == 1 && b == 1) return gi11;
            if (a == 2 && b == 2) return gi22;
            return gi12;
        };
        double s = 0.0;
        for (int l = 1; l <= 2; ++l)
            s += 0.5 * gi(k, l) * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
        return s;
    };

    // Second form in the local coordinates: II_aa = f^2 Baa, II_bb = g^2 Bbb,
    // II_ab = 0 by conjugacy.
    const double B11 = F0[3], B22 = F0[4];
    const double d2B11 = dir_b(3, 2.0 * along(grad_f, w0) * F0[3]);
    const double d1B22 = dir_a(4, 2.0 * along(grad_g, u0) * F0[4]);

    PetersonResiduals out;
    out.xi = F0[5];
    out.mc1 = d2B11 - B11 * gamma(1, 1, 2) + B22 * gamma(2, 1, 1);
    out.mc2 = d1B22 + B11 * gamma(1, 2, 2) - B22 * gamma(2, 1, 2);
    const double dxia = dir_a(5, 0.0), dxib = dir_b(5, 0.0);
    const double xi = F0[5];
    out.marg1 = dxib - ((1.0 - xi * xi) / xi) * gamma(1, 1, 2);
    // eta = 1/xi (det s = 1) is transported along the first family.
    out.marg2 = -dxia / (xi * xi) + ((1.0 - xi * xi) / xi) * gamma(2, 1, 2);

    // Conjugacy of the eigen directions for both surfaces.
    const double IIsA = std::fabs(c0.fA.II11) + 2.0 * std::fabs(c0.fA.II12) +
                        std::fabs(c0.fA.II22) + 1e-300;
    const double IIsB = std::fabs(c0.fB.II11) + 2.0 * std::fabs(c0.fB.II12) +
                        std::fabs(c0.fB.II22) + 1e-300;
    out.conjA = std::fabs(bilin(c0.fA.II11, c0.fA.II12, c0.fA.II22, u0.a, u0.b,
                                w0.a, w0.b)) /
                IIsA;
    out.conjB = std::fabs(bilin(c0.fB.II11, c0.fB.II12, c0.fB.II22, u0.a, u0.b,
                                w0.a, w0.b)) /
                IIsB;

    // Covariant symmetry of s in the shared chart, with the Christoffel
    // symbols of A's first form (exact derivatives from the jets).
    {
        const Forms2& f = c0.fA;
        const double det = f.I11 * f.I22 - f.I12 * f.I12;
        const double gi11s = f.I22 / det, gi12s = -f.I12 / det, gi22s = f.I11 / det;
        auto dgs = [&](int l, int a, int b) {
            if (a == 1 && b == 1) return f.dI11[l - 1];
            if (a == 2 && b == 2) return f.dI22[l - 1];
            return f.dI12[l - 1];
        };
        auto gis = [&](int a, int b) {
            if (a == 1 && b == 1) return gi11s;
            if (a == 2 && b == 2) return gi22s;
            return gi12s;
        };
        auto gam = [&](int k, int i, int j) {
            double s = 0.0;
            for (int l = 1; l <= 2; ++l)
                s += 0.5 * gis(k, l) * (dgs(i, j, l) + dgs(j, i, l) - dgs(l, i, j));
            return s;
        };
        // s entries as fields: indices 5..8 of eig_field hold s11 s12 s21 s22.
        auto sval = [&](int k, int i) {  // s^k_i
            if (k == 1 && i == 1) return c0.t.s11;
            if (k == 1 && i == 2) return c0.t.s12;
            if (k == 2 && i == 1) return c0.t.s21;
            return c0.t.s22;
        };
        auto sder = [&](int l, int k, int i) {  // d_l s^k_i
            const auto& E = l == 1 ? Ep : Eq;
            if (k == 1 && i == 1) return E[5];
            if (k == 1 && i == 2) return E[6];
            if (k == 2 && i == 1) return E[7];
            return E[8];
        };
        for (int k = 1; k <= 2; ++k) {
            double r = sder(2, k, 1) - sder(1, k, 2);
            for (int l = 1; l <= 2; ++l)
                r += gam(k, 2, l) * sval(l, 1) - gam(k, 1, l) * sval(l, 2);
            (k == 1 ? out.cov1 : out.cov2) = r;
        }
    }
    return out;
}

// --- middle surface ----------------------------------------------------------

inline SurfacePatch middle_surface(const ParallelPair& pp) {
    SurfacePatch mid;
    mid.id = pp.A.id + "+" + pp.B.id + ":middle";
    const double mp = 2.5 * pp.fd_step, mq = 2.5 * pp.fd_step;
    mid.domain = pp.method == ChartMethod::Identity ? pp.chart
                                                    : shrink(pp.chart, mp, mq);
    auto ppc = std::make_shared<ParallelPair>(pp);
    auto cache =
        std::make_shared<std::map<std::pair<double, double>, Jet2Vec3>>();
    mid.immersion = [ppc, cache](double p, double q) {
        const auto key = std::make_pair(p, q);
        const auto it = cache->find(key);
        if (it != cache->end()) return it->second;
        const Jet2Vec3 r = pair_point(*ppc, p, q).rM;
        if (cache->size() > 20000) cache->clear();
        (*cache)[key] = r;
        return r;
    };
    // Orientation chosen so the computed unit normal equals the shared one.
    const double pc = 0.5 * (mid.domain.p_min + mid.domain.p_max);
    const double qc = 0.5 * (mid.domain.q_min + mid.domain.q_max);
    const PairPoint pt = pair_point(pp, pc, qc);
    using namespace detail;
    const Vec3 w = cross(dp_of(pt.rM), dq_of(pt.rM));
    mid.orientation = dot(w, pt.n) >= 0.0 ? +1.0 : -1.0;
    if (pp.method == ChartMethod::Sphere) {
        mid.inverse_gauss = [](const Vec3& N) {
            return std::pair<double, double>{std::atan2(N.y, N.x), std::asin(N.z)};
        };
    } else if (pp.A.inverse_gauss) {
        mid.inverse_gauss = pp.A.inverse_gauss;
    }
    return mid;
}

struct MiddleReport {
    double max_K_residual = 0;  // jet K against -4 kappa^2 xi / (1 + xi)^2
    int n_checked = 0;
    std::vector<std::pair<double, double>> cusp_points;  // |1 + xi| below eps
};

inline MiddleReport middle_report(const ParallelPair& pp, const SurfacePatch& mid,
                                  double kappa,
                                  const std::vector<std::pair<double, double>>& pts,
                                  double eps_cusp = 1e-4) {
    MiddleReport rep;
    for (const auto& [p, q] : pts) {
        const MappingTensor t = mapping_tensor(pp, p, q);
        if (std::fabs(1.0 + t.xi) <= eps_cusp) {
            rep.cusp_points.push_back({p, q});
            continue;
        }
        const Jet2Vec3 r = surface_jet(mid, p, q);
        const NormalJet nj = unit_normal_jet(mid, p, q);
        using namespace detail;
        const Vec3 rp = dp_of(r), rq = dq_of(r);
        const double E = dot(rp, rp), F = dot(rp, rq), G = dot(rq, rq);
        const double L = dot(dpp_of(r), nj.n), M = dot(dpq_of(r), nj.n),
                     N = dot(dqq_of(r), nj.n);
        const double K = (L * N - M * M) / (E * G - F * F);
        const double expect =
            -4.0 * kappa * kappa * t.xi / ((1.0 + t.xi) * (1.0 + t.xi));
        rep.max_K_residual = std::max(rep.max_K_residual, std::fabs(K - expect));
        ++rep.n_checked;
    }
    return rep;
}

// --- nets on the middle surface ------------------------------------------------

// A curve net: a base patch with a jet-valued direction pair and the usable
// chart; `fast` gives component values and the two first-form norms without
// forming jets, for flows.
struct NetOnSurface {
    SurfacePatch base;
    DirectionPair pair;
    int eps1 = +1, eps2 = -1;
    double kappa = 1.0;       // |curvature| of the associated pair
    double kappa_cond = 1.0;  // signed value with K + kappa_cond sigma = 0
    Rect chart;
    std::function<std::array<double, 6>(double, double)> fast;
};

inline NetOnSurface make_net(const SurfacePatch& patch, const DirectionPair& pair,
                             double kappa = 1.0) {
    NetOnSurface net;
    net.base = patch;
    net.pair = pair;
    net.kappa = kappa;
    net.kappa_cond = kappa;
    net.chart = patch.domain;
    const SurfacePatch pc = patch;
    const DirectionPair prc = pair;
    net.fast = [pc, prc](double p, double q) {
        const Jet2Vec3 r = surface_jet(pc, p, q);
        using namespace detail;
        const Vec3 rp = dp_of(r), rq = dq_of(r);
        const double g11 = dot(rp, rp), g12 = dot(rp, rq), g22 = dot(rq, rq);
        const double a1 = prc.a1(p, q).value, b1 = prc.b1(p, q).value;
        const double a2 = prc.a2(p, q).value, b2 = prc.b2(p, q).value;
        return std::array<double, 6>{a1, b1, a2, b2, quad(g11, g12, g22, a1, b1),
                                     quad(g11, g12, g22, a2, b2)};
    };
    return net;
}

namespace detail {

// Coarse reference field of oriented directions, used for pointwise branch
// selection by nearest-node continuity.
struct NetRef {
    Rect rect;
    int n = 0;
    std::vector<std::array<double, 4>> dir;  // u (2), w (2)
    std::vector<char> ok;

    const std::array<double, 4>& nearest(double p, double q) const {
        const int i = std::clamp(
            static_cast<int>(std::lround((p - rect.p_min) / (rect.p_max - rect.p_min) *
                                         (n - 1))),
            0, n - 1);
        const int j = std::clamp(
            static_cast<int>(std::lround((q - rect.q_min) / (rect.q_max - rect.q_min) *
                                         (n - 1))),
            0, n - 1);
        for (int rad = 0; rad < 3; ++rad) {
            for (int dj = -rad; dj <= rad; ++dj) {
                for (int di = -rad; di <= rad; ++di) {
                    const int a = i + di, b = j + dj;
                    if (a < 0 || a >= n || b < 0 || b >= n) continue;
                    if (ok[static_cast<size_t>(b) * n + a])
                        return dir[static_cast<size_t>(b) * n + a];
                }
            }
        }
        throw GenericityViolation("net reference field empty near query point");
    }
};

inline Dir2 match_dir(const std::array<Dir2, 2>& cand, double ra, double rb) {
    const double d0 = cand[0].a * ra + cand[0].b * rb;
    const double d1 = cand[1].a * ra + cand[1].b * rb;
    Dir2 v = std::fabs(d0) >= std::fabs(d1) ? cand[0] : cand[1];
    const double d = std::fabs(d0) >= std::fabs(d1) ? d0 : d1;
    if (d < 0.0) {
        v.a = -v.a;
        v.b = -v.b;
    }
    return v;
}

struct NetEvalCtx {
    ParallelPair pp;
    NetRef ref;
    double comp_step = 0.01;
    std::map<std::pair<double, double>, std::array<double, 6>> val_cache;
    std::map<std::pair<double, double>, std::array<Jet2, 4>> jet_cache;
};

inline std::array<double, 6> net_values(NetEvalCtx& ctx, double p, double q) {
    const auto key = std::make_pair(p, q);
    const auto it = ctx.val_cache.find(key);
    if (it != ctx.val_cache.end()) return it->second;
    const PairPoint pt = pair_point(ctx.pp, p, q);
    const Forms2 fA = forms_in_chart(pt.rA, pt.n);
    const Forms2 fB = forms_in_chart(pt.rB, pt.n);
    const Forms2 fM = forms_in_chart(pt.rM, pt.n);
    const auto dA = null_directions(fA.II11, fA.II12, fA.II22);
    const auto dB = null_directions(fB.II11, fB.II12, fB.II22);
    const auto& rd = ctx.ref.nearest(p, q);
    const Dir2 u = match_dir(dA, rd[0], rd[1]);
    const Dir2 w = match_dir(dB, rd[2], rd[3]);
    // Components normalized to unit first-form length on the middle surface,
    // so the pair is in the gauge where Chebyshev residuals vanish.
    const double nu = std::sqrt(quad(fM.I11, fM.I12, fM.I22, u.a, u.b));
    const double nw = std::sqrt(quad(fM.I11, fM.I12, fM.I22, w.a, w.b));
    if (!(nu > 0.0) || !(nw > 0.0))
        throw DegeneratePair("net direction collapses on the middle surface");
    const std::array<double, 6> out{u.a / nu, u.b / nu, w.a / nw,
                                    w.b / nw, 1.0,      1.0};
    if (ctx.val_cache.size() > 60000) ctx.val_cache.clear();
    ctx.val_cache[key] = out;
    return out;
}

inline std::array<Jet2, 4> net_jets(NetEvalCtx& ctx, double p, double q) {
    const auto key = std::make_pair(p, q);
    const auto it = ctx.jet_cache.find(key);
    if (it != ctx.jet_cache.end()) return it->second;
    const auto v0 = net_values(ctx, p, q);
    const double h = ctx.comp_step;
    auto diff = [&](bool ap, double hh) {
        const auto m = ap ? net_values(ctx, p - hh, q) : net_values(ctx, p, q - hh);
        const auto pl = ap ? net_values(ctx, p + hh, q) : net_values(ctx, p, q + hh);
        std::array<double, 4> d;
        for (int k = 0; k < 4; ++k) d[k] = (pl[k] - m[k]) / (2.0 * hh);
        return d;
    };
    auto rich = [&](bool ap) {
        const auto a = diff(ap, h);
        const auto b = diff(ap, 0.5 * h);
        std::array<double, 4> d;
        for (int k = 0; k < 4; ++k) d[k] = (4.0 * b[k] - a[k]) / 3.0;
        return d;
    };
    const auto dp = rich(true), dq = rich(false);
    std::array<Jet2, 4> out;
    for (int k = 0; k < 4; ++k)
        out[k] = Jet2(v0[k], dp[k], dq[k], 0.0, 0.0, 0.0);
    if (ctx.jet_cache.size() > 20000) ctx.jet_cache.clear();
    ctx.jet_cache[key] = out;
    return out;
}

}  // namespace detail

// The two transversal nets on the middle surface whose families follow the
// asymptotic directions of A (first family) and of B (second family).  The
// two possible mixed pairings give the two nets; equal signs would pair the
// branches so that the mixed torsion vanishes, which is refused.
inline std::pair<NetOnSurface, NetOnSurface> concordant_nets(
    const ParallelPair& pp, double kappa = 0.0, int eps1 = +1, int eps2 = -1,
    int ref_n = 41, double comp_step = 0.005) {
    using namespace detail;
    if (eps1 == eps2)
        throw DegenerateSigns("equal asymptotic signs give a vanishing mixed torsion");

    const SurfacePatch mid = middle_surface(pp);
    const Rect chart = pp.method == ChartMethod::Identity
                           ? mid.domain
                           : shrink(mid.domain, 2.5 * comp_step, 2.5 * comp_step);

    // Coarse fields of the four branch directions, made globally consistent
    // by breadth-first continuation from the chart center.
    const int n = ref_n;
    std::vector<std::array<double, 8>> raw(static_cast<size_t>(n) * n);
    std::vector<char> ok(static_cast<size_t>(n) * n, 0), seen(raw.size(), 0);
    auto node_pq = [&](int i, int j) {
        return std::pair<double, double>{
            chart.p_min + (chart.p_max - chart.p_min) * i / (n - 1),
            chart.q_min + (chart.q_max - chart.q_min) * j / (n - 1)};
    };
    auto dirs_at = [&](int i, int j, std::array<Dir2, 2>& dA, std::array<Dir2, 2>& dB) {
        const auto [p, q] = node_pq(i, j);
        const PairPoint pt = pair_point(pp, p, q);
        const Forms2 fA = forms_in_chart(pt.rA, pt.n);
        const Forms2 fB = forms_in_chart(pt.rB, pt.n);
        dA = null_directions(fA.II11, fA.II12, fA.II22);
        dB = null_directions(fB.II11, fB.II12, fB.II22);
    };
    const int ci = n / 2, cj = n / 2;
    {
        std::array<Dir2, 2> dA, dB;
        dirs_at(ci, cj, dA, dB);
        raw[static_cast<size_t>(cj) * n + ci] = {dA[0].a, dA[0].b, dA[1].a, dA[1].b,
                                                 dB[0].a, dB[0].b, dB[1].a, dB[1].b};
        ok[static_cast<size_t>(cj) * n + ci] = 1;
        seen[static_cast<size_t>(cj) * n + ci] = 1;
    }
    std::queue<std::pair<int, int>> bfs;
    bfs.push({ci, cj});
    while (!bfs.empty()) {
        const auto [i, j] = bfs.front();
        bfs.pop();
        const auto& par = raw[static_cast<size_t>(j) * n + i];
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int a = i + di[k], b = j + dj[k];
            if (a < 0 || a >= n || b < 0 || b >= n) continue;
            const size_t id = static_cast<size_t>(b) * n + a;
            if (seen[id]) continue;
            seen[id] = 1;
            try {
                std::array<Dir2, 2> dA, dB;
                dirs_at(a, b, dA, dB);
                const Dir2 A0 = match_dir(dA, par[0], par[1]);
                const Dir2 A1 = match_dir(dA, par[2], par[3]);
                const Dir2 B0 = match_dir(dB, par[4], par[5]);
                const Dir2 B1 = match_dir(dB, par[6], par[7]);
                raw[id] = {A0.a, A0.b, A1.a, A1.b, B0.a, B0.b, B1.a, B1.b};
                ok[id] = 1;
                bfs.push({a, b});
            } catch (const Error&) {
                // hole in the field (cusp or degenerate point); skip
            }
        }
    }

    // Pairing at the center by the mixed torsion of the middle surface.
    const auto [pc, qc] = node_pq(ci, cj);
    const PairPoint ptc = pair_point(pp, pc, qc);
    const Forms2 fMc = forms_in_chart(ptc.rM, ptc.n);
    const auto& rc = raw[static_cast<size_t>(cj) * n + ci];
    auto sigma_for = [&](double ua, double ub, double wa, double wb) {
        using namespace detail;
        const double I11 = quad(fMc.I11, fMc.I12, fMc.I22, ua, ub);
        const double I12 = bilin(fMc.I11, fMc.I12, fMc.I22, ua, ub, wa, wb);
        const double I22 = quad(fMc.I11, fMc.I12, fMc.I22, wa, wb);
        const double det = I11 * I22 - I12 * I12;
        if (det <= 0.0) throw DegeneratePair("net directions collapse at center");
        return bilin(fMc.II11, fMc.II12, fMc.II22, ua, ub, wa, wb) / std::sqrt(det);
    };
    const double s00 = sigma_for(rc[0], rc[1], rc[4], rc[5]);
    const double s01 = sigma_for(rc[0], rc[1], rc[6], rc[7]);
    const int mixed = std::fabs(s01) > std::fabs(s00) ? 1 : 0;

    const double Kc = (fMc.II11 * fMc.II22 - fMc.II12 * fMc.II12) /
                      (fMc.I11 * fMc.I22 - fMc.I12 * fMc.I12);

    auto build = [&](int ai, int bi, int e1, int e2, int want_sign) {
        NetOnSurface net;
        net.base = mid;
        net.chart = chart;
        net.eps1 = e1;
        net.eps2 = e2;
        auto ctx = std::make_shared<NetEvalCtx>();
        ctx->pp = pp;
        ctx->comp_step = comp_step;
        ctx->ref.rect = chart;
        ctx->ref.n = n;
        ctx->ref.ok = ok;
        ctx->ref.dir.resize(raw.size());
        for (size_t t = 0; t < raw.size(); ++t)
            ctx->ref.dir[t] = {raw[t][2 * ai], raw[t][2 * ai + 1], raw[t][4 + 2 * bi],
                               raw[t][4 + 2 * bi + 1]};
        // Keep the frame (X1, X2, normal) right handed; a family swap keeps
        // the mixed torsion and hence the concordance coefficient unchanged.
        const Vec3 rp = dp_of(ptc.rM), rq = dq_of(ptc.rM);
        const Vec3 x1 = rc[2 * ai] * rp + rc[2 * ai + 1] * rq;
        const Vec3 x2 = rc[4 + 2 * bi] * rp + rc[4 + 2 * bi + 1] * rq;
        const bool swap_fams = dot(cross(x1, x2), ptc.n) < 0.0;
        const double sc = sigma_for(rc[2 * ai], rc[2 * ai + 1], rc[4 + 2 * bi],
                                    rc[4 + 2 * bi + 1]);
        double kc = -Kc / sc;
        // The concordance sign is a convention tied to the direction signs.
        // Rotating the frame, (X1, X2) -> (-X2, X1), flips the mixed torsion
        // while staying right handed, so the requested sign can always be met.
        const bool flip = want_sign * kc < 0.0;
        if (flip) kc = -kc;
        auto index = [swap_fams, flip](int k, double& sgn) {
            sgn = 1.0;
            if (flip) {
                if (k < 2) {
                    k += 2;
                    sgn = -1.0;
                } else {
                    k -= 2;
                }
            }
            return swap_fams ? (k + 2) % 4 : k;
        };
        auto comp = [ctx, index](int k) {
            double sgn;
            const int kk = index(k, sgn);
            return DirectionPair::Component([ctx, kk, sgn](double p, double q) {
                return sgn * detail::net_jets(*ctx, p, q)[kk];
            });
        };
        net.pair = {comp(0), comp(1), comp(2), comp(3)};
        net.fast = [ctx, index](double p, double q) {
            const auto v = detail::net_values(*ctx, p, q);
            double s0, s1, s2, s3;
            const int k0 = index(0, s0), k1 = index(1, s1);
            const int k2 = index(2, s2), k3 = index(3, s3);
            return std::array<double, 6>{s0 * v[k0], s1 * v[k1], s2 * v[k2],
                                         s3 * v[k3], v[4],       v[5]};
        };
        net.kappa = kappa > 0.0 ? kappa : std::fabs(kc);
        net.kappa_cond = std::copysign(net.kappa, kc);
        return net;
    };

    // First net: branch A0 with its mixed partner; second net: the other pair.
    // The two transversal nets are concordant with opposite coefficients; pin
    // the first to the positive one.
    NetOnSurface n1 = build(0, mixed, eps1, eps2, +1);
    NetOnSurface n2 = build(1, 1 - mixed, -eps1, -eps2, -1);
    return {n1, n2};
}

// --- flows, tracing, grids -----------------------------------------------------

namespace detail {

inline std::pair<double, double> unit_dir(const NetOnSurface& net, int family,
                                          double p, double q) {
    double a, b, I;
    if (net.fast) {
        const auto c = net.fast(p, q);
        a = family == 1 ? c[0] : c[2];
        b = family == 1 ? c[1] : c[3];
        I = family == 1 ? c[4] : c[5];
    } else {
        const Jet2Vec3 r = surface_jet(net.base, p, q);
        const Vec3 rp = dp_of(r), rq = dq_of(r);
        const double g11 = dot(rp, rp), g12 = dot(rp, rq), g22 = dot(rq, rq);
        a = (family == 1 ? net.pair.a1 : net.pair.a2)(p, q).value;
        b = (family == 1 ? net.pair.b1 : net.pair.b2)(p, q).value;
        I = quad(g11, g12, g22, a, b);
    }
    if (!(I > 0.0)) throw SingularNet("net flow: first form not positive");
    const double s = 1.0 / std::sqrt(I);
    return {a * s, b * s};
}

// One RK4 step of the unit flow in chart coordinates; h may be negative.
inline void rk4_step(const NetOnSurface& net, int family, double& p, double& q,
                     double h) {
    const double slack = 1e-9 * (1.0 + net.chart.diameter());
    auto f = [&](double a, double b) {
        if (!net.chart.contains(a, b, slack))
            throw LeftDomain("net flow left the chart");
        return unit_dir(net, family, a, b);
    };
    const auto k1 = f(p, q);
    const auto k2 = f(p + 0.5 * h * k1.first, q + 0.5 * h * k1.second);
    const auto k3 = f(p + 0.5 * h * k2.first, q + 0.5 * h * k2.second);
    const auto k4 = f(p + h * k3.first, q + h * k3.second);
    p += h / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
    q += h / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
    if (!net.chart.contains(p, q, slack))
        throw LeftDomain("net flow left the chart");
}

inline void flow(const NetOnSurface& net, int family, double& p, double& q,
                 double arc, double step) {
    const int ns = std::max(1, static_cast<int>(std::ceil(std::fabs(arc) / step)));
    const double h = arc / ns;
    for (int i = 0; i < ns; ++i) rk4_step(net, family, p, q, h);
}

}  // namespace detail

struct TraceCurve {
    int family = 1;
    bool truncated = false;  // stopped at the chart boundary
    std::vector<double> s;
    std::vector<std::pair<double, double>> param;
    std::vector<Vec3> r;
};

inline std::vector<TraceCurve> trace_net(
    const NetOnSurface& net, const std::vector<std::pair<double, double>>& seeds,
    double step, int n_steps) {
    if (seeds.empty()) throw BadParams("trace_net: no seeds");
    std::vector<TraceCurve> out;
    for (const auto& seed : seeds) {
        for (int family = 1; family <= 2; ++family) {
            TraceCurve c;
            c.family = family;
            double p = seed.first, q = seed.second;
            c.s.push_back(0.0);
            c.param.push_back({p, q});
            c.r.push_back(detail::value_of(surface_jet(net.base, p, q)));
            for (int i = 1; i <= n_steps; ++i) {
                try {
                    detail::rk4_step(net, family, p, q, step);
                } catch (const Error&) {
                    // Left the chart or hit a degeneracy: stop this branch.
                    c.truncated = true;
                    break;
                }
                c.s.push_back(i * step);
                c.param.push_back({p, q});
                c.r.push_back(detail::value_of(surface_jet(net.base, p, q)));
            }
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Closure defect of the curvilinear quadrilateral spanned by flowing the two
// unit fields in either order; for a Chebyshev net the quadrilateral closes,
// which is equivalent to equality of opposite side lengths.
inline double parallelogram_defect(const NetOnSurface& net, double p0, double q0,
                                   double s_span, double t_span, double step) {
    double p1 = p0, q1 = q0;
    detail::flow(net, 1, p1, q1, s_span, step);
    detail::flow(net, 2, p1, q1, t_span, step);
    double p2 = p0, q2 = q0;
    detail::flow(net, 2, p2, q2, t_span, step);
    detail::flow(net, 1, p2, q2, s_span, step);
    const Vec3 r1 = detail::value_of(surface_jet(net.base, p1, q1));
    const Vec3 r2 = detail::value_of(surface_jet(net.base, p2, q2));
    return norm(r1 - r2);
}

struct GridOptions {
    int substeps = 4;
    double comm_tol = 1e-6;  // ambient commutation defect per sampled cell
    int comm_samples = 3;
};

// Lay out an (nx x ny) grid of net coordinates starting at the base point:
// flow the first family along row 0, then the second family up each column.
inline ChebyshevGrid chebyshev_grid(const NetOnSurface& net, double p0, double q0,
                                    int nx, int ny, double step,
                                    const GridOptions& opt = {}) {
    if (nx < 2 || ny < 2) throw BadParams("chebyshev_grid: need nx, ny >= 2");
    ChebyshevGrid g;
    g.nx = nx;
    g.ny = ny;
    g.x0 = 0.0;
    g.y0 = 0.0;
    g.step = step;
    const int nn = nx * ny;
    g.r.assign(nn, Vec3{});
    g.normal.assign(nn, Vec3{});
    g.omega.assign(nn, 0.0);
    g.h11.assign(nn, 0.0);
    g.h12.assign(nn, 0.0);
    g.h22.assign(nn, 0.0);
    g.mask.assign(nn, 0);
    g.param.assign(nn, {0.0, 0.0});
    g.rx.assign(nn, Vec3{});
    g.ry.assign(nn, Vec3{});

    const double h = step / opt.substeps;
    {
        double p = p0, q = q0;
        g.param[g.idx(0, 0)] = {p, q};
        for (int i = 1; i < nx; ++i) {
            for (int s = 0; s < opt.substeps; ++s) detail::rk4_step(net, 1, p, q, h);
            g.param[g.idx(i, 0)] = {p, q};
        }
    }
    for (int i = 0; i < nx; ++i) {
        auto [p, q] = g.param[g.idx(i, 0)];
        for (int j = 1; j < ny; ++j) {
            for (int s = 0; s < opt.substeps; ++s) detail::rk4_step(net, 2, p, q, h);
            g.param[g.idx(i, j)] = {p, q};
        }
    }

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const auto [p, q] = g.param[g.idx(i, j)];
            try {
                const FundamentalData f = fundamental_data(net.base, p, q, net.pair);
                const InvariantRecord rec = invariant_record_from(f);
                const int id = g.idx(i, j);
                g.r[id] = detail::value_of(surface_jet(net.base, p, q));
                g.normal[id] = f.n;
                g.omega[id] = rec.omega;
                g.h11[id] = rec.kn1 / rec.sin_omega;
                g.h12[id] = rec.sigma;
                g.h22[id] = rec.kn2 / rec.sin_omega;
                g.rx[id] = (1.0 / std::sqrt(f.I11)) * detail::value_of(f.X1r);
                g.ry[id] = (1.0 / std::sqrt(f.I22)) * detail::value_of(f.X2r);
                g.mask[id] = 1;
            } catch (const Error&) {
                g.mask[g.idx(i, j)] = 0;
            }
        }
    }

    // Commutation of the two unit flows over sampled cells.
    for (int s = 0; s < opt.comm_samples; ++s) {
        const int i = 1 + s * std::max(1, (nx - 3) / std::max(1, opt.comm_samples));
        const int j = 1 + s * std::max(1, (ny - 3) / std::max(1, opt.comm_samples));
        if (i + 1 >= nx || j + 1 >= ny) continue;
        if (!g.mask[g.idx(i, j)] || !g.mask[g.idx(i + 1, j + 1)]) continue;
        auto [p, q] = g.param[g.idx(i, j)];
        try {
            for (int t = 0; t < opt.substeps; ++t) detail::rk4_step(net, 2, p, q, h);
            for (int t = 0; t < opt.substeps; ++t) detail::rk4_step(net, 1, p, q, h);
        } catch (const LeftDomain&) {
            continue;
        }
        const Vec3 alt = detail::value_of(surface_jet(net.base, p, q));
        const double defect = norm(alt - g.r[g.idx(i + 1, j + 1)]);
        if (defect > opt.comm_tol)
            throw CommutationDefect("unit flows do not commute: defect " +
                                    std::to_string(defect));
    }
    return g;
}

// --- vector potential of the closed tangential form ---------------------------

// P = (h12 - kappa) r_x - h11 r_y, Q = h22 r_x + (kappa - h12) r_y; on a
// net with K = -kappa h12 the form P dx + Q dy is closed and m is its
// potential.  Loop residuals use Simpson quadrature over 2x2 blocks.
struct PotentialField {
    std::vector<Vec3> m, P, Q;
    std::vector<double> loop;  // per 2x2 block corner (even i, j); NaN invalid
    double max_loop = 0, max_loop_per_area = 0;
    double block = 0;  // block side length (2 step)
};

inline PotentialField vector_potential(const ChebyshevGrid& g, double kappa,
                                       double fail_per_area = 0.0) {
    if (g.nx < 3 || g.ny < 3)
        throw StencilOutOfDomain("vector_potential: grid too small");
    const int nn = g.nx * g.ny;
    PotentialField out;
    out.block = 2.0 * g.step;
    out.P.assign(nn, Vec3{});
    out.Q.assign(nn, Vec3{});
    out.m.assign(nn, Vec3{std::nan(""), std::nan(""), std::nan("")});
    const bool have_t = !g.rx.empty();
    std::vector<char> pk(nn, 0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int id = g.idx(i, j);
            if (!g.valid(i, j)) continue;
            Vec3 rx, ry;
            if (have_t) {
                rx = g.rx[id];
                ry = g.ry[id];
            } else {
                if (i == 0 || i + 1 >= g.nx || j == 0 || j + 1 >= g.ny) continue;
                if (!g.valid(i - 1, j) || !g.valid(i + 1, j) || !g.valid(i, j - 1) ||
                    !g.valid(i, j + 1))
                    continue;
                rx = (g.r[g.idx(i + 1, j)] - g.r[g.idx(i - 1, j)]) / (2.0 * g.step);
                ry = (g.r[g.idx(i, j + 1)] - g.r[g.idx(i, j - 1)]) / (2.0 * g.step);
            }
            out.P[id] = (g.h12[id] - kappa) * rx - g.h11[id] * ry;
            out.Q[id] = g.h22[id] * rx + (kappa - g.h12[id]) * ry;
            pk[id] = 1;
        }
    }

    // Integrate m from the base node along row 0, then columns.  Trapezoid
    // with an endpoint-slope correction (fourth order); the slopes come from
    // neighboring nodes and degrade gracefully at the ends of a run.
    auto slope = [&](const std::vector<Vec3>& F, auto node, int t, int tmax) {
        const int tm = (t > 0 && pk[node(t - 1)]) ? t - 1 : t;
        const int tp = (t + 1 < tmax && pk[node(t + 1)]) ? t + 1 : t;
        if (tm == tp) return Vec3{};
        return (F[node(tp)] - F[node(tm)]) / ((tp - tm) * g.step);
    };
    auto run = [&](const std::vector<Vec3>& F, auto node, int tmax) {
        for (int t = 1; t < tmax; ++t) {
            const int a = node(t - 1), b = node(t);
            if (!(pk[a] && pk[b] && std::isfinite(out.m[a].x))) continue;
            const Vec3 da = slope(F, node, t - 1, tmax), db = slope(F, node, t, tmax);
            out.m[b] = out.m[a] + 0.5 * g.step * (F[a] + F[b]) -
                       g.step * g.step / 12.0 * (db - da);
        }
    };
    if (pk[g.idx(0, 0)]) out.m[g.idx(0, 0)] = {0.0, 0.0, 0.0};
    run(out.P, [&](int t) { return g.idx(t, 0); }, g.nx);
    for (int i = 0; i < g.nx; ++i)
        run(out.Q, [&](int t) { return g.idx(i, t); }, g.ny);

    out.loop.assign(nn, std::nan(""));
    const double area = out.block * out.block;
    for (int j = 0; j + 2 < g.ny; j += 2) {
        for (int i = 0; i + 2 < g.nx; i += 2) {
            bool all = true;
            for (int dj = 0; dj <= 2 && all; ++dj)
                for (int di = 0; di <= 2 && all; ++di) all = pk[g.idx(i + di, j + dj)];
            if (!all) continue;
            auto simpson = [&](const std::vector<Vec3>& F, int a0, int a1, int a2) {
                return g.step / 3.0 * (F[a0] + 4.0 * F[a1] + F[a2]);
            };
            const Vec3 circ =
                simpson(out.P, g.idx(i, j), g.idx(i + 1, j), g.idx(i + 2, j)) +
                simpson(out.Q, g.idx(i + 2, j), g.idx(i + 2, j + 1), g.idx(i + 2, j + 2)) -
                simpson(out.P, g.idx(i, j + 2), g.idx(i + 1, j + 2), g.idx(i + 2, j + 2)) -
                simpson(out.Q, g.idx(i, j), g.idx(i, j + 1), g.idx(i, j + 2));
            const double l = norm(circ);
            out.loop[g.idx(i, j)] = l;
            out.max_loop = std::max(out.max_loop, l);
            out.max_loop_per_area = std::max(out.max_loop_per_area, l / area);
        }
    }
    if (fail_per_area > 0.0 && out.max_loop_per_area > fail_per_area)
        throw ClosednessViolation("tangential form not closed: loop/area " +
                                  std::to_string(out.max_loop_per_area));
    return out;
}

// --- associated pair -----------------------------------------------------------

struct AssociatedPair {
    std::vector<Vec3> r_plus, r_minus;
    std::vector<unsigned char> mask;  // nodes where both offsets are defined
    struct Report {
        double max_K = 0;        // |K(r+-) + kappa^2|
        double max_tangency = 0;  // |n . dr+-|
        double max_II_diag = 0;   // |II+_11|, |II-_22|
        double max_detI = 0;      // |det I+- - (sigma/kappa)^2 sin^2 omega|
        double max_H = 0;         // mean curvature against the h-field forms
        int n_checked = 0;
    } report;
};

inline AssociatedPair associated_surfaces(const ChebyshevGrid& g,
                                          const PotentialField& pot, double kappa,
                                          double eps_sing = kEpsSing,
                                          double edge_margin = 0.1) {
    if (g.nx < 3 || g.ny < 3)
        throw StencilOutOfDomain("associated_surfaces: grid too small");
    const int nn = g.nx * g.ny;
    AssociatedPair out;
    out.r_plus.assign(nn, Vec3{});
    out.r_minus.assign(nn, Vec3{});
    out.mask.assign(nn, 0);
    for (int id = 0; id < nn; ++id) {
        if ((g.mask.empty() || g.mask[id]) && std::isfinite(pot.m[id].x)) {
            out.r_plus[id] = g.r[id] + pot.m[id] / kappa;
            out.r_minus[id] = g.r[id] - pot.m[id] / kappa;
            out.mask[id] = 1;
        }
    }

    const double h = g.step;
    // Fourth-order stencils: Richardson over the 1h / 2h central formulas.
    auto der = [&](const std::vector<Vec3>& F, int i, int j, Vec3& fx, Vec3& fy,
                   Vec3& fxx, Vec3& fxy, Vec3& fyy) {
        auto at = [&](int a, int b) { return F[g.idx(a, b)]; };
        auto r1 = [&](const Vec3& m2, const Vec3& m1, const Vec3& p1, const Vec3& p2) {
            return (4.0 * ((p1 - m1) / (2.0 * h)) - (p2 - m2) / (4.0 * h)) / 3.0;
        };
        auto r2 = [&](const Vec3& m2, const Vec3& m1, const Vec3& c, const Vec3& p1,
                      const Vec3& p2) {
            return (4.0 * ((p1 - 2.0 * c + m1) / (h * h)) -
                    (p2 - 2.0 * c + m2) / (4.0 * h * h)) /
                   3.0;
        };
        fx = r1(at(i - 2, j), at(i - 1, j), at(i + 1, j), at(i + 2, j));
        fy = r1(at(i, j - 2), at(i, j - 1), at(i, j + 1), at(i, j + 2));
        fxx = r2(at(i - 2, j), at(i - 1, j), at(i, j), at(i + 1, j), at(i + 2, j));
        fyy = r2(at(i, j - 2), at(i, j - 1), at(i, j), at(i, j + 1), at(i, j + 2));
        auto crossd = [&](int d) {
            return (at(i + d, j + d) - at(i + d, j - d) - at(i - d, j + d) +
                    at(i - d, j - d)) /
                   (4.0 * d * d * h * h);
        };
        fxy = (4.0 * crossd(1) - crossd(2)) / 3.0;
    };

    // Collect residuals a fixed arc distance from the boundary so that grids
    // of different resolution report on the same region.
    const int mg = std::max(2, (int)std::lround(edge_margin / g.step));
    for (int j = mg; j + mg < g.ny; ++j) {
        for (int i = mg; i + mg < g.nx; ++i) {
            bool all = true;
            for (int dj = -2; dj <= 2 && all; ++dj)
                for (int di = -2; di <= 2 && all; ++di)
                    all = out.mask[g.idx(i + di, j + dj)];
            if (!all) continue;
            const int id = g.idx(i, j);
            const double om = g.omega[id], so = std::sin(om), co = std::cos(om);
            const double s = g.h12[id];
            if (so <= eps_sing || std::fabs(s) <= eps_sing) continue;
            const Vec3 n = g.normal[id];
            const double target_detI = (s / kappa) * (s / kappa) * so * so;
            for (int side = 0; side < 2; ++side) {
                Vec3 fx, fy, fxx, fxy, fyy;
                der(side == 0 ? out.r_plus : out.r_minus, i, j, fx, fy, fxx, fxy, fyy);
                const double E = dot(fx, fx), F = dot(fx, fy), G = dot(fy, fy);
                const double L = dot(fxx, n), M = dot(fxy, n), N = dot(fyy, n);
                const double det = E * G - F * F;
                auto& rep = out.report;
                rep.max_tangency =
                    std::max({rep.max_tangency, std::fabs(dot(n, fx)),
                              std::fabs(dot(n, fy))});
                rep.max_detI = std::max(rep.max_detI, std::fabs(det - target_detI));
                if (det > 1e-12) {
                    const double K = (L * N - M * M) / det;
                    rep.max_K = std::max(rep.max_K, std::fabs(K + kappa * kappa));
                    const double H = (E * N - 2.0 * F * M + G * L) / (2.0 * det);
                    const double hd = side == 0 ? g.h11[id] : g.h22[id];
                    const double Hab = kappa * (hd - s * co) / (s * so);
                    rep.max_H = std::max(rep.max_H, std::fabs(H - Hab));
                }
                rep.max_II_diag = std::max(rep.max_II_diag,
                                           side == 0 ? std::fabs(L) : std::fabs(N));
            }
            ++out.report.n_checked;
        }
    }
    if (out.report.n_checked == 0)
        throw MaskedRegion("associated_surfaces: no usable interior nodes");
    return out;
}

// --- asymptotic analysis of the associated pair --------------------------------

struct AsymptoticReport {
    std::vector<double> xi_plus, eta_minus;  // asymptotic coordinates, per node
    std::vector<double> phi_plus, phi_minus;
    double max_compat = 0;     // cross-derivative defect of the gradients
    double max_sg = 0;         // sine-Gordon residual, both surfaces
    double max_unit = 0;       // | |D n| - kappa | over the four fields
    double max_psi = 0;        // angle of the normal images against pi + omega
    double max_lelieuvre = 0;
    int n_checked = 0;
};

inline AsymptoticReport asymptotic_analysis(const ChebyshevGrid& g,
                                            const PotentialField& pot, double kappa,
                                            double compat_tol = 1e-3,
                                            double eps_sing = kEpsSing,
                                            double edge_margin = 0.1) {
    if (g.nx < 5 || g.ny < 5)
        throw StencilOutOfDomain("asymptotic_analysis: grid too small");
    constexpr double pi_c = 3.14159265358979323846;
    const int nn = g.nx * g.ny;
    const double h = g.step;
    const double ak = std::fabs(kappa);

    AsymptoticReport rep;
    rep.xi_plus.assign(nn, std::nan(""));
    rep.eta_minus.assign(nn, std::nan(""));
    rep.phi_plus.assign(nn, std::nan(""));
    rep.phi_minus.assign(nn, std::nan(""));

    // Node validity and the closed-form gradients of the asymptotic charts.
    std::vector<char> ok(nn, 0);
    std::vector<double> gxp(nn), gyp(nn), hxm(nn), hym(nn), cxp(nn), cym(nn);
    std::vector<double> rat_p(nn), rat_m(nn);
    std::vector<Vec3> rp(nn), rm(nn);
    for (int id = 0; id < nn; ++id) {
        if (!(g.mask.empty() || g.mask[id]) || !std::isfinite(pot.m[id].x)) continue;
        const double om = g.omega[id], so = std::sin(om), co = std::cos(om);
        const double s = g.h12[id], h11 = g.h11[id], h22 = g.h22[id];
        if (so <= eps_sing || std::fabs(s) <= eps_sing) continue;
        const double w1 = h11 * h11 - 2.0 * h11 * s * co + s * s;
        const double w2 = s * s - 2.0 * s * h22 * co + h22 * h22;
        if (w1 <= 0.0 || w2 <= 0.0) continue;
        gxp[id] = std::sqrt(w1) / kappa;
        gyp[id] = (h22 / s) * gxp[id];
        hym[id] = std::sqrt(w2) / kappa;
        hxm[id] = (h11 / s) * hym[id];
        cxp[id] = kappa / std::sqrt(w1);
        cym[id] = kappa / std::sqrt(w2);
        rat_p[id] = h22 / s;  // D_eta+ = -(h22/h12) D_x + D_y
        rat_m[id] = h11 / s;  // D_xi-  = D_x - (h11/h12) D_y
        rp[id] = g.r[id] + pot.m[id] / kappa;
        rm[id] = g.r[id] - pot.m[id] / kappa;
        // Chebyshev angles of the offsets: the angle between the asymptotic
        // coordinate fields, continuous through pi/2.
        rep.phi_plus[id] = std::atan2(s * so, s * co - h11);
        rep.phi_minus[id] = std::atan2(s * so, s * co - h22);
        ok[id] = 1;
    }

    auto okr = [&](const std::vector<char>& msk, int i, int j) {
        for (int dj = -2; dj <= 2; ++dj)
            for (int di = -2; di <= 2; ++di)
                if (!msk[g.idx(i + di, j + dj)]) return false;
        return true;
    };
    // Fourth-order first derivatives (Richardson over 1h / 2h differences).
    auto dx = [&](const std::vector<double>& F, int i, int j) {
        const double d1 = (F[g.idx(i + 1, j)] - F[g.idx(i - 1, j)]) / (2.0 * h);
        const double d2 = (F[g.idx(i + 2, j)] - F[g.idx(i - 2, j)]) / (4.0 * h);
        return (4.0 * d1 - d2) / 3.0;
    };
    auto dy = [&](const std::vector<double>& F, int i, int j) {
        const double d1 = (F[g.idx(i, j + 1)] - F[g.idx(i, j - 1)]) / (2.0 * h);
        const double d2 = (F[g.idx(i, j + 2)] - F[g.idx(i, j - 2)]) / (4.0 * h);
        return (4.0 * d1 - d2) / 3.0;
    };
    auto dxv = [&](const std::vector<Vec3>& F, int i, int j) {
        const Vec3 d1 = (F[g.idx(i + 1, j)] - F[g.idx(i - 1, j)]) / (2.0 * h);
        const Vec3 d2 = (F[g.idx(i + 2, j)] - F[g.idx(i - 2, j)]) / (4.0 * h);
        return (4.0 * d1 - d2) / 3.0;
    };
    auto dyv = [&](const std::vector<Vec3>& F, int i, int j) {
        const Vec3 d1 = (F[g.idx(i, j + 1)] - F[g.idx(i, j - 1)]) / (2.0 * h);
        const Vec3 d2 = (F[g.idx(i, j + 2)] - F[g.idx(i, j - 2)]) / (4.0 * h);
        return (4.0 * d1 - d2) / 3.0;
    };

    // Residuals are collected a fixed arc distance from the boundary so that
    // grids of different resolution report on the same region.
    const int mg = std::max(2, (int)std::lround(edge_margin / g.step));

    // Compatibility of the asymptotic-chart gradients.
    for (int j = mg; j + mg < g.ny; ++j) {
        for (int i = mg; i + mg < g.nx; ++i) {
            if (!okr(ok, i, j)) continue;
            rep.max_compat = std::max(
                {rep.max_compat, std::fabs(dy(gxp, i, j) - dx(gyp, i, j)),
                 std::fabs(dy(hxm, i, j) - dx(hym, i, j))});
        }
    }
    if (rep.max_compat > compat_tol)
        throw CompatibilityViolation("asymptotic chart gradients not integrable: " +
                                     std::to_string(rep.max_compat));

    // Integrate the charts from the base node (trapezoid).
    if (ok[g.idx(0, 0)]) {
        rep.xi_plus[g.idx(0, 0)] = 0.0;
        rep.eta_minus[g.idx(0, 0)] = 0.0;
    }
    for (int i = 1; i < g.nx; ++i) {
        const int a = g.idx(i - 1, 0), b = g.idx(i, 0);
        if (ok[a] && ok[b] && std::isfinite(rep.xi_plus[a])) {
            rep.xi_plus[b] = rep.xi_plus[a] + 0.5 * h * (gxp[a] + gxp[b]);
            rep.eta_minus[b] = rep.eta_minus[a] + 0.5 * h * (hxm[a] + hxm[b]);
        }
    }
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 1; j < g.ny; ++j) {
            const int a = g.idx(i, j - 1), b = g.idx(i, j);
            if (ok[a] && ok[b] && std::isfinite(rep.xi_plus[a])) {
                rep.xi_plus[b] = rep.xi_plus[a] + 0.5 * h * (gyp[a] + gyp[b]);
                rep.eta_minus[b] = rep.eta_minus[a] + 0.5 * h * (hym[a] + hym[b]);
            }
        }
    }

    // First-layer derived fields on the interior.
    std::vector<char> ok1(nn, 0);
    std::vector<double> t_p(nn), t_m(nn);  // D_eta+ phi+, D_eta- phi-
    std::vector<Vec3> dxn(nn), dyn(nn);
    for (int j = 2; j + 2 < g.ny; ++j) {
        for (int i = 2; i + 2 < g.nx; ++i) {
            if (!okr(ok, i, j)) continue;
            const int id = g.idx(i, j);
            t_p[id] = -rat_p[id] * dx(rep.phi_plus, i, j) + dy(rep.phi_plus, i, j);
            t_m[id] = cym[id] * dy(rep.phi_minus, i, j);
            dxn[id] = dxv(g.normal, i, j);
            dyn[id] = dyv(g.normal, i, j);
            ok1[id] = 1;
            if (i < mg || i + mg >= g.nx || j < mg || j + mg >= g.ny) continue;

            // Unit speed of the normal along the asymptotic directions.
            const Vec3 nxi_p = cxp[id] * dxn[id];
            const Vec3 neta_p = -rat_p[id] * dxn[id] + dyn[id];
            const Vec3 nxi_m = dxn[id] - rat_m[id] * dyn[id];
            const Vec3 neta_m = cym[id] * dyn[id];
            rep.max_unit = std::max(
                {rep.max_unit, std::fabs(norm(nxi_p) - ak), std::fabs(norm(neta_p) - ak),
                 std::fabs(norm(nxi_m) - ak), std::fabs(norm(neta_m) - ak)});

            // Angle from D_xi- n to D_eta+ n about the shared normal.
            const Vec3 n = g.normal[id];
            double psi = std::atan2(dot(n, cross(nxi_m, neta_p)), dot(nxi_m, neta_p));
            if (psi < 0.0) psi += 2.0 * pi_c;
            const double target = pi_c + g.omega[id];
            rep.max_psi = std::max(rep.max_psi, std::fabs(psi - target));

            // Lelieuvre formulas for the two offsets.
            const Vec3 rpx = dxv(rp, i, j), rpy = dyv(rp, i, j);
            const Vec3 rmx = dxv(rm, i, j), rmy = dyv(rm, i, j);
            const Vec3 rxi_p = cxp[id] * rpx;
            const Vec3 reta_p = -rat_p[id] * rpx + rpy;
            const Vec3 rxi_m = rmx - rat_m[id] * rmy;
            const Vec3 reta_m = cym[id] * rmy;
            rep.max_lelieuvre = std::max(
                {rep.max_lelieuvre, norm(rxi_p + (1.0 / kappa) * cross(nxi_p, n)),
                 norm(reta_p - (1.0 / kappa) * cross(neta_p, n)),
                 norm(rxi_m + (1.0 / kappa) * cross(nxi_m, n)),
                 norm(reta_m - (1.0 / kappa) * cross(neta_m, n))});
            ++rep.n_checked;
        }
    }

    // Sine-Gordon residuals on the second interior layer.
    for (int j = 2 * mg; j + 2 * mg < g.ny; ++j) {
        for (int i = 2 * mg; i + 2 * mg < g.nx; ++i) {
            if (!okr(ok1, i, j)) continue;
            const int id = g.idx(i, j);
            const double sg_p =
                cxp[id] * dx(t_p, i, j) - kappa * kappa * std::sin(rep.phi_plus[id]);
            const double sg_m = dx(t_m, i, j) - rat_m[id] * dy(t_m, i, j) -
                                kappa * kappa * std::sin(rep.phi_minus[id]);
            rep.max_sg = std::max({rep.max_sg, std::fabs(sg_p), std::fabs(sg_m)});
        }
    }
    return rep;
}

// --- example pairs and the round trip -------------------------------------------

struct ExamplePair {
    SurfacePatch A, B;
    std::optional<Rect> chart;
    std::optional<std::pair<double, double>> center;  // preferred grid seed
    double kappa = 1.0;
};

inline ExamplePair example_pair(const std::string& name) {
    ExamplePair e;
    if (name == "9.1") {
        // Two tractroids with perpendicular axes.
        e.A = make_surface("pseudosphere-x");
        e.B = make_surface("pseudosphere-y");
        // Window on the spherical chart where the mapping tensor stays
        // hyperbolic; nearer the diagonal direction the eigenvalues turn
        // complex and the construction degenerates.
        e.chart = Rect{0.90, 1.45, -0.40, 0.40};
        e.center = {1.275, -0.10};
        return e;
    }
    if (name == "9.2") {
        // Coaxial pair: tractroid (lower half) and the elliptic-type surface
        // of revolution normalized to the same curvature.
        e.A = make_surface("pseudosphere-z", {{"v_min", -4.0}, {"v_max", -0.02}});
        e.B = make_surface("elliptic", {{"k", 1.0}});
        // Azimuthal band on the spherical chart; the pair is coaxial so the
        // band runs around the full axis and we keep clear of the seam.
        e.chart = Rect{-2.90, -0.90, -1.50, -0.63};
        e.center = {-1.90, -1.065};
        return e;
    }
    if (name == "plane") {
        e.A = make_surface("plane");
        e.B = make_surface("plane");
        return e;
    }
    throw BadParams("unknown example pair: " + name);
}

struct RoundTripResult {
    double dist_plus = 0, dist_minus = 0;  // against the matched input surfaces
    bool plus_is_A = true;
    double max_loop_per_area = 0;
    double max_cond = 0;  // concordance residual of the net on the grid
    AssociatedPair::Report assoc;
    int n_nodes = 0;
};

namespace detail {

inline double match_error(const SurfacePatch& S, const ChebyshevGrid& g,
                          const std::vector<unsigned char>& mask,
                          const std::vector<Vec3>& F) {
    int base = -1;
    const int nn = g.nx * g.ny;
    for (int id = 0; id < nn; ++id)
        if (mask[id]) {
            base = id;
            break;
        }
    if (base < 0) throw MaskedRegion("round trip: no valid nodes");
    auto point_of = [&](int id) {
        const auto [u, v] = inverse_gauss(S, g.normal[id]);
        return value_of(surface_jet(S, u, v));
    };
    const Vec3 t = F[base] - point_of(base);
    double err = 0.0;
    for (int id = 0; id < nn; ++id) {
        if (!mask[id]) continue;
        try {
            err = std::max(err, norm(F[id] - t - point_of(id)));
        } catch (const Error&) {
            err = std::max(err, 1e3);  // normal left the Gauss image
        }
    }
    return err;
}

}  // namespace detail

// Full pipeline: parallel pair -> middle surface -> concordant net -> grid ->
// potential -> associated pair, compared against the inputs through the
// common Gauss map.
inline RoundTripResult round_trip(const SurfacePatch& A, const SurfacePatch& B,
                                  double step, int n,
                                  const Rect* chart_override = nullptr,
                                  const std::pair<double, double>* center = nullptr) {
    const ParallelPair pp = make_parallel(A, B, chart_override);
    const double pc = center ? center->first : 0.5 * (pp.chart.p_min + pp.chart.p_max);
    const double qc = center ? center->second : 0.5 * (pp.chart.q_min + pp.chart.q_max);
    mapping_tensor(pp, pc, qc);  // refuses degenerate configurations

    auto nets = concordant_nets(pp);
    NetOnSurface& net = nets.first;

    // Center the grid: flow backwards from the chart center.
    double p0 = pc, q0 = qc;
    detail::flow(net, 1, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    detail::flow(net, 2, p0, q0, -0.5 * (n - 1) * step, step / 4.0);

    const ChebyshevGrid g = chebyshev_grid(net, p0, q0, n, n, step);
    const double kappa = net.kappa_cond;

    RoundTripResult out;
    for (int id = 0; id < g.nx * g.ny; ++id)
        if (g.mask[id])
            out.max_cond = std::max(
                out.max_cond,
                std::fabs(g.h11[id] * g.h22[id] - g.h12[id] * g.h12[id] +
                          kappa * g.h12[id]));

    const PotentialField pot = vector_potential(g, kappa);
    out.max_loop_per_area = pot.max_loop_per_area;
    const AssociatedPair ap = associated_surfaces(g, pot, kappa);
    out.assoc = ap.report;
    for (unsigned char m : ap.mask) out.n_nodes += m ? 1 : 0;

    const double e_pA = detail::match_error(pp.A, g, ap.mask, ap.r_plus);
    const double e_mB = detail::match_error(pp.B, g, ap.mask, ap.r_minus);
    const double e_pB = detail::match_error(pp.B, g, ap.mask, ap.r_plus);
    const double e_mA = detail::match_error(pp.A, g, ap.mask, ap.r_minus);
    if (std::max(e_pA, e_mB) <= std::max(e_pB, e_mA)) {
        out.plus_is_A = true;
        out.dist_plus = e_pA;
        out.dist_minus = e_mB;
    } else {
        out.plus_is_A = false;
        out.dist_plus = e_pB;
        out.dist_minus = e_mA;
    }
    return out;
}

// --- coaxial middle surface at the rim ------------------------------------------

namespace detail {

// Neville extrapolation of (x_i, y_i) to x = 0.
inline double neville_to_zero(std::vector<double> x, std::vector<double> y) {
    const size_t m = x.size();
    for (size_t k = 1; k < m; ++k)
        for (size_t i = 0; i + k < m; ++i)
            y[i] = (x[i + k] * y[i] - x[i] * y[i + k]) / (x[i + k] - x[i]);
    return y[0];
}

}  // namespace detail

// Gauss curvature of the coaxial middle surface (tractroid, axis z, lower
// half, with the raw elliptic-type profile) at the rim, by exact jets in the
// chart (u, alpha) where the shared normal is
// (sin a cos u, sin a sin u, -cos a), extrapolated along a meridian to a = 0.
inline double coaxial_rim_curvature(double k, double alpha0 = 0.08, int levels = 5) {
    const double m = -std::tan(k) * std::tan(k);
    const double ck = std::cos(k), sk = std::sin(k);
    std::vector<double> xs, ys;
    for (int l = 0; l < levels; ++l) {
        const double a = alpha0 / (1 << l);
        const Jet2 U = Jet2::var_p(0.3), A = Jet2::var_q(a);
        // Tractroid side: tanh v = -sin a.
        const Jet2 Vp = -atanh(sin(A));
        const Jet2Vec3 r_p = detail::tractroid_z(U, Vp);
        // Elliptic side: cn(v cos k | m) = sin a / sin k, inverted through
        // the derivatives of arccn.
        const Jet2 G = sin(A) / sk;
        const double W0 = arccn(G.value, m);
        const JacobiValues jv = jacobi(W0, m);
        const double W1 = -1.0 / (jv.sn * jv.dn);
        const double W2 = -jv.cn * (jv.dn * jv.dn - m * jv.sn * jv.sn) /
                          std::pow(jv.sn * jv.dn, 3);
        const Jet2 W = compose(G, W0, W1, W2);
        const Jet2Vec3 r_m = detail::elliptic_core(U, W / ck, k, 1.0);
        const Jet2Vec3 r = 0.5 * (r_p + r_m);

        using namespace detail;
        const Vec3 rp = dp_of(r), rq = dq_of(r);
        const Vec3 w = cross(rp, rq);
        const double wn = norm(w);
        if (wn < 1e-14) throw DegenerateTangent("coaxial middle: rim chart collapsed");
        const Vec3 n = w / wn;
        const double E = dot(rp, rp), F = dot(rp, rq), Gm = dot(rq, rq);
        const double L = dot(dpp_of(r), n), M = dot(dpq_of(r), n),
                     N = dot(dqq_of(r), n);
        xs.push_back(a);
        ys.push_back((L * N - M * M) / (E * Gm - F * F));
    }
    return detail::neville_to_zero(xs, ys);
}

}  // namespace chebnet
