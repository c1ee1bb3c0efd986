#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chebnet/construction.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace chebnet;

namespace {

double frand(std::mt19937& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

const ParallelPair& pair91() {
    static const ParallelPair pp = [] {
        const ExamplePair e = example_pair("9.1");
        return make_parallel(e.A, e.B, &*e.chart);
    }();
    return pp;
}

const ParallelPair& pair92() {
    static const ParallelPair pp = [] {
        const ExamplePair e = example_pair("9.2");
        return make_parallel(e.A, e.B, &*e.chart);
    }();
    return pp;
}

std::pair<NetOnSurface, NetOnSurface>& nets91() {
    static std::pair<NetOnSurface, NetOnSurface> nets = concordant_nets(pair91());
    return nets;
}

std::pair<NetOnSurface, NetOnSurface>& nets92() {
    static std::pair<NetOnSurface, NetOnSurface> nets = concordant_nets(pair92());
    return nets;
}

// Preferred grid seeds on the respective spherical charts.
std::pair<double, double> seed(const char* name) {
    return *example_pair(name).center;
}

// Subwindow of the 9.1 chart where the mapping tensor stays hyperbolic and
// well conditioned; the full chart also carries an elliptic pocket on its
// left edge and a near-degenerate strip on its right.
Rect hyper91() { return Rect{1.12, 1.40, -0.24, 0.24}; }

std::vector<std::pair<double, double>> chart_samples(const Rect& r, int n,
                                                     unsigned seed) {
    std::mt19937 rng(seed);
    std::vector<std::pair<double, double>> pts;
    const double mp = 0.02 * (r.p_max - r.p_min), mq = 0.02 * (r.q_max - r.q_min);
    for (int i = 0; i < n; ++i)
        pts.push_back({frand(rng, r.p_min + mp, r.p_max - mp),
                       frand(rng, r.q_min + mq, r.q_max - mq)});
    return pts;
}

}  // namespace

TEST_CASE("second-order chain rule against direct jet composition") {
    // u(p, q) = p^2 + p q, v(p, q) = sin(q) + p; f(u, v) = exp(u/4) cos(v).
    const double p = 0.37, q = -0.52;
    const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
    const Jet2 U = P * P + P * Q;
    const Jet2 V = sin(Q) + P;
    const Jet2 direct = exp(U / 4.0) * cos(V);

    // Jets of f with respect to (u, v) at the point.
    const Jet2 Uj = Jet2::var_p(U.value), Vj = Jet2::var_q(V.value);
    const Jet2 f = exp(Uj / 4.0) * cos(Vj);
    const Jet2 composed = chain2(f, U, V);

    CHECK(composed.value == doctest::Approx(direct.value).epsilon(1e-14));
    CHECK(composed.d_p == doctest::Approx(direct.d_p).epsilon(1e-14));
    CHECK(composed.d_q == doctest::Approx(direct.d_q).epsilon(1e-14));
    CHECK(composed.d_pp == doctest::Approx(direct.d_pp).epsilon(1e-13));
    CHECK(composed.d_pq == doctest::Approx(direct.d_pq).epsilon(1e-13));
    CHECK(composed.d_qq == doctest::Approx(direct.d_qq).epsilon(1e-13));
}

TEST_CASE("perpendicular tractroid pair: spherical chart carries both surfaces") {
    const ParallelPair& pp = pair91();
    CHECK(pp.method == ChartMethod::Sphere);
    for (const auto& [p, q] : chart_samples(pp.chart, 20, 21)) {
        const Vec3 n = pp.chart_normal(p, q).n;
        const auto [ua, va] = pp.to_A(p, q);
        const auto [ub, vb] = pp.to_B(p, q);
        CHECK(norm(unit_normal_jet(pp.A, ua, va).n - n) < 1e-10);
        CHECK(norm(unit_normal_jet(pp.B, ub, vb).n - n) < 1e-10);
        const PairPoint pt = pair_point(pp, p, q);
        using namespace chebnet::detail;
        CHECK(std::fabs(dot(dp_of(pt.rA), n)) < 1e-9);
        CHECK(std::fabs(dot(dq_of(pt.rA), n)) < 1e-9);
        CHECK(std::fabs(dot(dp_of(pt.rB), n)) < 1e-9);
        CHECK(std::fabs(dot(dq_of(pt.rB), n)) < 1e-9);
    }
}

TEST_CASE("mapping tensor: det s = xi eta = ratio of curvatures") {
    for (const ParallelPair* pp : {&pair91(), &pair92()}) {
        CAPTURE(pp->A.id);
        const Rect window = pp == &pair91() ? hyper91() : pp->chart;
        for (const auto& [p, q] : chart_samples(window, 15, 31)) {
            const MappingTensor t = mapping_tensor(*pp, p, q);
            CHECK(std::fabs(t.det_s - t.xi * t.eta) < 1e-9);
            // Both surfaces have K = -1, so det s = 1.
            CHECK(std::fabs(t.det_s - 1.0) < 1e-9);
            CHECK(t.ls_residual < 1e-9);
            CHECK(t.sym_residual < 1e-6);
            CHECK(t.ff2_residual < 1e-6);
            CHECK(t.min_asym_angle > 1e-2);
        }
    }
}

TEST_CASE("middle surface curvature matches -4 xi / (1 + xi)^2") {
    for (const ParallelPair* pp : {&pair91(), &pair92()}) {
        CAPTURE(pp->A.id);
        const SurfacePatch mid = middle_surface(*pp);
        const Rect window = pp == &pair91() ? hyper91() : mid.domain;
        const MiddleReport rep =
            middle_report(*pp, mid, 1.0, chart_samples(window, 15, 41));
        CHECK(rep.n_checked >= 14);
        CHECK(rep.max_K_residual < 1e-7);
    }
}

TEST_CASE("self-parallel and flat configurations are refused") {
    const SurfacePatch s = make_surface("pseudosphere-x");
    const ParallelPair self = make_parallel(s, s);
    CHECK(self.method == ChartMethod::Identity);
    const double pc = 0.5 * (self.chart.p_min + self.chart.p_max);
    const double qc = 0.5 * (self.chart.q_min + self.chart.q_max);
    CHECK_THROWS_AS(mapping_tensor(self, pc, qc), DegenerateEigen);

    const SurfacePatch pl = make_surface("plane");
    const ParallelPair flat = make_parallel(pl, pl);
    CHECK_THROWS_AS(mapping_tensor(flat, 0.1, -0.2), DegenerateEigen);
}

TEST_CASE("first-surface chart agrees with the spherical chart") {
    // Same geometric pair as 9.2, but with the second inverse Gauss map
    // hidden, forcing the Newton-based correspondence.
    SurfacePatch A = make_surface("pseudosphere-z", {{"v_min", -4.0}, {"v_max", -0.02}});
    SurfacePatch B = make_surface("elliptic", {{"k", 1.0}});
    B.inverse_gauss = nullptr;
    const ParallelPair pp = make_parallel(A, B);
    CHECK(pp.method == ChartMethod::FirstSurface);
    for (const auto& [p, q] : chart_samples(pp.chart, 6, 51)) {
        const MappingTensor t = mapping_tensor(pp, p, q);
        CHECK(std::fabs(t.det_s - 1.0) < 1e-8);
        CHECK(std::fabs(t.det_s - t.xi * t.eta) < 1e-8);
    }
}

TEST_CASE("coaxial middle surface: curvature at the rim") {
    const double k = 1.0;
    const double sk = std::sin(k);
    const double expect = -2.0 * sk * sk / (1.0 + sk * sk);
    CHECK(coaxial_rim_curvature(k) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("eigen coordinates are conjugate for both surfaces; transport equations") {
    const ParallelPair& pp = pair91();
    for (const auto& [p, q] : chart_samples(hyper91(), 4, 61)) {
        const PetersonResiduals r = peterson_residuals(pp, p, q);
        CAPTURE(p);
        CAPTURE(q);
        CHECK(r.conjA < 1e-7);
        CHECK(r.conjB < 1e-7);
        CHECK(std::fabs(r.mc1) < 1e-4);
        CHECK(std::fabs(r.mc2) < 1e-4);
        CHECK(std::fabs(r.marg1) < 1e-4);
        CHECK(std::fabs(r.marg2) < 1e-4);
        CHECK(std::fabs(r.cov1) < 1e-4);
        CHECK(std::fabs(r.cov2) < 1e-4);
    }
}

TEST_CASE("the two transversal nets are concordant Chebyshev nets") {
    auto check_pair = [](const ParallelPair& pp, const Rect* window,
                         unsigned seed) {
        auto nets = concordant_nets(pp);
        for (const NetOnSurface* net : {&nets.first, &nets.second}) {
            CAPTURE(net->eps1);
            CHECK(std::fabs(std::fabs(net->kappa_cond) - 1.0) < 1e-6);
            ConcordanceSpec spec;
            spec.kappa = net->kappa_cond > 0 ? 1.0 : -1.0;
            const Rect inner = window ? *window : shrink(net->chart, 0.03, 0.03);
            const auto rep = classify_net(net->base, net->pair,
                                          chart_samples(inner, 50, seed), spec,
                                          1e-6, 1e-9, 1e-6);
            CHECK(rep.n_singular == 0);
            CHECK(rep.max_iota < 1e-6);
            CHECK(rep.max_pi < 1e-6);
            CHECK(rep.max_cond < 1e-6);
            CHECK(rep.chebyshev);
            CHECK(rep.concordant);
            // Not conjugate: the mixed pairing has nonzero torsion.
            CHECK(rep.max_sigma > 1e-2);
        }
        // The two nets have opposite concordance signs.
        CHECK(nets.first.kappa_cond * nets.second.kappa_cond < 0.0);
    };
    const Rect w91 = hyper91();
    check_pair(pair91(), &w91, 71);
    check_pair(pair92(), nullptr, 72);
    CHECK_THROWS_AS(concordant_nets(pair91(), 0.0, 1, 1), DegenerateSigns);
}

TEST_CASE("net quadrilaterals close; closure defect converges with RK4 order") {
    const NetOnSurface& net = nets91().first;
    // Corner of the region that the grid tests cover: flow backwards from
    // the preferred seed along both families.
    auto [p0, q0] = seed("9.1");
    chebnet::detail::flow(net, 1, p0, q0, -0.225, 0.01);
    chebnet::detail::flow(net, 2, p0, q0, -0.225, 0.01);
    const double span = 0.45;
    const double d1 = parallelogram_defect(net, p0, q0, span, span, 0.04);
    const double d2 = parallelogram_defect(net, p0, q0, span, span, 0.02);
    CHECK(d1 < 1e-6);
    CHECK(d2 < std::max(d1 / 3.5, 5e-11));
    // At the acceptance step size the defect is far below the tolerance.
    const double d3 = parallelogram_defect(net, p0, q0, span, span, 1e-3);
    CHECK(d3 / (2.0 * span) < 1e-4);

    // Negative control: the spherical-coordinate net is not Chebyshev.
    const NetOnSurface sph = make_net(make_surface("sphere"), DirectionPair::coordinate());
    CHECK(parallelogram_defect(sph, 0.1, 0.2, 0.4, 0.4, 0.01) > 1e-3);
}

TEST_CASE("net coordinates commute and fill a grid with the expected fields") {
    const NetOnSurface& net = nets91().first;
    auto [p0, q0] = seed("9.1");
    const int n = 9;
    const double step = 0.05;
    chebnet::detail::flow(net, 1, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    chebnet::detail::flow(net, 2, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    const ChebyshevGrid g = chebyshev_grid(net, p0, q0, n, n, step);
    int valid = 0;
    const double kappa = net.kappa_cond;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (!g.valid(i, j)) continue;
            ++valid;
            const int id = g.idx(i, j);
            // Concordance in the h-variables: det h + kappa h12 = 0.
            CHECK(std::fabs(g.h11[id] * g.h22[id] - g.h12[id] * g.h12[id] +
                            kappa * g.h12[id]) < 1e-6);
            CHECK(g.omega[id] > 0.0);
            CHECK(g.omega[id] < 3.141592653589793);
        }
    }
    CHECK(valid == n * n);
    const auto gmc = gmc_residuals(g);
    CHECK(gmc.max_gauss < 5e-3);
    CHECK(gmc.max_codazzi1 < 5e-2);
    CHECK(gmc.max_codazzi2 < 5e-2);

    // The compatibility residuals are discretization error: second order.
    auto [p1, q1] = seed("9.1");
    const int nf = 2 * n - 1;
    chebnet::detail::flow(net, 1, p1, q1, -0.5 * (nf - 1) * 0.025, 0.00625);
    chebnet::detail::flow(net, 2, p1, q1, -0.5 * (nf - 1) * 0.025, 0.00625);
    const auto gmcf =
        gmc_residuals(chebyshev_grid(net, p1, q1, nf, nf, 0.025));
    CHECK(gmcf.max_gauss < gmc.max_gauss / 2.5);
    CHECK(gmcf.max_codazzi1 < gmc.max_codazzi1 / 2.5);
    CHECK(gmcf.max_codazzi2 < gmc.max_codazzi2 / 2.5);

    // A non-Chebyshev net triggers the commutation check.
    const NetOnSurface sph = make_net(make_surface("sphere"), DirectionPair::coordinate());
    GridOptions strict;
    strict.comm_tol = 1e-8;
    CHECK_THROWS_AS(chebyshev_grid(sph, 0.1, 0.2, 7, 7, 0.1, strict),
                    CommutationDefect);
}

TEST_CASE("conservation law: loop integrals vanish on concordant grids only") {
    const NetOnSurface& net = nets92().first;
    auto [p0, q0] = seed("9.2");
    const int n = 17;
    const double step = 0.025;
    chebnet::detail::flow(net, 1, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    chebnet::detail::flow(net, 2, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    const ChebyshevGrid g = chebyshev_grid(net, p0, q0, n, n, step);
    const PotentialField pot = vector_potential(g, net.kappa_cond);
    CHECK(pot.max_loop_per_area < 1e-6);

    // Unit sphere coordinate net: the form is not closed.
    const NetOnSurface sph = make_net(make_surface("sphere"), DirectionPair::coordinate());
    GridOptions lax;
    lax.comm_samples = 0;
    const ChebyshevGrid gs = chebyshev_grid(sph, -0.3, -0.2, 11, 11, 0.05, lax);
    const PotentialField pots = vector_potential(gs, 1.0);
    CHECK(pots.max_loop_per_area >= 1e-2);
    CHECK_THROWS_AS(vector_potential(gs, 1.0, 1e-6), ClosednessViolation);
}

namespace {

struct Pipeline {
    ChebyshevGrid grid;
    PotentialField pot;
    AssociatedPair assoc;
    double kappa;
};

Pipeline pipeline92(int n, double step) {
    const NetOnSurface& net = nets92().first;
    auto [p0, q0] = seed("9.2");
    chebnet::detail::flow(net, 1, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    chebnet::detail::flow(net, 2, p0, q0, -0.5 * (n - 1) * step, step / 4.0);
    Pipeline out{chebyshev_grid(net, p0, q0, n, n, step), {}, {}, net.kappa_cond};
    out.pot = vector_potential(out.grid, out.kappa);
    out.assoc = associated_surfaces(out.grid, out.pot, out.kappa);
    return out;
}

}  // namespace

TEST_CASE("associated surfaces are pseudospherical with the expected forms") {
    const Pipeline coarse = pipeline92(9, 0.05);
    const auto& r = coarse.assoc.report;
    CHECK(r.n_checked > 0);
    CHECK(r.max_K < 1e-3);
    CHECK(r.max_tangency < 1e-3);
    CHECK(r.max_II_diag < 1e-3);
    CHECK(r.max_detI < 1e-3);
    CHECK(r.max_H < 1e-3);

    const Pipeline fine = pipeline92(17, 0.025);
    const auto& rf = fine.assoc.report;
    CHECK(rf.max_K < std::max(r.max_K / 3.5, 1e-10));
    CHECK(rf.max_tangency < std::max(r.max_tangency / 3.5, 1e-10));
    CHECK(rf.max_II_diag < std::max(r.max_II_diag / 3.5, 1e-10));
    CHECK(rf.max_detI < std::max(r.max_detI / 3.5, 1e-10));
    CHECK(rf.max_H < std::max(r.max_H / 3.5, 1e-10));
}

TEST_CASE("sine-Gordon, unit sphere nets, and Lelieuvre formulas") {
    const Pipeline coarse = pipeline92(9, 0.05);
    const AsymptoticReport a =
        asymptotic_analysis(coarse.grid, coarse.pot, coarse.kappa);
    CHECK(a.n_checked > 0);
    CHECK(a.max_sg < 5e-3);
    CHECK(a.max_unit < 1e-4);
    CHECK(a.max_psi < 1e-4);
    CHECK(a.max_lelieuvre < 1e-3);

    const Pipeline fine = pipeline92(17, 0.025);
    const AsymptoticReport af =
        asymptotic_analysis(fine.grid, fine.pot, fine.kappa);
    CHECK(af.max_sg < std::max(a.max_sg / 3.5, 1e-11));
    CHECK(af.max_lelieuvre < std::max(a.max_lelieuvre / 3.5, 1e-11));
}

TEST_CASE("round trip recovers the original pair") {
    for (const char* name : {"9.1", "9.2"}) {
        CAPTURE(name);
        const ExamplePair e = example_pair(name);
        const Rect* chart = e.chart ? &*e.chart : nullptr;
        const std::pair<double, double>* ctr = e.center ? &*e.center : nullptr;
        const int n = std::string(name) == "9.1" ? 11 : 9;
        const RoundTripResult coarse = round_trip(e.A, e.B, 0.05, n, chart, ctr);
        CHECK(coarse.n_nodes > 0);
        CHECK(coarse.max_cond < 1e-6);
        CHECK(coarse.dist_plus < 5e-3);
        CHECK(coarse.dist_minus < 5e-3);
        const RoundTripResult fine =
            round_trip(e.A, e.B, 0.025, 2 * n - 1, chart, ctr);
        CHECK(fine.dist_plus < std::max(coarse.dist_plus / 3.5, 1e-9));
        CHECK(fine.dist_minus < std::max(coarse.dist_minus / 3.5, 1e-9));
    }
    const ExamplePair flat = example_pair("plane");
    CHECK_THROWS_AS(round_trip(flat.A, flat.B, 0.05, 9), DegenerateEigen);
}

TEST_CASE("curve tracing stays on the surface and reports truncation") {
    const NetOnSurface& net = nets91().first;
    const auto [pc, qc] = seed("9.1");
    const auto curves = trace_net(net, {{pc, qc}}, 0.02, 40);
    CHECK(curves.size() == 2);
    for (const auto& c : curves) {
        CHECK(c.r.size() >= 2);
        CHECK(c.r.size() == c.param.size());
        for (size_t i = 0; i < c.param.size(); ++i) {
            const Vec3 r = chebnet::detail::value_of(
                surface_jet(net.base, c.param[i].first, c.param[i].second));
            CHECK(norm(r - c.r[i]) < 1e-12);
        }
        // Arc length parameterization: consecutive points are step-spaced.
        for (size_t i = 1; i < c.r.size(); ++i)
            CHECK(norm(c.r[i] - c.r[i - 1]) ==
                  doctest::Approx(0.02).epsilon(1e-3));
    }
    // Long traces leave the chart and are flagged, not thrown.
    const auto longc = trace_net(net, {{pc, qc}}, 0.05, 500);
    for (const auto& c : longc) CHECK(c.truncated);
}
