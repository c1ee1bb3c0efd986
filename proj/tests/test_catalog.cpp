#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chebnet/catalog.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace chebnet;

namespace {

struct Forms {
    double E, F, G, L, M, N;
    Vec3 n;
};

Forms forms_at(const SurfacePatch& patch, double p, double q) {
    const Jet2Vec3 r = surface_jet(patch, p, q);
    const NormalJet nj = unit_normal_jet(patch, p, q);
    using namespace chebnet::detail;
    Forms f;
    f.E = dot(dp_of(r), dp_of(r));
    f.F = dot(dp_of(r), dq_of(r));
    f.G = dot(dq_of(r), dq_of(r));
    f.L = dot(dpp_of(r), nj.n);
    f.M = dot(dpq_of(r), nj.n);
    f.N = dot(dqq_of(r), nj.n);
    f.n = nj.n;
    return f;
}

double gauss_K(const SurfacePatch& patch, double p, double q) {
    const Forms f = forms_at(patch, p, q);
    return (f.L * f.N - f.M * f.M) / (f.E * f.G - f.F * f.F);
}

double frand(std::mt19937& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

}  // namespace

TEST_CASE("pseudospherical entries have K = -1 on interior grids") {
    std::mt19937 rng(3);
    for (const char* name :
         {"pseudosphere-x", "pseudosphere-y", "pseudosphere-z", "pseudosphere-asym",
          "pseudosphere-z-asym", "elliptic", "elliptic-asym"}) {
        CAPTURE(name);
        const SurfacePatch s = make_surface(name);
        const Rect& d = s.domain;
        for (int i = 0; i < 40; ++i) {
            const double p = frand(rng, d.p_min + 0.02, d.p_max - 0.02);
            const double q = frand(rng, d.q_min + 0.02, d.q_max - 0.02);
            CAPTURE(p);
            CAPTURE(q);
            CHECK(gauss_K(s, p, q) == doctest::Approx(-1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("raw elliptic profile has K = -sin^2 k") {
    const double k = 1.0;
    const SurfacePatch s = make_surface("elliptic-raw", {{"k", k}});
    std::mt19937 rng(5);
    const double expect = -std::sin(k) * std::sin(k);
    for (int i = 0; i < 20; ++i) {
        const double p = frand(rng, -3.0, 3.0);
        const double q = frand(rng, s.domain.q_min + 0.02, s.domain.q_max - 0.02);
        CHECK(gauss_K(s, p, q) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("tractroid normals match the closed forms with the sign(v) factor") {
    const SurfacePatch sx = make_surface("pseudosphere-x");
    const double u = 0.3, v = 0.7;
    const Vec3 n = unit_normal_jet(sx, u, v).n;
    const double sgn = v > 0 ? 1.0 : -1.0;
    CHECK(n.x == doctest::Approx(sgn / std::cosh(v)).epsilon(1e-10));
    CHECK(n.y == doctest::Approx(sgn * std::tanh(v) * std::cos(u)).epsilon(1e-10));
    CHECK(n.z == doctest::Approx(sgn * std::tanh(v) * std::sin(u)).epsilon(1e-10));

    const SurfacePatch sxn =
        make_surface("pseudosphere-x", {{"v_min", -4.0}, {"v_max", -0.02}});
    const Vec3 nn = unit_normal_jet(sxn, u, -v).n;
    CHECK(nn.x == doctest::Approx(-1.0 / std::cosh(v)).epsilon(1e-10));
    CHECK(nn.y == doctest::Approx(std::tanh(v) * std::cos(u)).epsilon(1e-10));

    const SurfacePatch sy = make_surface("pseudosphere-y");
    const Vec3 ny = unit_normal_jet(sy, u, v).n;
    CHECK(ny.x == doctest::Approx(std::tanh(v) * std::cos(u)).epsilon(1e-10));
    CHECK(ny.y == doctest::Approx(1.0 / std::cosh(v)).epsilon(1e-10));
    CHECK(ny.z == doctest::Approx(std::tanh(v) * std::sin(u)).epsilon(1e-10));

    const SurfacePatch sz = make_surface("pseudosphere-z");
    const Vec3 nz = unit_normal_jet(sz, u, v).n;
    CHECK(nz.x == doctest::Approx(std::tanh(v) * std::cos(u)).epsilon(1e-10));
    CHECK(nz.z == doctest::Approx(1.0 / std::cosh(v)).epsilon(1e-10));
}

TEST_CASE("elliptic normal matches the revolution closed form") {
    const double k = 1.0;
    const double m = -std::tan(k) * std::tan(k);
    const double ck = std::cos(k), sk = std::sin(k);
    for (const char* name : {"elliptic", "elliptic-raw"}) {
        const SurfacePatch s = make_surface(name, {{"k", k}});
        const double u = 0.4, v = 0.9;
        const JacobiValues j = jacobi(v * ck, m);
        const Vec3 n = unit_normal_jet(s, u, v).n;
        CHECK(n.x == doctest::Approx(sk * j.cn * std::cos(u)).epsilon(1e-10));
        CHECK(n.y == doctest::Approx(sk * j.cn * std::sin(u)).epsilon(1e-10));
        CHECK(n.z == doctest::Approx(-ck * j.dn).epsilon(1e-10));
    }
}

TEST_CASE("parallelism residual of the coaxial pair vanishes on the shared cap") {
    // Shared normal: pseudosphere at v+ < 0 with n = sign(v)(tanh v cos u,
    // tanh v sin u, sech v) meets the elliptic cap normal where
    // sin k cn(v- cos k) + tanh v+ = 0.
    const double k = 1.0;
    const double m = -std::tan(k) * std::tan(k);
    const double ck = std::cos(k), sk = std::sin(k);
    for (double vm = 0.05; vm < ellip_K(sk * sk); vm += 0.1) {
        const double cn = jacobi(vm * ck, m).cn;
        const double vp = -std::atanh(sk * cn);
        CHECK(sk * cn + std::tanh(vp) == doctest::Approx(0.0).epsilon(1e-12));
        // v+ from the dn-based inversion agrees.
        const double dn = jacobi(vm * ck, m).dn;
        CHECK(std::fabs(vp) ==
              doctest::Approx(std::acosh(1.0 / (dn * ck))).epsilon(1e-10));
    }
}

TEST_CASE("inverse Gauss round trips") {
    std::mt19937 rng(9);
    for (const char* name :
         {"sphere", "pseudosphere-x", "pseudosphere-y", "pseudosphere-z",
          "pseudosphere-asym", "elliptic", "elliptic-asym"}) {
        CAPTURE(name);
        const SurfacePatch s = make_surface(name);
        const Rect& d = s.domain;
        for (int i = 0; i < 100; ++i) {
            const double p = frand(rng, d.p_min + 0.05, d.p_max - 0.05);
            const double q = frand(rng, d.q_min + 0.05, d.q_max - 0.05);
            const Vec3 N = unit_normal_jet(s, p, q).n;
            const auto [pp, qq] = inverse_gauss(s, N);
            const Vec3 N2 = unit_normal_jet(s, pp, qq).n;
            CAPTURE(p);
            CAPTURE(q);
            CHECK(norm(N2 - N) < 1e-9);
        }
    }
}

TEST_CASE("specific inverse Gauss cases") {
    const SurfacePatch s = make_surface("pseudosphere-x");
    const Vec3 N = unit_normal_jet(s, 0.4, 0.9).n;
    const auto [u, v] = inverse_gauss(s, N);
    CHECK(u == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(v == doctest::Approx(0.9).epsilon(1e-9));
    // Pole of the Gauss image: rim normal is excluded.
    CHECK_THROWS_AS(inverse_gauss(s, Vec3{0.0, 0.0, 1.0}), OutsideGaussImage);

    // Elliptic cap: recover v- from the parallelism with v+ = -0.5.
    const double k = 1.0;
    const double m = -std::tan(k) * std::tan(k);
    const double sk = std::sin(k), ck = std::cos(k);
    const double vp = -0.5;
    const double vm = arccn(-std::tanh(vp) / sk, m) / ck;
    CHECK(sk * jacobi(vm * ck, m).cn + std::tanh(vp) ==
          doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("Newton inverse Gauss fallback on a graph surface") {
    const SurfacePatch s = make_surface("graph-sincos");
    const Vec3 N = unit_normal_jet(s, 0.6, -0.4).n;
    const auto [p, q] = newton_inverse_gauss(s, N);
    const Vec3 N2 = unit_normal_jet(s, p, q).n;
    CHECK(norm(N2 - N) < 1e-10);
}

TEST_CASE("asymptotic Chebyshev parameterizations: unit rows, vanishing II diagonal") {
    std::mt19937 rng(13);
    for (const char* name : {"pseudosphere-asym", "pseudosphere-z-asym", "elliptic-asym"}) {
        CAPTURE(name);
        const SurfacePatch s = make_surface(name);
        const Rect& d = s.domain;
        for (int i = 0; i < 30; ++i) {
            const double p = frand(rng, d.p_min + 0.02, d.p_max - 0.02);
            const double q = frand(rng, d.q_min + 0.02, d.q_max - 0.02);
            const Forms f = forms_at(s, p, q);
            CHECK(f.E == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(f.G == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(std::fabs(f.L) < 1e-9);
            CHECK(std::fabs(f.N) < 1e-9);
        }
    }
}

TEST_CASE("translation surface has vanishing mixed derivative") {
    const SurfacePatch s = make_surface("translation");
    const Jet2Vec3 r = surface_jet(s, 0.8, -1.1);
    CHECK(r.x.d_pq == 0.0);
    CHECK(r.y.d_pq == 0.0);
    CHECK(r.z.d_pq == 0.0);
}

TEST_CASE("psi_k properties") {
    const double k = 1.0;
    const double m = -std::tan(k) * std::tan(k);
    const double ck = std::cos(k), sk = std::sin(k);

    // psi_k(0) = K(m) / (2 cos k) because arccn(0 | m) = K(m).
    CHECK(psi_k(0.0, k) == doctest::Approx(ellip_K(m) / (2.0 * ck)).epsilon(1e-12));

    // Derivative matches the closed form and central differences.
    for (double v = -0.9; v < -0.05; v += 0.1) {
        const double fd = oracles::diff([k](double t) { return psi_k(t, k); }, v, 1e-5);
        CHECK(psi_k_prime(v, k) == doctest::Approx(fd).epsilon(1e-8));
    }

    // Inverse round trip.
    const double wlo = -0.5 * std::atanh(sk), whi = ellip_K(m) / (2.0 * ck);
    for (int i = 1; i <= 20; ++i) {
        const double w = wlo + (whi - wlo) * i / 21.0;
        CHECK(psi_k(psi_k_inv(w, k), k) == doctest::Approx(w).epsilon(1e-10));
    }

    CHECK_THROWS_AS(psi_k(0.5, k), DomainViolation);
    CHECK_THROWS_AS(psi_k_prime(-std::atanh(sk), k), DerivativeSingular);
}

TEST_CASE("catalog listing covers the required entries") {
    const auto& entries = catalog();
    auto has = [&](const std::string& n) {
        for (const auto& e : entries)
            if (e.name == n) return true;
        return false;
    };
    for (const char* n :
         {"plane", "sphere", "graph-pq", "graph-sincos", "graph-bump", "translation",
          "pseudosphere-x", "pseudosphere-y", "pseudosphere-z", "pseudosphere-asym",
          "elliptic", "elliptic-asym"})
        CHECK(has(n));
    CHECK_THROWS_AS(make_surface("nonexistent"), BadParams);
}
