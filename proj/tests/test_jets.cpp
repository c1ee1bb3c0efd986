#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chebnet/jet2.hpp>
#include <chebnet/surface.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace chebnet;

namespace {

// Evaluate a scalar jet expression at (p, q) with fresh seeds.
template <class F>
Jet2 eval(F&& f, double p, double q) {
    return f(Jet2::var_p(p), Jet2::var_q(q));
}

// Check every stored partial of a jet expression against central
// differences of its value.
template <class F>
void check_against_fd(F&& f, double p, double q, double tol) {
    const Jet2 j = eval(f, p, q);
    auto vp = [&](double a) { return eval(f, a, q).value; };
    auto vq = [&](double b) { return eval(f, p, b).value; };
    CHECK(j.d_p == doctest::Approx(oracles::diff(vp, p)).epsilon(tol));
    CHECK(j.d_q == doctest::Approx(oracles::diff(vq, q)).epsilon(tol));
    CHECK(j.d_pp == doctest::Approx(oracles::diff2(vp, p)).epsilon(tol));
    CHECK(j.d_qq == doctest::Approx(oracles::diff2(vq, q)).epsilon(tol));
    auto dp_of_q = [&](double b) {
        auto g = [&](double a) { return eval(f, a, b).value; };
        return oracles::diff(g, p);
    };
    CHECK(j.d_pq == doctest::Approx(oracles::diff(dp_of_q, q, 1e-4)).epsilon(tol));
}

}  // namespace

TEST_CASE("jet seeds and ring operations") {
    const Jet2 p = Jet2::var_p(3.0), q = Jet2::var_q(5.0);
    const Jet2 s = p * q + p - 2.0 * q;
    CHECK(s.value == 3.0 * 5.0 + 3.0 - 10.0);
    CHECK(s.d_p == 5.0 + 1.0);
    CHECK(s.d_q == 3.0 - 2.0);
    CHECK(s.d_pq == 1.0);
    CHECK(s.d_pp == 0.0);
    CHECK(s.d_qq == 0.0);
}

TEST_CASE("jet chain rule matches finite differences for elementary functions") {
    const double tol = 1e-6;
    check_against_fd([](Jet2 p, Jet2 q) { return sin(p) * cos(q); }, 0.5, 0.7, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return exp(p * q); }, 0.3, -0.4, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return log(1.0 + p * p + q * q); }, 0.8, 0.2, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return sqrt(2.0 + sinh(p) + cosh(q)); }, 0.4, 0.6, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return tanh(p) / (1.0 + q * q); }, 0.9, 0.1, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return atan(p - q); }, 0.25, -0.5, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return acos(0.3 * p + 0.1 * q); }, 0.5, 0.5, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return acosh(2.0 + p * q); }, 0.5, 0.5, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return atanh(0.4 * p - 0.2 * q); }, 0.5, 0.3, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return tan(0.3 * p + 0.2 * q); }, 0.4, 0.7, tol);
    check_against_fd([](Jet2 p, Jet2 q) { return p / (q + 2.0); }, 1.5, 0.5, tol);
}

TEST_CASE("triple product antisymmetry") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto rvec = [&]() {
        return Jet2Vec3{Jet2(U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)),
                        Jet2(U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)),
                        Jet2(U(rng), U(rng), U(rng), U(rng), U(rng), U(rng))};
    };
    for (int i = 0; i < 20; ++i) {
        const Jet2Vec3 u = rvec(), v = rvec(), w = rvec();
        const Jet2 a = triple(u, v, w);
        const Jet2 b = triple(v, u, w);
        const Jet2 c = triple(u, w, v);
        CHECK(a.value == doctest::Approx(-b.value).epsilon(1e-12));
        CHECK(a.value == doctest::Approx(-c.value).epsilon(1e-12));
        CHECK(a.d_pq == doctest::Approx(-b.d_pq).epsilon(1e-10));
    }
}

TEST_CASE("surface_jet on plane and bilinear graph") {
    SurfacePatch plane{"plane", {-10, 10, -10, 10},
                       [](double p, double q) {
                           return Jet2Vec3{Jet2::var_p(p), Jet2::var_q(q), Jet2(0.0)};
                       }};
    const Jet2Vec3 r = surface_jet(plane, 3.0, 5.0);
    CHECK(r.x.value == 3.0);
    CHECK(r.y.value == 5.0);
    CHECK(r.z.value == 0.0);
    CHECK(r.x.d_p == 1.0);
    CHECK(r.y.d_q == 1.0);
    CHECK(r.x.d_pp == 0.0);

    SurfacePatch graph{"graph-pq", {-10, 10, -10, 10},
                       [](double p, double q) {
                           const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
                           return Jet2Vec3{P, Q, P * Q};
                       }};
    const Jet2Vec3 g = surface_jet(graph, 1.0, 2.0);
    CHECK(g.z.d_pq == 1.0);
    CHECK(g.z.d_pp == 0.0);

    CHECK_THROWS_AS(surface_jet(plane, 11.0, 0.0), DomainViolation);
}

TEST_CASE("unit normal jet: plane and unit sphere") {
    SurfacePatch plane{"plane", {-10, 10, -10, 10},
                       [](double p, double q) {
                           return Jet2Vec3{Jet2::var_p(p), Jet2::var_q(q), Jet2(0.0)};
                       }};
    const NormalJet n = unit_normal_jet(plane, 0.3, -0.4);
    CHECK(n.n.z == doctest::Approx(1.0));
    CHECK(norm(n.n_p) == doctest::Approx(0.0));
    CHECK(norm(n.n_q) == doctest::Approx(0.0));

    SurfacePatch sphere{"sphere", {-3.0, 3.0, -1.4, 1.4},
                        [](double p, double q) {
                            const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
                            return Jet2Vec3{cos(P) * cos(Q), sin(P) * cos(Q), sin(Q)};
                        }};
    const double p = 0.7, q = 0.4;
    const Jet2Vec3 r = surface_jet(sphere, p, q);
    const NormalJet ns = unit_normal_jet(sphere, p, q);
    // Outward normal of the unit sphere equals the position.
    CHECK(ns.n.x == doctest::Approx(r.x.value).epsilon(1e-12));
    CHECK(ns.n.y == doctest::Approx(r.y.value).epsilon(1e-12));
    CHECK(ns.n.z == doctest::Approx(r.z.value).epsilon(1e-12));
    CHECK(ns.n_p.x == doctest::Approx(r.x.d_p).epsilon(1e-10));
    CHECK(ns.n_q.z == doctest::Approx(r.z.d_q).epsilon(1e-10));
    // Unit length and orthogonality of derivatives.
    CHECK(dot(ns.n, ns.n) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(dot(ns.n, ns.n_p)) < 1e-12);
    CHECK(std::fabs(dot(ns.n, ns.n_q)) < 1e-12);
}

TEST_CASE("unit normal jet matches finite differences on a generic graph") {
    SurfacePatch graph{"graph-sin", {-3, 3, -3, 3},
                       [](double p, double q) {
                           const Jet2 P = Jet2::var_p(p), Q = Jet2::var_q(q);
                           return Jet2Vec3{P, Q, sin(P) * cos(Q)};
                       }};
    const double p = 0.5, q = -0.8;
    const NormalJet n = unit_normal_jet(graph, p, q);
    auto nx = [&](double a, double b) { return unit_normal_jet(graph, a, b).n; };
    const double h = 1e-5;
    const Vec3 fd_p = (nx(p + h, q) - nx(p - h, q)) / (2.0 * h);
    const Vec3 fd_q = (nx(p, q + h) - nx(p, q - h)) / (2.0 * h);
    CHECK(norm(n.n_p - fd_p) < 1e-8);
    CHECK(norm(n.n_q - fd_q) < 1e-8);
}

TEST_CASE("fd_promote recovers gradients and Hessians") {
    auto f1 = [](double p, double q) { return p * p * q; };
    const FdDerivatives d1 = fd_promote(f1, 1.0, 1.0, 1e-3);
    CHECK(d1.d_pq == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(d1.d_pp == doctest::Approx(2.0).epsilon(1e-9));

    auto f2 = [](double p, double q) { return std::sin(p) * std::cos(q); };
    const double p = 0.5, q = 0.5;
    const FdDerivatives d2 = fd_promote(f2, p, q, 1e-3);
    CHECK(d2.d_p == doctest::Approx(std::cos(p) * std::cos(q)).epsilon(1e-9));
    CHECK(d2.d_q == doctest::Approx(-std::sin(p) * std::sin(q)).epsilon(1e-9));
    CHECK(d2.d_pp == doctest::Approx(-std::sin(p) * std::cos(q)).epsilon(1e-9));
    CHECK(d2.d_pq == doctest::Approx(-std::cos(p) * std::sin(q)).epsilon(1e-8));
    CHECK(d2.d_qq == doctest::Approx(-std::sin(p) * std::cos(q)).epsilon(1e-9));

    const Rect dom{0.0, 1.0, 0.0, 1.0};
    CHECK_THROWS_AS(fd_promote(f1, 0.0005, 0.5, 1e-3, &dom), StencilOutOfDomain);
}
