#include "holab/abelian.hpp"

#include <doctest.h>

#include <random>

using namespace holab;
using namespace holab::abelian;
namespace fam = holab::spectral::families;

namespace {

RVec pt(double x, double y, double z) {
    RVec r(3);
    r << x, y, z;
    return r;
}

RVec sph(double r, double th, double ph) {
    return pt(r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th));
}

CVec random_state(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> g;
    CVec v(d);
    for (int i = 0; i < d; ++i) v[i] = cplx(g(rng), g(rng));
    return v / v.norm();
}

}  // namespace

TEST_CASE("discrete phase trivial cases") {
    std::mt19937_64 rng(1);
    CVec a = random_state(rng, 3), b = random_state(rng, 3);
    CHECK(berry_phase_discrete({a, b}, false).phase == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(berry_phase_discrete({a, a, a, a}, false).phase == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("spin-up cone phase with 400 samples") {
    auto z = fam::zeeman();
    const double th = kPi / 3;
    std::vector<RVec> pts;
    for (int k = 0; k < 400; ++k) pts.push_back(sph(1, th, 2 * kPi * k / 400));
    pts.push_back(pts.front());
    auto r = berry_phase_discrete(band_states(z, 1, pts), true);
    CHECK(std::abs(r.phase + kPi / 2) < 1e-4);
    CHECK(std::abs(std::polar(1.0, r.phase) - std::polar(1.0, r.unwrapped)) < 1e-12);
}

TEST_CASE("discrete phase is gauge invariant") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int t = 0; t < 20; ++t) {
        std::vector<CVec> s;
        CVec base = random_state(rng, 3);
        for (int k = 0; k < 12; ++k) {
            CVec v = base + 0.3 * random_state(rng, 3);
            s.push_back(v / v.norm());
        }
        auto r0 = berry_phase_discrete(s, false);
        for (auto& v : s) v *= std::polar(1.0, u(rng));
        auto r1 = berry_phase_discrete(s, false);
        CHECK(std::abs(wrap_phase(r0.phase - r1.phase)) < 1e-12);
    }
}

TEST_CASE("orthogonal consecutive states are rejected with the index") {
    CVec a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    try {
        berry_phase_discrete({a, a, b, a}, false);
        FAIL("expected throw");
    } catch (const OverlapError& e) {
        CHECK(std::string(e.what()).find("states 1 and 2") != std::string::npos);
    }
}

TEST_CASE("zeeman connection matches the monopole potential") {
    auto z = fam::zeeman();
    auto c = berry_connection_fd(z, 1, sph(1, kPi / 2, 0));
    // phi-hat at phi = 0 is y-hat
    CHECK(c.A[0] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(c.A[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(c.A[2] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("real symmetric family has zero connection") {
    auto f = fam::real_planar(4, 3);
    RVec R(2);
    R << 0.4, -0.3;
    for (int n = 0; n < 4; ++n) CHECK(berry_connection_fd(f, n, R).A.norm() < 1e-10);
}

TEST_CASE("connection converges as step^2 (Richardson oracle)") {
    auto f = fam::random_linear(3, 5);
    RVec R = pt(0.3, 0.1, -0.2);
    for (int n = 0; n < 3; ++n) {
        auto a1 = berry_connection_fd(f, n, R, 2e-3).A;
        auto a2 = berry_connection_fd(f, n, R, 1e-3).A;
        RVec extrap = (4 * a2 - a1) / 3;
        // error at h=1e-3 is (a1-a2)/3 to leading order
        CHECK((a2 - extrap).norm() <= (a1 - a2).norm() / 3 + 1e-9);
        CHECK((a2 - extrap).norm() < 1e-5);
    }
}

TEST_CASE("zeeman curvature for both states and all methods") {
    auto z = fam::zeeman();
    RVec R = pt(0.3, -0.5, 0.7);
    const Vec3 r(0.3, -0.5, 0.7);
    const Vec3 expect = r / (2 * std::pow(r.norm(), 3));
    for (auto m : {CurvatureMethod::PerturbationSum, CurvatureMethod::DensityMatrix, CurvatureMethod::FiniteDifference}) {
        CHECK((berry_curvature(z, 1, R, m).V - expect).norm() < 1e-6 * expect.norm());
        CHECK((berry_curvature(z, 0, R, m).V + expect).norm() < 1e-6 * expect.norm());
    }
}

TEST_CASE("generic two-state curvature matches the analytic flux field") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    auto F = [](const RVec& R) {
        return Vec3(R[0] * R[1] + 0.3, std::sin(R[2]) - 0.2 * R[0], R[0] - R[1] * R[2] + 0.1);
    };
    auto f = fam::two_state("nonlinear", F);
    for (int t = 0; t < 10; ++t) {
        RVec R = pt(g(rng), g(rng), g(rng));
        auto V = berry_curvature(f, 1, R, CurvatureMethod::PerturbationSum).V;
        auto W = two_state_curvature(F, R, +1);
        CHECK((V - W).norm() < 1e-6 * W.norm());
    }
}

TEST_CASE("curvature sum rule") {
    auto f = fam::random_linear(4, 13);
    RVec R = pt(0.1, 0.4, -0.3);
    Vec3 s = Vec3::Zero();
    for (int n = 0; n < 4; ++n) s += berry_curvature(f, n, R, CurvatureMethod::PerturbationSum).V;
    CHECK(s.norm() < 1e-8);
}

TEST_CASE("census: unit sphere around the zeeman degeneracy") {
    auto z = fam::zeeman();
    auto S = spectral::sphere_surface(Vec3::Zero(), 1.0, 2);
    auto c = degeneracy_census(z, 1, S);
    CHECK(c.charge == 1);
    CHECK(c.initial_residual < 0.05 * 2 * kPi);
    CHECK(c.residual < 1e-3 * 2 * kPi);
    auto off = spectral::sphere_surface(Vec3(3, 0, 0), 1.0, 2);
    CHECK(degeneracy_census(z, 1, off).charge == 0);
    Mat3 M = Mat3::Identity();
    M(2, 2) = -1;
    CHECK(degeneracy_census(fam::two_state_linear(M), 1, S).charge == -1);
}

TEST_CASE("census refuses a non-watertight surface") {
    auto S = spectral::sphere_surface(Vec3::Zero(), 1.0, 1);
    S.triangles.pop_back();
    CHECK_THROWS_AS(degeneracy_census(fam::zeeman(), 1, S), GeometryError);
}

TEST_CASE("two-state quantum metric is the round-sphere metric") {
    auto z = fam::zeeman();
    // pull back along (theta, phi) at radius 1: g_theta = 1/4, g_phi = sin^2/4
    const double th = 0.9, ph = 0.4, h = 1e-6;
    RVec R = sph(1, th, ph);
    auto g = quantum_metric(z, 1, R).g;
    RVec dth = (sph(1, th + h, ph) - sph(1, th - h, ph)) / (2 * h);
    RVec dph = (sph(1, th, ph + h) - sph(1, th, ph - h)) / (2 * h);
    const double gtt = dth.dot(g * dth), gpp = dph.dot(g * dph), gtp = dth.dot(g * dph);
    CHECK(gpp / gtt == doctest::Approx(std::pow(std::sin(th), 2)).epsilon(1e-6));
    CHECK(std::abs(gtp) < 1e-8);
    // radial direction does not change the state
    RVec rad = R / R.norm();
    CHECK(std::abs(rad.dot(g * rad)) < 1e-9);
}

TEST_CASE("quantum metric is PSD on random families") {
    for (unsigned seed = 1; seed <= 100; ++seed) {
        auto f = fam::random_linear(3, seed);
        RVec R = pt(0.2, -0.1, 0.3);
        auto es = spectral::eigendecompose(f, R);
        if (spectral::is_degenerate(es, 1)) continue;
        auto g = quantum_metric(f, 1, R).g;
        CHECK((g - g.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<RMat> e(g);
        CHECK(e.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("geodesics") {
    std::mt19937_64 rng(4);
    CVec a = random_state(rng, 3);
    CVec b = a * std::polar(1.0, 0.7);
    for (double s : {0.0, 0.3, 1.0}) CHECK((geodesic_state(a, b, s) - a).norm() < 1e-14);
    CVec up(2), dn(2);
    up << 1, 0;
    CVec tilt(2);
    tilt << std::cos(kPi / 8), std::sin(kPi / 8);
    CVec mid = geodesic_state(up, tilt, 0.5);
    CHECK(std::abs(std::abs(mid.dot(up)) - std::cos(kPi / 16)) < 1e-14);
    CHECK(std::abs(std::abs(mid.dot(tilt)) - std::cos(kPi / 16)) < 1e-14);
    dn << 0, 1;
    CHECK_THROWS_AS(geodesic_state(up, dn, 0.5), DomainError);
    CVec c = random_state(rng, 3);
    CVec end = geodesic_state(a, c, 1.0);
    CHECK(std::abs(std::abs(end.dot(c)) - 1.0) < 1e-12);
}

TEST_CASE("geodesic closure reproduces the closed-loop phase") {
    std::mt19937_64 rng(6);
    std::vector<CVec> path;
    CVec v = random_state(rng, 3);
    for (int k = 0; k < 30; ++k) {
        CVec w = v + 0.1 * random_state(rng, 3);
        v = w / w.norm();
        path.push_back(v);
    }
    const double open = berry_phase_discrete(path, false).phase;
    std::vector<CVec> closed = path;
    for (int k = 1; k < 200; ++k) closed.push_back(geodesic_state(path.back(), path.front(), k / 200.0));
    closed.push_back(path.front());
    CHECK(std::abs(wrap_phase(berry_phase_discrete(closed, true).phase - open)) < 1e-6);
}

TEST_CASE("solid angles") {
    std::vector<Vec3> oct = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    CHECK(solid_angle_of_loop(oct) == doctest::Approx(kPi / 2));
    for (double th : {0.3, kPi / 3, 2.0}) {
        std::vector<Vec3> c;
        for (int k = 0; k < 2000; ++k) {
            const double p = 2 * kPi * k / 2000;
            c.emplace_back(std::sin(th) * std::cos(p), std::sin(th) * std::sin(p), std::cos(th));
        }
        CHECK(std::abs(std::remainder(solid_angle_of_loop(c) - 2 * kPi * (1 - std::cos(th)), 4 * kPi)) < 1e-4);
    }
    std::vector<Vec3> gc;
    for (int k = 0; k < 200; ++k) {
        const double p = 2 * kPi * k / 100;
        gc.emplace_back(std::cos(p), std::sin(p), 0.0);
    }
    const double om = solid_angle_of_loop(gc);
    CHECK(std::abs(std::remainder(om, 4 * kPi)) < 1e-9);
    CHECK(std::abs(std::polar(1.0, om / 2) - 1.0) < 1e-9);
    std::vector<Vec3> bad = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitZ()};
    CHECK_THROWS_AS(solid_angle_of_loop(bad), GeometryError);
}

TEST_CASE("poincare sphere placement") {
    CVec c(2);
    c << 1 / std::sqrt(2.0), kI / std::sqrt(2.0);
    CHECK(std::abs(std::abs(poincare_point(PolarizationState(c)).z()) - 1) < 1e-15);
    CVec l(2);
    l << 1, 0;
    CHECK(std::abs(poincare_point(PolarizationState(l)).z()) < 1e-15);
    std::mt19937_64 rng(10);
    for (int t = 0; t < 50; ++t) {
        CVec a = random_state(rng, 2);
        CVec b(2);
        b << -std::conj(a[1]), std::conj(a[0]);
        CHECK((poincare_point(PolarizationState(a)) + poincare_point(PolarizationState(b))).norm() < 1e-14);
        Vec3 e = poincare_point(PolarizationState(a));
        CHECK((poincare_point(PolarizationState(jones_from_poincare(e))) - e).norm() < 1e-12);
    }
}

TEST_CASE("pancharatnam phase and intensity") {
    std::mt19937_64 rng(12);
    CVec a = random_state(rng, 2), b = random_state(rng, 2);
    PolarizationState A(a), B(b, 2.0);
    CHECK(pancharatnam_relative_phase(A, A) == doctest::Approx(0.0));
    // retarding B by the relative phase maximizes the superposed intensity
    const double chi = -pancharatnam_relative_phase(A, B);
    const double best = superposed_intensity(A, B, chi);
    for (int k = 0; k < 64; ++k) CHECK(superposed_intensity(A, B, 2 * kPi * k / 64) <= best + 1e-12);
    CVec o(2);
    o << -std::conj(a[1]), std::conj(a[0]);
    CHECK_THROWS_AS(pancharatnam_relative_phase(A, PolarizationState(o)), DomainError);
}

TEST_CASE("pancharatnam triangle is minus half the poincare solid angle") {
    std::vector<Vec3> oct = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    PolarizationState A(jones_from_poincare(oct[0])), B(jones_from_poincare(oct[1])), C(jones_from_poincare(oct[2]));
    const double tri = std::arg(A.jones.dot(B.jones) * B.jones.dot(C.jones) * C.jones.dot(A.jones));
    CHECK(tri == doctest::Approx(-kPi / 4).epsilon(1e-12));
    std::mt19937_64 rng(14);
    for (int t = 0; t < 100; ++t) {
        PolarizationState a(random_state(rng, 2)), b(random_state(rng, 2)), c(random_state(rng, 2));
        const double ph = std::arg(a.jones.dot(b.jones) * b.jones.dot(c.jones) * c.jones.dot(a.jones));
        const double om = solid_angle_of_loop({poincare_point(a), poincare_point(b), poincare_point(c)});
        CHECK(std::abs(wrap_phase(ph + om / 2)) < 1e-6);
    }
}

TEST_CASE("time-reversal symmetric loops give 0 or pi") {
    auto f = fam::real_planar(2, 0);
    auto circle = [](double cx, double cy, double r) {
        return [=](double s) {
            RVec R(2);
            R << cx + r * std::cos(2 * kPi * s), cy + r * std::sin(2 * kPi * s);
            return R;
        };
    };
    CHECK(std::abs(std::abs(loop_phase(f, 0, circle(0.1, -0.2, 1.0)).phase) - kPi) < 1e-6);
    CHECK(std::abs(loop_phase(f, 0, circle(2.0, 0.0, 1.0)).phase) < 1e-6);
}
