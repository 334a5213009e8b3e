#include "holab/spectral.hpp"

#include <doctest.h>

#include <random>

using namespace holab;
using namespace holab::spectral;

namespace {

RVec pt(double x, double y, double z) {
    RVec r(3);
    r << x, y, z;
    return r;
}

}  // namespace

TEST_CASE("zeeman eigensystem at the pole") {
    auto f = families::zeeman(2.0);
    auto es = eigendecompose(f, pt(0, 0, 1));
    CHECK(es.energies[0] == doctest::Approx(-1.0));
    CHECK(es.energies[1] == doctest::Approx(1.0));
    CHECK(std::abs(es.states(0, 1) - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(es.states(1, 1)) < 1e-14);
}

TEST_CASE("eigendecompose is deterministic") {
    auto f = families::random_linear(5, 7);
    auto a = eigendecompose(f, pt(0.3, -0.2, 0.9));
    auto b = eigendecompose(f, pt(0.3, -0.2, 0.9));
    CHECK(a.energies == b.energies);
    CHECK(a.states == b.states);
}

TEST_CASE("random family residuals and orthonormality") {
    auto f = families::random_linear(4, 11);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 50; ++t) {
        RVec R = pt(u(rng), u(rng), u(rng));
        CMat H = f(R);
        auto es = eigendecompose(f, R);
        const double scale = H.norm();
        for (int n = 0; n < 4; ++n) {
            CHECK((H * es.states.col(n) - es.energies[n] * es.states.col(n)).norm() <= 1e-10 * scale);
            const int p = gauge_pivot(es.states.col(n));
            CHECK(es.states(p, n).imag() == 0.0);
            CHECK(es.states(p, n).real() > 0.0);
        }
        CHECK((es.states.adjoint() * es.states - CMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
        for (int n = 0; n + 1 < 4; ++n) CHECK(es.energies[n] <= es.energies[n + 1]);
    }
}

TEST_CASE("gap examples") {
    auto z = families::zeeman(1.0);
    CHECK(gap(z, pt(0, 0, 0), 0) == doctest::Approx(0.0));
    CHECK(gap(z, pt(0.6, 0, 0.8), 0) == doctest::Approx(1.0));
    auto q = families::quadrupole(1.5);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
        RVec n = pt(g(rng), g(rng), g(rng));
        auto es = eigendecompose(q, n);
        CHECK(es.energies[0] == doctest::Approx(0.25 * 1.5));
        CHECK(es.energies[3] == doctest::Approx(2.25 * 1.5));
        CHECK(es.energies[2] - es.energies[1] == doctest::Approx(2.0 * 1.5));
        CHECK(is_degenerate(es, 0));
    }
}

TEST_CASE("fix_gauge examples") {
    CVec v(2);
    v << 0, kI;
    auto w = fix_gauge(v);
    CHECK(std::abs(w[0]) == 0.0);
    CHECK(std::abs(w[1] - 1.0) < 1e-15);
    CVec h(2);
    h << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
    CHECK((fix_gauge(h) - h).norm() < 1e-16);
    CHECK_THROWS_AS(fix_gauge(CVec::Zero(3)), DomainError);
}

TEST_CASE("fix_gauge collapses the gauge orbit and is idempotent") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int t = 0; t < 200; ++t) {
        CVec v(4);
        for (int i = 0; i < 4; ++i) v[i] = cplx(g(rng), g(rng));
        const CVec a = fix_gauge(v);
        const CVec b = fix_gauge(std::polar(1.0, u(rng)) * v);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14 * v.norm());
        CHECK((fix_gauge(a) - a).cwiseAbs().maxCoeff() < 1e-15 * v.norm());
        CHECK(a.norm() == doctest::Approx(v.norm()).epsilon(1e-14));
    }
}

TEST_CASE("built-in families are Hermitian at random points") {
    std::vector<HamiltonianFamily> fams = {families::zeeman(), families::spin_field(1.5), families::quadrupole(),
                                           families::nmr_rotating(2.0, 1.0), families::random_linear(6, 2)};
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (const auto& f : fams)
        for (int t = 0; t < 20; ++t) {
            RVec R = pt(g(rng), g(rng), g(rng));
            CMat H = f(R);
            CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
        }
}

TEST_CASE("non-Hermitian rule is a model error") {
    HamiltonianFamily bad("bad", 2, 1, [](const RVec&) {
        CMat h(2, 2);
        h << 0, 1, 0, 0;
        return h;
    });
    RVec r(1);
    r << 0.0;
    CHECK_THROWS_AS(bad(r), ModelError);
    CHECK_THROWS_AS(bad(pt(0, 0, 0)), ModelError);
}

TEST_CASE("energies are Lipschitz along sampled paths") {
    auto f = families::random_linear(4, 21);
    RVec a = pt(-1, 0.2, 0.5), b = pt(1, -0.4, 0.1);
    // |dE/dR| <= sum_i ||H_i||
    double L = 0;
    for (int i = 0; i < 3; ++i) {
        RVec e = RVec::Zero(3);
        e[i] = 1;
        L += (f(e) - f(RVec::Zero(3))).norm();
    }
    auto prev = eigendecompose(f, a);
    for (int k = 1; k <= 200; ++k) {
        RVec R = a + (b - a) * (k / 200.0);
        auto es = eigendecompose(f, R);
        for (int n = 0; n < 4; ++n)
            CHECK(std::abs(es.energies[n] - prev.energies[n]) <= L * (b - a).norm() / 200.0 + 1e-12);
        prev = es;
    }
}

TEST_CASE("coefficient-table family") {
    nlohmann::json t = {{"dim", 2},
                        {"param_dim", 3},
                        {"terms",
                         {{{"powers", {1, 0, 0}}, {"re", {{0, 1}, {1, 0}}}},
                          {{"powers", {0, 1, 0}}, {"im", {{0, -1}, {1, 0}}}},
                          {{"powers", {0, 0, 1}}, {"re", {{1, 0}, {0, -1}}}}}}};
    auto f = families::from_table(t);
    RVec R = pt(0.3, -0.7, 0.2);
    CHECK((f(R) - dot_sigma(Vec3(0.3, -0.7, 0.2))).norm() < 1e-15);
    nlohmann::json bad = t;
    bad["colour"] = 1;
    CHECK_THROWS_AS(families::from_table(bad), ConfigError);
}

TEST_CASE("surfaces") {
    auto s = sphere_surface(Vec3::Zero(), 1.0, 2);
    CHECK_NOTHROW(s.validate());
    auto q = s.quadrisect();
    CHECK_NOTHROW(q.validate());
    ParameterSurface open = s;
    open.triangles.pop_back();
    CHECK_THROWS_AS(open.validate(), GeometryError);
    ParameterSurface flipped = s;
    std::swap(flipped.triangles[0][0], flipped.triangles[0][1]);
    CHECK_THROWS_AS(flipped.validate(), GeometryError);
}

TEST_CASE("loop validation") {
    ParameterLoop l;
    l.points = {pt(0, 0, 1), pt(1, 0, 0), pt(0, 1, 0)};
    l.closed = true;
    CHECK_THROWS_AS(l.validate(), GeometryError);
    l.points.push_back(pt(0, 0, 1));
    CHECK_NOTHROW(l.validate());
}
