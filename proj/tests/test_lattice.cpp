#include "holab/lattice.hpp"

#include <doctest.h>

#include <numeric>
#include <cstdlib>
#include <random>

using namespace holab;
using namespace holab::lattice;

namespace {

std::vector<FluxRational> fluxes(int q_max) {
    std::vector<FluxRational> out;
    for (int q = 1; q <= q_max; ++q)
        for (int p = 1; p <= q; ++p)
            if (std::gcd(p, q) == 1) out.push_back({p, q});
    return out;
}

}  // namespace

TEST_CASE("flux validation") {
    CHECK_THROWS_AS((FluxRational{2, 4}).validate(), DomainError);
    CHECK_THROWS_AS((FluxRational{1, 0}).validate(), DomainError);
    CHECK_THROWS_AS((FluxRational{0, 3}).validate(), DomainError);
    CHECK_NOTHROW((FluxRational{2, 5}).validate());
}

TEST_CASE("Bloch matrix at one third flux and zero momentum") {
    const CMat H = harper_hamiltonian({1, 3}, Vec2::Zero());
    CMat expect(3, 3);
    expect << 2, 1, 1, 1, -1, 1, 1, 1, -1;
    CHECK((H - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("integer flux is a single band") {
    const CMat H = harper_hamiltonian({1, 1}, Vec2(0.3, 0.7));
    REQUIRE(H.rows() == 1);
    CHECK(std::real(H(0, 0)) == doctest::Approx(2 * std::cos(0.3) + 2 * std::cos(0.7)).epsilon(1e-14));
    const ChernReport r = band_chern({1, 1}, 8);
    CHECK(r.per_band[0] == 0);
    CHECK(r.total == 0);
}

TEST_CASE("Bloch matrix is Hermitian and periodic over the magnetic zone") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    for (const FluxRational& f : fluxes(6)) {
        const Vec2 z = magnetic_zone(f);
        for (int s = 0; s < 5; ++s) {
            const Vec2 k(u(rng), u(rng));
            const CMat H = harper_hamiltonian(f, k);
            CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((harper_hamiltonian(f, k + Vec2(z.x(), 0)) - H).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((harper_hamiltonian(f, k + Vec2(0, z.y())) - H).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("exact momentum derivatives match finite differences") {
    const FluxRational f{2, 5};
    const Vec2 k(0.4, 1.3);
    const double h = 1e-5;
    for (int a = 0; a < 2; ++a) {
        const Vec2 dk = h * Vec2::Unit(a);
        const CMat fd = (harper_hamiltonian(f, k + dk) - harper_hamiltonian(f, k - dk)) / (2 * h);
        CHECK((fd - harper_derivative(f, k, a)).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK_THROWS_AS(harper_derivative(f, k, 2), DomainError);
}

TEST_CASE("one third flux: integer Chern numbers equal to the Diophantine labels") {
    const FluxRational f{1, 3};
    const ChernReport r = band_chern(f, 24);
    REQUIRE(r.complete);
    const std::vector<int> expect{1, -2, 1};
    for (int n = 0; n < 3; ++n) {
        REQUIRE(r.per_band[n].has_value());
        CHECK(*r.per_band[n] == expect[n]);
        CHECK(*r.per_band[n] == diophantine_chern(f, n + 1));
        CHECK(std::abs(r.raw[n] - *r.per_band[n]) < 1e-6);
    }
    CHECK(r.total == 0);
    CHECK(diophantine_gap_label(f, 1) == 1);
    CHECK(diophantine_gap_label(f, 3) == 0);
    for (double g : r.gaps) CHECK(g > 1e-2);
}

TEST_CASE("half flux: touching bands flagged") {
    const ChernReport r = band_chern({1, 2}, 24);
    CHECK_FALSE(r.complete);
    REQUIRE(r.touching.size() == 1);
    CHECK(r.touching[0].lower == 0);
    CHECK(r.touching[0].min_gap < 1e-6);
    CHECK_FALSE(r.per_band[0].has_value());
    CHECK(std::isnan(r.raw[0]));
    REQUIRE(r.groups.size() == 1);
    CHECK(r.group_chern[0] == 0);
    CHECK_THROWS_AS(diophantine_gap_label({1, 2}, 1), DomainError);
    CHECK_THROWS_AS(kubo_sigma({1, 2}, 16, 1), DegenerateError);
}

TEST_CASE("Diophantine labels agree with link variables for every flux with q up to 6") {
    for (const FluxRational& f : fluxes(6)) {
        CAPTURE(f.p);
        CAPTURE(f.q);
        const ChernReport r = band_chern(f, 24);
        CHECK(r.total == 0);
        for (size_t g = 0; g < r.groups.size(); ++g) {
            const int lo = r.groups[g].front(), hi = r.groups[g].back() + 1;
            CHECK(r.group_chern[g] == diophantine_gap_label(f, hi) - diophantine_gap_label(f, lo));
            CHECK(std::abs(r.group_raw[g] - r.group_chern[g]) < 1e-6);
        }
        for (int n = 0; n < f.q; ++n)
            if (r.per_band[n]) CHECK(*r.per_band[n] == diophantine_chern(f, n + 1));
        // Even q: only the central pair touches.
        CHECK(r.touching.size() == (f.q % 2 == 0 ? 1u : 0u));
    }
}

TEST_CASE("plaquette sums are invariant under eigenvector rephasing") {
    BandGrid g = band_grid({2, 5}, 24);
    std::vector<double> before;
    for (int n = 0; n < 5; ++n) before.push_back(plaquette_chern(g, n));
    const double composite = plaquette_chern(g, std::vector<int>{1, 2});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (CMat& s : g.states)
        for (int c = 0; c < s.cols(); ++c) s.col(c) *= std::exp(kI * u(rng));
    for (int n = 0; n < 5; ++n) CHECK(std::abs(plaquette_chern(g, n) - before[n]) < 1e-12);
    CHECK(std::abs(plaquette_chern(g, std::vector<int>{1, 2}) - composite) < 1e-12);
}

TEST_CASE("eigen residuals on the mesh") {
    const BandGrid g = band_grid({3, 5}, 12);
    CHECK(g.max_residual < 1e-10);
    CHECK(static_cast<int>(g.energies.size()) == 144);
    CHECK_THROWS_AS(band_grid({1, 3}, 1), DomainError);
}

TEST_CASE("Kubo per band equals the link-variable Chern number") {
    const FluxRational f{1, 3};
    const ChernReport r = band_chern(f, 24);
    for (int n = 0; n < 3; ++n) {
        const KuboConvergence k = kubo_band_converged(f, 24, n);
        CHECK(std::abs(k.sigma - *r.per_band[n]) < 1e-6);
        CHECK(k.change < 1e-6);
    }
}

TEST_CASE("Kubo Hall conductance by filling") {
    const FluxRational f{1, 3};
    CHECK(kubo_sigma(f, 48, 0) == 0.0);
    CHECK(kubo_sigma(f, 48, 3) == 0.0);
    CHECK(kubo_sigma(f, 48, 1) == doctest::Approx(diophantine_gap_label(f, 1)).epsilon(1e-6));
    CHECK(kubo_sigma(f, 48, 2) == doctest::Approx(diophantine_gap_label(f, 2)).epsilon(1e-6));
    CHECK(std::abs(kubo_sigma(f, 48, 1) - kubo_sigma(f, 96, 1)) < 1e-6);
    CHECK_THROWS_AS(kubo_sigma(f, 48, 4), DomainError);
}

TEST_CASE("butterfly sweep") {
    const auto pts = butterfly(4, 2);
    // 1 + 2 + 2*3 + 2*4 bands, 4 k points each.
    CHECK(pts.size() == 17u * 4u);
    for (const auto& b : pts) CHECK(std::abs(b.energy) <= 4.0 + 1e-12);
    const auto again = butterfly(4, 2);
    for (size_t i = 0; i < pts.size(); ++i) CHECK(pts[i].energy == again[i].energy);
    CHECK_THROWS_AS(butterfly(0), DomainError);
}

TEST_CASE("threaded mesh is identical to the serial one") {
    const BandGrid serial = band_grid({2, 5}, 16);
    setenv("HOLAB_THREADS", "3", 1);
    const BandGrid threaded = band_grid({2, 5}, 16);
    unsetenv("HOLAB_THREADS");
    CHECK(thread_count() == 1);
    for (size_t i = 0; i < serial.energies.size(); ++i) {
        CHECK(serial.energies[i] == threaded.energies[i]);
        CHECK(serial.states[i] == threaded.states[i]);
    }
    CHECK(serial.max_residual == threaded.max_residual);
}
