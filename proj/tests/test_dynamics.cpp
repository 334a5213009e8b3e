#include "holab/abelian.hpp"
#include "holab/dynamics.hpp"

#include <doctest.h>

#include <random>

using namespace holab;
using namespace holab::dynamics;
namespace fam = holab::spectral::families;

namespace {

RVec pt(double x, double y, double z) {
    RVec r(3);
    r << x, y, z;
    return r;
}

RVec cone_point(double th, double s) {
    return pt(std::sin(th) * std::cos(2 * kPi * s), std::sin(th) * std::sin(2 * kPi * s), std::cos(th));
}

CMat random_hermitian(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> g;
    CMat A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = cplx(g(rng), g(rng));
    return 0.5 * (A + A.adjoint());
}

CMat expm_reference(const CMat& H, double dt) {
    // Taylor series with scaling and squaring
    int sq = 0;
    CMat A = -kI * H * dt;
    while (A.cwiseAbs().maxCoeff() > 0.1) {
        A /= 2.0;
        ++sq;
    }
    CMat E = CMat::Identity(H.rows(), H.cols()), term = E;
    for (int k = 1; k < 25; ++k) {
        term = term * A / static_cast<double>(k);
        E += term;
    }
    for (int i = 0; i < sq; ++i) E = E * E;
    return E;
}

TrajectoryRecord curve_samples(const std::function<double(double)>& clock, int N) {
    // fixed projective curve psi(s) = exp(-i (s A + s^2 B)) psi0 sampled at s = clock(k/N)
    std::mt19937_64 rng(4);
    const CMat A = random_hermitian(rng, 3), B = random_hermitian(rng, 3);
    CVec psi0(3);
    psi0 << 1, cplx(0.2, 0.3), -0.5;
    psi0.normalize();
    TrajectoryRecord tr;
    for (int k = 0; k <= N; ++k) {
        const double s = clock(static_cast<double>(k) / N);
        tr.times.push_back(s);
        tr.states.push_back(expm_reference(s * A + s * s * B, 1.0) * psi0);
    }
    return tr;
}

}  // namespace

TEST_CASE("unitary step matches the matrix exponential") {
    std::mt19937_64 rng(2);
    for (int d : {2, 3, 5}) {
        const CMat H = random_hermitian(rng, d);
        const CMat U = unitary_step(H, 0.37);
        CHECK((U - expm_reference(H, 0.37)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((U.adjoint() * U - CMat::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("constant Hamiltonian eigenstate only acquires a dynamical phase") {
    auto f = fam::random_linear(3, 9);
    const RVec R = pt(0.3, 0.1, -0.4);
    auto es = spectral::eigendecompose(f, R);
    Schedule s{[&](double) { return R; }, 0.1, 200};
    auto tr = propagate(f, s, es.states.col(1));
    const double T = s.duration();
    const CVec expect = std::exp(cplx(0, -es.energies[1] * T)) * es.states.col(1);
    CHECK((tr.states.back() - expect).cwiseAbs().maxCoeff() < 1e-8);
    auto p = aa_phase(tr, true);
    CHECK(std::abs(p.geometric) < 1e-10);
    CHECK(p.dynamical == doctest::Approx(-es.energies[1] * T).epsilon(1e-10));
    // energy conservation for a static Hamiltonian
    const CMat H = f(R);
    const double E0 = tr.states.front().dot(H * tr.states.front()).real();
    for (const auto& psi : tr.states) CHECK(std::abs(psi.dot(H * psi).real() - E0) < 1e-8);
}

TEST_CASE("norm is conserved over 1e5 steps") {
    auto H = [](double t) {
        return CMat(dot_sigma(Vec3(std::cos(3 * t), 0.5 * std::sin(7 * t), 1.0 + 0.3 * std::sin(t))));
    };
    CVec psi0(2);
    psi0 << cplx(0.6, 0.0), cplx(0.0, 0.8);
    auto tr = propagate_fixed(H, 0.0, 100.0, psi0, 100000, 1000);
    for (double n : tr.norms) CHECK(std::abs(n - 1.0) < 1e-9);
}

TEST_CASE("propagation rejects bad input") {
    auto z = fam::zeeman();
    Schedule s{[](double) { return pt(0, 0, 1); }, 0.1, 10};
    CVec bad = CVec::Zero(2);
    bad[0] = 2;
    CHECK_THROWS_AS(propagate(z, s, bad), DomainError);
    CHECK_THROWS_AS(propagate(z, Schedule{s.path, -1.0, 10}, CVec::Unit(2, 0)), DomainError);
    auto nan_H = [](double) { return CMat::Constant(2, 2, std::nan("")); };
    CHECK_THROWS_AS(propagate_fixed(nan_H, 0, 1, CVec::Unit(2, 0), 10), ModelError);
}

TEST_CASE("geometric phase ignores per-sample phase redecoration") {
    auto tr = curve_samples([](double u) { return u; }, 2000);
    const double g0 = aa_phase(tr).geometric;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    for (auto& psi : tr.states) psi *= std::exp(cplx(0, ph(rng)));
    CHECK(std::abs(wrap_phase(aa_phase(tr).geometric - g0)) < 1e-10);
}

TEST_CASE("geometric phase ignores the traversal clock") {
    auto a = curve_samples([](double u) { return u; }, 20000);
    auto b = curve_samples([](double u) { return u + 0.15 * std::sin(2 * kPi * u) / (2 * kPi) * 4 * u * (1 - u); }, 20000);
    CHECK(std::abs(wrap_phase(aa_phase(a).geometric - aa_phase(b).geometric)) < 1e-8);
    CHECK(std::abs(aa_phase(a).geometric) > 1e-2);
}

TEST_CASE("open-path phase equals the geodesically closed phase") {
    auto tr = curve_samples([](double u) { return u; }, 4000);
    std::vector<CVec> loop = tr.states;
    for (int k = 1; k <= 200; ++k)
        loop.push_back(abelian::geodesic_state(tr.states.back(), tr.states.front(), k / 200.0));
    const double closed = abelian::berry_phase_discrete(loop, true).phase;
    CHECK(std::abs(wrap_phase(aa_phase(tr).geometric - closed)) < 1e-6);
}

TEST_CASE("closed mode needs overlapping endpoints") {
    TrajectoryRecord tr;
    for (int k = 0; k <= 100; ++k) {
        const double a = 0.5 * kPi * k / 100;
        CVec v(2);
        v << std::cos(a), std::sin(a);
        tr.states.push_back(v);
        tr.times.push_back(k);
    }
    CHECK_THROWS_AS(aa_phase(tr, true), OverlapError);
    CHECK_NOTHROW(aa_phase(tr, false));
}

TEST_CASE("slow cone cycle approaches the adiabatic phase") {
    auto z = fam::zeeman();
    auto cycle = [](double s) { return cone_point(kPi / 3, s); };
    auto rows = adiabatic_error_scan(z, cycle, 1, {0.02, 0.01, 0.005}, 400);
    REQUIRE(rows.size() == 3);
    for (size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].leakage < rows[i - 1].leakage);
        CHECK(rows[i].phase_error < rows[i - 1].phase_error);
    }
    // two-level Richardson extrapolation in epsilon
    const double r1 = 2 * rows[1].geometric - rows[0].geometric;
    const double r2 = 2 * rows[2].geometric - rows[1].geometric;
    CHECK(std::abs((4 * r2 - r1) / 3 + kPi / 2) < 1e-2);
}

TEST_CASE("leakage of an analytic sweep is exponentially small") {
    auto B = sech_pulse(1.0, 1.1268);
    std::vector<double> x, y;
    for (double eps : {0.08, 0.1, 0.125, 0.15, 0.2, 0.25}) {
        auto r = exact_lower_state_phase(B, eps, 60, 40000);
        x.push_back(1 / eps);
        y.push_back(std::log(r.transition));
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i], syy += y[i] * y[i];
    const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
    // the field was scaled so that the transition exponent is 2/eps
    CHECK(cxy / cxx == doctest::Approx(-2.0).epsilon(0.1));
    CHECK(cxy * cxy / (cxx * cyy) > 0.995);
}

TEST_CASE("superadiabatic series") {
    const double eps = 0.1;
    auto B = sech_pulse(1.0, 1.1268);
    // computed once; doctest re-enters the test case for every subcase
    static const SuperadiabaticSeries s = [&] {
        SuperadiabaticOptions opt;
        opt.half_width = 60;
        opt.grid = 4096;
        return superadiabatic_iterate(B, eps, 16, opt);
    }();
    REQUIRE(s.terms.size() == 17);

    SUBCASE("first term is the ordinary geometric phase") {
        std::vector<RVec> pts;
        const int M = 40000;
        for (int j = 0; j <= M; ++j) {
            const Vec3 b = B.eval(-60 + 120.0 * j / M);
            pts.push_back(pt(b[0], b[1], b[2]));
        }
        pts.back() = pts.front();
        auto states = abelian::band_states(fam::zeeman(), 0, pts);
        const double g = abelian::berry_phase_discrete(states, true).phase;
        CHECK(std::abs(wrap_phase(s.terms[0] - g)) < 1e-6);
    }
    SUBCASE("terms fall then rise with the smallest near 1/eps") {
        CHECK(s.optimal_k >= 7);
        CHECK(s.optimal_k <= 13);
        for (int k = 1; k < s.optimal_k - 1; ++k) CHECK(std::abs(s.terms[k]) < std::abs(s.terms[k - 1]));
        CHECK(std::abs(s.terms.back()) > std::abs(s.terms[s.optimal_k]));
        for (double b : s.min_field) CHECK(b > 0.0);
    }
    SUBCASE("optimal truncation beats the adiabatic phase") {
        auto ex = exact_lower_state_phase(B, eps, 60, 100000);
        const double e0 = std::abs(wrap_phase(s.truncated_phase[0] - ex.phase));
        const double eopt = std::abs(wrap_phase(s.truncated_phase[s.optimal_k] - ex.phase));
        CHECK(e0 > 1e-3);
        CHECK(eopt < 1e-3 * e0);
    }
}

TEST_CASE("superadiabatic iteration reports a vanishing field") {
    FieldSchedule bad;
    bad.eval = [](double t) { return Vec3(std::exp(-t * t), 0.0, std::tanh(t)); };
    SuperadiabaticOptions opt;
    opt.half_width = 20;
    opt.grid = 512;
    // the field passes through the -z hemisphere, so the start frame breaks down immediately
    CHECK_THROWS_AS(superadiabatic_iterate(bad, 0.1, 3, opt), NumericalError);
}

TEST_CASE("Landau-Zener and planar sweeps have no geometric amplitude") {
    const std::vector<double> eps = {0.1, 0.13, 0.17, 0.22, 0.3};
    auto lz = geometric_amplitude_fit([](double t) { return Vec3(0.5, 0.5, t); }, eps, 40, 400000);
    CHECK(std::abs(lz.intercept) < 0.01);
    CHECK(lz.r2 > 0.999);
    // exact Landau-Zener exponent: P = exp(-pi |Delta|^2 / (eps A)) with |Delta|^2 = 0.5
    CHECK(lz.slope == doctest::Approx(-kPi * 0.5).epsilon(1e-2));
    auto planar = geometric_amplitude_fit([](double t) { return Vec3(0.5 + 0.02 * t * t / (1 + 0.01 * t * t), 0.0, t); },
                                          eps, 40, 400000);
    CHECK(std::abs(planar.intercept) < 0.02);
}

TEST_CASE("unresolvable transition probability is reported") {
    CHECK_THROWS_AS(transition_probability([](double t) { return Vec3(1.0, 0.0, t); }, 0.02, 30, 200000),
                    PrecisionError);
}

TEST_CASE("spectrum locates a pure tone") {
    const double dt = 0.1, w = 1.2345;
    std::vector<double> x;
    for (int j = 0; j < 4096; ++j) x.push_back(std::cos(w * j * dt) + 0.3 * std::cos(2.5 * j * dt));
    auto r = spectrum(x, dt);
    REQUIRE(r.peaks.size() >= 2);
    CHECK(std::abs(r.peaks[0].frequency - w) < 0.1 * r.bin);
    CHECK(std::abs(r.peaks[1].frequency - 2.5) < 0.1 * r.bin);
    for (size_t i = 1; i < r.peaks.size(); ++i) CHECK(r.peaks[i].height <= r.peaks[i - 1].height);
}

TEST_CASE("NMR precession peak and its geometric shift") {
    NmrShiftConfig c;
    c.period = 0;
    c.duration = 4000;
    auto still = nmr_shift_scenario(c);
    CHECK(std::abs(still.measured - still.omega_rot) < still.spectrum.bin);

    c.period = 200;
    c.duration = 8000;
    auto a = nmr_shift_scenario(c);
    CHECK(std::abs(a.alpha + 2 * kPi * (1 - std::cos(c.cone_angle))) < 1e-6);
    CHECK(std::abs(a.measured - a.expected) < a.spectrum.bin);
    CHECK(std::abs(a.measured - a.omega_rot) > 3 * a.spectrum.bin);
    CHECK_FALSE(a.spectrum.adiabatic_warning);

    c.period = 400;
    c.duration = 16000;
    auto b = nmr_shift_scenario(c);
    CHECK(std::abs(b.measured - b.expected) < b.spectrum.bin);
    CHECK((b.measured - b.omega_rot) / (a.measured - a.omega_rot) == doctest::Approx(0.5).epsilon(0.05));

    c.period = 20;
    c.duration = 800;
    CHECK(nmr_shift_scenario(c).spectrum.adiabatic_warning);
}

TEST_CASE("NQR lines without and with rotation") {
    TyckoConfig c;
    c.duration = 10000;
    c.omega_r = 0.0;
    auto still = nqr_tycko_scenario(c);
    REQUIRE(still.band.size() == 1);
    CHECK(std::abs(still.band[0].frequency - 2 * c.omega_q) < still.spectrum.bin);

    // magic-angle rotation: lines at 2wQ and 2wQ +- s wR with s linear in wR
    std::vector<double> split;
    for (double wr : {0.01, 0.02}) {
        c.omega_r = wr;
        auto r = nqr_tycko_scenario(c);
        REQUIRE(r.band.size() == 3);
        CHECK(std::abs(r.band[1].frequency - 2 * c.omega_q) < r.spectrum.bin);
        split.push_back(0.5 * (r.band[2].frequency - r.band[0].frequency));
    }
    CHECK(split[1] / split[0] == doctest::Approx(2.0).epsilon(0.02));
    CHECK(split[0] == doctest::Approx(std::sqrt(3.0) * 0.01).epsilon(0.02));
}
