#include "holab/abelian.hpp"
#include "holab/nonabelian.hpp"

#include <doctest.h>

#include <random>

using namespace holab;
using namespace holab::nonabelian;
namespace fam = holab::spectral::families;

namespace {

RVec pt(double x, double y, double z) {
    RVec r(3);
    r << x, y, z;
    return r;
}

RVec sph(double th, double ph) { return pt(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)); }

CMat random_unitary(std::mt19937_64& rng, int r) {
    std::normal_distribution<double> g;
    CMat M(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) M(i, j) = cplx(g(rng), g(rng));
    return polar_unitary(M);
}

LevelGroup spin_label_group(std::vector<int> levels) {
    LevelGroup g;
    g.levels = std::move(levels);
    g.label = [](const ParameterPoint& R) {
        auto S = spectral::spin_matrices(1.5);
        const Vec3 n = Vec3(R[0], R[1], R[2]).normalized();
        return CMat(n[0] * S[0] + n[1] * S[1] + n[2] * S[2]);
    };
    return g;
}

ParameterLoop cone(double th, int N) {
    ParameterLoop C;
    for (int k = 0; k <= N; ++k) C.points.push_back(sph(th, 2 * kPi * k / N));
    C.points.back() = C.points.front();
    return C;
}

double unitarity_defect(const CMat& U) {
    return (U.adjoint() * U - CMat::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

// -i sum_m [<j|dxH|m><m|dyH|k> - (x<->y)] / (E - E_m)^2 over levels m outside the multiplet
CMat curvature_oracle(const spectral::HamiltonianFamily& f, const LevelGroup& g, const ParameterPoint& R, int a,
                      int b) {
    const CMat F = multiplet_basis(f, g, R);
    auto es = spectral::eigendecompose(f, R);
    const double h = 1e-6;
    auto dH = [&](int c) {
        ParameterPoint p = R, m = R;
        p[c] += h;
        m[c] -= h;
        return CMat((f(p) - f(m)) / (2 * h));
    };
    const CMat Ha = dH(a), Hb = dH(b);
    const double E = es.energies[g.levels[0]];
    const int r = static_cast<int>(F.cols());
    CMat V = CMat::Zero(r, r);
    for (int m = 0; m < f.dim(); ++m) {
        if (std::find(g.levels.begin(), g.levels.end(), m) != g.levels.end()) continue;
        const CVec v = es.states.col(m);
        const double w = 1.0 / std::pow(E - es.energies[m], 2);
        const CVec pa = F.adjoint() * Ha * v, pb = F.adjoint() * Hb * v;
        V += -kI * w * (pa * pb.adjoint() - pb * pa.adjoint());
    }
    return V;
}

}  // namespace

TEST_CASE("single-level frame matches the gauge-fixed eigenvector") {
    auto f = fam::random_linear(4, 11);
    LevelGroup g{{2}, {}};
    const RVec R = pt(0.3, -0.2, 0.7);
    const CMat F = multiplet_basis(f, g, R);
    auto es = spectral::eigendecompose(f, R);
    CHECK((F.col(0) - es.states.col(2)).norm() < 1e-12);
}

TEST_CASE("multiplet projector is independent of the frame choice") {
    auto f = fam::quadrupole();
    const RVec R = pt(0.4, -0.1, 0.9);
    std::mt19937_64 rng(5);
    for (auto lv : {std::vector<int>{0, 1}, std::vector<int>{2, 3}}) {
        const CMat F = multiplet_basis(f, LevelGroup{lv, {}}, R);
        CHECK(F.cols() == 2);
        CHECK((F.adjoint() * F - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
        const CMat W = random_unitary(rng, 2);
        const CMat G = F * W.adjoint();
        CHECK((G * G.adjoint() - F * F.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        // spans the eigenspace
        const CMat H = f(R);
        const double E = spectral::eigendecompose(f, R).energies[lv[0]];
        CHECK((H * F - E * F).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("multiplet errors") {
    auto f = fam::quadrupole();
    const RVec R = pt(0, 0, 1);
    CHECK_THROWS_AS(multiplet_basis(f, LevelGroup{{1, 2}, {}}, R), MultipletError);
    CHECK_THROWS_AS(multiplet_basis(f, LevelGroup{{0}, {}}, R), MultipletError);
    CHECK_THROWS_AS(multiplet_basis(f, LevelGroup{{0, 2}, {}}, R), MultipletError);
    CHECK_THROWS_AS(multiplet_basis(f, LevelGroup{{3, 4}, {}}, R), MultipletError);
    CHECK_THROWS_AS(multiplet_basis(f, LevelGroup{{}, {}}, R), MultipletError);
}

TEST_CASE("scalar connection equals the abelian connection") {
    auto f = fam::random_linear(4, 3);
    const RVec R = pt(0.2, 0.5, -0.4);
    for (int n = 0; n < 4; ++n) {
        auto mc = connection_matrices(f, LevelGroup{{n}, {}}, R);
        auto ab = abelian::berry_connection_fd(f, n, R);
        for (int a = 0; a < 3; ++a) CHECK(std::abs(mc.A[a](0, 0) - ab.A[a]) < 1e-8);
        CHECK(mc.antihermitian_residual < 1e-6);
    }
}

TEST_CASE("scalar wilson loop equals the discrete abelian phase") {
    auto z = fam::zeeman();
    const auto C = cone(kPi / 3, 400);
    auto U = wilson_loop(z, LevelGroup{{1}, {}}, C);
    auto ab = abelian::berry_phase_discrete(abelian::band_states(z, 1, C.points), true);
    CHECK(std::abs(U.U(0, 0) - std::exp(kI * ab.phase)) < 1e-8);
    CHECK(std::arg(U.U(0, 0)) == doctest::Approx(-kPi / 2).epsilon(1e-4));

    auto f = fam::random_linear(3, 21);
    ParameterLoop L;
    for (int k = 0; k <= 300; ++k) {
        const double s = 2 * kPi * k / 300;
        L.points.push_back(pt(0.4 * std::cos(s), 0.3 * std::sin(s), 0.1 * std::sin(2 * s)));
    }
    L.points.back() = L.points.front();
    for (int n = 0; n < 3; ++n) {
        auto W = wilson_loop(f, LevelGroup{{n}, {}}, L);
        auto ph = abelian::berry_phase_discrete(abelian::band_states(f, n, L.points), true);
        CHECK(std::abs(W.U(0, 0) - std::exp(kI * ph.phase)) < 1e-8);
    }
}

TEST_CASE("quadrupole 3/2 doublet has a diagonal connection, the 1/2 doublet does not") {
    auto f = fam::quadrupole();
    const RVec R = sph(0.8, 0.3);
    auto hi = connection_matrices(f, spin_label_group({2, 3}), R);
    for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(hi.A[a](0, 1)) < 1e-9);
        CHECK(std::abs(hi.A[a](1, 0)) < 1e-9);
    }
    auto lo = connection_matrices(f, spin_label_group({0, 1}), R);
    double off = 0;
    for (int a = 0; a < 3; ++a) off = std::max(off, std::abs(lo.A[a](0, 1)));
    CHECK(off > 0.1);
    for (int a = 0; a < 3; ++a) CHECK((lo.A[a] - lo.A[a].adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quadrupole 3/2 doublet cone holonomy is diagonal with conjugate phases") {
    auto f = fam::quadrupole();
    const double th = kPi / 3;
    auto h = wilson_loop_refined(
        f, spin_label_group({2, 3}), [&](double s) { return sph(th, 2 * kPi * s); }, 1e-10, 1024, 1 << 20);
    CHECK(std::abs(h.U(0, 1)) < 1e-8);
    CHECK(std::abs(h.U(1, 0)) < 1e-8);
    const double omega = 2 * kPi * (1 - std::cos(th));
    CHECK(std::abs(h.U(0, 0) - std::exp(-kI * 1.5 * omega)) < 1e-8);
    CHECK(std::abs(h.U(1, 1) - std::conj(h.U(0, 0))) < 1e-8);
    CHECK(unitarity_defect(h.U) < 1e-10);
}

TEST_CASE("curvature matrix matches the perturbation-sum oracle") {
    auto f = fam::quadrupole();
    for (auto lv : {std::vector<int>{0, 1}, std::vector<int>{2, 3}}) {
        for (const RVec& R : {sph(0.7, 0.2), sph(2.1, -1.3), RVec(pt(0.3, 0.8, -1.2))}) {
            LevelGroup g{lv, {}};
            auto cm = curvature_matrix(f, g, R);
            const CMat ox = curvature_oracle(f, g, R, 1, 2), oy = curvature_oracle(f, g, R, 2, 0),
                       oz = curvature_oracle(f, g, R, 0, 1);
            const double scale = std::max({ox.norm(), oy.norm(), oz.norm()});
            CHECK((cm.V[0] - ox).cwiseAbs().maxCoeff() < 1e-5 * scale);
            CHECK((cm.V[1] - oy).cwiseAbs().maxCoeff() < 1e-5 * scale);
            CHECK((cm.V[2] - oz).cwiseAbs().maxCoeff() < 1e-5 * scale);
            CHECK(cm.antihermitian_residual < 1e-6);
        }
    }
}

TEST_CASE("scalar curvature matrix equals the abelian curvature") {
    auto f = fam::random_linear(4, 8);
    const RVec R = pt(-0.3, 0.1, 0.6);
    for (int n = 0; n < 4; ++n) {
        auto cm = curvature_matrix(f, LevelGroup{{n}, {}}, R);
        auto ab = abelian::berry_curvature(f, n, R, abelian::CurvatureMethod::PerturbationSum);
        for (int a = 0; a < 3; ++a)
            CHECK(cm.V[a](0, 0).real() == doctest::Approx(ab.V[a]).epsilon(1e-6).scale(ab.V.norm()));
    }
}

TEST_CASE("curvature transforms covariantly between frame choices") {
    auto f = fam::quadrupole();
    const RVec R = sph(1.1, 0.4);
    for (auto lv : {std::vector<int>{0, 1}, std::vector<int>{2, 3}}) {
        LevelGroup plain{lv, {}};
        auto labelled = spin_label_group(lv);
        const CMat Fp = multiplet_basis(f, plain, R), Fl = multiplet_basis(f, labelled, R);
        const CMat G = Fl.adjoint() * Fp;  // Fp = Fl G
        auto Vp = curvature_matrix(f, plain, R), Vl = curvature_matrix(f, labelled, R);
        for (int a = 0; a < 3; ++a) CHECK((Vp.V[a] - G.adjoint() * Vl.V[a] * G).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("small square loop reproduces the curvature flux") {
    auto f = fam::quadrupole();
    LevelGroup g{{0, 1}, {}};
    const RVec R0 = pt(0.3, -0.2, 0.8);
    auto err_for = [&](double h) {
        auto square = [&](double s) {
            // counterclockwise in the xy plane starting at the corner R0
            RVec p = R0;
            const double t = 4 * s;
            if (t < 1) p[0] += h * t;
            else if (t < 2) p[0] += h, p[1] += h * (t - 1);
            else if (t < 3) p[0] += h * (3 - t), p[1] += h;
            else p[1] += h * (4 - t);
            return p;
        };
        ParameterLoop C;
        const int N = 256;
        for (int k = 0; k <= N; ++k) C.points.push_back(square(static_cast<double>(k) / N));
        C.points.back() = C.points.front();
        const CMat U = wilson_loop(f, g, C).U;
        RVec mid = R0;
        mid[0] += h / 2;
        mid[1] += h / 2;
        // curvature at the centre, expressed in the frame at the start corner
        const CMat Fc = multiplet_basis(f, g, mid), F0 = multiplet_basis(f, g, R0);
        const CMat G = polar_unitary(F0.adjoint() * Fc);
        const CMat V = G * curvature_matrix(f, g, mid).V[2] * G.adjoint();
        return (U - (CMat::Identity(2, 2) - kI * V * h * h)).cwiseAbs().maxCoeff();
    };
    const double e1 = err_for(2e-2), e2 = err_for(1e-2);
    const double order = std::log2(e1 / e2);
    CHECK(order > 2.7);
    CHECK(e2 < 1e-4);
}

TEST_CASE("gauge covariance of the wilson loop") {
    auto f = fam::quadrupole();
    LevelGroup g{{0, 1}, {}};
    ParameterLoop C;
    const int N = 600;
    for (int k = 0; k <= N; ++k) {
        const double s = 2 * kPi * k / N;
        C.points.push_back(pt(0.6 * std::cos(s), 0.4 * std::sin(s), 0.5 + 0.3 * std::sin(2 * s)));
    }
    C.points.back() = C.points.front();
    std::mt19937_64 rng(17);

    auto id = gauge_covariance_check(f, g, C, [](int) { return CMat(CMat::Identity(2, 2)); });
    CHECK((id.U - id.U_remixed).cwiseAbs().maxCoeff() == 0.0);

    const CMat W0 = random_unitary(rng, 2);
    auto rc = gauge_covariance_check(f, g, C, [&](int) { return W0; });
    CHECK(rc.conjugation_residual < 1e-10);
    CHECK(rc.eigenvalue_distance < 1e-10);

    std::vector<CMat> Ws;
    for (int k = 0; k < N; ++k) Ws.push_back(random_unitary(rng, 2));
    auto rv = gauge_covariance_check(f, g, C, [&](int k) { return Ws[k]; });
    CHECK(rv.conjugation_residual < 1e-10);
    CHECK(rv.eigenvalue_distance < 1e-10);
    CHECK(unitarity_defect(rv.U_remixed) < 1e-10);
    // the holonomy of this doublet is genuinely nonabelian
    CHECK(std::abs(rv.U(0, 1)) > 1e-3);
}

TEST_CASE("reversal, unitarity and composition") {
    auto f = fam::quadrupole();
    LevelGroup g{{0, 1}, {}};
    ParameterLoop C;
    const int N = 500;
    for (int k = 0; k <= N; ++k) {
        const double s = 2 * kPi * k / N;
        C.points.push_back(pt(0.5 + 0.4 * std::cos(s), 0.4 * std::sin(s), 0.6 + 0.2 * std::cos(3 * s)));
    }
    C.points.back() = C.points.front();
    auto fw = wilson_loop(f, g, C);
    ParameterLoop Cr = C;
    std::reverse(Cr.points.begin(), Cr.points.end());
    auto bw = wilson_loop(f, g, Cr);
    CHECK((bw.U - fw.U.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(unitarity_defect(fw.U) < 1e-10);
    CHECK(std::abs(std::abs(fw.U.determinant()) - 1.0) < 1e-10);

    std::vector<CMat> frames;
    for (auto& p : C.points) frames.push_back(multiplet_basis(f, g, p));
    const int mid = N / 2;
    std::vector<CMat> a(frames.begin(), frames.begin() + mid + 1), b(frames.begin() + mid, frames.end());
    CHECK((ordered_product(frames) - ordered_product(b) * ordered_product(a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("traversal rate does not change the holonomy") {
    auto f = fam::quadrupole();
    LevelGroup g{{0, 1}, {}};
    auto c = [](double s) {
        const double t = 2 * kPi * s;
        return pt(0.6 * std::cos(t), 0.5 * std::sin(t), 0.7);
    };
    auto uni = wilson_loop_refined(f, g, c, 1e-9);
    auto warped = wilson_loop_refined(f, g, [&](double s) { return c(s + 0.12 * std::sin(2 * kPi * s)); }, 1e-9);
    CHECK((uni.U - warped.U).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(uni.refinement_error < 1e-9);
}

TEST_CASE("orthogonal jump breaks transport") {
    CMat A = CMat::Zero(4, 2), B = CMat::Zero(4, 2);
    A(0, 0) = A(1, 1) = 1;
    B(2, 0) = B(3, 1) = 1;
    CHECK_THROWS_AS(ordered_product({A, B, A}), TransportError);
    CMat Cm = A;
    Cm.col(1) = B.col(0);
    CHECK_THROWS_AS(ordered_product({A, Cm}), TransportError);
}

TEST_CASE("eigenphases of a diagonal unitary") {
    CMat U = CMat::Zero(3, 3);
    U(0, 0) = std::exp(kI * 0.3);
    U(1, 1) = std::exp(-kI * 2.0);
    U(2, 2) = std::exp(kI * 1.1);
    auto p = eigenphases(U);
    REQUIRE(p.size() == 3);
    CHECK(p[0] == doctest::Approx(-2.0));
    CHECK(p[1] == doctest::Approx(0.3));
    CHECK(p[2] == doctest::Approx(1.1));
}
