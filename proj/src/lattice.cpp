#include "holab/lattice.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace holab::lattice {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

void check_nk(int nk) {
    if (nk < 2) throw DomainError("k mesh needs at least 2 points per side");
}

struct Eig {
    RVec E;
    CMat U;
};

Eig diagonalize(const CMat& H) {
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("Bloch matrix diagonalization failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

double gap_at(const FluxRational& flux, const Vec2& k, int n, const HarperPotential& pot) {
    Eigen::SelfAdjointEigenSolver<CMat> es(harper_hamiltonian(flux, k, pot), Eigen::EigenvaluesOnly);
    return es.eigenvalues()[n + 1] - es.eigenvalues()[n];
}

cplx link(const CMat& a, const CMat& b, const std::vector<int>& bands) {
    const int m = static_cast<int>(bands.size());
    CMat S(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) S(r, c) = a.col(bands[r]).dot(b.col(bands[c]));
    const cplx d = m == 1 ? S(0, 0) : S.determinant();
    if (std::abs(d) < 1e-12) throw AccuracyError("link variable vanishes; refine the k mesh");
    return d / std::abs(d);
}

struct PlaquetteSum {
    double chern = 0.0;
    double max_angle = 0.0;
};

PlaquetteSum plaquettes(const BandGrid& g, const std::vector<int>& bands) {
    const int nk = g.nk;
    std::vector<cplx> ux(nk * nk), uy(nk * nk);
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
            const CMat& s = g.states[g.index(i, j)];
            ux[g.index(i, j)] = link(s, g.states[g.index(i + 1, j)], bands);
            uy[g.index(i, j)] = link(s, g.states[g.index(i, j + 1)], bands);
        }
    PlaquetteSum out;
    double sum = 0.0;
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
            const cplx w = ux[g.index(i, j)] * uy[g.index(i + 1, j)] * std::conj(ux[g.index(i, j + 1)]) *
                           std::conj(uy[g.index(i, j)]);
            const double f = std::arg(w);
            sum += f;
            out.max_angle = std::max(out.max_angle, std::abs(f));
        }
    out.chern = sum / kTwoPi;
    return out;
}

// Band curvature from dH/dk matrix elements in the eigenbasis, restricted to partners in `others`.
double kubo_curvature(const Eig& e, const CMat& hx, const CMat& hy, int n, const std::vector<int>& others) {
    const CVec un = e.U.col(n);
    const CVec xn = hx * un, yn = hy * un;
    double v = 0.0;
    for (int m : others) {
        if (m == n) continue;
        const CVec um = e.U.col(m);
        const cplx a = xn.dot(um);  // <n|Hx|m>
        const cplx b = um.dot(yn);  // <m|Hy|n>
        const double d = e.E[n] - e.E[m];
        v += 2.0 * std::imag(a * b) / (d * d);
    }
    return v;
}

void check_band(const FluxRational& flux, int band) {
    if (band < 0 || band >= flux.q) throw DomainError("band index out of range");
}

}  // namespace

void FluxRational::validate() const {
    if (q < 1) throw DomainError("flux denominator must be positive");
    if (p < 1) throw DomainError("flux numerator must be positive");
    if (std::gcd(p, q) != 1) throw DomainError("flux p/q must be in lowest terms");
}

Vec2 magnetic_zone(const FluxRational& flux) {
    flux.validate();
    return Vec2(kTwoPi / flux.q, kTwoPi);
}

Vec2 wrap_to_zone(const FluxRational& flux, const Vec2& k) {
    const Vec2 z = magnetic_zone(flux);
    Vec2 w;
    for (int a = 0; a < 2; ++a) {
        w[a] = std::fmod(k[a], z[a]);
        if (w[a] < 0) w[a] += z[a];
        if (w[a] >= z[a]) w[a] = 0.0;
    }
    return w;
}

CMat harper_hamiltonian(const FluxRational& flux, const Vec2& k, const HarperPotential& pot) {
    flux.validate();
    const int q = flux.q;
    CMat H = CMat::Zero(q, q);
    for (int j = 0; j < q; ++j) H(j, j) = 2.0 * pot.ty * std::cos(k.y() - kTwoPi * flux.p * j / q);
    for (int j = 0; j < q; ++j) {
        const int l = (j + 1) % q;
        const cplx t = j == q - 1 ? pot.tx * std::exp(kI * (q * k.x())) : cplx(pot.tx);
        H(j, l) += t;
        H(l, j) += std::conj(t);
    }
    return H;
}

CMat harper_derivative(const FluxRational& flux, const Vec2& k, int axis, const HarperPotential& pot) {
    flux.validate();
    const int q = flux.q;
    CMat D = CMat::Zero(q, q);
    if (axis == 0) {
        const cplx t = kI * (pot.tx * q) * std::exp(kI * (q * k.x()));
        D(q - 1, 0) += t;
        D(0, q - 1) += std::conj(t);
    } else if (axis == 1) {
        for (int j = 0; j < q; ++j) D(j, j) = -2.0 * pot.ty * std::sin(k.y() - kTwoPi * flux.p * j / q);
    } else {
        throw DomainError("derivative axis must be 0 or 1");
    }
    return D;
}

Vec2 BandGrid::k(int i, int j) const {
    const Vec2 z = magnetic_zone(flux);
    return Vec2(z.x() * i / nk, z.y() * j / nk);
}

BandGrid band_grid(const FluxRational& flux, int nk, const HarperPotential& pot) {
    flux.validate();
    check_nk(nk);
    BandGrid g;
    g.flux = flux;
    g.potential = pot;
    g.nk = nk;
    g.energies.resize(nk * nk);
    g.states.resize(nk * nk);
    // Rows are independent; each worker owns a stride of rows and its own residual maximum.
    const int workers = std::max(1, std::min(thread_count(), nk));
    std::vector<double> residual(workers, 0.0);
    auto rows = [&](int w) {
        for (int i = w; i < nk; i += workers)
            for (int j = 0; j < nk; ++j) {
                const CMat H = harper_hamiltonian(flux, g.k(i, j), pot);
                Eig e = diagonalize(H);
                residual[w] = std::max(residual[w], (H * e.U - e.U * e.E.asDiagonal()).cwiseAbs().maxCoeff());
                g.energies[g.index(i, j)] = e.E;
                g.states[g.index(i, j)] = e.U;
            }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(rows, w);
    rows(0);
    for (auto& t : pool) t.join();
    g.max_residual = *std::max_element(residual.begin(), residual.end());
    if (g.max_residual > 1e-10) throw AccuracyError("eigen residual above 1e-10");
    return g;
}

BandTouching minimal_gap(const FluxRational& flux, const BandGrid& grid, int n, const HarperPotential& pot,
                         const GapOptions& opt) {
    if (n < 0 || n + 1 >= flux.q) throw DomainError("gap index out of range");
    BandTouching t;
    t.lower = n;
    t.min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.nk; ++i)
        for (int j = 0; j < grid.nk; ++j) {
            const RVec& E = grid.energies[grid.index(i, j)];
            if (E[n + 1] - E[n] < t.min_gap) {
                t.min_gap = E[n + 1] - E[n];
                t.k = grid.k(i, j);
            }
        }
    if (!opt.refine) return t;
    // Compass search from the mesh minimum.
    const Vec2 z = magnetic_zone(flux);
    double step = std::min(z.x(), z.y()) / grid.nk;
    const Vec2 dirs[8] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    while (step > 1e-13 && t.min_gap > 0.0) {
        bool moved = false;
        for (const Vec2& d : dirs) {
            const Vec2 k = t.k + step * d;
            const double g = gap_at(flux, k, n, pot);
            if (g < t.min_gap) {
                t.min_gap = g;
                t.k = k;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    t.k = wrap_to_zone(flux, t.k);
    return t;
}

double plaquette_chern(const BandGrid& grid, int band) {
    check_band(grid.flux, band);
    return plaquettes(grid, {band}).chern;
}

double plaquette_chern(const BandGrid& grid, const std::vector<int>& bands) {
    if (bands.empty()) throw DomainError("empty band set");
    for (int b : bands) check_band(grid.flux, b);
    return plaquettes(grid, bands).chern;
}

ChernReport band_chern(const FluxRational& flux, int nk, const HarperPotential& pot, const GapOptions& opt) {
    const BandGrid grid = band_grid(flux, nk, pot);
    const int q = flux.q;
    ChernReport r;
    r.flux = flux;
    r.nk = nk;
    r.per_band.assign(q, std::nullopt);
    r.raw.assign(q, std::numeric_limits<double>::quiet_NaN());
    std::vector<int> group{0};
    for (int n = 0; n + 1 < q; ++n) {
        const BandTouching t = minimal_gap(flux, grid, n, pot, opt);
        r.gaps.push_back(t.min_gap);
        if (t.min_gap <= opt.touch_tol) {
            r.touching.push_back(t);
            r.complete = false;
            group.push_back(n + 1);
        } else {
            r.groups.push_back(group);
            group = {n + 1};
        }
    }
    r.groups.push_back(group);
    for (const auto& g : r.groups) {
        const PlaquetteSum s = plaquettes(grid, g);
        const double c = std::round(s.chern);
        if (std::abs(s.chern - c) > 1e-6) throw AccuracyError("plaquette sum is not integral; refine the k mesh");
        r.max_plaquette = std::max(r.max_plaquette, s.max_angle);
        r.group_raw.push_back(s.chern);
        r.group_chern.push_back(static_cast<int>(c));
        r.total += static_cast<int>(c);
        if (g.size() == 1) {
            r.per_band[g[0]] = static_cast<int>(c);
            r.raw[g[0]] = s.chern;
        }
    }
    return r;
}

int diophantine_gap_label(const FluxRational& flux, int r) {
    flux.validate();
    const int q = flux.q, p = flux.p;
    if (r < 0 || r > q) throw DomainError("gap label out of range");
    int found = 0, t_r = 0;
    for (int t = -q / 2; t <= q / 2; ++t)
        if (((r - p * t) % q + q) % q == 0) {
            ++found;
            t_r = t;
        }
    if (found != 1) throw DomainError("gap label is not unique for this flux and gap");
    return t_r;
}

int diophantine_chern(const FluxRational& flux, int r) {
    if (r < 1 || r > flux.q) throw DomainError("band index out of range");
    return diophantine_gap_label(flux, r) - diophantine_gap_label(flux, r - 1);
}

double kubo_band(const FluxRational& flux, int nk, int band, const HarperPotential& pot) {
    flux.validate();
    check_nk(nk);
    check_band(flux, band);
    const BandGrid grid = band_grid(flux, nk, pot);
    for (int n : {band - 1, band})
        if (n >= 0 && n + 1 < flux.q && minimal_gap(flux, grid, n, pot).min_gap <= GapOptions{}.touch_tol)
            throw DegenerateError("band touches a neighbour");
    std::vector<int> all(flux.q);
    std::iota(all.begin(), all.end(), 0);
    const Vec2 z = magnetic_zone(flux);
    double sum = 0.0;
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
            const Vec2 k = grid.k(i, j);
            const Eig e{grid.energies[grid.index(i, j)], grid.states[grid.index(i, j)]};
            sum += kubo_curvature(e, harper_derivative(flux, k, 0, pot), harper_derivative(flux, k, 1, pot), band,
                                  all);
        }
    return sum * (z.x() / nk) * (z.y() / nk) / kTwoPi;
}

KuboConvergence kubo_band_converged(const FluxRational& flux, int nk0, int band, double tol, int max_nk,
                                    const HarperPotential& pot) {
    KuboConvergence out;
    out.nk = nk0;
    out.sigma = kubo_band(flux, nk0, band, pot);
    for (int nk = 2 * nk0; nk <= max_nk; nk *= 2) {
        const double s = kubo_band(flux, nk, band, pot);
        out.change = std::abs(s - out.sigma);
        out.sigma = s;
        out.nk = nk;
        if (out.change <= tol) return out;
    }
    throw AccuracyError("Kubo integral did not converge under mesh doubling");
}

double kubo_sigma(const FluxRational& flux, int nk, int filled, const HarperPotential& pot,
                  const GapOptions& opt) {
    flux.validate();
    check_nk(nk);
    if (filled < 0 || filled > flux.q) throw DomainError("filled band count out of range");
    if (filled == 0 || filled == flux.q) return 0.0;
    const BandGrid grid = band_grid(flux, nk, pot);
    if (minimal_gap(flux, grid, filled - 1, pot, opt).min_gap <= opt.touch_tol)
        throw DegenerateError("Fermi level lies inside a band");
    std::vector<int> empty;
    for (int m = filled; m < flux.q; ++m) empty.push_back(m);
    const Vec2 z = magnetic_zone(flux);
    double sum = 0.0;
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
            const Vec2 k = grid.k(i, j);
            const Eig e{grid.energies[grid.index(i, j)], grid.states[grid.index(i, j)]};
            const CMat hx = harper_derivative(flux, k, 0, pot), hy = harper_derivative(flux, k, 1, pot);
            for (int n = 0; n < filled; ++n) sum += kubo_curvature(e, hx, hy, n, empty);
        }
    return sum * (z.x() / nk) * (z.y() / nk) / kTwoPi;
}

std::vector<ButterflyPoint> butterfly(int q_max, int k_samples, const HarperPotential& pot) {
    if (q_max < 1) throw DomainError("q_max must be positive");
    if (k_samples < 1) throw DomainError("k_samples must be positive");
    std::vector<ButterflyPoint> out;
    for (int q = 1; q <= q_max; ++q)
        for (int p = 1; p <= q; ++p) {
            if (std::gcd(p, q) != 1) continue;
            const FluxRational f{p, q};
            const Vec2 z = magnetic_zone(f);
            for (int i = 0; i < k_samples; ++i)
                for (int j = 0; j < k_samples; ++j) {
                    const Vec2 k(z.x() * i / k_samples, z.y() * j / k_samples);
                    Eigen::SelfAdjointEigenSolver<CMat> es(harper_hamiltonian(f, k, pot), Eigen::EigenvaluesOnly);
                    for (int n = 0; n < q; ++n) out.push_back({p, q, es.eigenvalues()[n]});
                }
        }
    std::stable_sort(out.begin(), out.end(), [](const ButterflyPoint& a, const ButterflyPoint& b) {
        const long lhs = static_cast<long>(a.p) * b.q, rhs = static_cast<long>(b.p) * a.q;
        if (lhs != rhs) return lhs < rhs;
        return a.energy < b.energy;
    });
    return out;
}

}  // namespace holab::lattice
