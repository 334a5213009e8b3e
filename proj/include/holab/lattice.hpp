#pragma once

#include "holab/core.hpp"

#include <optional>
#include <vector>

namespace holab::lattice {

using Vec2 = Eigen::Vector2d;

// Flux per unit cell p/q in flux quanta.
struct FluxRational {
    int p = 0;
    int q = 1;

    void validate() const;  // DomainError unless q >= 1, p >= 1, gcd(p, q) = 1
    double value() const { return static_cast<double>(p) / q; }
};

// Tight-binding reduction of V = 2 V0 (cos 2 pi x/a + cos 2 pi y/b), unit lattice constants.
struct HarperPotential {
    double tx = 1.0;
    double ty = 1.0;
};

// Magnetic zone [0, 2 pi/q) x [0, 2 pi).
Vec2 magnetic_zone(const FluxRational& flux);
Vec2 wrap_to_zone(const FluxRational& flux, const Vec2& k);

// q x q Bloch matrix: diagonal 2 ty cos(ky - 2 pi p j/q), nearest-neighbour tx hopping
// round the q-site supercell with Bloch phase exp(i q kx) on the closing bond.
CMat harper_hamiltonian(const FluxRational& flux, const Vec2& k, const HarperPotential& pot = {});
// Exact dH/dk_axis, axis 0 or 1.
CMat harper_derivative(const FluxRational& flux, const Vec2& k, int axis, const HarperPotential& pot = {});

struct BandGrid {
    FluxRational flux;
    HarperPotential potential;
    int nk = 0;
    std::vector<RVec> energies;  // index i * nk + j, k = (i dkx, j dky)
    std::vector<CMat> states;    // columns are eigenvectors, ascending energy
    double max_residual = 0.0;

    Vec2 k(int i, int j) const;
    int index(int i, int j) const { return ((i % nk + nk) % nk) * nk + (j % nk + nk) % nk; }
};

BandGrid band_grid(const FluxRational& flux, int nk, const HarperPotential& pot = {});

struct BandTouching {
    int lower = 0;  // bands lower and lower + 1
    double min_gap = 0.0;
    Vec2 k = Vec2::Zero();
};

struct ChernReport {
    FluxRational flux;
    int nk = 0;
    std::vector<std::optional<int>> per_band;  // empty for bands in a touching group
    std::vector<double> raw;                   // plaquette sum / 2 pi, NaN for touching bands
    std::vector<double> gaps;                  // minimal direct gap above each band (q - 1 entries)
    std::vector<BandTouching> touching;
    std::vector<std::vector<int>> groups;  // maximal sets of mutually touching bands, ascending
    std::vector<int> group_chern;
    std::vector<double> group_raw;
    double max_plaquette = 0.0;  // largest |plaquette angle|
    int total = 0;
    bool complete = true;  // false when any bands touch
};

// Gap minimum: mesh scan followed by local refinement of the mesh minimum.
struct GapOptions {
    double touch_tol = 1e-6;
    bool refine = true;
};

// Minimal direct gap between bands n and n + 1 and where it occurs.
BandTouching minimal_gap(const FluxRational& flux, const BandGrid& grid, int n, const HarperPotential& pot = {},
                         const GapOptions& opt = {});

// Link-variable field strength of one band, summed over plaquettes, divided by 2 pi.
double plaquette_chern(const BandGrid& grid, int band);
// Same for a set of bands (determinant of the overlap matrices).
double plaquette_chern(const BandGrid& grid, const std::vector<int>& bands);

ChernReport band_chern(const FluxRational& flux, int nk, const HarperPotential& pot = {},
                       const GapOptions& opt = {});

// Gap label t_r solving r = q s + p t with |t| <= q/2; DomainError when not unique.
int diophantine_gap_label(const FluxRational& flux, int r);
// Band Chern number t_r - t_{r-1}, bands counted from 1.
int diophantine_chern(const FluxRational& flux, int r);

// (1/2 pi) sum_k V_n(k) dk^2 with V_n from matrix elements of the exact dH/dk.
double kubo_band(const FluxRational& flux, int nk, int band, const HarperPotential& pot = {});
struct KuboConvergence {
    double sigma = 0.0;
    int nk = 0;         // final mesh
    double change = 0.0;  // |sigma(nk) - sigma(nk/2)|
};

// kubo_band with the mesh doubled from nk0 until successive values differ by at most tol.
KuboConvergence kubo_band_converged(const FluxRational& flux, int nk0, int band, double tol = 1e-8,
                                    int max_nk = 512, const HarperPotential& pot = {});
// Hall conductance in units of e^2/h with `filled` lowest bands occupied; DegenerateError when the
// Fermi level is not in an open gap.
double kubo_sigma(const FluxRational& flux, int nk, int filled, const HarperPotential& pot = {},
                  const GapOptions& opt = {});

struct ButterflyPoint {
    int p = 0;
    int q = 1;
    double energy = 0.0;
};

// All p/q in (0, 1] with q <= q_max, energies on a k_samples x k_samples zone mesh.
std::vector<ButterflyPoint> butterfly(int q_max, int k_samples = 2, const HarperPotential& pot = {});

}  // namespace holab::lattice
