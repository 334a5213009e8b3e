#pragma once

#include "holab/spectral.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace holab::nonabelian {

using spectral::HamiltonianFamily;
using spectral::ParameterLoop;
using spectral::ParameterPoint;

struct LevelGroup {
    std::vector<int> levels;
    // Optional Hermitian operator whose projection orders and fixes the frame
    // inside the multiplet (e.g. S.n for quadrupole doublets).
    std::function<CMat(const ParameterPoint&)> label;
};

inline constexpr double kMultipletTolerance = 1e-8;

// Orthonormal r-frame spanning the eigenspace of the selected levels.
CMat multiplet_basis(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R);

struct MatrixConnection {
    std::vector<CMat> A;  // one r x r Hermitian matrix per parameter direction, A[j,k] = -i<j|d k>
    CMat basis;
    double antihermitian_residual = 0.0;
};

struct CurvatureMatrix {
    std::array<CMat, 3> V;  // (V_yz, V_zx, V_xy); 2-parameter families fill only V[2]
    double antihermitian_residual = 0.0;
};

struct HolonomyUnitary {
    CMat U;
    ParameterLoop loop;
    int samples = 0;
    double refinement_error = 0.0;
};

MatrixConnection connection_matrices(const HamiltonianFamily& family, const LevelGroup& group,
                                     const ParameterPoint& R, double step = 1e-5);

CurvatureMatrix curvature_matrix(const HamiltonianFamily& family, const LevelGroup& group,
                                 const ParameterPoint& R, double step = 1e-4);

// Ordered product of polar-unitarized overlaps over the given loop samples.
HolonomyUnitary wilson_loop(const HamiltonianFamily& family, const LevelGroup& group, const ParameterLoop& C);

// Same product over frames supplied by the caller (frames[k] spans the multiplet at loop point k).
CMat ordered_product(const std::vector<CMat>& frames);

// Refines a parameterized closed loop c(s), s in [0,1], by sample doubling until
// successive unitaries differ by less than tol in max-norm.
HolonomyUnitary wilson_loop_refined(const HamiltonianFamily& family, const LevelGroup& group,
                                    const std::function<ParameterPoint(double)>& c, double tol = 1e-10,
                                    int n_start = 256, int n_max = 1 << 20);

struct GaugeCovarianceReport {
    CMat U;
    CMat U_remixed;
    double eigenvalue_distance = 0.0;
    double conjugation_residual = 0.0;
};

// W(k) is the unitary remix applied at loop point k: frame -> frame * W(k)^dag.
GaugeCovarianceReport gauge_covariance_check(const HamiltonianFamily& family, const LevelGroup& group,
                                             const ParameterLoop& C, const std::function<CMat(int)>& W);

// Sorted eigenphases of a unitary.
std::vector<double> eigenphases(const CMat& U);
// Closest unitary in Frobenius norm.
CMat polar_unitary(const CMat& M);

}  // namespace holab::nonabelian
