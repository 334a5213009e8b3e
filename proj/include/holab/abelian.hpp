#pragma once

#include "holab/spectral.hpp"

#include <functional>
#include <string>
#include <vector>

namespace holab::abelian {

using spectral::HamiltonianFamily;
using spectral::ParameterPoint;

struct PhaseResult {
    double phase = 0.0;      // principal value in (-pi, pi]
    double unwrapped = 0.0;  // accumulated
    int samples = 0;
    double refinement_error = 0.0;
};

struct ConnectionSample {
    RVec A;
    int n = 0;
    ParameterPoint R;
    std::string gauge;
};

enum class CurvatureMethod { FiniteDifference, PerturbationSum, DensityMatrix };
std::string to_string(CurvatureMethod m);
CurvatureMethod curvature_method_from_string(const std::string& s);

struct CurvatureSample {
    Vec3 V = Vec3::Zero();
    int n = 0;
    ParameterPoint R;
    CurvatureMethod method = CurvatureMethod::PerturbationSum;
};

struct DegeneracyCensus {
    double raw_flux = 0.0;
    int charge = 0;
    double residual = 0.0;
    double initial_residual = 0.0;
    int refinements = 0;
    int triangles = 0;
};

struct MetricSample {
    RMat g;
};

// Discrete overlap-product phase, -arg prod <psi_k|psi_k+1> including the closing
// overlap back to the first state. Gauge invariant. With closed = true the last
// state must be the first one up to a phase.
PhaseResult berry_phase_discrete(const std::vector<CVec>& states, bool closed);

// Central-difference Im<n|d_alpha n> with neighbours fixed on the centre's pivot
// component, i.e. in the smooth local gauge "pivot entry real positive".
ConnectionSample berry_connection_fd(const HamiltonianFamily& family, int n,
                                     const ParameterPoint& R, double step = 1e-5);

CurvatureSample berry_curvature(const HamiltonianFamily& family, int n, const ParameterPoint& R,
                                CurvatureMethod method, double step = 1e-4);

struct CensusOptions {
    int max_refinements = 4;
    double tolerance = 1e-3 * 2.0 * kPi;  // residual target after refinement
    double step = 1e-5;
};

DegeneracyCensus degeneracy_census(const HamiltonianFamily& family, int n,
                                   const spectral::ParameterSurface& S,
                                   const CensusOptions& opt = {});

MetricSample quantum_metric(const HamiltonianFamily& family, int n, const ParameterPoint& R,
                            double step = 1e-5);

CVec geodesic_state(const CVec& psi0, const CVec& psi1, double s);

// Phase of band n around a parameterized closed loop c(s), s in [0,1], with
// point doubling until successive results differ by less than tol.
PhaseResult loop_phase(const HamiltonianFamily& family, int n,
                       const std::function<ParameterPoint(double)>& c, double tol = 1e-6,
                       int n_start = 64, int n_max = 1 << 16);

// Eigenstates of band n at the loop points (last point equal to the first).
std::vector<CVec> band_states(const HamiltonianFamily& family, int n,
                              const std::vector<ParameterPoint>& points);

// Signed solid angle of a closed spherical polygon (first point not repeated).
double solid_angle_of_loop(const std::vector<Vec3>& loop);

// Polarization
struct PolarizationState {
    CVec jones;
    double intensity = 1.0;
    explicit PolarizationState(const CVec& j, double I = 1.0);
};

Vec3 poincare_point(const PolarizationState& p);
double pancharatnam_relative_phase(const PolarizationState& a, const PolarizationState& b);
// I = I_A + I_B + 2 sqrt(I_A I_B) Re(e^{i chi} <A|B>) for sqrt(I_A)|A> + e^{i chi} sqrt(I_B)|B>.
double superposed_intensity(const PolarizationState& a, const PolarizationState& b, double chi);
// Jones vector whose Poincare point is e.
CVec jones_from_poincare(const Vec3& e);

// Analytic two-state curvature for H = F(R).sigma: +-(1/2) eps_ijk F_i dF_j x dF_k / F^3.
Vec3 two_state_curvature(const std::function<Vec3(const ParameterPoint&)>& F,
                         const ParameterPoint& R, int sign, double step = 1e-5);

}  // namespace holab::abelian
