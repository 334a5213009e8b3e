#pragma once

#include "holab/spectral.hpp"

#include <functional>
#include <string>
#include <vector>

namespace holab::dynamics {

using spectral::HamiltonianFamily;
using spectral::ParameterPoint;

// Slow path R(tau), tau = epsilon * t in [0, 1]; total time T = 1/epsilon.
struct Schedule {
    std::function<ParameterPoint(double)> path;
    double epsilon = 0.01;
    int samples = 1000;  // stored grid intervals

    double duration() const { return 1.0 / epsilon; }
    void validate() const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<CVec> states;
    std::vector<double> norms;  // |psi| after each stored sample
    int substeps = 0;           // integrator steps per stored interval
    double refinement_change = 0.0;
};

struct PropagateOptions {
    double tol = 1e-9;  // max change of stored states under step halving
    int min_substeps = 4;
    int max_substeps = 1 << 14;
};

// exp(-i H dt) for Hermitian H.
CMat unitary_step(const CMat& H, double dt);

// Midpoint-exponential stepping of i psi' = H(t) psi with a fixed step count;
// stores every `store_every`-th state (and always the last one).
TrajectoryRecord propagate_fixed(const std::function<CMat(double)>& H, double t0, double t1, const CVec& psi0,
                                 long steps, long store_every = 1);

TrajectoryRecord propagate(const HamiltonianFamily& family, const Schedule& schedule, const CVec& psi0,
                           const PropagateOptions& opt = {});

struct PhaseDecomposition {
    double total = 0.0;
    double dynamical = 0.0;
    double geometric = 0.0;
    bool open_path = true;
};

// total = arg<psi(0)|psi(T)>, dynamical = discrete Im int <psi|psi'> dt
// (sum of step phases arg<psi_k|psi_k+1>), geometric = total - dynamical.
// closed = true requires |<psi(0)|psi(T)>| > 1e-6.
PhaseDecomposition aa_phase(const TrajectoryRecord& traj, bool closed = false);

struct ErrorScanRow {
    double epsilon = 0.0;
    double leakage = 0.0;
    double geometric = 0.0;
    double phase_error = 0.0;
};

// Propagates level n around c(tau) for each epsilon and compares with the adiabatic limit.
std::vector<ErrorScanRow> adiabatic_error_scan(const HamiltonianFamily& family,
                                               const std::function<ParameterPoint(double)>& cycle, int n,
                                               const std::vector<double>& epsilons, int samples = 2000);

// Spin-1/2 field schedule B(tau) with an optional quad-precision evaluator.
struct FieldSchedule {
    std::function<Vec3(double)> eval;
    std::function<void(__float128, __float128*)> eval_quad;
};

// B(tau) = (kappa sech(lambda tau), kappa sech(lambda tau) tanh(lambda tau), 1).
FieldSchedule sech_pulse(double kappa, double lambda);

struct SuperadiabaticOptions {
    double half_width = 80.0;  // tau in [-L, L)
    int grid = 8192;
    double cutoff = 0.75;  // retained fraction of the Nyquist wavenumber
};

struct SuperadiabaticSeries {
    std::vector<double> tau;
    std::vector<std::vector<Vec3>> cycles;  // B_k on the grid
    std::vector<double> terms;              // gamma_-(C_k) = alpha_k / 2
    std::vector<double> dynamical;          // (1/2 eps) int |B_k| dtau, reduced mod 2 pi
    std::vector<double> truncated_phase;    // level-K phase of the lower state, mod 2 pi
    std::vector<double> min_field;
    std::vector<double> extent;  // max transverse |B_k| (distance of C_k from the z axis)
    int optimal_k = 0;
    int breakdown_k = -1;
    std::string breakdown;
};

// Successive rotating frames for i eps psi' = (1/2) B0(tau).sigma psi. B0 must approach a
// common direction along +z at both ends of the window.
SuperadiabaticSeries superadiabatic_iterate(const FieldSchedule& B0, double epsilon, int k_max,
                                            const SuperadiabaticOptions& opt = {});

// arg<down|psi(L)> for psi(-L) = down, i eps psi' = (1/2) B0.sigma psi, plus the final
// up-state population. Fourth-order Magnus steps with one Richardson level.
struct ExactSpinResult {
    double phase = 0.0;
    double transition = 0.0;
    double richardson_change = 0.0;
};
ExactSpinResult exact_lower_state_phase(const FieldSchedule& B0, double epsilon, double half_width, long steps);

struct AmplitudeFit {
    std::vector<double> epsilons;
    std::vector<double> logP;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double gamma = 0.0;  // intercept / pi
};

// Up-to-down transition probability for i eps psi' = R(tau).sigma psi over [-L, L],
// started and projected in first-order superadiabatic states.
double transition_probability(const std::function<Vec3(double)>& R, double epsilon, double half_width, long steps);

AmplitudeFit geometric_amplitude_fit(const std::function<Vec3(double)>& R, const std::vector<double>& epsilons,
                                     double half_width, long steps);

struct Peak {
    double frequency = 0.0;
    double height = 0.0;
};

struct SpectrumReport {
    std::vector<double> frequencies;  // angular
    std::vector<double> magnitude;
    std::vector<Peak> peaks;  // descending height
    double bin = 0.0;         // angular frequency spacing
    bool adiabatic_warning = false;
};

// Hann-windowed magnitude spectrum of a real signal sampled at spacing dt; peaks are
// local maxima above rel_threshold * max, located by 3-bin quadratic interpolation.
SpectrumReport spectrum(const std::vector<double>& signal, double dt, double rel_threshold = 1e-3);

struct NmrShiftConfig {
    double gyro = 1.0;
    double omega = 10.0;        // rotating-frame frequency; cone centre is (0, 0, omega/gyro)
    double field = 1.0;         // |B_rot|
    double cone_angle = 0.5;    // half-angle of the modulation cone about z
    double period = 200.0;      // modulation period T; 0 disables modulation
    double duration = 8000.0;
    double sample_dt = 0.25;
    int substeps = 8;
};

struct NmrShiftResult {
    SpectrumReport spectrum;
    double omega_rot = 0.0;
    double alpha = 0.0;  // gamma_upper(C) - gamma_lower(C); magnitude is the cone solid angle
    double expected = 0.0;
    double measured = 0.0;
};

NmrShiftResult nmr_shift_scenario(const NmrShiftConfig& cfg);

struct TyckoConfig {
    double omega_q = 1.0;
    double omega_r = 0.01;
    double tilt = 0.9553166181245093;  // angle between rotation axis and symmetry axis
    double duration = 40000.0;
    double sample_dt = 0.5;
    int substeps = 10;
};

struct TyckoResult {
    SpectrumReport spectrum;
    std::vector<Peak> band;           // peaks within 3 omega_r of 2 omega_q, by frequency
    std::vector<double> targets;      // 2wQ - sqrt3 wR/pi, 2wQ, 2wQ + sqrt3 wR/pi
    double mismatch = 0.0;            // max distance from each target to its nearest band peak
    bool triplet_within_bin = false;  // exactly three band peaks, each within one bin of a target
};

TyckoResult nqr_tycko_scenario(const TyckoConfig& cfg);

struct TiltScan {
    std::vector<double> tilts;
    std::vector<double> mismatch;
    double best_tilt = 0.0;
    TyckoResult best;
};

TiltScan tycko_tilt_scan(TyckoConfig cfg, const std::vector<double>& tilts);

}  // namespace holab::dynamics
