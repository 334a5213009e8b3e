#pragma once

#include "holab/core.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace holab::classical {

using Vec2 = Eigen::Vector2d;

// One degree of freedom H(q, p, R). Libration orbits must be star-shaped about
// centre(R); rotation orbits (q_period > 0) live on a cylinder.
struct OneDofSystem {
    std::string name;
    int n_params = 0;
    std::function<double(double q, double p, const RVec& R)> hamiltonian;
    std::function<Vec2(double q, double p, const RVec& R)> gradient;  // (dH/dq, dH/dp); optional
    std::function<Vec2(const RVec& R)> centre;
    std::function<bool(const RVec& R)> admissible;  // optional bounded-orbit domain
    double q_period = 0.0;

    double energy(double q, double p, const RVec& R) const { return hamiltonian(q, p, R); }
    Vec2 grad(double q, double p, const RVec& R) const;
    void check(const RVec& R) const;  // DomainError outside the declared domain
};

// R = (omega): H = p^2/2 + omega^2 q^2/2.
OneDofSystem harmonic_oscillator();
// R = (X, Y, Z): H = (Z - X) p^2/2 + Y p q + (Z + X) q^2/2, bounded for X^2 + Y^2 < Z^2.
OneDofSystem generalized_oscillator();
// R = (g): H = p^2/2 + g (1 - cos q), librations only.
OneDofSystem planar_pendulum();
// Free unit-mass bead on a loop of circumference C (arc length q, no parameters).
OneDofSystem free_bead(double circumference);

struct ActionAngleSample {
    double I = 0.0;
    double theta = 0.0;  // [0, 2 pi), zero on the ray p = p_centre, q > q_centre
    double omega = 0.0;
    double energy = 0.0;
};

// (1/2 pi) x phase-plane area of {H <= E}, refined to 1e-8 relative.
double action(const OneDofSystem& sys, double E, const RVec& R);
double orbit_period(const OneDofSystem& sys, double E, const RVec& R);
double energy_at_action(const OneDofSystem& sys, double I, const RVec& R);
ActionAngleSample action_angle(const OneDofSystem& sys, double q, double p, const RVec& R);
// Orbit of action I sampled at theta_j = 2 pi j / M.
std::vector<Vec2> orbit_at_action(const OneDofSystem& sys, double I, const RVec& R, int M);

// Two-stage Gauss-Legendre (symplectic, fourth order) step of Hamilton's equations.
Vec2 gauss_legendre_step(const OneDofSystem& sys, const std::function<RVec(double)>& R, double t, const Vec2& z,
                         double dt);

enum class HannayMethod { trajectory, connection, analytic };
std::string to_string(HannayMethod m);

struct HannayResult {
    double angle = 0.0;  // principal value in (-pi, pi]
    double unwrapped = 0.0;
    HannayMethod method = HannayMethod::analytic;
    double action_drift = 0.0;  // max |I(t) - I0| / I0 (trajectory method)
    double dynamical = 0.0;     // int omega(I0, R(t)) dt (trajectory method)
};

struct HannayTrajectoryOptions {
    double dt = 0.02;
    int drift_samples = 200;
    double max_drift = 0.01;
    int omega_samples = 128;
    bool smooth_ramp = true;  // R(t) = cycle(u - sin(2 pi u)/2 pi), u = t/T
};

// Integrates Hamilton's equations while R runs once round cycle(s), s in [0, 1], in time T,
// and subtracts the dynamical angle from the angle advance.
HannayResult hannay_trajectory(const OneDofSystem& sys, double I0, const std::function<RVec(double)>& cycle,
                               double T, const HannayTrajectoryOptions& opt = {});

struct HannayConnectionOptions {
    int cycle_samples = 64;
    int orbit_samples = 64;
    double param_step = 1e-4;
    double rel_action_step = 1e-3;
};

// A(I, R) = (1/2 pi) int p grad_R q dtheta at fixed (theta, I).
RVec hannay_vector_potential(const OneDofSystem& sys, double I, const RVec& R,
                             const HannayConnectionOptions& opt = {});
// V_ij = (1/2 pi) int (d_i p d_j q - d_j p d_i q) dtheta.
RMat hannay_curvature(const OneDofSystem& sys, double I, const RVec& R, const HannayConnectionOptions& opt = {});
// Three-parameter form (V_yz, V_zx, V_xy).
Vec3 hannay_curvature_vector(const OneDofSystem& sys, double I, const RVec& R,
                             const HannayConnectionOptions& opt = {});

// theta_g = -d/dI oint A . dR over cycle(s), s in [0, 1].
HannayResult hannay_connection(const OneDofSystem& sys, double I, const std::function<RVec(double)>& cycle,
                               const HannayConnectionOptions& opt = {});

// Closed forms for the generalized oscillator.
Vec3 oscillator_curvature(double I, const Vec3& R);
// Half the signed hyperbolic area of the cycle's projection onto Z^2 - X^2 - Y^2 = 1.
HannayResult oscillator_hannay_angle(const std::function<RVec(double)>& cycle, int samples = 4096);

// Planar closed curve r(u), u in [0, 2 pi), counterclockwise.
struct PlanarCurve {
    std::string name;
    std::function<Vec2(double)> r;
    std::function<Vec2(double)> dr;
    std::function<Vec2(double)> d2r;
    std::vector<double> breaks;  // u values where the curvature jumps
};

PlanarCurve circle_curve(double radius);
PlanarCurve ellipse_curve(double a, double b);
// Two semicircles of the given radius joined by straight segments of the given length.
PlanarCurve stadium_curve(double length, double radius);
// Periodic cubic spline through the points (first point not repeated).
PlanarCurve spline_curve(const std::vector<Vec2>& points);

struct CurveGeometry {
    double area = 0.0;
    double circumference = 0.0;
};

// Throws GeometryError for self-intersecting or clockwise curves.
CurveGeometry curve_geometry(const PlanarCurve& c);

struct BeadOptions {
    double speed = 1.0;
    double rotation_time = 2000.0;  // one full counterclockwise turn of the loop
    double dt = 0.01;
    double u0 = 0.0;
};

struct BeadSlip {
    double area = 0.0;
    double circumference = 0.0;
    double analytic = 0.0;  // -4 pi A / C, arc length relative to the wire
    double simulated = 0.0;
    double action_drift = 0.0;  // max |v(t) - v0| / v0 of the instantaneous frozen speed
    double laps = 0.0;
};

BeadSlip bead_slip(const PlanarCurve& curve, const BeadOptions& opt = {});

// 2 pi (1 - cos alpha) reduced to [0, 2 pi).
double foucault_precession(double alpha);

struct FoucaultOptions {
    double omega0 = 1.0;  // small-swing pendulum frequency
    double day = 2000.0;
    double amplitude = 0.05;
    double dt = 0.01;
};

struct FoucaultResult {
    double analytic = 0.0;
    double simulated = 0.0;  // swing-axis rotation after one day, reduced to [0, 2 pi)
    double unwrapped = 0.0;  // rotation relative to the rotating ground frame
};

FoucaultResult foucault_simulation(double alpha, const FoucaultOptions& opt = {});

// Free rigid body with space angular momentum |L| z. Orientation maps body to space.
struct RigidBodyOptions {
    double dt = 1e-3;
    double horizon = 1e4;
    double static_period = 1.0;  // period used when L does not move
};

struct RigidBodyResult {
    double delta_psi = 0.0;   // rotation of the body about the angular momentum over one period
    double dynamical = 0.0;   // 2 E T / |L|
    double geometric = 0.0;   // oint cos(theta) dphi of the body angular momentum
    double solid_angle = 0.0; // oint (1 - cos(theta)) dphi
    double identity_residual = 0.0;  // |wrap(delta_psi - dynamical - geometric)|
    double period = 0.0;
    double energy = 0.0;
    double energy_drift = 0.0;
    double momentum_drift = 0.0;
    double orthogonality = 0.0;
    Mat3 orientation_end = Mat3::Identity();
};

RigidBodyResult rigid_body_phase(const Mat3& inertia, double L, const Mat3& orientation0,
                                 const RigidBodyOptions& opt = {});

struct ShapeCycle {
    std::vector<double> masses;
    std::function<std::vector<Vec3>(double)> positions;  // s in [0, 1], cyclic

    void validate() const;
    // Positions with the centre of mass moved to the origin.
    std::vector<Vec3> centred(double s) const;
};

struct ShapeRotation {
    Mat3 rotation = Mat3::Identity();
    double angle = 0.0;
    Vec3 axis = Vec3::UnitZ();
    int steps = 0;
    double refinement_change = 0.0;
};

// Net rotation R(1) R(0)^-1 generated by Omega = -I^-1 sum m R x V at zero angular momentum.
ShapeRotation shape_reorientation(const ShapeCycle& shape, double tol = 1e-12, int max_steps = 1 << 16);

// Space-frame positions evolved with the internal velocities and the rigid rotation that
// cancels angular momentum removed at each step; orientation by least-squares alignment.
Mat3 shape_reorientation_oracle(const ShapeCycle& shape, int steps);

// Three unequal masses in the xy plane with seeded Fourier shape deformations.
ShapeCycle planar_cat_cycle(std::uint64_t seed);

struct TransportResult {
    std::vector<Vec3> vectors;
    double rotation = 0.0;  // signed angle about t_0 from d_0 to d_N, principal value
    double max_norm_error = 0.0;
    double max_tangent_error = 0.0;
};

// Rigid step along each geodesic segment, projection onto the new tangent plane, renormalization.
TransportResult sphere_parallel_transport(const Vec3& d0, const std::vector<Vec3>& path);

// Tangent directions of a helix of given radius and pitch, `turns` turns, closed direction cycle
// per turn (last point equals the first).
std::vector<Vec3> helix_directions(double radius, double pitch, int turns, int samples_per_turn);

}  // namespace holab::classical
