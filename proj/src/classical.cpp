#include "holab/classical.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>

namespace holab::classical {

namespace {

using GL10 = boost::math::quadrature::gauss<double, 10>;

constexpr double kTwoPi = 2.0 * kPi;

double positive_mod(double x, double m) {
    double y = std::fmod(x, m);
    return y < 0 ? y + m : y;
}

// Root of f on [a, b] with f(a) f(b) <= 0.
template <class F>
double solve_bracketed(F f, double a, double b) {
    double fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    std::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(52), it);
    return 0.5 * (r.first + r.second);
}

// Radius of the energy contour along direction phi from the centre, starting the bracket at guess.
double contour_radius(const OneDofSystem& sys, double E, const RVec& R, const Vec2& c, double phi, double guess) {
    const Vec2 dir(std::cos(phi), std::sin(phi));
    auto f = [&](double r) { return sys.energy(c.x() + r * dir.x(), c.y() + r * dir.y(), R) - E; };
    constexpr double r_max = 1e8;
    if (guess > 0) {
        double lo = guess, hi = guess;
        if (f(guess) < 0) {
            while (true) {
                hi = lo * 1.02;
                if (hi > r_max) throw DomainError("energy contour is not bounded");
                if (f(hi) >= 0) break;
                lo = hi;
            }
        } else {
            while (true) {
                lo = hi / 1.02;
                if (lo < 1e-300) throw ChartError("energy contour collapses onto the centre");
                if (f(lo) < 0) break;
                hi = lo;
            }
        }
        return solve_bracketed(f, lo, hi);
    }
    double lo = 0.0, hi = 1e-6;
    while (f(hi) < 0) {
        lo = hi;
        hi *= 1.25;
        if (hi > r_max) throw DomainError("energy contour is not bounded");
    }
    return solve_bracketed(f, lo, hi);
}

// Momentum above the centre line on a rotation orbit.
double rotation_momentum(const OneDofSystem& sys, double E, const RVec& R, double q) {
    auto f = [&](double p) { return sys.energy(q, p, R) - E; };
    if (f(0.0) >= 0) throw DomainError("energy below the rotation threshold");
    double lo = 0.0, hi = 1e-6;
    while (f(hi) < 0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8) throw DomainError("rotation orbit is not bounded");
    }
    return solve_bracketed(f, lo, hi);
}

void check_energy(const OneDofSystem& sys, double E, const RVec& R) {
    sys.check(R);
    if (!std::isfinite(E)) throw DomainError("energy is not finite");
    if (sys.q_period <= 0) {
        const Vec2 c = sys.centre(R);
        if (!(E > sys.energy(c.x(), c.y(), R))) throw DomainError("energy at or below the local minimum");
    }
}

struct Contour {
    std::vector<double> phi, r;
};

Contour trace_contour(const OneDofSystem& sys, double E, const RVec& R, int n) {
    const Vec2 c = sys.centre(R);
    Contour k;
    k.phi.resize(n);
    k.r.resize(n);
    double guess = 0.0;
    for (int j = 0; j < n; ++j) {
        k.phi[j] = kTwoPi * j / n;
        k.r[j] = contour_radius(sys, E, R, c, k.phi[j], guess);
        guess = k.r[j];
    }
    return k;
}

// Angular speed of the flow at the contour point along phi.
double angular_speed(const OneDofSystem& sys, const RVec& R, const Vec2& c, double phi, double r) {
    const double x = r * std::cos(phi), y = r * std::sin(phi);
    const Vec2 g = sys.grad(c.x() + x, c.y() + y, R);
    const double xd = g.y(), yd = -g.x();
    return (x * yd - y * xd) / (r * r);
}

double libration_action(const OneDofSystem& sys, double E, const RVec& R) {
    double prev = 0.0;
    for (int n = 32; n <= (1 << 16); n *= 2) {
        const Contour k = trace_contour(sys, E, R, n);
        double s = 0.0;
        for (double r : k.r) s += r * r;
        const double I = 0.5 * s * (kTwoPi / n) / kTwoPi;
        if (n > 32 && std::abs(I - prev) <= 1e-8 * std::abs(I)) return I;
        prev = I;
    }
    throw AccuracyError("action quadrature did not reach 1e-8 relative");
}

double rotation_action(const OneDofSystem& sys, double E, const RVec& R) {
    double prev = 0.0;
    for (int n = 32; n <= (1 << 16); n *= 2) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += rotation_momentum(sys, E, R, sys.q_period * j / n);
        const double I = s * (sys.q_period / n) / kTwoPi;
        if (n > 32 && std::abs(I - prev) <= 1e-8 * std::abs(I)) return I;
        prev = I;
    }
    throw AccuracyError("action quadrature did not reach 1e-8 relative");
}

int flow_sign(const OneDofSystem& sys, const RVec& R, const Vec2& c, const Contour& k) {
    int sgn = 0;
    for (size_t j = 0; j < k.phi.size(); ++j) {
        const double w = angular_speed(sys, R, c, k.phi[j], k.r[j]);
        const int s = w > 0 ? 1 : (w < 0 ? -1 : 0);
        if (s == 0 || (sgn != 0 && s != sgn)) throw ChartError("orbit is not star-shaped about the centre");
        sgn = s;
    }
    return sgn;
}

Vec2 hamilton_rhs(const OneDofSystem& sys, const RVec& R, const Vec2& z) {
    const Vec2 g = sys.grad(z.x(), z.y(), R);
    return Vec2(g.y(), -g.x());
}

double smooth_ramp(double u) { return u - std::sin(kTwoPi * u) / kTwoPi; }

}  // namespace

Vec2 OneDofSystem::grad(double q, double p, const RVec& R) const {
    if (gradient) return gradient(q, p, R);
    const double hq = 1e-6 * (1.0 + std::abs(q)), hp = 1e-6 * (1.0 + std::abs(p));
    return Vec2((hamiltonian(q + hq, p, R) - hamiltonian(q - hq, p, R)) / (2 * hq),
                (hamiltonian(q, p + hp, R) - hamiltonian(q, p - hp, R)) / (2 * hp));
}

void OneDofSystem::check(const RVec& R) const {
    if (R.size() != n_params)
        throw DomainError(name + ": expected " + std::to_string(n_params) + " parameters, got " +
                          std::to_string(R.size()));
    if (!R.allFinite()) throw DomainError(name + ": non-finite parameters");
    if (admissible && !admissible(R)) throw DomainError(name + ": parameters outside the bounded-orbit domain");
}

OneDofSystem harmonic_oscillator() {
    OneDofSystem s;
    s.name = "harmonic-oscillator";
    s.n_params = 1;
    s.hamiltonian = [](double q, double p, const RVec& R) { return 0.5 * p * p + 0.5 * R[0] * R[0] * q * q; };
    s.gradient = [](double q, double p, const RVec& R) { return Vec2(R[0] * R[0] * q, p); };
    s.centre = [](const RVec&) { return Vec2(0, 0); };
    s.admissible = [](const RVec& R) { return R[0] > 0; };
    return s;
}

OneDofSystem generalized_oscillator() {
    OneDofSystem s;
    s.name = "generalized-oscillator";
    s.n_params = 3;
    s.hamiltonian = [](double q, double p, const RVec& R) {
        return 0.5 * (R[2] - R[0]) * p * p + R[1] * p * q + 0.5 * (R[2] + R[0]) * q * q;
    };
    s.gradient = [](double q, double p, const RVec& R) {
        return Vec2(R[1] * p + (R[2] + R[0]) * q, (R[2] - R[0]) * p + R[1] * q);
    };
    s.centre = [](const RVec&) { return Vec2(0, 0); };
    s.admissible = [](const RVec& R) { return R[2] > 0 && R[0] * R[0] + R[1] * R[1] < R[2] * R[2]; };
    return s;
}

OneDofSystem planar_pendulum() {
    OneDofSystem s;
    s.name = "planar-pendulum";
    s.n_params = 1;
    s.hamiltonian = [](double q, double p, const RVec& R) { return 0.5 * p * p + R[0] * (1.0 - std::cos(q)); };
    s.gradient = [](double q, double p, const RVec& R) { return Vec2(R[0] * std::sin(q), p); };
    s.centre = [](const RVec&) { return Vec2(0, 0); };
    s.admissible = [](const RVec& R) { return R[0] > 0; };
    return s;
}

OneDofSystem free_bead(double circumference) {
    if (!(circumference > 0)) throw DomainError("bead loop circumference must be positive");
    OneDofSystem s;
    s.name = "free-bead";
    s.n_params = 0;
    s.hamiltonian = [](double, double p, const RVec&) { return 0.5 * p * p; };
    s.gradient = [](double, double p, const RVec&) { return Vec2(0, p); };
    s.centre = [](const RVec&) { return Vec2(0, 0); };
    s.q_period = circumference;
    return s;
}

double action(const OneDofSystem& sys, double E, const RVec& R) {
    check_energy(sys, E, R);
    return sys.q_period > 0 ? rotation_action(sys, E, R) : libration_action(sys, E, R);
}

double orbit_period(const OneDofSystem& sys, double E, const RVec& R) {
    check_energy(sys, E, R);
    double prev = 0.0;
    for (int n = 32; n <= (1 << 16); n *= 2) {
        double P = 0.0;
        if (sys.q_period > 0) {
            for (int j = 0; j < n; ++j) {
                const double q = sys.q_period * j / n;
                const double qd = sys.grad(q, rotation_momentum(sys, E, R, q), R).y();
                if (!(qd > 0)) throw ChartError("rotation orbit reverses");
                P += 1.0 / qd;
            }
            P *= sys.q_period / n;
        } else {
            const Vec2 c = sys.centre(R);
            const Contour k = trace_contour(sys, E, R, n);
            flow_sign(sys, R, c, k);
            for (int j = 0; j < n; ++j) P += 1.0 / std::abs(angular_speed(sys, R, c, k.phi[j], k.r[j]));
            P *= kTwoPi / n;
        }
        if (n > 32 && std::abs(P - prev) <= 1e-12 * P) return P;
        prev = P;
    }
    throw AccuracyError("period quadrature did not converge");
}

double energy_at_action(const OneDofSystem& sys, double I, const RVec& R) {
    sys.check(R);
    if (!(I > 0)) throw DomainError("action must be positive");
    double E0;
    if (sys.q_period > 0) {
        E0 = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < 64; ++j) {
            const double q = sys.q_period * j / 64;
            E0 = std::max(E0, sys.energy(q, 0.0, R));
        }
    } else {
        const Vec2 c = sys.centre(R);
        E0 = sys.energy(c.x(), c.y(), R);
    }
    // Newton on I(E) with dI/dE = 1/omega = P / 2 pi, kept inside a bracket.
    double lo = E0, hi = E0 + 1.0;
    while (action(sys, hi, R) < I) {
        lo = hi;
        hi = E0 + 2.0 * (hi - E0);
        if (hi - E0 > 1e12) throw DomainError("action not reached below the escape energy");
    }
    double E = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        const double f = action(sys, E, R) - I;
        if (f < 0) lo = E; else hi = E;
        const double step = f * kTwoPi / orbit_period(sys, E, R);
        double En = E - step;
        if (!(En > lo && En < hi)) En = 0.5 * (lo + hi);
        if (std::abs(En - E) <= 1e-14 * std::abs(En) + 1e-300) return En;
        E = En;
    }
    return E;
}

ActionAngleSample action_angle(const OneDofSystem& sys, double q, double p, const RVec& R) {
    ActionAngleSample a;
    a.energy = sys.energy(q, p, R);
    a.I = action(sys, a.energy, R);
    const double P = orbit_period(sys, a.energy, R);
    a.omega = kTwoPi / P;
    double t = 0.0;
    if (sys.q_period > 0) {
        const double qe = positive_mod(q, sys.q_period);
        const int panels = 32;
        for (int k = 0; k < panels; ++k) {
            const double a0 = qe * k / panels, a1 = qe * (k + 1) / panels;
            t += GL10::integrate(
                [&](double x) { return 1.0 / sys.grad(x, rotation_momentum(sys, a.energy, R, x), R).y(); }, a0, a1);
        }
    } else {
        const Vec2 c = sys.centre(R);
        const double phi_pt = std::atan2(p - c.y(), q - c.x());
        const Contour k = trace_contour(sys, a.energy, R, 64);
        const int sgn = flow_sign(sys, R, c, k);
        const double span = positive_mod(sgn * phi_pt, kTwoPi);
        double guess = k.r[0];
        const int panels = 32;
        for (int j = 0; j < panels; ++j) {
            const double a0 = span * j / panels, a1 = span * (j + 1) / panels;
            t += GL10::integrate(
                [&](double s) {
                    const double phi = sgn * s;
                    const double r = contour_radius(sys, a.energy, R, c, phi, guess);
                    guess = r;
                    return 1.0 / std::abs(angular_speed(sys, R, c, phi, r));
                },
                a0, a1);
        }
    }
    a.theta = positive_mod(kTwoPi * t / P, kTwoPi);
    return a;
}

Vec2 gauss_legendre_step(const OneDofSystem& sys, const std::function<RVec(double)>& R, double t, const Vec2& z,
                         double dt) {
    static const double s3 = std::sqrt(3.0);
    const double c1 = 0.5 - s3 / 6, c2 = 0.5 + s3 / 6;
    const double a11 = 0.25, a12 = 0.25 - s3 / 6, a21 = 0.25 + s3 / 6, a22 = 0.25;
    const RVec R1 = R(t + c1 * dt), R2 = R(t + c2 * dt);
    Vec2 k1 = hamilton_rhs(sys, R1, z), k2 = hamilton_rhs(sys, R2, z);
    for (int it = 0; it < 100; ++it) {
        const Vec2 n1 = hamilton_rhs(sys, R1, z + dt * (a11 * k1 + a12 * k2));
        const Vec2 n2 = hamilton_rhs(sys, R2, z + dt * (a21 * k1 + a22 * k2));
        const double change = std::max((n1 - k1).lpNorm<Eigen::Infinity>(), (n2 - k2).lpNorm<Eigen::Infinity>());
        k1 = n1;
        k2 = n2;
        if (change <= 1e-15 * (1.0 + k1.lpNorm<Eigen::Infinity>())) return z + 0.5 * dt * (k1 + k2);
    }
    throw NumericalError("Gauss-Legendre stage iteration did not converge; reduce the step");
}

std::vector<Vec2> orbit_at_action(const OneDofSystem& sys, double I, const RVec& R, int M) {
    if (M < 1) throw DomainError("orbit sample count must be positive");
    const double E = energy_at_action(sys, I, R);
    const double P = orbit_period(sys, E, R);
    Vec2 z;
    if (sys.q_period > 0) {
        z = Vec2(0.0, rotation_momentum(sys, E, R, 0.0));
    } else {
        const Vec2 c = sys.centre(R);
        z = c + Vec2(contour_radius(sys, E, R, c, 0.0, 0.0), 0.0);
    }
    const int sub = std::max(4, static_cast<int>(std::ceil(kTwoPi / M / 0.01)));
    const double dt = P / (static_cast<double>(M) * sub);
    auto frozen = [&R](double) { return R; };
    std::vector<Vec2> out;
    out.reserve(M);
    for (int j = 0; j < M; ++j) {
        out.push_back(z);
        for (int k = 0; k < sub; ++k) z = gauss_legendre_step(sys, frozen, 0.0, z, dt);
    }
    return out;
}

std::string to_string(HannayMethod m) {
    switch (m) {
    case HannayMethod::trajectory: return "trajectory-subtraction";
    case HannayMethod::connection: return "connection-integral";
    case HannayMethod::analytic: return "analytic";
    }
    return "?";
}

HannayResult hannay_trajectory(const OneDofSystem& sys, double I0, const std::function<RVec(double)>& cycle,
                               double T, const HannayTrajectoryOptions& opt) {
    if (!(T > 0) || !(opt.dt > 0)) throw DomainError("cycle time and step must be positive");
    const RVec R0 = cycle(0.0);
    if ((cycle(1.0) - R0).norm() > 1e-10 * (1.0 + R0.norm())) throw DomainError("parameter cycle is not closed");
    auto Rt = [&](double t) {
        const double u = std::clamp(t / T, 0.0, 1.0);
        return cycle(opt.smooth_ramp ? smooth_ramp(u) : u);
    };
    const long steps = static_cast<long>(std::ceil(T / opt.dt));
    const double dt = T / steps;
    Vec2 z = orbit_at_action(sys, I0, R0, 1).front();
    const long every = std::max(1L, steps / std::max(1, opt.drift_samples));
    HannayResult res;
    res.method = HannayMethod::trajectory;
    for (long k = 0; k < steps; ++k) {
        z = gauss_legendre_step(sys, Rt, k * dt, z, dt);
        if ((k + 1) % every == 0 || k + 1 == steps) {
            const double t = (k + 1) * dt;
            const RVec R = Rt(t);
            const double I = action(sys, sys.energy(z.x(), z.y(), R), R);
            res.action_drift = std::max(res.action_drift, std::abs(I - I0) / I0);
            if (res.action_drift > opt.max_drift)
                throw AdiabaticityError("action drifted by " + std::to_string(100 * res.action_drift) +
                                        "% at t = " + std::to_string(t) + "; increase T");
        }
    }
    // Trapezoid in t with doubling and one Richardson level.
    auto omega_at = [&](double t) {
        const RVec R = Rt(t);
        return kTwoPi / orbit_period(sys, energy_at_action(sys, I0, R), R);
    };
    int n = std::max(8, opt.omega_samples);
    double wsum = 0.0;
    for (int j = 0; j < n; ++j) wsum += omega_at(T * j / n);
    double trap = T * wsum / n, rich = trap;
    for (int level = 0; level < 8; ++level) {
        for (int j = 0; j < n; ++j) wsum += omega_at(T * (j + 0.5) / n);
        n *= 2;
        const double trap2 = T * wsum / n, rich2 = (4.0 * trap2 - trap) / 3.0;
        const bool done = level > 0 && std::abs(rich2 - rich) < 1e-7;
        trap = trap2;
        rich = rich2;
        if (done) break;
    }
    res.dynamical = rich;
    const double theta_end = action_angle(sys, z.x(), z.y(), R0).theta;
    res.angle = wrap_phase(theta_end - res.dynamical);
    res.unwrapped = res.angle;
    return res;
}

namespace {

// d/dR_i of the orbit samples at fixed (theta, I), fourth-order central differences.
std::vector<std::vector<Vec2>> orbit_gradients(const OneDofSystem& sys, double I, const RVec& R,
                                               const HannayConnectionOptions& opt) {
    const double h = opt.param_step;
    std::vector<std::vector<Vec2>> g(R.size());
    for (int i = 0; i < R.size(); ++i) {
        auto at = [&](double off) {
            RVec S = R;
            S[i] += off;
            return orbit_at_action(sys, I, S, opt.orbit_samples);
        };
        const auto p2 = at(2 * h), p1 = at(h), m1 = at(-h), m2 = at(-2 * h);
        g[i].resize(opt.orbit_samples);
        for (int j = 0; j < opt.orbit_samples; ++j)
            g[i][j] = (-p2[j] + 8.0 * p1[j] - 8.0 * m1[j] + m2[j]) / (12.0 * h);
    }
    return g;
}

RVec cycle_derivative(const std::function<RVec(double)>& cycle, double s) {
    const double h = 1e-4;
    auto at = [&](double x) { return cycle(positive_mod(x, 1.0)); };
    return (-at(s + 2 * h) + 8.0 * at(s + h) - 8.0 * at(s - h) + at(s - 2 * h)) / (12.0 * h);
}

double loop_integral(const OneDofSystem& sys, double I, const std::function<RVec(double)>& cycle,
                     const HannayConnectionOptions& opt) {
    double acc = 0.0;
    for (int k = 0; k < opt.cycle_samples; ++k) {
        const double s = static_cast<double>(k) / opt.cycle_samples;
        acc += hannay_vector_potential(sys, I, cycle(s), opt).dot(cycle_derivative(cycle, s));
    }
    return acc / opt.cycle_samples;
}

}  // namespace

RVec hannay_vector_potential(const OneDofSystem& sys, double I, const RVec& R, const HannayConnectionOptions& opt) {
    const auto orbit = orbit_at_action(sys, I, R, opt.orbit_samples);
    const auto g = orbit_gradients(sys, I, R, opt);
    RVec A = RVec::Zero(R.size());
    for (int i = 0; i < R.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < opt.orbit_samples; ++j) s += orbit[j].y() * g[i][j].x();
        A[i] = s / opt.orbit_samples;
    }
    return A;
}

RMat hannay_curvature(const OneDofSystem& sys, double I, const RVec& R, const HannayConnectionOptions& opt) {
    const auto g = orbit_gradients(sys, I, R, opt);
    const int n = static_cast<int>(R.size());
    RMat V = RMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
            double s = 0.0;
            for (int j = 0; j < opt.orbit_samples; ++j) s += g[i][j].y() * g[k][j].x() - g[k][j].y() * g[i][j].x();
            V(i, k) = s / opt.orbit_samples;
            V(k, i) = -V(i, k);
        }
    return V;
}

Vec3 hannay_curvature_vector(const OneDofSystem& sys, double I, const RVec& R, const HannayConnectionOptions& opt) {
    if (R.size() != 3) throw DomainError("curvature vector needs three parameters");
    const RMat V = hannay_curvature(sys, I, R, opt);
    return Vec3(V(1, 2), V(2, 0), V(0, 1));
}

HannayResult hannay_connection(const OneDofSystem& sys, double I, const std::function<RVec(double)>& cycle,
                               const HannayConnectionOptions& opt) {
    if (!(I > 0)) throw DomainError("action must be positive");
    if (opt.cycle_samples < 8 || opt.orbit_samples < 8) throw DomainError("too few samples for the connection");
    const RVec R0 = cycle(0.0);
    if ((cycle(1.0) - R0).norm() > 1e-10 * (1.0 + R0.norm())) throw DomainError("parameter cycle is not closed");
    const double dI = opt.rel_action_step * I;
    HannayResult res;
    res.method = HannayMethod::connection;
    res.unwrapped = -(loop_integral(sys, I + dI, cycle, opt) - loop_integral(sys, I - dI, cycle, opt)) / (2 * dI);
    res.angle = wrap_phase(res.unwrapped);
    return res;
}

Vec3 oscillator_curvature(double I, const Vec3& R) {
    const double m2 = R.z() * R.z() - R.x() * R.x() - R.y() * R.y();
    if (!(m2 > 0)) throw DomainError("point outside the light cone");
    return -0.5 * I * R / std::pow(m2, 1.5);
}

HannayResult oscillator_hannay_angle(const std::function<RVec(double)>& cycle, int samples) {
    if (samples < 16) throw DomainError("too few samples");
    auto eval = [&](double s, double& phi, double& f) {
        const RVec R = cycle(s);
        const double m2 = R[2] * R[2] - R[0] * R[0] - R[1] * R[1];
        if (!(m2 > 0) || !(R[2] > 0)) throw DomainError("cycle leaves the light cone");
        phi = std::atan2(R[1], R[0]);
        f = R[2] / std::sqrt(m2) - 1.0;
    };
    double phi0, f0;
    eval(0.0, phi0, f0);
    double acc = 0.0, phi_prev = phi0, f_prev = f0;
    for (int k = 1; k <= samples; ++k) {
        double phi, f;
        eval(static_cast<double>(k) / samples, phi, f);
        acc += 0.5 * (f + f_prev) * wrap_phase(phi - phi_prev);
        phi_prev = phi;
        f_prev = f;
    }
    HannayResult res;
    res.method = HannayMethod::analytic;
    res.unwrapped = 0.5 * acc;
    res.angle = wrap_phase(res.unwrapped);
    return res;
}

// Planar curves

PlanarCurve circle_curve(double radius) {
    if (!(radius > 0)) throw GeometryError("circle radius must be positive");
    PlanarCurve c;
    c.name = "circle";
    c.r = [radius](double u) { return Vec2(radius * std::cos(u), radius * std::sin(u)); };
    c.dr = [radius](double u) { return Vec2(-radius * std::sin(u), radius * std::cos(u)); };
    c.d2r = [radius](double u) { return Vec2(-radius * std::cos(u), -radius * std::sin(u)); };
    return c;
}

PlanarCurve ellipse_curve(double a, double b) {
    if (!(a > 0) || !(b > 0)) throw GeometryError("ellipse semi-axes must be positive");
    PlanarCurve c;
    c.name = "ellipse";
    c.r = [a, b](double u) { return Vec2(a * std::cos(u), b * std::sin(u)); };
    c.dr = [a, b](double u) { return Vec2(-a * std::sin(u), b * std::cos(u)); };
    c.d2r = [a, b](double u) { return Vec2(-a * std::cos(u), -b * std::sin(u)); };
    return c;
}

PlanarCurve stadium_curve(double length, double radius) {
    if (!(length >= 0) || !(radius > 0)) throw GeometryError("stadium needs length >= 0 and radius > 0");
    const double L = length, rho = radius, C = 2 * L + kTwoPi * rho, k = C / kTwoPi;
    // Position, tangent and curvature vector at arc length s.
    auto at = [=](double u, int order) {
        const double s = positive_mod(u, kTwoPi) * k;
        const double b1 = L, b2 = L + kPi * rho, b3 = 2 * L + kPi * rho;
        Vec2 r, t, n;
        if (s < b1) {
            r = Vec2(-L / 2 + s, -rho), t = Vec2(1, 0), n = Vec2(0, 0);
        } else if (s < b2) {
            const double a = -kPi / 2 + (s - b1) / rho;
            r = Vec2(L / 2 + rho * std::cos(a), rho * std::sin(a));
            t = Vec2(-std::sin(a), std::cos(a));
            n = Vec2(-std::cos(a), -std::sin(a)) / rho;
        } else if (s < b3) {
            r = Vec2(L / 2 - (s - b2), rho), t = Vec2(-1, 0), n = Vec2(0, 0);
        } else {
            const double a = kPi / 2 + (s - b3) / rho;
            r = Vec2(-L / 2 + rho * std::cos(a), rho * std::sin(a));
            t = Vec2(-std::sin(a), std::cos(a));
            n = Vec2(-std::cos(a), -std::sin(a)) / rho;
        }
        if (order == 0) return r;
        if (order == 1) return Vec2(t * k);
        return Vec2(n * k * k);
    };
    PlanarCurve c;
    c.name = "stadium";
    c.breaks = {kTwoPi * L / C, kTwoPi * (L + kPi * rho) / C, kTwoPi * (2 * L + kPi * rho) / C};
    c.r = [at](double u) { return at(u, 0); };
    c.dr = [at](double u) { return at(u, 1); };
    c.d2r = [at](double u) { return at(u, 2); };
    return c;
}

PlanarCurve spline_curve(const std::vector<Vec2>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n < 3) throw GeometryError("spline loop needs at least three points");
    const double h = kTwoPi / n;
    // Periodic cubic spline second derivatives: M_{k-1} + 4 M_k + M_{k+1} = 6 (y_{k+1} - 2 y_k + y_{k-1}) / h^2.
    RMat A = RMat::Zero(n, n);
    RMat rhs(n, 2);
    for (int k = 0; k < n; ++k) {
        A(k, (k + n - 1) % n) += 1.0;
        A(k, k) += 4.0;
        A(k, (k + 1) % n) += 1.0;
        const Vec2 d = (pts[(k + 1) % n] - 2.0 * pts[k] + pts[(k + n - 1) % n]) * (6.0 / (h * h));
        rhs.row(k) = d.transpose();
    }
    const RMat M = A.partialPivLu().solve(rhs);
    auto at = [pts, M, n, h](double u, int order) {
        const double x = positive_mod(u, kTwoPi) / h;
        const int k = std::min(static_cast<int>(x), n - 1);
        const int k1 = (k + 1) % n;
        const double t = x - k, a = 1.0 - t;
        const Vec2 Mk = M.row(k).transpose(), Mk1 = M.row(k1).transpose();
        const Vec2 yk = pts[k], yk1 = pts[k1];
        if (order == 0)
            return Vec2(a * yk + t * yk1 + h * h / 6.0 * ((a * a * a - a) * Mk + (t * t * t - t) * Mk1));
        if (order == 1)
            return Vec2((yk1 - yk) / h + h / 6.0 * ((1.0 - 3.0 * a * a) * Mk + (3.0 * t * t - 1.0) * Mk1));
        return Vec2(a * Mk + t * Mk1);
    };
    PlanarCurve c;
    c.name = "spline";
    for (int k = 1; k < n; ++k) c.breaks.push_back(h * k);
    c.r = [at](double u) { return at(u, 0); };
    c.dr = [at](double u) { return at(u, 1); };
    c.d2r = [at](double u) { return at(u, 2); };
    return c;
}

namespace {

// Composite Gauss quadrature of f over [a, b] in u, split at the curve's breaks.
template <class F>
double integrate_u(const PlanarCurve& c, F f, double a, double b, int panels = 64) {
    std::vector<double> cuts{a};
    for (double x : c.breaks)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        for (int k = 0; k < panels; ++k)
            s += GL10::integrate(f, lo + (hi - lo) * k / panels, lo + (hi - lo) * (k + 1) / panels);
    }
    return s;
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto cr = [](const Vec2& o, const Vec2& p, const Vec2& q) {
        return (p.x() - o.x()) * (q.y() - o.y()) - (p.y() - o.y()) * (q.x() - o.x());
    };
    const double d1 = cr(c, d, a), d2 = cr(c, d, b), d3 = cr(a, b, c), d4 = cr(a, b, d);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace

CurveGeometry curve_geometry(const PlanarCurve& c) {
    const int n = 1024;
    std::vector<Vec2> poly(n);
    for (int k = 0; k < n; ++k) {
        poly[k] = c.r(kTwoPi * k / n);
        if (!poly[k].allFinite()) throw GeometryError("curve evaluates to non-finite points");
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                throw GeometryError("curve " + c.name + " intersects itself");
        }
    CurveGeometry g;
    g.area = 0.5 * integrate_u(
                       c,
                       [&](double u) {
                           const Vec2 r = c.r(u), d = c.dr(u);
                           return r.x() * d.y() - r.y() * d.x();
                       },
                       0.0, kTwoPi);
    g.circumference = integrate_u(c, [&](double u) { return c.dr(u).norm(); }, 0.0, kTwoPi);
    if (!(g.area > 0)) throw GeometryError("curve must be counterclockwise");
    return g;
}

BeadSlip bead_slip(const PlanarCurve& curve, const BeadOptions& opt) {
    if (!(opt.speed > 0) || !(opt.rotation_time > 0) || !(opt.dt > 0)) throw DomainError("bead options must be positive");
    const CurveGeometry geo = curve_geometry(curve);
    BeadSlip out;
    out.area = geo.area;
    out.circumference = geo.circumference;
    out.analytic = -4.0 * kPi * geo.area / geo.circumference;

    const double C = geo.circumference;

    // Arc-length table u(s) from du/ds = 1/|r'(u)|, cubic Hermite between nodes.
    const int K = 1 << 14;
    const double hs = C / K;
    std::vector<double> uk(K + 1), fk(K + 1);
    auto dus = [&](double u) { return 1.0 / curve.dr(u).norm(); };
    uk[0] = 0.0;
    for (int k = 0; k < K; ++k) {
        const double u = uk[k];
        const double k1 = dus(u), k2 = dus(u + 0.5 * hs * k1), k3 = dus(u + 0.5 * hs * k2), k4 = dus(u + hs * k3);
        uk[k + 1] = u + hs / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    if (std::abs(uk[K] - kTwoPi) > 1e-8) throw AccuracyError("arc-length table does not close");
    uk[K] = kTwoPi;
    for (int k = 0; k <= K; ++k) fk[k] = dus(uk[k]);
    auto u_of_s = [&](double s) {
        const double turns = std::floor(s / C);
        const double x = (s - turns * C) / hs;
        const int k = std::min(static_cast<int>(x), K - 1);
        const double t = x - k, t2 = t * t, t3 = t2 * t;
        return turns * kTwoPi + (2 * t3 - 3 * t2 + 1) * uk[k] + (t3 - 2 * t2 + t) * hs * fk[k] +
               (-2 * t3 + 3 * t2) * uk[k + 1] + (t3 - t2) * hs * fk[k + 1];
    };

    const double T = opt.rotation_time, w = kTwoPi / T;
    auto phid = [&](double t) { return w * (1.0 - std::cos(w * t)); };
    auto phidd = [&](double t) { return w * w * std::sin(w * t); };
    // Position and unit tangent at arc length s.
    auto frame = [&](double s, Vec2& r, Vec2& tan) {
        const double u = u_of_s(s);
        r = curve.r(u);
        tan = curve.dr(u).normalized();
    };
    auto accel = [&](double t, double s) {
        Vec2 r, tan;
        frame(s, r, tan);
        const double g = r.x() * tan.y() - r.y() * tan.x();
        const double pd = phid(t);
        return -phidd(t) * g + pd * pd * r.dot(tan);
    };
    auto frozen_speed = [&](double t, double s, double v) {
        Vec2 r, tan;
        frame(s, r, tan);
        return std::abs(v + phid(t) * (r.x() * tan.y() - r.y() * tan.x()));
    };
    const long steps = static_cast<long>(std::ceil(T / opt.dt));
    const double h = T / steps;
    const double s0 = integrate_u(curve, [&](double v) { return curve.dr(v).norm(); }, 0.0, positive_mod(opt.u0, kTwoPi));
    double s = s0, v = opt.speed;
    for (long k = 0; k < steps; ++k) {
        const double t = k * h;
        const double k1s = v, k1v = accel(t, s);
        const double k2s = v + 0.5 * h * k1v, k2v = accel(t + 0.5 * h, s + 0.5 * h * k1s);
        const double k3s = v + 0.5 * h * k2v, k3v = accel(t + 0.5 * h, s + 0.5 * h * k2s);
        const double k4s = v + h * k3v, k4v = accel(t + h, s + h * k3s);
        s += h / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        out.action_drift = std::max(out.action_drift, std::abs(frozen_speed(t + h, s, v) - opt.speed) / opt.speed);
    }
    const double ds = s - s0;
    out.laps = ds / C;
    out.simulated = ds - opt.speed * T;
    return out;
}

double foucault_precession(double alpha) {
    if (!(alpha >= 0 && alpha <= kPi)) throw DomainError("colatitude must lie in [0, pi]");
    return positive_mod(kTwoPi * (1.0 - std::cos(alpha)), kTwoPi);
}

FoucaultResult foucault_simulation(double alpha, const FoucaultOptions& opt) {
    FoucaultResult res;
    res.analytic = foucault_precession(alpha);
    const double T = opt.day, w = kTwoPi / T, w0 = opt.omega0;
    auto phi = [&](double t) { return kTwoPi * smooth_ramp(t / T); };
    auto phid = [&](double t) { return w * (1.0 - std::cos(w * t)); };
    const Vec3 g0(std::sin(alpha), 0.0, std::cos(alpha)), e10(std::cos(alpha), 0.0, -std::sin(alpha)),
        e20(0.0, 1.0, 0.0);
    auto rot = [&](double t) { return Eigen::AngleAxisd(phi(t), Vec3::UnitZ()).toRotationMatrix(); };
    // Bob on the unit sphere with potential w0^2 g.x.
    auto accel = [&](double t, const Vec3& x, const Vec3& v) {
        const Vec3 g = rot(t) * g0;
        return Vec3(-w0 * w0 * (g - g.dot(x) * x) - v.squaredNorm() * x);
    };
    auto axis = [&](double t, const Vec3& x, const Vec3& v) {
        const Mat3 Q = rot(t);
        const Vec3 e1 = Q * e10, e2 = Q * e20;
        const Vec3 vr = v - phid(t) * Vec3::UnitZ().cross(x);
        const double d1 = x.dot(e1), d2 = x.dot(e2), v1 = vr.dot(e1), v2 = vr.dot(e2);
        const double k11 = v1 * v1 + w0 * w0 * d1 * d1, k22 = v2 * v2 + w0 * w0 * d2 * d2,
                     k12 = v1 * v2 + w0 * w0 * d1 * d2;
        return 0.5 * std::atan2(2.0 * k12, k11 - k22);
    };
    Vec3 x = -g0 * std::cos(opt.amplitude) + e10 * std::sin(opt.amplitude), v = Vec3::Zero();
    const long steps = static_cast<long>(std::ceil(T / opt.dt));
    const double h = T / steps;
    const double chi0 = axis(0.0, x, v);
    double chi = chi0, prev = chi0;
    for (long k = 0; k < steps; ++k) {
        const double t = k * h;
        const Vec3 k1x = v, k1v = accel(t, x, v);
        const Vec3 k2x = v + 0.5 * h * k1v, k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x, k2x);
        const Vec3 k3x = v + 0.5 * h * k2v, k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x, k3x);
        const Vec3 k4x = v + h * k3v, k4v = accel(t + h, x + h * k3x, k4x);
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        x.normalize();
        v -= v.dot(x) * x;
        const double a = axis(t + h, x, v);
        // Axis angle is defined modulo pi.
        chi += std::remainder(a - prev, kPi);
        prev = a;
    }
    res.unwrapped = chi - chi0;
    res.simulated = positive_mod(res.unwrapped, kTwoPi);
    return res;
}

}  // namespace holab::classical
