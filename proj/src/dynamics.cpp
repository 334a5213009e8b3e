#include "holab/dynamics.hpp"

#include "holab/abelian.hpp"
#include "su2.hpp"

#include <future>

namespace holab::dynamics {

void Schedule::validate() const {
    if (!path) throw DomainError("schedule has no path");
    if (!(epsilon > 0) || !std::isfinite(epsilon)) throw DomainError("schedule epsilon must be positive");
    if (samples < 1) throw DomainError("schedule needs at least one interval");
}

CMat unitary_step(const CMat& H, double dt) {
    if (H.rows() == 2) {
        const double a0 = 0.5 * (H(0, 0).real() + H(1, 1).real());
        const Vec3 a(H(0, 1).real(), -H(0, 1).imag(), 0.5 * (H(0, 0).real() - H(1, 1).real()));
        return std::exp(cplx(0, -a0 * dt)) * detail::su2_exp(a, dt);
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    CVec ph(H.rows());
    for (int i = 0; i < H.rows(); ++i) ph[i] = std::exp(cplx(0, -es.eigenvalues()[i] * dt));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

TrajectoryRecord propagate_fixed(const std::function<CMat(double)>& H, double t0, double t1, const CVec& psi0,
                                 long steps, long store_every) {
    if (steps < 1 || store_every < 1) throw DomainError("step counts must be positive");
    if (!(t1 > t0)) throw DomainError("propagation interval must be increasing");
    const double dt = (t1 - t0) / steps;
    if (!(dt > 0) || t0 + dt == t0) throw NumericalError("step-size underflow");
    TrajectoryRecord tr;
    tr.substeps = static_cast<int>(store_every);
    CVec psi = psi0;
    tr.times.push_back(t0);
    tr.states.push_back(psi);
    tr.norms.push_back(psi.norm());
    for (long k = 0; k < steps; ++k) {
        const CMat h = H(t0 + (k + 0.5) * dt);
        if (!h.allFinite()) throw ModelError("non-finite Hamiltonian during propagation");
        psi = unitary_step(h, dt) * psi;
        if ((k + 1) % store_every == 0 || k + 1 == steps) {
            tr.times.push_back(t0 + (k + 1) * dt);
            tr.states.push_back(psi);
            tr.norms.push_back(psi.norm());
        }
    }
    return tr;
}

TrajectoryRecord propagate(const HamiltonianFamily& family, const Schedule& schedule, const CVec& psi0,
                           const PropagateOptions& opt) {
    schedule.validate();
    if (psi0.size() != family.dim()) throw DomainError("initial state dimension does not match the family");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw DomainError("initial state must have unit norm");
    const double T = schedule.duration();
    auto H = [&](double t) { return family(schedule.path(t / T)); };
    int m = std::max(1, opt.min_substeps);
    TrajectoryRecord prev = propagate_fixed(H, 0.0, T, psi0, static_cast<long>(schedule.samples) * m, m);
    while (true) {
        m *= 2;
        if (m > opt.max_substeps) throw NumericalError("step-size underflow: tolerance not reached");
        TrajectoryRecord cur = propagate_fixed(H, 0.0, T, psi0, static_cast<long>(schedule.samples) * m, m);
        double change = 0.0;
        for (size_t j = 0; j < cur.states.size(); ++j)
            change = std::max(change, (cur.states[j] - prev.states[j]).cwiseAbs().maxCoeff());
        cur.refinement_change = change;
        if (change < opt.tol) return cur;
        prev = std::move(cur);
    }
}

PhaseDecomposition aa_phase(const TrajectoryRecord& traj, bool closed) {
    if (traj.states.size() < 2) throw DomainError("trajectory needs at least two states");
    const cplx end = traj.states.front().dot(traj.states.back());
    if (closed && std::abs(end) <= 1e-6) throw OverlapError("endpoints are nearly orthogonal; phase undefined");
    PhaseDecomposition p;
    p.open_path = !closed;
    p.total = std::arg(end);
    double dyn = 0.0;
    for (size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const cplx o = traj.states[k].dot(traj.states[k + 1]);
        if (std::abs(o) < 0.5 * traj.states[k].norm() * traj.states[k + 1].norm())
            throw AccuracyError("stored grid too coarse for the dynamical phase at sample " + std::to_string(k));
        dyn += std::arg(o);
    }
    p.dynamical = dyn;
    p.geometric = wrap_phase(p.total - p.dynamical);
    return p;
}

std::vector<ErrorScanRow> adiabatic_error_scan(const HamiltonianFamily& family,
                                               const std::function<ParameterPoint(double)>& cycle, int n,
                                               const std::vector<double>& epsilons, int samples) {
    const double gamma = abelian::loop_phase(family, n, cycle, 1e-9, 256, 1 << 18).phase;
    const CVec start = spectral::eigendecompose(family, cycle(0.0)).states.col(n);
    const CVec end = spectral::eigendecompose(family, cycle(1.0)).states.col(n);
    std::vector<std::future<ErrorScanRow>> jobs;
    for (double eps : epsilons) {
        jobs.push_back(std::async(std::launch::async, [&, eps] {
            Schedule s{cycle, eps, samples};
            PropagateOptions opt;
            opt.tol = 1e-8;
            auto tr = propagate(family, s, start, opt);
            ErrorScanRow row;
            row.epsilon = eps;
            row.leakage = 1.0 - std::norm(end.dot(tr.states.back()));
            row.geometric = aa_phase(tr, true).geometric;
            row.phase_error = std::abs(wrap_phase(row.geometric - gamma));
            return row;
        }));
    }
    std::vector<ErrorScanRow> rows;
    for (auto& j : jobs) rows.push_back(j.get());
    return rows;
}

namespace {

struct TwoLevel {
    Eigen::Vector2cd up, down;
    double e;  // |R|; levels are -e, +e
};

TwoLevel two_level(const Vec3& R) {
    auto es = spectral::eigendecompose(dot_sigma(R));
    TwoLevel t;
    t.down = es.states.col(0);
    t.up = es.states.col(1);
    t.e = R.norm();
    return t;
}

// First-order superadiabatic state |n> + i eps <m|d_tau n>/(E_m - E_n) |m>.
Eigen::Vector2cd superadiabatic_state(const std::function<Vec3(double)>& R, double tau, double eps, bool up) {
    const double h = 1e-5;
    const TwoLevel c = two_level(R(tau)), p = two_level(R(tau + h)), m = two_level(R(tau - h));
    auto align = [](const Eigen::Vector2cd& ref, Eigen::Vector2cd v) {
        const cplx o = ref.dot(v);
        return Eigen::Vector2cd(v * std::conj(o) / std::abs(o));
    };
    Eigen::Vector2cd v;
    if (up) {
        const Eigen::Vector2cd d = (align(c.up, p.up) - align(c.up, m.up)) / (2 * h);
        v = c.up + kI * eps * c.down.dot(d) / (-2 * c.e) * c.down;
    } else {
        const Eigen::Vector2cd d = (align(c.down, p.down) - align(c.down, m.down)) / (2 * h);
        v = c.down + kI * eps * c.up.dot(d) / (2 * c.e) * c.up;
    }
    return v / v.norm();
}

}  // namespace

double transition_probability(const std::function<Vec3(double)>& R, double epsilon, double half_width, long steps) {
    if (!(epsilon > 0)) throw DomainError("epsilon must be positive");
    if (steps < 1) throw DomainError("steps must be positive");
    const double dtau = 2 * half_width / steps;
    Eigen::Vector2cd psi = superadiabatic_state(R, -half_width, epsilon, true);
    for (long k = 0; k < steps; ++k) {
        const Vec3 r = R(-half_width + (k + 0.5) * dtau);
        if (!(r.norm() > 0)) throw DegenerateError("field vanishes on the sweep");
        psi = detail::su2_exp(r, dtau / epsilon) * psi;
    }
    const Eigen::Vector2cd down = superadiabatic_state(R, half_width, epsilon, false);
    const double P = std::norm(down.dot(psi));
    if (P < 1e-14)
        throw PrecisionError("transition probability " + std::to_string(P) + " below 1e-14; use larger epsilon");
    return P;
}

AmplitudeFit geometric_amplitude_fit(const std::function<Vec3(double)>& R, const std::vector<double>& epsilons,
                                     double half_width, long steps) {
    if (epsilons.size() < 4) throw DomainError("amplitude fit needs at least four epsilon values");
    std::vector<std::future<double>> jobs;
    for (double e : epsilons)
        jobs.push_back(std::async(std::launch::async, [&, e] { return transition_probability(R, e, half_width, steps); }));
    AmplitudeFit f;
    f.epsilons = epsilons;
    for (auto& j : jobs) f.logP.push_back(std::log(j.get()));
    const int n = static_cast<int>(epsilons.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = 1.0 / epsilons[i], y = f.logP[i];
        sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
    }
    const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
    f.slope = cxy / cxx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = cyy > 0 ? cxy * cxy / (cxx * cyy) : 1.0;
    f.gamma = f.intercept / kPi;
    return f;
}

}  // namespace holab::dynamics
