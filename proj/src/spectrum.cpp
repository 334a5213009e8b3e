#include "holab/abelian.hpp"
#include "holab/dynamics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <future>
#include <mutex>

namespace holab::dynamics {

namespace {
// the FFTW planner is not thread-safe
std::mutex fftw_planner;
}  // namespace

SpectrumReport spectrum(const std::vector<double>& signal, double dt, double rel_threshold) {
    const int n = static_cast<int>(signal.size());
    if (n < 8) throw DomainError("spectrum needs at least 8 samples");
    if (!(dt > 0)) throw DomainError("sample spacing must be positive");
    double* in;
    fftw_complex* out;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner);
        in = fftw_alloc_real(n);
        out = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    }
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= n;
    for (int j = 0; j < n; ++j) in[j] = (signal[j] - mean) * 0.5 * (1.0 - std::cos(2 * kPi * j / n));
    fftw_execute(plan);
    SpectrumReport r;
    r.bin = 2 * kPi / (n * dt);
    for (int k = 0; k <= n / 2; ++k) {
        r.frequencies.push_back(k * r.bin);
        r.magnitude.push_back(std::hypot(out[k][0], out[k][1]) * 2.0 / n);
    }
    {
        std::lock_guard<std::mutex> lock(fftw_planner);
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }

    const auto& m = r.magnitude;
    const double top = *std::max_element(m.begin(), m.end());
    for (size_t k = 1; k + 1 < m.size(); ++k) {
        if (!(m[k] > m[k - 1] && m[k] >= m[k + 1]) || m[k] < rel_threshold * top) continue;
        const double a = m[k - 1], b = m[k], c = m[k + 1];
        const double den = a - 2 * b + c;
        const double d = den != 0 ? 0.5 * (a - c) / den : 0.0;
        r.peaks.push_back({(k + d) * r.bin, b - 0.25 * (a - c) * d});
    }
    std::stable_sort(r.peaks.begin(), r.peaks.end(), [](const Peak& x, const Peak& y) { return x.height > y.height; });
    return r;
}

NmrShiftResult nmr_shift_scenario(const NmrShiftConfig& cfg) {
    if (!(cfg.gyro != 0) || !(cfg.field > 0) || !(cfg.duration > 0) || !(cfg.sample_dt > 0) || cfg.substeps < 1)
        throw DomainError("invalid NMR scenario parameters");
    const auto family = spectral::families::nmr_rotating(cfg.gyro, cfg.omega);
    const Vec3 centre(0, 0, cfg.omega / cfg.gyro);
    const double T = cfg.period;
    auto b_rot = [&](double t) {
        const double phi = T > 0 ? 2 * kPi * t / T : 0.0;
        const double th = T > 0 ? cfg.cone_angle : 0.0;
        return Vec3(cfg.field * std::sin(th) * std::cos(phi), cfg.field * std::sin(th) * std::sin(phi),
                    cfg.field * std::cos(th));
    };
    auto H = [&](double t) {
        const Vec3 R = centre + b_rot(t);
        return family(RVec(Eigen::Vector3d(R)));
    };
    // transverse start: equal superposition of the two eigenstates of H_rot at t = 0
    auto es = spectral::eigendecompose(H(0.0));
    const CVec psi0 = (es.states.col(0) + es.states.col(1)) / std::sqrt(2.0);
    const long samples = static_cast<long>(std::llround(cfg.duration / cfg.sample_dt));
    auto tr = propagate_fixed(H, 0.0, samples * cfg.sample_dt, psi0, samples * cfg.substeps, cfg.substeps);
    std::vector<double> sx;
    const CMat X = pauli(0);
    for (size_t j = 0; j + 1 < tr.states.size(); ++j) sx.push_back(tr.states[j].dot(X * tr.states[j]).real());

    NmrShiftResult res;
    res.spectrum = spectrum(sx, cfg.sample_dt);
    res.omega_rot = std::abs(cfg.gyro) * cfg.field;
    if (T > 0) {
        // alpha is fixed by gamma_upper - gamma_lower = alpha for the modulation cycle
        auto cycle = [&](double u) { return RVec(Eigen::Vector3d(centre + b_rot(u * T))); };
        res.alpha = wrap_phase(abelian::loop_phase(family, 1, cycle, 1e-8).phase -
                               abelian::loop_phase(family, 0, cycle, 1e-8).phase);
        res.spectrum.adiabatic_warning = T < 10 * 2 * kPi / res.omega_rot;
    }
    res.expected = res.omega_rot - res.alpha / (T > 0 ? T : 1.0);
    double best = -1;
    for (const auto& p : res.spectrum.peaks)
        if (p.frequency > 0.5 * res.omega_rot && p.frequency < 1.5 * res.omega_rot && p.height > best) {
            best = p.height;
            res.measured = p.frequency;
        }
    if (best < 0) throw NumericalError("no precession peak found near omega_rot");
    return res;
}

TyckoResult nqr_tycko_scenario(const TyckoConfig& cfg) {
    if (!(cfg.omega_q > 0) || cfg.omega_r < 0 || !(cfg.duration > 0) || !(cfg.sample_dt > 0) || cfg.substeps < 1)
        throw DomainError("invalid NQR scenario parameters");
    const auto family = spectral::families::quadrupole(cfg.omega_q);
    const auto S = spectral::spin_matrices(1.5);
    auto n_hat = [&](double t) {
        return Vec3(std::sin(cfg.tilt) * std::cos(cfg.omega_r * t), std::sin(cfg.tilt) * std::sin(cfg.omega_r * t),
                    std::cos(cfg.tilt));
    };
    auto H = [&](double t) { return family(RVec(Eigen::Vector3d(n_hat(t)))); };
    // Linear-response moment along the rotation axis: the deviation density matrix left by the
    // pulse is proportional to S_z, so the signal is Tr(U^dag S_z U S_z) / Tr(S_z^2).
    const long samples = static_cast<long>(std::llround(cfg.duration / cfg.sample_dt));
    const double dt = cfg.sample_dt / cfg.substeps;
    CMat U = CMat::Identity(4, 4);
    const double norm = (S[2] * S[2]).trace().real();
    std::vector<double> mz;
    mz.reserve(samples);
    for (long j = 0; j < samples; ++j) {
        mz.push_back((U.adjoint() * S[2] * U * S[2]).trace().real() / norm);
        for (int k = 0; k < cfg.substeps; ++k) U = unitary_step(H((j * cfg.substeps + k + 0.5) * dt), dt) * U;
    }

    TyckoResult res;
    res.spectrum = spectrum(mz, cfg.sample_dt);
    res.spectrum.adiabatic_warning = cfg.omega_r > 0.1 * cfg.omega_q;
    const double c = 2 * cfg.omega_q, d = std::sqrt(3.0) * cfg.omega_r / kPi;
    res.targets = {c - d, c, c + d};
    const double half = std::max(3 * cfg.omega_r, 5 * res.spectrum.bin);
    double band_top = 0;
    for (const auto& p : res.spectrum.peaks)
        if (std::abs(p.frequency - c) <= half) band_top = std::max(band_top, p.height);
    for (const auto& p : res.spectrum.peaks)
        if (std::abs(p.frequency - c) <= half && p.height >= 0.05 * band_top) res.band.push_back(p);
    std::sort(res.band.begin(), res.band.end(), [](const Peak& a, const Peak& b) { return a.frequency < b.frequency; });
    if (res.band.empty()) throw NumericalError("no spectral lines near 2 omega_q");
    res.mismatch = 0.0;
    for (double t : res.targets) {
        double dmin = 1e300;
        for (const auto& p : res.band) dmin = std::min(dmin, std::abs(p.frequency - t));
        res.mismatch = std::max(res.mismatch, dmin);
    }
    res.triplet_within_bin = res.band.size() == 3;
    for (size_t i = 0; i < res.band.size() && i < 3; ++i)
        res.triplet_within_bin =
            res.triplet_within_bin && std::abs(res.band[i].frequency - res.targets[i]) <= res.spectrum.bin;
    return res;
}

TiltScan tycko_tilt_scan(TyckoConfig cfg, const std::vector<double>& tilts) {
    if (tilts.empty()) throw DomainError("tilt scan needs at least one tilt");
    std::vector<std::future<TyckoResult>> jobs;
    for (double t : tilts) {
        TyckoConfig c = cfg;
        c.tilt = t;
        jobs.push_back(std::async(std::launch::async, [c] { return nqr_tycko_scenario(c); }));
    }
    TiltScan s;
    s.tilts = tilts;
    double best = 1e300;
    for (size_t i = 0; i < jobs.size(); ++i) {
        TyckoResult r = jobs[i].get();
        s.mismatch.push_back(r.mismatch);
        if (r.mismatch < best) {
            best = r.mismatch;
            s.best_tilt = tilts[i];
            s.best = std::move(r);
        }
    }
    return s;
}

}  // namespace holab::dynamics
