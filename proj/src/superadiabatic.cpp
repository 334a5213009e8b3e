#include "holab/dynamics.hpp"
#include "su2.hpp"

extern "C" {
#include <quadmath.h>
}
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace holab::dynamics {

namespace {

using quad = __float128;

const quad kPiQ = M_PIq;

// the FFTW planner is not thread-safe
std::mutex fftwq_planner;

// Periodic spectral calculus on a uniform grid with a sharp wavenumber cutoff.
class SpectralGrid {
public:
    SpectralGrid(int n, quad h, double cutoff) : n_(n), k_(n), keep_(n) {
        std::lock_guard<std::mutex> lock(fftwq_planner);
        buf_ = static_cast<fftwq_complex*>(fftwq_malloc(sizeof(fftwq_complex) * n));
        fwd_ = fftwq_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftwq_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        const quad dk = 2 * kPiQ / (n * h);
        for (int j = 0; j < n; ++j) {
            const int m = j < n / 2 ? j : j - n;
            k_[j] = dk * m;
            keep_[j] = (j != n / 2) && std::abs(m) <= cutoff * (n / 2);
        }
    }
    ~SpectralGrid() {
        std::lock_guard<std::mutex> lock(fftwq_planner);
        fftwq_destroy_plan(fwd_);
        fftwq_destroy_plan(bwd_);
        fftwq_free(buf_);
    }
    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    std::vector<quad> derivative(const std::vector<quad>& f) {
        load(f);
        fftwq_execute(fwd_);
        for (int j = 0; j < n_; ++j) {
            const quad re = buf_[j][0], im = buf_[j][1];
            if (!keep_[j]) {
                buf_[j][0] = buf_[j][1] = 0;
                continue;
            }
            buf_[j][0] = -k_[j] * im;
            buf_[j][1] = k_[j] * re;
        }
        return unload();
    }

    // Periodic part of the antiderivative (zero-mean component removed); the mean is returned separately.
    std::vector<quad> antiderivative(const std::vector<quad>& f, quad& mean) {
        load(f);
        fftwq_execute(fwd_);
        mean = buf_[0][0] / n_;
        for (int j = 0; j < n_; ++j) {
            const quad re = buf_[j][0], im = buf_[j][1];
            if (j == 0 || !keep_[j]) {
                buf_[j][0] = buf_[j][1] = 0;
                continue;
            }
            // F / (i k)
            buf_[j][0] = im / k_[j];
            buf_[j][1] = -re / k_[j];
        }
        return unload();
    }

private:
    void load(const std::vector<quad>& f) {
        for (int j = 0; j < n_; ++j) {
            buf_[j][0] = f[j];
            buf_[j][1] = 0;
        }
    }
    std::vector<quad> unload() {
        fftwq_execute(bwd_);
        std::vector<quad> out(n_);
        for (int j = 0; j < n_; ++j) out[j] = buf_[j][0] / n_;
        return out;
    }

    int n_;
    std::vector<quad> k_;
    std::vector<bool> keep_;
    fftwq_complex* buf_;
    fftwq_plan fwd_, bwd_;
};

quad reduce_2pi(quad x) { return remainderq(x, 2 * kPiQ); }

}  // namespace

FieldSchedule sech_pulse(double kappa, double lambda) {
    FieldSchedule f;
    f.eval = [kappa, lambda](double t) {
        const double s = 1.0 / std::cosh(lambda * t);
        return Vec3(kappa * s, kappa * s * std::tanh(lambda * t), 1.0);
    };
    f.eval_quad = [kappa, lambda](quad t, quad* out) {
        const quad lt = static_cast<quad>(lambda) * t;
        const quad s = 1 / coshq(lt);
        out[0] = static_cast<quad>(kappa) * s;
        out[1] = static_cast<quad>(kappa) * s * tanhq(lt);
        out[2] = 1;
    };
    return f;
}

SuperadiabaticSeries superadiabatic_iterate(const FieldSchedule& B0, double epsilon, int k_max,
                                            const SuperadiabaticOptions& opt) {
    if (!(epsilon > 0)) throw DomainError("epsilon must be positive");
    if (opt.grid < 16 || opt.grid % 2) throw DomainError("grid must be even and at least 16");
    const int N = opt.grid;
    const quad L = opt.half_width;
    const quad h = 2 * L / N;
    const quad eps = epsilon;
    SpectralGrid sg(N, h, opt.cutoff);

    std::vector<quad> bx(N), by(N), bz(N);
    SuperadiabaticSeries out;
    out.tau.resize(N);
    for (int j = 0; j < N; ++j) {
        const quad t = -L + j * h;
        out.tau[j] = static_cast<double>(t);
        quad v[3];
        if (B0.eval_quad) {
            B0.eval_quad(t, v);
        } else {
            const Vec3 d = B0.eval(static_cast<double>(t));
            v[0] = d[0], v[1] = d[1], v[2] = d[2];
        }
        bx[j] = v[0], by[j] = v[1], bz[j] = v[2];
    }

    quad geometric_sum = 0;
    double best = 1e300;
    for (int k = 0; k <= k_max; ++k) {
        std::vector<quad> n(N), x(N), y(N), z(N);
        quad nmin = 1e300Q, zmin = 2, ext = 0;
        std::vector<Vec3> cyc(N);
        for (int j = 0; j < N; ++j) {
            n[j] = sqrtq(bx[j] * bx[j] + by[j] * by[j] + bz[j] * bz[j]);
            cyc[j] = Vec3(static_cast<double>(bx[j]), static_cast<double>(by[j]), static_cast<double>(bz[j]));
            nmin = std::min(nmin, n[j]);
            ext = std::max(ext, sqrtq(bx[j] * bx[j] + by[j] * by[j]));
            if (n[j] > 0) {
                x[j] = bx[j] / n[j], y[j] = by[j] / n[j], z[j] = bz[j] / n[j];
                zmin = std::min(zmin, z[j]);
            }
        }
        out.cycles.push_back(std::move(cyc));
        out.min_field.push_back(static_cast<double>(nmin));
        out.extent.push_back(static_cast<double>(ext));
        if (!(nmin > 1e-12Q) || !(zmin > -1 + 1e-6Q)) {
            out.breakdown_k = k;
            out.breakdown = !(nmin > 1e-12Q) ? "effective field vanishes" : "effective field reaches the -z pole";
            out.cycles.pop_back();
            out.min_field.pop_back();
            out.extent.pop_back();
            break;
        }
        // frame adapted to b with zero twist about b: Rodrigues frame from z, then a rotation by chi
        std::vector<quad> e1x(N), e1y(N), e1z(N), e2x(N), e2y(N), e2z(N), f(N);
        for (int j = 0; j < N; ++j) {
            const quad c = 1 + z[j];
            e1x[j] = 1 - x[j] * x[j] / c, e1y[j] = -x[j] * y[j] / c, e1z[j] = -x[j];
            e2x[j] = -x[j] * y[j] / c, e2y[j] = 1 - y[j] * y[j] / c, e2z[j] = -y[j];
        }
        const auto dbx = sg.derivative(x), dby = sg.derivative(y), dbz = sg.derivative(z);
        const auto de2x = sg.derivative(e2x), de2y = sg.derivative(e2y), de2z = sg.derivative(e2z);
        for (int j = 0; j < N; ++j) f[j] = e1x[j] * de2x[j] + e1y[j] * de2y[j] + e1z[j] * de2z[j];
        quad mean = 0;
        const auto g = sg.antiderivative(f, mean);
        const quad alpha = mean * 2 * L;

        std::vector<quad> nbx(N), nby(N), nbz(N);
        quad dyn = 0;
        for (int j = 0; j < N; ++j) {
            const quad chi = mean * (j * h) + g[j] - g[0];
            const quad cs = cosq(chi), sn = sinq(chi);
            const quad a1 = cs * e1x[j] + sn * e2x[j], a2 = cs * e1y[j] + sn * e2y[j], a3 = cs * e1z[j] + sn * e2z[j];
            const quad c1 = -sn * e1x[j] + cs * e2x[j], c2 = -sn * e1y[j] + cs * e2y[j], c3 = -sn * e1z[j] + cs * e2z[j];
            const quad wx = -(dbx[j] * c1 + dby[j] * c2 + dbz[j] * c3);
            const quad wy = dbx[j] * a1 + dby[j] * a2 + dbz[j] * a3;
            nbx[j] = -eps * wx;
            nby[j] = -eps * wy;
            nbz[j] = n[j];
            dyn += n[j];
        }
        dyn *= h / (2 * eps);
        geometric_sum += alpha / 2;
        out.terms.push_back(static_cast<double>(alpha / 2));
        out.dynamical.push_back(static_cast<double>(reduce_2pi(dyn)));
        out.truncated_phase.push_back(static_cast<double>(reduce_2pi(dyn + geometric_sum)));
        if (std::abs(out.terms.back()) < best) {
            best = std::abs(out.terms.back());
            out.optimal_k = k;
        }
        bx.swap(nbx), by.swap(nby), bz.swap(nbz);
    }
    if (out.terms.empty()) throw NumericalError("superadiabatic iteration broke down at k = 0: " + out.breakdown);
    return out;
}

namespace {

Eigen::Vector2cd magnus4(const FieldSchedule& B, double eps, double L, long steps) {
    // i eps psi' = (1/2) B.sigma psi; generator per step -i (dt/2eps)(B1+B2)/2 . sigma + commutator term
    const double dt = 2 * L / steps;
    const double g = std::sqrt(3.0) / 6.0;
    Eigen::Vector2cd psi(0, 1);
    for (long k = 0; k < steps; ++k) {
        const double t0 = -L + k * dt;
        const Vec3 b1 = B.eval(t0 + (0.5 - g) * dt) / (2 * eps);
        const Vec3 b2 = B.eval(t0 + (0.5 + g) * dt) / (2 * eps);
        // Omega = -i dt (b1+b2)/2 . sigma + (sqrt3/12) dt^2 [A2, A1], A = -i b.sigma, [b2.s, b1.s] = 2i (b2 x b1).s
        // => (sqrt3/12) dt^2 (-1)(2i)(b2 x b1).s = -i dt [ (sqrt3/6) dt (b2 x b1) ].s
        const Vec3 a = 0.5 * (b1 + b2) + (std::sqrt(3.0) / 6.0) * dt * b2.cross(b1);
        psi = detail::su2_exp(a, dt) * psi;
    }
    return psi;
}

}  // namespace

ExactSpinResult exact_lower_state_phase(const FieldSchedule& B0, double epsilon, double half_width, long steps) {
    if (!B0.eval) throw DomainError("field schedule needs a double evaluator");
    const auto coarse = magnus4(B0, epsilon, half_width, steps);
    const auto fine = magnus4(B0, epsilon, half_width, 2 * steps);
    // fourth-order Richardson on the amplitudes
    const Eigen::Vector2cd psi = (16.0 * fine - coarse) / 15.0;
    ExactSpinResult r;
    r.phase = std::arg(psi[1]);
    r.transition = std::norm(psi[0]) / psi.squaredNorm();
    r.richardson_change = (fine - coarse).cwiseAbs().maxCoeff();
    return r;
}

}  // namespace holab::dynamics
