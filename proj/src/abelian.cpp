#include "holab/abelian.hpp"

#include <cmath>

namespace holab::abelian {

using spectral::eigendecompose;
using spectral::GaugedEigensystem;

std::string to_string(CurvatureMethod m) {
    switch (m) {
    case CurvatureMethod::FiniteDifference: return "finite-difference";
    case CurvatureMethod::PerturbationSum: return "perturbation-sum";
    case CurvatureMethod::DensityMatrix: return "density-matrix";
    }
    return "?";
}

CurvatureMethod curvature_method_from_string(const std::string& s) {
    if (s == "finite-difference") return CurvatureMethod::FiniteDifference;
    if (s == "perturbation-sum") return CurvatureMethod::PerturbationSum;
    if (s == "density-matrix") return CurvatureMethod::DensityMatrix;
    throw ConfigError("unknown curvature method '" + s + "'");
}

PhaseResult berry_phase_discrete(const std::vector<CVec>& states, bool closed) {
    const int N = static_cast<int>(states.size());
    if (N < 2) throw DomainError("need at least two states");
    for (int k = 0; k < N; ++k) {
        const double nrm = states[k].norm();
        if (std::abs(nrm - 1.0) > 1e-8) throw DomainError("state " + std::to_string(k) + " is not normalized");
    }
    if (closed && std::abs(std::abs(states.front().dot(states.back())) - 1.0) > 1e-8)
        throw DomainError("closed chain: last state is not the first state up to a phase");
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
        const int next = (k + 1) % N;
        const cplx ov = states[k].dot(states[next]);  // <psi_k|psi_k+1>
        if (std::abs(ov) <= 1e-8) {
            if (next == 0)
                throw OverlapError("closing overlap <psi_" + std::to_string(N - 1) + "|psi_0> is near zero");
            throw OverlapError("overlap between states " + std::to_string(k) + " and " +
                               std::to_string(next) + " is near zero");
        }
        acc -= std::arg(ov);
    }
    PhaseResult r;
    r.unwrapped = acc;
    r.phase = wrap_phase(acc);
    r.samples = N;
    return r;
}

namespace {

void require_gap(const GaugedEigensystem& es, int n, const char* what) {
    if (n < 0 || n >= es.energies.size()) throw DomainError("band index out of range");
    if (spectral::is_degenerate(es, n))
        throw DegenerateError(std::string(what) + ": level " + std::to_string(n) +
                              " is degenerate (gap " + std::to_string(spectral::gap(es, n)) + ")");
}

CVec band_state_at(const HamiltonianFamily& f, int n, const ParameterPoint& R, int pivot) {
    auto es = eigendecompose(f, R);
    require_gap(es, n, "stencil point");
    return spectral::fix_gauge_at(es.states.col(n), pivot);
}

RVec connection_with_pivot(const HamiltonianFamily& f, int n, const ParameterPoint& R, int pivot,
                           double h) {
    const int d = static_cast<int>(R.size());
    const CVec c = band_state_at(f, n, R, pivot);
    RVec A(d);
    for (int a = 0; a < d; ++a) {
        ParameterPoint Rp = R, Rm = R;
        Rp[a] += h;
        Rm[a] -= h;
        const CVec p = band_state_at(f, n, Rp, pivot);
        const CVec m = band_state_at(f, n, Rm, pivot);
        A[a] = (c.dot(p) - c.dot(m)).imag() / (2.0 * h);
    }
    return A;
}

CMat projector(const HamiltonianFamily& f, int n, const ParameterPoint& R) {
    auto es = eigendecompose(f, R);
    require_gap(es, n, "stencil point");
    const CVec v = es.states.col(n);
    return v * v.adjoint();
}

Vec3 pack(const RMat& F) {
    // F antisymmetric d x d, d = 2 or 3 -> axial vector
    if (F.rows() == 2) return Vec3(0, 0, F(0, 1));
    return Vec3(F(1, 2), F(2, 0), F(0, 1));
}

}  // namespace

ConnectionSample berry_connection_fd(const HamiltonianFamily& family, int n, const ParameterPoint& R,
                                     double step) {
    if (!(step > 1e-12)) throw NumericalError("connection step underflow");
    auto es = eigendecompose(family, R);
    require_gap(es, n, "berry_connection_fd");
    const int pivot = es.pivots[n];
    ConnectionSample s;
    s.A = connection_with_pivot(family, n, R, pivot, step);
    s.n = n;
    s.R = R;
    s.gauge = "pivot-" + std::to_string(pivot) + "-real-positive";
    return s;
}

CurvatureSample berry_curvature(const HamiltonianFamily& family, int n, const ParameterPoint& R,
                                CurvatureMethod method, double step) {
    const int d = static_cast<int>(R.size());
    if (d != 2 && d != 3) throw DomainError("curvature vector needs 2 or 3 parameters");
    if (!(step > 1e-12)) throw NumericalError("curvature step underflow");
    auto es = eigendecompose(family, R);
    require_gap(es, n, "berry_curvature");
    RMat F = RMat::Zero(d, d);
    switch (method) {
    case CurvatureMethod::PerturbationSum: {
        std::vector<CMat> dH(d);
        for (int a = 0; a < d; ++a) {
            ParameterPoint Rp = R, Rm = R;
            Rp[a] += step;
            Rm[a] -= step;
            dH[a] = (family(Rp) - family(Rm)) / (2.0 * step);
        }
        const int N = family.dim();
        const CVec vn = es.states.col(n);
        for (int m = 0; m < N; ++m) {
            if (m == n) continue;
            const CVec vm = es.states.col(m);
            const double de = es.energies[n] - es.energies[m];
            std::vector<cplx> nm(d), mn(d);
            for (int a = 0; a < d; ++a) {
                nm[a] = vn.dot(dH[a] * vm);
                mn[a] = vm.dot(dH[a] * vn);
            }
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) F(a, b) += (nm[a] * mn[b] - nm[b] * mn[a]).imag() / (de * de);
        }
        break;
    }
    case CurvatureMethod::DensityMatrix: {
        const CMat P = es.states.col(n) * es.states.col(n).adjoint();
        std::vector<CMat> dP(d);
        for (int a = 0; a < d; ++a) {
            ParameterPoint Rp = R, Rm = R;
            Rp[a] += step;
            Rm[a] -= step;
            dP[a] = (projector(family, n, Rp) - projector(family, n, Rm)) / (2.0 * step);
        }
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) F(a, b) = (P * (dP[a] * dP[b] - dP[b] * dP[a])).trace().imag();
        break;
    }
    case CurvatureMethod::FiniteDifference: {
        const int pivot = es.pivots[n];
        std::vector<RVec> Ap(d), Am(d);
        for (int b = 0; b < d; ++b) {
            ParameterPoint Rp = R, Rm = R;
            Rp[b] += step;
            Rm[b] -= step;
            Ap[b] = connection_with_pivot(family, n, Rp, pivot, step);
            Am[b] = connection_with_pivot(family, n, Rm, pivot, step);
        }
        // F_ab = d_a A_b - d_b A_a
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                F(a, b) = (Ap[a][b] - Am[a][b]) / (2.0 * step) - (Ap[b][a] - Am[b][a]) / (2.0 * step);
        break;
    }
    }
    CurvatureSample s;
    s.V = pack(F);
    s.n = n;
    s.R = R;
    s.method = method;
    return s;
}

namespace {

double surface_flux(const HamiltonianFamily& family, int n, const spectral::ParameterSurface& S, double step) {
    double flux = 0.0;
    for (const auto& t : S.triangles) {
        const Vec3 a = S.vertices[t[0]].head<3>(), b = S.vertices[t[1]].head<3>(), c = S.vertices[t[2]].head<3>();
        const Vec3 centroid = (a + b + c) / 3.0;
        const Vec3 dS = 0.5 * (b - a).cross(c - a);
        ParameterPoint R = centroid;
        flux += berry_curvature(family, n, R, CurvatureMethod::PerturbationSum, step).V.dot(dS);
    }
    return flux;
}

}  // namespace

DegeneracyCensus degeneracy_census(const HamiltonianFamily& family, int n,
                                   const spectral::ParameterSurface& S, const CensusOptions& opt) {
    if (family.param_dim() != 3) throw DomainError("census needs a 3-parameter family");
    S.validate();
    DegeneracyCensus c;
    spectral::ParameterSurface cur = S;
    double flux = surface_flux(family, n, cur, opt.step);
    auto residual_of = [](double f) { return std::abs(f - 2.0 * kPi * std::round(f / (2.0 * kPi))); };
    c.initial_residual = residual_of(flux);
    int level = 0;
    while (residual_of(flux) > opt.tolerance && level < opt.max_refinements) {
        cur = cur.quadrisect();
        flux = surface_flux(family, n, cur, opt.step);
        ++level;
    }
    c.raw_flux = flux;
    c.charge = static_cast<int>(std::lround(flux / (2.0 * kPi)));
    c.residual = residual_of(flux);
    c.refinements = level;
    c.triangles = static_cast<int>(cur.triangles.size());
    if (c.residual > 0.05 * 2.0 * kPi)
        throw AccuracyError("census residual " + std::to_string(c.residual) + " above bound after " +
                            std::to_string(level) + " refinements");
    return c;
}

MetricSample quantum_metric(const HamiltonianFamily& family, int n, const ParameterPoint& R, double step) {
    auto es = eigendecompose(family, R);
    require_gap(es, n, "quantum_metric");
    const int d = static_cast<int>(R.size());
    std::vector<CMat> dP(d);
    for (int a = 0; a < d; ++a) {
        ParameterPoint Rp = R, Rm = R;
        Rp[a] += step;
        Rm[a] -= step;
        dP[a] = (projector(family, n, Rp) - projector(family, n, Rm)) / (2.0 * step);
    }
    MetricSample m;
    m.g = RMat::Zero(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            const double v = 0.5 * (dP[a] * dP[b]).trace().real();
            m.g(a, b) = m.g(b, a) = v;
        }
    return m;
}

CVec geodesic_state(const CVec& psi0, const CVec& psi1, double s) {
    const cplx ov = psi0.dot(psi1);
    const double c = std::abs(ov);
    if (c < 1e-12) throw DomainError("orthogonal endpoints: geodesic is not unique");
    const double theta = std::acos(std::min(1.0, c));
    if (theta < 1e-14) return psi0;
    const CVec aligned = psi1 * (std::conj(ov) / c);
    CVec perp = aligned - psi0 * psi0.dot(aligned);
    perp /= perp.norm();
    return std::cos(s * theta) * psi0 + std::sin(s * theta) * perp;
}

std::vector<CVec> band_states(const HamiltonianFamily& family, int n, const std::vector<ParameterPoint>& points) {
    std::vector<CVec> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        auto es = eigendecompose(family, p);
        require_gap(es, n, "band_states");
        out.push_back(es.states.col(n));
    }
    return out;
}

PhaseResult loop_phase(const HamiltonianFamily& family, int n, const std::function<ParameterPoint(double)>& c,
                       double tol, int n_start, int n_max) {
    auto eval = [&](int N) {
        std::vector<ParameterPoint> pts;
        for (int k = 0; k < N; ++k) pts.push_back(c(static_cast<double>(k) / N));
        pts.push_back(pts.front());
        return berry_phase_discrete(band_states(family, n, pts), true);
    };
    int N = n_start;
    PhaseResult prev = eval(N);
    while (true) {
        N *= 2;
        PhaseResult cur = eval(N);
        cur.refinement_error = std::abs(wrap_phase(cur.unwrapped - prev.unwrapped));
        if (cur.refinement_error < tol || N >= n_max) {
            if (cur.refinement_error >= tol)
                throw AccuracyError("loop phase not converged at " + std::to_string(N) + " points");
            return cur;
        }
        prev = cur;
    }
}

double solid_angle_of_loop(const std::vector<Vec3>& loop_in) {
    const int N = static_cast<int>(loop_in.size());
    if (N < 3) throw GeometryError("spherical polygon needs at least 3 vertices");
    std::vector<Vec3> v(N);
    for (int i = 0; i < N; ++i) v[i] = loop_in[i].normalized();
    Vec3 m = Vec3::Zero();
    for (const auto& p : v) m += p;
    m /= N;
    Vec3 c;
    if (m.norm() > 1e-3) {
        c = m.normalized();
    } else {
        Mat3 cov = Mat3::Zero();
        for (const auto& p : v) cov += p * p.transpose();
        Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
        c = es.eigenvectors().col(0);
    }
    double total = 0.0;
    for (int k = 0; k < N; ++k) {
        const Vec3& a = v[k];
        const Vec3& b = v[(k + 1) % N];
        if (a.dot(b) < -1.0 + 1e-12) throw GeometryError("antipodal consecutive vertices at index " + std::to_string(k));
        const double num = c.dot(a.cross(b));
        const double den = 1.0 + c.dot(a) + a.dot(b) + b.dot(c);
        total += 2.0 * std::atan2(num, den);
    }
    return total;
}

PolarizationState::PolarizationState(const CVec& j, double I) : jones(j), intensity(I) {
    if (j.size() != 2) throw DomainError("Jones vector must have two components");
    if (std::abs(j.norm() - 1.0) > 1e-12) throw DomainError("Jones vector must be normalized");
    if (!(I > 0.0)) throw DomainError("intensity must be positive");
}

Vec3 poincare_point(const PolarizationState& p) {
    const CVec& a = p.jones;
    const double sx = (a.dot(pauli(0) * a)).real();
    const double sy = (a.dot(pauli(1) * a)).real();
    const double sz = (a.dot(pauli(2) * a)).real();
    // Stokes order (s_y, s_x, s_z) rotated by pi/2 about y.
    return Vec3(sz, sx, -sy);
}

CVec jones_from_poincare(const Vec3& e_in) {
    const Vec3 e = e_in.normalized();
    const Vec3 n(e.y(), -e.z(), e.x());  // Bloch vector
    const double th = std::acos(std::clamp(n.z(), -1.0, 1.0));
    const double ph = std::atan2(n.y(), n.x());
    CVec j(2);
    j << std::cos(th / 2), std::polar(std::sin(th / 2), ph);
    return j;
}

double pancharatnam_relative_phase(const PolarizationState& a, const PolarizationState& b) {
    const cplx ov = a.jones.dot(b.jones);
    if (std::abs(ov) <= 1e-8) throw DomainError("orthogonal polarizations have no relative phase");
    return wrap_phase(std::arg(ov));
}

double superposed_intensity(const PolarizationState& a, const PolarizationState& b, double chi) {
    const cplx ov = a.jones.dot(b.jones);
    return a.intensity + b.intensity + 2.0 * std::sqrt(a.intensity * b.intensity) * (std::polar(1.0, chi) * ov).real();
}

Vec3 two_state_curvature(const std::function<Vec3(const ParameterPoint&)>& F, const ParameterPoint& R, int sign,
                         double step) {
    Mat3 J;  // J(i, a) = dF_i / dR_a
    for (int a = 0; a < 3; ++a) {
        ParameterPoint Rp = R, Rm = R;
        Rp[a] += step;
        Rm[a] -= step;
        J.col(a) = (F(Rp) - F(Rm)) / (2.0 * step);
    }
    const Vec3 f = F(R);
    const double f3 = std::pow(f.norm(), 3);
    Vec3 V = Vec3::Zero();
    // (1/4) eps_ijk F_i grad F_j x grad F_k, summed over all i, j, k
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                const int e = (i - j) * (j - k) * (k - i) / 2;
                if (e == 0) continue;
                const Vec3 gj = J.row(j).transpose(), gk = J.row(k).transpose();
                V += 0.25 * e * f[i] * gj.cross(gk);
            }
    return sign * V / f3;
}

}  // namespace holab::abelian
