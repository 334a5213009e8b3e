#include "holab/classical.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace holab::classical {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// State: body angular momentum, orientation quaternion (w, x, y, z), and the
// accumulated integrals of cos(theta) dphi and dphi of the body angular momentum.
using BodyState = Eigen::Matrix<double, 9, 1>;

Eigen::Quaterniond quat(const BodyState& s) { return Eigen::Quaterniond(s[3], s[4], s[5], s[6]); }

BodyState body_rhs(const Mat3& Iinv, const BodyState& s) {
    const Vec3 L = s.head<3>();
    const Vec3 W = Iinv * L;
    const Vec3 Ld = L.cross(W);
    const Eigen::Quaterniond q = quat(s);
    const Eigen::Quaterniond qd = q * Eigen::Quaterniond(0.0, W.x(), W.y(), W.z());
    const double rho2 = L.x() * L.x() + L.y() * L.y();
    const double phid = (L.x() * Ld.y() - L.y() * Ld.x()) / rho2;
    BodyState d;
    d.head<3>() = Ld;
    d[3] = 0.5 * qd.w();
    d[4] = 0.5 * qd.x();
    d[5] = 0.5 * qd.y();
    d[6] = 0.5 * qd.z();
    d[7] = L.z() / L.norm() * phid;
    d[8] = phid;
    return d;
}

BodyState body_step(const Mat3& Iinv, const BodyState& s, double h) {
    const BodyState k1 = body_rhs(Iinv, s);
    const BodyState k2 = body_rhs(Iinv, s + 0.5 * h * k1);
    const BodyState k3 = body_rhs(Iinv, s + 0.5 * h * k2);
    const BodyState k4 = body_rhs(Iinv, s + h * k3);
    BodyState n = s + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    n.segment<4>(3).normalize();
    return n;
}

double rotation_about_z(const Mat3& M) { return std::atan2(M(1, 0) - M(0, 1), M(0, 0) + M(1, 1)); }

}  // namespace

RigidBodyResult rigid_body_phase(const Mat3& inertia, double Lmag, const Mat3& orientation0,
                                 const RigidBodyOptions& opt) {
    if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12 * inertia.norm())
        throw DomainError("inertia tensor must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
    if (!(es.eigenvalues().minCoeff() > 0)) throw DomainError("inertia tensor must be positive definite");
    if (!(Lmag > 0)) throw DomainError("angular momentum magnitude must be positive");
    if ((orientation0.transpose() * orientation0 - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
        std::abs(orientation0.determinant() - 1.0) > 1e-10)
        throw DomainError("initial orientation is not a proper rotation");
    if (!(opt.dt > 0) || !(opt.horizon > opt.dt)) throw DomainError("step and horizon must be positive");

    const Mat3 Iinv = inertia.inverse();
    const Vec3 L0 = orientation0.transpose() * Vec3(0, 0, Lmag);
    if (std::hypot(L0.x(), L0.y()) < 1e-8 * Lmag)
        throw DomainError("body angular momentum on the body z axis; azimuth undefined");
    BodyState s;
    s.head<3>() = L0;
    const Eigen::Quaterniond q0(orientation0);
    s[3] = q0.w(), s[4] = q0.x(), s[5] = q0.y(), s[6] = q0.z();
    s[7] = 0.0, s[8] = 0.0;

    RigidBodyResult res;
    res.energy = 0.5 * L0.dot(Iinv * L0);
    const Vec3 Ld0 = L0.cross(Iinv * L0);
    auto track = [&](const BodyState& st) {
        const Vec3 L = st.head<3>();
        res.energy_drift = std::max(res.energy_drift, std::abs(0.5 * L.dot(Iinv * L) - res.energy) / res.energy);
        res.momentum_drift = std::max(res.momentum_drift, std::abs(L.norm() - Lmag) / Lmag);
        const Mat3 Rm = quat(st).toRotationMatrix();
        res.orthogonality =
            std::max(res.orthogonality, (Rm.transpose() * Rm - Mat3::Identity()).cwiseAbs().maxCoeff());
    };

    double T = 0.0;
    if (Ld0.norm() <= 1e-13 * Lmag * Iinv.norm() * Lmag) {
        // L does not move: every time is a period.
        T = opt.static_period;
        const long n = std::max(1L, static_cast<long>(std::ceil(T / opt.dt)));
        for (long k = 0; k < n; ++k) {
            s = body_step(Iinv, s, T / n);
            track(s);
        }
    } else {
        const Vec3 dir = Ld0.normalized();
        auto gfun = [&](const BodyState& st) { return (st.head<3>() - L0).dot(dir); };
        double t = 0.0, g_prev = 0.0;
        bool left = false;
        while (true) {
            BodyState next = body_step(Iinv, s, opt.dt);
            const double g = gfun(next);
            if ((next.head<3>() - L0).norm() > 1e-3 * Lmag) left = true;
            if (left && g_prev < 0 && g >= 0) {
                // Secant refinement of the crossing inside this step.
                double a = 0.0, b = opt.dt, ga = g_prev, gb = g;
                BodyState best = next;
                double hbest = b;
                for (int it = 0; it < 60; ++it) {
                    const double hm = a - ga * (b - a) / (gb - ga);
                    const BodyState sm = body_step(Iinv, s, hm);
                    const double gm = gfun(sm);
                    best = sm, hbest = hm;
                    if (std::abs(gm) <= 1e-15 * Lmag) break;
                    if (gm < 0) a = hm, ga = gm; else b = hm, gb = gm;
                }
                T = t + hbest;
                s = best;
                track(s);
                break;
            }
            s = next;
            t += opt.dt;
            g_prev = g;
            track(s);
            if (t > opt.horizon) throw PeriodError("angular momentum path did not close within the horizon");
        }
        if ((s.head<3>() - L0).norm() > 1e-6 * Lmag)
            throw PeriodError("angular momentum returned to the section away from its start");
    }
    res.period = T;
    res.orientation_end = quat(s).toRotationMatrix();
    res.delta_psi = rotation_about_z(res.orientation_end * orientation0.transpose());
    res.dynamical = 2.0 * res.energy * T / Lmag;
    res.geometric = s[7];
    res.solid_angle = s[8] - s[7];
    res.identity_residual = std::abs(wrap_phase(res.delta_psi - res.dynamical - res.geometric));
    return res;
}

// Shape changes

void ShapeCycle::validate() const {
    if (masses.size() < 2) throw DomainError("shape needs at least two masses");
    for (double m : masses)
        if (!(m > 0)) throw DomainError("masses must be positive");
    if (!positions) throw DomainError("shape has no position rule");
    const auto a = positions(0.0), b = positions(1.0);
    if (a.size() != masses.size() || b.size() != masses.size())
        throw DomainError("position rule returns the wrong number of masses");
    for (size_t i = 0; i < a.size(); ++i)
        if ((a[i] - b[i]).norm() > 1e-10 * (1.0 + a[i].norm())) throw DomainError("shape cycle is not closed");
}

std::vector<Vec3> ShapeCycle::centred(double s) const {
    auto r = positions(s);
    if (r.size() != masses.size()) throw DomainError("position rule returns the wrong number of masses");
    Vec3 c = Vec3::Zero();
    double M = 0.0;
    for (size_t i = 0; i < r.size(); ++i) c += masses[i] * r[i], M += masses[i];
    c /= M;
    for (auto& x : r) x -= c;
    return r;
}

namespace {

Mat3 inertia_of(const std::vector<double>& m, const std::vector<Vec3>& r) {
    Mat3 I = Mat3::Zero();
    for (size_t a = 0; a < r.size(); ++a) I += m[a] * (r[a].squaredNorm() * Mat3::Identity() - r[a] * r[a].transpose());
    return I;
}

void require_invertible(const Mat3& I, double s) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(I);
    if (es.eigenvalues()[0] <= 1e-10 * es.eigenvalues()[2])
        throw SingularityError("inertia tensor singular at s = " + std::to_string(s) + " (collinear masses)");
}

// Shape velocity dR/ds by fourth-order differences; side < 0 uses points at or before s,
// side > 0 at or after s, side = 0 central.
std::vector<Vec3> shape_velocity(const ShapeCycle& sh, double s, int side, double h) {
    static const double cf[5] = {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25};
    const size_t n = sh.masses.size();
    std::vector<Vec3> v(n, Vec3::Zero());
    if (side == 0) {
        const auto p2 = sh.centred(s + 2 * h), p1 = sh.centred(s + h), m1 = sh.centred(s - h),
                   m2 = sh.centred(s - 2 * h);
        for (size_t a = 0; a < n; ++a) v[a] = (-p2[a] + 8.0 * p1[a] - 8.0 * m1[a] + m2[a]) / (12.0 * h);
        return v;
    }
    for (int j = 0; j < 5; ++j) {
        const auto p = sh.centred(s + side * j * h);
        for (size_t a = 0; a < n; ++a) v[a] += side * cf[j] * p[a] / h;
    }
    return v;
}

Vec3 body_rate(const ShapeCycle& sh, double s, int side, double h) {
    const auto R = sh.centred(s);
    const auto V = shape_velocity(sh, s, side, h);
    const Mat3 I = inertia_of(sh.masses, R);
    require_invertible(I, s);
    Vec3 j = Vec3::Zero();
    for (size_t a = 0; a < R.size(); ++a) j += sh.masses[a] * R[a].cross(V[a]);
    return -I.ldlt().solve(j);
}

Eigen::Quaterniond qmul_rate(const Eigen::Quaterniond& q, const Vec3& w) {
    const Eigen::Quaterniond r = q * Eigen::Quaterniond(0.0, w.x(), w.y(), w.z());
    return Eigen::Quaterniond(0.5 * r.w(), 0.5 * r.x(), 0.5 * r.y(), 0.5 * r.z());
}

Eigen::Quaterniond qaxpy(const Eigen::Quaterniond& q, double a, const Eigen::Quaterniond& d) {
    return Eigen::Quaterniond(q.w() + a * d.w(), q.x() + a * d.x(), q.y() + a * d.y(), q.z() + a * d.z());
}

Mat3 integrate_orientation(const ShapeCycle& sh, int N) {
    const double ds = 1.0 / N, h = std::min(1e-4, ds / 4);
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    for (int k = 0; k < N; ++k) {
        const double s = k * ds;
        const Vec3 w0 = body_rate(sh, s, +1, h), wm = body_rate(sh, s + 0.5 * ds, 0, h),
                   w1 = body_rate(sh, s + ds, -1, h);
        const auto k1 = qmul_rate(q, w0);
        const auto k2 = qmul_rate(qaxpy(q, 0.5 * ds, k1), wm);
        const auto k3 = qmul_rate(qaxpy(q, 0.5 * ds, k2), wm);
        const auto k4 = qmul_rate(qaxpy(q, ds, k3), w1);
        q = Eigen::Quaterniond(q.w() + ds / 6 * (k1.w() + 2 * k2.w() + 2 * k3.w() + k4.w()),
                               q.x() + ds / 6 * (k1.x() + 2 * k2.x() + 2 * k3.x() + k4.x()),
                               q.y() + ds / 6 * (k1.y() + 2 * k2.y() + 2 * k3.y() + k4.y()),
                               q.z() + ds / 6 * (k1.z() + 2 * k2.z() + 2 * k3.z() + k4.z()));
        q.normalize();
    }
    return q.toRotationMatrix();
}

}  // namespace

ShapeRotation shape_reorientation(const ShapeCycle& shape, double tol, int max_steps) {
    shape.validate();
    ShapeRotation out;
    Mat3 prev = integrate_orientation(shape, 64);
    for (int N = 128; N <= max_steps; N *= 2) {
        const Mat3 cur = integrate_orientation(shape, N);
        out.refinement_change = (cur - prev).cwiseAbs().maxCoeff();
        out.rotation = cur;
        out.steps = N;
        if (out.refinement_change <= tol) break;
        prev = cur;
    }
    if (out.refinement_change > tol)
        throw AccuracyError("orientation did not converge: change " + std::to_string(out.refinement_change));
    const Eigen::AngleAxisd aa(out.rotation);
    out.angle = aa.angle();
    out.axis = aa.axis();
    return out;
}

Mat3 shape_reorientation_oracle(const ShapeCycle& shape, int steps) {
    shape.validate();
    if (steps < 1) throw DomainError("steps must be positive");
    const auto& m = shape.masses;
    const size_t n = m.size();
    double M = 0.0;
    for (double x : m) M += x;
    // Orientation that best maps the body shape onto the space positions.
    auto align = [&](const std::vector<Vec3>& body, const std::vector<Vec3>& space) {
        Mat3 H = Mat3::Zero();
        for (size_t a = 0; a < n; ++a) H += m[a] * space[a] * body[a].transpose();
        Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 D = Mat3::Identity();
        D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
        return Mat3(svd.matrixU() * D * svd.matrixV().transpose());
    };
    auto rhs = [&](double s, const std::vector<Vec3>& r) {
        const auto R = shape.centred(s);
        const Mat3 Q = align(R, r);
        const double h = 1e-5;
        const auto Rp = shape.centred(s + h), Rm = shape.centred(s - h);
        std::vector<Vec3> u(n);
        Vec3 c = Vec3::Zero();
        for (size_t a = 0; a < n; ++a) u[a] = Q * (Rp[a] - Rm[a]) / (2 * h), c += m[a] * u[a];
        Mat3 I = Mat3::Zero();
        Vec3 l = Vec3::Zero();
        for (size_t a = 0; a < n; ++a) {
            u[a] -= c / M;
            I += m[a] * (r[a].squaredNorm() * Mat3::Identity() - r[a] * r[a].transpose());
            l += m[a] * r[a].cross(u[a]);
        }
        const Vec3 w = I.ldlt().solve(l);
        for (size_t a = 0; a < n; ++a) u[a] -= w.cross(r[a]);
        return u;
    };
    auto axpy = [&](const std::vector<Vec3>& r, double a, const std::vector<Vec3>& d) {
        std::vector<Vec3> o(n);
        for (size_t i = 0; i < n; ++i) o[i] = r[i] + a * d[i];
        return o;
    };
    std::vector<Vec3> r = shape.centred(0.0);
    const auto R0 = r;
    const double ds = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
        const double s = k * ds;
        const auto k1 = rhs(s, r);
        const auto k2 = rhs(s + 0.5 * ds, axpy(r, 0.5 * ds, k1));
        const auto k3 = rhs(s + 0.5 * ds, axpy(r, 0.5 * ds, k2));
        const auto k4 = rhs(s + ds, axpy(r, ds, k3));
        for (size_t a = 0; a < n; ++a) r[a] += ds / 6 * (k1[a] + 2 * k2[a] + 2 * k3[a] + k4[a]);
    }
    return align(R0, r);
}

ShapeCycle planar_cat_cycle(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mass(1.0, 2.0), coef(-0.25, 0.25);
    ShapeCycle sh;
    sh.masses = {mass(rng), mass(rng), mass(rng)};
    const std::vector<Vec3> base = {Vec3(1.0, 0.0, 0.0), Vec3(-0.5, 0.9, 0.0), Vec3(-0.5, -0.9, 0.0)};
    std::vector<std::array<double, 8>> c(3);
    for (auto& a : c)
        for (double& x : a) x = coef(rng);
    sh.positions = [base, c](double s) {
        std::vector<Vec3> r = base;
        const double w = kTwoPi * s;
        for (int a = 0; a < 3; ++a) {
            const auto& k = c[a];
            r[a].x() += k[0] * std::cos(w) + k[1] * std::sin(w) + k[2] * std::cos(2 * w) + k[3] * std::sin(2 * w);
            r[a].y() += k[4] * std::cos(w) + k[5] * std::sin(w) + k[6] * std::cos(2 * w) + k[7] * std::sin(2 * w);
        }
        return r;
    };
    return sh;
}

// Fibre transport

TransportResult sphere_parallel_transport(const Vec3& d0, const std::vector<Vec3>& path) {
    if (path.size() < 2) throw DomainError("direction path needs at least two points");
    for (const auto& t : path)
        if (std::abs(t.norm() - 1.0) > 1e-10) throw DomainError("direction path must lie on the unit sphere");
    if (std::abs(d0.norm() - 1.0) > 1e-10 || std::abs(d0.dot(path.front())) > 1e-10)
        throw DomainError("initial vector must be a unit tangent at the first direction");
    auto transport = [](const Vec3& d, const Vec3& a, const Vec3& b, size_t k) {
        const double c = a.dot(b);
        if (c < -1.0 + 1e-12) throw StepSizeError("antipodal step at index " + std::to_string(k));
        const Vec3 ax = a.cross(b);
        const double sn = ax.norm();
        Vec3 n = d;
        if (sn > 0) n = Eigen::AngleAxisd(std::atan2(sn, c), ax / sn) * d;
        n -= n.dot(b) * b;
        return Vec3(n.normalized());
    };
    TransportResult res;
    res.vectors.reserve(path.size());
    res.vectors.push_back(d0);
    for (size_t k = 0; k + 1 < path.size(); ++k) {
        const Vec3 d = transport(res.vectors.back(), path[k], path[k + 1], k);
        res.max_norm_error = std::max(res.max_norm_error, std::abs(d.norm() - 1.0));
        res.max_tangent_error = std::max(res.max_tangent_error, std::abs(d.dot(path[k + 1])));
        res.vectors.push_back(d);
    }
    // Compare with d0 carried straight back along the closing geodesic.
    const Vec3& tN = path.back();
    const Vec3 ref = transport(d0, path.front(), tN, path.size());
    const Vec3& dN = res.vectors.back();
    res.rotation = std::atan2(tN.dot(ref.cross(dN)), ref.dot(dN));
    return res;
}

std::vector<Vec3> helix_directions(double radius, double pitch, int turns, int samples_per_turn) {
    if (!(radius > 0) || !(pitch > 0) || turns < 1 || samples_per_turn < 3)
        throw DomainError("helix needs positive radius, pitch, turns and samples");
    const double b = pitch / kTwoPi;
    const int n = turns * samples_per_turn;
    std::vector<Vec3> t(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double u = kTwoPi * k / samples_per_turn;
        t[k] = Vec3(-radius * std::sin(u), radius * std::cos(u), b).normalized();
    }
    t[n] = t[0];
    return t;
}

}  // namespace holab::classical
