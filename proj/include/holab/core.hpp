#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace holab {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define HOLAB_ERROR(Name, tag)                                              \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(tag, what) {}        \
    };

HOLAB_ERROR(ModelError, "model error")
HOLAB_ERROR(NumericalError, "numerical error")
HOLAB_ERROR(DomainError, "domain error")
HOLAB_ERROR(DegenerateError, "degenerate point")
HOLAB_ERROR(GeometryError, "geometry error")
HOLAB_ERROR(AccuracyError, "accuracy error")
HOLAB_ERROR(OverlapError, "ill-conditioned overlap")
HOLAB_ERROR(MultipletError, "multiplet error")
HOLAB_ERROR(TransportError, "transport breakdown")
HOLAB_ERROR(ConfigError, "config error")
HOLAB_ERROR(PrecisionError, "precision error")
HOLAB_ERROR(ChartError, "chart error")
HOLAB_ERROR(AdiabaticityError, "adiabaticity error")
HOLAB_ERROR(PeriodError, "period-detection error")
HOLAB_ERROR(SingularityError, "singularity error")
HOLAB_ERROR(StepSizeError, "step-size error")

#undef HOLAB_ERROR

// Worker threads for embarrassingly parallel loops: HOLAB_THREADS if set to a positive integer, else 1.
inline int thread_count() {
    const char* v = std::getenv("HOLAB_THREADS");
    if (!v) return 1;
    const int n = std::atoi(v);
    return n > 0 ? n : 1;
}

// Principal value in (-pi, pi].
inline double wrap_phase(double x) {
    double y = std::remainder(x, 2.0 * kPi);
    if (y <= -kPi) y += 2.0 * kPi;
    return y;
}

// Pauli matrices.
inline Eigen::Matrix2cd pauli(int i) {
    Eigen::Matrix2cd s;
    switch (i) {
    case 0: s << 0, 1, 1, 0; break;
    case 1: s << 0, -kI, kI, 0; break;
    default: s << 1, 0, 0, -1; break;
    }
    return s;
}

inline Eigen::Matrix2cd dot_sigma(const Vec3& r) {
    Eigen::Matrix2cd h;
    h << r.z(), cplx(r.x(), -r.y()), cplx(r.x(), r.y()), -r.z();
    return h;
}

}  // namespace holab
