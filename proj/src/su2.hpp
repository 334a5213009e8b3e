#pragma once

#include "holab/core.hpp"

namespace holab::detail {

// exp(-i dt a.sigma) for a real 3-vector a.
inline Eigen::Matrix2cd su2_exp(const Vec3& a, double dt) {
    const double n = a.norm();
    const double c = std::cos(n * dt);
    const double s = n > 0 ? std::sin(n * dt) / n : dt;
    Eigen::Matrix2cd U;
    U(0, 0) = cplx(c, -s * a[2]);
    U(0, 1) = cplx(-s * a[1], -s * a[0]);
    U(1, 0) = cplx(s * a[1], -s * a[0]);
    U(1, 1) = cplx(c, s * a[2]);
    return U;
}

}  // namespace holab::detail
