#pragma once

#include "holab/core.hpp"

#include <json.hpp>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace holab::spectral {

using ParameterPoint = RVec;

struct ParameterLoop {
    std::vector<ParameterPoint> points;
    bool closed = true;

    // Throws GeometryError on fewer than 3 points, inconsistent dimension,
    // non-finite entries, or a closed loop whose last point differs from the first.
    void validate() const;
};

struct ParameterSurface {
    std::vector<ParameterPoint> vertices;
    std::vector<std::array<int, 3>> triangles;

    // Watertight and consistently oriented: every directed edge appears once
    // and its reverse appears exactly once.
    void validate() const;
    ParameterSurface quadrisect() const;
};

// Icosphere of the given subdivision level, vertices projected onto the sphere,
// outward orientation.
ParameterSurface sphere_surface(const Vec3& center, double radius, int level);

class HamiltonianFamily {
public:
    using Rule = std::function<CMat(const ParameterPoint&)>;

    HamiltonianFamily(std::string name, int dim, int param_dim, Rule rule);

    // Evaluates and checks finiteness and Hermiticity.
    CMat operator()(const ParameterPoint& R) const;

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    int param_dim() const { return param_dim_; }

private:
    std::string name_;
    int dim_;
    int param_dim_;
    Rule rule_;
};

struct GaugedEigensystem {
    RVec energies;
    CMat states;
    std::string gauge = "max-modulus-real-positive";
    RVec gaps;
    double spectral_range = 0.0;
    std::vector<int> pivots;  // component index made real positive, per column
};

inline constexpr double kDegeneracyTolerance = 1e-9;

GaugedEigensystem eigendecompose(const HamiltonianFamily& family, const ParameterPoint& R);
GaugedEigensystem eigendecompose(const CMat& H);

double gap(const HamiltonianFamily& family, const ParameterPoint& R, int n);
double gap(const GaugedEigensystem& es, int n);
bool is_degenerate(const GaugedEigensystem& es, int n);

// Index of the largest-modulus entry, lowest index on ties.
int gauge_pivot(const CVec& v);
CVec fix_gauge(const CVec& v);
// Rotates v so that entry `pivot` is real positive.
CVec fix_gauge_at(const CVec& v, int pivot);

// Spin-s angular momentum matrices in the basis m = s, s-1, ..., -s.
std::array<CMat, 3> spin_matrices(double s);

namespace families {

HamiltonianFamily zeeman(double mu = 1.0);
// H = mu R.S for spin s (2s+1 levels).
HamiltonianFamily spin_field(double s, double mu = 1.0);
// H = F(R).sigma for a user rule F.
HamiltonianFamily two_state(std::string name, std::function<Vec3(const ParameterPoint&)> F);
// F(R) = M R + c.
HamiltonianFamily two_state_linear(const Mat3& M, const Vec3& c = Vec3::Zero());
// H_Q = omega_q (S.n)^2, spin 3/2, n = R/|R|.
HamiltonianFamily quadrupole(double omega_q = 1.0);
// H = (g/2) (Bx, By, Bz - omega/g).sigma with R = B.
HamiltonianFamily nmr_rotating(double gyro, double omega);
// H = H0 + sum_i R_i H_i with seeded random Hermitian H0, H_i.
HamiltonianFamily random_linear(int dim, unsigned seed, int param_dim = 3, double scale = 1.0);
// Real symmetric H = H0 + X H1 + Y H2 with seeded random real symmetric matrices
// (dim > 2) or [[X, Y], [Y, -X]] (dim == 2).
HamiltonianFamily real_planar(int dim, unsigned seed);
// Coefficient table: sum over monomials prod_i R_i^{e_i} times a dense complex matrix.
HamiltonianFamily from_table(const nlohmann::json& table);
// Built-in catalog by name with numeric parameters.
HamiltonianFamily by_name(const std::string& name, const nlohmann::json& params);

}  // namespace families

}  // namespace holab::spectral
