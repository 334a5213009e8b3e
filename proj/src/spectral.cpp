#include "holab/spectral.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

namespace holab::spectral {

void ParameterLoop::validate() const {
    if (points.size() < 3) throw GeometryError("loop needs at least 3 points");
    const auto d = points.front().size();
    for (const auto& p : points) {
        if (p.size() != d) throw GeometryError("loop points have inconsistent dimension");
        if (!p.allFinite()) throw GeometryError("loop point is not finite");
    }
    if (closed && points.front() != points.back())
        throw GeometryError("closed loop must repeat its first point as last");
}

void ParameterSurface::validate() const {
    if (triangles.empty()) throw GeometryError("surface has no triangles");
    const int nv = static_cast<int>(vertices.size());
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= nv) throw GeometryError("triangle index out of range");
            const int a = t[k], b = t[(k + 1) % 3];
            if (a == b) throw GeometryError("degenerate triangle");
            if (++directed[{a, b}] > 1)
                throw GeometryError("inconsistent orientation: directed edge used twice");
        }
    }
    for (const auto& [e, c] : directed) {
        if (!directed.count({e.second, e.first}))
            throw GeometryError("surface is not watertight: edge " + std::to_string(e.first) +
                                "-" + std::to_string(e.second) + " has no partner");
    }
}

ParameterSurface ParameterSurface::quadrisect() const {
    ParameterSurface out;
    out.vertices = vertices;
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        out.vertices.push_back(0.5 * (vertices[a] + vertices[b]));
        const int idx = static_cast<int>(out.vertices.size()) - 1;
        mid.emplace(key, idx);
        return idx;
    };
    for (const auto& t : triangles) {
        const int ab = midpoint(t[0], t[1]);
        const int bc = midpoint(t[1], t[2]);
        const int ca = midpoint(t[2], t[0]);
        out.triangles.push_back({t[0], ab, ca});
        out.triangles.push_back({ab, t[1], bc});
        out.triangles.push_back({ca, bc, t[2]});
        out.triangles.push_back({ab, bc, ca});
    }
    return out;
}

ParameterSurface sphere_surface(const Vec3& center, double radius, int level) {
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0},
                           {0, -1, g}, {0, 1, g}, {0, -1, -g}, {0, 1, -g},
                           {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
    std::vector<std::array<int, 3>> f = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    ParameterSurface s;
    for (auto& p : v) s.vertices.push_back(p.normalized());
    s.triangles = f;
    for (int l = 0; l < level; ++l) {
        s = s.quadrisect();
        for (auto& p : s.vertices) p = p.normalized();
    }
    for (auto& p : s.vertices) p = center + radius * p;
    return s;
}

HamiltonianFamily::HamiltonianFamily(std::string name, int dim, int param_dim, Rule rule)
    : name_(std::move(name)), dim_(dim), param_dim_(param_dim), rule_(std::move(rule)) {
    if (dim_ < 2) throw ModelError("family dimension must be at least 2");
    if (param_dim_ < 1) throw ModelError("parameter dimension must be at least 1");
}

CMat HamiltonianFamily::operator()(const ParameterPoint& R) const {
    if (R.size() != param_dim_)
        throw ModelError(name_ + ": parameter dimension " + std::to_string(R.size()) +
                         " != " + std::to_string(param_dim_));
    if (!R.allFinite()) throw ModelError(name_ + ": non-finite parameter point");
    CMat H = rule_(R);
    if (H.rows() != dim_ || H.cols() != dim_) throw ModelError(name_ + ": wrong matrix size");
    if (!H.allFinite()) throw ModelError(name_ + ": non-finite Hamiltonian");
    const double scale = H.cwiseAbs().maxCoeff();
    const double asym = (H - H.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) throw ModelError(name_ + ": Hamiltonian is not Hermitian");
    return H;
}

int gauge_pivot(const CVec& v) {
    const double m = v.cwiseAbs().maxCoeff();
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) >= m * (1.0 - 1e-10)) return i;
    return 0;
}

CVec fix_gauge_at(const CVec& v, int pivot) {
    const double a = std::abs(v[pivot]);
    if (a == 0.0) throw DomainError("gauge pivot entry is zero");
    CVec w = v * (std::conj(v[pivot]) / a);
    w[pivot] = cplx(a, 0.0);
    return w;
}

CVec fix_gauge(const CVec& v) {
    if (v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0) throw DomainError("zero vector has no gauge");
    return fix_gauge_at(v, gauge_pivot(v));
}

namespace {

bool lex_less(const CVec& a, const CVec& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
        if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
    }
    return false;
}

}  // namespace

GaugedEigensystem eigendecompose(const CMat& H) {
    Eigen::SelfAdjointEigenSolver<CMat> solver(H);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");
    const int n = static_cast<int>(H.rows());
    GaugedEigensystem es;
    RVec E = solver.eigenvalues();
    CMat V = solver.eigenvectors();
    std::vector<int> order(n);
    std::vector<CVec> cols(n);
    for (int i = 0; i < n; ++i) {
        order[i] = i;
        cols[i] = fix_gauge(V.col(i));
    }
    const double range = E[n - 1] - E[0];
    const double tie = 1e-12 * std::max({range, std::abs(E[0]), std::abs(E[n - 1])});
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(E[a] - E[b]) > tie) return E[a] < E[b];
        return lex_less(cols[a], cols[b]);
    });
    es.energies.resize(n);
    es.states.resize(n, n);
    es.pivots.resize(n);
    for (int i = 0; i < n; ++i) {
        es.energies[i] = E[order[i]];
        es.states.col(i) = cols[order[i]];
        es.pivots[i] = gauge_pivot(es.states.col(i));
    }
    es.gaps.resize(n - 1);
    for (int i = 0; i + 1 < n; ++i) es.gaps[i] = es.energies[i + 1] - es.energies[i];
    es.spectral_range = range;
    return es;
}

GaugedEigensystem eigendecompose(const HamiltonianFamily& family, const ParameterPoint& R) {
    return eigendecompose(family(R));
}

double gap(const GaugedEigensystem& es, int n) {
    const int N = static_cast<int>(es.energies.size());
    if (n < 0 || n >= N) throw DomainError("level index out of range");
    double g = std::numeric_limits<double>::infinity();
    if (n + 1 < N) g = std::min(g, es.energies[n + 1] - es.energies[n]);
    if (n > 0) g = std::min(g, es.energies[n] - es.energies[n - 1]);
    return std::max(g, 0.0);
}

double gap(const HamiltonianFamily& family, const ParameterPoint& R, int n) {
    return gap(eigendecompose(family, R), n);
}

bool is_degenerate(const GaugedEigensystem& es, int n) {
    if (es.spectral_range <= 0.0) return true;
    return gap(es, n) < kDegeneracyTolerance * es.spectral_range;
}

std::array<CMat, 3> spin_matrices(double s) {
    const int d = static_cast<int>(std::lround(2 * s)) + 1;
    if (d < 2 || std::abs(2 * s - (d - 1)) > 1e-12) throw DomainError("spin must be a positive half-integer");
    CMat Sx = CMat::Zero(d, d), Sy = CMat::Zero(d, d), Sz = CMat::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const double m = s - i;
        Sz(i, i) = m;
        if (i + 1 < d) {
            // <m|S+|m-1>
            const double mm = m - 1;
            const double c = std::sqrt(s * (s + 1) - mm * (mm + 1));
            Sx(i, i + 1) = Sx(i + 1, i) = 0.5 * c;
            Sy(i, i + 1) = cplx(0, -0.5 * c);
            Sy(i + 1, i) = cplx(0, 0.5 * c);
        }
    }
    return {Sx, Sy, Sz};
}

namespace families {

HamiltonianFamily zeeman(double mu) {
    return HamiltonianFamily("zeeman", 2, 3, [mu](const ParameterPoint& R) -> CMat {
        return dot_sigma(0.5 * mu * Vec3(R[0], R[1], R[2]));
    });
}

HamiltonianFamily spin_field(double s, double mu) {
    auto S = spin_matrices(s);
    return HamiltonianFamily("spin-field", static_cast<int>(S[0].rows()), 3,
                             [S, mu](const ParameterPoint& R) -> CMat {
                                 return mu * (R[0] * S[0] + R[1] * S[1] + R[2] * S[2]);
                             });
}

HamiltonianFamily two_state(std::string name, std::function<Vec3(const ParameterPoint&)> F) {
    return HamiltonianFamily(std::move(name), 2, 3,
                             [F](const ParameterPoint& R) -> CMat { return dot_sigma(F(R)); });
}

HamiltonianFamily two_state_linear(const Mat3& M, const Vec3& c) {
    return two_state("two-state-linear", [M, c](const ParameterPoint& R) -> Vec3 {
        return M * Vec3(R[0], R[1], R[2]) + c;
    });
}

HamiltonianFamily quadrupole(double omega_q) {
    auto S = spin_matrices(1.5);
    return HamiltonianFamily("quadrupole", 4, 3, [S, omega_q](const ParameterPoint& R) -> CMat {
        const double r = R.norm();
        if (r == 0.0) throw ModelError("quadrupole: axis direction undefined at R = 0");
        const CMat Sn = (R[0] * S[0] + R[1] * S[1] + R[2] * S[2]) / r;
        return omega_q * Sn * Sn;
    });
}

HamiltonianFamily nmr_rotating(double gyro, double omega) {
    return HamiltonianFamily("nmr-rotating", 2, 3, [gyro, omega](const ParameterPoint& R) -> CMat {
        return dot_sigma(0.5 * gyro * Vec3(R[0], R[1], R[2] - omega / gyro));
    });
}

namespace {

CMat random_hermitian(int dim, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMat A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = cplx(g(rng), g(rng));
    return 0.5 * scale * (A + A.adjoint());
}

RMat random_symmetric(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    RMat A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = g(rng);
    return 0.5 * (A + A.transpose());
}

}  // namespace

HamiltonianFamily random_linear(int dim, unsigned seed, int param_dim, double scale) {
    std::mt19937_64 rng(seed);
    std::vector<CMat> H;
    for (int i = 0; i <= param_dim; ++i) H.push_back(random_hermitian(dim, rng, scale));
    return HamiltonianFamily("random-linear", dim, param_dim, [H](const ParameterPoint& R) -> CMat {
        CMat out = H[0];
        for (int i = 0; i < R.size(); ++i) out += R[i] * H[i + 1];
        return out;
    });
}

HamiltonianFamily real_planar(int dim, unsigned seed) {
    if (dim == 2) {
        return HamiltonianFamily("real-planar", 2, 2, [](const ParameterPoint& R) -> CMat {
            CMat h(2, 2);
            h << R[0], R[1], R[1], -R[0];
            return h;
        });
    }
    std::mt19937_64 rng(seed);
    std::vector<RMat> H;
    for (int i = 0; i < 3; ++i) H.push_back(random_symmetric(dim, rng));
    return HamiltonianFamily("real-planar", dim, 2, [H](const ParameterPoint& R) -> CMat {
        return (H[0] + R[0] * H[1] + R[1] * H[2]).cast<cplx>();
    });
}

namespace {

CMat matrix_from_json(const nlohmann::json& re, const nlohmann::json& im, int dim) {
    CMat M = CMat::Zero(dim, dim);
    auto fill = [&](const nlohmann::json& a, bool imag) {
        if (a.is_null()) return;
        if (!a.is_array() || static_cast<int>(a.size()) != dim) throw ConfigError("coefficient matrix has wrong row count");
        for (int i = 0; i < dim; ++i) {
            if (!a[i].is_array() || static_cast<int>(a[i].size()) != dim)
                throw ConfigError("coefficient matrix has wrong column count");
            for (int j = 0; j < dim; ++j) {
                const double x = a[i][j].get<double>();
                M(i, j) += imag ? cplx(0, x) : cplx(x, 0);
            }
        }
    };
    fill(re, false);
    fill(im, true);
    return M;
}

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

}  // namespace

HamiltonianFamily from_table(const nlohmann::json& table) {
    reject_unknown(table, {"name", "dim", "param_dim", "terms"}, "family table");
    const int dim = table.at("dim").get<int>();
    const int pd = table.at("param_dim").get<int>();
    const std::string name = table.value("name", std::string("table"));
    std::vector<std::pair<std::vector<int>, CMat>> terms;
    for (const auto& t : table.at("terms")) {
        reject_unknown(t, {"powers", "re", "im"}, "family term");
        auto pw = t.at("powers").get<std::vector<int>>();
        if (static_cast<int>(pw.size()) != pd) throw ConfigError("term powers length != param_dim");
        for (int e : pw)
            if (e < 0) throw ConfigError("negative monomial power");
        terms.emplace_back(pw, matrix_from_json(t.value("re", nlohmann::json()),
                                                t.value("im", nlohmann::json()), dim));
    }
    return HamiltonianFamily(name, dim, pd, [terms, dim](const ParameterPoint& R) -> CMat {
        CMat H = CMat::Zero(dim, dim);
        for (const auto& [pw, M] : terms) {
            double c = 1.0;
            for (size_t i = 0; i < pw.size(); ++i) c *= std::pow(R[static_cast<int>(i)], pw[i]);
            H += c * M;
        }
        return H;
    });
}

HamiltonianFamily by_name(const std::string& name, const nlohmann::json& p) {
    const nlohmann::json params = p.is_null() ? nlohmann::json::object() : p;
    if (name == "zeeman") {
        reject_unknown(params, {"mu"}, name);
        return zeeman(params.value("mu", 1.0));
    }
    if (name == "spin-field") {
        reject_unknown(params, {"spin", "mu"}, name);
        return spin_field(params.value("spin", 0.5), params.value("mu", 1.0));
    }
    if (name == "two-state-linear") {
        reject_unknown(params, {"M", "c"}, name);
        Mat3 M = Mat3::Identity();
        Vec3 c = Vec3::Zero();
        if (params.contains("M")) {
            auto m = params["M"].get<std::vector<std::vector<double>>>();
            if (m.size() != 3) throw ConfigError("M must be 3x3");
            for (int i = 0; i < 3; ++i) {
                if (m[i].size() != 3) throw ConfigError("M must be 3x3");
                for (int j = 0; j < 3; ++j) M(i, j) = m[i][j];
            }
        }
        if (params.contains("c")) {
            auto v = params["c"].get<std::vector<double>>();
            if (v.size() != 3) throw ConfigError("c must have 3 entries");
            c = Vec3(v[0], v[1], v[2]);
        }
        return two_state_linear(M, c);
    }
    if (name == "quadrupole") {
        reject_unknown(params, {"omega_q"}, name);
        return quadrupole(params.value("omega_q", 1.0));
    }
    if (name == "nmr-rotating") {
        reject_unknown(params, {"gamma", "omega"}, name);
        return nmr_rotating(params.value("gamma", 1.0), params.value("omega", 0.0));
    }
    if (name == "random-linear") {
        reject_unknown(params, {"dim", "seed", "param_dim", "scale"}, name);
        return random_linear(params.value("dim", 4), params.value("seed", 1u),
                             params.value("param_dim", 3), params.value("scale", 1.0));
    }
    if (name == "real-planar") {
        reject_unknown(params, {"dim", "seed"}, name);
        return real_planar(params.value("dim", 2), params.value("seed", 1u));
    }
    if (name == "table") {
        reject_unknown(params, {"table"}, name);
        return from_table(params.at("table"));
    }
    throw ConfigError("unknown family '" + name + "'");
}

}  // namespace families

}  // namespace holab::spectral
