#include "holab/scenarios.hpp"

#include "holab/abelian.hpp"
#include "holab/classical.hpp"
#include "holab/dynamics.hpp"
#include "holab/lattice.hpp"
#include "holab/nonabelian.hpp"
#include "holab/spectral.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace holab::scenarios {

namespace {

namespace fam = spectral::families;
constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------- parameters

bool type_matches(const std::string& type, const json& v) {
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "boolean") return v.is_boolean();
    if (type == "string") return v.is_string();
    if (type == "number-list") {
        if (!v.is_array()) return false;
        return std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
    }
    if (type == "matrix") {
        if (!v.is_array()) return false;
        return std::all_of(v.begin(), v.end(), [](const json& row) {
            return row.is_array() && std::all_of(row.begin(), row.end(), [](const json& x) { return x.is_number(); });
        });
    }
    return false;
}

class Params {
public:
    Params(const ScenarioInfo& info, const json& given) : merged_(json::object()) {
        if (!given.is_object()) throw ConfigError("parameters must be an object");
        for (auto it = given.begin(); it != given.end(); ++it) {
            const auto k = std::find_if(info.keys.begin(), info.keys.end(),
                                        [&](const KeySpec& s) { return s.name == it.key(); });
            if (k == info.keys.end()) throw ConfigError(info.name + ": unknown parameter '" + it.key() + "'");
            if (!type_matches(k->type, it.value()))
                throw ConfigError(info.name + ": parameter '" + it.key() + "' must be " + k->type);
        }
        for (const KeySpec& k : info.keys) merged_[k.name] = given.contains(k.name) ? given[k.name] : k.default_value;
    }

    double num(const std::string& k) const { return merged_.at(k).get<double>(); }
    int integer(const std::string& k) const { return merged_.at(k).get<int>(); }
    bool boolean(const std::string& k) const { return merged_.at(k).get<bool>(); }
    std::string str(const std::string& k) const { return merged_.at(k).get<std::string>(); }
    std::vector<double> list(const std::string& k) const { return merged_.at(k).get<std::vector<double>>(); }
    std::vector<std::vector<double>> matrix(const std::string& k) const {
        return merged_.at(k).get<std::vector<std::vector<double>>>();
    }
    const json& merged() const { return merged_; }

private:
    json merged_;
};

struct Ctx {
    const ScenarioInfo& info;
    const json& tolerances;
    std::uint64_t seed;
    RunReport& rep;

    void check(const std::string& name, double value, double target = 0.0) {
        const auto s = std::find_if(info.expectations.begin(), info.expectations.end(),
                                    [&](const ExpectSpec& e) { return e.name == name; });
        if (s == info.expectations.end()) throw Error("internal", "undeclared expectation " + name);
        Expectation e;
        e.name = name;
        e.kind = s->kind;
        e.value = value;
        e.target = target;
        e.tolerance = tolerances.contains(name) ? tolerances[name].get<double>() : s->tolerance;
        if (e.kind == "abs") e.pass = std::abs(value - target) <= e.tolerance;
        else if (e.kind == "rel") e.pass = std::abs(value - target) <= e.tolerance * std::abs(target);
        else if (e.kind == "max") e.pass = value <= e.tolerance;
        else if (e.kind == "min") e.pass = value >= e.tolerance;
        else if (e.kind == "gt") e.pass = value > e.tolerance;
        else e.pass = value == target;
        if (!std::isfinite(value)) e.pass = false;
        rep.expectations.push_back(e);
    }
};

void config_require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

RVec pt3(double x, double y, double z) {
    RVec r(3);
    r << x, y, z;
    return r;
}

RVec sph(double th, double ph) {
    return pt3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
}

Vec3 vec3(const std::vector<double>& v, const std::string& name) {
    config_require(v.size() == 3, name + " needs three components");
    return Vec3(v[0], v[1], v[2]);
}

// Value at x = 0 of the interpolating polynomial through (x_i, y_i).
double neville_at_zero(std::vector<double> x, std::vector<double> y) {
    const size_t n = x.size();
    for (size_t m = 1; m < n; ++m)
        for (size_t i = 0; i + m < n; ++i) y[i] = (x[i + m] * y[i] - x[i] * y[i + 1]) / (x[i + m] - x[i]);
    return y[0];
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    f.slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

// ---------------------------------------------------------------- quantum scenarios

void spin_cone(const Params& P, Ctx& C) {
    const double th = P.num("theta0");
    const int N = P.integer("samples");
    config_require(N >= 3, "samples must be at least 3");
    const auto z = fam::zeeman();
    std::vector<RVec> pts;
    for (int k = 0; k < N; ++k) pts.push_back(sph(th, kTwoPi * k / N));
    pts.push_back(pts.front());
    const auto ph = abelian::berry_phase_discrete(abelian::band_states(z, 1, pts), true);
    const double analytic = -kPi * (1.0 - std::cos(th));

    const auto eps = P.list("epsilons");
    config_require(eps.size() >= 2, "epsilons needs at least two values");
    const auto rows = dynamics::adiabatic_error_scan(
        z, [&](double s) { return sph(th, kTwoPi * s); }, 1, eps, P.integer("ode_samples"));
    std::vector<double> x, y;
    CsvTable t{"ode-scan", {"epsilon", "leakage", "geometric", "phase_error"}, {}};
    for (const auto& r : rows) {
        x.push_back(r.epsilon);
        y.push_back(r.geometric);
        t.rows.push_back({r.epsilon, r.leakage, r.geometric, r.phase_error});
    }
    const double extrap = neville_at_zero(x, y);
    C.rep.tables.push_back(t);
    C.rep.results["geometric_phase"] = ph.phase;
    C.rep.results["analytic_phase"] = analytic;
    C.rep.results["ode_extrapolated_phase"] = extrap;
    C.check("discrete_phase", ph.phase, analytic);
    C.check("ode_extrapolation", wrap_phase(extrap - analytic), 0.0);
}

void monopole_census(const Params& P, Ctx& C) {
    const auto S = spectral::sphere_surface(vec3(P.list("center"), "center"), P.num("radius"), P.integer("subdivision"));
    abelian::CensusOptions opt;
    opt.max_refinements = P.integer("max_refinements");
    const int level = P.integer("level");
    const auto c = abelian::degeneracy_census(fam::zeeman(), level, S, opt);
    Mat3 M = Mat3::Identity();
    M(2, 2) = -1.0;
    const auto inv = abelian::degeneracy_census(fam::two_state_linear(M), level, S, opt);
    C.rep.results["charge"] = c.charge;
    C.rep.results["raw_flux"] = c.raw_flux;
    C.rep.results["initial_residual"] = c.initial_residual;
    C.rep.results["residual"] = c.residual;
    C.rep.results["refinements"] = c.refinements;
    C.rep.results["triangles"] = c.triangles;
    C.rep.results["inverted_charge"] = inv.charge;
    C.check("charge", c.charge, 1.0);
    C.check("inverted_charge", inv.charge, -1.0);
    C.check("initial_residual", c.initial_residual / kTwoPi);
    C.check("refined_residual", c.residual / kTwoPi);
}

void curvature_methods(const Params& P, Ctx& C) {
    const int dim = P.integer("dim"), n = P.integer("level"), want = P.integer("points");
    config_require(dim >= 2 && n >= 0 && n < dim, "level must index a level of the family");
    const auto f = fam::random_linear(dim, static_cast<unsigned>(C.seed));
    std::mt19937_64 rng(C.seed);
    std::uniform_real_distribution<double> u(-P.num("box"), P.num("box"));
    CsvTable t{"curvature",
               {"x", "y", "z", "ps_x", "ps_y", "ps_z", "fd_x", "fd_y", "fd_z", "dm_x", "dm_y", "dm_z", "relative"},
               {}};
    double worst = 0.0;
    int accepted = 0, tried = 0;
    while (accepted < want) {
        if (++tried > 100 * want) throw NumericalError("too few nondegenerate points");
        const RVec R = pt3(u(rng), u(rng), u(rng));
        const auto es = spectral::eigendecompose(f, R);
        double g = std::numeric_limits<double>::infinity();
        if (n > 0) g = std::min(g, es.energies[n] - es.energies[n - 1]);
        if (n + 1 < dim) g = std::min(g, es.energies[n + 1] - es.energies[n]);
        if (g < P.num("min_gap")) continue;
        const Vec3 ps = abelian::berry_curvature(f, n, R, abelian::CurvatureMethod::PerturbationSum).V;
        const Vec3 fd = abelian::berry_curvature(f, n, R, abelian::CurvatureMethod::FiniteDifference).V;
        const Vec3 dm = abelian::berry_curvature(f, n, R, abelian::CurvatureMethod::DensityMatrix).V;
        const double rel =
            std::max({(fd - ps).norm(), (dm - ps).norm(), (fd - dm).norm()}) / std::max(ps.norm(), 1e-300);
        worst = std::max(worst, rel);
        t.rows.push_back({R[0], R[1], R[2], ps.x(), ps.y(), ps.z(), fd.x(), fd.y(), fd.z(), dm.x(), dm.y(), dm.z(), rel});
        ++accepted;
    }
    C.rep.tables.push_back(t);
    C.rep.results["points"] = accepted;
    C.rep.results["rejected_points"] = tried - accepted;
    C.rep.results["max_relative_disagreement"] = worst;
    C.check("method_agreement", worst);
}

nonabelian::LevelGroup spin_label_group(std::vector<int> levels, double spin) {
    nonabelian::LevelGroup g;
    g.levels = std::move(levels);
    g.label = [spin](const spectral::ParameterPoint& R) {
        const auto S = spectral::spin_matrices(spin);
        const Vec3 n = Vec3(R[0], R[1], R[2]).normalized();
        return CMat(n[0] * S[0] + n[1] * S[1] + n[2] * S[2]);
    };
    return g;
}

void wilson_nqr(const Params& P, Ctx& C) {
    const double th = P.num("cone_angle");
    const auto f = fam::quadrupole(P.num("omega_q"));
    const auto h = nonabelian::wilson_loop_refined(
        f, spin_label_group({2, 3}, 1.5), [&](double s) { return sph(th, kTwoPi * s); }, P.num("refine_tol"),
        P.integer("initial_samples"));
    const double omega = kTwoPi * (1.0 - std::cos(th));
    const cplx expect = std::exp(-kI * 1.5 * omega);
    const double off = std::max(std::abs(h.U(0, 1)), std::abs(h.U(1, 0)));
    const double diag = std::max(std::abs(h.U(0, 0) - expect), std::abs(h.U(1, 1) - std::conj(expect)));
    C.rep.results["holonomy"] = json::array({json::array({cplx_json(h.U(0, 0)), cplx_json(h.U(0, 1))}),
                                             json::array({cplx_json(h.U(1, 0)), cplx_json(h.U(1, 1))})});
    C.rep.results["eigenphases"] = nonabelian::eigenphases(h.U);
    C.rep.results["solid_angle"] = omega;
    C.rep.results["samples"] = h.samples;
    C.rep.diagnostics["refinement_error"] = h.refinement_error;
    C.check("off_diagonal", off);
    C.check("diagonal_phases", diag);
}

void aa_phase(const Params& P, Ctx& C) {
    const double th = P.num("tilt"), w = P.num("omega");
    const long steps = P.integer("steps");
    config_require(w > 0 && steps > 1, "omega and steps must be positive");
    const Vec3 n(std::sin(th), 0.0, std::cos(th));
    const CMat H = 0.5 * w * dot_sigma(n);
    CVec psi0(2);
    psi0 << 1.0, 0.0;
    auto tr = dynamics::propagate_fixed([&](double) { return H; }, 0.0, kTwoPi / w, psi0, steps);
    const auto d = dynamics::aa_phase(tr, true);
    // Solid angle swept by the Bloch vector about n, counterclockwise.
    const double expect = -kPi * (1.0 - std::cos(th));
    std::mt19937_64 rng(C.seed);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    auto dressed = tr;
    for (size_t k = 1; k + 1 < dressed.states.size(); ++k) dressed.states[k] *= std::exp(kI * u(rng));
    const auto d2 = dynamics::aa_phase(dressed, true);
    C.rep.results["total"] = d.total;
    C.rep.results["dynamical"] = d.dynamical;
    C.rep.results["geometric"] = d.geometric;
    C.rep.results["expected"] = expect;
    C.check("geometric_phase", wrap_phase(d.geometric - expect));
    C.check("redecoration", std::abs(wrap_phase(d2.geometric - d.geometric)));
}

void superadiabatic(const Params& P, Ctx& C) {
    const double eps = P.num("epsilon");
    const auto B = dynamics::sech_pulse(P.num("kappa"), P.num("lambda"));
    dynamics::SuperadiabaticOptions opt;
    opt.half_width = P.num("half_width");
    opt.grid = P.integer("grid");
    opt.cutoff = P.num("cutoff");
    const auto s = dynamics::superadiabatic_iterate(B, eps, P.integer("k_max"), opt);
    const auto ex = dynamics::exact_lower_state_phase(B, eps, opt.half_width, P.integer("exact_steps"));
    const int K = static_cast<int>(s.terms.size());
    CsvTable t{"terms", {"k", "term", "ratio", "extent", "extent_ratio", "truncated_phase", "min_field"}, {}};
    std::vector<double> kx, ratio, eratio;
    const int lo = s.optimal_k;
    for (int k = 0; k < K; ++k) {
        const double r = k + 1 < K ? std::abs(s.terms[k + 1] / s.terms[k]) : std::nan("");
        const double er = k + 1 < K ? s.extent[k + 1] / s.extent[k] : std::nan("");
        t.rows.push_back({double(k), s.terms[k], r, s.extent[k], er, s.truncated_phase[k], s.min_field[k]});
        if (k >= lo && k + 1 < K) {
            kx.push_back(k);
            ratio.push_back(r);
            eratio.push_back(er);
        }
    }
    C.rep.tables.push_back(t);
    const double e0 = std::abs(wrap_phase(s.truncated_phase[0] - ex.phase));
    const double eopt = std::abs(wrap_phase(s.truncated_phase[s.optimal_k] - ex.phase));
    C.rep.results["optimal_k"] = s.optimal_k;
    C.rep.results["exact_phase"] = ex.phase;
    C.rep.results["transition_probability"] = ex.transition;
    C.rep.results["adiabatic_error"] = e0;
    C.rep.results["optimal_error"] = eopt;
    C.rep.diagnostics["breakdown_k"] = s.breakdown_k;
    C.rep.diagnostics["breakdown"] = s.breakdown;
    C.rep.diagnostics["exact_richardson_change"] = ex.richardson_change;
    C.check("optimal_index", s.optimal_k, 1.0 / eps);
    if (kx.size() >= 2) {
        const double slope = fit_line(kx, ratio).slope, eslope = fit_line(kx, eratio).slope;
        C.rep.results["ratio_slope"] = slope;
        C.rep.diagnostics["extent_ratio_slope"] = eslope;
        C.check("ratio_slope", slope, eps);
    } else {
        C.rep.results["ratio_slope"] = nullptr;
        C.check("ratio_slope", std::nan(""), eps);
    }
    C.check("truncation_gain", eopt / e0);
}

void geometric_amplitude(const Params& P, Ctx& C) {
    const double a = P.num("a"), w = P.num("omega"), A = P.num("A");
    const auto eps = P.list("epsilons");
    config_require(eps.size() >= 5, "epsilons needs at least five values");
    config_require(A != 0.0, "A must be nonzero");
    const double L = P.num("half_width");
    const long steps = P.integer("steps");
    const auto fit = dynamics::geometric_amplitude_fit(
        [&](double t) { return Vec3(a * std::cos(w * t * t), a * std::sin(w * t * t), A * t); }, eps, L, steps);
    const double gx = P.num("lz_gap_x"), gy = P.num("lz_gap_y");
    const auto lz = dynamics::geometric_amplitude_fit([&](double t) { return Vec3(gx, gy, A * t); }, eps, L, steps);
    const double closed = -a * a * w * (A > 0 ? 1.0 : -1.0) / (A * A);
    CsvTable t{"fit", {"epsilon", "log_p", "lz_log_p"}, {}};
    for (size_t i = 0; i < fit.epsilons.size(); ++i) t.rows.push_back({fit.epsilons[i], fit.logP[i], lz.logP[i]});
    C.rep.tables.push_back(t);
    C.rep.results["slope"] = fit.slope;
    C.rep.results["intercept"] = fit.intercept;
    C.rep.results["r2"] = fit.r2;
    C.rep.results["gamma"] = fit.gamma;
    C.rep.results["closed_form"] = closed;
    C.rep.results["lz_gamma"] = lz.gamma;
    C.rep.results["lz_intercept"] = lz.intercept;
    C.check("gamma", fit.gamma, closed);
    C.check("raw_intercept", fit.intercept, kPi * closed);
    C.check("fit_quality", fit.r2);
    C.check("landau_zener_gamma", std::abs(lz.gamma));
}

void nmr_shift(const Params& P, Ctx& C) {
    dynamics::NmrShiftConfig c;
    c.gyro = P.num("gyro");
    c.omega = P.num("omega");
    c.field = P.num("field");
    c.cone_angle = P.num("cone_angle");
    c.period = P.num("period");
    c.duration = P.num("duration");
    c.sample_dt = P.num("sample_dt");
    c.substeps = P.integer("substeps");
    config_require(c.period > 0, "period must be positive");
    const auto a = dynamics::nmr_shift_scenario(c);
    c.period *= 2;
    c.duration *= 2;
    const auto b = dynamics::nmr_shift_scenario(c);
    CsvTable t{"spectrum", {"frequency", "magnitude"}, {}};
    for (size_t i = 0; i < a.spectrum.frequencies.size(); ++i)
        t.rows.push_back({a.spectrum.frequencies[i], a.spectrum.magnitude[i]});
    C.rep.tables.push_back(t);
    C.rep.results["omega_rot"] = a.omega_rot;
    C.rep.results["alpha"] = a.alpha;
    C.rep.results["expected_peak"] = a.expected;
    C.rep.results["measured_peak"] = a.measured;
    C.rep.results["bin"] = a.spectrum.bin;
    C.rep.results["doubled_expected_peak"] = b.expected;
    C.rep.results["doubled_measured_peak"] = b.measured;
    C.rep.results["doubled_bin"] = b.spectrum.bin;
    C.rep.diagnostics["adiabatic_warning"] = a.spectrum.adiabatic_warning || b.spectrum.adiabatic_warning;
    C.check("peak_offset_bins", std::abs(a.measured - a.expected) / a.spectrum.bin);
    C.check("doubled_peak_offset_bins", std::abs(b.measured - b.expected) / b.spectrum.bin);
    C.check("shift_ratio", (b.measured - b.omega_rot) / (a.measured - a.omega_rot), 0.5);
}

void tycko(const Params& P, Ctx& C) {
    dynamics::TyckoConfig c;
    c.omega_q = P.num("omega_q");
    c.omega_r = P.num("omega_r");
    c.tilt = P.num("tilt");
    c.duration = P.num("duration");
    c.sample_dt = P.num("sample_dt");
    c.substeps = P.integer("substeps");
    const auto scan = P.list("scan_tilts");
    dynamics::TyckoResult r;
    if (scan.empty()) {
        r = dynamics::nqr_tycko_scenario(c);
    } else {
        const auto s = dynamics::tycko_tilt_scan(c, scan);
        r = s.best;
        CsvTable t{"tilt-scan", {"tilt", "mismatch"}, {}};
        for (size_t i = 0; i < s.tilts.size(); ++i) t.rows.push_back({s.tilts[i], s.mismatch[i]});
        C.rep.tables.push_back(t);
        C.rep.results["best_tilt"] = s.best_tilt;
    }
    CsvTable lines{"band", {"frequency", "height"}, {}};
    json band = json::array();
    for (const auto& p : r.band) {
        lines.rows.push_back({p.frequency, p.height});
        band.push_back(p.frequency);
    }
    C.rep.tables.push_back(lines);
    C.rep.results["band_peaks"] = band;
    C.rep.results["targets"] = r.targets;
    C.rep.results["mismatch"] = r.mismatch;
    C.rep.results["bin"] = r.spectrum.bin;
    C.rep.results["triplet_within_bin"] = r.triplet_within_bin;
    C.check("triplet", r.triplet_within_bin ? 1.0 : 0.0, 1.0);
}

void pancharatnam_triangle(const Params& P, Ctx& C) {
    const auto v = P.matrix("vertices");
    config_require(v.size() == 3, "vertices needs three points");
    std::vector<abelian::PolarizationState> s;
    std::vector<Vec3> e;
    for (const auto& row : v) {
        const Vec3 p = vec3(row, "vertex");
        config_require(p.norm() > 0, "vertex must be nonzero");
        s.emplace_back(abelian::jones_from_poincare(p.normalized()));
        e.push_back(abelian::poincare_point(s.back()));
    }
    const double phase =
        std::arg(s[0].jones.dot(s[1].jones) * s[1].jones.dot(s[2].jones) * s[2].jones.dot(s[0].jones));
    const double omega = abelian::solid_angle_of_loop(e);
    C.rep.results["phase"] = phase;
    C.rep.results["solid_angle"] = omega;
    C.rep.results["expected"] = wrap_phase(-0.5 * omega);
    C.rep.results["pairwise_phases"] = json::array({abelian::pancharatnam_relative_phase(s[0], s[1]),
                                                    abelian::pancharatnam_relative_phase(s[1], s[2]),
                                                    abelian::pancharatnam_relative_phase(s[2], s[0])});
    C.check("triangle_phase", std::abs(wrap_phase(phase + 0.5 * omega)));
}

// ---------------------------------------------------------------- classical scenarios

void hannay_oscillator(const Params& P, Ctx& C) {
    using namespace classical;
    const auto g = generalized_oscillator();
    const double rho = P.num("radius"), Z = P.num("height"), x0 = P.num("offset");
    auto cyc = [=](double s) { return pt3(x0 + rho * std::cos(kTwoPi * s), rho * std::sin(kTwoPi * s), Z); };
    const auto an = oscillator_hannay_angle(cyc);
    const auto I_list = P.list("actions");
    config_require(!I_list.empty(), "actions must not be empty");
    json conn = json::array();
    double ref = 0.0, spread = 0.0, vs_analytic = 0.0;
    for (size_t i = 0; i < I_list.size(); ++i) {
        const auto c = hannay_connection(g, I_list[i], cyc);
        conn.push_back(c.angle);
        if (i == 0) ref = c.angle;
        spread = std::max(spread, std::abs(c.angle - ref) / std::abs(ref));
        vs_analytic = std::max(vs_analytic, std::abs(c.angle - an.angle));
    }
    std::mt19937_64 rng(C.seed);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    double curv = 0.0;
    CsvTable ct{"curvature", {"X", "Y", "Z", "I", "V_x", "V_y", "V_z", "exact_x", "exact_y", "exact_z"}, {}};
    for (int k = 0; k < P.integer("curvature_points"); ++k) {
        const Vec3 R(u(rng), u(rng), 1.0 + 0.5 * std::abs(u(rng)));
        const double I = 0.5 + 0.4 * k;
        const Vec3 V = hannay_curvature_vector(g, I, R), Va = oscillator_curvature(I, R);
        curv = std::max(curv, (V - Va).norm() / Va.norm());
        ct.rows.push_back({R.x(), R.y(), R.z(), I, V.x(), V.y(), V.z(), Va.x(), Va.y(), Va.z()});
    }
    C.rep.tables.push_back(ct);
    CsvTable tt{"trajectory", {"T", "angle", "error", "action_drift"}, {}};
    double last_err = std::nan("");
    for (double T : P.list("trajectory_times")) {
        const auto tr = hannay_trajectory(g, I_list[0], cyc, T);
        last_err = std::abs(wrap_phase(tr.angle - ref));
        tt.rows.push_back({T, tr.angle, last_err, tr.action_drift});
    }
    C.rep.tables.push_back(tt);
    C.rep.results["analytic"] = an.angle;
    C.rep.results["connection"] = conn;
    C.rep.results["trajectory_error"] = last_err;
    C.check("curvature_pointwise", curv);
    C.check("action_independence", spread);
    C.check("connection_vs_analytic", vs_analytic);
    C.check("trajectory_vs_connection", last_err);
}

classical::PlanarCurve make_curve(const Params& P) {
    const std::string k = P.str("curve");
    if (k == "ellipse") return classical::ellipse_curve(P.num("a"), P.num("b"));
    if (k == "circle") return classical::circle_curve(P.num("a"));
    if (k == "stadium") return classical::stadium_curve(P.num("a"), P.num("b"));
    throw ConfigError("curve must be ellipse, circle or stadium");
}

void bead(const Params& P, Ctx& C) {
    using namespace classical;
    BeadOptions o;
    o.speed = P.num("speed");
    o.rotation_time = P.num("rotation_time");
    o.dt = P.num("dt");
    const auto curve = make_curve(P);
    const auto b = bead_slip(curve, o);
    BeadOptions o2 = o;
    o2.rotation_time *= 2;
    const auto b2 = bead_slip(curve, o2);
    const auto c = bead_slip(circle_curve(1.0), o);
    C.rep.results["area"] = b.area;
    C.rep.results["circumference"] = b.circumference;
    C.rep.results["analytic_slip"] = b.analytic;
    C.rep.results["simulated_slip"] = b.simulated;
    C.rep.results["laps"] = b.laps;
    C.rep.results["action_drift"] = b.action_drift;
    C.rep.results["doubled_action_drift"] = b2.action_drift;
    C.rep.results["circle_simulated_slip"] = c.simulated;
    C.rep.results["circle_circumference"] = c.circumference;
    C.check("slip", b.simulated, b.analytic);
    C.check("circle_full_slip", c.simulated, -c.circumference);
    C.check("action_drift", b.action_drift);
    C.check("drift_halving", b2.action_drift / b.action_drift, 0.5);
}

void foucault(const Params& P, Ctx& C) {
    classical::FoucaultOptions o;
    o.omega0 = P.num("omega0");
    o.day = P.num("day");
    o.amplitude = P.num("amplitude");
    o.dt = P.num("dt");
    const auto f = classical::foucault_simulation(P.num("latitude_angle"), o);
    C.rep.results["analytic"] = f.analytic;
    C.rep.results["simulated"] = f.simulated;
    C.rep.results["unwrapped"] = f.unwrapped;
    C.check("precession", f.simulated, f.analytic);
}

void rigid_body(const Params& P, Ctx& C) {
    const Vec3 d = vec3(P.list("inertia"), "inertia");
    Mat3 I = Mat3::Zero();
    I.diagonal() = d;
    const auto ang = P.list("orientation");
    config_require(ang.size() == 2, "orientation needs two angles");
    const Mat3 Q =
        (Eigen::AngleAxisd(ang[0], Vec3::UnitX()) * Eigen::AngleAxisd(ang[1], Vec3::UnitY())).toRotationMatrix();
    classical::RigidBodyOptions o;
    o.dt = P.num("dt");
    o.horizon = P.num("horizon");
    const auto r = classical::rigid_body_phase(I, P.num("angular_momentum"), Q, o);
    C.rep.results["delta_psi"] = r.delta_psi;
    C.rep.results["dynamical"] = r.dynamical;
    C.rep.results["geometric"] = r.geometric;
    C.rep.results["solid_angle"] = r.solid_angle;
    C.rep.results["period"] = r.period;
    C.rep.results["energy"] = r.energy;
    C.rep.diagnostics["orthogonality"] = r.orthogonality;
    C.check("phase_identity", r.identity_residual);
    C.check("energy_conservation", r.energy_drift);
    C.check("momentum_conservation", r.momentum_drift);
}

void falling_cat(const Params& P, Ctx& C) {
    using namespace classical;
    const auto cat = planar_cat_cycle(C.seed);
    const double tol = P.num("refine_tol");
    const auto r = shape_reorientation(cat, tol);
    const double w = P.num("warp");
    ShapeCycle warped = cat, back = cat;
    const auto pos = cat.positions;
    warped.positions = [pos, w](double s) { return pos(s + w * std::sin(kTwoPi * s) / kTwoPi); };
    back.positions = [pos](double s) { return s < 0.5 ? pos(2 * s) : pos(2 - 2 * s); };
    const double rate = (shape_reorientation(warped, tol).rotation - r.rotation).cwiseAbs().maxCoeff();
    const double retrace = (shape_reorientation(back, tol).rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double oracle = (shape_reorientation_oracle(cat, P.integer("oracle_steps")) - r.rotation).cwiseAbs().maxCoeff();
    C.rep.results["angle"] = r.angle;
    C.rep.results["axis"] = vec_json(r.axis);
    C.rep.results["masses"] = cat.masses;
    C.rep.diagnostics["steps"] = r.steps;
    C.rep.diagnostics["refinement_change"] = r.refinement_change;
    C.check("rate_invariance", rate);
    C.check("oracle_agreement", oracle);
    C.check("retrace_identity", retrace);
}

void coiled_fiber(const Params& P, Ctx& C) {
    using namespace classical;
    const auto path = helix_directions(P.num("radius"), P.num("pitch"), P.integer("turns"), P.integer("samples_per_turn"));
    const Vec3 d0 = path[0].cross(Vec3::UnitZ()).normalized();
    const auto tr = sphere_parallel_transport(d0, path);
    double omega = 0.0;
    const int per = P.integer("samples_per_turn");
    for (int t = 0; t < P.integer("turns"); ++t) {
        const std::vector<Vec3> loop(path.begin() + t * per, path.begin() + (t + 1) * per);
        omega += abelian::solid_angle_of_loop(loop);
    }
    const double amp = P.num("planar_amplitude");
    const int M = P.integer("planar_samples");
    std::vector<Vec3> wiggle;
    for (int k = 0; k <= M; ++k) {
        const double a = amp * std::sin(6 * kPi * k / M);
        wiggle.emplace_back(std::cos(a), std::sin(a), 0);
    }
    const auto flat = sphere_parallel_transport(Vec3(0, 0, 1), wiggle);
    C.rep.results["rotation"] = tr.rotation;
    C.rep.results["solid_angle"] = omega;
    C.rep.results["planar_rotation"] = flat.rotation;
    C.rep.diagnostics["max_norm_error"] = tr.max_norm_error;
    C.rep.diagnostics["max_tangent_error"] = tr.max_tangent_error;
    C.check("helix_rotation", std::abs(wrap_phase(tr.rotation - omega)));
    C.check("planar_rotation", std::abs(flat.rotation));
}

// ---------------------------------------------------------------- lattice scenarios

lattice::FluxRational flux_of(const Params& P) {
    lattice::FluxRational f{P.integer("p"), P.integer("q")};
    try {
        f.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return f;
}

json chern_json(const lattice::ChernReport& r) {
    json j;
    json per = json::array();
    for (const auto& c : r.per_band) per.push_back(c ? json(*c) : json(nullptr));
    j["per_band"] = per;
    j["raw"] = r.raw;
    j["gaps"] = r.gaps;
    j["groups"] = r.groups;
    j["group_chern"] = r.group_chern;
    j["total"] = r.total;
    j["complete"] = r.complete;
    j["max_plaquette"] = r.max_plaquette;
    return j;
}

void hofstadter_chern(const Params& P, Ctx& C) {
    const auto f = flux_of(P);
    const int nk = P.integer("nk");
    const auto r = lattice::band_chern(f, nk);
    int mismatch = 0;
    double dev = 0.0;
    json dio = json::array();
    for (int n = 0; n < f.q; ++n) {
        if (!r.per_band[n]) {
            dio.push_back(nullptr);
            continue;
        }
        const int d = lattice::diophantine_chern(f, n + 1);
        dio.push_back(d);
        mismatch += d != *r.per_band[n];
        dev = std::max(dev, std::abs(r.raw[n] - *r.per_band[n]));
    }
    C.rep.results = chern_json(r);
    C.rep.results["diophantine"] = dio;

    const auto grid = lattice::band_grid(f, nk);
    CsvTable bands{"bands", {"kx", "ky"}, {}};
    for (int n = 0; n < f.q; ++n) bands.header.push_back("E" + std::to_string(n));
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
            const auto k = grid.k(i, j);
            std::vector<double> row{k.x(), k.y()};
            for (int n = 0; n < f.q; ++n) row.push_back(grid.energies[grid.index(i, j)][n]);
            bands.rows.push_back(row);
        }
    C.rep.tables.push_back(bands);

    CsvTable sweep{"sweep", {"p", "q", "first_band", "last_band", "chern", "diophantine", "raw"}, {}};
    int sweep_bad = 0, sweep_total_bad = 0;
    for (int q = 1; q <= P.integer("sweep_q_max"); ++q)
        for (int p = 1; p <= q; ++p) {
            if (std::gcd(p, q) != 1) continue;
            const lattice::FluxRational g{p, q};
            const auto s = lattice::band_chern(g, nk);
            sweep_total_bad += s.total != 0;
            for (size_t k = 0; k < s.groups.size(); ++k) {
                const int lo = s.groups[k].front(), hi = s.groups[k].back() + 1;
                const int d = lattice::diophantine_gap_label(g, hi) - lattice::diophantine_gap_label(g, lo);
                sweep_bad += d != s.group_chern[k] || std::abs(s.group_raw[k] - s.group_chern[k]) > 1e-6;
                sweep.rows.push_back({double(p), double(q), double(lo), double(hi - 1), double(s.group_chern[k]),
                                      double(d), s.group_raw[k]});
            }
        }
    C.rep.tables.push_back(sweep);
    if (P.integer("butterfly_q_max") > 0) {
        CsvTable b{"butterfly", {"p", "q", "flux", "energy"}, {}};
        for (const auto& x : lattice::butterfly(P.integer("butterfly_q_max"), P.integer("butterfly_k_samples")))
            b.rows.push_back({double(x.p), double(x.q), double(x.p) / x.q, x.energy});
        C.rep.tables.push_back(b);
    }
    C.rep.results["sweep_mismatches"] = sweep_bad;
    C.check("diophantine_agreement", mismatch);
    C.check("raw_integrality", dev);
    C.check("total_chern", r.total, 0.0);
    C.check("complete", r.complete ? 1.0 : 0.0, 1.0);
    C.check("sweep_agreement", sweep_bad + sweep_total_bad);
}

void kubo(const Params& P, Ctx& C) {
    const auto f = flux_of(P);
    const int nk = P.integer("nk"), filled = P.integer("filled");
    config_require(filled >= 0 && filled <= f.q, "filled must be between 0 and q");
    const double tol = P.num("convergence_tol");
    const auto r = lattice::band_chern(f, nk);
    json per = json::array();
    double worst = 0.0, change = 0.0;
    int nk_final = nk;
    CsvTable t{"bands", {"band", "kubo", "chern", "mesh", "doubling_change"}, {}};
    for (int n = 0; n < f.q; ++n) {
        if (!r.per_band[n]) {
            per.push_back(nullptr);
            continue;
        }
        const auto k = lattice::kubo_band_converged(f, nk, n, tol);
        per.push_back(k.sigma);
        worst = std::max(worst, std::abs(k.sigma - *r.per_band[n]));
        change = std::max(change, k.change);
        nk_final = std::max(nk_final, k.nk);
        t.rows.push_back({double(n), k.sigma, double(*r.per_band[n]), double(k.nk), k.change});
    }
    C.rep.tables.push_back(t);
    const double sigma = lattice::kubo_sigma(f, nk_final, filled);
    const int label = lattice::diophantine_gap_label(f, filled);
    C.rep.results["sigma"] = sigma;
    C.rep.results["gap_label"] = label;
    C.rep.results["kubo_per_band"] = per;
    C.rep.results["chern"] = chern_json(r);
    C.rep.results["mesh"] = nk_final;
    C.check("kubo_vs_chern", worst);
    C.check("sigma_vs_label", sigma, label);
    C.check("mesh_doubling", change);
}

// ---------------------------------------------------------------- pseudorotation

using Rational = boost::multiprecision::cpp_rational;

// Exact least squares for y ~ X b; returns the residual sum of squares.
Rational exact_residual(const std::vector<std::vector<Rational>>& X, const std::vector<Rational>& y) {
    const size_t p = X.front().size();
    std::vector<std::vector<Rational>> A(p, std::vector<Rational>(p + 1, Rational(0)));
    for (size_t r = 0; r < X.size(); ++r)
        for (size_t i = 0; i < p; ++i) {
            for (size_t j = 0; j < p; ++j) A[i][j] += X[r][i] * X[r][j];
            A[i][p] += X[r][i] * y[r];
        }
    for (size_t c = 0; c < p; ++c) {
        size_t piv = c;
        while (piv < p && A[piv][c] == 0) ++piv;
        if (piv == p) throw NumericalError("singular normal equations");
        std::swap(A[c], A[piv]);
        for (size_t r = 0; r < p; ++r) {
            if (r == c || A[r][c] == 0) continue;
            const Rational m = A[r][c] / A[c][c];
            for (size_t j = c; j <= p; ++j) A[r][j] -= m * A[c][j];
        }
    }
    Rational rss = 0;
    for (size_t r = 0; r < X.size(); ++r) {
        Rational fit = 0;
        for (size_t i = 0; i < p; ++i) fit += X[r][i] * (A[i][p] / A[i][i]);
        rss += (y[r] - fit) * (y[r] - fit);
    }
    return rss;
}

void pseudorotation_levels(const Params& P, Ctx& C) {
    const int wr = P.integer("omega_rho"), wz = P.integer("omega_z"), rot = P.integer("rotational_constant");
    const int jmax = P.integer("j_max"), kmax = P.integer("k_max");
    config_require(jmax >= 1 && kmax >= 1, "j_max and k_max must be at least 1");
    std::vector<Rational> ms;
    for (double m : P.list("m_values")) {
        const double twice = 2 * m;
        config_require(std::abs(twice - std::round(twice)) < 1e-12 && static_cast<long>(std::round(twice)) % 2 != 0,
                       "m_values must be half-integral");
        ms.emplace_back(static_cast<long>(std::round(twice)), 2);
    }
    config_require(ms.size() >= 2, "m_values needs at least two values");
    const Rational half(1, 2);
    CsvTable t{"levels", {"j", "m", "k", "energy"}, {}};
    std::vector<Rational> E;
    struct Q {
        int j, k;
        Rational m;
    };
    std::vector<Q> qn;
    bool half_only = true;
    for (int j = 0; j <= jmax; ++j)
        for (const Rational& m : ms)
            for (int k = 0; k <= kmax; ++k) {
                const Rational e = (j + half) * wr + m * m * rot + (k + half) * wz;
                E.push_back(e);
                qn.push_back({j, k, m});
                half_only = half_only && denominator(m) == 2;
                t.rows.push_back({double(j), static_cast<double>(m), double(k), static_cast<double>(e)});
            }
    C.rep.tables.push_back(t);
    // Model E = (j + 1/2) w_rho + (k + 1/2) w_z + B n^2 with the m label n as given or shifted to integers.
    auto design = [&](const std::function<Rational(const Rational&)>& label) {
        std::vector<std::vector<Rational>> X;
        for (const Q& q : qn) {
            const Rational n = label(q.m);
            X.push_back({q.j + half, q.k + half, n * n});
        }
        return X;
    };
    const Rational half_rss = exact_residual(design([](const Rational& m) { return m; }), E);
    const Rational up = exact_residual(design([&](const Rational& m) { return m + half; }), E);
    const Rational down = exact_residual(design([&](const Rational& m) { return m - half; }), E);
    const Rational int_rss = up < down ? up : down;
    C.rep.results["half_integral_residual"] = static_cast<double>(half_rss);
    C.rep.results["integer_residual"] = static_cast<double>(int_rss);
    C.rep.results["integer_residual_exact"] = int_rss.str();
    C.rep.results["integer_residual_shift_up"] = up.str();
    C.rep.results["integer_residual_shift_down"] = down.str();
    C.rep.results["levels"] = E.size();
    C.check("half_integral_only", half_only ? 1.0 : 0.0, 1.0);
    C.check("half_integral_fit_exact", half_rss == 0 ? 1.0 : 0.0, 1.0);
    C.check("integer_fit_worse", static_cast<double>(int_rss - half_rss));
}

// ---------------------------------------------------------------- catalog

using Runner = void (*)(const Params&, Ctx&);

struct Entry {
    ScenarioInfo info;
    Runner run;
};

json pi_over(double d) { return kPi / d; }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = [] {
        std::vector<Entry> v;
        v.push_back({{"spin-cone",
                      "spin-1/2 phase round a cone of field directions, discrete product and propagation",
                      "gamma = -(1/2) solid angle for the aligned spin-1/2 state",
                      {{"theta0", "number", pi_over(3), "cone colatitude"},
                       {"samples", "integer", 400, "loop points for the overlap product"},
                       {"epsilons", "number-list", {0.02, 0.01, 0.005}, "adiabaticity parameters for propagation"},
                       {"ode_samples", "integer", 400, "stored samples per propagated cycle"}},
                      {{"discrete_phase", "abs", 1e-4, "overlap-product phase against -pi(1 - cos theta0)"},
                       {"ode_extrapolation", "abs", 1e-2, "propagated phase extrapolated to zero epsilon"}}},
                     spin_cone});
        v.push_back({{"monopole-census",
                      "curvature flux through a closed surface around the Zeeman degeneracy",
                      "flux of the curvature through a closed surface counts enclosed degeneracies",
                      {{"level", "integer", 1, "level index"},
                       {"center", "number-list", {0.0, 0.0, 0.0}, "sphere centre"},
                       {"radius", "number", 1.0, "sphere radius"},
                       {"subdivision", "integer", 2, "icosphere subdivision level"},
                       {"max_refinements", "integer", 4, "surface quadrisections allowed"}},
                      {{"charge", "eq", 0.0, "monopole charge"},
                       {"inverted_charge", "eq", 0.0, "charge with det dF/dR < 0"},
                       {"initial_residual", "max", 0.05, "|flux - 2 pi charge| / 2 pi before refinement"},
                       {"refined_residual", "max", 1e-3, "|flux - 2 pi charge| / 2 pi after refinement"}}},
                     monopole_census});
        v.push_back({{"curvature-methods",
                      "finite-difference, perturbation-sum and density-matrix curvature on a random family",
                      "three equivalent expressions for the curvature field",
                      {{"dim", "integer", 4, "Hilbert space dimension"},
                       {"level", "integer", 0, "level index"},
                       {"points", "integer", 50, "nondegenerate sample points"},
                       {"box", "number", 1.0, "points drawn from [-box, box]^3"},
                       {"min_gap", "number", 1e-2, "minimal gap to the neighbouring levels"}},
                      {{"method_agreement", "max", 1e-6, "largest relative disagreement"}}},
                     curvature_methods});
        v.push_back({{"wilson-nqr",
                      "holonomy of the quadrupole +-3/2 doublet round a cone",
                      "nonabelian phase of a degenerate doublet",
                      {{"cone_angle", "number", pi_over(3), "cone colatitude"},
                       {"omega_q", "number", 1.0, "quadrupole coupling"},
                       {"refine_tol", "number", 1e-9, "refinement tolerance on the unitary"},
                       {"initial_samples", "integer", 1024, "starting loop samples"}},
                      {{"off_diagonal", "max", 1e-8, "largest off-diagonal modulus"},
                       {"diagonal_phases", "max", 1e-8, "distance of the diagonal from exp(-+i 3 Omega/2)"}}},
                     wilson_nqr});
        v.push_back({{"aa-phase",
                      "nonadiabatic cyclic precession of a spin-1/2",
                      "geometric phase of a cyclic evolution is -(1/2) solid angle",
                      {{"tilt", "number", pi_over(3), "field angle from z"},
                       {"omega", "number", 1.0, "precession frequency"},
                       {"steps", "integer", 20000, "propagation steps per period"}},
                      {{"geometric_phase", "abs", 1e-6, "geometric phase against -pi(1 - cos tilt)"},
                       {"redecoration", "max", 1e-10, "change under random per-sample phases"}}},
                     aa_phase});
        v.push_back({{"superadiabatic",
                      "successive rotating-frame corrections to the phase of a swept spin",
                      "superadiabatic terms shrink then grow, with optimal truncation near 1/epsilon",
                      {{"epsilon", "number", 0.05, "adiabaticity parameter"},
                       {"kappa", "number", 1.0, "pulse amplitude"},
                       {"lambda", "number", 1.1268, "pulse rate"},
                       {"k_max", "integer", 30, "highest frame"},
                       {"half_width", "number", 80.0, "time window half width"},
                       {"grid", "integer", 8192, "spectral grid points"},
                       {"cutoff", "number", 0.75, "retained fraction of the Nyquist wavenumber"},
                       {"exact_steps", "integer", 400000, "steps of the reference propagation"}},
                      {{"optimal_index", "rel", 0.3, "index of the smallest term against 1/epsilon"},
                       {"ratio_slope", "rel", 0.3, "slope of |gamma_k+1 / gamma_k| beyond the minimum against epsilon"},
                       {"truncation_gain", "max", 0.1, "optimal-truncation error over the zeroth-order error"}}},
                     superadiabatic});
        v.push_back({{"geometric-amplitude",
                      "transition probability of a helical sweep against 1/epsilon",
                      "geometric factor exp(Gamma) in the exponentially small transition probability",
                      {{"a", "number", 0.5, "helix radius"},
                       {"omega", "number", 0.1, "helix twist"},
                       {"A", "number", 1.0, "sweep rate"},
                       {"epsilons", "number-list", {0.06, 0.08, 0.10, 0.13, 0.17, 0.22, 0.30}, "adiabaticity parameters"},
                       {"half_width", "number", 60.0, "time window half width"},
                       {"steps", "integer", 400000, "propagation steps"},
                       {"lz_gap_x", "number", 0.5, "Landau-Zener x field"},
                       {"lz_gap_y", "number", 0.5, "Landau-Zener y field"}},
                      {{"gamma", "rel", 0.1, "fitted Gamma against -a^2 omega sgn(A) / A^2"},
                       {"raw_intercept", "rel", 0.1, "fitted intercept against -pi a^2 omega sgn(A) / A^2"},
                       {"fit_quality", "min", 0.99, "r^2 of the linear fit"},
                       {"landau_zener_gamma", "max", 0.05, "|Gamma| of the straight sweep"}}},
                     geometric_amplitude});
        v.push_back({{"nmr-shift",
                      "precession line of a spin whose rotating-frame field is modulated round a cone",
                      "line shift -alpha/T from the geometric phase per modulation period",
                      {{"gyro", "number", 1.0, "gyromagnetic ratio"},
                       {"omega", "number", 10.0, "rotating-frame frequency"},
                       {"field", "number", 1.0, "rotating-frame field"},
                       {"cone_angle", "number", 0.5, "modulation cone half angle"},
                       {"period", "number", 200.0, "modulation period"},
                       {"duration", "number", 8000.0, "record length"},
                       {"sample_dt", "number", 0.25, "sampling interval"},
                       {"substeps", "integer", 8, "propagation steps per sample"}},
                      {{"peak_offset_bins", "max", 1.0, "|measured - expected| in FFT bins"},
                       {"doubled_peak_offset_bins", "max", 1.0, "same with the period doubled"},
                       {"shift_ratio", "rel", 0.05, "shift with doubled period over the original shift"}}},
                     nmr_shift});
        v.push_back({{"tycko",
                      "quadrupole lines near 2 omega_Q of a sample rotating about a tilted axis",
                      "rotation splits the 2 omega_Q line by a geometric phase",
                      {{"omega_q", "number", 1.0, "quadrupole frequency"},
                       {"omega_r", "number", 0.01, "sample rotation rate"},
                       {"tilt", "number", 0.9553166181245093, "rotation axis tilt"},
                       {"duration", "number", 40000.0, "record length"},
                       {"sample_dt", "number", 0.5, "sampling interval"},
                       {"substeps", "integer", 10, "propagation steps per sample"},
                       {"scan_tilts", "number-list", json::array(), "tilts to scan; empty uses tilt"}},
                      {{"triplet", "eq", 0.0, "three lines at 2wQ and 2wQ +- sqrt3 wR/pi within one bin"}}},
                     tycko});
        v.push_back({{"hannay-oscillator",
                      "Hannay angle of the generalized oscillator round a circle of parameters",
                      "classical angle -d/dI of the loop integral of the angle connection",
                      {{"radius", "number", 0.4, "parameter circle radius"},
                       {"height", "number", 1.0, "Z of the circle"},
                       {"offset", "number", 0.0, "X offset of the circle centre"},
                       {"actions", "number-list", {0.5, 1.0, 2.0}, "actions"},
                       {"curvature_points", "integer", 5, "random points for the curvature check"},
                       {"trajectory_times", "number-list", {4000.0, 8000.0}, "cycle durations"}},
                      {{"curvature_pointwise", "max", 1e-3, "relative curvature error"},
                       {"action_independence", "max", 1e-6, "relative spread over actions"},
                       {"connection_vs_analytic", "max", 1e-6, "connection against half the hyperbolic area"},
                       {"trajectory_vs_connection", "max", 1e-3, "trajectory angle at the longest time"}}},
                     hannay_oscillator});
        v.push_back({{"bead",
                      "bead on a slowly rotated planar loop",
                      "geometric slip -4 pi A / C of a bead on a loop turned once",
                      {{"curve", "string", "ellipse", "ellipse (a, b), circle (radius a) or stadium (length a, radius b)"},
                       {"a", "number", 2.0, "first curve parameter"},
                       {"b", "number", 1.0, "second curve parameter"},
                       {"speed", "number", 1.0, "initial speed along the wire"},
                       {"rotation_time", "number", 2000.0, "time for one turn"},
                       {"dt", "number", 0.01, "time step"}},
                      {{"slip", "rel", 0.01, "simulated against analytic slip"},
                       {"circle_full_slip", "rel", 1e-6, "unit circle slips its circumference"},
                       {"action_drift", "max", 0.01, "frozen-speed drift"},
                       {"drift_halving", "abs", 0.05, "drift ratio when the turn time doubles"}}},
                     bead});
        v.push_back({{"foucault",
                      "spherical pendulum on a turning Earth",
                      "swing plane turns by 2 pi (1 - cos alpha) per day",
                      {{"latitude_angle", "number", pi_over(4), "angle between the Earth axis and the vertical"},
                       {"omega0", "number", 1.0, "pendulum frequency"},
                       {"day", "number", 2000.0, "length of the day"},
                       {"amplitude", "number", 0.05, "swing amplitude"},
                       {"dt", "number", 0.01, "time step"}},
                      {{"precession", "rel", 0.01, "simulated against 2 pi (1 - cos alpha)"}}},
                     foucault});
        v.push_back({{"rigid-body",
                      "free asymmetric top, rotation about the angular momentum after one period",
                      "delta psi = 2 E T / |L| + loop integral of cos theta dphi",
                      {{"inertia", "number-list", {1.0, 2.0, 3.0}, "principal moments"},
                       {"angular_momentum", "number", 1.0, "|L|"},
                       {"orientation", "number-list", {0.7, 0.4}, "initial rotation angles about x then y"},
                       {"dt", "number", 1e-3, "time step"},
                       {"horizon", "number", 1e4, "period search horizon"}},
                      {{"phase_identity", "max", 1e-4, "residual of the phase identity mod 2 pi"},
                       {"energy_conservation", "max", 1e-8, "relative energy drift"},
                       {"momentum_conservation", "max", 1e-8, "relative |L| drift"}}},
                     rigid_body});
        v.push_back({{"falling-cat",
                      "reorientation of a deforming three-mass body at zero angular momentum",
                      "net rotation from a closed cycle of shapes",
                      {{"refine_tol", "number", 1e-12, "step-doubling tolerance"},
                       {"warp", "number", 0.3, "reparameterization strength"},
                       {"oracle_steps", "integer", 2000, "steps of the constrained-dynamics oracle"}},
                      {{"rate_invariance", "max", 1e-8, "change under reparameterization"},
                       {"oracle_agreement", "max", 1e-4, "difference from the oracle"},
                       {"retrace_identity", "max", 1e-8, "distance of a retraced cycle from identity"}}},
                     falling_cat});
        v.push_back({{"coiled-fiber",
                      "transport of the polarization direction along a helical fibre",
                      "polarization turns by the solid angle of the tangent loop",
                      {{"radius", "number", 1.0, "helix radius"},
                       {"pitch", "number", 3.0, "helix pitch"},
                       {"turns", "integer", 1, "turns"},
                       {"samples_per_turn", "integer", 2000, "direction samples per turn"},
                       {"planar_amplitude", "number", 0.8, "angle amplitude of the planar fibre"},
                       {"planar_samples", "integer", 300, "planar fibre samples"}},
                      {{"helix_rotation", "max", 1e-4, "rotation against the solid angle mod 2 pi"},
                       {"planar_rotation", "max", 1e-6, "rotation of a planar fibre"}}},
                     coiled_fiber});
        v.push_back({{"pancharatnam-triangle",
                      "phase of three polarization states round a geodesic triangle",
                      "Pancharatnam phase is -(1/2) the Poincare-sphere solid angle",
                      {{"vertices", "matrix", {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}, "Poincare points"}},
                      {{"triangle_phase", "max", 1e-6, "|phase + Omega/2| mod 2 pi"}}},
                     pancharatnam_triangle});
        v.push_back({{"hofstadter-chern",
                      "Chern numbers of magnetic Bloch bands at rational flux",
                      "band Chern numbers solve the Diophantine gap equation",
                      {{"p", "integer", 1, "flux numerator"},
                       {"q", "integer", 3, "flux denominator"},
                       {"nk", "integer", 24, "k mesh per side"},
                       {"sweep_q_max", "integer", 6, "largest q in the sweep"},
                       {"butterfly_q_max", "integer", 0, "largest q in the butterfly table; 0 skips it"},
                       {"butterfly_k_samples", "integer", 2, "k samples per side for the butterfly"}},
                      {{"diophantine_agreement", "max", 0.0, "bands disagreeing with the Diophantine label"},
                       {"raw_integrality", "max", 1e-6, "largest |raw - integer|"},
                       {"total_chern", "eq", 0.0, "sum over bands"},
                       {"complete", "eq", 0.0, "all gaps open"},
                       {"sweep_agreement", "max", 0.0, "disagreements over the sweep"}}},
                     hofstadter_chern});
        v.push_back({{"kubo",
                      "Kubo Hall conductance of filled magnetic Bloch bands",
                      "Kubo formula equals the summed band curvature integrals",
                      {{"p", "integer", 1, "flux numerator"},
                       {"q", "integer", 3, "flux denominator"},
                       {"nk", "integer", 24, "starting k mesh per side"},
                       {"filled", "integer", 1, "filled bands"},
                       {"convergence_tol", "number", 1e-8, "mesh-doubling tolerance"}},
                      {{"kubo_vs_chern", "max", 1e-6, "per-band Kubo against the link-variable integer"},
                       {"sigma_vs_label", "abs", 1e-6, "Hall conductance against the gap label"},
                       {"mesh_doubling", "max", 1e-6, "change under the last mesh doubling"}}},
                     kubo});
        v.push_back({{"pseudorotation-levels",
                      "vibration-rotation levels of a pseudorotating molecule",
                      "sign change round the degeneracy makes the pseudorotation quantum number half-integral",
                      {{"omega_rho", "integer", 20, "radial vibration quantum"},
                       {"omega_z", "integer", 7, "transverse vibration quantum"},
                       {"rotational_constant", "integer", 1, "1 / 2I in the same units"},
                       {"j_max", "integer", 2, "largest radial quantum number"},
                       {"k_max", "integer", 1, "largest transverse quantum number"},
                       {"m_values", "number-list", {-1.5, -0.5, 0.5, 1.5}, "pseudorotation quantum numbers"}},
                      {{"half_integral_only", "eq", 0.0, "every m in the table is half-integral"},
                       {"half_integral_fit_exact", "eq", 0.0, "half-integral model reproduces the levels exactly"},
                       {"integer_fit_worse", "gt", 0.0, "integer-m residual minus half-integral residual"}}},
                     pseudorotation_levels});
        return v;
    }();
    return e;
}

const Entry& find_entry(const std::string& name) {
    for (const auto& e : entries())
        if (e.info.name == name) return e;
    throw ConfigError("unknown scenario '" + name + "'");
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

bool RunReport::passed() const {
    return std::all_of(expectations.begin(), expectations.end(), [](const Expectation& e) { return e.pass; });
}

const Expectation& RunReport::expectation(const std::string& name) const {
    for (const auto& e : expectations)
        if (e.name == name) return e;
    throw Error("internal", "no expectation " + name);
}

const std::vector<ScenarioInfo>& catalog() {
    static const std::vector<ScenarioInfo> c = [] {
        std::vector<ScenarioInfo> v;
        for (const auto& e : entries()) v.push_back(e.info);
        return v;
    }();
    return c;
}

const ScenarioInfo& find_scenario(const std::string& name) { return find_entry(name).info; }

json catalog_json() {
    json out = json::array();
    for (const auto& s : catalog()) {
        json keys = json::array(), ex = json::array();
        for (const auto& k : s.keys)
            keys.push_back({{"name", k.name}, {"type", k.type}, {"default", k.default_value}, {"description", k.description}});
        for (const auto& e : s.expectations)
            ex.push_back({{"name", e.name}, {"kind", e.kind}, {"tolerance", e.tolerance}, {"description", e.description}});
        out.push_back({{"name", s.name},
                       {"description", s.description},
                       {"anchor", s.anchor},
                       {"keys", keys},
                       {"expectations", ex}});
    }
    return out;
}

ScenarioConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be an object");
    static const std::vector<std::string> top{"scenario", "parameters", "tolerances", "output", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(top.begin(), top.end(), it.key()) == top.end())
            throw ConfigError("unknown config key '" + it.key() + "'");
    if (!j.contains("scenario") || !j["scenario"].is_string()) throw ConfigError("config needs a scenario name");
    ScenarioConfig c;
    c.scenario = j["scenario"].get<std::string>();
    const ScenarioInfo& info = find_scenario(c.scenario);
    if (j.contains("parameters")) {
        c.parameters = j["parameters"];
        Params check(info, c.parameters);
    }
    if (j.contains("tolerances")) {
        c.tolerances = j["tolerances"];
        if (!c.tolerances.is_object()) throw ConfigError("tolerances must be an object");
        for (auto it = c.tolerances.begin(); it != c.tolerances.end(); ++it) {
            const bool known = std::any_of(info.expectations.begin(), info.expectations.end(),
                                           [&](const ExpectSpec& e) { return e.name == it.key(); });
            if (!known) throw ConfigError(info.name + ": unknown tolerance '" + it.key() + "'");
            if (!it.value().is_number()) throw ConfigError("tolerance '" + it.key() + "' must be a number");
        }
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        if (!o.is_object()) throw ConfigError("output must be an object");
        for (auto it = o.begin(); it != o.end(); ++it) {
            if (it.key() == "directory") {
                if (!it.value().is_string()) throw ConfigError("output.directory must be a string");
                c.out_dir = it.value().get<std::string>();
            } else if (it.key() == "formats") {
                if (!it.value().is_array()) throw ConfigError("output.formats must be a list");
                c.formats.clear();
                for (const auto& f : it.value()) {
                    if (!f.is_string() || (f != "json" && f != "csv"))
                        throw ConfigError("output.formats entries must be json or csv");
                    c.formats.push_back(f.get<std::string>());
                }
            } else {
                throw ConfigError("unknown output key '" + it.key() + "'");
            }
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0) throw ConfigError("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return parse_config(j);
}

RunReport run(const ScenarioConfig& cfg) {
    const Entry& e = find_entry(cfg.scenario);
    const Params P(e.info, cfg.parameters);
    RunReport r;
    r.scenario = cfg.scenario;
    const std::uint64_t seed = cfg.seed.value_or(7);
    r.inputs = {{"parameters", P.merged()}, {"seed", seed}, {"tolerances", cfg.tolerances}};
    Ctx ctx{e.info, cfg.tolerances, seed, r};
    const auto t0 = std::chrono::steady_clock::now();
    e.run(P, ctx);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

json report_json(const RunReport& r) {
    json ex = json::array();
    for (const auto& e : r.expectations)
        ex.push_back({{"name", e.name},
                      {"kind", e.kind},
                      {"value", e.value},
                      {"target", e.target},
                      {"tolerance", e.tolerance},
                      {"pass", e.pass}});
    json tables = json::array();
    for (const auto& t : r.tables) tables.push_back({{"name", t.name}, {"columns", t.header}, {"rows", t.rows.size()}});
    return {{"scenario", r.scenario},
            {"inputs", r.inputs},
            {"results", r.results},
            {"expectations", ex},
            {"diagnostics", r.diagnostics},
            {"tables", tables},
            {"passed", r.passed()}};
}

std::string csv_text(const CsvTable& t) {
    std::ostringstream s;
    for (size_t i = 0; i < t.header.size(); ++i) s << (i ? "," : "") << t.header[i];
    s << "\n";
    for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << format_number(row[i]);
        s << "\n";
    }
    return s.str();
}

std::vector<std::string> emit(const RunReport& r, const std::string& dir, const std::vector<std::string>& formats) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("output error", "cannot create " + dir + ": " + ec.message());
    std::vector<std::string> written;
    auto write = [&](const fs::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        out << text;
        if (!out) throw Error("output error", "cannot write " + p.string());
        written.push_back(p.string());
    };
    for (const auto& f : formats) {
        if (f == "json") {
            write(fs::path(dir) / (r.scenario + ".json"), report_json(r).dump(2) + "\n");
        } else if (f == "csv") {
            for (const auto& t : r.tables) write(fs::path(dir) / (r.scenario + "-" + t.name + ".csv"), csv_text(t));
        } else {
            throw ConfigError("unknown output format '" + f + "'");
        }
    }
    return written;
}

}  // namespace holab::scenarios
