#include "holab/nonabelian.hpp"

#include <algorithm>
#include <numeric>

namespace holab::nonabelian {

namespace {

struct Recipe {
    std::vector<int> basis;   // projected standard-basis vectors (unlabelled frames)
    std::vector<int> pivots;  // per-column gauge pivot
};

CMat inv_sqrt_hermitian(const CMat& S) {
    Eigen::SelfAdjointEigenSolver<CMat> es(S);
    RVec d = es.eigenvalues();
    for (int i = 0; i < d.size(); ++i) {
        if (d[i] <= 1e-14) throw MultipletError("projected basis is rank deficient");
        d[i] = 1.0 / std::sqrt(d[i]);
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

CMat projector_of(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R) {
    auto es = spectral::eigendecompose(family, R);
    const int N = family.dim();
    auto lv = group.levels;
    if (lv.empty()) throw MultipletError("empty level group");
    std::sort(lv.begin(), lv.end());
    for (size_t i = 0; i < lv.size(); ++i) {
        if (lv[i] < 0 || lv[i] >= N) throw MultipletError("level index out of range");
        if (i > 0 && lv[i] != lv[i - 1] + 1) throw MultipletError("level group must be contiguous");
    }
    const double range = std::max(es.spectral_range, 1e-300);
    const double tol = kMultipletTolerance * range;
    const double spread = es.energies[lv.back()] - es.energies[lv.front()];
    if (spread > tol)
        throw MultipletError("selected levels are not degenerate (spread " + std::to_string(spread) + ")");
    if (lv.front() > 0 && es.energies[lv.front()] - es.energies[lv.front() - 1] <= tol)
        throw MultipletError("multiplet not isolated from the level below");
    if (lv.back() + 1 < N && es.energies[lv.back() + 1] - es.energies[lv.back()] <= tol)
        throw MultipletError("multiplet not isolated from the level above");
    CMat V(N, static_cast<int>(lv.size()));
    for (size_t i = 0; i < lv.size(); ++i) V.col(static_cast<int>(i)) = es.states.col(lv[i]);
    return V;  // orthonormal columns (eigenvectors)
}

CMat build_frame(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R,
                 Recipe* recipe, bool reuse) {
    const CMat V = projector_of(family, group, R);
    const int N = static_cast<int>(V.rows());
    const int r = static_cast<int>(V.cols());
    CMat F;
    if (group.label) {
        const CMat L = group.label(R);
        const CMat Lr = V.adjoint() * L * V;
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (Lr + Lr.adjoint()));
        // descending label order
        F = V * es.eigenvectors().rowwise().reverse();
    } else {
        const CMat P = V * V.adjoint();
        if (!reuse) {
            // greedy pivoted selection of standard-basis vectors with largest projected residual
            recipe->basis.clear();
            CMat Q(N, 0);
            for (int c = 0; c < r; ++c) {
                int best = -1;
                double bestn = -1;
                for (int i = 0; i < N; ++i) {
                    if (std::find(recipe->basis.begin(), recipe->basis.end(), i) != recipe->basis.end()) continue;
                    CVec v = P.col(i);
                    if (Q.cols() > 0) v -= Q * (Q.adjoint() * v);
                    const double n = v.norm();
                    if (n > bestn * (1.0 + 1e-12)) {
                        bestn = n;
                        best = i;
                    }
                }
                CVec v = P.col(best);
                if (Q.cols() > 0) v -= Q * (Q.adjoint() * v);
                Q.conservativeResize(N, Q.cols() + 1);
                Q.col(Q.cols() - 1) = v / v.norm();
                recipe->basis.push_back(best);
            }
            std::sort(recipe->basis.begin(), recipe->basis.end());
        }
        CMat E(N, r);
        for (int c = 0; c < r; ++c) E.col(c) = P.col(recipe->basis[c]);
        F = E * inv_sqrt_hermitian(E.adjoint() * E);
    }
    if (!reuse) {
        recipe->pivots.resize(r);
        for (int c = 0; c < r; ++c) recipe->pivots[c] = spectral::gauge_pivot(F.col(c));
    }
    for (int c = 0; c < r; ++c) F.col(c) = spectral::fix_gauge_at(F.col(c), recipe->pivots[c]);
    return F;
}

CMat frame_with(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R, Recipe& recipe) {
    return build_frame(family, group, R, &recipe, true);
}

std::vector<CMat> connection_with(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R,
                                  Recipe& recipe, double h, double* residual) {
    const int d = static_cast<int>(R.size());
    const CMat F = frame_with(family, group, R, recipe);
    std::vector<CMat> A(d);
    double res = 0.0;
    for (int a = 0; a < d; ++a) {
        ParameterPoint Rp = R, Rm = R;
        Rp[a] += h;
        Rm[a] -= h;
        const CMat Fp = frame_with(family, group, Rp, recipe);
        const CMat Fm = frame_with(family, group, Rm, recipe);
        const CMat raw = -kI * (F.adjoint() * (Fp - Fm)) / (2.0 * h);
        A[a] = 0.5 * (raw + raw.adjoint());
        const double scale = std::max(1.0, raw.cwiseAbs().maxCoeff());
        res = std::max(res, (0.5 * (raw - raw.adjoint())).cwiseAbs().maxCoeff() / scale);
    }
    if (residual) *residual = res;
    return A;
}

}  // namespace

CMat multiplet_basis(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R) {
    Recipe recipe;
    return build_frame(family, group, R, &recipe, false);
}

CMat polar_unitary(const CMat& M) {
    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

std::vector<double> eigenphases(const CMat& U) {
    Eigen::ComplexEigenSolver<CMat> es(U);
    std::vector<double> p;
    for (int i = 0; i < es.eigenvalues().size(); ++i) p.push_back(std::arg(es.eigenvalues()[i]));
    std::sort(p.begin(), p.end());
    return p;
}

MatrixConnection connection_matrices(const HamiltonianFamily& family, const LevelGroup& group,
                                     const ParameterPoint& R, double step) {
    Recipe recipe;
    MatrixConnection mc;
    mc.basis = build_frame(family, group, R, &recipe, false);
    mc.A = connection_with(family, group, R, recipe, step, &mc.antihermitian_residual);
    if (mc.antihermitian_residual > 1e-6)
        throw TransportError("frame alignment failed: anti-Hermitian residual " +
                             std::to_string(mc.antihermitian_residual));
    return mc;
}

CurvatureMatrix curvature_matrix(const HamiltonianFamily& family, const LevelGroup& group, const ParameterPoint& R,
                                 double step) {
    const int d = static_cast<int>(R.size());
    if (d != 2 && d != 3) throw DomainError("curvature matrix needs 2 or 3 parameters");
    Recipe recipe;
    build_frame(family, group, R, &recipe, false);
    double res = 0.0, r1 = 0.0;
    const auto A = connection_with(family, group, R, recipe, step, &r1);
    res = std::max(res, r1);
    std::vector<std::vector<CMat>> Ap(d), Am(d);
    for (int b = 0; b < d; ++b) {
        ParameterPoint Rp = R, Rm = R;
        Rp[b] += step;
        Rm[b] -= step;
        Ap[b] = connection_with(family, group, Rp, recipe, step, &r1);
        res = std::max(res, r1);
        Am[b] = connection_with(family, group, Rm, recipe, step, &r1);
        res = std::max(res, r1);
    }
    auto F = [&](int a, int b) {
        // d_a A_b - d_b A_a + i[A_a, A_b]
        CMat f = (Ap[a][b] - Am[a][b]) / (2.0 * step) - (Ap[b][a] - Am[b][a]) / (2.0 * step) +
                 kI * (A[a] * A[b] - A[b] * A[a]);
        return f;
    };
    CurvatureMatrix cm;
    const int r = static_cast<int>(A[0].rows());
    for (auto& v : cm.V) v = CMat::Zero(r, r);
    if (d == 2) {
        cm.V[2] = F(0, 1);
    } else {
        cm.V[0] = F(1, 2);
        cm.V[1] = F(2, 0);
        cm.V[2] = F(0, 1);
    }
    double herm = 0.0;
    for (auto& v : cm.V) {
        herm = std::max(herm, (0.5 * (v - v.adjoint())).cwiseAbs().maxCoeff());
        v = 0.5 * (v + v.adjoint());
    }
    cm.antihermitian_residual = std::max(res, herm);
    if (res > 1e-6) throw TransportError("frame alignment failed on the curvature stencil");
    return cm;
}

CMat ordered_product(const std::vector<CMat>& frames) {
    if (frames.size() < 2) throw DomainError("ordered product needs at least two frames");
    const int r = static_cast<int>(frames[0].cols());
    CMat T = CMat::Identity(r, r);
    for (size_t k = 0; k + 1 < frames.size(); ++k) {
        const CMat M = frames[k + 1].adjoint() * frames[k];
        Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
        if (svd.singularValues().minCoeff() < 1e-6)
            throw TransportError("multiplet rotates out of itself between samples " + std::to_string(k) + " and " +
                                 std::to_string(k + 1));
        T = (svd.matrixU() * svd.matrixV().adjoint()) * T;
    }
    // removes rounding drift accumulated over long products
    return polar_unitary(T);
}

HolonomyUnitary wilson_loop(const HamiltonianFamily& family, const LevelGroup& group, const ParameterLoop& C) {
    C.validate();
    if (!C.closed) throw GeometryError("wilson loop needs a closed loop");
    std::vector<CMat> frames;
    frames.reserve(C.points.size());
    for (const auto& p : C.points) frames.push_back(multiplet_basis(family, group, p));
    HolonomyUnitary h;
    h.U = ordered_product(frames);
    h.loop = C;
    h.samples = static_cast<int>(C.points.size()) - 1;
    return h;
}

HolonomyUnitary wilson_loop_refined(const HamiltonianFamily& family, const LevelGroup& group,
                                    const std::function<ParameterPoint(double)>& c, double tol, int n_start,
                                    int n_max) {
    // frames are kept across doublings; each doubling only evaluates the new midpoints
    std::vector<CMat> frames;
    for (int k = 0; k < n_start; ++k) frames.push_back(multiplet_basis(family, group, c(static_cast<double>(k) / n_start)));
    auto product = [&]() {
        std::vector<CMat> closed = frames;
        closed.push_back(frames.front());
        return ordered_product(closed);
    };
    int N = n_start;
    CMat prev = product();
    while (true) {
        std::vector<CMat> finer;
        finer.reserve(2 * frames.size());
        for (int k = 0; k < N; ++k) {
            finer.push_back(std::move(frames[k]));
            finer.push_back(multiplet_basis(family, group, c((k + 0.5) / N)));
        }
        frames = std::move(finer);
        N *= 2;
        CMat cur = product();
        const double change = (cur - prev).cwiseAbs().maxCoeff();
        if (change < tol) {
            HolonomyUnitary h;
            h.U = cur;
            for (int k = 0; k < N; ++k) h.loop.points.push_back(c(static_cast<double>(k) / N));
            h.loop.points.push_back(h.loop.points.front());
            h.samples = N;
            h.refinement_error = change;
            return h;
        }
        if (N >= n_max)
            throw AccuracyError("wilson loop not converged at " + std::to_string(N) + " samples (change " +
                                std::to_string(change) + ")");
        prev = std::move(cur);
    }
}

GaugeCovarianceReport gauge_covariance_check(const HamiltonianFamily& family, const LevelGroup& group,
                                             const ParameterLoop& C, const std::function<CMat(int)>& W) {
    C.validate();
    std::vector<CMat> frames, remixed;
    const int n = static_cast<int>(C.points.size());
    for (int k = 0; k < n; ++k) {
        frames.push_back(multiplet_basis(family, group, C.points[k]));
        // the closing point repeats the first, so it must carry the first remix
        const CMat w = W(k == n - 1 ? 0 : k);
        remixed.push_back(frames.back() * w.adjoint());
    }
    GaugeCovarianceReport r;
    r.U = ordered_product(frames);
    r.U_remixed = ordered_product(remixed);
    const CMat W0 = W(0);
    r.conjugation_residual = (r.U_remixed - W0 * r.U * W0.adjoint()).cwiseAbs().maxCoeff();
    Eigen::ComplexEigenSolver<CMat> ea(r.U), eb(r.U_remixed);
    double dist = 0.0;
    for (int i = 0; i < ea.eigenvalues().size(); ++i) {
        double best = 1e300, best2 = 1e300;
        for (int j = 0; j < eb.eigenvalues().size(); ++j) {
            best = std::min(best, std::abs(ea.eigenvalues()[i] - eb.eigenvalues()[j]));
            best2 = std::min(best2, std::abs(eb.eigenvalues()[i] - ea.eigenvalues()[j]));
        }
        dist = std::max({dist, best, best2});
    }
    r.eigenvalue_distance = dist;
    return r;
}

}  // namespace holab::nonabelian
