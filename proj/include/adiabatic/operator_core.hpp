#pragma once

// Spectral splitting B = ker L (+) ran L of a generator, the reduced inverse,
// and numerical checks of the structural hypotheses (contraction generator,
// transversality, semisimple kernel, gap).

#include "adiabatic/errors.hpp"
#include "adiabatic/linalg.hpp"

#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace adiabatic {

enum class ModelClass { hamiltonian, adjoint, lindblad, markov, generic };

inline const char* to_string(ModelClass c) {
    switch (c) {
        case ModelClass::hamiltonian: return "hamiltonian";
        case ModelClass::adjoint: return "adjoint";
        case ModelClass::lindblad: return "lindblad";
        case ModelClass::markov: return "markov";
        case ModelClass::generic: break;
    }
    return "generic";
}

/// Norm in which each model class is a contraction.
inline NormKind declared_norm(ModelClass c) {
    switch (c) {
        case ModelClass::adjoint:
        case ModelClass::lindblad: return NormKind::trace;
        case ModelClass::markov: return NormKind::l1;
        default: break;
    }
    return NormKind::euclidean;
}

/// Smooth family s -> L(s) on [0, 1] with its derivative.
struct GeneratorPath {
    Eigen::Index dim = 0;
    std::function<Matrix(double)> generator;
    std::function<Matrix(double)> derivative;  // optional
    ModelClass model_class = ModelClass::generic;

    Matrix at(double s) const { return generator(s); }

    /// L'(s); falls back to an 8th-order central difference when no
    /// analytic derivative was supplied.
    Matrix derivative_at(double s) const {
        if (derivative) return derivative(s);
        constexpr double h = 1e-3;
        constexpr double w[4] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
        Matrix acc = Matrix::Zero(dim, dim);
        for (int k = 1; k <= 4; ++k) acc += w[k - 1] * (generator(s + k * h) - generator(s - k * h));
        return acc / h;
    }

    NormKind norm() const { return declared_norm(model_class); }
};

struct SplitOptions {
    double tol_kernel = 1e-9;    // relative to ||L||_2
    double gap_min = 1e-6;
    double max_condition = 1e10; // bound on 1 / transversality
};

struct SpectralSplit {
    Matrix P;        // projection onto ker L along ran L
    Matrix Q;        // 1 - P
    Matrix L_inv;    // inverse of L on ran L, zero on ker L
    double gap = 0;  // min |lambda| over nonzero eigenvalues
    int kernel_dim = 0;
    /// Smallest singular value of (a, b) -> a + b on orthonormal bases of
    /// ker L x ran L; zero iff the subspaces are not transversal.
    double transversality = 1.0;
    Vector eigenvalues;
    double norm = 0;  // ||L||_2
};

/// Splits L into its 0-cluster and the rest. The 0-cluster consists of the
/// eigenvalues with |lambda| < tol_kernel ||L||. P is the spectral (Riesz)
/// projection of that cluster, assembled from bases of ker L and ker L^*:
/// P = K (W^* K)^{-1} W^*. This equals the sum of the cluster's
/// eigenprojections whenever 0 is semisimple, and stays well defined when
/// other eigenvalues are degenerate.
inline SpectralSplit spectral_split(const Matrix& L, const SplitOptions& opt = {}) {
    if (L.rows() != L.cols()) throw std::invalid_argument("spectral_split: matrix must be square");
    if (!L.allFinite()) throw std::invalid_argument("spectral_split: non-finite entries");
    const Eigen::Index d = L.rows();
    SpectralSplit out;
    out.norm = norm2(L);
    Eigen::ComplexEigenSolver<Matrix> ces(L, false);
    out.eigenvalues = ces.eigenvalues();
    if (out.norm == 0.0) {
        out.P = Matrix::Identity(d, d);
        out.Q = Matrix::Zero(d, d);
        out.L_inv = Matrix::Zero(d, d);
        out.gap = std::numeric_limits<double>::infinity();
        out.kernel_dim = static_cast<int>(d);
        return out;
    }

    const double thr = opt.tol_kernel * out.norm;
    int k = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d; ++i) {
        const double m = std::abs(out.eigenvalues(i));
        if (m < thr)
            ++k;
        else
            gap = std::min(gap, m);
    }
    out.kernel_dim = k;
    out.gap = gap;

    Eigen::JacobiSVD<Matrix> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix K = svd.matrixV().rightCols(k);
    const Matrix W = svd.matrixU().rightCols(k);
    const Matrix R = svd.matrixU().leftCols(d - k);

    if (k == 0) {
        out.P = Matrix::Zero(d, d);
    } else {
        const Matrix wk = W.adjoint() * K;
        Eigen::JacobiSVD<Matrix> wk_svd(wk);
        const double smin = wk_svd.singularValues()(k - 1);
        if (smin < 1e-8)
            throw NonSemisimpleKernel("0 carries a nonvanishing eigennilpotent (ker L meets ran L)");
        out.P = K * wk.inverse() * W.adjoint();
    }
    out.Q = Matrix::Identity(d, d) - out.P;

    const double lp = std::max(norm2(L * out.P), norm2(out.P * L));
    if (lp > opt.tol_kernel * out.norm)
        throw NonSemisimpleKernel("||L P|| = " + std::to_string(lp) + " exceeds tolerance; 0 is not semisimple");

    Matrix basis(d, d);
    basis << K, R;
    Eigen::JacobiSVD<Matrix> bsvd(basis);
    out.transversality = bsvd.singularValues()(d - 1);
    if (out.transversality * opt.max_condition < 1.0)
        throw IllConditioned("kernel/range splitting is ill-conditioned");

    if (out.gap < opt.gap_min)
        throw NoGap("spectral gap " + std::to_string(out.gap) + " below gap_min");

    out.L_inv = (L + out.P).partialPivLu().solve(Matrix::Identity(d, d)) - out.P;
    return out;
}

/// L^{-1} y restricted to ran L (the kernel component of y is discarded).
inline Vector reduced_inverse_apply(const SpectralSplit& split, const Vector& y) {
    return split.L_inv * y;
}

struct CheckItem {
    std::string name;
    bool passed = false;
    double value = 0.0;  // diagnostic magnitude (violation size or margin)
};

struct HypothesisReport {
    ModelClass model_class = ModelClass::generic;
    bool is_contraction_generator = false;
    bool transversal = false;
    bool semisimple_kernel = false;
    bool gapped = false;
    double gap = 0.0;
    double transversality = 0.0;
    int kernel_dim = 0;
    std::vector<CheckItem> checks;
    std::string split_error;

    bool all_passed() const { return is_contraction_generator && transversal && semisimple_kernel && gapped; }
};

struct CheckOptions {
    double tol = 1e-9;  // relative to ||L||
    unsigned long long seed = 12345;
    int samples = 24;
    SplitOptions split{};
};

namespace detail {

/// Choi matrix sum_{ij} E_ij (x) S(E_ij) of a superoperator on column-stacked
/// d x d matrices.
inline Matrix choi(const Matrix& super) {
    const auto d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(super.rows()))));
    Matrix c = Matrix::Zero(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            Matrix e = Matrix::Zero(d, d);
            e(i, j) = 1.0;
            const Matrix img = unvec(super * vec(e));
            c.block(i * d, j * d, d, d) = img;
        }
    return c;
}

}  // namespace detail

/// Class-specific structural certificate that L generates a contraction
/// semigroup, plus the kernel/range hypotheses. Never throws on failure;
/// everything is recorded in the report.
inline HypothesisReport check_contraction_generator(const Matrix& L, ModelClass cls, const CheckOptions& opt = {}) {
    HypothesisReport rep;
    rep.model_class = cls;
    const double nrm = std::max(norm2(L), 1e-300);
    const double tol = opt.tol * nrm;
    const Eigen::Index d = L.rows();
    auto add = [&](std::string name, bool ok, double value) {
        rep.checks.push_back({std::move(name), ok, value});
        return ok;
    };

    bool ok = add("square", L.rows() == L.cols(), 0.0);
    ok = add("finite", L.allFinite(), 0.0) && ok;
    if (!ok) return rep;

    Eigen::ComplexEigenSolver<Matrix> ces(L, false);
    const double max_re = ces.eigenvalues().real().maxCoeff();
    ok = add("spectrum_in_left_half_plane", max_re <= tol, max_re) && ok;

    switch (cls) {
        case ModelClass::hamiltonian:
        case ModelClass::adjoint: {
            const double skew = norm2(L + L.adjoint());
            ok = add("skew_hermitian", skew <= tol, skew) && ok;
            break;
        }
        case ModelClass::markov: {
            const double imag = L.imag().cwiseAbs().maxCoeff();
            double min_off = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j)
                    if (i != j) min_off = std::min(min_off, L(i, j).real());
            if (d == 1) min_off = 0.0;
            const double colsum = L.colwise().sum().cwiseAbs().maxCoeff();
            ok = add("real_rates", imag <= tol, imag) && ok;
            ok = add("nonnegative_off_diagonal", min_off >= -tol, min_off) && ok;
            ok = add("column_sums_zero", colsum <= tol, colsum) && ok;
            break;
        }
        case ModelClass::lindblad: {
            const auto n = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(d))));
            if (n * n != d) {
                ok = add("superoperator_shape", false, static_cast<double>(d)) && ok;
                break;
            }
            const Vector id = vec(Matrix::Identity(n, n));
            const double tp = (id.adjoint() * L).norm();
            ok = add("trace_preserving", tp <= tol, tp) && ok;
            // Hermiticity preservation: L(X^*) = L(X)^* on matrix units.
            double herm = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    Matrix e = Matrix::Zero(n, n);
                    e(i, j) = 1.0;
                    const Matrix a = unvec(L * vec(e));
                    const Matrix b = unvec(L * vec(Matrix(e.adjoint())));
                    herm = std::max(herm, (a.adjoint() - b).norm());
                }
            ok = add("hermiticity_preserving", herm <= tol, herm) && ok;
            // Conditional complete positivity: the Choi matrix is positive on
            // the complement of the maximally entangled vector.
            const Matrix c = hermitian_part(detail::choi(L));
            Vector omega = Vector::Zero(d);
            for (Eigen::Index i = 0; i < n; ++i) omega(i * n + i) = 1.0 / std::sqrt(static_cast<double>(n));
            const Matrix proj = Matrix::Identity(d, d) - omega * omega.adjoint();
            const double min_eig = hermitian_eigen(proj * c * proj).values.minCoeff();
            ok = add("conditionally_completely_positive", min_eig >= -tol, min_eig) && ok;
            break;
        }
        case ModelClass::generic: {
            std::mt19937_64 rng(opt.seed);
            std::normal_distribution<double> nd;
            double worst = std::numeric_limits<double>::infinity();
            for (int g = -3; g <= 3; ++g) {
                const double gamma = std::pow(10.0, g) * nrm;
                for (int k = 0; k < opt.samples; ++k) {
                    Vector x(d);
                    for (Eigen::Index i = 0; i < d; ++i) x(i) = cplx(nd(rng), nd(rng));
                    x.normalize();
                    const double lhs = (gamma * x - L * x).norm();
                    worst = std::min(worst, (lhs - gamma) / gamma);
                }
            }
            ok = add("hille_yosida_sampled", worst >= -opt.tol, worst) && ok;
            break;
        }
    }
    rep.is_contraction_generator = ok;

    try {
        const SpectralSplit sp = spectral_split(L, opt.split);
        rep.transversal = true;
        rep.semisimple_kernel = true;
        rep.gapped = true;
        rep.gap = sp.gap;
        rep.transversality = sp.transversality;
        rep.kernel_dim = sp.kernel_dim;
    } catch (const NonSemisimpleKernel& e) {
        rep.split_error = e.what();
    } catch (const IllConditioned& e) {
        rep.semisimple_kernel = true;
        rep.split_error = e.what();
    } catch (const NoGap& e) {
        rep.semisimple_kernel = true;
        rep.transversal = true;
        rep.split_error = e.what();
    }
    return rep;
}

/// Matches clusters at consecutive grid points by maximal projection
/// overlap ||P_i Q_j||_F. Returns perm with next[perm[i]] continuing prev[i];
/// throws NoGap if the assignment is not a bijection.
inline std::vector<int> match_clusters(const std::vector<Matrix>& prev, const std::vector<Matrix>& next) {
    if (prev.size() != next.size()) throw NoGap("cluster count changed along the path");
    const std::size_t n = prev.size();
    std::vector<int> perm(n, -1);
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        int arg = -1;
        for (std::size_t j = 0; j < n; ++j) {
            const double ov = (prev[i] * next[j]).norm();
            if (ov > best) best = ov, arg = static_cast<int>(j);
        }
        if (used[arg]) throw NoGap("eigenprojection continuation is not a bijection (clusters merged)");
        used[arg] = true;
        perm[i] = arg;
    }
    return perm;
}

}  // namespace adiabatic
