#pragma once

// Dense complex linear algebra shared by every module.
//
// Superoperators act on column-stacked matrices: vec(X)[i + d*j] = X(i, j),
// so that vec(A X B) = (B^T kron A) vec(X). This is Eigen's native
// column-major storage order and is used everywhere in the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace adiabatic {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

/// Operator 2-norm (largest singular value).
inline double norm2(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector vec(const Matrix& x) {
    return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix unvec(const Vector& v) {
    const auto d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(v.size()))));
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

/// Superoperator of X -> A X B.
inline Matrix sandwich(const Matrix& a, const Matrix& b) {
    return kron(b.transpose(), a);
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// Hermitian part, used to remove rounding-level anti-Hermitian noise.
inline Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// Trace norm sum_i sigma_i.
inline double trace_norm(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues().sum();
}

/// Hilbert-Schmidt inner product tr(A^* B).
inline cplx hs_inner(const Matrix& a, const Matrix& b) { return (a.adjoint() * b).trace(); }

/// Orthonormal basis of the numerical null space of `a`: right singular
/// vectors whose singular values are <= tol.
inline Matrix null_space(const Matrix& a, double tol) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    return svd.matrixV().rightCols(a.cols() - rank);
}

/// Orthogonal projector onto the column span of an orthonormal basis.
inline Matrix span_projector(const Matrix& basis) { return basis * basis.adjoint(); }

/// Norms used by the different physical settings.
enum class NormKind { euclidean, trace, l1 };

inline double vector_norm(const Vector& x, NormKind kind) {
    switch (kind) {
        case NormKind::trace: return trace_norm(unvec(x));
        case NormKind::l1: return x.cwiseAbs().sum();
        case NormKind::euclidean: break;
    }
    return x.norm();
}

inline const char* to_string(NormKind kind) {
    switch (kind) {
        case NormKind::trace: return "trace";
        case NormKind::l1: return "l1";
        case NormKind::euclidean: break;
    }
    return "euclidean";
}

/// Pauli matrices sigma_x, sigma_y, sigma_z.
inline const std::vector<Matrix>& pauli() {
    static const std::vector<Matrix> sigma = [] {
        Matrix x(2, 2), y(2, 2), z(2, 2);
        x << 0, 1, 1, 0;
        y << 0, -I, I, 0;
        z << 1, 0, 0, -1;
        return std::vector<Matrix>{x, y, z};
    }();
    return sigma;
}

/// b . sigma
inline Matrix dot_sigma(const Vec3& b) {
    const auto& s = pauli();
    return b(0) * s[0] + b(1) * s[1] + b(2) * s[2];
}

/// Hermitian eigendecomposition with ascending eigenvalues.
struct HermitianEigen {
    RealVector values;
    Matrix vectors;
};

inline HermitianEigen hermitian_eigen(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
    return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace adiabatic
