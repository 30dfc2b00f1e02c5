#pragma once

// Model zoo: Schroedinger, adjoint-action, Lindblad (general and dephasing),
// Bloch qubit and Markov generators, plus reparametrization schedules.

#include "adiabatic/chebyshev.hpp"
#include "adiabatic/errors.hpp"
#include "adiabatic/operator_core.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adiabatic {

// ---------------------------------------------------------------------------
// Schedules

/// Monotone reparametrization theta: [0,1] -> [0,1] with two derivatives.
/// `flat` uses the normalized bump integral
///   theta(s) = int_0^s phi / int_0^1 phi,  phi(u) = exp(-1 / (u (1 - u))),
/// whose derivatives of every order vanish at both endpoints.
class Schedule {
public:
    enum class Kind { linear, flat };

    static Schedule linear() { return Schedule(Kind::linear); }
    static Schedule flat() { return Schedule(Kind::flat); }

    Kind kind() const { return kind_; }
    bool flat_endpoints() const { return kind_ == Kind::flat; }
    const char* name() const { return kind_ == Kind::flat ? "flat" : "linear"; }

    double theta(double s) const {
        if (kind_ == Kind::linear) return s;
        if (s <= 0.0) return 0.0;
        if (s >= 1.0) return 1.0;
        const BumpTable& t = table();
        if (s > 0.5) return 1.0 - t.primitive(1.0 - s) / t.total;
        return t.primitive(s) / t.total;
    }

    double theta_dot(double s) const {
        if (kind_ == Kind::linear) return 1.0;
        return bump(s) / table().total;
    }

    double theta_ddot(double s) const {
        if (kind_ == Kind::linear) return 0.0;
        if (s <= 0.0 || s >= 1.0) return 0.0;
        const double u = s * (1.0 - s);
        return bump(s) * (1.0 - 2.0 * s) / (u * u) / table().total;
    }

private:
    explicit Schedule(Kind k) : kind_(k) {}

    static double bump(double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return std::exp(-1.0 / (u * (1.0 - u)));
    }

    /// Primitive of the bump on [0, 1/2], tabulated on uniform panels; the
    /// remainder inside a panel uses a fixed 15-point Gauss-Legendre rule.
    struct BumpTable {
        static constexpr int panels = 2048;
        std::vector<double> cumulative;  // int_0^{k h} bump, k = 0..panels
        double h = 0.5 / panels;
        double total = 0.0;              // int_0^1 bump

        BumpTable() {
            cumulative.assign(panels + 1, 0.0);
            for (int k = 0; k < panels; ++k)
                cumulative[k + 1] = cumulative[k] + piece(k * h, (k + 1) * h);
            total = 2.0 * cumulative[panels];
        }

        static double piece(double a, double b) {
            return boost::math::quadrature::gauss<double, 15>::integrate(bump, a, b);
        }

        double primitive(double s) const {
            const int k = std::min(panels - 1, static_cast<int>(s / h));
            return cumulative[k] + piece(k * h, s);
        }
    };

    static const BumpTable& table() {
        static const BumpTable t;
        return t;
    }

    Kind kind_;
};

// ---------------------------------------------------------------------------
// Hamiltonian families

struct HamiltonianPath {
    Eigen::Index dim = 0;
    std::function<Matrix(double)> H;
    std::function<Matrix(double)> H_dot;
    int level = 0;  // distinguished eigenvalue, ascending order (0 = ground state)
};

inline HamiltonianPath compose(const HamiltonianPath& h, const Schedule& sch) {
    HamiltonianPath out = h;
    out.H = [h, sch](double s) { return h.H(sch.theta(s)); };
    out.H_dot = [h, sch](double s) { return Matrix(h.H_dot(sch.theta(s)) * sch.theta_dot(s)); };
    return out;
}

/// Eigenvector of the distinguished level along `s_values`, continued with a
/// smooth phase: each vector has real positive overlap with its predecessor.
inline std::vector<Vector> eigenvector_continuation(const HamiltonianPath& h, const std::vector<double>& s_values) {
    std::vector<Vector> out;
    for (double s : s_values) {
        const HermitianEigen eig = hermitian_eigen(h.H(s));
        Vector v = eig.vectors.col(h.level);
        if (!out.empty()) {
            const cplx ov = out.back().dot(v);
            if (std::abs(ov) < 0.5) throw NoGap("eigenvector continuation lost track of the level");
            v *= std::conj(ov) / std::abs(ov);
        }
        out.push_back(v);
    }
    return out;
}

namespace detail {

inline void require_simple_level(const HamiltonianPath& h, double s, double gap_min) {
    const RealVector e = hermitian_eigen(h.H(s)).values;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        if (i == h.level) continue;
        if (std::abs(e(i) - e(h.level)) < gap_min)
            throw NoGap("distinguished eigenvalue collides with another level at s=" + std::to_string(s));
    }
}

}  // namespace detail

/// L(s) = -i (H(s) - e(s)) for the distinguished simple eigenvalue e(s).
/// The gap is verified on a Chebyshev grid of `check_nodes` points.
inline GeneratorPath schrodinger_generator(const HamiltonianPath& h, int check_nodes = 65, double gap_min = 1e-6) {
    const ChebyshevGrid grid(check_nodes);
    for (int k = 0; k < grid.size(); ++k) detail::require_simple_level(h, grid.node(k), gap_min);
    GeneratorPath p;
    p.dim = h.dim;
    p.model_class = ModelClass::hamiltonian;
    p.generator = [h](double s) -> Matrix {
        const Matrix hs = h.H(s);
        const double e = hermitian_eigen(hs).values(h.level);
        return -I * (hs - e * Matrix::Identity(h.dim, h.dim));
    };
    p.derivative = [h](double s) -> Matrix {
        const HermitianEigen eig = hermitian_eigen(h.H(s));
        const Matrix hd = h.H_dot(s);
        const Vector psi = eig.vectors.col(h.level);
        const double edot = psi.dot(hd * psi).real();
        return -I * (hd - edot * Matrix::Identity(h.dim, h.dim));
    };
    return p;
}

/// Superoperator of rho -> -i [H, rho] on column-stacked matrices.
inline Matrix commutator_superoperator(const Matrix& h) {
    const Matrix id = Matrix::Identity(h.rows(), h.cols());
    return -I * (kron(id, h) - kron(h.transpose(), id));
}

inline GeneratorPath adjoint_generator(const HamiltonianPath& h) {
    GeneratorPath p;
    p.dim = h.dim * h.dim;
    p.model_class = ModelClass::adjoint;
    p.generator = [h](double s) { return commutator_superoperator(h.H(s)); };
    p.derivative = [h](double s) { return commutator_superoperator(h.H_dot(s)); };
    return p;
}

// ---------------------------------------------------------------------------
// Lindblad generators

struct JumpOperator {
    std::function<Matrix(double)> op;
    std::function<Matrix(double)> op_dot;
};

struct LindbladSpec {
    Eigen::Index dim = 0;
    std::function<Matrix(double)> H;
    std::function<Matrix(double)> H_dot;
    std::vector<JumpOperator> jumps;
    bool dephasing = false;  // every jump operator is a function of H
};

inline LindbladSpec compose(const LindbladSpec& spec, const Schedule& sch) {
    LindbladSpec out = spec;
    out.H = [spec, sch](double s) { return spec.H(sch.theta(s)); };
    out.H_dot = [spec, sch](double s) { return Matrix(spec.H_dot(sch.theta(s)) * sch.theta_dot(s)); };
    out.jumps.clear();
    for (const auto& j : spec.jumps)
        out.jumps.push_back({[j, sch](double s) { return j.op(sch.theta(s)); },
                             [j, sch](double s) { return Matrix(j.op_dot(sch.theta(s)) * sch.theta_dot(s)); }});
    return out;
}

/// Superoperator of the dissipator rho -> G rho G^* - {G^* G, rho} / 2.
inline Matrix dissipator_superoperator(const Matrix& g) {
    const Matrix id = Matrix::Identity(g.rows(), g.cols());
    const Matrix gg = g.adjoint() * g;
    return kron(g.conjugate(), g) - 0.5 * (kron(id, gg) + kron(gg.transpose(), id));
}

inline Matrix dissipator_superoperator_derivative(const Matrix& g, const Matrix& gd) {
    const Matrix id = Matrix::Identity(g.rows(), g.cols());
    const Matrix ggd = gd.adjoint() * g + g.adjoint() * gd;
    return kron(gd.conjugate(), g) + kron(g.conjugate(), gd) - 0.5 * (kron(id, ggd) + kron(ggd.transpose(), id));
}

/// L rho = -i[H, rho] + 1/2 sum_a ([G_a rho, G_a^*] + [G_a, rho G_a^*]).
inline Matrix lindblad_superoperator(const LindbladSpec& spec, double s) {
    Matrix l = commutator_superoperator(spec.H(s));
    for (const auto& j : spec.jumps) l += dissipator_superoperator(j.op(s));
    return l;
}

inline Matrix lindblad_superoperator_derivative(const LindbladSpec& spec, double s) {
    Matrix l = commutator_superoperator(spec.H_dot(s));
    for (const auto& j : spec.jumps) l += dissipator_superoperator_derivative(j.op(s), j.op_dot(s));
    return l;
}

inline GeneratorPath lindblad_generator(const LindbladSpec& spec) {
    GeneratorPath p;
    p.dim = spec.dim * spec.dim;
    p.model_class = ModelClass::lindblad;
    p.generator = [spec](double s) { return lindblad_superoperator(spec, s); };
    p.derivative = [spec](double s) { return lindblad_superoperator_derivative(spec, s); };
    return p;
}

/// Eigenvalues lambda_ij of a dephasing Lindbladian on the eigenbasis
/// E_ij = |psi_i><psi_j| of H (ascending energies).
struct DephasingTable {
    RealVector energies;
    Matrix eigenvectors;
    std::vector<Matrix> projections;
    Matrix lambda;  // lambda(i, j)
};

inline DephasingTable dephasing_eigenstructure(const LindbladSpec& spec, double s, double tol = 1e-9) {
    const Matrix h = spec.H(s);
    const HermitianEigen eig = hermitian_eigen(h);
    const Eigen::Index d = h.rows();
    const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i + 1 < d; ++i)
        if (eig.values(i + 1) - eig.values(i) < tol * scale)
            throw DegenerateHamiltonian("H(s) has a degenerate eigenvalue at s=" + std::to_string(s));
    DephasingTable t;
    t.energies = eig.values;
    t.eigenvectors = eig.vectors;
    for (Eigen::Index i = 0; i < d; ++i) t.projections.push_back(eig.vectors.col(i) * eig.vectors.col(i).adjoint());
    // f_a(e_i) = <psi_i | G_a | psi_i>.
    std::vector<Vector> f;
    for (const auto& j : spec.jumps) {
        const Matrix g = j.op(s);
        if (spec.dephasing && commutator(g, h).norm() > 1e-8 * std::max(1.0, g.norm() * h.norm()))
            throw std::invalid_argument("dephasing_eigenstructure: jump operator does not commute with H");
        f.push_back((eig.vectors.adjoint() * g * eig.vectors).diagonal());
    }
    t.lambda = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index k = 0; k < d; ++k) {
            cplx l = -I * (eig.values(i) - eig.values(k));
            for (const auto& fa : f) l += fa(i) * std::conj(fa(k)) - 0.5 * (std::norm(fa(i)) + std::norm(fa(k)));
            t.lambda(i, k) = l;
        }
    return t;
}

/// Derivatives of the eigenprojections of H: P_j' = sum_{k != j}
/// (P_k H' P_j + P_j H' P_k) / (e_j - e_k).
inline std::vector<Matrix> eigenprojection_derivatives(const DephasingTable& t, const Matrix& h_dot) {
    std::vector<Matrix> out;
    const auto d = static_cast<Eigen::Index>(t.projections.size());
    for (Eigen::Index j = 0; j < d; ++j) {
        Matrix pd = Matrix::Zero(h_dot.rows(), h_dot.cols());
        for (Eigen::Index k = 0; k < d; ++k) {
            if (k == j) continue;
            pd += (t.projections[k] * h_dot * t.projections[j] + t.projections[j] * h_dot * t.projections[k]) /
                  (t.energies(j) - t.energies(k));
        }
        out.push_back(pd);
    }
    return out;
}

struct DephasingKernelReport {
    int kernel_dim = 0;
    int commutant_dim = 0;
    double subspace_distance = 0.0;  // ||P_ker - P_commutant||_2
    bool equal = false;
};

/// Compares ker L with the commutant ker [H, .] of the Hamiltonian.
inline DephasingKernelReport check_dephasing_kernel(const LindbladSpec& spec, double s, double tol = 1e-9) {
    const Matrix l = lindblad_superoperator(spec, s);
    const Matrix c = commutator_superoperator(spec.H(s));
    const Matrix kl = null_space(l, tol * std::max(1.0, norm2(l)));
    const Matrix kc = null_space(c, tol * std::max(1.0, norm2(c)));
    DephasingKernelReport r;
    r.kernel_dim = static_cast<int>(kl.cols());
    r.commutant_dim = static_cast<int>(kc.cols());
    r.subspace_distance = norm2(span_projector(kl) - span_projector(kc));
    r.equal = r.kernel_dim == r.commutant_dim && r.subspace_distance <= 1e-9;
    return r;
}

// ---------------------------------------------------------------------------
// Bloch qubit with dephasing

struct BlochSpec {
    std::function<Vec3(double)> b;
    std::function<Vec3(double)> b_dot;
    std::function<double(double)> gamma = [](double) { return 0.0; };
    std::function<double(double)> gamma_dot = [](double) { return 0.0; };
};

inline BlochSpec compose(const BlochSpec& spec, const Schedule& sch) {
    BlochSpec out;
    out.b = [spec, sch](double s) { return spec.b(sch.theta(s)); };
    out.b_dot = [spec, sch](double s) { return Vec3(spec.b_dot(sch.theta(s)) * sch.theta_dot(s)); };
    out.gamma = [spec, sch](double s) { return spec.gamma(sch.theta(s)); };
    out.gamma_dot = [spec, sch](double s) { return spec.gamma_dot(sch.theta(s)) * sch.theta_dot(s); };
    return out;
}

inline Vec3 unit(const Vec3& v) { return v / v.norm(); }

/// d/ds of b / |b|.
inline Vec3 unit_derivative(const Vec3& b, const Vec3& b_dot) {
    const double n = b.norm();
    const Vec3 bh = b / n;
    return (b_dot - bh * bh.dot(b_dot)) / n;
}

/// Qubit dephasing Lindbladian L rho = -i[H, rho] + gamma |b|^{-1} [[H, rho], H]
/// with 2H = b . sigma, written with the single jump operator
/// G = sqrt(2 gamma / |b|) H.
inline LindbladSpec to_lindblad(const BlochSpec& spec) {
    LindbladSpec out;
    out.dim = 2;
    out.dephasing = true;
    out.H = [spec](double s) -> Matrix {
        const Vec3 b = spec.b(s);
        if (b.norm() <= 0.0) throw NoGap("Bloch field vanishes");
        return 0.5 * dot_sigma(b);
    };
    out.H_dot = [spec](double s) -> Matrix { return 0.5 * dot_sigma(spec.b_dot(s)); };
    auto coeff = [spec](double s) { return std::sqrt(2.0 * spec.gamma(s) / spec.b(s).norm()); };
    auto coeff_dot = [spec](double s) {
        const Vec3 b = spec.b(s);
        const double nb = b.norm();
        const double g = spec.gamma(s);
        const double inner = 2.0 * (spec.gamma_dot(s) / nb - g * b.dot(spec.b_dot(s)) / (nb * nb * nb));
        const double c = std::sqrt(2.0 * g / nb);
        return c > 0.0 ? inner / (2.0 * c) : 0.0;
    };
    out.jumps.push_back({[spec, coeff](double s) -> Matrix { return coeff(s) * 0.5 * dot_sigma(spec.b(s)); },
                         [spec, coeff, coeff_dot](double s) -> Matrix {
                             return coeff_dot(s) * 0.5 * dot_sigma(spec.b(s)) +
                                    coeff(s) * 0.5 * dot_sigma(spec.b_dot(s));
                         }});
    return out;
}

inline Mat3 cross_matrix(const Vec3& v) {
    Mat3 m;
    m << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
    return m;
}

/// n -> b x n + gamma b_hat x (b x n).
inline Mat3 bloch_generator(const BlochSpec& spec, double s) {
    const Vec3 b = spec.b(s);
    if (b.norm() <= 0.0) throw NoGap("Bloch field vanishes");
    const Mat3 bx = cross_matrix(b);
    return bx + spec.gamma(s) * cross_matrix(unit(b)) * bx;
}

/// n_k = tr(rho sigma_k).
inline Vec3 bloch_map(const Matrix& rho) {
    const auto& s = pauli();
    return {(rho * s[0]).trace().real(), (rho * s[1]).trace().real(), (rho * s[2]).trace().real()};
}

/// rho = (1 + n . sigma) / 2.
inline Matrix bloch_state(const Vec3& n) {
    return 0.5 * (Matrix::Identity(2, 2) + dot_sigma(n));
}

// ---------------------------------------------------------------------------
// Markov generators

/// Either explicit rates (off-diagonal L_ij = rate j -> i; the diagonal is
/// recomputed) or detailed-balance coordinates (M symmetric, pi > 0) with
/// L_ij = M_ij / pi_j.
struct MarkovSpec {
    Eigen::Index dim = 0;
    std::function<RealMatrix(double)> rates;
    std::function<RealMatrix(double)> rates_dot;
    std::function<RealMatrix(double)> M;
    std::function<RealMatrix(double)> M_dot;
    std::function<RealVector(double)> pi;
    std::function<RealVector(double)> pi_dot;

    bool detailed_balance() const { return static_cast<bool>(M); }
};

inline MarkovSpec compose(const MarkovSpec& spec, const Schedule& sch) {
    MarkovSpec out = spec;
    auto wrap = [&sch](const std::function<RealMatrix(double)>& f) -> std::function<RealMatrix(double)> {
        if (!f) return {};
        return [f, sch](double s) { return f(sch.theta(s)); };
    };
    auto wrap_dot = [&sch](const std::function<RealMatrix(double)>& f) -> std::function<RealMatrix(double)> {
        if (!f) return {};
        return [f, sch](double s) { return RealMatrix(f(sch.theta(s)) * sch.theta_dot(s)); };
    };
    out.rates = wrap(spec.rates);
    out.rates_dot = wrap_dot(spec.rates_dot);
    out.M = wrap(spec.M);
    out.M_dot = wrap_dot(spec.M_dot);
    if (spec.pi) {
        out.pi = [f = spec.pi, sch](double s) { return f(sch.theta(s)); };
        out.pi_dot = [f = spec.pi_dot, sch](double s) { return RealVector(f(sch.theta(s)) * sch.theta_dot(s)); };
    }
    return out;
}

namespace detail {

inline RealMatrix fix_diagonal(RealMatrix l) {
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i)
            if (i != j) off += l(i, j);
        l(j, j) = -off;
    }
    return l;
}

inline RealMatrix markov_rates_at(const MarkovSpec& spec, double s) {
    if (!spec.detailed_balance()) return fix_diagonal(spec.rates(s));
    const RealMatrix m = spec.M(s);
    const RealVector p = spec.pi(s);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw NoDetailedBalance("M(s) is not symmetric");
    if (p.minCoeff() <= 0.0) throw Reducible("stationary distribution is not strictly positive");
    RealMatrix l(spec.dim, spec.dim);
    for (Eigen::Index i = 0; i < spec.dim; ++i)
        for (Eigen::Index j = 0; j < spec.dim; ++j) l(i, j) = i == j ? 0.0 : m(i, j) / p(j);
    return fix_diagonal(l);
}

inline RealMatrix markov_rates_dot_at(const MarkovSpec& spec, double s) {
    if (!spec.detailed_balance()) return fix_diagonal(spec.rates_dot(s));
    const RealMatrix m = spec.M(s), md = spec.M_dot(s);
    const RealVector p = spec.pi(s), pd = spec.pi_dot(s);
    RealMatrix l(spec.dim, spec.dim);
    for (Eigen::Index i = 0; i < spec.dim; ++i)
        for (Eigen::Index j = 0; j < spec.dim; ++j)
            l(i, j) = i == j ? 0.0 : md(i, j) / p(j) - m(i, j) * pd(j) / (p(j) * p(j));
    return fix_diagonal(l);
}

}  // namespace detail

struct MarkovGenerator {
    RealMatrix L;
    RealVector pi;
};

/// Rate matrix at s and its unique stationary distribution.
inline MarkovGenerator markov_generator(const MarkovSpec& spec, double s) {
    MarkovGenerator g;
    g.L = detail::markov_rates_at(spec, s);
    if (spec.detailed_balance()) {
        g.pi = spec.pi(s);
        return g;
    }
    const Matrix lc = g.L.cast<cplx>();
    const Matrix k = null_space(lc, 1e-9 * std::max(1.0, norm2(lc)));
    if (k.cols() != 1) throw Reducible("stationary distribution is not unique");
    RealVector p = k.col(0).real();
    if (std::abs(k.col(0).imag().sum()) > std::abs(k.col(0).real().sum())) p = k.col(0).imag();
    p /= p.sum();
    if (p.minCoeff() < -1e-12) throw Reducible("stationary vector has negative entries");
    g.pi = p;
    return g;
}

inline GeneratorPath markov_path(const MarkovSpec& spec) {
    GeneratorPath p;
    p.dim = spec.dim;
    p.model_class = ModelClass::markov;
    p.generator = [spec](double s) -> Matrix { return detail::markov_rates_at(spec, s).cast<cplx>(); };
    p.derivative = [spec](double s) -> Matrix { return detail::markov_rates_dot_at(spec, s).cast<cplx>(); };
    return p;
}

/// J_ij(p) = L_ij p_j - L_ji p_i.
inline RealMatrix probability_currents(const RealMatrix& l, const RealVector& p) {
    RealMatrix j(l.rows(), l.cols());
    for (Eigen::Index a = 0; a < l.rows(); ++a)
        for (Eigen::Index b = 0; b < l.cols(); ++b) j(a, b) = l(a, b) * p(b) - l(b, a) * p(a);
    return j;
}

/// M_ij = L_ij pi_j; throws NoDetailedBalance unless symmetric.
inline RealMatrix detailed_balance_matrix(const RealMatrix& l, const RealVector& pi, double tol = 1e-12) {
    const RealMatrix m = l * pi.asDiagonal();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw NoDetailedBalance("L does not satisfy detailed balance");
    return m;
}

/// Inverse of M on ran M = {sum p = 0}, extended by zero on ker M = span{1}.
inline RealMatrix flux_pseudo_inverse(const RealMatrix& m) {
    const auto d = m.rows();
    const RealMatrix j = RealMatrix::Constant(d, d, 1.0 / static_cast<double>(d));
    return (m - j).inverse() + j;
}

}  // namespace adiabatic
