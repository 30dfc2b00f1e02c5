#pragma once

// Parallel transport T(s, s') along a family of projections P(s):
//   d/ds T(s, s') = [P'(s), P(s)] T(s, s'),   T(s', s') = 1.
// Provided as an ODE solution, as the ordered product of
// P(s_{i+1}) P(s_i) + Q(s_{i+1}) Q(s_i) factors, and in dual form.

#include "adiabatic/chebyshev.hpp"
#include "adiabatic/ode.hpp"
#include "adiabatic/operator_core.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <utility>
#include <vector>

namespace adiabatic {

/// Projection family sampled on a Chebyshev grid, with P'(s) either supplied
/// or obtained by spectral differentiation. Off-grid values are barycentric
/// interpolants.
class ProjectionPath {
public:
    ProjectionPath(std::shared_ptr<const ChebyshevGrid> grid, std::vector<Matrix> p_values,
                   std::vector<Matrix> p_dot_values = {})
        : grid_(std::move(grid)), p_(std::move(p_values)), pdot_(std::move(p_dot_values)) {
        if (static_cast<int>(p_.size()) != grid_->size())
            throw std::invalid_argument("ProjectionPath: one projection per node required");
        dim_ = p_.front().rows();
        p_flat_ = flatten(p_);
        if (pdot_.empty()) {
            pdot_flat_ = grid_->differentiate(p_flat_);
            pdot_.reserve(p_.size());
            for (int k = 0; k < grid_->size(); ++k)
                pdot_.push_back(Eigen::Map<const Matrix>(pdot_flat_.col(k).data(), dim_, dim_));
        } else {
            pdot_flat_ = flatten(pdot_);
        }
        validate();
    }

    /// Samples P(s) and P'(s) from callables.
    template <typename PFn, typename PDotFn>
    static ProjectionPath from_functions(std::shared_ptr<const ChebyshevGrid> grid, PFn&& p, PDotFn&& p_dot) {
        std::vector<Matrix> pv, dv;
        for (int k = 0; k < grid->size(); ++k) {
            pv.push_back(p(grid->node(k)));
            dv.push_back(p_dot(grid->node(k)));
        }
        return ProjectionPath(std::move(grid), std::move(pv), std::move(dv));
    }

    /// Kernel projections of a generator path. P' comes from the
    /// perturbation formula P' = -P L' S - S L' P with S the reduced inverse.
    static ProjectionPath from_generator(const GeneratorPath& path, std::shared_ptr<const ChebyshevGrid> grid,
                                         const SplitOptions& opt = {}) {
        std::vector<Matrix> pv, dv;
        for (int k = 0; k < grid->size(); ++k) {
            const double s = grid->node(k);
            const SpectralSplit sp = spectral_split(path.at(s), opt);
            const Matrix ld = path.derivative_at(s);
            pv.push_back(sp.P);
            dv.push_back(-sp.P * ld * sp.L_inv - sp.L_inv * ld * sp.P);
        }
        return ProjectionPath(std::move(grid), std::move(pv), std::move(dv));
    }

    Eigen::Index dim() const { return dim_; }
    int rank() const { return rank_; }
    const ChebyshevGrid& grid() const { return *grid_; }
    std::shared_ptr<const ChebyshevGrid> grid_ptr() const { return grid_; }
    const std::vector<Matrix>& p_values() const { return p_; }
    const std::vector<Matrix>& p_dot_values() const { return pdot_; }

    Matrix P(double s) const { return reshape(grid_->interpolate(p_flat_, s)); }
    Matrix P_dot(double s) const { return reshape(grid_->interpolate(pdot_flat_, s)); }
    Matrix Q(double s) const { return Matrix::Identity(dim_, dim_) - P(s); }

    /// [P'(s), P(s)], the transport generator.
    Matrix transport_generator(double s) const {
        const RealVector w = grid_->interpolation_weights(s);
        const Matrix p = reshape(p_flat_ * w.cast<cplx>());
        const Matrix pd = reshape(pdot_flat_ * w.cast<cplx>());
        return pd * p - p * pd;
    }

    double max_idempotency_defect() const {
        double m = 0.0;
        for (const auto& p : p_) m = std::max(m, (p * p - p).norm());
        return m;
    }

private:
    Matrix flatten(const std::vector<Matrix>& ms) const {
        Matrix out(dim_ * dim_, static_cast<Eigen::Index>(ms.size()));
        for (std::size_t k = 0; k < ms.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = vec(ms[k]);
        return out;
    }

    Matrix reshape(const Vector& v) const { return Eigen::Map<const Matrix>(v.data(), dim_, dim_); }

    void validate() {
        const double defect = max_idempotency_defect();
        if (defect > 1e-8)
            throw std::invalid_argument("ProjectionPath: samples are not projections (defect " +
                                        std::to_string(defect) + ")");
        rank_ = static_cast<int>(std::lround(p_.front().trace().real()));
        for (const auto& p : p_)
            if (std::lround(p.trace().real()) != rank_)
                throw NoGap("ProjectionPath: rank changes along the path");
    }

    std::shared_ptr<const ChebyshevGrid> grid_;
    std::vector<Matrix> p_;
    std::vector<Matrix> pdot_;
    Matrix p_flat_;
    Matrix pdot_flat_;
    Eigen::Index dim_ = 0;
    int rank_ = 0;
};

struct TransportOperator {
    double s_from = 0.0;
    double s_to = 0.0;
    Matrix T;
};

inline OdeOptions default_transport_ode() {
    OdeOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    return o;
}

/// T(s, s_from) for every s in `outputs` (ordered from s_from).
inline std::vector<Matrix> transport_many(const ProjectionPath& path, double s_from, std::span<const double> outputs,
                                          const OdeOptions& opt = default_transport_ode()) {
    const Eigen::Index d = path.dim();
    if (outputs.empty()) return {};
    const double s_to = outputs.back();
    OdeRhs rhs = [&path, d](double s, const Vector& y) -> Vector {
        const Matrix t = Eigen::Map<const Matrix>(y.data(), d, d);
        const Matrix dt = path.transport_generator(s) * t;
        return vec(dt);
    };
    DormandPrince54 solver(opt);
    const OdeResult res = solver.integrate(rhs, s_from, vec(Matrix::Identity(d, d)), s_to, outputs);
    std::vector<Matrix> out;
    out.reserve(res.values.size());
    for (const auto& v : res.values) out.push_back(Eigen::Map<const Matrix>(v.data(), d, d));
    return out;
}

/// Parallel transport by adaptive integration of the defining ODE; the
/// local error is controlled by `ode_tol` (relative and absolute).
inline TransportOperator transport_ode(const ProjectionPath& path, double s_from, double s_to, double ode_tol = 1e-10) {
    if (!(ode_tol > 0.0)) throw std::invalid_argument("transport_ode: ode_tol must be positive");
    OdeOptions opt;
    opt.rtol = ode_tol;
    opt.atol = ode_tol * 1e-2;
    const double out[1] = {s_to};
    return {s_from, s_to, transport_many(path, s_from, out, opt).front()};
}

/// N-factor ordered product prod_i (P(s_{i+1}) P(s_i) + Q(s_{i+1}) Q(s_i))
/// on a uniform partition of [s_from, s_to].
inline TransportOperator transport_discrete(const ProjectionPath& path, double s_from, double s_to, long n) {
    if (n < 1) throw std::invalid_argument("transport_discrete: N >= 1 required");
    const Eigen::Index d = path.dim();
    const Matrix id = Matrix::Identity(d, d);
    Matrix t = id;
    Matrix p_prev = path.P(s_from);
    for (long i = 1; i <= n; ++i) {
        const double s = s_from + (s_to - s_from) * static_cast<double>(i) / static_cast<double>(n);
        const Matrix p = path.P(s);
        t = (p * p_prev + (id - p) * (id - p_prev)) * t;
        p_prev = p;
    }
    return {s_from, s_to, t};
}

/// The two ordered products prod P(s_i) and prod Q(s_i) on the same
/// partition used by transport_discrete.
inline std::pair<Matrix, Matrix> transport_discrete_bundles(const ProjectionPath& path, double s_from, double s_to,
                                                            long n) {
    const Eigen::Index d = path.dim();
    const Matrix id = Matrix::Identity(d, d);
    Matrix pp = path.P(s_from);
    Matrix qq = id - pp;
    for (long i = 1; i <= n; ++i) {
        const double s = s_from + (s_to - s_from) * static_cast<double>(i) / static_cast<double>(n);
        const Matrix p = path.P(s);
        pp = p * pp;
        qq = (id - p) * qq;
    }
    return {pp, qq};
}

/// Dual transport T^*(s, s') = (T(s', s))^*, from an already computed
/// reversed transport T(s', s).
inline TransportOperator dual_transport(const TransportOperator& reversed) {
    return {reversed.s_to, reversed.s_from, reversed.T.adjoint()};
}

inline TransportOperator dual_transport(const ProjectionPath& path, double s, double s_prime, double ode_tol = 1e-10) {
    return dual_transport(transport_ode(path, s, s_prime, ode_tol));
}

/// sup over grid pairs of ||T(s_k, s_l)||_2, finite but not necessarily <= 1.
inline double transport_bound(const ProjectionPath& path) {
    const auto& nodes = path.grid().nodes();
    std::vector<double> out(nodes.data(), nodes.data() + nodes.size());
    const std::vector<Matrix> fwd = transport_many(path, 0.0, out);
    double sup = 0.0;
    for (const auto& a : fwd) {
        for (const auto& b : fwd) sup = std::max(sup, norm2(a * b.inverse()));
    }
    return sup;
}

struct RigidTransportReport {
    double max_trace_error = 0.0;
    double min_eigenvalue = 0.0;
    double max_isometry_error = 0.0;
    double max_vertex_error = 0.0;
    double max_vertex_distance_error = 0.0;
    double max_barycentric_error = 0.0;

    bool passed(double tol = 1e-8) const {
        return max_trace_error <= tol && min_eigenvalue >= -tol && max_isometry_error <= tol &&
               max_vertex_error <= tol && max_vertex_distance_error <= tol && max_barycentric_error <= tol;
    }
};

/// Checks that transport along a state-preserving projection family acts as
/// a rigid motion of the stationary states. `path` is the superoperator
/// projection family on column-stacked d x d matrices, `vertices(s)` returns
/// the extreme points P_i(s) of the stationary simplex, and `states` are
/// sample density matrices (projected by P(0) before transport).
template <typename VertexFn>
RigidTransportReport check_rigid_transport(const ProjectionPath& path, VertexFn&& vertices,
                                           const std::vector<Matrix>& states) {
    RigidTransportReport rep;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    const auto& nodes = path.grid().nodes();
    std::vector<double> out(nodes.data(), nodes.data() + nodes.size());
    const std::vector<Matrix> ts = transport_many(path, 0.0, out);
    const Matrix p0 = path.P(0.0);
    const std::vector<Matrix> v0 = vertices(0.0);

    std::vector<Matrix> rho0;
    for (const auto& r : states) rho0.push_back(unvec(p0 * vec(r)));

    auto bary = [](const std::vector<Matrix>& verts, const Matrix& rho) {
        std::vector<cplx> l;
        for (const auto& v : verts) l.push_back((v * rho).trace());
        return l;
    };

    for (std::size_t k = 0; k < out.size(); ++k) {
        const Matrix& t = ts[k];
        const std::vector<Matrix> vs = vertices(out[k]);
        std::vector<Matrix> moved;
        for (std::size_t i = 0; i < v0.size(); ++i) {
            moved.push_back(unvec(t * vec(v0[i])));
            rep.max_vertex_error = std::max(rep.max_vertex_error, trace_norm(moved.back() - vs[i]));
        }
        for (std::size_t i = 0; i < v0.size(); ++i)
            for (std::size_t j = i + 1; j < v0.size(); ++j)
                rep.max_vertex_distance_error =
                    std::max(rep.max_vertex_distance_error,
                             std::abs(trace_norm(moved[i] - moved[j]) - trace_norm(v0[i] - v0[j])));
        std::vector<Matrix> tau;
        for (std::size_t i = 0; i < rho0.size(); ++i) {
            tau.push_back(unvec(t * vec(rho0[i])));
            rep.max_trace_error = std::max(rep.max_trace_error, std::abs(tau[i].trace() - rho0[i].trace()));
            rep.min_eigenvalue = std::min(rep.min_eigenvalue, hermitian_eigen(tau[i]).values.minCoeff());
            const auto l0 = bary(v0, rho0[i]);
            const auto ls = bary(vs, tau[i]);
            for (std::size_t j = 0; j < l0.size(); ++j)
                rep.max_barycentric_error = std::max(rep.max_barycentric_error, std::abs(l0[j] - ls[j]));
        }
        for (std::size_t i = 0; i < rho0.size(); ++i)
            for (std::size_t j = i + 1; j < rho0.size(); ++j)
                rep.max_isometry_error = std::max(
                    rep.max_isometry_error, std::abs(trace_norm(tau[i] - tau[j]) - trace_norm(rho0[i] - rho0[j])));
    }
    return rep;
}

/// Random density matrices (Ginibre construction) for sampling checks.
inline std::vector<Matrix> random_states(Eigen::Index d, int count, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<Matrix> out;
    for (int c = 0; c < count; ++c) {
        Matrix g(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(nd(rng), nd(rng));
        Matrix rho = g * g.adjoint();
        rho /= rho.trace();
        out.push_back(hermitian_part(rho));
    }
    return out;
}

}  // namespace adiabatic
