#pragma once

// Order-N slow-manifold expansion x = sum eps^n (a_n + b_n) + eps^{N+1} r_N
// for eps x' = L(s) x, with a_n in ker L(s) and b_n in ran L(s):
//   b_0 = 0,
//   a_n(s) = T(s,0) a_n(0) + int_0^s T(s,s') P'(s') b_n(s') ds',
//   b_{n+1} = L^{-1} (P' a_n + Q b_n').
// All coefficients live on one Chebyshev grid.

#include "adiabatic/chebyshev.hpp"
#include "adiabatic/errors.hpp"
#include "adiabatic/operator_core.hpp"
#include "adiabatic/propagator.hpp"
#include "adiabatic/transport.hpp"

#include <algorithm>
#include <memory>
#include <vector>

namespace adiabatic {

/// The recursion differentiates b_n, so integration error in T(s) is
/// amplified by roughly M^2 per order; keep it near round-off.
inline OdeOptions expansion_transport_ode() {
    OdeOptions o;
    o.rtol = 1e-13;
    o.atol = 1e-15;
    return o;
}

struct ExpansionOptions {
    int grid_nodes = 64;
    int max_order = 4;
    SplitOptions split;
    OdeOptions transport = expansion_transport_ode();
    /// SmoothnessLoss is raised when the trailing Chebyshev coefficients of
    /// any coefficient path exceed this fraction of the leading ones. The
    /// leading size is taken as at least zero_floor times the initial datum,
    /// so paths that vanish identically are not judged on round-off.
    double smoothness_tol = 1e-6;
    double zero_floor = 1e-4;
};

/// Pointwise data of the generator on the expansion grid.
struct NodeData {
    std::vector<Matrix> L;
    std::vector<Matrix> L_inv;
    std::vector<Matrix> P;
    std::vector<Matrix> P_dot;
    std::vector<Matrix> T;      // T(s_k, 0)
    std::vector<Matrix> T_inv;  // T(0, s_k)
};

struct Expansion {
    int order = 0;
    Eigen::Index dim = 0;
    std::shared_ptr<const ChebyshevGrid> grid;
    std::vector<Matrix> a;  // a[n]: dim x M, n = 0..N
    std::vector<Matrix> b;  // b[n]: dim x M, n = 0..N+1
    std::vector<Vector> a_init;
    NodeData nodes;
    double max_tail_ratio = 0.0;

    Vector a_at(int n, double s) const { return grid->interpolate(a[n], s); }
    Vector b_at(int n, double s) const { return grid->interpolate(b[n], s); }
    Vector b_dot_at(int n, double s) const { return grid->interpolate(grid->differentiate(b[n]), s); }
};

namespace detail {

inline NodeData node_data(const GeneratorPath& path, const ChebyshevGrid& grid, const SplitOptions& split) {
    NodeData nd;
    for (int k = 0; k < grid.size(); ++k) {
        const double s = grid.node(k);
        const Matrix l = path.at(s);
        const SpectralSplit sp = spectral_split(l, split);
        const Matrix ld = path.derivative_at(s);
        nd.L.push_back(l);
        nd.L_inv.push_back(sp.L_inv);
        nd.P.push_back(sp.P);
        nd.P_dot.push_back(-sp.P * ld * sp.L_inv - sp.L_inv * ld * sp.P);
    }
    return nd;
}

inline void attach_transport(NodeData& nd, const std::shared_ptr<const ChebyshevGrid>& grid, const OdeOptions& ode) {
    const ProjectionPath pp(grid, nd.P, nd.P_dot);
    std::vector<double> s(grid->nodes().data(), grid->nodes().data() + grid->size());
    nd.T = transport_many(pp, 0.0, s, ode);
    nd.T_inv.clear();
    for (const auto& t : nd.T) nd.T_inv.push_back(t.inverse());
}

}  // namespace detail

/// Builds a_0..a_N and b_0..b_{N+1}. `a_init[n]` must lie in ker L(0);
/// missing entries default to zero.
inline Expansion expand(const GeneratorPath& path, int order, std::vector<Vector> a_init,
                        const ExpansionOptions& opt = {}) {
    if (order < 0 || order > opt.max_order)
        throw std::invalid_argument("expand: order must lie in [0, " + std::to_string(opt.max_order) + "]");
    Expansion ex;
    ex.order = order;
    ex.dim = path.dim;
    ex.grid = chebyshev_grid(opt.grid_nodes);
    const ChebyshevGrid& g = *ex.grid;
    const int m = g.size();
    const Eigen::Index d = path.dim;

    ex.nodes = detail::node_data(path, g, opt.split);
    detail::attach_transport(ex.nodes, ex.grid, opt.transport);
    const NodeData& nd = ex.nodes;

    a_init.resize(static_cast<std::size_t>(order) + 1, Vector::Zero(d));
    for (auto& a0 : a_init) {
        if (a0.size() != d) throw std::invalid_argument("expand: initial datum has wrong dimension");
        const double leak = (a0 - nd.P[0] * a0).norm();
        if (leak > 1e-9 * std::max(1.0, a0.norm())) throw std::invalid_argument("expand: a_n(0) is not in ker L(0)");
    }
    ex.a_init = a_init;

    double datum = 0.0;
    for (const auto& a0 : a_init) datum = std::max(datum, a0.cwiseAbs().maxCoeff());
    auto check_smooth = [&](const Matrix& samples, const char* what, double floor) {
        const double tr = g.tail_ratio(samples, floor);
        ex.max_tail_ratio = std::max(ex.max_tail_ratio, tr);
        if (tr > opt.smoothness_tol)
            throw SmoothnessLoss(std::string("expand: ") + what + " is not resolved on the grid (tail ratio " +
                                 std::to_string(tr) + ")");
    };
    {
        Matrix pf(d * d, m);
        for (int k = 0; k < m; ++k) pf.col(k) = vec(nd.P[k]);
        check_smooth(pf, "P(s)", 0.0);
    }

    ex.b.push_back(Matrix::Zero(d, m));
    for (int n = 0; n <= order; ++n) {
        const Matrix& bn = ex.b[n];
        Matrix forcing(d, m);
        for (int k = 0; k < m; ++k) forcing.col(k) = nd.T_inv[k] * (nd.P_dot[k] * bn.col(k));
        const Matrix duhamel = g.integrate_cumulative(forcing);
        Matrix an(d, m);
        for (int k = 0; k < m; ++k) an.col(k) = nd.T[k] * (ex.a_init[n] + duhamel.col(k));
        ex.a.push_back(an);

        const Matrix bdot = g.differentiate(bn);
        Matrix bnext(d, m);
        for (int k = 0; k < m; ++k) {
            const Matrix q = Matrix::Identity(d, d) - nd.P[k];
            bnext.col(k) = nd.L_inv[k] * (nd.P_dot[k] * an.col(k) + q * bdot.col(k));
        }
        check_smooth(bnext, "b_n(s)", opt.zero_floor * datum);
        ex.b.push_back(bnext);
    }
    return ex;
}

/// Truncated sum sum_{n<=N} eps^n (a_n(s) + b_n(s)).
inline Vector evaluate(const Expansion& ex, double eps, double s) {
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("evaluate: s outside [0, 1]");
    const RealVector w = ex.grid->interpolation_weights(s);
    const Eigen::VectorXcd wc = w.cast<cplx>();
    Vector x = Vector::Zero(ex.dim);
    double p = 1.0;
    for (int n = 0; n <= ex.order; ++n) {
        x += p * (ex.a[n] * wc + ex.b[n] * wc);
        p *= eps;
    }
    return x;
}

/// Initial point on the truncated slow manifold, plus eps^{N+1} r_init.
inline Vector slow_manifold_initial(const Expansion& ex, double eps, const Vector* r_init = nullptr) {
    Vector x = evaluate(ex, eps, 0.0);
    if (r_init) x += std::pow(eps, ex.order + 1) * (*r_init);
    return x;
}

/// max over nodes and orders of ||P' a_n + Q b_n' - L b_{n+1}||.
inline double recursion_residual(const Expansion& ex) {
    const ChebyshevGrid& g = *ex.grid;
    double worst = 0.0;
    for (int n = 0; n <= ex.order; ++n) {
        const Matrix bdot = g.differentiate(ex.b[n]);
        for (int k = 0; k < g.size(); ++k) {
            const Matrix q = Matrix::Identity(ex.dim, ex.dim) - ex.nodes.P[k];
            const Vector r = ex.nodes.P_dot[k] * ex.a[n].col(k) + q * bdot.col(k) - ex.nodes.L[k] * ex.b[n + 1].col(k);
            worst = std::max(worst, r.norm());
        }
    }
    return worst;
}

/// Largest of ||Q a_n|| and ||P b_n|| over nodes and orders.
inline double confinement_defect(const Expansion& ex) {
    double worst = 0.0;
    for (int k = 0; k < ex.grid->size(); ++k) {
        const Matrix& p = ex.nodes.P[k];
        for (const auto& a : ex.a) worst = std::max(worst, (a.col(k) - p * a.col(k)).norm());
        for (const auto& b : ex.b) worst = std::max(worst, (p * b.col(k)).norm());
    }
    return worst;
}

struct RemainderResult {
    std::vector<double> s_nodes;
    std::vector<Vector> direct;   // (x - truncated sum) / eps^{N+1}
    std::vector<Vector> duhamel;  // integral representation of r_N
    double max_discrepancy = 0.0; // max ||direct - duhamel||
    double sup_norm = 0.0;        // sup_s ||r_N|| (Duhamel form)
    double empirical_constant = 0.0;
};

/// r_N(eps, s) on the expansion grid, both from the oracle trajectory and
/// from r_N = w + b_{N+1} with eps w' = L w - eps b_{N+1}', w(0) = r_N(0) - b_{N+1}(0).
inline RemainderResult remainder(const GeneratorPath& path, const Expansion& ex, double eps, const Vector& r_init,
                                 const PropagatorOptions& opt = {}) {
    const ChebyshevGrid& g = *ex.grid;
    const int m = g.size();
    const Eigen::Index d = ex.dim;
    const int n = ex.order;
    const double scale = std::pow(eps, n + 1);
    std::vector<double> s(g.nodes().data(), g.nodes().data() + m);

    const Vector x0 = slow_manifold_initial(ex, eps, &r_init);
    const Trajectory tr = evolve(path, eps, x0, s, opt);

    RemainderResult res;
    res.s_nodes = s;
    for (int k = 0; k < m; ++k) res.direct.push_back((tr.x_values[k] - evaluate(ex, eps, s[k])) / scale);

    const Matrix bdot = g.differentiate(ex.b[n + 1]);
    LinearCoefficient a = [&](double t) -> Matrix {
        Matrix out = Matrix::Zero(d + 1, d + 1);
        out.topLeftCorner(d, d) = path.at(t) / eps;
        out.topRightCorner(d, 1) = -g.interpolate(bdot, t);
        return out;
    };
    Vector w0(d + 1);
    w0.head(d) = r_init - ex.b[n + 1].col(0);
    w0(d) = 1.0;
    OdeOptions ode;
    ode.rtol = opt.rtol;
    ode.atol = opt.atol;
    ode.max_steps = opt.max_steps;
    const double ln = norm2(path.at(0.0));
    if (ln > 0.0) ode.initial_step = eps / (10.0 * ln);
    const bool implicit = detail::choose_implicit(path.at(0.0), eps, opt);
    const OdeResult wr = detail::integrate_linear(a, 0.0, w0, 1.0, s, ode, implicit);

    double sum_a0 = 0.0;
    for (const auto& a0 : ex.a_init) sum_a0 += vector_norm(a0, path.norm());
    for (int k = 0; k < m; ++k) {
        const Vector r = wr.values[k].head(d) + ex.b[n + 1].col(k);
        res.duhamel.push_back(r);
        res.max_discrepancy = std::max(res.max_discrepancy, (r - res.direct[k]).norm());
        res.sup_norm = std::max(res.sup_norm, vector_norm(r, path.norm()));
    }
    const double excess = std::max(0.0, res.sup_norm - vector_norm(r_init, path.norm()));
    res.empirical_constant = sum_a0 > 0.0 ? excess / sum_a0 : 0.0;
    return res;
}

struct DecouplingResult {
    double eps = 0.0;
    std::vector<double> s_nodes;
    std::vector<double> errors;  // ||P(s) x(s) - T(s,0) P(0) x0|| per node
    double sup = 0.0;
    NormKind norm = NormKind::euclidean;
};

/// sup_s ||P(s) x(s) - T(s,0) P(0) x0|| in the path's declared norm, over the
/// nodes of a Chebyshev grid.
inline DecouplingResult decoupling_error(const GeneratorPath& path, double eps, const Vector& x0, int grid_nodes = 64,
                                         const PropagatorOptions& opt = {}, const SplitOptions& split = {}) {
    const auto grid = chebyshev_grid(grid_nodes);
    NodeData nd = detail::node_data(path, *grid, split);
    detail::attach_transport(nd, grid, default_transport_ode());
    std::vector<double> s(grid->nodes().data(), grid->nodes().data() + grid->size());
    const Trajectory tr = evolve(path, eps, x0, s, opt);
    DecouplingResult res;
    res.eps = eps;
    res.s_nodes = s;
    res.norm = path.norm();
    const Vector slow0 = nd.P[0] * x0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const Vector diff = nd.P[k] * tr.x_values[k] - nd.T[k] * slow0;
        const double e = vector_norm(diff, res.norm);
        res.errors.push_back(e);
        res.sup = std::max(res.sup, e);
    }
    return res;
}

struct InvariantDefect {
    double eps = 0.0;
    std::vector<double> s_nodes;
    std::vector<cplx> defects;  // <phi(s), x(s)> - <phi(0), x0>
    double max_abs = 0.0;
    /// max |defect| / (eps ||phi(s)|| ||x0||)
    double empirical_constant = 0.0;
};

/// Pairing of the solution with the dual-transported section
/// phi(s) = T(0,s)^* phi0, which stays in ker L(s)^*.
inline InvariantDefect adiabatic_invariant_defect(const GeneratorPath& path, const Vector& phi0, double eps,
                                                  const Vector& x0, int grid_nodes = 64,
                                                  const PropagatorOptions& opt = {}, const SplitOptions& split = {}) {
    const auto grid = chebyshev_grid(grid_nodes);
    NodeData nd = detail::node_data(path, *grid, split);
    const Matrix q0 = Matrix::Identity(path.dim, path.dim) - nd.P[0];
    if ((q0.adjoint() * phi0).norm() > 1e-9 * std::max(1.0, phi0.norm()))
        throw std::invalid_argument("adiabatic_invariant_defect: phi0 is not annihilated by Q(0)^*");
    detail::attach_transport(nd, grid, default_transport_ode());
    std::vector<double> s(grid->nodes().data(), grid->nodes().data() + grid->size());
    const Trajectory tr = evolve(path, eps, x0, s, opt);
    InvariantDefect res;
    res.eps = eps;
    res.s_nodes = s;
    const cplx base = phi0.dot(x0);
    const double xn = x0.norm();
    for (std::size_t k = 0; k < s.size(); ++k) {
        const Vector phi = nd.T_inv[k].adjoint() * phi0;
        const cplx dfc = phi.dot(tr.x_values[k]) - base;
        res.defects.push_back(dfc);
        res.max_abs = std::max(res.max_abs, std::abs(dfc));
        const double denom = eps * phi.norm() * xn;
        if (denom > 0.0) res.empirical_constant = std::max(res.empirical_constant, std::abs(dfc) / denom);
    }
    return res;
}

}  // namespace adiabatic
