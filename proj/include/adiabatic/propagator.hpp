#pragma once

// Reference integrator for eps x'(s) = L(s) x(s): the brute-force oracle the
// adiabatic expansions are checked against.

#include "adiabatic/ode.hpp"
#include "adiabatic/operator_core.hpp"

#include <span>
#include <vector>

namespace adiabatic {

struct PropagatorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// Switch to the L-stable implicit scheme once the fastest decay rate
    /// max(-Re lambda(L(s0))) / eps exceeds this value.
    double stiffness_threshold = 1e3;
    bool allow_implicit = true;
    bool force_implicit = false;
    long max_steps = 20'000'000;
};

struct Trajectory {
    double eps = 0.0;
    std::vector<double> s_nodes;
    std::vector<Vector> x_values;
    std::vector<double> norm_track;
    NormKind norm = NormKind::euclidean;
    OdeStats stats;
    bool implicit = false;

    const Vector& final_state() const { return x_values.back(); }
};

namespace detail {

inline bool choose_implicit(const Matrix& l0, double eps, const PropagatorOptions& opt) {
    if (opt.force_implicit) return true;
    if (!opt.allow_implicit) return false;
    Eigen::ComplexEigenSolver<Matrix> ces(l0, false);
    const double rate = -ces.eigenvalues().real().minCoeff();
    return rate / eps >= opt.stiffness_threshold;
}

inline OdeResult integrate_linear(const LinearCoefficient& a, double t0, const Vector& y0, double t1,
                                  std::span<const double> outputs, const OdeOptions& ode, bool implicit) {
    if (implicit) return RadauIIA5(ode).integrate(a, t0, y0, t1, outputs);
    OdeRhs rhs = [&a](double t, const Vector& y) -> Vector { return a(t) * y; };
    return DormandPrince54(ode).integrate(rhs, t0, y0, t1, outputs);
}

inline Trajectory make_trajectory(double eps, std::span<const double> grid, OdeResult&& res, NormKind norm,
                                  bool implicit) {
    Trajectory tr;
    tr.eps = eps;
    tr.s_nodes.assign(grid.begin(), grid.end());
    tr.x_values = std::move(res.values);
    tr.norm = norm;
    tr.stats = res.stats;
    tr.implicit = implicit;
    for (const auto& x : tr.x_values) tr.norm_track.push_back(vector_norm(x, norm));
    return tr;
}

}  // namespace detail

/// Solves eps x' = L(s) x from out_grid.front() (where x = x0) to
/// out_grid.back(), reporting x at every grid point (ascending).
inline Trajectory evolve(const GeneratorPath& path, double eps, const Vector& x0, std::span<const double> out_grid,
                         const PropagatorOptions& opt = {}) {
    if (!(eps > 0.0)) throw std::invalid_argument("evolve: eps must be positive");
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw std::invalid_argument("evolve: tolerances must be positive");
    if (out_grid.empty()) throw std::invalid_argument("evolve: empty output grid");
    const double s0 = out_grid.front();
    const double s1 = out_grid.back();
    const Matrix l0 = path.at(s0);
    const bool implicit = detail::choose_implicit(l0, eps, opt);
    OdeOptions ode;
    ode.rtol = opt.rtol;
    ode.atol = opt.atol;
    ode.max_steps = opt.max_steps;
    const double ln = norm2(l0);
    if (ln > 0.0) ode.initial_step = std::min(std::abs(s1 - s0), eps / (10.0 * ln));
    LinearCoefficient a = [&path, eps](double s) -> Matrix { return path.at(s) / eps; };
    OdeResult res = detail::integrate_linear(a, s0, x0, s1, out_grid, ode, implicit);
    return detail::make_trajectory(eps, out_grid, std::move(res), path.norm(), implicit);
}

/// Dual propagation in the initial variable: phi(s') = U_eps(s_end, s')^* phi_end,
/// i.e. eps d/ds' phi = -L(s')^* phi, integrated backward from
/// out_grid.front() (= s_end) along the descending grid. The pairing
/// <phi(s'), U_eps(s', s0) x> is then independent of s'.
inline Trajectory evolve_backward_adjoint(const GeneratorPath& path, double eps, const Vector& phi_end,
                                          std::span<const double> out_grid, const PropagatorOptions& opt = {}) {
    if (!(eps > 0.0)) throw std::invalid_argument("evolve_backward_adjoint: eps must be positive");
    if (out_grid.empty()) throw std::invalid_argument("evolve_backward_adjoint: empty output grid");
    const double s0 = out_grid.front();
    const double s1 = out_grid.back();
    const Matrix l0 = path.at(s0);
    const bool implicit = detail::choose_implicit(l0.adjoint(), eps, opt);
    OdeOptions ode;
    ode.rtol = opt.rtol;
    ode.atol = opt.atol;
    ode.max_steps = opt.max_steps;
    const double ln = norm2(l0);
    if (ln > 0.0) ode.initial_step = std::min(std::abs(s1 - s0), eps / (10.0 * ln));
    LinearCoefficient a = [&path, eps](double s) -> Matrix { return -path.at(s).adjoint() / eps; };
    OdeResult res = detail::integrate_linear(a, s0, phi_end, s1, out_grid, ode, implicit);
    return detail::make_trajectory(eps, out_grid, std::move(res), NormKind::euclidean, implicit);
}

/// Uniform grid of n + 1 points on [a, b].
inline std::vector<double> uniform_grid(double a, double b, int n) {
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / n;
    g.back() = b;
    return g;
}

}  // namespace adiabatic
