#pragma once

// Scripted eps-sweeps: tunneling (unitary and dephasing), fidelity, the
// first-order Bloch expansion, pump transport, decoupling and gap sweeps.

#include "adiabatic/families.hpp"
#include "adiabatic/models.hpp"
#include "adiabatic/propagator.hpp"
#include "adiabatic/quadrature.hpp"
#include "adiabatic/slow_manifold.hpp"


#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

namespace adiabatic {

// ---------------------------------------------------------------------------
// Sweep plumbing

struct LogLogFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double slope_stderr = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    int points = 0;
    double eps_span = 0.0;  // max eps / min eps over the fitted points
    std::vector<bool> used;

    bool spans_decade() const { return eps_span >= 10.0 - 1e-9; }
};

/// Least squares of log(value) against log(eps) over the `max_points`
/// smallest eps whose value lies above `floor`.
inline LogLogFit fit_loglog(const std::vector<double>& eps, const std::vector<double>& values, double floor,
                            int max_points = 4) {
    LogLogFit fit;
    fit.used.assign(eps.size(), false);
    std::vector<std::size_t> idx(eps.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });
    std::vector<double> x, y;
    for (std::size_t i : idx) {
        if (static_cast<int>(x.size()) >= max_points) break;
        if (!(values[i] > floor) || !std::isfinite(values[i]) || !(eps[i] > 0.0)) continue;
        fit.used[i] = true;
        x.push_back(std::log(eps[i]));
        y.push_back(std::log(values[i]));
    }
    fit.points = static_cast<int>(x.size());
    if (fit.points < 2) return fit;
    const double n = fit.points;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        rss += r * r;
    }
    fit.slope_stderr = fit.points > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    fit.eps_span = std::exp(*std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end()));
    return fit;
}

struct SweepResult {
    std::string experiment;
    std::string model;
    std::string schedule;
    NormKind norm = NormKind::euclidean;
    std::vector<double> eps;         // ascending
    std::vector<double> observable;  // one value per eps
    std::map<std::string, std::vector<double>> columns;  // extra per-eps columns
    std::map<std::string, double> scalars;
    double floor = 0.0;
    LogLogFit fit;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results are written by
/// index, so assembly order does not depend on scheduling. The first
/// exception (lowest index) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::vector<double> sorted_eps(std::vector<double> eps) {
    if (eps.empty()) throw std::invalid_argument("eps sweep is empty");
    for (double e : eps)
        if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("eps values must be positive");
    std::sort(eps.begin(), eps.end());
    eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
    return eps;
}

struct SweepOptions {
    PropagatorOptions propagator;
    int jobs = 1;
    int fit_points = 4;
};

// ---------------------------------------------------------------------------
// Fidelity

/// tr sqrt(sqrt(rho) sigma sqrt(rho)); both arguments must be states up to
/// eigenvalues >= -1e-10, which are clamped to 0.
inline double fidelity(const Matrix& rho, const Matrix& sigma) {
    auto sqrt_state = [](const Matrix& m, const char* name) {
        if ((m - m.adjoint()).norm() > 1e-10) throw NotAState(std::string(name) + " is not Hermitian");
        if (std::abs(m.trace() - 1.0) > 1e-10) throw NotAState(std::string(name) + " does not have unit trace");
        const HermitianEigen e = hermitian_eigen(hermitian_part(m));
        if (e.values.minCoeff() < -1e-10) throw NotAState(std::string(name) + " has a negative eigenvalue");
        const RealVector r = e.values.cwiseMax(0.0).cwiseSqrt();
        return Matrix(e.vectors * r.cast<cplx>().asDiagonal() * e.vectors.adjoint());
    };
    const Matrix sr = sqrt_state(rho, "rho");
    sqrt_state(sigma, "sigma");
    const RealVector ev = hermitian_eigen(hermitian_part(sr * sigma * sr)).values;
    double f = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) f += std::sqrt(std::max(ev(i), 0.0));
    return std::clamp(f, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Unitary tunneling

/// T_eps(1) = 1 - |<psi(1), psi_eps(1)>|^2 for the distinguished level of
/// h composed with the schedule, starting in the eigenvector at s = 0.
/// The noise floor is (10 rtol)^2, since T is a squared amplitude.
inline SweepResult tunneling_unitary(const HamiltonianPath& h, const Schedule& sch, std::vector<double> eps_values,
                                     const SweepOptions& opt = {}) {
    const std::vector<double> eps = sorted_eps(std::move(eps_values));
    const HamiltonianPath hs = compose(h, sch);
    const GeneratorPath path = schrodinger_generator(hs);
    const Vector psi0 = hermitian_eigen(hs.H(0.0)).vectors.col(hs.level);
    const Vector psi1 = hermitian_eigen(hs.H(1.0)).vectors.col(hs.level);
    SweepResult res;
    res.experiment = "tunnel-unitary";
    res.schedule = sch.name();
    res.norm = NormKind::euclidean;
    res.eps = eps;
    res.observable.assign(eps.size(), 0.0);
    std::vector<double> norm_drift(eps.size());
    const std::vector<double> grid = {0.0, 1.0};
    parallel_for(eps.size(), opt.jobs, [&](std::size_t i) {
        const Trajectory tr = evolve(path, eps[i], psi0, grid, opt.propagator);
        const Vector& x = tr.final_state();
        res.observable[i] = (x - psi1 * psi1.dot(x)).squaredNorm();
        norm_drift[i] = std::abs(x.norm() - 1.0);
    });
    res.columns["norm_drift"] = norm_drift;
    res.floor = std::pow(10.0 * opt.propagator.rtol, 2);
    res.fit = fit_loglog(res.eps, res.observable, res.floor, opt.fit_points);
    return res;
}

// ---------------------------------------------------------------------------
// Dephasing tunneling

/// alpha_j(s) = tr(P_0 P_j'^2 P_0) (-2 Re lambda_0j) / |lambda_0j|^2, j != 0,
/// with P_j the eigenprojections of H(s) (ascending energies).
inline std::vector<double> tunneling_rates(const LindbladSpec& spec, double s) {
    const DephasingTable t = dephasing_eigenstructure(spec, s);
    const std::vector<Matrix> pd = eigenprojection_derivatives(t, spec.H_dot(s));
    std::vector<double> alpha;
    for (std::size_t j = 1; j < pd.size(); ++j) {
        const cplx l = t.lambda(0, static_cast<Eigen::Index>(j));
        const double tr = (t.projections[0] * pd[j] * pd[j] * t.projections[0]).trace().real();
        alpha.push_back(tr * (-2.0 * l.real()) / std::norm(l));
    }
    return alpha;
}

inline double total_rate(const LindbladSpec& spec, double s) {
    const std::vector<double> a = tunneling_rates(spec, s);
    return std::accumulate(a.begin(), a.end(), 0.0);
}

/// int_a^b sum_j alpha_j(s) ds.
inline double integrated_rate(const LindbladSpec& spec, double a = 0.0, double b = 1.0, int panels = 64) {
    if (b <= a) return 0.0;
    auto f = [&spec](double s) { return total_rate(spec, s); };
    return composite_gauss(f, a, b, panels);
}

struct DephasingTunnelResult {
    SweepResult sweep;        // observable T_eps(1); columns predicted, ratio
    double rate_integral = 0; // int_0^1 sum_j alpha_j
    double min_alpha = 0;     // over a uniform grid of 201 points
    std::vector<double> max_fidelity_increase;  // per eps: largest rise of tr(rho P_0) between grid points
};

inline DephasingTunnelResult tunneling_dephasing(const LindbladSpec& raw, const Schedule& sch,
                                                 std::vector<double> eps_values, const SweepOptions& opt = {},
                                                 int monitor_points = 101) {
    const std::vector<double> eps = sorted_eps(std::move(eps_values));
    const LindbladSpec spec = compose(raw, sch);
    const GeneratorPath path = lindblad_generator(spec);
    DephasingTunnelResult out;
    out.rate_integral = integrated_rate(spec);
    out.min_alpha = std::numeric_limits<double>::infinity();
    for (double s : uniform_grid(0.0, 1.0, 200))
        for (double a : tunneling_rates(spec, s)) out.min_alpha = std::min(out.min_alpha, a);

    const std::vector<double> grid = uniform_grid(0.0, 1.0, monitor_points - 1);
    std::vector<Matrix> p0;
    for (double s : grid) p0.push_back(dephasing_eigenstructure(spec, s).projections[0]);
    const Vector rho0 = vec(p0.front());

    SweepResult& res = out.sweep;
    res.experiment = "tunnel-dephasing";
    res.schedule = sch.name();
    res.norm = NormKind::trace;
    res.eps = eps;
    res.observable.assign(eps.size(), 0.0);
    std::vector<double> predicted(eps.size()), ratio(eps.size()), trace_drift(eps.size());
    out.max_fidelity_increase.assign(eps.size(), 0.0);
    parallel_for(eps.size(), opt.jobs, [&](std::size_t i) {
        const Trajectory tr = evolve(path, eps[i], rho0, grid, opt.propagator);
        double prev = 1.0, rise = 0.0, drift = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Matrix rho = unvec(tr.x_values[k]);
            const double f = (rho * p0[k]).trace().real();
            rise = std::max(rise, f - prev);
            prev = f;
            drift = std::max(drift, std::abs(rho.trace() - 1.0));
        }
        res.observable[i] = 1.0 - prev;
        predicted[i] = eps[i] * out.rate_integral;
        ratio[i] = res.observable[i] / predicted[i];
        trace_drift[i] = drift;
        out.max_fidelity_increase[i] = rise;
    });
    res.columns["predicted"] = predicted;
    res.columns["ratio"] = ratio;
    res.columns["trace_drift"] = trace_drift;
    res.columns["max_fidelity_increase"] = out.max_fidelity_increase;
    res.scalars["rate_integral"] = out.rate_integral;
    res.scalars["min_alpha"] = out.min_alpha;
    res.floor = 10.0 * opt.propagator.rtol;
    res.fit = fit_loglog(res.eps, res.observable, res.floor, opt.fit_points);
    return out;
}

// ---------------------------------------------------------------------------
// First-order Bloch expansion

struct BlochTerms {
    Vec3 friction;  // gamma b_hat' / (|b| (1 + gamma^2))
    Vec3 geometric; // b_hat x b_hat' / (|b| (1 + gamma^2))
    Vec3 tunnel;    // b int_0^s alpha / |b|
};

/// Bloch-vector tunneling rate alpha = gamma / (1 + gamma^2) |b_hat'|^2 / |b|.
inline double bloch_rate(const BlochSpec& spec, double s) {
    const Vec3 b = spec.b(s);
    const double g = spec.gamma(s);
    return g / (1.0 + g * g) * unit_derivative(b, spec.b_dot(s)).squaredNorm() / b.norm();
}

inline BlochTerms bloch_first_order_terms(const BlochSpec& spec, double s, double alpha_integral) {
    const Vec3 b = spec.b(s);
    const double nb = b.norm();
    const double g = spec.gamma(s);
    const Vec3 bh = b / nb;
    const Vec3 bhd = unit_derivative(b, spec.b_dot(s));
    BlochTerms t;
    t.friction = g * bhd / (nb * (1.0 + g * g));
    t.geometric = bh.cross(bhd) / (nb * (1.0 + g * g));
    t.tunnel = b * alpha_integral / nb;
    return t;
}

struct BlochSample {
    double eps = 0.0;
    double s = 0.0;
    Vec3 n;  // oracle Bloch vector
    BlochTerms terms;
    double residual = 0.0;  // |n - (-b_hat + eps (sum of terms))|
};

struct BlochResult {
    SweepResult sweep;  // observable sup_s residual
    std::vector<BlochSample> samples;
};

/// Compares the oracle Bloch trajectory from n(0) = -b_hat(0) with the
/// first-order expansion. `raw` is composed with the schedule first.
inline BlochResult bloch_first_order_check(const BlochSpec& raw, const Schedule& sch, std::vector<double> eps_values,
                                           const SweepOptions& opt = {}, int points = 101) {
    const std::vector<double> eps = sorted_eps(std::move(eps_values));
    const BlochSpec spec = compose(raw, sch);
    const GeneratorPath path = lindblad_generator(to_lindblad(spec));
    const std::vector<double> grid = uniform_grid(0.0, 1.0, points - 1);

    std::vector<double> alpha_int(grid.size(), 0.0);
    auto rate = [&spec](double s) { return bloch_rate(spec, s); };
    for (std::size_t k = 1; k < grid.size(); ++k)
        alpha_int[k] = alpha_int[k - 1] + composite_gauss(rate, grid[k - 1], grid[k], 2);
    std::vector<BlochTerms> terms;
    for (std::size_t k = 0; k < grid.size(); ++k) terms.push_back(bloch_first_order_terms(spec, grid[k], alpha_int[k]));

    const Vector rho0 = vec(bloch_state(-unit(spec.b(0.0))));
    BlochResult out;
    out.samples.resize(eps.size() * grid.size());
    SweepResult& res = out.sweep;
    res.experiment = "bloch";
    res.schedule = sch.name();
    res.norm = NormKind::euclidean;
    res.eps = eps;
    res.observable.assign(eps.size(), 0.0);
    parallel_for(eps.size(), opt.jobs, [&](std::size_t i) {
        const Trajectory tr = evolve(path, eps[i], rho0, grid, opt.propagator);
        double sup = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            BlochSample& smp = out.samples[i * grid.size() + k];
            smp.eps = eps[i];
            smp.s = grid[k];
            smp.n = bloch_map(unvec(tr.x_values[k]));
            smp.terms = terms[k];
            const Vec3 approx =
                -unit(spec.b(grid[k])) + eps[i] * (terms[k].friction + terms[k].geometric + terms[k].tunnel);
            smp.residual = (smp.n - approx).norm();
            sup = std::max(sup, smp.residual);
        }
        res.observable[i] = sup;
    });
    res.scalars["alpha_integral"] = alpha_int.back();
    res.floor = 10.0 * opt.propagator.rtol;
    res.fit = fit_loglog(res.eps, res.observable, res.floor, opt.fit_points);
    return out;
}

// ---------------------------------------------------------------------------
// Pump transport

/// Leading-order transport across the link j -> i:
///   int_0^1 sum_k (M_ij M^+_jk - M_ji M^+_ik) pi_k' ds.
inline double pump_geometric(const MarkovSpec& spec, int i, int j, int panels = 64) {
    if (!spec.detailed_balance()) throw NoDetailedBalance("pump transport needs detailed-balance coordinates");
    auto f = [&](double s) {
        const RealMatrix m = spec.M(s);
        const RealMatrix mp = flux_pseudo_inverse(m);
        const RealVector pd = spec.pi_dot(s);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < spec.dim; ++k) acc += (m(i, j) * mp(j, k) - m(j, i) * mp(i, k)) * pd(k);
        return acc;
    };
    return composite_gauss(f, 0.0, 1.0, panels);
}

struct PumpTransport {
    double eps = 0.0;
    double simulated = 0.0;  // (1/eps) int_0^1 J_ij(p(s)) ds
    double geometric = 0.0;
    double simulated_reverse = 0.0;  // same for the link i -> j
};

/// Integrates p together with q' = J_ij(p) / eps from p(0) = pi(0).
inline PumpTransport pump_transport(const MarkovSpec& spec, double eps, int i, int j,
                                    const PropagatorOptions& opt = {}) {
    if (i == j || i < 0 || j < 0 || i >= spec.dim || j >= spec.dim)
        throw std::invalid_argument("pump_transport: invalid link");
    const MarkovGenerator g0 = markov_generator(spec, 0.0);
    const Eigen::Index d = spec.dim;
    GeneratorPath aug;
    aug.dim = d + 2;
    aug.model_class = ModelClass::generic;
    aug.generator = [&spec, d, i, j](double s) -> Matrix {
        const RealMatrix l = detail::markov_rates_at(spec, s);
        Matrix a = Matrix::Zero(d + 2, d + 2);
        a.topLeftCorner(d, d) = l.cast<cplx>();
        a(d, j) += l(i, j);
        a(d, i) -= l(j, i);
        a(d + 1, i) += l(j, i);
        a(d + 1, j) -= l(i, j);
        return a;
    };
    Vector x0 = Vector::Zero(d + 2);
    x0.head(d) = g0.pi.cast<cplx>();
    const std::vector<double> grid = {0.0, 1.0};
    const Trajectory tr = evolve(aug, eps, x0, grid, opt);
    PumpTransport out;
    out.eps = eps;
    // eps p' = L p and eps q' = J(p) give q(1) = int J / eps = T_ij.
    out.simulated = tr.final_state()(d).real();
    out.simulated_reverse = tr.final_state()(d + 1).real();
    out.geometric = pump_geometric(spec, i, j);
    return out;
}

struct PumpSweep {
    SweepResult sweep;  // observable |T_sim - T_geom|
    std::vector<PumpTransport> points;
    double geometric = 0.0;
};

inline PumpSweep pump_sweep(const MarkovSpec& raw, const Schedule& sch, std::vector<double> eps_values, int i, int j,
                            const SweepOptions& opt = {}) {
    const std::vector<double> eps = sorted_eps(std::move(eps_values));
    const MarkovSpec spec = compose(raw, sch);
    PumpSweep out;
    out.points.resize(eps.size());
    out.geometric = pump_geometric(spec, i, j);
    parallel_for(eps.size(), opt.jobs, [&](std::size_t k) { out.points[k] = pump_transport(spec, eps[k], i, j, opt.propagator); });
    SweepResult& res = out.sweep;
    res.experiment = "pump";
    res.schedule = sch.name();
    res.norm = NormKind::l1;
    res.eps = eps;
    std::vector<double> sim, rev;
    for (const auto& p : out.points) {
        res.observable.push_back(std::abs(p.simulated - p.geometric));
        sim.push_back(p.simulated);
        rev.push_back(p.simulated_reverse);
    }
    res.columns["T_sim"] = sim;
    res.columns["T_sim_reverse"] = rev;
    res.columns["T_geom"] = std::vector<double>(eps.size(), out.geometric);
    res.scalars["T_geom"] = out.geometric;
    res.floor = 10.0 * opt.propagator.rtol;
    res.fit = fit_loglog(res.eps, res.observable, res.floor, opt.fit_points);
    return out;
}

// ---------------------------------------------------------------------------
// Expansion order and decoupling sweeps

/// ||x_oracle(1) - evaluate(eps, 1)|| with x(0) on the truncated slow manifold.
inline SweepResult expansion_order_sweep(const GeneratorPath& path, int order, const std::vector<Vector>& a_init,
                                         std::vector<double> eps_values, const SweepOptions& opt = {},
                                         const ExpansionOptions& ex_opt = {}) {
    const std::vector<double> eps = sorted_eps(std::move(eps_values));
    const Expansion ex = expand(path, order, a_init, ex_opt);
    SweepResult res;
    res.experiment = "expand";
    res.norm = path.norm();
    res.eps = eps;
    res.observable.assign(eps.size(), 0.0);
    const std::vector<double> grid = {0.0, 1.0};
    parallel_for(eps.size(), opt.jobs, [&](std::size_t i) {
        const Trajectory tr = evolve(path, eps[i], slow_manifold_initial(ex, eps[i]), grid, opt.propagator);
        res.observable[i] = vector_norm(tr.final_state() - evaluate(ex, eps[i], 1.0), res.norm);
    });
    res.scalars["order"] = order;
    res.scalars["recursion_residual"] = recursion_residual(ex);
    res.scalars["confinement_defect"] = confinement_defect(ex);
    res.floor = 10.0 * opt.propagator.rtol;
    res.fit = fit_loglog(res.eps, res.observable, res.floor, opt.fit_points);
    return res;
}

inline SweepResult decoupling_sweep(const GeneratorPath& path, const Vector& x0, std::vector<double> eps_values,
                                    const SweepOptions& opt = {}, int grid_nodes = 64) {
    const std::vector<double> eps = sorted_eps(std::move(eps_values));
    SweepResult res;
    res.experiment = "decouple";
    res.norm = path.norm();
    res.eps = eps;
    res.observable.assign(eps.size(), 0.0);
    parallel_for(eps.size(), opt.jobs, [&](std::size_t i) {
        res.observable[i] = decoupling_error(path, eps[i], x0, grid_nodes, opt.propagator).sup;
    });
    res.floor = 10.0 * opt.propagator.rtol;
    res.fit = fit_loglog(res.eps, res.observable, res.floor, opt.fit_points);
    return res;
}

// ---------------------------------------------------------------------------
// Shrinking gap

struct GapSweep {
    std::vector<double> gaps;    // spectral gap of L(0) per family member
    std::vector<double> scales;  // field magnitudes, as given
    std::vector<double> errors;  // decoupling error at fixed eps
    double eps = 0.0;
    bool monotone = false;       // error increases as the gap shrinks
    LogLogFit fit;               // error against gap (slope near -1 when gap >> eps)
};

/// Qubit dephasing family with field magnitude g * |b|: decoupling error at
/// fixed eps as the gap shrinks. A vanishing magnitude is rejected by NoGap.
inline GapSweep gap_shrink_sweep(QubitField field, double gamma, std::vector<double> magnitudes, double eps,
                                 const Schedule& sch, const Vector& x0, const SweepOptions& opt = {},
                                 int grid_nodes = 64) {
    std::sort(magnitudes.begin(), magnitudes.end(), std::greater<>());
    GapSweep out;
    out.eps = eps;
    out.scales = magnitudes;
    out.gaps.assign(magnitudes.size(), 0.0);
    out.errors.assign(magnitudes.size(), 0.0);
    for (double g : magnitudes)
        if (!(g > 0.0)) throw NoGap("gap sweep: field magnitude must be positive");
    parallel_for(magnitudes.size(), opt.jobs, [&](std::size_t k) {
        QubitField f = field;
        f.magnitude = field.magnitude * magnitudes[k];
        f.fixed_field = field.fixed_field * magnitudes[k];
        const GeneratorPath path = lindblad_generator(to_lindblad(compose(qubit_bloch(f, gamma), sch)));
        out.gaps[k] = spectral_split(path.at(0.0)).gap;
        out.errors[k] = decoupling_error(path, eps, x0, grid_nodes, opt.propagator).sup;
    });
    out.monotone = true;
    for (std::size_t k = 1; k < out.errors.size(); ++k)
        if (!(out.errors[k] > out.errors[k - 1])) out.monotone = false;
    std::vector<double> gap_vals, errs;
    for (std::size_t k = 0; k < out.gaps.size(); ++k)
        if (out.gaps[k] > 3.0 * eps) gap_vals.push_back(out.gaps[k]), errs.push_back(out.errors[k]);
    out.fit = fit_loglog(gap_vals, errs, 0.0, static_cast<int>(gap_vals.size()));
    return out;
}

}  // namespace adiabatic
