#pragma once

// Experiment runner behind the adiabatic-lab executable: hypothesis checks,
// experiment dispatch, results.csv and manifest.json.

#include "adiabatic/config.hpp"
#include "adiabatic/experiments.hpp"
#include "adiabatic/io.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>

namespace adiabatic {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int config_invalid = 2;
inline constexpr int hypothesis_failed = 3;
inline constexpr int numerical_failure = 4;
}  // namespace exit_code

struct LabOptions {
    std::string out_dir = ".";
    int jobs = 1;
    std::optional<unsigned long long> seed;  // overrides the config seed
};

struct CheckRow {
    std::string name;
    double s = 0.0;
    bool passed = false;
    double value = 0.0;
};

struct CheckSummary {
    std::vector<CheckRow> rows;
    bool all_passed() const {
        return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.passed; });
    }
    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& r : rows)
            if (!r.passed) out.push_back(r.name + " at s=" + format_double(r.s));
        return out;
    }
};

/// Structural hypotheses of the configured model on a uniform grid of `nodes`
/// points, plus the experiment's own preconditions.
inline CheckSummary hypothesis_checks(const ExperimentConfig& c, unsigned long long seed, int nodes = 11) {
    CheckSummary out;
    auto add = [&](std::string name, double s, bool ok, double value) {
        out.rows.push_back({std::move(name), s, ok, std::isfinite(value) ? value : 0.0});
    };
    GeneratorPath path;
    try {
        path = c.model.generator(c.schedule, c.tol.gap_min);
    } catch (const HypothesisError& e) {
        add("generator", 0.0, false, 0.0);
        return out;
    }
    CheckOptions opt;
    opt.tol = c.tol.tol_kernel;
    opt.seed = seed;
    opt.split.tol_kernel = c.tol.tol_kernel;
    opt.split.gap_min = c.tol.gap_min;
    const ModelClass cls = c.model.model_class();
    for (int k = 0; k < nodes; ++k) {
        const double s = static_cast<double>(k) / (nodes - 1);
        const HypothesisReport rep = check_contraction_generator(path.at(s), cls, opt);
        for (const auto& item : rep.checks) add(item.name, s, item.passed, item.value);
        add("semisimple_kernel", s, rep.semisimple_kernel, rep.kernel_dim);
        add("transversal", s, rep.transversal, rep.transversality);
        add("gapped", s, rep.gapped, rep.gap);
    }
    if (c.model.dynamics == "dephasing") {
        const LindbladSpec spec = compose(c.model.lindblad(), c.schedule);
        for (int k = 0; k < nodes; ++k) {
            const double s = static_cast<double>(k) / (nodes - 1);
            bool ok = true;
            double dist = 0.0;
            try {
                dephasing_eigenstructure(spec, s, c.tol.tol_kernel);
                const DephasingKernelReport r = check_dephasing_kernel(spec, s, c.tol.tol_kernel);
                ok = r.equal;
                dist = r.subspace_distance;
            } catch (const HypothesisError&) {
                ok = false;
            } catch (const std::invalid_argument&) {
                ok = false;
            }
            add("dephasing_kernel_is_commutant", s, ok, dist);
        }
    }
    if (c.model.type == "markov-balanced") {
        const MarkovSpec spec = compose(c.model.markov(), c.schedule);
        for (int k = 0; k < nodes; ++k) {
            const double s = static_cast<double>(k) / (nodes - 1);
            bool ok = true;
            try {
                const MarkovGenerator g = markov_generator(spec, s);
                detailed_balance_matrix(g.L, g.pi);
            } catch (const HypothesisError&) {
                ok = false;
            }
            add("detailed_balance", s, ok, 0.0);
        }
    }
    if (c.schedule.flat_endpoints()) {
        for (double s : {0.0, 1.0}) {
            const double v = norm2(path.derivative_at(s));
            add("flat_endpoint_derivative", s, v <= 1e-10, v);
        }
    }
    if (c.experiment == "pump") {
        const MarkovSpec spec = compose(c.model.markov(), c.schedule);
        const double v = spec.pi_dot(0.0).norm();
        add("stationary_state_at_rest_at_start", 0.0, v <= 1e-10, v);
    }
    if (c.experiment == "bloch") {
        const BlochSpec spec = compose(c.model.bloch(), c.schedule);
        const double v = unit_derivative(spec.b(0.0), spec.b_dot(0.0)).norm();
        add("field_direction_at_rest_at_start", 0.0, v <= 1e-10, v);
    }
    return out;
}

inline ResultsTable check_table(const CheckSummary& sum) {
    ResultsTable t({"experiment", "eps", "s", "check", "passed", "value"});
    for (const auto& r : sum.rows)
        t.add({std::string("check"), std::monostate{}, r.s, r.name, static_cast<long long>(r.passed), r.value});
    return t;
}

namespace detail {

inline json fit_json(const LogLogFit& f, double floor) {
    json j;
    j["slope"] = std::isfinite(f.slope) ? json(f.slope) : json(nullptr);
    j["slope_stderr"] = std::isfinite(f.slope_stderr) ? json(f.slope_stderr) : json(nullptr);
    j["intercept"] = std::isfinite(f.intercept) ? json(f.intercept) : json(nullptr);
    j["points"] = f.points;
    j["eps_span"] = f.eps_span;
    j["spans_decade"] = f.spans_decade();
    j["floor"] = floor;
    return j;
}

inline bool used_in_fit(const LogLogFit& f, std::size_t i) { return i < f.used.size() && f.used[i]; }

/// One row per eps at s = 1 with the observable, the extra columns in
/// alphabetical order and the fit flag.
inline ResultsTable sweep_table(const SweepResult& r, const std::string& observable, double s = 1.0) {
    std::vector<std::string> cols = {"experiment", "eps", "s", observable};
    for (const auto& [name, _] : r.columns) cols.push_back(name);
    cols.push_back("used_in_fit");
    ResultsTable t(cols);
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
        std::vector<Cell> row = {r.experiment, r.eps[i], s, r.observable[i]};
        for (const auto& [_, v] : r.columns) row.emplace_back(v[i]);
        row.emplace_back(static_cast<long long>(used_in_fit(r.fit, i)));
        t.add(std::move(row));
    }
    return t;
}

inline void sweep_manifest(json& m, const SweepResult& r) {
    m["fitted_slope"] = std::isfinite(r.fit.slope) ? json(r.fit.slope) : json(nullptr);
    m["fit"] = fit_json(r.fit, r.floor);
    m["norm"] = r.norm == NormKind::trace ? "trace" : r.norm == NormKind::l1 ? "l1" : "euclidean";
    json sc = json::object();
    for (const auto& [k, v] : r.scalars) sc[k] = v;
    m["scalars"] = sc;
}

inline std::vector<Vector> kernel_initial(const GeneratorPath& path, const Vector& x0, const SplitOptions& split) {
    const SpectralSplit sp = spectral_split(path.at(0.0), split);
    return {Vector(sp.P * x0)};
}

}  // namespace detail

struct RunOutput {
    ResultsTable table{std::vector<std::string>{}};
    json manifest = json::object();
};

/// Runs the configured experiment; hypothesis checks must already have passed.
inline RunOutput run_experiment(const ExperimentConfig& c, int jobs) {
    SweepOptions sw;
    sw.jobs = jobs;
    sw.propagator.rtol = c.tol.rtol;
    sw.propagator.atol = c.tol.atol;
    SplitOptions split;
    split.tol_kernel = c.tol.tol_kernel;
    split.gap_min = c.tol.gap_min;
    RunOutput out;
    json& m = out.manifest;
    const std::string& e = c.experiment;

    if (e == "tunnel-unitary") {
        const SweepResult r = tunneling_unitary(c.model.hamiltonian(), c.schedule, c.eps_values, sw);
        out.table = detail::sweep_table(r, "T");
        detail::sweep_manifest(m, r);
    } else if (e == "tunnel-dephasing") {
        const DephasingTunnelResult r = tunneling_dephasing(c.model.lindblad(), c.schedule, c.eps_values, sw, c.points);
        out.table = detail::sweep_table(r.sweep, "T");
        detail::sweep_manifest(m, r.sweep);
        m["scalars"]["rate_integral"] = r.rate_integral;
        m["scalars"]["min_alpha"] = r.min_alpha;
    } else if (e == "bloch") {
        const BlochResult r = bloch_first_order_check(c.model.bloch(), c.schedule, c.eps_values, sw, c.points);
        ResultsTable t({"experiment", "eps", "s", "n_x", "n_y", "n_z", "n1_friction_x", "n1_friction_y",
                        "n1_friction_z", "n1_geom_x", "n1_geom_y", "n1_geom_z", "n1_tunnel_x", "n1_tunnel_y",
                        "n1_tunnel_z", "residual"});
        for (const BlochSample& smp : r.samples) {
            std::vector<Cell> row = {std::string("bloch"), smp.eps, smp.s};
            for (const Vec3* v : {&smp.n, &smp.terms.friction, &smp.terms.geometric, &smp.terms.tunnel})
                for (int k = 0; k < 3; ++k) row.emplace_back((*v)(k));
            row.emplace_back(smp.residual);
            t.add(std::move(row));
        }
        out.table = std::move(t);
        detail::sweep_manifest(m, r.sweep);
        json sup = json::array();
        for (double v : r.sweep.observable) sup.push_back(v);
        m["sup_residual"] = sup;
    } else if (e == "pump") {
        const PumpSweep r = pump_sweep(c.model.markov(), c.schedule, c.eps_values, c.link[0], c.link[1], sw);
        out.table = detail::sweep_table(r.sweep, "abs_difference");
        detail::sweep_manifest(m, r.sweep);
        m["link"] = {c.link[0], c.link[1]};
    } else if (e == "expand" || e == "decouple" || e == "evolve") {
        const GeneratorPath path = c.model.generator(c.schedule, c.tol.gap_min);
        const SpectralSplit sp0 = spectral_split(path.at(0.0), split);
        const Vector x0 = initial_vector(c, path, sp0.P);
        if (e == "expand") {
            ExpansionOptions ex;
            ex.grid_nodes = c.grid_nodes;
            ex.split = split;
            const SweepResult r =
                expansion_order_sweep(path, c.order, detail::kernel_initial(path, x0, split), c.eps_values, sw, ex);
            out.table = detail::sweep_table(r, "error");
            detail::sweep_manifest(m, r);
        } else if (e == "decouple") {
            const std::vector<double> eps = sorted_eps(c.eps_values);
            std::vector<DecouplingResult> res(eps.size());
            parallel_for(eps.size(), jobs, [&](std::size_t i) {
                res[i] = decoupling_error(path, eps[i], x0, c.grid_nodes, sw.propagator, split);
            });
            SweepResult r;
            r.experiment = "decouple";
            r.norm = path.norm();
            r.eps = eps;
            for (const auto& d : res) r.observable.push_back(d.sup);
            r.floor = 10.0 * c.tol.rtol;
            r.fit = fit_loglog(r.eps, r.observable, r.floor, sw.fit_points);
            ResultsTable t({"experiment", "eps", "s", "error", "is_sup"});
            for (const auto& d : res) {
                // Chebyshev nodes ascend; emit them in that order.
                for (std::size_t k = 0; k < d.s_nodes.size(); ++k)
                    t.add({std::string("decouple"), d.eps, d.s_nodes[k], d.errors[k],
                           static_cast<long long>(d.errors[k] == d.sup)});
            }
            out.table = std::move(t);
            detail::sweep_manifest(m, r);
            json sup = json::array();
            for (double v : r.observable) sup.push_back(v);
            m["sup_error"] = sup;
        } else {
            const std::vector<double> eps = sorted_eps(c.eps_values);
            const std::vector<double> grid = uniform_grid(0.0, 1.0, c.points - 1);
            std::vector<Trajectory> trs(eps.size());
            parallel_for(eps.size(), jobs, [&](std::size_t i) { trs[i] = evolve(path, eps[i], x0, grid, sw.propagator); });
            std::vector<std::string> cols = {"experiment", "eps", "s", "norm"};
            for (Eigen::Index k = 0; k < path.dim; ++k) {
                cols.push_back("x" + std::to_string(k) + "_re");
                cols.push_back("x" + std::to_string(k) + "_im");
            }
            ResultsTable t(cols);
            double max_increase = 0.0;
            for (const Trajectory& tr : trs) {
                for (std::size_t k = 0; k < grid.size(); ++k) {
                    std::vector<Cell> row = {std::string("evolve"), tr.eps, grid[k], tr.norm_track[k]};
                    for (Eigen::Index q = 0; q < path.dim; ++q) {
                        row.emplace_back(tr.x_values[k](q).real());
                        row.emplace_back(tr.x_values[k](q).imag());
                    }
                    t.add(std::move(row));
                    if (k > 0) max_increase = std::max(max_increase, tr.norm_track[k] - tr.norm_track[k - 1]);
                }
            }
            out.table = std::move(t);
            m["fitted_slope"] = nullptr;
            m["scalars"] = {{"max_norm_increase", max_increase}};
        }
    } else if (e == "gap-sweep") {
        const QubitField f = c.model.field;
        const GeneratorPath path = c.model.generator(c.schedule, c.tol.gap_min);
        const SpectralSplit sp0 = spectral_split(path.at(0.0), split);
        const Vector x0 = initial_vector(c, path, sp0.P);
        const GapSweep r = gap_shrink_sweep(f, c.model.gamma, c.magnitudes, c.eps_values.front(), c.schedule, x0, sw,
                                            c.grid_nodes);
        ResultsTable t({"experiment", "eps", "s", "magnitude", "gap", "error"});
        for (std::size_t k = 0; k < r.gaps.size(); ++k)
            t.add({std::string("gap-sweep"), r.eps, 1.0, r.scales[k], r.gaps[k], r.errors[k]});
        out.table = std::move(t);
        m["fitted_slope"] = std::isfinite(r.fit.slope) ? json(r.fit.slope) : json(nullptr);
        m["fit"] = detail::fit_json(r.fit, 0.0);
        m["fit"]["abscissa"] = "gap";
        m["monotone"] = r.monotone;
    } else {
        throw ConfigInvalid("experiment '" + e + "' cannot be run directly");
    }
    return out;
}

namespace detail {

inline json base_manifest(const ExperimentConfig& c, unsigned long long seed, int jobs) {
    json m;
    m["config"] = c.raw;
    m["library_version"] = library_version;
    m["experiment"] = c.experiment;
    m["schedule"] = c.schedule.name();
    m["tolerances"] = {{"rtol", c.tol.rtol}, {"atol", c.tol.atol}, {"tol_kernel", c.tol.tol_kernel},
                       {"gap_min", c.tol.gap_min}};
    m["seed"] = seed;
    m["jobs"] = jobs;
    return m;
}

}  // namespace detail

enum class LabCommand { run, check };

/// Full pipeline for one config: parse, check, run, write. Returns the
/// process exit code; diagnostics go to `log`.
inline int lab_main(LabCommand cmd, const std::string& config_path, const LabOptions& opt, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    try {
        c = load_config(config_path);
    } catch (const ConfigInvalid& e) {
        log << "error: invalid config: " << e.what() << "\n";
        return exit_code::config_invalid;
    }
    const unsigned long long seed = opt.seed.value_or(c.seed);
    const int jobs = std::max(1, opt.jobs);
    namespace fs = std::filesystem;
    const fs::path dir(opt.out_dir);
    json m = detail::base_manifest(c, seed, jobs);
    m["command"] = cmd == LabCommand::run ? "run" : "check";
    auto finish = [&](int code, const std::string& status) {
        m["status"] = status;
        m["exit_code"] = code;
        m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        try {
            write_json((dir / c.manifest_file).string(), m);
        } catch (const std::exception& e) {
            log << "error: " << e.what() << "\n";
            return code == exit_code::ok ? exit_code::numerical_failure : code;
        }
        return code;
    };
    try {
        fs::create_directories(dir);
    } catch (const std::exception& e) {
        log << "error: cannot create output directory: " << e.what() << "\n";
        return exit_code::usage;
    }

    CheckSummary checks;
    try {
        checks = hypothesis_checks(c, seed);
    } catch (const ConfigInvalid& e) {
        log << "error: invalid config: " << e.what() << "\n";
        return exit_code::config_invalid;
    } catch (const std::exception& e) {
        log << "error: hypothesis check could not run: " << e.what() << "\n";
        m["error"] = e.what();
        return finish(exit_code::hypothesis_failed, "hypothesis_failed");
    }
    json failures = checks.failures();
    m["hypotheses"] = {{"all_passed", checks.all_passed()}, {"checked", checks.rows.size()}, {"failures", failures}};

    if (cmd == LabCommand::check) {
        check_table(checks).write((dir / c.results_file).string());
        m["outputs"] = {{"results", c.results_file}, {"manifest", c.manifest_file}};
        log << (checks.all_passed() ? "all hypothesis checks passed" : "hypothesis checks failed") << " ("
            << checks.rows.size() << " checks)\n";
        for (const auto& f : failures) log << "  failed: " << f.get<std::string>() << "\n";
        return finish(checks.all_passed() ? exit_code::ok : exit_code::hypothesis_failed,
                      checks.all_passed() ? "ok" : "hypothesis_failed");
    }
    if (!checks.all_passed()) {
        log << "error: hypothesis checks failed:\n";
        for (const auto& f : failures) log << "  " << f.get<std::string>() << "\n";
        return finish(exit_code::hypothesis_failed, "hypothesis_failed");
    }
    if (c.experiment == "check") {
        check_table(checks).write((dir / c.results_file).string());
        m["outputs"] = {{"results", c.results_file}, {"manifest", c.manifest_file}};
        return finish(exit_code::ok, "ok");
    }
    try {
        RunOutput r = run_experiment(c, jobs);
        r.table.write((dir / c.results_file).string());
        m.update(r.manifest);
        m["outputs"] = {{"results", c.results_file}, {"manifest", c.manifest_file}};
        if (m.contains("fitted_slope") && !m["fitted_slope"].is_null())
            log << c.experiment << ": fitted slope " << m["fitted_slope"].get<double>() << "\n";
        return finish(exit_code::ok, "ok");
    } catch (const ConfigInvalid& e) {
        log << "error: invalid config: " << e.what() << "\n";
        return exit_code::config_invalid;
    } catch (const HypothesisError& e) {
        log << "error: hypothesis failed: " << e.what() << "\n";
        m["error"] = e.what();
        return finish(exit_code::hypothesis_failed, "hypothesis_failed");
    } catch (const std::exception& e) {
        log << "error: numerical failure: " << e.what() << "\n";
        m["error"] = e.what();
        return finish(exit_code::numerical_failure, "numerical_failure");
    }
}

}  // namespace adiabatic
