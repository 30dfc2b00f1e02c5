#pragma once

// JSON experiment configuration: strict schema (unknown keys rejected),
// model construction and initial data.

#include "adiabatic/errors.hpp"
#include "adiabatic/families.hpp"
#include "adiabatic/models.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adiabatic {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k = {"check",  "expand", "evolve",   "tunnel-unitary", "tunnel-dephasing",
                                               "bloch",  "pump",   "decouple", "gap-sweep"};
    return k;
}

namespace cfg {

inline void keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed,
                 std::initializer_list<const char*> required = {}) {
    if (!j.is_object()) throw ConfigInvalid(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigInvalid(where + ": unknown key '" + it.key() + "'");
    for (const char* r : required)
        if (!j.contains(r)) throw ConfigInvalid(where + ": missing key '" + std::string(r) + "'");
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigInvalid(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigInvalid(where + ": not finite");
    return v;
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

inline int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ConfigInvalid(where + ": expected an integer");
    return j.get<int>();
}

inline std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigInvalid(where + ": expected a string");
    return j.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigInvalid(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline RealVector real_vector(const json& j, const std::string& where, Eigen::Index size = -1) {
    const std::vector<double> v = numbers(j, where);
    if (size >= 0 && static_cast<Eigen::Index>(v.size()) != size)
        throw ConfigInvalid(where + ": expected " + std::to_string(size) + " entries");
    return Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline RealMatrix real_matrix(const json& j, const std::string& where, Eigen::Index rows = -1, Eigen::Index cols = -1) {
    if (!j.is_array() || j.empty()) throw ConfigInvalid(where + ": expected a nonempty array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    const RealVector first = real_vector(j[0], where + "[0]");
    const Eigen::Index c = first.size();
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
        throw ConfigInvalid(where + ": expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    RealMatrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) m.row(i) = real_vector(j[i], where + "[" + std::to_string(i) + "]", c);
    return m;
}

inline TrigMatrix trig(const json& j, const std::string& where, Eigen::Index rows, Eigen::Index cols) {
    keys(j, where, {"c0", "cos", "sin"}, {"c0"});
    TrigMatrix t;
    t.c0 = real_matrix(j.at("c0"), where + ".c0", rows, cols);
    t.c1 = j.contains("cos") ? real_matrix(j.at("cos"), where + ".cos", rows, cols) : RealMatrix::Zero(rows, cols);
    t.c2 = j.contains("sin") ? real_matrix(j.at("sin"), where + ".sin", rows, cols) : RealMatrix::Zero(rows, cols);
    return t;
}

inline TrigMatrix trig_vector(const json& j, const std::string& where, Eigen::Index rows) {
    keys(j, where, {"c0", "cos", "sin"}, {"c0"});
    TrigMatrix t;
    t.c0 = real_vector(j.at("c0"), where + ".c0", rows);
    t.c1 = j.contains("cos") ? RealMatrix(real_vector(j.at("cos"), where + ".cos", rows)) : RealMatrix::Zero(rows, 1);
    t.c2 = j.contains("sin") ? RealMatrix(real_vector(j.at("sin"), where + ".sin", rows)) : RealMatrix::Zero(rows, 1);
    return t;
}

inline QubitField field(const json& j, const std::string& where) {
    keys(j, where, {"kind", "magnitude", "angle_from", "angle_to", "power", "cone_angle", "turns", "b"}, {"kind"});
    QubitField f;
    const std::string kind = text(j.at("kind"), where + ".kind");
    if (kind == "meridian") {
        f.kind = QubitField::Kind::meridian;
        f.angle_from = number_or(j, "angle_from", 0.0, where);
        f.angle_to = number_or(j, "angle_to", pi / 2, where);
        f.power = number_or(j, "power", 1.0, where);
        if (f.power < 1.0) throw ConfigInvalid(where + ".power: must be >= 1");
    } else if (kind == "cone") {
        f.kind = QubitField::Kind::cone;
        f.cone_angle = number_or(j, "cone_angle", pi / 4, where);
        f.turns = number_or(j, "turns", 1.0, where);
    } else if (kind == "fixed") {
        f.kind = QubitField::Kind::fixed;
        if (!j.contains("b")) throw ConfigInvalid(where + ": fixed field needs 'b'");
        const RealVector b = real_vector(j.at("b"), where + ".b", 3);
        f.fixed_field = Vec3(b(0), b(1), b(2));
    } else {
        throw ConfigInvalid(where + ".kind: unknown field kind '" + kind + "'");
    }
    f.magnitude = number_or(j, "magnitude", 1.0, where);
    if (!(f.magnitude > 0.0)) throw ConfigInvalid(where + ".magnitude: must be positive");
    if (f.kind == QubitField::Kind::fixed && !(f.fixed_field.norm() > 0.0))
        throw ConfigInvalid(where + ".b: field must be nonzero");
    return f;
}

}  // namespace cfg

/// A model family as read from the config, before composition with the
/// schedule.
struct ModelInstance {
    std::string type;      // qubit | levels | markov | markov-balanced
    std::string dynamics;  // unitary | adjoint | dephasing | markov
    QubitField field;
    double gamma = 0.0;
    RotatedLevels levels;
    TrigMatrix rates, flux, energy;
    Eigen::Index states = 0;

    ModelClass model_class() const {
        if (dynamics == "unitary") return ModelClass::hamiltonian;
        if (dynamics == "adjoint") return ModelClass::adjoint;
        if (dynamics == "dephasing") return ModelClass::lindblad;
        return ModelClass::markov;
    }
    bool quantum() const { return type == "qubit" || type == "levels"; }

    HamiltonianPath hamiltonian() const {
        if (type == "qubit") return qubit_hamiltonian(field);
        if (type == "levels") return rotated_hamiltonian(levels);
        throw ConfigInvalid("model '" + type + "' has no Hamiltonian");
    }
    BlochSpec bloch() const {
        if (type != "qubit") throw ConfigInvalid("Bloch dynamics need a qubit model");
        return qubit_bloch(field, gamma);
    }
    LindbladSpec lindblad() const {
        if (type == "qubit") return to_lindblad(bloch());
        if (type == "levels") return rotated_dephasing(levels);
        throw ConfigInvalid("model '" + type + "' has no Lindbladian");
    }
    MarkovSpec markov() const {
        if (type == "markov") return markov_rate_family(rates);
        if (type == "markov-balanced") return markov_balanced_family(flux, energy);
        throw ConfigInvalid("model '" + type + "' is not a Markov chain");
    }

    /// Generator path of the model composed with the schedule.
    GeneratorPath generator(const Schedule& sch, double gap_min = 1e-6) const {
        if (dynamics == "unitary") return schrodinger_generator(compose(hamiltonian(), sch), 65, gap_min);
        if (dynamics == "adjoint") return adjoint_generator(compose(hamiltonian(), sch));
        if (dynamics == "dephasing") return lindblad_generator(compose(lindblad(), sch));
        return markov_path(compose(markov(), sch));
    }
};

inline ModelInstance parse_model(const json& j) {
    const std::string w = "model";
    if (!j.is_object() || !j.contains("type")) throw ConfigInvalid("model: missing key 'type'");
    ModelInstance m;
    m.type = cfg::text(j.at("type"), w + ".type");
    if (m.type == "qubit") {
        cfg::keys(j, w, {"type", "dynamics", "gamma", "field"}, {"type", "dynamics", "field"});
        m.dynamics = cfg::text(j.at("dynamics"), w + ".dynamics");
        m.field = cfg::field(j.at("field"), w + ".field");
        m.gamma = cfg::number_or(j, "gamma", 0.0, w);
        if (m.gamma < 0.0) throw ConfigInvalid("model.gamma: must be nonnegative");
        if (m.dynamics != "unitary" && m.dynamics != "adjoint" && m.dynamics != "dephasing")
            throw ConfigInvalid("model.dynamics: qubit supports unitary, adjoint or dephasing");
        if (m.dynamics != "dephasing" && m.gamma != 0.0)
            throw ConfigInvalid("model.gamma: only meaningful for dephasing dynamics");
    } else if (m.type == "levels") {
        cfg::keys(j, w, {"type", "dynamics", "levels", "rotation", "dephasing_amplitudes", "level"},
                  {"type", "dynamics", "levels", "rotation"});
        m.dynamics = cfg::text(j.at("dynamics"), w + ".dynamics");
        if (m.dynamics != "unitary" && m.dynamics != "adjoint" && m.dynamics != "dephasing")
            throw ConfigInvalid("model.dynamics: levels support unitary, adjoint or dephasing");
        m.levels.levels = cfg::real_vector(j.at("levels"), w + ".levels");
        const Eigen::Index d = m.levels.levels.size();
        const json& rot = j.at("rotation");
        cfg::keys(rot, w + ".rotation", {"real", "imag"}, {"real"});
        const RealMatrix re = cfg::real_matrix(rot.at("real"), w + ".rotation.real", d, d);
        const RealMatrix im = rot.contains("imag") ? cfg::real_matrix(rot.at("imag"), w + ".rotation.imag", d, d)
                                                   : RealMatrix::Zero(d, d);
        m.levels.rotation = re.cast<cplx>() + I * im.cast<cplx>();
        if (j.contains("dephasing_amplitudes"))
            m.levels.rates = cfg::real_vector(j.at("dephasing_amplitudes"), w + ".dephasing_amplitudes", d);
        if (m.dynamics == "dephasing" && m.levels.rates.size() == 0)
            throw ConfigInvalid("model.dephasing_amplitudes: required for dephasing dynamics");
        if (m.dynamics != "dephasing" && m.levels.rates.size() != 0)
            throw ConfigInvalid("model.dephasing_amplitudes: only meaningful for dephasing dynamics");
        m.levels.level = j.contains("level") ? cfg::integer(j.at("level"), w + ".level") : 0;
        try {
            validate(m.levels);
        } catch (const std::invalid_argument& e) {
            throw ConfigInvalid(std::string("model: ") + e.what());
        }
    } else if (m.type == "markov") {
        cfg::keys(j, w, {"type", "states", "rates"}, {"type", "states", "rates"});
        m.dynamics = "markov";
        m.states = cfg::integer(j.at("states"), w + ".states");
        if (m.states < 2) throw ConfigInvalid("model.states: at least 2 states");
        m.rates = cfg::trig(j.at("rates"), w + ".rates", m.states, m.states);
    } else if (m.type == "markov-balanced") {
        cfg::keys(j, w, {"type", "states", "flux", "energy"}, {"type", "states", "flux", "energy"});
        m.dynamics = "markov";
        m.states = cfg::integer(j.at("states"), w + ".states");
        if (m.states < 2) throw ConfigInvalid("model.states: at least 2 states");
        m.flux = cfg::trig(j.at("flux"), w + ".flux", m.states, m.states);
        m.energy = cfg::trig_vector(j.at("energy"), w + ".energy", m.states);
        for (const RealMatrix* c : {&m.flux.c0, &m.flux.c1, &m.flux.c2})
            if ((*c - c->transpose()).cwiseAbs().maxCoeff() > 0.0)
                throw ConfigInvalid("model.flux: coefficient matrices must be symmetric");
    } else {
        throw ConfigInvalid("model.type: unknown model type '" + m.type + "'");
    }
    return m;
}

struct Tolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
    double tol_kernel = 1e-9;
    double gap_min = 1e-6;
};

/// Initial datum x(0):
///   ground      eigenvector (unitary) or eigenprojection (superoperator models) of the distinguished level
///   stationary  P(0) applied to the uniform distribution (Markov) or to 1/d (quantum)
///   bloch       qubit state (1 + n.sigma)/2
///   vector      explicit components (real and optional imaginary parts)
struct InitialState {
    std::string kind = "ground";
    Vec3 bloch = Vec3::Zero();
    Vector components;
};

struct ExperimentConfig {
    std::string experiment;
    ModelInstance model;
    Schedule schedule = Schedule::linear();
    std::vector<double> eps_values;
    int order = 1;
    Tolerances tol;
    std::string results_file = "results.csv";
    std::string manifest_file = "manifest.json";
    unsigned long long seed = 0;
    int grid_nodes = 64;
    int points = 101;
    std::array<int, 2> link = {0, 1};
    std::vector<double> magnitudes;
    InitialState initial;
    json raw;
};

inline ExperimentConfig parse_config(const json& j) {
    cfg::keys(j, "config",
              {"experiment", "description", "model", "schedule", "eps_values", "order", "tolerances", "output", "seed",
               "grid_nodes", "points", "link", "magnitudes", "initial_state"},
              {"experiment", "model"});
    ExperimentConfig c;
    c.raw = j;
    c.experiment = cfg::text(j.at("experiment"), "experiment");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
        throw ConfigInvalid("experiment: unknown experiment '" + c.experiment + "'");
    if (j.contains("description")) cfg::text(j.at("description"), "description");
    c.model = parse_model(j.at("model"));

    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        cfg::keys(s, "schedule", {"kind"}, {"kind"});
        const std::string k = cfg::text(s.at("kind"), "schedule.kind");
        if (k == "linear") c.schedule = Schedule::linear();
        else if (k == "flat") c.schedule = Schedule::flat();
        else throw ConfigInvalid("schedule.kind: expected 'linear' or 'flat'");
    }
    if (j.contains("eps_values")) {
        c.eps_values = cfg::numbers(j.at("eps_values"), "eps_values");
        for (double e : c.eps_values)
            if (!(e > 0.0)) throw ConfigInvalid("eps_values: entries must be positive");
    }
    if (c.experiment != "check" && c.eps_values.empty()) throw ConfigInvalid("eps_values: required for this experiment");
    if (c.experiment == "gap-sweep" && c.eps_values.size() != 1)
        throw ConfigInvalid("eps_values: gap-sweep takes a single eps");
    if (j.contains("order")) c.order = cfg::integer(j.at("order"), "order");
    if (c.order < 0 || c.order > 4) throw ConfigInvalid("order: must lie in [0, 4]");
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        cfg::keys(t, "tolerances", {"rtol", "atol", "tol_kernel", "gap_min"});
        c.tol.rtol = cfg::number_or(t, "rtol", c.tol.rtol, "tolerances");
        c.tol.atol = cfg::number_or(t, "atol", c.tol.atol, "tolerances");
        c.tol.tol_kernel = cfg::number_or(t, "tol_kernel", c.tol.tol_kernel, "tolerances");
        c.tol.gap_min = cfg::number_or(t, "gap_min", c.tol.gap_min, "tolerances");
        if (!(c.tol.rtol > 0.0) || !(c.tol.atol > 0.0) || !(c.tol.tol_kernel > 0.0) || !(c.tol.gap_min > 0.0))
            throw ConfigInvalid("tolerances: all tolerances must be positive");
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        cfg::keys(o, "output", {"results", "manifest"});
        if (o.contains("results")) c.results_file = cfg::text(o.at("results"), "output.results");
        if (o.contains("manifest")) c.manifest_file = cfg::text(o.at("manifest"), "output.manifest");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0))
            throw ConfigInvalid("seed: expected a nonnegative integer");
        c.seed = j.at("seed").get<unsigned long long>();
    }
    if (j.contains("grid_nodes")) c.grid_nodes = cfg::integer(j.at("grid_nodes"), "grid_nodes");
    if (c.grid_nodes < 8) throw ConfigInvalid("grid_nodes: at least 8");
    if (j.contains("points")) c.points = cfg::integer(j.at("points"), "points");
    if (c.points < 2) throw ConfigInvalid("points: at least 2");
    if (j.contains("link")) {
        const json& l = j.at("link");
        if (!l.is_array() || l.size() != 2) throw ConfigInvalid("link: expected [i, j]");
        c.link = {cfg::integer(l[0], "link[0]"), cfg::integer(l[1], "link[1]")};
    }
    if (j.contains("magnitudes")) c.magnitudes = cfg::numbers(j.at("magnitudes"), "magnitudes");
    if (j.contains("initial_state")) {
        const json& s = j.at("initial_state");
        cfg::keys(s, "initial_state", {"kind", "n", "real", "imag"}, {"kind"});
        c.initial.kind = cfg::text(s.at("kind"), "initial_state.kind");
        if (c.initial.kind == "bloch") {
            if (!s.contains("n")) throw ConfigInvalid("initial_state: bloch state needs 'n'");
            const RealVector n = cfg::real_vector(s.at("n"), "initial_state.n", 3);
            if (n.norm() > 1.0 + 1e-12) throw ConfigInvalid("initial_state.n: outside the Bloch ball");
            c.initial.bloch = Vec3(n(0), n(1), n(2));
        } else if (c.initial.kind == "vector") {
            if (!s.contains("real")) throw ConfigInvalid("initial_state: vector needs 'real'");
            const RealVector re = cfg::real_vector(s.at("real"), "initial_state.real");
            const RealVector im =
                s.contains("imag") ? cfg::real_vector(s.at("imag"), "initial_state.imag", re.size()) : RealVector::Zero(re.size());
            c.initial.components = re.cast<cplx>() + I * im.cast<cplx>();
        } else if (c.initial.kind != "ground" && c.initial.kind != "stationary") {
            throw ConfigInvalid("initial_state.kind: expected ground, stationary, bloch or vector");
        }
    } else if (!c.model.quantum()) {
        c.initial.kind = "stationary";
    }

    // Experiment-specific model requirements.
    const std::string& e = c.experiment;
    const std::string& dyn = c.model.dynamics;
    if (e == "tunnel-unitary" && dyn != "unitary") throw ConfigInvalid("tunnel-unitary needs unitary dynamics");
    if (e == "tunnel-dephasing" && dyn != "dephasing") throw ConfigInvalid("tunnel-dephasing needs dephasing dynamics");
    if (e == "bloch" && (c.model.type != "qubit" || dyn != "dephasing"))
        throw ConfigInvalid("bloch needs a qubit model with dephasing dynamics");
    if (e == "pump") {
        if (c.model.type != "markov-balanced") throw ConfigInvalid("pump needs a markov-balanced model");
        if (c.link[0] == c.link[1] || c.link[0] < 0 || c.link[1] < 0 || c.link[0] >= c.model.states ||
            c.link[1] >= c.model.states)
            throw ConfigInvalid("link: invalid state indices");
    }
    if (e == "gap-sweep") {
        if (c.model.type != "qubit" || dyn != "dephasing")
            throw ConfigInvalid("gap-sweep needs a qubit model with dephasing dynamics");
        if (c.magnitudes.empty()) throw ConfigInvalid("magnitudes: required for gap-sweep");
        for (double m : c.magnitudes)
            if (!(m >= 0.0)) throw ConfigInvalid("magnitudes: entries must be nonnegative");
    }
    if (c.initial.kind == "bloch" && !(c.model.type == "qubit" && (dyn == "dephasing" || dyn == "adjoint")))
        throw ConfigInvalid("initial_state: bloch states need a qubit density-matrix model");
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigInvalid("cannot read config file " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid("config " + path + " is not valid JSON: " + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

/// x(0) for the configured model; `split` is the kernel projection at s = 0.
inline Vector initial_vector(const ExperimentConfig& c, const GeneratorPath& path, const Matrix& p0) {
    const InitialState& st = c.initial;
    const Eigen::Index d = path.dim;
    if (st.kind == "vector") {
        if (st.components.size() != d) throw ConfigInvalid("initial_state: expected " + std::to_string(d) + " components");
        return st.components;
    }
    if (st.kind == "bloch") return vec(bloch_state(st.bloch));
    if (st.kind == "stationary") {
        Vector ref;
        if (c.model.quantum() && c.model.dynamics != "unitary") {
            const auto n = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(d))));
            ref = vec(Matrix(Matrix::Identity(n, n) / static_cast<double>(n)));
        } else {
            ref = Vector::Constant(d, 1.0 / static_cast<double>(d));
        }
        return p0 * ref;
    }
    // ground
    if (!c.model.quantum()) throw ConfigInvalid("initial_state: 'ground' needs a quantum model");
    const HamiltonianPath h = compose(c.model.hamiltonian(), c.schedule);
    const HermitianEigen e = hermitian_eigen(h.H(0.0));
    const Vector psi = e.vectors.col(h.level);
    if (c.model.dynamics == "unitary") return psi;
    return vec(Matrix(psi * psi.adjoint()));
}

}  // namespace adiabatic
