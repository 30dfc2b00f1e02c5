#pragma once

// Parametrized model families behind the bundled fixtures: qubit fields,
// rotated multilevel Hamiltonians with dephasing, and trigonometric Markov
// cycles (plain rates or detailed-balance coordinates).

#include "adiabatic/models.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace adiabatic {

/// Magnetic-field path b(theta) for a qubit.
///   meridian: b = |b| (sin phi, 0, cos phi), phi = phi0 + (phi1 - phi0) theta^power
///   cone:     b = |b| (sin beta cos 2 pi k theta, sin beta sin 2 pi k theta, cos beta)
///   fixed:    b = const
struct QubitField {
    enum class Kind { meridian, cone, fixed };
    Kind kind = Kind::meridian;
    double magnitude = 1.0;
    double angle_from = 0.0;
    double angle_to = pi / 2;
    double power = 1.0;
    double cone_angle = pi / 4;
    double turns = 1.0;
    Vec3 fixed_field = Vec3(0, 0, 1);

    Vec3 b(double t) const {
        switch (kind) {
            case Kind::meridian: {
                const double phi = angle_from + (angle_to - angle_from) * std::pow(t, power);
                return magnitude * Vec3(std::sin(phi), 0.0, std::cos(phi));
            }
            case Kind::cone: {
                const double w = 2.0 * pi * turns * t;
                return magnitude * Vec3(std::sin(cone_angle) * std::cos(w), std::sin(cone_angle) * std::sin(w),
                                        std::cos(cone_angle));
            }
            case Kind::fixed:
                return fixed_field;
        }
        return fixed_field;
    }

    Vec3 b_dot(double t) const {
        switch (kind) {
            case Kind::meridian: {
                const double phi = angle_from + (angle_to - angle_from) * std::pow(t, power);
                const double dphi = t <= 0.0 && power > 1.0
                                        ? 0.0
                                        : (angle_to - angle_from) * power * std::pow(t, power - 1.0);
                return magnitude * dphi * Vec3(std::cos(phi), 0.0, -std::sin(phi));
            }
            case Kind::cone: {
                const double k = 2.0 * pi * turns;
                const double w = k * t;
                return magnitude * k * std::sin(cone_angle) * Vec3(-std::sin(w), std::cos(w), 0.0);
            }
            case Kind::fixed:
                return Vec3::Zero();
        }
        return Vec3::Zero();
    }
};

inline BlochSpec qubit_bloch(const QubitField& f, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("dephasing strength must be nonnegative");
    BlochSpec b;
    b.b = [f](double t) { return f.b(t); };
    b.b_dot = [f](double t) { return f.b_dot(t); };
    b.gamma = [gamma](double) { return gamma; };
    b.gamma_dot = [](double) { return 0.0; };
    return b;
}

/// H = b . sigma / 2, ground level.
inline HamiltonianPath qubit_hamiltonian(const QubitField& f) {
    HamiltonianPath h;
    h.dim = 2;
    h.H = [f](double t) -> Matrix { return 0.5 * dot_sigma(f.b(t)); };
    h.H_dot = [f](double t) -> Matrix { return 0.5 * dot_sigma(f.b_dot(t)); };
    h.level = 0;
    return h;
}

/// H(theta) = V diag(levels) V^*, V = exp(-i theta G) with G Hermitian;
/// optional dephasing channel Gamma(theta) = V diag(rates) V^*.
struct RotatedLevels {
    RealVector levels;
    Matrix rotation;  // Hermitian generator G
    RealVector rates;  // empty: no dissipation
    int level = 0;

    Matrix unitary(double t) const {
        const HermitianEigen e = hermitian_eigen(rotation);
        Vector ph(e.values.size());
        for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::exp(-I * t * e.values(i));
        return e.vectors * ph.asDiagonal() * e.vectors.adjoint();
    }

    Matrix conjugated(const RealVector& d, double t) const {
        const Matrix v = unitary(t);
        return v * d.cast<cplx>().asDiagonal() * v.adjoint();
    }
};

inline void validate(const RotatedLevels& r) {
    const auto d = r.levels.size();
    if (d < 2) throw std::invalid_argument("rotated levels: at least two levels required");
    if (r.rotation.rows() != d || r.rotation.cols() != d)
        throw std::invalid_argument("rotated levels: rotation generator has wrong shape");
    if ((r.rotation - r.rotation.adjoint()).norm() > 1e-12)
        throw std::invalid_argument("rotated levels: rotation generator must be Hermitian");
    if (r.rates.size() != 0 && r.rates.size() != d)
        throw std::invalid_argument("rotated levels: one dephasing amplitude per level required");
    if (r.level < 0 || r.level >= d) throw std::invalid_argument("rotated levels: level index out of range");
}

inline HamiltonianPath rotated_hamiltonian(const RotatedLevels& r) {
    validate(r);
    HamiltonianPath h;
    h.dim = r.levels.size();
    h.level = r.level;
    h.H = [r](double t) { return r.conjugated(r.levels, t); };
    // V' = -i G V, so H' = -i [G, H].
    h.H_dot = [r](double t) -> Matrix { return -I * commutator(r.rotation, r.conjugated(r.levels, t)); };
    return h;
}

inline LindbladSpec rotated_dephasing(const RotatedLevels& r) {
    validate(r);
    const HamiltonianPath h = rotated_hamiltonian(r);
    LindbladSpec spec;
    spec.dim = h.dim;
    spec.H = h.H;
    spec.H_dot = h.H_dot;
    spec.dephasing = true;
    if (r.rates.size() > 0)
        spec.jumps.push_back({[r](double t) { return r.conjugated(r.rates, t); },
                              [r](double t) -> Matrix {
                                  return -I * commutator(r.rotation, r.conjugated(r.rates, t));
                              }});
    return spec;
}

/// A(theta) = A0 + A1 cos(2 pi theta) + A2 sin(2 pi theta), entrywise.
struct TrigMatrix {
    RealMatrix c0, c1, c2;

    RealMatrix value(double t) const {
        const double w = 2.0 * pi * t;
        return c0 + c1 * std::cos(w) + c2 * std::sin(w);
    }
    RealMatrix derivative(double t) const {
        const double w = 2.0 * pi * t;
        return 2.0 * pi * (-c1 * std::sin(w) + c2 * std::cos(w));
    }
};

/// Markov chain with explicit off-diagonal rates (diagonal ignored).
inline MarkovSpec markov_rate_family(const TrigMatrix& rates) {
    MarkovSpec m;
    m.dim = rates.c0.rows();
    m.rates = [rates](double t) { return rates.value(t); };
    m.rates_dot = [rates](double t) { return rates.derivative(t); };
    return m;
}

/// Detailed-balance chain: symmetric flux matrix M(theta) (off-diagonal part)
/// and pi(theta) proportional to exp(-E(theta)).
inline MarkovSpec markov_balanced_family(const TrigMatrix& flux, const TrigMatrix& energy) {
    MarkovSpec m;
    m.dim = flux.c0.rows();
    auto sym = [](const RealMatrix& a) {
        RealMatrix s = a;
        for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, i) = 0.0;
        return s;
    };
    m.M = [flux, sym](double t) -> RealMatrix {
        RealMatrix a = sym(flux.value(t));
        RealMatrix out = a;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            double row = 0.0;
            for (Eigen::Index j = 0; j < a.cols(); ++j) row += a(i, j);
            out(i, i) = -row;
        }
        return out;
    };
    m.M_dot = [flux, sym](double t) -> RealMatrix {
        RealMatrix a = sym(flux.derivative(t));
        RealMatrix out = a;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            double row = 0.0;
            for (Eigen::Index j = 0; j < a.cols(); ++j) row += a(i, j);
            out(i, i) = -row;
        }
        return out;
    };
    m.pi = [energy](double t) -> RealVector {
        const RealVector e = energy.value(t).col(0);
        RealVector w = (-(e.array() - e.minCoeff())).exp().matrix();
        return w / w.sum();
    };
    m.pi_dot = [energy](double t) -> RealVector {
        const RealVector e = energy.value(t).col(0);
        const RealVector ed = energy.derivative(t).col(0);
        RealVector w = (-(e.array() - e.minCoeff())).exp().matrix();
        const RealVector p = w / w.sum();
        // d/dt softmax(-E) = -p .* (E' - <E'>_p)
        const double mean = p.dot(ed);
        return (-(p.array() * (ed.array() - mean))).matrix();
    };
    return m;
}

}  // namespace adiabatic
