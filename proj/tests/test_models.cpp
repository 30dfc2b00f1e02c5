#include <type_traits>
#include "adiabatic/families.hpp"
#include "adiabatic/models.hpp"
#include "adiabatic/quadrature.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace adiabatic;
using Catch::Approx;

namespace {

Matrix random_state(std::mt19937_64& rng, Eigen::Index d) {
    std::normal_distribution<double> nd;
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(nd(rng), nd(rng));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace();
}

// vec([H, X]) as a matrix.
Matrix ad(const Matrix& h) {
    const Matrix id = Matrix::Identity(h.rows(), h.cols());
    return kron(id, h) - kron(h.transpose(), id);
}

LindbladSpec constant_spec(const Matrix& h, const std::vector<Matrix>& jumps, bool dephasing) {
    LindbladSpec s;
    s.dim = h.rows();
    s.H = [h](double) { return h; };
    s.H_dot = [h](double) { return Matrix::Zero(h.rows(), h.cols()).eval(); };
    for (const auto& g : jumps)
        s.jumps.push_back({[g](double) { return g; }, [g](double) { return Matrix::Zero(g.rows(), g.cols()).eval(); }});
    s.dephasing = dephasing;
    return s;
}

RotatedLevels three_levels() {
    RotatedLevels r;
    r.levels = RealVector(3);
    r.levels << 0.0, 1.0, 3.0;
    r.rotation = Matrix::Zero(3, 3);
    r.rotation(0, 1) = r.rotation(1, 0) = 0.8;
    r.rotation(1, 2) = cplx(0, 0.5);
    r.rotation(2, 1) = cplx(0, -0.5);
    r.rotation(0, 2) = r.rotation(2, 0) = 0.3;
    r.rates = RealVector(3);
    r.rates << 0.0, 0.7, 1.5;
    return r;
}

TrigMatrix balanced_flux() {
    TrigMatrix m{RealMatrix::Constant(3, 3, 2.0), RealMatrix::Zero(3, 3), RealMatrix::Zero(3, 3)};
    m.c1(0, 1) = m.c1(1, 0) = 0.8;
    m.c2(1, 2) = m.c2(2, 1) = 0.6;
    return m;
}

TrigMatrix balanced_energy() {
    TrigMatrix e{RealMatrix::Zero(3, 1), RealMatrix::Zero(3, 1), RealMatrix::Zero(3, 1)};
    e.c1 << 1.0, -0.5, -0.5;
    e.c2 << 0.0, 0.8, -0.8;
    return e;
}

template <typename F>
auto central_difference(F f, double s, double h = 1e-5) {
    const auto hi = f(s + h);
    const auto lo = f(s - h);
    using R = std::decay_t<decltype(hi)>;
    if constexpr (std::is_arithmetic_v<R>) return (hi - lo) / (2.0 * h);
    else return typename R::PlainObject((hi - lo) / (2.0 * h));
}

}  // namespace

TEST_CASE("linear and flat schedules", "[models]") {
    const Schedule lin = Schedule::linear();
    CHECK(lin.theta(0.3) == 0.3);
    CHECK(lin.theta_dot(0.7) == 1.0);
    CHECK_FALSE(lin.flat_endpoints());

    const Schedule flat = Schedule::flat();
    CHECK(flat.flat_endpoints());
    CHECK(flat.theta(0.0) == 0.0);
    CHECK(flat.theta(1.0) == 1.0);
    CHECK(flat.theta(0.5) == Approx(0.5).margin(1e-15));
    auto bump = [](double u) { return u <= 0.0 || u >= 1.0 ? 0.0 : std::exp(-1.0 / (u * (1.0 - u))); };
    const double total = composite_gauss(bump, 0.0, 1.0, 400);
    double prev = 0.0;
    for (double s : {0.05, 0.2, 0.37, 0.5, 0.61, 0.8, 0.93, 0.999}) {
        CHECK(flat.theta(s) == Approx(composite_gauss(bump, 0.0, s, 400) / total).margin(1e-14));
        CHECK(flat.theta(s) >= prev);
        prev = flat.theta(s);
        CHECK(flat.theta_dot(s) == Approx(central_difference([&](double t) { return flat.theta(t); }, s)).margin(1e-8));
        CHECK(flat.theta_ddot(s) ==
              Approx(central_difference([&](double t) { return flat.theta_dot(t); }, s)).margin(1e-7));
        CHECK(flat.theta(s) + flat.theta(1.0 - s) == Approx(1.0).margin(1e-15));
    }
    CHECK(flat.theta_dot(0.0) == 0.0);
    CHECK(flat.theta_dot(1.0) == 0.0);
}

TEST_CASE("composed generators are flat at the endpoints", "[models]") {
    const Schedule flat = Schedule::flat();
    QubitField f;
    const std::vector<GeneratorPath> paths = {
        schrodinger_generator(compose(qubit_hamiltonian(f), flat)),
        lindblad_generator(to_lindblad(compose(qubit_bloch(f, 0.5), flat))),
        lindblad_generator(compose(rotated_dephasing(three_levels()), flat)),
        markov_path(compose(markov_balanced_family(balanced_flux(), balanced_energy()), flat)),
    };
    for (const auto& p : paths)
        for (double s : {0.0, 1e-3, 1.0 - 1e-3, 1.0}) CHECK(norm2(p.derivative_at(s)) <= 1e-10);
}

TEST_CASE("Schroedinger generator", "[models]") {
    SECTION("diagonal Hamiltonian") {
        HamiltonianPath h;
        h.dim = 2;
        h.H = [](double) { Matrix m = Matrix::Zero(2, 2); m(0, 0) = 1.0; m(1, 1) = 2.0; return m; };
        h.H_dot = [](double) { return Matrix::Zero(2, 2).eval(); };
        const Matrix l = schrodinger_generator(h).at(0.4);
        Matrix expect = Matrix::Zero(2, 2);
        expect(1, 1) = -I;
        CHECK((l - expect).norm() < 1e-14);
    }
    SECTION("qubit gap equals the field magnitude") {
        QubitField f;
        f.magnitude = 1.7;
        const GeneratorPath p = schrodinger_generator(qubit_hamiltonian(f));
        for (double s : {0.0, 0.3, 1.0}) {
            const SpectralSplit sp = spectral_split(p.at(s));
            CHECK(sp.gap == Approx(1.7).epsilon(1e-10));
            CHECK(sp.kernel_dim == 1);
        }
    }
    SECTION("kernel section follows the continued ground state") {
        QubitField f;
        f.kind = QubitField::Kind::cone;
        const HamiltonianPath h = qubit_hamiltonian(f);
        const GeneratorPath p = schrodinger_generator(h);
        const std::vector<double> s = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
        const std::vector<Vector> psi = eigenvector_continuation(h, s);
        for (std::size_t k = 0; k < s.size(); ++k) {
            const Matrix proj = spectral_split(p.at(s[k])).P;
            CHECK((proj - psi[k] * psi[k].adjoint()).norm() < 1e-10);
            if (k > 0) {
                const cplx ov = psi[k - 1].dot(psi[k]);
                CHECK(std::abs(ov.imag()) < 1e-14);
                CHECK(ov.real() > 0.0);
            }
        }
    }
    SECTION("level crossing is rejected") {
        HamiltonianPath h;
        h.dim = 2;
        h.H = [](double s) { Matrix m = Matrix::Zero(2, 2); m(0, 0) = s - 0.5; m(1, 1) = 0.5 - s; return m; };
        h.H_dot = [](double) { Matrix m = Matrix::Zero(2, 2); m(0, 0) = 1.0; m(1, 1) = -1.0; return m; };
        CHECK_THROWS_AS(schrodinger_generator(h), NoGap);
    }
    SECTION("derivative matches finite differences") {
        const HamiltonianPath h = rotated_hamiltonian(three_levels());
        const GeneratorPath p = schrodinger_generator(h);
        for (double s : {0.2, 0.6}) {
            const Matrix fd = central_difference([&](double t) { return p.at(t); }, s);
            CHECK((p.derivative_at(s) - fd).norm() < 1e-8);
            const Matrix hd = central_difference([&](double t) { return h.H(t); }, s);
            CHECK((h.H_dot(s) - hd).norm() < 1e-8);
        }
    }
}

TEST_CASE("adjoint generator", "[models]") {
    QubitField f;
    const HamiltonianPath h = qubit_hamiltonian(f);
    const GeneratorPath p = adjoint_generator(h);
    const Matrix l = p.at(0.3);
    CHECK(p.dim == 4);
    CHECK(spectral_split(l).kernel_dim == 2);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
        const Matrix rho = random_state(rng, 2);
        CHECK(std::abs(unvec(l * vec(rho)).trace()) < 1e-14);
    }
    // Eigenvalues -i (e_i - e_j).
    const HermitianEigen e = hermitian_eigen(h.H(0.3));
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) {
            const Matrix eij = e.vectors.col(i) * e.vectors.col(j).adjoint();
            const Vector img = l * vec(eij);
            CHECK((img - (-I * (e.values(i) - e.values(j))) * vec(eij)).norm() < 1e-13);
        }
}

TEST_CASE("Lindblad superoperators", "[models]") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    auto random_matrix = [&](Eigen::Index d) {
        Matrix a(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(nd(rng), nd(rng));
        return a;
    };
    const Matrix h0 = hermitian_part(random_matrix(3));

    SECTION("no jumps reduces to the commutator") {
        const LindbladSpec spec = constant_spec(h0, {}, false);
        CHECK((lindblad_superoperator(spec, 0.0) - commutator_superoperator(h0)).norm() < 1e-14);
    }
    SECTION("gauge shift of a jump operator") {
        const Matrix g = random_matrix(3);
        const cplx beta(0.7, -0.4);
        const Matrix h1 = h0 - 0.5 * I * (std::conj(beta) * g - beta * g.adjoint());
        const Matrix g1 = g + beta * Matrix::Identity(3, 3);
        const Matrix l0 = lindblad_superoperator(constant_spec(h0, {g}, false), 0.0);
        const Matrix l1 = lindblad_superoperator(constant_spec(h1, {g1}, false), 0.0);
        CHECK((l0 - l1).norm() < 1e-12 * l0.norm());
    }
    SECTION("qubit dephasing as a double commutator") {
        QubitField f;
        f.magnitude = 1.3;
        const double gamma = 0.4;
        const LindbladSpec spec = to_lindblad(qubit_bloch(f, gamma));
        for (double s : {0.0, 0.5}) {
            const Matrix h = spec.H(s);
            const double nb = f.b(s).norm();
            const Matrix expect = -I * ad(h) - gamma / nb * ad(h) * ad(h);
            CHECK((lindblad_superoperator(spec, s) - expect).norm() < 1e-13);
        }
    }
    SECTION("derivative matches finite differences") {
        const LindbladSpec spec = rotated_dephasing(three_levels());
        const GeneratorPath p = lindblad_generator(spec);
        const Matrix fd = central_difference([&](double t) { return p.at(t); }, 0.4);
        CHECK((p.derivative_at(0.4) - fd).norm() < 1e-7);
        const LindbladSpec q = to_lindblad(qubit_bloch(QubitField{}, 0.8));
        const GeneratorPath pq = lindblad_generator(q);
        CHECK((pq.derivative_at(0.3) - central_difference([&](double t) { return pq.at(t); }, 0.3)).norm() < 1e-7);
    }
}

TEST_CASE("dephasing eigenvalue table", "[models]") {
    SECTION("qubit: Re lambda_01 = -gamma |b|") {
        QubitField f;
        f.magnitude = 2.0;
        const double gamma = 0.5;
        const DephasingTable t = dephasing_eigenstructure(to_lindblad(qubit_bloch(f, gamma)), 0.3);
        CHECK(t.lambda(0, 1).real() == Approx(-gamma * 2.0).epsilon(1e-12));
        CHECK(std::abs(t.lambda(0, 1).imag()) == Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(t.lambda(1, 0) - std::conj(t.lambda(0, 1))) < 1e-14);
    }
    SECTION("no dissipation: purely imaginary") {
        const DephasingTable t = dephasing_eigenstructure(to_lindblad(qubit_bloch(QubitField{}, 0.0)), 0.6);
        for (Eigen::Index i = 0; i < 2; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) {
                CHECK(std::abs(t.lambda(i, j).real()) < 1e-15);
                CHECK(t.lambda(i, j).imag() == Approx(-(t.energies(i) - t.energies(j))).margin(1e-14));
            }
    }
    SECTION("three levels against the superoperator") {
        Matrix h = Matrix::Zero(3, 3);
        h(1, 1) = 1.0;
        h(2, 2) = 3.0;
        Matrix g = Matrix::Zero(3, 3);
        g(0, 0) = 0.2;
        g(1, 1) = -0.5;
        g(2, 2) = 1.1;
        const LindbladSpec spec = constant_spec(h, {g, Matrix(0.3 * h)}, true);
        const DephasingTable t = dephasing_eigenstructure(spec, 0.0);
        const Matrix l = lindblad_superoperator(spec, 0.0);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) {
                const Matrix e = t.eigenvectors.col(i) * t.eigenvectors.col(j).adjoint();
                CHECK((l * vec(e) - t.lambda(i, j) * vec(e)).norm() < 1e-10);
                CHECK(std::abs(t.lambda(i, j) - std::conj(t.lambda(j, i))) < 1e-14);
                CHECK(t.lambda(i, j).real() <= 1e-14);
            }
        for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(t.lambda(i, i)) < 1e-14);
    }
    SECTION("degenerate Hamiltonian and non-commuting jumps") {
        const LindbladSpec flat_h = constant_spec(Matrix::Identity(2, 2), {}, true);
        CHECK_THROWS_AS(dephasing_eigenstructure(flat_h, 0.0), DegenerateHamiltonian);
        const LindbladSpec bad = constant_spec(pauli()[2], {pauli()[0]}, true);
        CHECK_THROWS_AS(dephasing_eigenstructure(bad, 0.0), std::invalid_argument);
    }
    SECTION("eigenprojection derivatives") {
        const LindbladSpec spec = rotated_dephasing(three_levels());
        const double s = 0.35;
        const DephasingTable t = dephasing_eigenstructure(spec, s);
        const std::vector<Matrix> pd = eigenprojection_derivatives(t, spec.H_dot(s));
        for (std::size_t j = 0; j < 3; ++j) {
            const Matrix fd = central_difference(
                [&](double u) { return dephasing_eigenstructure(spec, u).projections[j]; }, s);
            CHECK((pd[j] - fd).norm() < 1e-8);
        }
    }
}

TEST_CASE("dephasing kernel is the commutant", "[models]") {
    const DephasingKernelReport q = check_dephasing_kernel(to_lindblad(qubit_bloch(QubitField{}, 0.5)), 0.4);
    CHECK(q.kernel_dim == 2);
    CHECK(q.equal);

    // sigma_x dephasing against sigma_z dynamics: only the identity survives.
    const DephasingKernelReport bad = check_dephasing_kernel(constant_spec(pauli()[2], {pauli()[0]}, false), 0.0);
    CHECK(bad.kernel_dim == 1);
    CHECK(bad.commutant_dim == 2);
    CHECK_FALSE(bad.equal);

    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = -0.5;
    h(1, 1) = 0.5;
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 0.1;
    g(1, 1) = 0.9;
    CHECK(check_dephasing_kernel(constant_spec(h, {g}, true), 0.0).equal);
    CHECK(check_dephasing_kernel(rotated_dephasing(three_levels()), 0.7).equal);
}

TEST_CASE("Bloch equations", "[models]") {
    BlochSpec z;
    z.b = [](double) { return Vec3(0, 0, 1); };
    z.b_dot = [](double) { return Vec3::Zero(); };
    SECTION("rotation about z") {
        const Eigen::Vector3cd ev = Eigen::EigenSolver<Mat3>(bloch_generator(z, 0.0)).eigenvalues();
        std::vector<double> im, re;
        for (int k = 0; k < 3; ++k) im.push_back(ev(k).imag()), re.push_back(ev(k).real());
        std::sort(im.begin(), im.end());
        CHECK(im[0] == Approx(-1.0));
        CHECK(im[1] == Approx(0.0).margin(1e-15));
        CHECK(im[2] == Approx(1.0));
        for (double r : re) CHECK(std::abs(r) < 1e-15);
    }
    SECTION("dephasing damps the transverse components") {
        z.gamma = [](double) { return 0.5; };
        const Eigen::Vector3cd ev = Eigen::EigenSolver<Mat3>(bloch_generator(z, 0.0)).eigenvalues();
        int nonzero = 0;
        for (int k = 0; k < 3; ++k) {
            if (std::abs(ev(k)) < 1e-14) continue;
            ++nonzero;
            CHECK(ev(k).real() == Approx(-0.5));
            CHECK(std::abs(ev(k).imag()) == Approx(1.0));
        }
        CHECK(nonzero == 2);
    }
    SECTION("Bloch map intertwines the two generators") {
        QubitField f;
        f.kind = QubitField::Kind::cone;
        f.magnitude = 1.4;
        const BlochSpec spec = qubit_bloch(f, 0.7);
        const LindbladSpec lspec = to_lindblad(spec);
        std::mt19937_64 rng(5);
        for (double s : {0.1, 0.45}) {
            const Matrix l = lindblad_superoperator(lspec, s);
            const Mat3 b = bloch_generator(spec, s);
            for (int k = 0; k < 4; ++k) {
                const Matrix rho = random_state(rng, 2);
                const Vec3 lhs = bloch_map(unvec(l * vec(rho)));
                CHECK((lhs - b * bloch_map(rho)).norm() < 1e-12);
            }
        }
    }
    SECTION("Bloch map") {
        CHECK(bloch_map(Matrix::Identity(2, 2) / 2.0).norm() < 1e-16);
        Matrix up = Matrix::Zero(2, 2);
        up(0, 0) = 1.0;
        CHECK((bloch_map(up) - Vec3(0, 0, 1)).norm() < 1e-16);
        std::mt19937_64 rng(9);
        for (int k = 0; k < 5; ++k) {
            const Matrix rho = random_state(rng, 2);
            const double purity = (rho * rho).trace().real();
            CHECK(bloch_map(rho).norm() == Approx(std::sqrt(2.0 * purity - 1.0)).epsilon(1e-12));
            CHECK((bloch_state(bloch_map(rho)) - rho).norm() < 1e-14);
        }
    }
}

TEST_CASE("Markov generators", "[models]") {
    SECTION("two states") {
        MarkovSpec m;
        m.dim = 2;
        m.rates = [](double) { RealMatrix r(2, 2); r << -1, 2, 1, -2; return r; };
        m.rates_dot = [](double) { return RealMatrix::Zero(2, 2).eval(); };
        const MarkovGenerator g = markov_generator(m, 0.0);
        CHECK(g.pi(0) == Approx(2.0 / 3.0).epsilon(1e-14));
        CHECK(g.pi(1) == Approx(1.0 / 3.0).epsilon(1e-14));
        CHECK_NOTHROW(detailed_balance_matrix(g.L, g.pi));
    }
    SECTION("symmetric flux with uniform stationary state") {
        TrigMatrix e{RealMatrix::Zero(3, 1), RealMatrix::Zero(3, 1), RealMatrix::Zero(3, 1)};
        const MarkovSpec m = markov_balanced_family(balanced_flux(), e);
        const MarkovGenerator g = markov_generator(m, 0.2);
        CHECK((g.L - g.L.transpose()).norm() < 1e-14);
        CHECK(probability_currents(g.L, g.pi).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("ring with a bias has a stationary current") {
        MarkovSpec m;
        m.dim = 3;
        m.rates = [](double) {
            RealMatrix r = RealMatrix::Zero(3, 3);
            r(1, 0) = r(2, 1) = r(0, 2) = 2.0;
            r(0, 1) = r(1, 2) = r(2, 0) = 1.0;
            return r;
        };
        m.rates_dot = [](double) { return RealMatrix::Zero(3, 3).eval(); };
        const MarkovGenerator g = markov_generator(m, 0.0);
        CHECK(std::abs(probability_currents(g.L, g.pi)(1, 0)) > 0.1);
        CHECK_THROWS_AS(detailed_balance_matrix(g.L, g.pi), NoDetailedBalance);
    }
    SECTION("detailed-balance round trip") {
        const MarkovSpec m = markov_balanced_family(balanced_flux(), balanced_energy());
        for (double s : {0.0, 0.3, 0.77}) {
            const MarkovGenerator g = markov_generator(m, s);
            CHECK((detailed_balance_matrix(g.L, g.pi) - m.M(s)).cwiseAbs().maxCoeff() < 1e-12);
            MarkovSpec rates_only;
            rates_only.dim = 3;
            rates_only.rates = [l = g.L](double) { return l; };
            rates_only.rates_dot = [](double) { return RealMatrix::Zero(3, 3).eval(); };
            CHECK((markov_generator(rates_only, 0.0).pi - g.pi).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(g.L.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
            CHECK(g.pi.sum() == Approx(1.0).epsilon(1e-15));
            const RealVector pd = central_difference([&](double t) { return RealVector(m.pi(t)); }, s);
            CHECK((m.pi_dot(s) - pd).norm() < 1e-8);
        }
    }
    SECTION("two absorbing states are reducible") {
        MarkovSpec m;
        m.dim = 3;
        m.rates = [](double) { RealMatrix r = RealMatrix::Zero(3, 3); r(0, 1) = r(2, 1) = 1.0; return r; };
        m.rates_dot = [](double) { return RealMatrix::Zero(3, 3).eval(); };
        CHECK_THROWS_AS(markov_generator(m, 0.0), Reducible);
        const SpectralSplit sp = spectral_split(markov_path(m).at(0.0));
        CHECK(sp.kernel_dim == 2);
    }
    SECTION("pseudo-inverse of the flux matrix") {
        const RealMatrix mm = markov_balanced_family(balanced_flux(), balanced_energy()).M(0.4);
        const RealMatrix mp = flux_pseudo_inverse(mm);
        const RealMatrix centre = RealMatrix::Identity(3, 3) - RealMatrix::Constant(3, 3, 1.0 / 3.0);
        CHECK((mm * mp - centre).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((mp * RealVector::Ones(3)).norm() < 1e-12);
    }
}

TEST_CASE("families are certified generators", "[models]") {
    QubitField meridian, cone;
    cone.kind = QubitField::Kind::cone;
    TrigMatrix rates{RealMatrix::Constant(3, 3, 1.0), RealMatrix::Zero(3, 3), RealMatrix::Zero(3, 3)};
    rates.c1(0, 1) = 0.5;
    rates.c2(2, 0) = -0.5;
    const std::vector<GeneratorPath> paths = {
        schrodinger_generator(qubit_hamiltonian(meridian)),
        schrodinger_generator(rotated_hamiltonian(three_levels())),
        adjoint_generator(qubit_hamiltonian(cone)),
        lindblad_generator(to_lindblad(qubit_bloch(cone, 0.9))),
        lindblad_generator(rotated_dephasing(three_levels())),
        markov_path(markov_balanced_family(balanced_flux(), balanced_energy())),
        markov_path(markov_rate_family(rates)),
    };
    for (const auto& p : paths)
        for (double s : {0.0, 0.33, 0.9}) {
            const HypothesisReport rep = check_contraction_generator(p.at(s), p.model_class);
            CHECK(rep.all_passed());
        }
}

TEST_CASE("family derivatives", "[models]") {
    for (auto kind : {QubitField::Kind::meridian, QubitField::Kind::cone}) {
        QubitField f;
        f.kind = kind;
        f.power = 2.0;
        for (double t : {0.2, 0.7}) CHECK((f.b_dot(t) - central_difference([&](double u) { return f.b(u); }, t)).norm() < 1e-8);
    }
    QubitField f;
    f.power = 2.0;
    CHECK(f.b_dot(0.0).norm() == 0.0);
    const TrigMatrix m = balanced_flux();
    CHECK((m.derivative(0.3) - central_difference([&](double t) { return m.value(t); }, 0.3)).norm() < 1e-8);
    const LindbladSpec r = rotated_dephasing(three_levels());
    CHECK((r.jumps[0].op_dot(0.4) - central_difference([&](double t) { return r.jumps[0].op(t); }, 0.4)).norm() < 1e-8);
    RotatedLevels bad = three_levels();
    bad.rotation(0, 1) = 2.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}
