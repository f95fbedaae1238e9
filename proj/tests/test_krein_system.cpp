#include <catch2/catch_amalgamated.hpp>
#include <krein/krein_system.hpp>

#include <cmath>
#include <random>

using namespace krein;

namespace {

double unit_draw(std::mt19937_64& gen) { return double(gen() >> 11) * 0x1.0p-53; }

// smooth random coefficient from a few Fourier modes under a decaying envelope
ComplexFunction random_complex_A(std::mt19937_64& gen, double xmax, double amp) {
    double c[6];
    for (auto& v : c) v = 2.0 * unit_draw(gen) - 1.0;
    auto g = uniform_grid(0.0, xmax, 1201);
    return ComplexFunction::from_function(
        [&](double x) {
            const double env = amp / (1.0 + 0.05 * x);
            return Complex(env * (c[0] + c[1] * std::sin(0.7 * x) + c[2] * std::cos(1.3 * x)),
                           env * (c[3] + c[4] * std::sin(1.1 * x) + c[5] * std::cos(0.4 * x)));
        },
        g);
}

RealFunction random_real_a(std::mt19937_64& gen, double xmax, double amp) {
    double c[3];
    for (auto& v : c) v = 2.0 * unit_draw(gen) - 1.0;
    auto g = uniform_grid(0.0, xmax, 1201);
    return RealFunction::from_function(
        [&](double x) {
            const double env = amp / (1.0 + 0.1 * x);
            return env * (c[0] + c[1] * std::sin(0.9 * x) + c[2] * std::cos(1.7 * x));
        },
        g);
}

}  // namespace

TEST_CASE("free Krein system has exponential P and constant P*") {
    for (double lam : {0.5, 1.0, 2.0}) {
        auto t = integrate_krein([](double) { return Complex(0.0, 0.0); }, Complex(lam, 0.0), 100.0,
                                 1e-12);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.positions.size(); ++i) {
            const double r = t.positions[i];
            worst = std::max(worst, std::abs(t.P[i] - std::exp(Complex(0.0, lam * r))));
            worst = std::max(worst, std::abs(t.Pstar[i] - Complex(1.0, 0.0)));
        }
        REQUIRE(worst < 1e-10);
    }
}

TEST_CASE("constant real A at lambda zero decays symmetrically") {
    const double c = 0.4;
    auto t = integrate_krein([&](double) { return Complex(c, 0.0); }, Complex(0.0, 0.0), 10.0, 1e-12);
    for (std::size_t i = 0; i < t.positions.size(); i += 100) {
        const double want = std::exp(-c * t.positions[i]);
        REQUIRE(std::abs(t.P[i] - want) < 1e-10);
        REQUIRE(std::abs(t.Pstar[i] - want) < 1e-10);
    }
}

TEST_CASE("modulus conservation holds for random complex A at real lambda") {
    std::mt19937_64 gen(41);
    for (int trial = 0; trial < 6; ++trial) {
        auto A = random_complex_A(gen, 50.0, 0.2);
        const double lam = -3.0 + 6.0 * unit_draw(gen);
        auto t = integrate_krein(A, Complex(lam, 0.0), 50.0, 1e-10);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.positions.size(); ++i)
            worst = std::max(worst, std::abs(std::abs(t.P[i]) - std::abs(t.Pstar[i])));
        REQUIRE(worst < 1e-7);
        REQUIRE(t.max_conserved_residual() < 1e-6);
    }
}

TEST_CASE("P* dominates P in the upper half plane") {
    std::mt19937_64 gen(42);
    for (int trial = 0; trial < 4; ++trial) {
        auto A = random_complex_A(gen, 40.0, 0.2);
        const Complex lam(2.0 * unit_draw(gen) - 0.5, 0.3 + unit_draw(gen));
        auto t = integrate_krein(A, lam, 40.0, 1e-10);
        for (std::size_t i = 0; i < t.positions.size(); ++i)
            REQUIRE(std::abs(t.Pstar[i]) >= std::abs(t.P[i]) - 1e-9);
    }
}

TEST_CASE("P* is the reflected conjugate of P across the real axis") {
    std::mt19937_64 gen(43);
    auto A = random_complex_A(gen, 30.0, 0.25);
    const Complex lam(0.8, 0.6);
    auto t1 = integrate_krein(A, lam, 30.0, 1e-11);
    auto t2 = integrate_krein(A, std::conj(lam), 30.0, 1e-11);
    double worst = 0.0;
    for (std::size_t i = 0; i < t1.positions.size(); ++i) {
        const double r = t1.positions[i];
        const Complex want = std::exp(Complex(0.0, 1.0) * lam * r) * std::conj(t2.P[i]);
        worst = std::max(worst, std::abs(t1.Pstar[i] - want));
    }
    REQUIRE(worst < 1e-8);
}

TEST_CASE("Q equals the conjugate of P* for real A and real lambda") {
    std::mt19937_64 gen(44);
    auto a = random_real_a(gen, 30.0, 0.3);
    auto A = RealFunction::from_function([&](double x) { return 0.5 * a(x / 2.0); },
                                         uniform_grid(0.0, 60.0, 2401));
    auto t = integrate_krein(A, Complex(1.3, 0.0), 60.0, 1e-11);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.positions.size(); ++i)
        worst = std::max(worst, std::abs(t.Q[i] - std::conj(t.Pstar[i])));
    REQUIRE(worst < 1e-8);
}

TEST_CASE("free Dirac system is the rotation by lambda x") {
    for (double lam : {0.5, 1.0, 2.0}) {
        auto t = integrate_dirac([](double) { return 0.0; }, [](double) { return 0.0; }, lam, 100.0,
                                 1e-12);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.positions.size(); ++i) {
            worst = std::max(worst, std::abs(t.Phi[i] - std::cos(lam * t.positions[i])));
            worst = std::max(worst, std::abs(t.Psi[i] - std::sin(lam * t.positions[i])));
        }
        REQUIRE(worst < 1e-10);
    }
}

TEST_CASE("Dirac system at lambda zero integrates the a coefficient") {
    // Phi' = -a Phi, Psi stays zero
    auto a = RealFunction::from_function([](double x) { return 1.0 / (x + 1.0); },
                                         uniform_grid(0.0, 20.0, 801));
    auto t = integrate_dirac(a, [](double) { return 0.0; }, 0.0, 20.0, 1e-12);
    for (std::size_t i = 0; i < t.positions.size(); i += 64) {
        REQUIRE(t.Phi[i] == Catch::Approx(1.0 / (t.positions[i] + 1.0)).margin(1e-9));
        REQUIRE(std::abs(t.Psi[i]) < 1e-12);
    }
}

TEST_CASE("Krein trajectory reduces to the Dirac pair on the half grid") {
    std::mt19937_64 gen(45);
    for (int trial = 0; trial < 5; ++trial) {
        auto a = random_real_a(gen, 30.0, 0.3);
        auto A = RealFunction::from_function([&](double x) { return 0.5 * a(x / 2.0); },
                                             uniform_grid(0.0, 60.0, 2401));
        const double lam = 0.4 + 1.8 * unit_draw(gen);
        auto positions = uniform_grid(0.0, 60.0, 241);
        auto tk = integrate_krein(A, Complex(lam, 0.0), 60.0, 1e-11, positions);
        std::vector<double> half(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i) half[i] = positions[i] / 2.0;
        auto td = integrate_dirac(a, lam, 30.0, 1e-11, half);
        double worst = 0.0;
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const Complex phase = std::exp(Complex(0.0, lam * positions[i] / 2.0));
            const Complex want = phase * Complex(td.Phi[i], td.Psi[i]);
            worst = std::max(worst, std::abs(tk.P[i] - want));
        }
        REQUIRE(worst < 1e-7);
    }
}

TEST_CASE("Q trajectory is trivial without a coefficient and accepts a seed") {
    auto t = integrate_Q([](double) { return Complex(0.0, 0.0); }, Complex(1.0, 0.0), 50.0, 1e-12);
    for (const auto& v : t.Q) REQUIRE(std::abs(v - Complex(1.0, 0.0)) < 1e-12);

    auto t2 = integrate_Q([](double) { return Complex(0.0, 0.0); }, Complex(1.0, 0.0), 5.0, 1e-12,
                          {}, {}, Complex(0.3, -0.2));
    for (const auto& v : t2.Q) REQUIRE(std::abs(v - Complex(0.3, -0.2)) < 1e-12);
}

TEST_CASE("free u v pair carries a constant Wronskian") {
    const double E = 2.0, k = std::sqrt(E);
    auto pos = uniform_grid(0.0, 60.0, 601);
    auto uv = integrate_uv([](double) { return 0.0; }, E, pos, 1e-12);
    double worst = 0.0, wworst = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        worst = std::max(worst, std::abs(uv.u[i] - std::sin(k * pos[i]) / k));
        worst = std::max(worst, std::abs(uv.v[i] - std::cos(k * pos[i])));
        const double w = uv.u[i] * uv.vp[i] - uv.v[i] * uv.up[i];
        wworst = std::max(wworst, std::abs(w + 1.0));
    }
    REQUIRE(worst < 1e-9);
    REQUIRE(wworst < 1e-9);
}

TEST_CASE("transfer matrix has unit determinant along the free evolution") {
    auto pos = uniform_grid(0.0, 40.0, 81);
    auto samples = transfer_matrix([](double) { return 0.0; }, 1.5, pos);
    for (const auto& s : samples) {
        REQUIRE(s.det() == Catch::Approx(1.0).margin(1e-8));
        const double k = 1.5;  // spectral parameter, energy is its square
        REQUIRE(s.v == Catch::Approx(std::cos(k * s.position)).margin(1e-9));
        REQUIRE(s.u == Catch::Approx(std::sin(k * s.position) / k).margin(1e-9));
    }
}
