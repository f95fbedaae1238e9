#include <catch2/catch_amalgamated.hpp>
#include <krein/accelerant.hpp>
#include <krein/krein_system.hpp>

#include <cmath>

using namespace krein;

TEST_CASE("kernel samples must start at t = 0") {
    auto g = uniform_grid(0.5, 2.0, 16);
    std::vector<Complex> v(g.size(), Complex(0.1, 0.0));
    REQUIRE_THROWS_AS(AccelerantKernel(ComplexFunction(g, v)), std::invalid_argument);
}

TEST_CASE("negative arguments reflect through conjugation") {
    auto H = AccelerantKernel::from_function([](double t) { return Complex(t, 1.0 + t); }, 2.0, 65);
    const Complex plus = H(0.7), minus = H(-0.7);
    REQUIRE(minus.real() == Catch::Approx(plus.real()).margin(1e-12));
    REQUIRE(minus.imag() == Catch::Approx(-plus.imag()).margin(1e-12));
}

TEST_CASE("constant accelerant has the rational boundary trace at every resolution") {
    const double c = 0.3, r = 2.0;
    auto H = AccelerantKernel::from_function([c](double) { return Complex(c, 0.0); }, r, 301);
    for (std::size_t n : {64, 128, 256}) {
        auto sol = solve_resolvent(H, r, n, uniform_grid(0.0, r, 65));
        double worst = 0.0;
        for (std::size_t i = 0; i < sol.rho_grid.size(); ++i)
            worst = std::max(worst,
                             std::abs(sol.A_trace[i] - Complex(c / (1.0 + c * sol.rho_grid[i]), 0.0)));
        // trapezoid weights sum exactly to rho, so the constant kernel is
        // solved exactly at any n
        REQUIRE(worst < 1e-12);
        REQUIRE(sol.real_kernel);
        REQUIRE(sol.min_eig > 0.0);
    }
}

TEST_CASE("resolvent of a Hermitian kernel is Hermitian") {
    auto H = AccelerantKernel::from_function(
        [](double t) { return Complex(0.4 * std::exp(-t * t), 0.2 * t * std::exp(-t)); }, 2.0, 401);
    auto sol = solve_resolvent(H, 2.0, 96, {0.0, 2.0});
    double worst = 0.0;
    for (Eigen::Index j = 0; j < sol.Gamma.rows(); ++j)
        for (Eigen::Index k = 0; k < sol.Gamma.cols(); ++k)
            worst = std::max(worst, std::abs(sol.Gamma(j, k) - std::conj(sol.Gamma(k, j))));
    REQUIRE(worst < 1e-10);
}

TEST_CASE("positivity failures abort the solve") {
    auto H = AccelerantKernel::from_function([](double) { return Complex(-1.0, 0.0); }, 2.0, 65);
    REQUIRE(positivity_min_eig(H, 2.0, 64) < 0.0);
    REQUIRE_THROWS_WITH(solve_resolvent(H, 2.0, 64, {}),
                        Catch::Matchers::ContainsSubstring("not positive"));
}

TEST_CASE("zero kernel reproduces the free polynomial pair") {
    auto H = AccelerantKernel::from_function([](double) { return Complex(0.0, 0.0); }, 3.0, 65);
    auto sol = solve_resolvent(H, 3.0, 64, {0.0, 3.0});
    for (double lam : {0.5, 2.0}) {
        auto [P, Pstar] = pp_from_resolvent(sol, Complex(lam, 0.0));
        REQUIRE(std::abs(P - std::exp(Complex(0.0, lam * 3.0))) < 1e-12);
        REQUIRE(std::abs(Pstar - Complex(1.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("smooth kernel discretization converges at second order") {
    const double r = 2.0;
    auto f = [](double t) { return Complex(0.4 * std::exp(-t * t), 0.0); };
    auto H = AccelerantKernel::from_function(f, r, 2049);
    auto ref = solve_resolvent(H, r, 512, {r});
    std::vector<double> errs;
    for (std::size_t n : {32, 64, 128}) {
        auto sol = solve_resolvent(H, r, n, {r});
        errs.push_back(std::abs(sol.A_trace[0] - ref.A_trace[0]));
    }
    REQUIRE(std::log2(errs[0] / errs[1]) > 1.8);
    REQUIRE(std::log2(errs[1] / errs[2]) > 1.8);
}

TEST_CASE("resolvent trace feeds back into the canonical system") {
    // route 1: A(rho) from the resolvent; route 2: integrate the system with
    // that A and compare P, P* at r against the quadrature formulas
    const double r = 2.0;
    auto f = [](double t) { return Complex(0.35 * std::exp(-0.5 * t * t), 0.0); };
    auto H = AccelerantKernel::from_function(f, r, 2049);
    auto sol = solve_resolvent(H, r, 256, uniform_grid(0.0, r, 129));

    std::vector<double> Ag = sol.rho_grid;
    std::vector<double> Av(Ag.size());
    for (std::size_t i = 0; i < Ag.size(); ++i) Av[i] = sol.A_trace[i].real();
    RealFunction A(Ag, Av);

    for (double lam : {0.5, 1.0, 2.0}) {
        auto [P_res, Pstar_res] = pp_from_resolvent(sol, Complex(lam, 0.0));
        auto traj = integrate_krein(A, Complex(lam, 0.0), r, 1e-11, {0.0, r});
        REQUIRE(std::abs(P_res - traj.P.back()) < 1e-4);
        REQUIRE(std::abs(Pstar_res - traj.Pstar.back()) < 1e-4);
    }
}
