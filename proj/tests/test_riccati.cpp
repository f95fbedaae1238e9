#include <catch2/catch_amalgamated.hpp>
#include <krein/families.hpp>
#include <krein/riccati.hpp>

#include <cmath>

using namespace krein;

namespace {

double weighted_error_vs_c(const RealFunction& a, double c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.grid()[i];
        worst = std::max(worst, (x + 1.0) * std::abs(a.values()[i] - c / (x + 1.0)));
    }
    return worst;
}

}  // namespace

TEST_CASE("contraction solver recovers both closed-form branches") {
    const double gamma = 0.2;
    // c solves c = c^2 - sign gamma, picked inside Omega
    struct Case { double sign, c; };
    const Case cases[] = {{-1.0, 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * gamma))},
                          {+1.0, 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * gamma))}};
    for (const auto& cs : cases) {
        auto fam = make_family("power_tail_W", {{"gamma", gamma}, {"sign", cs.sign}});
        auto sol = solve_contraction(*fam.W, gamma, 1e-10);
        REQUIRE(sol.kappa == Catch::Approx(0.5 * (1.0 - std::sqrt(1.0 - 4.0 * gamma))));
        REQUIRE(weighted_error_vs_c(sol.a, cs.c) < 1e-8);
        REQUIRE(sol.final_residual < 1e-10);
        // observed rate stays at or below the theoretical factor 2 kappa
        for (std::size_t i = 1; i < sol.contraction_rates.size(); ++i)
            REQUIRE(sol.contraction_rates[i] <= 2.0 * sol.kappa + 0.05);
    }
}

TEST_CASE("gamma outside the contraction window is rejected") {
    auto fam = make_family("power_tail_W", {{"gamma", 0.2}});
    REQUIRE_THROWS_AS(solve_contraction(*fam.W, 0.25), std::invalid_argument);
    REQUIRE_THROWS_AS(solve_contraction(*fam.W, 0.0), std::invalid_argument);
}

TEST_CASE("weight hypothesis violations are reported") {
    // W = 0.3/(x+1) declared with gamma = 0.2 breaks (x+1)|W| <= gamma
    auto g = graded_grid(0.0, 2000.0, 0.005);
    auto W = RealFunction::from_function([](double x) { return 0.3 / (x + 1.0); }, g,
                                         TailModel::power(0.3, 1.0));
    REQUIRE_THROWS_WITH(solve_contraction(W, 0.2), Catch::Matchers::ContainsSubstring("hypothesis"));
}

TEST_CASE("potentials from the solved branch close the q loop") {
    const double gamma = 0.2;
    auto fam = make_family("power_tail_W", {{"gamma", gamma}, {"sign", -1.0}});
    auto sol = solve_contraction(*fam.W, gamma, 1e-10);
    auto pots = potentials_from_a(sol.a);
    const double kappa = sol.kappa;

    // q = a^2 + a' = (kappa^2 - kappa)/(x+1)^2 = -gamma/(x+1)^2
    for (double x : {0.0, 3.0, 40.0}) {
        REQUIRE(pots.q(x) == Catch::Approx(-gamma / ((x + 1.0) * (x + 1.0))).margin(1e-6));
        REQUIRE(pots.q1(x) ==
                Catch::Approx((kappa * kappa + kappa) / ((x + 1.0) * (x + 1.0))).margin(1e-6));
    }

    // tail integral of q reproduces W
    auto W2 = tail_integral(pots.q);
    for (double x : {0.0, 5.0, 100.0})
        REQUIRE(W2(x) == Catch::Approx((*fam.W)(x)).margin(1e-6));
}

TEST_CASE("derivative rule is recorded in the potential pair") {
    auto fam = make_family("power_tail_W", {{"gamma", 0.1}});
    auto sol = solve_contraction(*fam.W, 0.1);
    auto pots = potentials_from_a(sol.a);
    REQUIRE_FALSE(pots.derivative_rule.empty());
}

TEST_CASE("potentials need enough nodes for the stencil") {
    RealFunction a({0.0, 1.0, 2.0, 3.0}, {0.1, 0.1, 0.1, 0.1});
    REQUIRE_THROWS_AS(potentials_from_a(a), std::invalid_argument);
}
