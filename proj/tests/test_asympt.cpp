#include <catch2/catch_amalgamated.hpp>
#include <krein/asympt.hpp>

#include <cmath>
#include <random>

using namespace krein;

TEST_CASE("sinusoid fit recovers amplitude and phase") {
    const std::size_t n = 6001;
    auto x = uniform_grid(0.0, 60.0, n);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = 0.7 * std::sin(2.0 * x[i] + 0.4);

    auto fit = fit_sin(x, u, 2.0, 10.0, 60.0, 5);
    REQUIRE(fit.C == Catch::Approx(0.7).margin(1e-10));
    REQUIRE(fit.phi == Catch::Approx(0.4).margin(1e-10));
    for (double r : fit.residual_curve) REQUIRE(r < 1e-9);

    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double noise = 1e-3;
    for (std::size_t i = 0; i < n; ++i) u[i] += noise * unif(gen);
    auto fn = fit_sin(x, u, 2.0, 10.0, 60.0, 5);
    REQUIRE(std::abs(fn.C - 0.7) < 3.0 * noise);
    REQUIRE(std::abs(fn.phi - 0.4) < 3.0 * noise);
}

TEST_CASE("sinusoid fit window validation") {
    auto x = uniform_grid(0.0, 60.0, 601);
    std::vector<double> u(x.size(), 1.0);
    REQUIRE_THROWS_WITH(fit_sin(x, u, 2.0, 0.0, 10.0, 2),
                        Catch::Matchers::ContainsSubstring("4 periods"));
    REQUIRE_THROWS_WITH(fit_sin(x, u, 2.0, 10.0, 80.0, 2),
                        Catch::Matchers::ContainsSubstring("outside trajectory"));
    REQUIRE_THROWS_AS(fit_sin(x, u, -1.0, 0.0, 60.0, 2), std::invalid_argument);
}

TEST_CASE("trailing-decade growth exponent") {
    auto x = uniform_grid(1.0, 1000.0, 4001);
    std::vector<double> p(x.size()), lin(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        p[i] = std::pow(x[i] + 1.0, 0.3);
        lin[i] = x[i];
    }
    REQUIRE(growth_exponent(x, p) == Catch::Approx(0.3).margin(0.01));
    REQUIRE(growth_exponent(x, lin) == Catch::Approx(1.0).margin(1e-12));

    std::vector<double> bad(x.size(), 1.0);
    bad[3000] = -2.0;
    REQUIRE_THROWS_AS(growth_exponent(x, bad), std::domain_error);
    REQUIRE_THROWS_AS(growth_exponent({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("free solutions sit in the middle of the subordinacy sandwich") {
    auto positions = uniform_grid(0.0, 1000.0, 4001);
    auto uv = integrate_uv([](double) { return 0.0; }, 1.0, positions, 1e-10);
    auto d = subordinacy_sandwich(uv, 0.0, 0.1);
    REQUIRE(d.exp_u == Catch::Approx(1.0).margin(0.02));
    REQUIRE(d.exp_v == Catch::Approx(1.0).margin(0.02));
    REQUIRE(d.sandwich == Verdict::hold);
    REQUIRE(d.wronskian == Catch::Approx(-1.0).margin(1e-7));
    REQUIRE(d.eta_candidate == Catch::Approx(1.0).margin(0.05));
    REQUIRE(d.zeta_boundary > 0.85);
    REQUIRE(d.zeta_boundary < 1.05);
}

TEST_CASE("planted power-law pair maps to the expected boundary exponent") {
    // u = x^0.2, v = x^{-0.15}: windowed L2 masses grow like x^1.4 and x^0.7,
    // so u I^u (I^v)^{-zeta} stops increasing near zeta = 2 (minus the finite-x
    // correction) and eta = 2*0.7/2.1
    UvTrajectory uv;
    const std::size_t n = 1601;
    uv.positions.resize(n);
    const double ratio = std::pow(1000.0, 1.0 / double(n - 1));
    double xv = 1.0;
    for (std::size_t i = 0; i < n; ++i, xv *= ratio) uv.positions[i] = xv;
    uv.u.resize(n); uv.up.resize(n); uv.v.resize(n); uv.vp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = uv.positions[i];
        uv.u[i] = std::pow(t, 0.2);
        uv.up[i] = 0.2 * std::pow(t, -0.8);
        uv.v[i] = std::pow(t, -0.15);
        uv.vp[i] = -0.15 * std::pow(t, -1.15);
    }
    auto d = subordinacy_sandwich(uv, 0.2, 0.1);
    REQUIRE(d.exp_u == Catch::Approx(1.4).margin(0.03));
    REQUIRE(d.exp_v == Catch::Approx(0.7).margin(0.03));
    REQUIRE(d.eta_candidate == Catch::Approx(1.4 / 2.1).margin(0.02));
    REQUIRE(d.zeta_boundary > 1.8);
    REQUIRE(d.zeta_boundary <= 2.0);
    // |W| = 0.35 x^{-0.95} stays above the dependence cutoff on [1, 1000]
    REQUIRE(-d.wronskian == Catch::Approx(0.35 * std::pow(1000.0, -0.95)).margin(1e-6));

    for (std::size_t i = 0; i < n; ++i) { uv.v[i] = uv.u[i]; uv.vp[i] = uv.up[i]; }
    REQUIRE_THROWS_WITH(subordinacy_sandwich(uv, 0.2),
                        Catch::Matchers::ContainsSubstring("Wronskian"));
}

TEST_CASE("free boundary-angle scan is dip-free") {
    auto res = embedded_scan([](double) { return 0.0; }, {0.5, 1.0, 1.5, 2.0}, 60.0, 1e-10);
    REQUIRE(res.minima.empty());
    for (double r : res.tail_ratio) {
        REQUIRE(r > 0.5);
        REQUIRE(r < 2.0);
    }
}

TEST_CASE("inverse-square well keeps a dip-free continuum") {
    auto q = [](double x) { return -0.19 / ((x + 1.0) * (x + 1.0)); };
    std::vector<double> energies;
    for (int k = 0; k < 8; ++k) energies.push_back(0.3 + 0.2 * double(k));
    auto res = embedded_scan(q, energies, 100.0, 1e-10);
    REQUIRE(res.minima.empty());
    REQUIRE(res.median_ratio > 0.3);
}

TEST_CASE("iterated-integral series: zero coefficient") {
    RealFunction A(uniform_grid(0.0, 10.0, 101), std::vector<double>(101, 0.0));
    auto ev = ck_series_Q(A, 1.0, 3, {0.0, 5.0, 10.0});
    for (const auto& s : ev.S) REQUIRE(std::abs(s - Complex(1.0, 0.0)) < 1e-14);
    for (double t : ev.term_sup) REQUIRE(t < 1e-14);
    REQUIRE(ev.int_absA == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(ev.ode_gap == -1.0);
}

TEST_CASE("iterated-integral series: first-order value on a box coefficient") {
    RealFunction A(uniform_grid(0.0, 1.0, 501), std::vector<double>(501, 0.1));
    auto ev = ck_series_Q(A, 1.0, 1, {0.0});
    const Complex expected = Complex(1.0, 0.0) +
                             0.1 * Complex(std::sin(1.0), std::cos(1.0) - 1.0);
    REQUIRE(std::abs(ev.S[0] - expected) < 1e-9);
}

TEST_CASE("iterated-integral series: factorial envelope and ODE agreement") {
    const double amp = 0.05, p = 1.5;
    auto g = uniform_grid(0.0, 80.0, 2001);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = amp * std::pow(g[i] + 1.0, -p);
    RealFunction A(g, v, TailModel::power(amp, p));

    auto xg = uniform_grid(0.0, 40.0, 81);
    double prev_gap = 1e300;
    for (std::size_t order : {1, 2, 3}) {
        auto ev = ck_series_Q(A, 1.0, order, xg, true);
        REQUIRE(ev.int_absA == Catch::Approx(0.1).margin(1e-6));
        double env = 1.0;
        for (std::size_t k = 1; k <= order; ++k) {
            env *= 0.1 / double(k);
            REQUIRE(ev.term_sup[k - 1] <= env + 1e-6);
        }
        REQUIRE(ev.ode_gap >= 0.0);
        REQUIRE(ev.ode_gap < prev_gap);
        prev_gap = ev.ode_gap;
    }
    // remaining terms past order 3 are bounded by 0.1^4/4! plus the
    // beyond-grid truncation of the deeper chains
    REQUIRE(prev_gap < 1e-5);

    RealFunction bad(g, v, TailModel::power(1.0, 0.8));
    REQUIRE_THROWS_AS(ck_series_Q(bad, 1.0, 2, xg), std::domain_error);
    REQUIRE_THROWS_AS(ck_series_Q(A, 1.0, 6, xg), std::invalid_argument);
}
