#pragma once

// Fixed point of a(x) = int_x^inf a^2(s) ds - W(x) by Picard iteration in
// the weighted space Omega = { g : |g(x)| <= kappa/(x+1) } with metric
// rho(g,h) = sup (x+1)|g-h|.  The map contracts with factor 2 kappa when
// sup (x+1)|W| <= gamma < 1/4, kappa = (1 - sqrt(1-4 gamma))/2.

#include <cmath>
#include <string>
#include <vector>

#include "sampled_function.hpp"

namespace krein {

struct RiccatiSolution {
    RealFunction a;
    double kappa = 0.0;
    double gamma = 0.0;
    std::size_t iterations = 0;
    double final_residual = 0.0;               // weighted sup of a - Ba
    std::vector<double> contraction_rates;     // metric(g_{k+1},g_k)/metric(g_k,g_{k-1})
};

struct PotentialPair {
    RealFunction q;   // a^2 + a'
    RealFunction q1;  // a^2 - a'
    std::string derivative_rule;
};

namespace detail {

// One application of B g = int_x^inf g^2 - W at the grid nodes; the tail of
// g^2 comes from g's fitted power model.
inline std::vector<double> apply_B(const std::vector<double>& grid, const std::vector<double>& g,
                                   const TailModel& g_tail, const std::vector<double>& Wv) {
    TailModel sq_tail;
    if (!g_tail.empty())
        sq_tail = TailModel::power(g_tail.amplitude * g_tail.amplitude, 2.0 * g_tail.exponent);
    std::vector<double> g2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
    RealFunction sq(grid, std::move(g2), sq_tail);
    auto cum = sq.cumulative_from_right();
    const double tail_part = sq_tail.empty() ? 0.0 : sq_tail.integral_from(grid.back());
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = cum[i] + tail_part - Wv[i];
    return out;
}

inline double weighted_sup_diff(const std::vector<double>& grid, const std::vector<double>& f,
                                const std::vector<double>& g) {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        m = std::max(m, (grid[i] + 1.0) * std::abs(f[i] - g[i]));
    return m;
}

}  // namespace detail

// W must satisfy (x+1)|W(x)| <= gamma at every working node; the working
// grid extends W's grid geometrically until (x+1) >= 10/tol so the weighted
// metric cannot hide tail residual.
inline RiccatiSolution solve_contraction(const RealFunction& W, double gamma, double tol = 1e-10,
                                         std::size_t max_iter = 200) {
    if (!(gamma > 0.0 && gamma < 0.25))
        throw std::invalid_argument("solve_contraction: need 0 < gamma < 1/4, got " +
                                    detail::fmt(gamma));
    const double kappa = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * gamma));

    std::vector<double> grid = W.grid();
    const double x_target = 10.0 / tol - 1.0;
    {
        double x = grid.back();
        while (x < x_target) {
            x = (x + 1.0) * 1.01 - 1.0;
            grid.push_back(std::min(x, x_target));
            if (grid.back() >= x_target) break;
        }
    }
    std::vector<double> Wv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Wv[i] = W(grid[i]);
        const double bound = (grid[i] + 1.0) * std::abs(Wv[i]);
        if (bound > gamma + 1e-12)
            throw std::invalid_argument("solve_contraction: hypothesis violated at x = " +
                                        detail::fmt(grid[i]) + ": (x+1)|W| = " + detail::fmt(bound) +
                                        " > gamma = " + detail::fmt(gamma));
    }

    auto fit_tail = [&](const std::vector<double>& g) {
        // exact fixed point for power-tail W behaves like c/(x+1)
        return TailModel::power(g.back() * (grid.back() + 1.0), 1.0);
    };

    std::vector<double> g(Wv.size());
    for (std::size_t i = 0; i < Wv.size(); ++i) g[i] = -Wv[i];  // g0 = B(0)

    RiccatiSolution sol;
    sol.kappa = kappa;
    sol.gamma = gamma;

    double prev_delta = -1.0;
    std::vector<double> history;
    for (std::size_t k = 0; k < max_iter; ++k) {
        auto next = detail::apply_B(grid, g, fit_tail(g), Wv);
        const double delta = detail::weighted_sup_diff(grid, next, g);
        history.push_back(delta);
        if (prev_delta > 0.0) sol.contraction_rates.push_back(delta / prev_delta);
        prev_delta = delta;
        g = std::move(next);
        sol.iterations = k + 1;
        if (delta <= 0.25 * tol) break;
        if (k + 1 == max_iter) {
            std::string hist;
            for (std::size_t j = history.size() > 6 ? history.size() - 6 : 0; j < history.size(); ++j)
                hist += " " + detail::fmt(history[j]);
            throw std::runtime_error("solve_contraction: no convergence in " +
                                     std::to_string(max_iter) + " iterations; residual history:" + hist);
        }
    }

    auto Bg = detail::apply_B(grid, g, fit_tail(g), Wv);
    sol.final_residual = detail::weighted_sup_diff(grid, g, Bg);

    // the fixed point can saturate the Omega bound (weighted norm exactly kappa),
    // so allow the discretization error of the fixed-point map on top of it
    const double omega_slack = 100.0 * tol + 1e-9;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if ((grid[i] + 1.0) * std::abs(g[i]) > kappa + omega_slack)
            throw std::runtime_error("solve_contraction: iterate left Omega at x = " +
                                     detail::fmt(grid[i]));

    sol.a = RealFunction(grid, std::move(g), fit_tail(Bg));
    return sol;
}

// q = a^2 + a', q1 = a^2 - a' with 5-point finite-difference derivatives
// (one-sided stencils at the two nodes nearest each end).
inline PotentialPair potentials_from_a(const RealFunction& a) {
    if (a.size() < 5)
        throw std::invalid_argument("potentials_from_a: grid too coarse for the 5-point stencil");
    auto d = a.node_derivatives();
    const auto& g = a.grid();
    const auto& av = a.values();
    std::vector<double> q(g.size()), q1(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        q[i] = av[i] * av[i] + d[i];
        q1[i] = av[i] * av[i] - d[i];
    }
    // Tail models: a ~ c(x+1)^-p gives a^2 ~ c^2 (x+1)^-2p and a' ~ -cp (x+1)^-(p+1);
    // keep the slower-decaying part (both, combined, when p = 1).
    TailModel qt, q1t;
    const TailModel& t = a.tail();
    if (t.kind == TailKind::power) {
        const double c = t.amplitude, p = t.exponent;
        if (p == 1.0) {
            qt = TailModel::power(c * c - c, 2.0);
            q1t = TailModel::power(c * c + c, 2.0);
        } else if (2.0 * p < p + 1.0) {
            qt = q1t = TailModel::power(c * c, 2.0 * p);
        } else {
            qt = TailModel::power(-c * p, p + 1.0);
            q1t = TailModel::power(c * p, p + 1.0);
        }
    }
    PotentialPair out{RealFunction(g, std::move(q), qt), RealFunction(g, std::move(q1), q1t),
                      "5-point Fornberg stencils, one-sided at boundary nodes"};
    return out;
}

}  // namespace krein
