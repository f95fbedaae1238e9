#pragma once

// Coefficient families and synthesis: closed-form potential/tail bundles,
// tail integration, and cosine-transform synthesis of potentials from a
// smooth even profile with the q^(0)*chi split.

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "quadrature.hpp"
#include "sampled_function.hpp"

namespace krein {

struct CoefficientBundle {
    std::optional<RealFunction> q;  // potential
    std::optional<RealFunction> W;  // tail integral of q
    std::optional<RealFunction> a;  // Riccati representative, q = a^2 + a'
    std::optional<RealFunction> A;  // Krein coefficient, A(x) = a(x/2)/2
    std::optional<RealFunction> b;  // imaginary-part coefficient, 0 for real kernels
    std::string family;
    std::map<std::string, double> params;
};

using Params = std::map<std::string, double>;

namespace detail {

inline double get_param(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline void reject_unknown(const Params& p, std::initializer_list<const char*> known,
                           const std::string& family) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const char* name : known)
            if (k == name) { ok = true; break; }
        if (!ok)
            throw std::invalid_argument("make_family(" + family + "): unknown parameter '" + k + "'");
    }
}

}  // namespace detail

// Phase-aware grid for sin(x^beta) envelopes: spacing limited both by an
// absolute cap and by a fixed number of samples per local oscillation period.
inline std::vector<double> oscillation_grid(double xmax, double beta, double dx_cap = 0.05,
                                            int per_period = 16) {
    std::vector<double> g{0.0};
    double x = 0.0;
    const double dphi = 2.0 * pi / per_period;
    while (x < xmax) {
        const double rate = (x > 0.0) ? beta * std::pow(x, beta - 1.0) : 0.0;
        const double step = (rate > 0.0) ? std::min(dx_cap, dphi / rate) : dx_cap;
        x += step;
        if (x >= xmax) break;
        g.push_back(x);
    }
    g.push_back(xmax);
    return g;
}

// name in {free, power_tail_W, vnw, oscillatory_A, gaussian_qhat, constant_A}.
// Empty grid selects a per-family default.  Fields not defined in closed
// form by the family stay absent.
inline CoefficientBundle make_family(const std::string& name, const Params& params,
                                     std::vector<double> grid = {}) {
    CoefficientBundle bundle;
    bundle.family = name;
    bundle.params = params;

    if (name == "free") {
        detail::reject_unknown(params, {"xmax"}, name);
        const double xmax = detail::get_param(params, "xmax", 100.0);
        if (grid.empty()) grid = uniform_grid(0.0, xmax, 501);
        auto zero = RealFunction::from_function([](double) { return 0.0; }, grid);
        bundle.q = zero;
        bundle.W = zero;
        bundle.a = zero;
        bundle.A = zero;
        bundle.b = zero;
        return bundle;
    }

    if (name == "power_tail_W") {
        detail::reject_unknown(params, {"gamma", "sign", "strict", "xmax"}, name);
        auto it = params.find("gamma");
        if (it == params.end()) throw std::invalid_argument("make_family(power_tail_W): gamma required");
        const double gamma = it->second;
        const double sign = detail::get_param(params, "sign", -1.0);
        const bool strict = detail::get_param(params, "strict", 1.0) != 0.0;
        if (!(gamma > 0.0))
            throw std::invalid_argument("make_family(power_tail_W): gamma must be > 0, got " +
                                        detail::fmt(gamma));
        if (strict && gamma >= 0.25)
            throw std::invalid_argument("make_family(power_tail_W): gamma = " + detail::fmt(gamma) +
                                        " outside strict contraction regime (need gamma < 1/4)");
        if (sign != 1.0 && sign != -1.0)
            throw std::invalid_argument("make_family(power_tail_W): sign must be +1 or -1");
        const double xmax = detail::get_param(params, "xmax", 2000.0);
        if (grid.empty()) grid = graded_grid(0.0, xmax, 0.005);
        const double c = sign * gamma;
        bundle.W = RealFunction::from_function([c](double x) { return c / (x + 1.0); }, grid,
                                               TailModel::power(c, 1.0));
        bundle.q = RealFunction::from_function([c](double x) { return c / ((x + 1.0) * (x + 1.0)); },
                                               grid, TailModel::power(c, 2.0));
        return bundle;
    }

    if (name == "vnw") {
        detail::reject_unknown(params, {"xmax", "dx"}, name);
        const double xmax = detail::get_param(params, "xmax", 3000.0);
        const double dx = detail::get_param(params, "dx", 0.02);
        if (grid.empty()) grid = uniform_grid(0.0, xmax, std::size_t(std::ceil(xmax / dx)) + 1);
        auto qf = [](double x) { return (x == 0.0) ? 16.0 : 8.0 * std::sin(2.0 * x) / x; };
        // 8 sin(2x)/x vs the representable 8 sin(2x)/(x+1): relative tail
        // mismatch O(1/x), negligible once the grid runs long enough.
        bundle.q = RealFunction::from_function(qf, grid, TailModel::power_sin(8.0, 1.0, 2.0, 0.0));
        return bundle;
    }

    if (name == "oscillatory_A") {
        detail::reject_unknown(params, {"alpha", "beta", "xmax"}, name);
        const double alpha = detail::get_param(params, "alpha", 0.25);
        const double beta = detail::get_param(params, "beta", 1.6);
        const double xmax = detail::get_param(params, "xmax", 600.0);
        if (!(beta > 0.0) || !(alpha > 0.0))
            throw std::invalid_argument("make_family(oscillatory_A): need alpha > 0 and beta > 0");
        if (grid.empty()) grid = oscillation_grid(xmax, beta);
        auto Af = [alpha, beta](double x) {
            return std::pow(x * x + 1.0, -alpha) * std::sin(std::pow(x, beta));
        };
        // Envelope (x^2+1)^(-alpha) ~ (x+1)^(-2 alpha); the tail model keeps
        // the local frequency frozen at the grid end value.
        const double wend = beta * std::pow(xmax, beta - 1.0);
        const double phend = std::pow(xmax, beta) - wend * xmax;
        bundle.A = RealFunction::from_function(Af, grid,
                                               TailModel::power_sin(1.0, 2.0 * alpha, wend, phend));
        return bundle;
    }

    if (name == "gaussian_qhat") {
        detail::reject_unknown(params, {"amp", "xmax"}, name);
        const double amp = detail::get_param(params, "amp", 1.0);
        const double xmax = detail::get_param(params, "xmax", 40.0);
        if (grid.empty()) grid = uniform_grid(0.0, xmax, std::size_t(std::ceil(xmax / 0.02)) + 1);
        const double rpi = std::sqrt(pi);
        bundle.q = RealFunction::from_function(
            [amp, rpi](double x) { return amp * std::exp(-x * x / 4.0) / rpi; }, grid);
        bundle.W = RealFunction::from_function([amp](double x) { return amp * std::erfc(x / 2.0); },
                                               grid);
        return bundle;
    }

    if (name == "constant_A") {
        detail::reject_unknown(params, {"c", "xmax"}, name);
        auto it = params.find("c");
        if (it == params.end()) throw std::invalid_argument("make_family(constant_A): c required");
        const double c = it->second;
        const double xmax = detail::get_param(params, "xmax", 200.0);
        if (grid.empty()) grid = uniform_grid(0.0, xmax, 2001);
        bundle.A = RealFunction::from_function([c](double) { return c; }, grid);
        bundle.a = RealFunction::from_function([c](double) { return 2.0 * c; }, grid);
        bundle.q = RealFunction::from_function([c](double) { return 4.0 * c * c; }, grid);
        return bundle;
    }

    throw std::invalid_argument(
        "make_family: unknown family '" + name +
        "' (expected one of power_tail_W, vnw, oscillatory_A, gaussian_qhat, constant_A, free)");
}

// W(x) = int_x^inf q: panel quadrature over the grid plus the closed-form
// tail.  W inherits a tail model derived from q's (exact for plain powers,
// leading integration-by-parts term for oscillatory ones).
inline RealFunction tail_integral(const RealFunction& q) {
    if (!q.tail().integral_converges())
        throw std::domain_error("tail_integral: divergent tail model, exponent p = " +
                                detail::fmt(q.tail().exponent));
    const double tail_at_end = q.tail().empty() ? 0.0 : q.tail().integral_from(q.x_end());
    auto cum = q.cumulative_from_right();
    std::vector<double> W(cum.size());
    for (std::size_t i = 0; i < cum.size(); ++i) W[i] = cum[i] + tail_at_end;

    TailModel wt;  // d/dx of these models reproduces -q's leading tail term
    const TailModel& t = q.tail();
    switch (t.kind) {
        case TailKind::none: break;
        case TailKind::power:
            wt = TailModel::power(t.amplitude / (t.exponent - 1.0), t.exponent - 1.0);
            break;
        case TailKind::power_sin:
            wt = TailModel::power_cos(t.amplitude / t.omega, t.exponent, t.omega, t.phase);
            break;
        case TailKind::power_cos:
            wt = TailModel::power_sin(-t.amplitude / t.omega, t.exponent, t.omega, t.phase);
            break;
    }
    return RealFunction(q.grid(), std::move(W), wt);
}

// Smooth cutoff: 1 on [0, h], C-smooth fall through exp(1 - 1/(1-t^2)) on
// (h, 2h), 0 beyond, h = cutoff_halfwidth.
inline double smooth_cutoff(double omega, double halfwidth) {
    const double t = omega / (2.0 * halfwidth);
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    const double u = 2.0 * t - 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

struct CosTransformResult {
    RealFunction q;    // (2/pi) int qhat(w) cos(w x) dw
    RealFunction psi;  // same transform of psihat = qhat - qhat(0) chi
    RealFunction W;    // -(2/pi) int (psihat(w)/w) sin(w x) dw  ( = int_x^inf psi )
    double qhat0;
};

// Splits qhat = qhat(0) chi + psihat and synthesizes q, psi, W on x_grid by
// Filon quadrature over qhat's uniform grid.
inline CosTransformResult cos_transform_synthesize(const RealFunction& qhat,
                                                   double cutoff_halfwidth,
                                                   const std::vector<double>& x_grid) {
    const auto& wg = qhat.grid();
    const std::size_t n = wg.size();
    if (n < 5) throw std::invalid_argument("cos_transform_synthesize: need at least 5 samples");
    if (wg.front() != 0.0)
        throw std::invalid_argument("cos_transform_synthesize: qhat grid must start at omega = 0");
    const double h = wg[1] - wg[0];
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (std::abs((wg[i + 1] - wg[i]) - h) > 1e-9 * h)
            throw std::invalid_argument("cos_transform_synthesize: qhat grid must be uniform");
    if (!(cutoff_halfwidth > 0.0))
        throw std::invalid_argument("cos_transform_synthesize: cutoff_halfwidth must be > 0");
    if (h > cutoff_halfwidth / 8.0)
        throw std::invalid_argument(
            "cos_transform_synthesize: qhat sampling too coarse to resolve the cutoff (need spacing <= "
            "halfwidth/8, have " + detail::fmt(h) + " vs halfwidth " + detail::fmt(cutoff_halfwidth) + ")");
    if (wg.back() < 2.0 * cutoff_halfwidth)
        throw std::invalid_argument("cos_transform_synthesize: qhat grid must cover the cutoff support");

    std::size_t m = n;             // Filon needs an odd count; drop the last sample if even
    if (m % 2 == 0) m -= 1;

    const double qhat0 = qhat.values()[0];
    std::vector<double> qh(m), ps(m), lh(m);
    for (std::size_t i = 0; i < m; ++i) {
        qh[i] = qhat.values()[i];
        ps[i] = qh[i] - qhat0 * smooth_cutoff(wg[i], cutoff_halfwidth);
    }
    // psihat(0) = 0 by construction; psihat(w)/w at 0 is the derivative,
    // taken from a 5-point stencil.
    {
        std::vector<double> xs(wg.begin(), wg.begin() + 5);
        auto w5 = fd_weights(0.0, xs, 1);
        double d0 = 0.0;
        for (std::size_t k = 0; k < 5; ++k) d0 += w5[k] * ps[k];
        lh[0] = d0;
    }
    for (std::size_t i = 1; i < m; ++i) lh[i] = ps[i] / wg[i];

    std::vector<double> qv(x_grid.size()), pv(x_grid.size()), wv(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        const double x = x_grid[j];
        qv[j] = (2.0 / pi) * filon_cos(qh, 0.0, h, x);
        pv[j] = (2.0 / pi) * filon_cos(ps, 0.0, h, x);
        wv[j] = -(2.0 / pi) * filon_sin(lh, 0.0, h, x);
    }
    CosTransformResult out{RealFunction(x_grid, std::move(qv)), RealFunction(x_grid, std::move(pv)),
                           RealFunction(x_grid, std::move(wv)), qhat0};
    return out;
}

}  // namespace krein
