#pragma once

// Adaptive Dormand-Prince 5(4) for small fixed-dimension real systems.
// Complex trajectories are integrated as doubled real systems by the
// callers (the Krein Q equation involves conjugation and is only
// R-linear, so a complex-holomorphic stepper would be wrong there).

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace krein {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;                                // 0: choose automatically
    double h_max = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 200'000'000;
    // Optional position-dependent step cap, used to keep steps at or below
    // half the local sample spacing of interpolated coefficients.
    std::function<double(double)> max_step_at;
};

struct OdeStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

namespace dp5 {
// Butcher tableau (Dormand & Prince 1980), FSAL.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp5

// Integrates y' = rhs(x, y) from x0 toward x1 (either direction), landing
// exactly on each requested output point; y is updated in place to the
// state at x1.  on_sample(x, y) fires exactly once per xout entry, in
// order; xout must be sorted in the direction of integration and lie
// within [x0, x1].
template <std::size_t N, class F, class Callback>
OdeStats integrate_ode(F&& rhs, double x0, double x1, std::array<double, N>& y,
                       std::span<const double> xout, Callback&& on_sample,
                       const OdeOptions& opt = {}) {
    using State = std::array<double, N>;
    OdeStats stats;
    const double dir = (x1 >= x0) ? 1.0 : -1.0;

    auto scaled_err = [&](const State& y0, const State& y5, const State& err) {
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y5[i]));
            const double r = err[i] / sc;
            acc += r * r;
        }
        return std::sqrt(acc / N);
    };

    State k1;
    rhs(x0, y, k1);
    ++stats.rhs_evals;

    double h = opt.h_init;
    if (h == 0.0) {
        double ynorm = 0.0, fnorm = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            ynorm = std::max(ynorm, std::abs(y[i]));
            fnorm = std::max(fnorm, std::abs(k1[i]));
        }
        h = (fnorm > 0.0) ? 0.01 * std::max(ynorm, 1.0) / fnorm : 1e-3;
        h = std::min(h, std::abs(x1 - x0));
        if (h <= 0.0) h = 1e-6;
    }

    double x = x0;
    std::size_t next_out = 0;
    auto flush_outputs = [&] {
        while (next_out < xout.size() &&
               dir * (xout[next_out] - x) <= 1e-14 * std::max(1.0, std::abs(x))) {
            on_sample(xout[next_out], y);
            ++next_out;
        }
    };
    flush_outputs();

    const double hmin_floor = 16.0 * std::numeric_limits<double>::epsilon();

    while (dir * (x1 - x) > 0.0) {
        if (++stats.steps > opt.max_steps)
            throw std::runtime_error("integrate_ode: step budget exhausted at x = " + std::to_string(x));

        double target = x1;
        if (next_out < xout.size() && dir * (xout[next_out] - x1) < 0.0) target = xout[next_out];

        double hcap = opt.h_max;
        if (opt.max_step_at) hcap = std::min(hcap, std::max(opt.max_step_at(x), 1e-12));
        const double h_try = std::min(h, hcap);
        const bool clamped = dir * (target - x) < h_try;
        double hs = dir * std::min(h_try, dir * (target - x));

        State k2, k3, k4, k5, k6, k7, yt, y5;
        using namespace dp5;
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
        rhs(x + c2 * hs, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(x + c3 * hs, yt, k3);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(x + c4 * hs, yt, k4);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(x + c5 * hs, yt, k5);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(x + hs, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            y5[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(x + hs, y5, k7);
        stats.rhs_evals += 6;

        State err;
        for (std::size_t i = 0; i < N; ++i)
            err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double en = scaled_err(y, y5, err);

        if (en <= 1.0 || std::abs(hs) <= hmin_floor * std::max(1.0, std::abs(x))) {
            x += hs;
            y = y5;
            k1 = k7;  // FSAL
            flush_outputs();
            const double grow = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
            const double h_prop = std::abs(hs) * std::clamp(grow, 0.2, 5.0);
            h = clamped ? std::max(h, h_prop) : h_prop;  // keep natural step across output clamps
        } else {
            ++stats.rejected;
            h = std::abs(hs) * std::max(0.2, 0.9 * std::pow(en, -0.2));
        }
        if (!std::isfinite(en) || !std::isfinite(y[0]))
            throw std::runtime_error("integrate_ode: non-finite state at x = " + std::to_string(x));
    }
    flush_outputs();
    return stats;
}

}  // namespace krein
