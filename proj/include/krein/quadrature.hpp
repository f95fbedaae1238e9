#pragma once

// Generic quadratures: adaptive Simpson for smooth one-off integrals and
// Filon composite rules for cos/sin transforms of sampled data.  The Filon
// weights treat the oscillatory factor exactly, so accuracy is set by how
// well piecewise quadratics capture the envelope, not by x*h.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace krein {

namespace detail {

template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Filon moment weights for theta = x*h; Taylor branch keeps the small-theta
// cancellation (theta^3 denominators) out of double-precision trouble.
struct FilonWeights {
    double alpha, beta, gamma;
    explicit FilonWeights(double theta) {
        const double t = theta;
        if (std::abs(t) < 0.1) {
            const double t2 = t * t;
            alpha = t * t2 * (2.0 / 45 + t2 * (-2.0 / 315 + t2 * (2.0 / 4725)));
            beta = 2.0 / 3 + t2 * (2.0 / 15 + t2 * (-4.0 / 105 + t2 * (2.0 / 567)));
            gamma = 4.0 / 3 + t2 * (-2.0 / 15 + t2 * (1.0 / 210 + t2 * (-1.0 / 11340)));
        } else {
            const double s = std::sin(t), c = std::cos(t), t3 = t * t * t;
            alpha = (t * t + t * s * c - 2.0 * s * s) / t3;
            beta = 2.0 * (t * (1.0 + c * c) - 2.0 * s * c) / t3;
            gamma = 4.0 * (s - t * c) / t3;
        }
    }
};

// int_{w0}^{w0+(n-1)h} f(w) cos(x w) dw from uniform samples f (n odd).
inline double filon_cos(const std::vector<double>& f, double w0, double h, double x) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("filon_cos: need an odd sample count >= 3");
    const FilonWeights W(x * h);
    const double wa = w0, wb = w0 + h * double(n - 1);
    double ce = 0.0, co = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double cj = f[j] * std::cos(x * (w0 + h * double(j)));
        if (j % 2 == 0) ce += cj;
        else co += cj;
    }
    ce -= 0.5 * (f.front() * std::cos(x * wa) + f.back() * std::cos(x * wb));
    return h * (W.alpha * (f.back() * std::sin(x * wb) - f.front() * std::sin(x * wa)) +
                W.beta * ce + W.gamma * co);
}

// int_{w0}^{w0+(n-1)h} f(w) sin(x w) dw from uniform samples f (n odd).
inline double filon_sin(const std::vector<double>& f, double w0, double h, double x) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("filon_sin: need an odd sample count >= 3");
    const FilonWeights W(x * h);
    const double wa = w0, wb = w0 + h * double(n - 1);
    double se = 0.0, so = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double sj = f[j] * std::sin(x * (w0 + h * double(j)));
        if (j % 2 == 0) se += sj;
        else so += sj;
    }
    se -= 0.5 * (f.front() * std::sin(x * wa) + f.back() * std::sin(x * wb));
    return h * (-W.alpha * (f.back() * std::cos(x * wb) - f.front() * std::cos(x * wa)) +
                W.beta * se + W.gamma * so);
}

}  // namespace krein
