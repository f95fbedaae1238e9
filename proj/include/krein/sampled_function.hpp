#pragma once

// Sampled coefficient functions on a strictly increasing grid with an
// optional analytic tail model past the last node.  Interpolation is
// monotone cubic (PCHIP); quadrature integrates the interpolant segment
// by segment and closes the tail analytically.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace krein {

using Complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tail models: value(x) = c*(x+1)^(-p) optionally times sin/cos(omega*x+phi).

enum class TailKind { none, power, power_sin, power_cos };

struct TailModel {
    TailKind kind = TailKind::none;
    double amplitude = 0.0;  // c
    double exponent = 0.0;   // p
    double omega = 0.0;
    double phase = 0.0;

    static TailModel power(double c, double p) { return {TailKind::power, c, p, 0.0, 0.0}; }
    static TailModel power_sin(double c, double p, double w, double ph = 0.0) {
        return {TailKind::power_sin, c, p, w, ph};
    }
    static TailModel power_cos(double c, double p, double w, double ph = 0.0) {
        return {TailKind::power_cos, c, p, w, ph};
    }

    bool empty() const { return kind == TailKind::none || amplitude == 0.0; }

    double value(double x) const {
        switch (kind) {
            case TailKind::none: return 0.0;
            case TailKind::power: return amplitude * std::pow(x + 1.0, -exponent);
            case TailKind::power_sin:
                return amplitude * std::pow(x + 1.0, -exponent) * std::sin(omega * x + phase);
            case TailKind::power_cos:
                return amplitude * std::pow(x + 1.0, -exponent) * std::cos(omega * x + phase);
        }
        return 0.0;
    }

    // Convergence of int_x^inf: plain power needs p > 1, oscillatory needs
    // p > 0 (conditional convergence via cancellation).
    bool integral_converges() const {
        if (empty()) return true;
        if (kind == TailKind::power) return exponent > 1.0;
        return exponent > 0.0 && omega != 0.0;
    }

    // int_x^inf of the model.  Oscillatory kinds use the integration-by-parts
    // asymptotic series; terms are added while they shrink, so the truncation
    // error is bounded by the first omitted term (valid once omega*(x+1) > p).
    double integral_from(double x) const {
        if (empty()) return 0.0;
        if (!integral_converges())
            throw std::domain_error("tail integral diverges: exponent p = " + detail::fmt(exponent) +
                                    (kind == TailKind::power ? " (need p > 1)" : " (need p > 0 and omega != 0)"));
        if (kind == TailKind::power)
            return amplitude * std::pow(x + 1.0, 1.0 - exponent) / (exponent - 1.0);
        const Complex I = oscillatory_integral_from(x);
        return (kind == TailKind::power_sin) ? I.imag() : I.real();
    }

    // int_x^inf c (s+1)^(-p) e^{i(omega s + phase)} ds by repeated parts:
    // I(p) = -c (x+1)^(-p) E/(i w) + (p/(i w)) I(p+1),  E = e^{i(w x + phase)}.
    // Asymptotic series; truncation error is below the first omitted term.
    Complex oscillatory_integral_from(double x) const {
        const Complex iw(0.0, omega);
        const Complex E = std::exp(Complex(0.0, omega * x + phase));
        Complex mult = 1.0;
        double p = exponent;
        Complex sum = 0.0;
        double prev_mag = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 24; ++k) {
            const Complex term = -mult * amplitude * std::pow(x + 1.0, -p) * E / iw;
            const double mag = std::abs(term);
            if (mag >= prev_mag) break;  // smallest-term truncation
            sum += term;
            if (mag < 1e-18 * (1.0 + std::abs(sum))) break;
            prev_mag = mag;
            mult *= p / iw;
            p += 1.0;
        }
        return sum;
    }
};

// ---------------------------------------------------------------------------
// Grid builders.

inline std::vector<double> uniform_grid(double a, double b, std::size_t n) {
    if (n < 2 || !(b > a)) throw std::invalid_argument("uniform_grid: need n >= 2 and b > a");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * double(i) / double(n - 1);
    g.back() = b;
    return g;
}

// Geometric spacing in (x+1): resolves power-law decay with O(log) nodes.
inline std::vector<double> graded_grid(double a, double b, double delta) {
    if (!(b > a) || !(delta > 0.0)) throw std::invalid_argument("graded_grid: need b > a and delta > 0");
    std::vector<double> g{a};
    double x = a;
    while (x < b) {
        x = (x + 1.0) * (1.0 + delta) - 1.0;
        if (x >= b) break;
        g.push_back(x);
    }
    g.push_back(b);
    return g;
}

// ---------------------------------------------------------------------------
// Fornberg finite-difference weights: derivative of order m at z from nodes x.

inline std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
    const int n = int(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

// ---------------------------------------------------------------------------
// PCHIP slopes (Fritsch-Carlson).  Flat at local extrema, third order on
// monotone data, never overshoots.

inline std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n == 2) {
        d[0] = d[1] = (y[1] - y[0]) / (x[1] - x[0]);
        return d;
    }
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        s[i] = (y[i + 1] - y[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] == 0.0 || s[i] == 0.0 || (s[i - 1] > 0) != (s[i] > 0)) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double s0, double s1) {
        double d0 = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d0 * s0 <= 0.0) d0 = 0.0;
        else if (s0 * s1 <= 0.0 && std::abs(d0) > 3.0 * std::abs(s0)) d0 = 3.0 * s0;
        return d0;
    };
    d[0] = end_slope(h[0], h[1], s[0], s[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    return d;
}

namespace detail {

template <class T> struct scalar_traits;
template <> struct scalar_traits<double> {
    static std::vector<double> slopes(const std::vector<double>& x, const std::vector<double>& y) {
        return pchip_slopes(x, y);
    }
    static double magnitude(double v) { return std::abs(v); }
};
template <> struct scalar_traits<Complex> {
    static std::vector<Complex> slopes(const std::vector<double>& x, const std::vector<Complex>& y) {
        std::vector<double> re(y.size()), im(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) { re[i] = y[i].real(); im[i] = y[i].imag(); }
        auto dre = pchip_slopes(x, re);
        auto dim = pchip_slopes(x, im);
        std::vector<Complex> d(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) d[i] = {dre[i], dim[i]};
        return d;
    }
    static double magnitude(Complex v) { return std::abs(v); }
};

}  // namespace detail

// ---------------------------------------------------------------------------

template <class T>
class SampledFunction {
public:
    SampledFunction() = default;

    SampledFunction(std::vector<double> x, std::vector<T> y, TailModel tail = {})
        : x_(std::move(x)), y_(std::move(y)), tail_(tail) {
        if (x_.size() != y_.size()) throw std::invalid_argument("SampledFunction: grid/value size mismatch");
        if (x_.size() < 2) throw std::invalid_argument("SampledFunction: need at least 2 samples");
        for (std::size_t i = 0; i + 1 < x_.size(); ++i)
            if (!(x_[i + 1] > x_[i]))
                throw std::invalid_argument("SampledFunction: grid not strictly increasing at index " +
                                            std::to_string(i));
        slopes_ = detail::scalar_traits<T>::slopes(x_, y_);
    }

    template <class F>
    static SampledFunction from_function(F&& f, std::vector<double> grid, TailModel tail = {}) {
        std::vector<T> y(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) y[i] = f(grid[i]);
        return SampledFunction(std::move(grid), std::move(y), tail);
    }

    const std::vector<double>& grid() const { return x_; }
    const std::vector<T>& values() const { return y_; }
    const std::vector<T>& slopes() const { return slopes_; }
    const TailModel& tail() const { return tail_; }
    void set_tail(TailModel t) { tail_ = t; }
    double x_begin() const { return x_.front(); }
    double x_end() const { return x_.back(); }
    std::size_t size() const { return x_.size(); }

    // Hermite evaluation inside the grid; tail model (or 0) past the end.
    T operator()(double x) const {
        if (x > x_.back()) {
            if (tail_.empty()) return T(0);
            if constexpr (std::is_same_v<T, double>) return tail_.value(x);
            else return T(tail_.value(x));
        }
        if (x < x_.front()) {
            if (x < x_.front() - 1e-9 * (1.0 + std::abs(x_.front())))
                throw std::domain_error("SampledFunction: query " + detail::fmt(x) +
                                        " below grid start " + detail::fmt(x_.front()));
            x = x_.front();
        }
        const std::size_t i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h01 * y_[i + 1] + (h10 * slopes_[i] + h11 * slopes_[i + 1]) * h;
    }

    // Derivative of the interpolant (not of the tail model).
    T derivative(double x) const {
        if (x > x_.back() || x < x_.front())
            throw std::domain_error("SampledFunction::derivative: query outside grid");
        const std::size_t i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t;
        const double g00 = (6 * t2 - 6 * t) / h, g10 = 3 * t2 - 4 * t + 1;
        const double g01 = (-6 * t2 + 6 * t) / h, g11 = 3 * t2 - 2 * t;
        return g00 * y_[i] + g01 * y_[i + 1] + g10 * slopes_[i] + g11 * slopes_[i + 1];
    }

    double local_spacing(double x) const {
        if (x >= x_.back()) return x_[x_.size() - 1] - x_[x_.size() - 2];
        const std::size_t i = segment(std::max(x, x_.front()));
        return x_[i + 1] - x_[i];
    }

    // Exact integral of the cubic interpolant over one segment.
    T segment_integral(std::size_t i) const {
        const double h = x_[i + 1] - x_[i];
        return (y_[i] + y_[i + 1]) * (h / 2.0) + (slopes_[i] - slopes_[i + 1]) * (h * h / 12.0);
    }

    // I[k] = int_{x_k}^{x_end} of the interpolant (tail excluded).
    std::vector<T> cumulative_from_right() const {
        std::vector<T> I(x_.size(), T(0));
        for (std::size_t i = x_.size() - 1; i-- > 0;)
            I[i] = I[i + 1] + segment_integral(i);
        return I;
    }

    std::vector<T> cumulative_from_left() const {
        std::vector<T> I(x_.size(), T(0));
        for (std::size_t i = 0; i + 1 < x_.size(); ++i)
            I[i + 1] = I[i] + segment_integral(i);
        return I;
    }

    // int_a^b of the interpolant, [a,b] inside the grid.
    T integral(double a, double b) const {
        if (a > b) return -integral(b, a);
        if (a < x_.front() - 1e-12 || b > x_.back() + 1e-12)
            throw std::domain_error("SampledFunction::integral: range outside grid");
        a = std::max(a, x_.front());
        b = std::min(b, x_.back());
        const std::size_t ia = segment(a), ib = segment(b);
        if (ia == ib) return partial(ia, a, b);
        T sum = partial(ia, a, x_[ia + 1]);
        for (std::size_t i = ia + 1; i < ib; ++i) sum += segment_integral(i);
        sum += partial(ib, x_[ib], b);
        return sum;
    }

    // int_x^inf: interpolant to the grid end, analytic tail beyond.
    T integral_from(double x) const {
        if (!tail_.integral_converges())
            throw std::domain_error("integral_from: declared tail model diverges (exponent " +
                                    detail::fmt(tail_.exponent) + ")");
        T tail_part(0);
        if (!tail_.empty()) tail_part = T(tail_.integral_from(x_.back()));
        if (x >= x_.back()) {
            if (tail_.empty()) return T(0);
            return T(tail_.integral_from(x));
        }
        return integral(x, x_.back()) + tail_part;
    }

    // Node-wise derivatives by 5-point Fornberg stencils (one-sided at ends).
    std::vector<T> node_derivatives() const {
        const std::size_t n = x_.size();
        if (n < 5) throw std::domain_error("node_derivatives: need at least 5 nodes for the stencil");
        std::vector<T> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t lo = (i < 2) ? 0 : (i + 2 >= n ? n - 5 : i - 2);
            std::vector<double> xs(x_.begin() + lo, x_.begin() + lo + 5);
            auto w = fd_weights(x_[i], xs, 1);
            T acc(0);
            for (std::size_t k = 0; k < 5; ++k) acc += w[k] * y_[lo + k];
            d[i] = acc;
        }
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : y_) m = std::max(m, detail::scalar_traits<T>::magnitude(v));
        return m;
    }

private:
    std::size_t segment(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = (it == x_.begin()) ? 0 : std::size_t(it - x_.begin()) - 1;
        return std::min(i, x_.size() - 2);
    }

    T partial(std::size_t i, double a, double b) const {
        // Antiderivative of the Hermite basis on segment i.
        const double h = x_[i + 1] - x_[i];
        auto F = [&](double x) {
            const double t = (x - x_[i]) / h;
            const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
            const double H00 = t4 / 2 - t3 + t;
            const double H10 = t4 / 4 - 2 * t3 / 3 + t2 / 2;
            const double H01 = -t4 / 2 + t3;
            const double H11 = t4 / 4 - t3 / 3;
            return (H00 * y_[i] + H01 * y_[i + 1]) * h + (H10 * slopes_[i] + H11 * slopes_[i + 1]) * h * h;
        };
        return F(b) - F(a);
    }

    std::vector<double> x_;
    std::vector<T> y_;
    std::vector<T> slopes_;
    TailModel tail_;
};

using RealFunction = SampledFunction<double>;
using ComplexFunction = SampledFunction<Complex>;

}  // namespace krein
