#pragma once

// Trajectory integration for the canonical first-order system
//   P'  = i lambda P - conj(A) P*,   P*' = -A P,   P(0) = P*(0) = 1,
// its Dirac-type reduction, the phase-stripped Q equation (which contains
// conj(Q) and is therefore integrated as a doubled real system), and
// Sturm-Liouville transfer matrices for -u'' + q u = E u.

#include <complex>
#include <functional>
#include <vector>

#include "ode.hpp"
#include "sampled_function.hpp"

namespace krein {

struct KreinTrajectory {
    Complex lambda;
    std::vector<double> positions;
    std::vector<Complex> P, Pstar, Q;          // Q(x) = e^{-i lambda x} P(x)
    std::vector<double> conserved_residual;    // | |P|^2 - |P*|^2 | per node
    OdeStats stats;
    double rtol = 0.0, atol = 0.0;

    double max_conserved_residual() const {
        double m = 0.0;
        for (double r : conserved_residual) m = std::max(m, r);
        return m;
    }
};

struct DiracTrajectory {
    double lambda;
    std::vector<double> positions;
    std::vector<double> Phi, Psi;  // Phi(0) = 1, Psi(0) = 0
    OdeStats stats;
};

struct QTrajectory {
    Complex lambda;
    std::vector<double> positions;
    std::vector<Complex> Q;  // Q(0) = 1
    OdeStats stats;
};

struct TransferMatrixSample {
    double position;
    // column-major pairs: [[v, u], [v', u']] maps (u(0), u'(0)) data
    double v, u, vp, up;
    double det() const { return v * up - u * vp; }
};

namespace detail {

inline std::vector<double> default_positions(double xmax, std::size_t n = 1025) {
    return uniform_grid(0.0, xmax, n);
}

}  // namespace detail

// A: callable x -> Complex (or double).  Positions must be sorted in [0, rmax].
template <class AF>
KreinTrajectory integrate_krein(AF&& A, Complex lambda, double rmax, double tol = 1e-9,
                                std::vector<double> positions = {},
                                std::function<double(double)> max_step_at = {}) {
    if (!(rmax > 0.0)) throw std::invalid_argument("integrate_krein: rmax must be > 0");
    if (positions.empty()) positions = detail::default_positions(rmax);
    KreinTrajectory out;
    out.lambda = lambda;
    out.positions = positions;
    out.rtol = tol;
    out.atol = tol * 1e-3;
    out.P.reserve(positions.size());
    out.Pstar.reserve(positions.size());

    auto rhs = [&](double x, const std::array<double, 4>& y, std::array<double, 4>& dy) {
        const Complex P(y[0], y[1]), Ps(y[2], y[3]);
        const Complex Av = Complex(A(x));
        const Complex dP = Complex(0.0, 1.0) * lambda * P - std::conj(Av) * Ps;
        const Complex dPs = -Av * P;
        dy = {dP.real(), dP.imag(), dPs.real(), dPs.imag()};
    };
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    opt.max_step_at = std::move(max_step_at);
    std::array<double, 4> y0{1.0, 0.0, 1.0, 0.0};
    out.stats = integrate_ode<4>(rhs, 0.0, rmax, y0, positions,
                                 [&](double, const std::array<double, 4>& y) {
                                     out.P.emplace_back(y[0], y[1]);
                                     out.Pstar.emplace_back(y[2], y[3]);
                                 },
                                 opt);

    out.Q.resize(positions.size());
    out.conserved_residual.resize(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out.Q[i] = std::exp(Complex(0.0, -1.0) * lambda * positions[i]) * out.P[i];
        out.conserved_residual[i] = std::abs(std::norm(out.P[i]) - std::norm(out.Pstar[i]));
    }
    return out;
}

inline KreinTrajectory integrate_krein(const RealFunction& A, Complex lambda, double rmax,
                                       double tol = 1e-9, std::vector<double> positions = {}) {
    return integrate_krein([&A](double x) { return Complex(A(x), 0.0); }, lambda, rmax, tol,
                           std::move(positions),
                           [&A](double x) { return 0.5 * A.local_spacing(x); });
}

inline KreinTrajectory integrate_krein(const ComplexFunction& A, Complex lambda, double rmax,
                                       double tol = 1e-9, std::vector<double> positions = {}) {
    return integrate_krein([&A](double x) { return A(x); }, lambda, rmax, tol, std::move(positions),
                           [&A](double x) { return 0.5 * A.local_spacing(x); });
}

// Phi' = -lambda Psi - a Phi + b Psi,  Psi' = lambda Phi + b Phi + a Psi.
template <class AF, class BF>
DiracTrajectory integrate_dirac(AF&& a, BF&& b, double lambda, double xmax, double tol = 1e-9,
                                std::vector<double> positions = {},
                                std::function<double(double)> max_step_at = {}) {
    if (!(xmax > 0.0)) throw std::invalid_argument("integrate_dirac: xmax must be > 0");
    if (positions.empty()) positions = detail::default_positions(xmax);
    DiracTrajectory out;
    out.lambda = lambda;
    out.positions = positions;
    out.Phi.reserve(positions.size());
    out.Psi.reserve(positions.size());
    auto rhs = [&](double x, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        const double av = a(x), bv = b(x);
        dy[0] = -lambda * y[1] - av * y[0] + bv * y[1];
        dy[1] = lambda * y[0] + bv * y[0] + av * y[1];
    };
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    opt.max_step_at = std::move(max_step_at);
    std::array<double, 2> y0{1.0, 0.0};
    out.stats = integrate_ode<2>(rhs, 0.0, xmax, y0, positions,
                                 [&](double, const std::array<double, 2>& y) {
                                     out.Phi.push_back(y[0]);
                                     out.Psi.push_back(y[1]);
                                 },
                                 opt);
    return out;
}

inline DiracTrajectory integrate_dirac(const RealFunction& a, double lambda, double xmax,
                                       double tol = 1e-9, std::vector<double> positions = {}) {
    return integrate_dirac([&a](double x) { return a(x); }, [](double) { return 0.0; }, lambda,
                           xmax, tol, std::move(positions),
                           [&a](double x) { return 0.5 * a.local_spacing(x); });
}

// Q' = -A e^{-i lambda x} conj(Q), Q(0) = 1.
template <class AF>
QTrajectory integrate_Q(AF&& A, Complex lambda, double xmax, double tol = 1e-9,
                        std::vector<double> positions = {},
                        std::function<double(double)> max_step_at = {}, Complex Q0 = {1.0, 0.0}) {
    if (!(xmax > 0.0)) throw std::invalid_argument("integrate_Q: xmax must be > 0");
    if (positions.empty()) positions = detail::default_positions(xmax);
    QTrajectory out;
    out.lambda = lambda;
    out.positions = positions;
    out.Q.reserve(positions.size());
    auto rhs = [&](double x, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        const Complex Q(y[0], y[1]);
        const Complex d = -Complex(A(x)) * std::exp(Complex(0.0, -1.0) * lambda * x) * std::conj(Q);
        dy = {d.real(), d.imag()};
    };
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    opt.max_step_at = std::move(max_step_at);
    std::array<double, 2> y0{Q0.real(), Q0.imag()};
    out.stats = integrate_ode<2>(rhs, 0.0, xmax, y0, positions,
                                 [&](double, const std::array<double, 2>& y) {
                                     out.Q.emplace_back(y[0], y[1]);
                                 },
                                 opt);
    return out;
}

inline QTrajectory integrate_Q(const RealFunction& A, Complex lambda, double xmax,
                               double tol = 1e-9, std::vector<double> positions = {}) {
    return integrate_Q([&A](double x) { return Complex(A(x), 0.0); }, lambda, xmax, tol,
                       std::move(positions), [&A](double x) { return 0.5 * A.local_spacing(x); });
}

// Simultaneous Dirichlet/Neumann solutions of -u'' + q u = E u; the pair
// gives the transfer matrix and keeps det = Wronskian = 1.
struct UvTrajectory {
    double energy;
    std::vector<double> positions;
    std::vector<double> u, up, v, vp;  // u(0)=0, u'(0)=1;  v(0)=1, v'(0)=0
    OdeStats stats;
};

template <class QF>
UvTrajectory integrate_uv(QF&& q, double energy, std::vector<double> positions, double tol = 1e-10,
                          std::function<double(double)> max_step_at = {}) {
    if (positions.size() < 2) throw std::invalid_argument("integrate_uv: need at least 2 positions");
    UvTrajectory out;
    out.energy = energy;
    out.positions = positions;
    auto rhs = [&](double x, const std::array<double, 4>& y, std::array<double, 4>& dy) {
        const double qe = q(x) - energy;
        dy[0] = y[1];
        dy[1] = qe * y[0];
        dy[2] = y[3];
        dy[3] = qe * y[2];
    };
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    opt.max_step_at = std::move(max_step_at);
    std::array<double, 4> y0{0.0, 1.0, 1.0, 0.0};
    out.stats = integrate_ode<4>(rhs, positions.front(), positions.back(), y0,
                                 positions, [&](double, const std::array<double, 4>& y) {
                                     out.u.push_back(y[0]);
                                     out.up.push_back(y[1]);
                                     out.v.push_back(y[2]);
                                     out.vp.push_back(y[3]);
                                 },
                                 opt);
    return out;
}

inline UvTrajectory integrate_uv(const RealFunction& q, double energy,
                                 std::vector<double> positions, double tol = 1e-10) {
    return integrate_uv([&q](double x) { return q(x); }, energy, std::move(positions), tol,
                        [&q](double x) { return 0.5 * q.local_spacing(x); });
}

// Transfer matrices of -u'' + q u = lambda^2 u at the requested positions
// (positions sorted, starting at 0).  lambda = 0 integrates the E = 0
// equation directly.
template <class QF>
std::vector<TransferMatrixSample> transfer_matrix(QF&& q, double lambda,
                                                  std::vector<double> positions,
                                                  double tol = 1e-10,
                                                  std::function<double(double)> max_step_at = {}) {
    auto uv = integrate_uv(std::forward<QF>(q), lambda * lambda, std::move(positions), tol,
                           std::move(max_step_at));
    std::vector<TransferMatrixSample> out(uv.positions.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {uv.positions[i], uv.v[i], uv.u[i], uv.vp[i], uv.up[i]};
        if (std::abs(out[i].det() - 1.0) > 1e-6)
            throw std::runtime_error("transfer_matrix: determinant drift " +
                                     detail::fmt(out[i].det() - 1.0) + " at x = " +
                                     detail::fmt(uv.positions[i]) +
                                     "; tighten the integration tolerance");
    }
    return out;
}

inline std::vector<TransferMatrixSample> transfer_matrix(const RealFunction& q, double lambda,
                                                         std::vector<double> positions,
                                                         double tol = 1e-10) {
    return transfer_matrix([&q](double x) { return q(x); }, lambda, std::move(positions), tol,
                           [&q](double x) { return 0.5 * q.local_spacing(x); });
}

}  // namespace krein
