#pragma once

// Integral-equation route: positivity of I + H-convolution on [0, r],
// Nystrom (composite trapezoid) solve of the resolvent equation
//   Gamma_r(t,s) + int_0^r H(t-u) Gamma_r(u,s) du = H(t-s),
// extraction of A(rho) = Gamma_rho(0, rho), and reconstruction of P, P*
// by quadrature.  Serves as the independent oracle for the ODE route.

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "sampled_function.hpp"

namespace krein {

// H on t in [0, r]; negative arguments via Hermitian symmetry H(-t) = conj(H(t)).
class AccelerantKernel {
public:
    explicit AccelerantKernel(ComplexFunction H) : H_(std::move(H)) {
        if (H_.x_begin() != 0.0)
            throw std::invalid_argument("AccelerantKernel: samples must start at t = 0");
    }
    template <class F>
    static AccelerantKernel from_function(F&& f, double r, std::size_t n = 1001) {
        return AccelerantKernel(ComplexFunction::from_function(f, uniform_grid(0.0, r, n)));
    }

    Complex operator()(double t) const { return t >= 0.0 ? H_(t) : std::conj(H_(-t)); }
    double r_max() const { return H_.x_end(); }
    const ComplexFunction& samples() const { return H_; }

    bool is_real() const {
        for (const auto& v : H_.values())
            if (std::abs(v.imag()) > 1e-14 * (1.0 + std::abs(v.real()))) return false;
        return true;
    }

private:
    ComplexFunction H_;
};

struct ResolventSolution {
    std::size_t n = 0;  // node count of the finest (rho = r) discretization
    double r = 0.0;
    Eigen::MatrixXcd Gamma;              // Gamma_r(t_j, s_k) on uniform nodes, rho = r
    std::vector<double> nodes;           // the t/s nodes of Gamma
    std::vector<double> rho_grid;
    std::vector<Complex> A_trace;        // A(rho) = Gamma_rho(0, rho)
    double min_eig = 0.0;
    bool real_kernel = false;
};

namespace detail {

inline std::vector<double> trapezoid_weights(std::size_t m, double h) {
    std::vector<double> w(m, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

}  // namespace detail

// Smallest eigenvalue of the symmetrized Nystrom discretization of
// phi -> phi + int_0^r H(.-s) phi(s) ds with n uniform nodes.
inline double positivity_min_eig(const AccelerantKernel& H, double r, std::size_t n) {
    if (n < 8) throw std::invalid_argument("positivity_min_eig: need n >= 8 nodes");
    if (!(r > 0.0) || r > H.r_max() + 1e-12)
        throw std::invalid_argument("positivity_min_eig: r outside kernel support");
    const double h = r / double(n - 1);
    auto w = detail::trapezoid_weights(n, h);
    Eigen::MatrixXcd M(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const double tj = h * double(j), tk = h * double(k);
            M(j, k) = std::sqrt(w[j] * w[k]) * H(tj - tk);
            if (j == k) M(j, k) += 1.0;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double positivity_threshold(std::size_t n) { return 1e-8 * std::sqrt(double(n)); }

// Solves the resolvent equation per rho (independent uniform discretizations
// of [0, rho], node count scaled from n) and assembles the full Gamma matrix
// at rho = r.  Positivity at resolution n is a precondition.
inline ResolventSolution solve_resolvent(const AccelerantKernel& H, double r, std::size_t n,
                                         std::vector<double> rho_grid) {
    if (n < 8) throw std::invalid_argument("solve_resolvent: need n >= 8 nodes");
    if (!(r > 0.0) || r > H.r_max() + 1e-12)
        throw std::invalid_argument("solve_resolvent: r outside kernel support");
    ResolventSolution sol;
    sol.n = n;
    sol.r = r;
    sol.real_kernel = H.is_real();
    sol.min_eig = positivity_min_eig(H, r, n);
    if (sol.min_eig <= positivity_threshold(n))
        throw std::runtime_error("solve_resolvent: kernel not positive at this resolution (min eig " +
                                 detail::fmt(sol.min_eig) + ")");
    if (rho_grid.empty()) rho_grid = uniform_grid(0.0, r, 33);
    sol.rho_grid = rho_grid;
    sol.A_trace.resize(rho_grid.size());

    auto factorize = [&](std::size_t m, double rho, Eigen::MatrixXcd& M) {
        const double h = rho / double(m - 1);
        auto w = detail::trapezoid_weights(m, h);
        M.resize(m, m);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < m; ++k) {
                const double tj = h * double(j), tk = h * double(k);
                M(j, k) = H(tj - tk) * w[k];
                if (j == k) M(j, k) += 1.0;
            }
        return h;
    };

    for (std::size_t idx = 0; idx < rho_grid.size(); ++idx) {
        const double rho = rho_grid[idx];
        if (rho < 1e-12) {
            sol.A_trace[idx] = H(0.0);  // Gamma_0(0,0) = H(0)
            continue;
        }
        const std::size_t m = std::max<std::size_t>(8, std::size_t(std::lround(double(n - 1) * rho / r))) + 1;
        Eigen::MatrixXcd M;
        const double h = factorize(m, rho, M);
        Eigen::VectorXcd rhs(m);
        for (std::size_t j = 0; j < m; ++j) rhs(j) = H(h * double(j) - rho);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
        Eigen::VectorXcd col = lu.solve(rhs);
        const double resid = (M * col - rhs).norm() / std::max(1e-30, rhs.norm());
        if (!std::isfinite(resid) || resid > 1e-8)
            throw std::runtime_error("solve_resolvent: ill-conditioned system at rho = " +
                                     detail::fmt(rho) + " (relative residual " + detail::fmt(resid) +
                                     ", condition roughly 1/resid)");
        sol.A_trace[idx] = col(0);  // Gamma_rho(t=0, s=rho)
    }

    // Full resolvent at rho = r: one LU, n right-hand sides H(t_j - s_k).
    Eigen::MatrixXcd M;
    const double h = factorize(n, r, M);
    Eigen::MatrixXcd K(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) K(j, k) = H(h * double(j) - h * double(k));
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    sol.Gamma = lu.solve(K);
    sol.nodes.resize(n);
    for (std::size_t j = 0; j < n; ++j) sol.nodes[j] = h * double(j);
    return sol;
}

// P(r,lambda) = e^{i lambda r} (1 - int_0^r Gamma_r(s,0) e^{-i lambda s} ds),
// P*(r,lambda) = 1 - int_0^r Gamma_r(0,s) e^{i lambda s} ds.
inline std::pair<Complex, Complex> pp_from_resolvent(const ResolventSolution& sol, Complex lambda) {
    if (sol.Gamma.rows() == 0) throw std::invalid_argument("pp_from_resolvent: missing full Gamma");
    const std::size_t n = sol.nodes.size();
    const double h = sol.nodes[1] - sol.nodes[0];
    auto w = detail::trapezoid_weights(n, h);
    Complex ip = 0.0, ips = 0.0;
    const Complex i1(0.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = sol.nodes[j];
        ip += w[j] * sol.Gamma(j, 0) * std::exp(-i1 * lambda * s);
        ips += w[j] * sol.Gamma(0, j) * std::exp(i1 * lambda * s);
    }
    const Complex P = std::exp(i1 * lambda * sol.r) * (1.0 - ip);
    const Complex Ps = 1.0 - ips;
    return {P, Ps};
}

}  // namespace krein
