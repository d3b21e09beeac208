#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "skld/field.hpp"
#include "skld/nonlinearity.hpp"
#include "skld/propagator.hpp"
#include "skld/spectral.hpp"
#include "skld/timegrid.hpp"

namespace skld {

namespace fd {

/// Second-order first derivative at every node (central inside, one-sided at
/// the ends).
inline std::vector<Field> first_derivative(const std::vector<Field>& f, double h) {
    const std::size_t M = f.size();
    if (M < 3) throw std::invalid_argument("first_derivative: need at least 3 nodes");
    const std::size_t K = f[0].modes();
    std::vector<Field> d(M, Field(K));
    for (std::size_t k = 0; k < K; ++k) {
        d[0][k] = (-3.0 * f[0][k] + 4.0 * f[1][k] - f[2][k]) / (2.0 * h);
        for (std::size_t n = 1; n + 1 < M; ++n) d[n][k] = (f[n + 1][k] - f[n - 1][k]) / (2.0 * h);
        d[M - 1][k] = (3.0 * f[M - 1][k] - 4.0 * f[M - 2][k] + f[M - 3][k]) / (2.0 * h);
    }
    return d;
}

/// Second derivative; 4-point one-sided stencils at the ends when available.
inline std::vector<Field> second_derivative(const std::vector<Field>& f, double h) {
    const std::size_t M = f.size();
    if (M < 3) throw std::invalid_argument("second_derivative: need at least 3 nodes");
    const std::size_t K = f[0].modes();
    const double h2 = h * h;
    std::vector<Field> d(M, Field(K));
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t n = 1; n + 1 < M; ++n)
            d[n][k] = (f[n + 1][k] - 2.0 * f[n][k] + f[n - 1][k]) / h2;
        if (M >= 4) {
            d[0][k] = (2.0 * f[0][k] - 5.0 * f[1][k] + 4.0 * f[2][k] - f[3][k]) / h2;
            d[M - 1][k] = (2.0 * f[M - 1][k] - 5.0 * f[M - 2][k] + 4.0 * f[M - 3][k] - f[M - 4][k]) / h2;
        } else {
            d[0][k] = (f[0][k] - 2.0 * f[1][k] + f[2][k]) / h2;
            d[M - 1][k] = d[0][k];
        }
    }
    return d;
}

inline double trapezoid(const std::vector<double>& g, double h) {
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n)
        s += ((n == 0 || n + 1 == g.size()) ? 0.5 : 1.0) * g[n];
    return s * h;
}

}  // namespace fd

/// Action value with its small-mass decomposition. `residual_norm` reports
/// |value - heat_part - remainder| as evaluated, a floating-point/quadrature
/// diagnostic.
struct ActionReport {
    double value = 0.0;
    double heat_part = 0.0;
    double remainder = 0.0;
    double residual_norm = 0.0;
};

namespace detail {

struct IllConditionedControl : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_invertible_q(const SpectralConfig& cfg) {
    for (double l : cfg.lambda)
        if (!(l > 1e-300)) throw IllConditionedControl("control_from_path: lambda underflows");
}

}  // namespace detail

/// Recovers psi = Q^{-1}(phi' - A phi - B(phi)) from a position path.
inline Control control_from_heat_path(const SpectralConfig& cfg, const std::vector<Field>& phi,
                                      const TimeGrid& grid, const Nonlinearity& B) {
    detail::require_invertible_q(cfg);
    const std::size_t K = cfg.modes();
    const auto dphi = fd::first_derivative(phi, grid.dt);
    Control psi;
    psi.grid = grid;
    psi.values.assign(phi.size(), Field(K));
    for (std::size_t n = 0; n < phi.size(); ++n) {
        const Field b = B(phi[n]);
        for (std::size_t k = 0; k < K; ++k)
            psi.values[n][k] = (dphi[n][k] + cfg.alpha[k] * phi[n][k] - b[k]) / cfg.lambda[k];
    }
    return psi;
}

inline Control control_from_heat_path(const SpectralConfig& cfg, const HeatPath& path,
                                      const Nonlinearity& B) {
    return control_from_heat_path(cfg, path.states, path.grid, B);
}

/// Wave analogue, psi = Q^{-1}(mu phi'' + phi' - A phi - B(phi)).
inline Control control_from_wave_path(const SpectralConfig& cfg, const std::vector<Field>& phi,
                                      const TimeGrid& grid, double mu, const Nonlinearity& B) {
    if (mu <= 0.0) throw std::invalid_argument("control_from_wave_path: mu must be positive");
    detail::require_invertible_q(cfg);
    const std::size_t K = cfg.modes();
    const auto dphi = fd::first_derivative(phi, grid.dt);
    const auto ddphi = fd::second_derivative(phi, grid.dt);
    Control psi;
    psi.grid = grid;
    psi.values.assign(phi.size(), Field(K));
    for (std::size_t n = 0; n < phi.size(); ++n) {
        const Field b = B(phi[n]);
        for (std::size_t k = 0; k < K; ++k)
            psi.values[n][k] =
                (mu * ddphi[n][k] + dphi[n][k] + cfg.alpha[k] * phi[n][k] - b[k]) / cfg.lambda[k];
    }
    return psi;
}

inline Control control_from_wave_path(const SpectralConfig& cfg, const WavePath& path, double mu,
                                      const Nonlinearity& B) {
    std::vector<Field> phi(path.states.size(), Field(cfg.modes()));
    for (std::size_t n = 0; n < path.states.size(); ++n) phi[n] = path.states[n].u;
    return control_from_wave_path(cfg, phi, path.grid, mu, B);
}

/// I(phi) = (1/2) int |Q^{-1}(phi' - A phi - B(phi))|_H^2 dt, trapezoidal.
inline ActionReport action_heat(const SpectralConfig& cfg, const std::vector<Field>& phi,
                                const TimeGrid& grid, const Nonlinearity& B) {
    const Control psi = control_from_heat_path(cfg, phi, grid, B);
    ActionReport r;
    std::vector<double> g(phi.size());
    for (std::size_t n = 0; n < phi.size(); ++n) {
        const double nrm = h_norm(cfg, psi.values[n]);
        g[n] = 0.5 * nrm * nrm;
    }
    r.value = fd::trapezoid(g, grid.dt);
    r.heat_part = r.value;
    return r;
}

inline ActionReport action_heat(const SpectralConfig& cfg, const HeatPath& path, const Nonlinearity& B) {
    return action_heat(cfg, path.states, path.grid, B);
}

/// Wave action with the decomposition value = heat_part + remainder, where
///   remainder = (mu^2/2) int |Q^{-1} phi''|^2
///             + mu int < Q^{-1} phi'', Q^{-1}(phi' - A phi - B(phi)) >.
/// All three integrals share the same stencils and quadrature, so the
/// identity holds at the level of the discretization.
inline ActionReport action_wave(const SpectralConfig& cfg, const std::vector<Field>& phi,
                                const TimeGrid& grid, double mu, const Nonlinearity& B) {
    if (mu <= 0.0) throw std::invalid_argument("action_wave: mu must be positive");
    detail::require_invertible_q(cfg);
    const std::size_t K = cfg.modes();
    const std::size_t M = phi.size();
    const auto dphi = fd::first_derivative(phi, grid.dt);
    const auto ddphi = fd::second_derivative(phi, grid.dt);

    std::vector<double> g_value(M), g_heat(M), g_rem(M);
    for (std::size_t n = 0; n < M; ++n) {
        const Field b = B(phi[n]);
        double sv = 0.0, sh = 0.0, sr = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double a = ddphi[n][k] / cfg.lambda[k];
            const double heat = (dphi[n][k] + cfg.alpha[k] * phi[n][k] - b[k]) / cfg.lambda[k];
            const double full = mu * a + heat;
            sv += full * full;
            sh += heat * heat;
            sr += mu * mu * a * a + 2.0 * mu * a * heat;
        }
        g_value[n] = 0.5 * sv;
        g_heat[n] = 0.5 * sh;
        g_rem[n] = 0.5 * sr;
    }
    ActionReport r;
    r.value = fd::trapezoid(g_value, grid.dt);
    r.heat_part = fd::trapezoid(g_heat, grid.dt);
    r.remainder = fd::trapezoid(g_rem, grid.dt);
    r.residual_norm = std::abs(r.value - r.heat_part - r.remainder);
    return r;
}

inline ActionReport action_wave(const SpectralConfig& cfg, const WavePath& path, double mu,
                                const Nonlinearity& B) {
    std::vector<Field> phi(path.states.size(), Field(cfg.modes()));
    for (std::size_t n = 0; n < path.states.size(); ++n) phi[n] = path.states[n].u;
    return action_wave(cfg, phi, path.grid, mu, B);
}

/// Minimum control energy to reach z from rest over an infinite horizon for
/// the linear system: per mode alpha_k u_k^2 / lambda_k^2 + mu v_k^2 / lambda_k^2.
inline double linear_min_energy_infinite(const SpectralConfig& cfg, const PhasePoint& z, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("linear_min_energy_infinite: mu must be positive");
    double s = 0.0;
    for (std::size_t k = 0; k < cfg.modes(); ++k) {
        const double l2 = cfg.lambda[k] * cfg.lambda[k];
        s += cfg.alpha[k] * z.u[k] * z.u[k] / l2 + mu * z.v[k] * z.v[k] / l2;
    }
    return s;
}

/// Finite-horizon minimum energy via the per-mode 2x2 quadratic form of
/// (C_mu - S_mu(T) C_mu S_mu*(T))^{-1}, assembled in coordinates where the
/// phase inner product is Euclidean.
inline double linear_min_energy_finite(const SpectralConfig& cfg, const PhasePoint& z, double mu,
                                       double T) {
    if (mu <= 0.0) throw std::invalid_argument("linear_min_energy_finite: mu must be positive");
    if (T <= 0.0) throw std::invalid_argument("linear_min_energy_finite: horizon must be positive");
    double total = 0.0;
    for (std::size_t k = 0; k < cfg.modes(); ++k) {
        const double a = cfg.alpha[k];
        const double sq = std::sqrt(a);
        const double l2 = cfg.lambda[k] * cfg.lambda[k];
        const ModeStep st = mode_step(mu, a, T);
        // Flat coordinates (u, v/sqrt(alpha)).
        const double s11 = st.m[0], s12 = sq * st.m[1], s21 = st.m[2] / sq, s22 = st.m[3];
        const double c1 = l2 / a, c2 = l2 / (a * mu);
        const double g11 = c1 - (s11 * s11 * c1 + s12 * s12 * c2);
        const double g12 = -(s11 * s21 * c1 + s12 * s22 * c2);
        const double g22 = c2 - (s21 * s21 * c1 + s22 * s22 * c2);
        const double det = g11 * g22 - g12 * g12;
        const double tr = g11 + g22;
        const double eig_min = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
        if (T * eig_min < 1e-12)
            throw std::runtime_error("linear_min_energy_finite: controllability form near-singular");
        const double zu = z.u[k];
        const double zv = z.v[k] / sq;
        total += (g22 * zu * zu - 2.0 * g12 * zu * zv + g11 * zv * zv) / det;
    }
    return total;
}

}  // namespace skld
