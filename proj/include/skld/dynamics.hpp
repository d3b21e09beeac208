#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "skld/field.hpp"
#include "skld/nonlinearity.hpp"
#include "skld/propagator.hpp"
#include "skld/rng.hpp"
#include "skld/spectral.hpp"
#include "skld/timegrid.hpp"

namespace skld {

enum class Equation { Heat, Wave };

inline constexpr double kDivergenceGuard = 1e6;

namespace detail {

// 16-point Gauss-Legendre nodes/weights on [0, 1].
inline const std::array<double, 16>& gl_nodes() {
    static const std::array<double, 16> x = {
        0.0052995325041750337, 0.0277124884633837046, 0.0671843988060841224, 0.1222977958224984868,
        0.1910618777986781147, 0.2709916111713863151, 0.3591982246103705422, 0.4524937450811812866,
        0.5475062549188187134, 0.6408017753896294578, 0.7290083888286136849, 0.8089381222013218853,
        0.8777022041775015132, 0.9328156011939158776, 0.9722875115366162954, 0.9947004674958249663};
    return x;
}

inline const std::array<double, 16>& gl_weights() {
    static const std::array<double, 16> w = {
        0.0135762297058770482, 0.0311267619693239469, 0.0475792558412463928, 0.0623144856277669384,
        0.0747979944082883680, 0.0845782596975012679, 0.0913017075224617918, 0.0947253052275342510,
        0.0947253052275342510, 0.0913017075224617918, 0.0845782596975012679, 0.0747979944082883680,
        0.0623144856277669384, 0.0475792558412463928, 0.0311267619693239469, 0.0135762297058770482};
    return w;
}

// phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, series near 0.
inline double phi1(double z) {
    if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}

inline double phi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0;
    return (std::expm1(z) - z) / (z * z);
}

// Lower Cholesky with pivots clamped at zero (quadrature round-off guard).
template <std::size_t N>
inline std::array<std::array<double, N>, N> cholesky(std::array<std::array<double, N>, N> a) {
    std::array<std::array<double, N>, N> l{};
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j)
                l[i][j] = std::sqrt(std::max(0.0, s));
            else
                l[i][j] = l[j][j] > 0.0 ? s / l[j][j] : 0.0;
        }
    }
    return l;
}

}  // namespace detail

/// Per-step noise generator shared by both equations. For every (mode, step)
/// the heat increment and the wave increment pair are Wiener integrals of the
/// same scalar Brownian motion; their joint 3x3 covariance is assembled once
/// per configuration (heat part closed form, the rest composite Gauss
/// quadrature) and Cholesky-factored with the heat component first. Feeding
/// the factors from one counter stream couples the two simulations exactly.
class StepNoise {
  public:
    StepNoise(const SpectralConfig& cfg, double mu, double eps, double dt) {
        const std::size_t K = cfg.modes();
        chol_.resize(K);
        for (std::size_t i = 0; i < K; ++i) {
            const double a = cfg.alpha[i];
            const double lam = cfg.lambda[i];
            std::array<std::array<double, 3>, 3> cov{};
            cov[0][0] = eps * lam * lam * (-std::expm1(-2.0 * a * dt)) / (2.0 * a);

            // Composite 16-pt Gauss-Legendre, panel width tied to the fast scale.
            const double scale = std::min(2.0 * mu, dt);
            const std::size_t panels =
                std::min<std::size_t>(64, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt / scale))));
            const double pw = dt / static_cast<double>(panels);
            double iuu = 0, iuv = 0, ivv = 0, ihu = 0, ihv = 0;
            for (std::size_t p = 0; p < panels; ++p) {
                for (std::size_t q = 0; q < 16; ++q) {
                    const double s = (static_cast<double>(p) + detail::gl_nodes()[q]) * pw;
                    const double w = detail::gl_weights()[q] * pw;
                    const ModeStep st = mode_step(mu, a, s);
                    const double ku = st.m[1];  // S_12(s)
                    const double kv = st.m[3];  // S_22(s)
                    const double kh = std::exp(-a * s);
                    iuu += w * ku * ku;
                    iuv += w * ku * kv;
                    ivv += w * kv * kv;
                    ihu += w * kh * ku;
                    ihv += w * kh * kv;
                }
            }
            const double c = eps * lam * lam / (mu * mu);
            cov[1][1] = c * iuu;
            cov[1][2] = cov[2][1] = c * iuv;
            cov[2][2] = c * ivv;
            cov[0][1] = cov[1][0] = eps * lam * lam / mu * ihu;
            cov[0][2] = cov[2][0] = eps * lam * lam / mu * ihv;
            chol_[i] = detail::cholesky<3>(cov);
        }
    }

    double heat_increment(const NoisePlan& noise, std::size_t step, std::size_t mode) const {
        return chol_[mode][0][0] * noise.normal(step, mode, 0);
    }

    void wave_increment(const NoisePlan& noise, std::size_t step, std::size_t mode, double& du,
                        double& dv) const {
        const double x0 = noise.normal(step, mode, 0);
        const double x1 = noise.normal(step, mode, 1);
        const double x2 = noise.normal(step, mode, 2);
        const auto& l = chol_[mode];
        du = l[1][0] * x0 + l[1][1] * x1;
        dv = l[2][0] * x0 + l[2][1] * x1 + l[2][2] * x2;
    }

    double heat_sd(std::size_t mode) const { return chol_[mode][0][0]; }

  private:
    std::vector<std::array<std::array<double, 3>, 3>> chol_;
};

/// Heat-only variance rule, eps * lambda_k^2 (1 - e^(-2 alpha_k dt)) / (2 alpha_k).
inline double heat_step_variance(double alpha, double lambda, double eps, double dt) {
    return eps * lambda * lambda * (-std::expm1(-2.0 * alpha * dt)) / (2.0 * alpha);
}

namespace detail {

inline void guard_heat(const SpectralConfig& cfg, const Field& u) {
    if (h_norm(cfg, u) > kDivergenceGuard)
        throw std::runtime_error("simulate_heat: trajectory exceeded the divergence guard");
}

inline void guard_wave(const SpectralConfig& cfg, const PhasePoint& z) {
    if (h_norm(cfg, z.u) > kDivergenceGuard)
        throw std::runtime_error("simulate_wave: trajectory exceeded the divergence guard");
}

}  // namespace detail

/// Exponential Euler for du = (Au + B(u)) dt + sqrt(eps) dW^Q: the linear
/// part is exact, B enters through the phi1 weight, the noise increment has
/// the exact stationary-variance rule.
inline HeatPath simulate_heat(const SpectralConfig& cfg, const Field& u0, double eps,
                              const Nonlinearity& B, const TimeGrid& grid, const NoisePlan& noise) {
    if (eps < 0.0) throw std::invalid_argument("simulate_heat: eps must be nonnegative");
    const std::size_t K = cfg.modes();
    HeatPath path;
    path.grid = grid;
    path.states.reserve(grid.nodes());
    path.states.push_back(u0);

    std::vector<double> decay(K), bw(K), sd(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
        decay[i] = std::exp(-cfg.alpha[i] * grid.dt);
        bw[i] = grid.dt * detail::phi1(-cfg.alpha[i] * grid.dt);
        if (eps > 0.0) sd[i] = std::sqrt(heat_step_variance(cfg.alpha[i], cfg.lambda[i], eps, grid.dt));
    }

    Field u = u0;
    for (std::size_t n = 0; n < grid.n_steps; ++n) {
        const Field bu = B(u);
        for (std::size_t i = 0; i < K; ++i) {
            u[i] = decay[i] * u[i] + bw[i] * bu[i];
            if (eps > 0.0) u[i] += sd[i] * noise.normal(n, i, 0);
        }
        detail::guard_heat(cfg, u);
        path.states.push_back(u);
    }
    return path;
}

/// One-step update for the damped wave system:
///   z_{n+1} = S_mu(dt) [ z_n + dt B_mu(z_n) ] + exact Gaussian increment,
/// with B_mu(z) = (0, B(u)/mu) hit by the left-endpoint rule. The StepNoise
/// overload lets replica loops share the per-step covariance factors.
inline WavePath simulate_wave(const SpectralConfig& cfg, const PhasePoint& z0, double mu, double eps,
                              const Nonlinearity& B, const TimeGrid& grid, const NoisePlan& noise,
                              const StepNoise* sn) {
    if (mu <= 0.0) throw std::invalid_argument("simulate_wave: mu must be positive");
    if (eps < 0.0) throw std::invalid_argument("simulate_wave: eps must be nonnegative");
    const std::size_t K = cfg.modes();
    WavePath path;
    path.grid = grid;
    path.states.reserve(grid.nodes());
    path.states.push_back(z0);

    std::vector<ModeStep> steps(K);
    for (std::size_t i = 0; i < K; ++i) steps[i] = mode_step(mu, cfg.alpha[i], grid.dt);

    PhasePoint z = z0;
    for (std::size_t n = 0; n < grid.n_steps; ++n) {
        const Field bu = B(z.u);
        for (std::size_t i = 0; i < K; ++i) {
            double u = z.u[i];
            double v = z.v[i] + grid.dt * bu[i] / mu;
            steps[i].apply(u, v);
            if (sn) {
                double du, dv;
                sn->wave_increment(noise, n, i, du, dv);
                u += du;
                v += dv;
            }
            z.u[i] = u;
            z.v[i] = v;
        }
        detail::guard_wave(cfg, z);
        path.states.push_back(z);
    }
    return path;
}

inline WavePath simulate_wave(const SpectralConfig& cfg, const PhasePoint& z0, double mu, double eps,
                              const Nonlinearity& B, const TimeGrid& grid, const NoisePlan& noise) {
    std::optional<StepNoise> owned;
    if (eps > 0.0) owned.emplace(cfg, mu, eps, grid.dt);
    return simulate_wave(cfg, z0, mu, eps, B, grid, noise, owned ? &*owned : nullptr);
}

/// Deterministic flow of the unperturbed system (eps = 0).
inline WavePath unperturbed_flow(const SpectralConfig& cfg, const PhasePoint& z0, double mu,
                                 const Nonlinearity& B, const TimeGrid& grid) {
    return simulate_wave(cfg, z0, mu, 0.0, B, grid, NoisePlan(0, 0), nullptr);
}

/// Controlled skeleton of the heat equation, du = (Au + B(u) + Q psi) dt.
/// ETD with a trapezoidal corrector so a control recovered by central
/// differences is reproduced at second order.
inline HeatPath skeleton_heat(const SpectralConfig& cfg, const Field& u0, const Nonlinearity& B,
                              const Control& psi) {
    const TimeGrid& grid = psi.grid;
    if (psi.values.size() != grid.nodes())
        throw std::invalid_argument("skeleton_heat: control not defined on the grid");
    const std::size_t K = cfg.modes();
    HeatPath path;
    path.grid = grid;
    path.states.reserve(grid.nodes());
    path.states.push_back(u0);

    std::vector<double> decay(K), w1(K), w2(K);
    for (std::size_t i = 0; i < K; ++i) {
        const double z = -cfg.alpha[i] * grid.dt;
        decay[i] = std::exp(z);
        w1[i] = grid.dt * detail::phi1(z);
        w2[i] = grid.dt * detail::phi2(z);
    }

    Field u = u0;
    Field g(K), g1(K);
    for (std::size_t n = 0; n < grid.n_steps; ++n) {
        const Field bu = B(u);
        for (std::size_t i = 0; i < K; ++i) g[i] = bu[i] + cfg.lambda[i] * psi.values[n][i];
        Field stage = u;
        for (std::size_t i = 0; i < K; ++i) stage[i] = decay[i] * u[i] + w1[i] * g[i];
        const Field bs = B(stage);
        for (std::size_t i = 0; i < K; ++i) {
            g1[i] = bs[i] + cfg.lambda[i] * psi.values[n + 1][i];
            u[i] = stage[i] + w2[i] * (g1[i] - g[i]);
        }
        detail::guard_heat(cfg, u);
        path.states.push_back(u);
    }
    return path;
}

namespace detail {

// Phi1 = integral of S(s) ds = M^{-1}(S(h) - I) and
// Phi2 = M^{-2}(S(h) - I - h M)/h for the 2x2 mode generator M.
struct WaveEtdWeights {
    std::array<double, 4> phi1;
    std::array<double, 4> phi2;
};

inline WaveEtdWeights wave_etd_weights(double mu, double alpha, double h) {
    const ModeStep s = mode_step(mu, alpha, h);
    // M = [[0,1],[-a/mu,-1/mu]], M^{-1} = [[-1/a, -mu/a],[1, 0]].
    const double sm_i[4] = {s.m[0] - 1.0, s.m[1], s.m[2], s.m[3] - 1.0};
    const double mi[4] = {-1.0 / alpha, -mu / alpha, 1.0, 0.0};
    WaveEtdWeights w;
    w.phi1 = {mi[0] * sm_i[0] + mi[1] * sm_i[2], mi[0] * sm_i[1] + mi[1] * sm_i[3],
              mi[2] * sm_i[0] + mi[3] * sm_i[2], mi[2] * sm_i[1] + mi[3] * sm_i[3]};
    const double t[4] = {w.phi1[0] - h, w.phi1[1], w.phi1[2], w.phi1[3] - h};
    w.phi2 = {(mi[0] * t[0] + mi[1] * t[2]) / h, (mi[0] * t[1] + mi[1] * t[3]) / h,
              (mi[2] * t[0] + mi[3] * t[2]) / h, (mi[2] * t[1] + mi[3] * t[3]) / h};
    return w;
}

}  // namespace detail

/// Controlled skeleton of the wave system with forcing Q_mu psi.
inline WavePath skeleton_wave(const SpectralConfig& cfg, const PhasePoint& z0, double mu,
                              const Nonlinearity& B, const Control& psi) {
    if (mu <= 0.0) throw std::invalid_argument("skeleton_wave: mu must be positive");
    const TimeGrid& grid = psi.grid;
    if (psi.values.size() != grid.nodes())
        throw std::invalid_argument("skeleton_wave: control not defined on the grid");
    const std::size_t K = cfg.modes();
    WavePath path;
    path.grid = grid;
    path.states.reserve(grid.nodes());
    path.states.push_back(z0);

    std::vector<ModeStep> steps(K);
    std::vector<detail::WaveEtdWeights> w(K);
    for (std::size_t i = 0; i < K; ++i) {
        steps[i] = mode_step(mu, cfg.alpha[i], grid.dt);
        w[i] = detail::wave_etd_weights(mu, cfg.alpha[i], grid.dt);
    }

    PhasePoint z = z0;
    for (std::size_t n = 0; n < grid.n_steps; ++n) {
        const Field bu = B(z.u);
        PhasePoint stage(K);
        for (std::size_t i = 0; i < K; ++i) {
            const double g = (bu[i] + cfg.lambda[i] * psi.values[n][i]) / mu;  // second component
            double u = z.u[i], v = z.v[i];
            steps[i].apply(u, v);
            stage.u[i] = u + w[i].phi1[1] * g;
            stage.v[i] = v + w[i].phi1[3] * g;
        }
        const Field bs = B(stage.u);
        for (std::size_t i = 0; i < K; ++i) {
            const double g0 = (bu[i] + cfg.lambda[i] * psi.values[n][i]) / mu;
            const double g1 = (bs[i] + cfg.lambda[i] * psi.values[n + 1][i]) / mu;
            z.u[i] = stage.u[i] + w[i].phi2[1] * (g1 - g0);
            z.v[i] = stage.v[i] + w[i].phi2[3] * (g1 - g0);
        }
        detail::guard_wave(cfg, z);
        path.states.push_back(z);
    }
    return path;
}

/// One row of the small-mass coupling table.
struct CouplingRow {
    double mu = 0.0;
    double sup_difference = 0.0;
};

/// Runs the wave system for each mu and the heat system once, all driven by
/// the same noise counters, and reports sup_t |u_mu(t) - u(t)|_H per mu.
inline std::vector<CouplingRow> coupled_sk_run(const SpectralConfig& cfg, const Field& u0,
                                               const Field& v0, const std::vector<double>& mu_list,
                                               double eps, const Nonlinearity& B, const TimeGrid& grid,
                                               const NoisePlan& noise) {
    const HeatPath heat = simulate_heat(cfg, u0, eps, B, grid, noise);
    std::vector<CouplingRow> rows;
    rows.reserve(mu_list.size());
    for (double mu : mu_list) {
        const WavePath wave = simulate_wave(cfg, PhasePoint(u0, v0), mu, eps, B, grid, noise);
        double sup = 0.0;
        for (std::size_t n = 0; n < grid.nodes(); ++n)
            sup = std::max(sup, h_norm(cfg, wave.states[n].u - heat.states[n]));
        rows.push_back({mu, sup});
    }
    return rows;
}

}  // namespace skld
