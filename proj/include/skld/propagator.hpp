#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "skld/field.hpp"
#include "skld/spectral.hpp"

namespace skld {

enum class DampingBranch { Overdamped, Critical, Underdamped };

/// 2x2 flow matrix of mu q'' + q' + alpha q = 0 over time t, i.e. the
/// exponential of t * [[0, 1], [-alpha/mu, -1/mu]].
struct ModeStep {
    std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};  // row-major [a b; c d]
    DampingBranch branch = DampingBranch::Underdamped;

    void apply(double& u, double& v) const {
        const double nu = m[0] * u + m[1] * v;
        const double nv = m[2] * u + m[3] * v;
        u = nu;
        v = nv;
    }
};

namespace detail {

// cosh/cos and sinh/sin pair continued through the critical point: with
// z = (1 - 4 mu alpha) (t / (2 mu))^2,
//   C(z) = sum z^n / (2n)!,   S(z) = t * sum z^n / (2n+1)!.
inline void damped_cs(double t, double mu, double alpha, double& C, double& S) {
    const double half = t / (2.0 * mu);
    const double disc = 1.0 - 4.0 * mu * alpha;
    const double z = disc * half * half;
    if (std::abs(z) < 1e-4) {
        double cz = 1.0, sz = 1.0, term_c = 1.0, term_s = 1.0;
        for (int n = 1; n <= 6; ++n) {
            term_c *= z / static_cast<double>((2 * n) * (2 * n - 1));
            term_s *= z / static_cast<double>((2 * n + 1) * (2 * n));
            cz += term_c;
            sz += term_s;
        }
        C = cz;
        S = t * sz;
    } else if (z > 0.0) {
        const double c = std::sqrt(disc) / (2.0 * mu);
        C = std::cosh(c * t);
        S = std::sinh(c * t) / c;
    } else {
        const double w = std::sqrt(-disc) / (2.0 * mu);
        C = std::cos(w * t);
        S = std::sin(w * t) / w;
    }
}

}  // namespace detail

inline ModeStep mode_step(double mu, double alpha, double t) {
    if (mu <= 0.0) throw std::invalid_argument("mode_step: mu must be positive");
    if (t < 0.0) throw std::invalid_argument("mode_step: time must be nonnegative");
    ModeStep s;
    const double disc = 1.0 - 4.0 * mu * alpha;
    if (std::abs(disc) < 1e-9)
        s.branch = DampingBranch::Critical;
    else
        s.branch = disc > 0.0 ? DampingBranch::Overdamped : DampingBranch::Underdamped;
    if (t == 0.0) return s;

    double C, S;
    detail::damped_cs(t, mu, alpha, C, S);
    const double decay = std::exp(-t / (2.0 * mu));
    const double inv2mu = 1.0 / (2.0 * mu);
    s.m[0] = decay * (C + S * inv2mu);
    s.m[1] = decay * S;
    s.m[2] = decay * (-S * alpha / mu);
    s.m[3] = decay * (C - S * inv2mu);
    return s;
}

/// Applies the damped-wave semigroup mode-by-mode.
inline PhasePoint wave_propagate(const SpectralConfig& cfg, const PhasePoint& z, double mu, double t) {
    if (mu <= 0.0) throw std::invalid_argument("wave_propagate: mu must be positive");
    if (z.modes() != cfg.modes()) throw std::invalid_argument("wave_propagate: mode count mismatch");
    PhasePoint out = z;
    for (std::size_t i = 0; i < cfg.modes(); ++i) {
        const ModeStep s = mode_step(mu, cfg.alpha[i], t);
        s.apply(out.u[i], out.v[i]);
    }
    return out;
}

/// Heat semigroup: multiplies mode k by exp(-alpha_k t).
inline Field heat_propagate(const SpectralConfig& cfg, const Field& x, double t) {
    if (t < 0.0) throw std::invalid_argument("heat_propagate: time must be nonnegative");
    if (x.modes() != cfg.modes()) throw std::invalid_argument("heat_propagate: mode count mismatch");
    Field out = x;
    for (std::size_t i = 0; i < cfg.modes(); ++i) out[i] *= std::exp(-cfg.alpha[i] * t);
    return out;
}

/// Exact decay rate of the slowest characteristic root across modes. The
/// empirical fit below should land on this number.
inline double slowest_decay_rate(const SpectralConfig& cfg, double mu) {
    double omega = std::numeric_limits<double>::infinity();
    for (double a : cfg.alpha) {
        const double disc = 1.0 - 4.0 * mu * a;
        const double rate = disc > 0.0 ? (1.0 - std::sqrt(disc)) / (2.0 * mu) : 1.0 / (2.0 * mu);
        omega = std::min(omega, rate);
    }
    return omega;
}

/// Empirical (M_mu, omega_mu): least-squares fit of log |S_mu(t) z| over a
/// sample of times; diagnostic only.
struct DecayEstimate {
    double M = 1.0;
    double omega = 0.0;
};

inline DecayEstimate measure_decay(const SpectralConfig& cfg, double mu, const PhasePoint& z0,
                                   double t_max = 10.0, std::size_t samples = 64) {
    DecayEstimate est;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 1; i <= samples; ++i) {
        const double t = t_max * static_cast<double>(i) / static_cast<double>(samples);
        const double nrm = phase_norm(cfg, wave_propagate(cfg, z0, mu, t));
        if (nrm <= 0.0) break;
        const double y = std::log(nrm);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
    }
    if (n >= 2) {
        const double denom = static_cast<double>(n) * sxx - sx * sx;
        const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
        const double intercept = (sy - slope * sx) / static_cast<double>(n);
        est.omega = -slope;
        const double z0n = phase_norm(cfg, z0);
        est.M = z0n > 0.0 ? std::exp(intercept) / z0n : 1.0;
    }
    return est;
}

}  // namespace skld
