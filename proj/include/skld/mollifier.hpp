#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "skld/field.hpp"
#include "skld/timegrid.hpp"

namespace skld {

/// Time mollifier rho_mu(t) = mu^{-a} rho(t / mu^a) built from the standard
/// bump profile exp(-1/(1-(t-1)^2)) on (0, 2), normalized to unit mass.
struct MollifierSpec {
    double alpha_exponent = 0.5;  // any value in (0, 1)

    MollifierSpec() = default;
    explicit MollifierSpec(double a) : alpha_exponent(a) {
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("MollifierSpec: exponent must lie in (0, 1)");
    }

    static double profile_raw(double t) {
        const double s = t - 1.0;
        if (std::abs(s) >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - s * s));
    }

    /// Normalization constant 1 / int_0^2 profile_raw, computed once.
    static double profile_norm() {
        static const double c = [] {
            const std::size_t n = 1 << 14;
            const double h = 2.0 / static_cast<double>(n);
            double s = profile_raw(0.0) + profile_raw(2.0);
            for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * profile_raw(h * static_cast<double>(i));
            return 3.0 / (s * h);
        }();
        return c;
    }

    static double profile(double t) { return profile_norm() * profile_raw(t); }

    /// First moment of the unit profile, int t rho(t) dt.
    static double profile_first_moment() {
        static const double m = [] {
            const std::size_t n = 1 << 14;
            const double h = 2.0 / static_cast<double>(n);
            double s = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                const double t = h * static_cast<double>(i);
                s += (i % 2 ? 4.0 : 2.0) * t * profile_raw(t);
            }
            return profile_norm() * s * h / 3.0;
        }();
        return m;
    }

    double support_width(double mu) const { return 2.0 * std::pow(mu, alpha_exponent); }

    double rho_mu(double mu, double t) const {
        const double scale = std::pow(mu, alpha_exponent);
        return profile(t / scale) / scale;
    }

    /// Simpson mass of rho_mu; should be 1 to quadrature accuracy.
    double mass(double mu, std::size_t n_intervals = 1 << 12) const {
        const double w = support_width(mu);
        const double h = w / static_cast<double>(n_intervals);
        double s = rho_mu(mu, 0.0) + rho_mu(mu, w);
        for (std::size_t i = 1; i < n_intervals; ++i)
            s += (i % 2 ? 4.0 : 2.0) * rho_mu(mu, h * static_cast<double>(i));
        return s * h / 3.0;
    }
};

struct MollifyResult {
    HeatPath path;
    bool truncated_history = false;  // support reached past the first grid node
};

namespace detail {

inline Field sample_path(const std::vector<Field>& states, const TimeGrid& grid, double t) {
    if (t <= grid.t_start) return states.front();
    if (t >= grid.t_end()) return states.back();
    const double x = (t - grid.t_start) / grid.dt;
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(x), states.size() - 2);
    const double w = x - static_cast<double>(n);
    Field out = states[n];
    for (std::size_t k = 0; k < out.modes(); ++k)
        out[k] = (1.0 - w) * states[n][k] + w * states[n + 1][k];
    return out;
}

}  // namespace detail

/// Backward-in-time convolution phi_mu(t) = int rho_mu(tau) phi(t - tau) dtau
/// by composite Simpson over the support. History before the first grid node
/// is frozen at phi(t_start).
inline MollifyResult mollify(const SpectralConfig& cfg, const HeatPath& phi, const MollifierSpec& spec,
                             double mu, std::size_t quad_intervals = 2048) {
    if (mu <= 0.0) throw std::invalid_argument("mollify: mu must be positive");
    if (quad_intervals % 2) ++quad_intervals;
    const double w = spec.support_width(mu);
    const double span = phi.grid.t_end() - phi.grid.t_start;
    if (!(w < span / 2.0))
        throw std::invalid_argument("mollify: mollifier support too wide for the path history");

    MollifyResult res;
    res.path.grid = phi.grid;
    res.path.states.assign(phi.states.size(), Field(cfg.modes()));
    const double h = w / static_cast<double>(quad_intervals);
    for (std::size_t n = 0; n < phi.states.size(); ++n) {
        const double t = phi.grid.time(n);
        if (t - w < phi.grid.t_start) res.truncated_history = true;
        Field acc(cfg.modes());
        for (std::size_t i = 0; i <= quad_intervals; ++i) {
            const double tau = h * static_cast<double>(i);
            const double weight = (i == 0 || i == quad_intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double r = spec.rho_mu(mu, tau) * weight;
            if (r == 0.0) continue;
            const Field v = detail::sample_path(phi.states, phi.grid, t - tau);
            for (std::size_t k = 0; k < cfg.modes(); ++k) acc[k] += r * v[k];
        }
        for (std::size_t k = 0; k < cfg.modes(); ++k) res.path.states[n][k] = acc[k] * h / 3.0;
    }
    return res;
}

}  // namespace skld
