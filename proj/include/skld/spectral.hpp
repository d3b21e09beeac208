#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "skld/field.hpp"

namespace skld {

/// Eigenstructure of the Dirichlet Laplacian on (0, L), truncated to the
/// first K modes, together with the diagonal noise spectrum
/// lambda_k = noise_scale * alpha_k^(-beta).
struct SpectralConfig {
    double domain_length = M_PI;
    std::size_t mode_cutoff = 1;
    double beta = 0.0;
    double noise_scale = 1.0;
    int space_dim = 1;

    std::vector<double> alpha;   // alpha_k = (k pi / L)^2, k = 1..K
    std::vector<double> lambda;  // lambda_k = noise_scale * alpha_k^(-beta)
    bool admissible = false;     // beta > (d - 2) / 4

    std::size_t modes() const { return mode_cutoff; }
};

inline SpectralConfig build_config(double L, std::size_t K, double beta, double noise_scale,
                                   int space_dim = 1) {
    if (L <= 0.0) throw std::invalid_argument("build_config: domain length must be positive");
    if (K < 1) throw std::invalid_argument("build_config: mode cutoff must be at least 1");
    if (noise_scale <= 0.0) throw std::invalid_argument("build_config: noise scale must be positive");
    if (space_dim < 1) throw std::invalid_argument("build_config: space dimension must be positive");

    SpectralConfig cfg;
    cfg.domain_length = L;
    cfg.mode_cutoff = K;
    cfg.beta = beta;
    cfg.noise_scale = noise_scale;
    cfg.space_dim = space_dim;
    cfg.alpha.resize(K);
    cfg.lambda.resize(K);
    for (std::size_t k = 1; k <= K; ++k) {
        const double a = std::pow(static_cast<double>(k) * M_PI / L, 2);
        cfg.alpha[k - 1] = a;
        cfg.lambda[k - 1] = noise_scale * std::pow(a, -beta);
        if (!(cfg.lambda[k - 1] > std::numeric_limits<double>::min()))
            throw std::invalid_argument("build_config: lambda_" + std::to_string(k) + " underflows");
    }
    cfg.admissible = beta > (static_cast<double>(space_dim) - 2.0) / 4.0;
    return cfg;
}

/// |x|_{H^delta} = sqrt( sum_k alpha_k^delta x_k^2 ).
inline double sobolev_norm(const SpectralConfig& cfg, const Field& x, double delta) {
    if (x.modes() != cfg.modes()) throw std::invalid_argument("sobolev_norm: mode count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.modes(); ++i) s += std::pow(cfg.alpha[i], delta) * x[i] * x[i];
    return std::sqrt(s);
}

inline double h_norm(const SpectralConfig& cfg, const Field& x) { return sobolev_norm(cfg, x, 0.0); }

/// |z|^2 in H^delta x H^(delta-1).
inline double phase_norm(const SpectralConfig& cfg, const PhasePoint& z, double delta = 0.0) {
    const double a = sobolev_norm(cfg, z.u, delta);
    const double b = sobolev_norm(cfg, z.v, delta - 1.0);
    return std::sqrt(a * a + b * b);
}

inline double sobolev_inner(const SpectralConfig& cfg, const Field& x, const Field& y, double delta) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.modes(); ++i) s += std::pow(cfg.alpha[i], delta) * x[i] * y[i];
    return s;
}

/// Admissibility report for the standing hypotheses plus the small-mass
/// threshold mu < (alpha_1 - gamma_0) / gamma_0^2 (infinite when gamma_0 = 0).
struct HypothesisReport {
    bool beta_condition = false;
    bool lipschitz_condition = false;
    double small_mass_threshold = std::numeric_limits<double>::infinity();
    bool mu_below_threshold = false;

    bool all_pass() const { return beta_condition && lipschitz_condition && mu_below_threshold; }
};

inline HypothesisReport check_hypotheses(const SpectralConfig& cfg, double gamma0, double mu) {
    HypothesisReport r;
    r.beta_condition = cfg.admissible;
    r.lipschitz_condition = gamma0 < cfg.alpha[0];
    if (gamma0 > 0.0)
        r.small_mass_threshold = (cfg.alpha[0] - gamma0) / (gamma0 * gamma0);
    r.mu_below_threshold = mu < r.small_mass_threshold;
    return r;
}

}  // namespace skld
