#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "skld/dynamics.hpp"
#include "skld/field.hpp"
#include "skld/nonlinearity.hpp"
#include "skld/rng.hpp"
#include "skld/spectral.hpp"
#include "skld/threads.hpp"

namespace skld {

enum class ExitDomainKind { Ball, Halfspace };

/// Open bounded neighbourhood of 0 whose boundary crossing defines the exit:
/// an H-norm ball or (for experiments) a one-sided mode threshold.
struct ExitDomain {
    ExitDomainKind kind = ExitDomainKind::Ball;
    double radius = 1.0;     // ball
    std::size_t mode = 1;    // halfspace, 1-based
    double level = 1.0;      // halfspace

    static ExitDomain ball(double r) {
        if (r <= 0.0) throw std::invalid_argument("ExitDomain: radius must be positive");
        ExitDomain d;
        d.kind = ExitDomainKind::Ball;
        d.radius = r;
        return d;
    }

    static ExitDomain halfspace(std::size_t mode, double level) {
        if (mode < 1) throw std::invalid_argument("ExitDomain: mode index is 1-based");
        ExitDomain d;
        d.kind = ExitDomainKind::Halfspace;
        d.mode = mode;
        d.level = level;
        return d;
    }

    /// Signed distance proxy; negative strictly inside, zero on the boundary.
    double boundary_distance(const SpectralConfig& cfg, const Field& u) const {
        switch (kind) {
            case ExitDomainKind::Ball:
                return h_norm(cfg, u) - radius;
            case ExitDomainKind::Halfspace:
                return u[mode - 1] - level;
        }
        return 0.0;
    }
};

struct ExitRecord {
    double tau = 0.0;
    Field exit_point;
    Field exit_velocity;  // wave case
    bool hit_max_steps = false;
};

/// One exit experiment: which equation, from where, and against which domain.
struct ExitProblem {
    Equation equation = Equation::Heat;
    double mu = 1.0;  // wave only
    double eps = 0.0;
    Nonlinearity B = Nonlinearity::zero();
    ExitDomain domain = ExitDomain::ball(1.0);
    Field u0;
    Field v0;  // wave only
    double dt = 0.01;
    std::size_t max_steps = 10000000;
};

/// Steps the simulator until the position component leaves the domain, then
/// refines the crossing time by linear interpolation of boundary_distance
/// between the bracketing nodes.
inline ExitRecord run_exit(const SpectralConfig& cfg, const ExitProblem& p, std::uint64_t seed,
                           std::uint64_t replica, const StepNoise* shared_noise = nullptr) {
    if (p.eps <= 0.0) throw std::invalid_argument("run_exit: eps must be positive");
    if (p.domain.boundary_distance(cfg, p.u0) >= 0.0)
        throw std::invalid_argument("run_exit: start must lie strictly inside the domain");
    const std::size_t K = cfg.modes();
    const NoisePlan noise(seed, replica);

    ExitRecord rec;
    rec.exit_point = Field(K);
    rec.exit_velocity = Field(K);

    if (p.equation == Equation::Heat) {
        std::vector<double> decay(K), bw(K), sd(K);
        for (std::size_t i = 0; i < K; ++i) {
            decay[i] = std::exp(-cfg.alpha[i] * p.dt);
            bw[i] = p.dt * detail::phi1(-cfg.alpha[i] * p.dt);
            sd[i] = std::sqrt(heat_step_variance(cfg.alpha[i], cfg.lambda[i], p.eps, p.dt));
        }
        Field u = p.u0;
        double d_prev = p.domain.boundary_distance(cfg, u);
        for (std::size_t n = 0; n < p.max_steps; ++n) {
            const Field prev = u;
            const Field b = p.B(u);
            for (std::size_t i = 0; i < K; ++i)
                u[i] = decay[i] * u[i] + bw[i] * b[i] + sd[i] * noise.normal(n, i, 0);
            const double d = p.domain.boundary_distance(cfg, u);
            if (d >= 0.0) {
                const double theta = d_prev / (d_prev - d);
                rec.tau = (static_cast<double>(n) + theta) * p.dt;
                for (std::size_t i = 0; i < K; ++i)
                    rec.exit_point[i] = (1.0 - theta) * prev[i] + theta * u[i];
                return rec;
            }
            d_prev = d;
        }
        rec.hit_max_steps = true;
        rec.tau = static_cast<double>(p.max_steps) * p.dt;
        rec.exit_point = u;
        return rec;
    }

    // wave case
    if (p.mu <= 0.0) throw std::invalid_argument("run_exit: mu must be positive");
    std::vector<ModeStep> steps(K);
    for (std::size_t i = 0; i < K; ++i) steps[i] = mode_step(p.mu, cfg.alpha[i], p.dt);
    std::optional<StepNoise> owned;
    if (!shared_noise) owned.emplace(cfg, p.mu, p.eps, p.dt);
    const StepNoise& sn = shared_noise ? *shared_noise : *owned;

    PhasePoint z(p.u0, p.v0.modes() == K ? p.v0 : Field(K));
    double d_prev = p.domain.boundary_distance(cfg, z.u);
    for (std::size_t n = 0; n < p.max_steps; ++n) {
        const PhasePoint prev = z;
        const Field b = p.B(z.u);
        for (std::size_t i = 0; i < K; ++i) {
            double u = z.u[i];
            double v = z.v[i] + p.dt * b[i] / p.mu;
            steps[i].apply(u, v);
            double du, dv;
            sn.wave_increment(noise, n, i, du, dv);
            z.u[i] = u + du;
            z.v[i] = v + dv;
        }
        const double d = p.domain.boundary_distance(cfg, z.u);
        if (d >= 0.0) {
            const double theta = d_prev / (d_prev - d);
            rec.tau = (static_cast<double>(n) + theta) * p.dt;
            for (std::size_t i = 0; i < K; ++i) {
                rec.exit_point[i] = (1.0 - theta) * prev.u[i] + theta * z.u[i];
                rec.exit_velocity[i] = (1.0 - theta) * prev.v[i] + theta * z.v[i];
            }
            return rec;
        }
        d_prev = d;
    }
    rec.hit_max_steps = true;
    rec.tau = static_cast<double>(p.max_steps) * p.dt;
    rec.exit_point = z.u;
    rec.exit_velocity = z.v;
    return rec;
}

struct ExitStats {
    double eps = 0.0;
    std::size_t replicas = 0;
    double mean_tau = 0.0;
    double median_tau = 0.0;
    double eps_log_mean = 0.0;  // eps * log(mean tau)
    double ci_lo = 0.0;         // bootstrap interval for eps_log_mean
    double ci_hi = 0.0;
    double censored_fraction = 0.0;
    bool valid = false;  // false when more than 5% of the replicas censored
    double target = 0.0; // reference value inf_{boundary} V
};

namespace detail {

inline std::uint64_t bootstrap_index(std::uint64_t seed, std::uint64_t rep, std::uint64_t draw,
                                     std::size_t n) {
    std::uint64_t h = splitmix64(seed ^ (rep * 0x9E3779B97F4A7C15ULL));
    h = splitmix64(h ^ draw);
    return h % n;
}

}  // namespace detail

/// Runs `replicas` independent exits per epsilon and aggregates the
/// Freidlin-Wentzell statistic eps * log E tau with a bootstrap interval.
/// Censored replicas are never dropped: their fraction is reported and a
/// summary with more than 5% censoring is marked invalid. When `records` is
/// given, every (eps, record) pair is appended in replica order.
inline std::vector<ExitStats> estimate_exit_scaling(
    const SpectralConfig& cfg, const ExitProblem& base, const std::vector<double>& eps_ladder,
    std::size_t replicas, double target, std::uint64_t master_seed, std::size_t bootstrap = 200,
    std::vector<std::pair<double, ExitRecord>>* records = nullptr) {
    std::vector<ExitStats> out;
    std::uint64_t eps_index = 0;
    for (double eps : eps_ladder) {
        ExitProblem p = base;
        p.eps = eps;
        std::optional<StepNoise> sn;
        if (p.equation == Equation::Wave) sn.emplace(cfg, p.mu, eps, p.dt);

        std::vector<ExitRecord> recs(replicas);
        parallel_for(replicas, [&](std::size_t r) {
            recs[r] = run_exit(cfg, p, master_seed + eps_index, r, sn ? &*sn : nullptr);
        });
        if (records)
            for (const auto& rec : recs) records->emplace_back(eps, rec);

        ExitStats st;
        st.eps = eps;
        st.replicas = replicas;
        st.target = target;
        std::vector<double> taus;
        taus.reserve(replicas);
        std::size_t censored = 0;
        for (const auto& rec : recs) {
            if (rec.hit_max_steps) ++censored;
            taus.push_back(rec.tau);
        }
        st.censored_fraction = static_cast<double>(censored) / static_cast<double>(replicas);

        double mean = 0.0;
        for (double t : taus) mean += t;
        mean /= static_cast<double>(replicas);
        st.mean_tau = mean;
        std::vector<double> sorted = taus;
        std::sort(sorted.begin(), sorted.end());
        st.median_tau = sorted[replicas / 2];
        st.eps_log_mean = eps * std::log(mean);

        if (st.censored_fraction <= 0.05) {
            st.valid = true;
            std::vector<double> boot(bootstrap);
            for (std::size_t b = 0; b < bootstrap; ++b) {
                double m = 0.0;
                for (std::size_t i = 0; i < replicas; ++i)
                    m += taus[detail::bootstrap_index(master_seed ^ 0x5BD1E995u, b, i, replicas)];
                boot[b] = eps * std::log(m / static_cast<double>(replicas));
            }
            std::sort(boot.begin(), boot.end());
            st.ci_lo = boot[static_cast<std::size_t>(0.025 * static_cast<double>(bootstrap))];
            st.ci_hi = boot[std::min(bootstrap - 1,
                                     static_cast<std::size_t>(0.975 * static_cast<double>(bootstrap)))];
        }
        out.push_back(std::move(st));
        ++eps_index;
    }
    return out;
}

/// Closed polar cap on the exit sphere: directions d with |<d, e_mode>| >= cos_min.
struct BoundaryCap {
    std::size_t mode = 1;  // 1-based
    double cos_min = 0.9;
};

struct ExitPlaceReport {
    std::size_t exits = 0;       // non-censored replicas
    std::size_t censored = 0;
    std::vector<std::size_t> angle_histogram;  // two-mode systems only
    double frac_in_cap = 0.0;    // fraction of exits inside the requested cap
    double frac_plus = 0.0;      // exits with positive cap-mode coefficient
    double frac_minus = 0.0;
    double v_cap = std::numeric_limits<double>::quiet_NaN();       // min V over the cap (B = 0)
    double v_boundary = std::numeric_limits<double>::quiet_NaN();  // min V over the sphere (B = 0)
};

/// Bins exit directions and reports how often the exit lands in the given
/// cap. For the linear system the closed-form quasi-potential of the cap and
/// of the whole boundary are attached for comparison.
inline ExitPlaceReport exit_place_histogram(const SpectralConfig& cfg, const ExitProblem& p,
                                            std::size_t replicas, const BoundaryCap& cap,
                                            std::uint64_t master_seed, std::size_t n_bins = 16) {
    if (p.domain.kind != ExitDomainKind::Ball)
        throw std::invalid_argument("exit_place_histogram: needs a ball domain");
    const std::size_t K = cfg.modes();
    if (cap.mode < 1 || cap.mode > K)
        throw std::invalid_argument("exit_place_histogram: cap mode out of range");

    std::optional<StepNoise> sn;
    if (p.equation == Equation::Wave) sn.emplace(cfg, p.mu, p.eps, p.dt);
    std::vector<ExitRecord> recs(replicas);
    parallel_for(replicas, [&](std::size_t r) {
        recs[r] = run_exit(cfg, p, master_seed, r, sn ? &*sn : nullptr);
    });

    ExitPlaceReport rep;
    if (K == 2) rep.angle_histogram.assign(n_bins, 0);
    for (const auto& rec : recs) {
        if (rec.hit_max_steps) {
            ++rep.censored;
            continue;
        }
        ++rep.exits;
        const double nrm = h_norm(cfg, rec.exit_point);
        if (nrm <= 0.0) continue;
        const double c = rec.exit_point[cap.mode - 1] / nrm;
        if (std::abs(c) >= cap.cos_min) {
            rep.frac_in_cap += 1.0;
            (c > 0.0 ? rep.frac_plus : rep.frac_minus) += 1.0;
        }
        if (K == 2) {
            const double angle = std::atan2(rec.exit_point[1], rec.exit_point[0]);
            const double unit = (angle + M_PI) / (2.0 * M_PI);
            std::size_t bin = static_cast<std::size_t>(unit * static_cast<double>(n_bins));
            if (bin >= n_bins) bin = n_bins - 1;
            ++rep.angle_histogram[bin];
        }
    }
    if (rep.exits > 0) {
        rep.frac_in_cap /= static_cast<double>(rep.exits);
        rep.frac_plus /= static_cast<double>(rep.exits);
        rep.frac_minus /= static_cast<double>(rep.exits);
    }

    if (p.B.is_zero()) {
        // V(r d) = r^2 sum_k (alpha_k / lambda_k^2) d_k^2 on the sphere
        const double r2 = p.domain.radius * p.domain.radius;
        double wmin = std::numeric_limits<double>::infinity();
        double wother = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            const double w = cfg.alpha[k] / (cfg.lambda[k] * cfg.lambda[k]);
            wmin = std::min(wmin, w);
            if (k + 1 != cap.mode) wother = std::min(wother, w);
        }
        const double wcap = cfg.alpha[cap.mode - 1] / (cfg.lambda[cap.mode - 1] * cfg.lambda[cap.mode - 1]);
        const double c2 = cap.cos_min * cap.cos_min;
        rep.v_boundary = r2 * wmin;
        // cheap cap modes attain the minimum at the pole, expensive ones on the rim
        rep.v_cap = (K == 1 || wcap <= wother) ? r2 * wcap
                                               : r2 * (c2 * wcap + (1.0 - c2) * wother);
    }
    return rep;
}

}  // namespace skld
