#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "skld/action.hpp"
#include "skld/dynamics.hpp"
#include "skld/field.hpp"
#include "skld/nonlinearity.hpp"
#include "skld/spectral.hpp"
#include "skld/timegrid.hpp"

namespace skld {

struct MamOptions {
    double t_init = 4.0;  // first horizon; doubled until the action settles
    double dt = 0.05;     // node spacing, kept fixed across the ladder
    double horizon_rel_tol = 1e-3;
    std::size_t max_horizon_doublings = 5;
    std::size_t max_iters = 30000;  // per horizon
    double grad_tol = 1e-6;
};

/// Minimum-action problem: drive the system from rest at the origin to the
/// target over a long horizon. For the wave equation the terminal velocity is
/// either pinned or left as an optimization variable.
struct MamProblem {
    Equation equation = Equation::Heat;
    double mu = 1.0;  // wave only
    Field target_u;
    std::optional<Field> target_v;   // wave: fixed terminal velocity if set
    double start_ball_radius = 0.0;  // 0 pins the start at the origin
    Nonlinearity B = Nonlinearity::zero();
    MamOptions opts;
};

struct MamResult {
    double action = 0.0;
    std::vector<Field> path;  // position nodes on `grid`
    TimeGrid grid;
    Control control;          // recovered optimal control on `grid`
    Field terminal_velocity;  // wave case (the pinned or optimized y)
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<std::pair<double, double>> horizon_ladder;  // (T, action)
};

namespace mam_detail {

/// Discrete action over interior node values (plus the terminal velocity for
/// free-velocity wave problems, plus the start node when it is confined to a
/// ball instead of pinned) together with its analytic gradient. Velocity
/// pinning enters through ghost nodes: phi'(t_0) = 0 and phi'(t_M) = y.
class DiscreteAction {
  public:
    DiscreteAction(const SpectralConfig& cfg, const MamProblem& p, std::size_t n_steps)
        : cfg_(cfg), p_(p), M_(n_steps), K_(cfg.modes()), h_(p.opts.dt) {
        if (M_ < 4) throw std::invalid_argument("DiscreteAction: need at least 4 steps");
        free_y_ = p_.equation == Equation::Wave && !p_.target_v.has_value();
        n_vars_ = K_ * (M_ - 1) + (free_y_ ? K_ : 0) + (free_start() ? K_ : 0);
    }

    std::size_t n_vars() const { return n_vars_; }
    std::size_t n_steps() const { return M_; }
    bool free_velocity() const { return free_y_; }
    bool free_start() const { return p_.start_ball_radius > 0.0; }

    /// Variable layout: [phi_1 .. phi_{M-1}] [y?] [phi_0?].
    std::vector<double> pack(const std::vector<Field>& phi, const Field& y) const {
        std::vector<double> x;
        x.reserve(n_vars_);
        for (std::size_t n = 1; n < M_; ++n)
            for (std::size_t k = 0; k < K_; ++k) x.push_back(phi[n][k]);
        if (free_y_)
            for (std::size_t k = 0; k < K_; ++k) x.push_back(y[k]);
        if (free_start())
            for (std::size_t k = 0; k < K_; ++k) x.push_back(phi[0][k]);
        return x;
    }

    void unpack(const std::vector<double>& x, std::vector<Field>& phi, Field& y) const {
        phi.assign(M_ + 1, Field(K_));
        std::size_t i = 0;
        for (std::size_t n = 1; n < M_; ++n)
            for (std::size_t k = 0; k < K_; ++k) phi[n][k] = x[i++];
        phi[M_] = p_.target_u;
        y = Field(K_);
        if (free_y_)
            for (std::size_t k = 0; k < K_; ++k) y[k] = x[i++];
        else if (p_.target_v)
            y = *p_.target_v;
        if (free_start())
            for (std::size_t k = 0; k < K_; ++k) phi[0][k] = x[i++];
    }

    /// Projects the free start node back into its ball (H-norm).
    void project(std::vector<double>& x) const {
        if (!free_start()) return;
        const std::size_t off = n_vars_ - K_;
        double nrm = 0.0;
        for (std::size_t k = 0; k < K_; ++k) nrm += x[off + k] * x[off + k];
        nrm = std::sqrt(nrm);
        if (nrm > p_.start_ball_radius) {
            const double s = p_.start_ball_radius / nrm;
            for (std::size_t k = 0; k < K_; ++k) x[off + k] *= s;
        }
    }

    double value(const std::vector<double>& x) const { return eval(x, nullptr); }

    double value_and_gradient(const std::vector<double>& x, std::vector<double>& grad) const {
        grad.assign(n_vars_, 0.0);
        return eval(x, &grad);
    }

    Control recover_control(const std::vector<double>& x, double t_start) const {
        std::vector<Field> phi;
        Field y;
        unpack(x, phi, y);
        std::vector<Field> r;
        compute_residuals(phi, y, r);
        Control c;
        c.grid = TimeGrid(t_start, h_, M_);
        c.values.assign(M_ + 1, Field(K_));
        for (std::size_t n = 0; n <= M_; ++n)
            for (std::size_t k = 0; k < K_; ++k) c.values[n][k] = r[n][k] / cfg_.lambda[k];
        return c;
    }

  private:
    // r_n,k = lambda_k psi_n,k = mu phi'' + phi' + alpha phi - B (wave)
    //                            or phi' + alpha phi - B        (heat).
    void compute_residuals(const std::vector<Field>& phi, const Field& y,
                           std::vector<Field>& r) const {
        const bool wave = p_.equation == Equation::Wave;
        const double mu = p_.mu;
        r.assign(M_ + 1, Field(K_));
        for (std::size_t n = 0; n <= M_; ++n) {
            const Field b = p_.B(phi[n]);
            for (std::size_t k = 0; k < K_; ++k) {
                double d1, d2 = 0.0;
                if (n == 0) {
                    d1 = wave ? 0.0 : (-3.0 * phi[0][k] + 4.0 * phi[1][k] - phi[2][k]) / (2.0 * h_);
                    if (wave) d2 = 2.0 * (phi[1][k] - phi[0][k]) / (h_ * h_);
                } else if (n == M_) {
                    d1 = wave
                             ? y[k]
                             : (3.0 * phi[M_][k] - 4.0 * phi[M_ - 1][k] + phi[M_ - 2][k]) / (2.0 * h_);
                    if (wave) d2 = 2.0 * (phi[M_ - 1][k] - phi[M_][k] + h_ * y[k]) / (h_ * h_);
                } else {
                    d1 = (phi[n + 1][k] - phi[n - 1][k]) / (2.0 * h_);
                    if (wave) d2 = (phi[n + 1][k] - 2.0 * phi[n][k] + phi[n - 1][k]) / (h_ * h_);
                }
                r[n][k] = (wave ? mu * d2 : 0.0) + d1 + cfg_.alpha[k] * phi[n][k] - b[k];
            }
        }
    }

    double eval(const std::vector<double>& x, std::vector<double>* grad) const {
        std::vector<Field> phi;
        Field y;
        unpack(x, phi, y);
        std::vector<Field> r;
        compute_residuals(phi, y, r);

        double S = 0.0;
        std::vector<Field> q(M_ + 1, Field(K_));  // h w_n r_n / lambda_k^2
        for (std::size_t n = 0; n <= M_; ++n) {
            const double w = (n == 0 || n == M_) ? 0.5 : 1.0;
            for (std::size_t k = 0; k < K_; ++k) {
                const double l2 = cfg_.lambda[k] * cfg_.lambda[k];
                S += 0.5 * w * h_ * r[n][k] * r[n][k] / l2;
                q[n][k] = w * h_ * r[n][k] / l2;
            }
        }
        if (!grad) return S;

        const bool wave = p_.equation == Equation::Wave;
        const double mu = p_.mu;
        const double h2 = h_ * h_;
        std::vector<Field> g(M_ + 1, Field(K_));
        for (std::size_t n = 0; n <= M_; ++n) {
            for (std::size_t k = 0; k < K_; ++k) {
                const double qn = q[n][k];
                if (n == 0) {
                    if (wave) {
                        g[1][k] += mu * qn * 2.0 / h2;
                        g[0][k] -= mu * qn * 2.0 / h2;
                    } else {
                        g[0][k] -= qn * 3.0 / (2.0 * h_);
                        g[1][k] += qn * 2.0 / h_;
                        g[2][k] -= qn / (2.0 * h_);
                    }
                } else if (n == M_) {
                    if (wave) {
                        g[M_ - 1][k] += mu * qn * 2.0 / h2;
                        g[M_][k] -= mu * qn * 2.0 / h2;
                    } else {
                        g[M_][k] += qn * 3.0 / (2.0 * h_);
                        g[M_ - 1][k] -= qn * 2.0 / h_;
                        g[M_ - 2][k] += qn / (2.0 * h_);
                    }
                } else {
                    g[n + 1][k] += qn / (2.0 * h_);
                    g[n - 1][k] -= qn / (2.0 * h_);
                    if (wave) {
                        g[n + 1][k] += mu * qn / h2;
                        g[n][k] -= 2.0 * mu * qn / h2;
                        g[n - 1][k] += mu * qn / h2;
                    }
                }
                g[n][k] += cfg_.alpha[k] * qn;
            }
        }
        if (!p_.B.is_zero())
            for (std::size_t n = 0; n <= M_; ++n) {
                const Field jt = p_.B.jacobian_transpose(phi[n], q[n]);
                for (std::size_t k = 0; k < K_; ++k) g[n][k] -= jt[k];
            }

        std::size_t i = 0;
        for (std::size_t n = 1; n < M_; ++n)
            for (std::size_t k = 0; k < K_; ++k) (*grad)[i++] = g[n][k];
        if (free_y_)
            for (std::size_t k = 0; k < K_; ++k) (*grad)[i++] = q[M_][k] * (2.0 * mu / h_ + 1.0);
        if (free_start())
            for (std::size_t k = 0; k < K_; ++k) (*grad)[i++] = g[0][k];
        return S;
    }

    const SpectralConfig& cfg_;
    const MamProblem& p_;
    std::size_t M_, K_;
    double h_;
    bool free_y_ = false;
    std::size_t n_vars_ = 0;
};

struct DescentOutcome {
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Per-mode banded Gauss-Newton matrix of the linear part of the residual,
/// used as a fixed preconditioner. The residual rows touch at most three
/// adjacent path nodes (plus the terminal-velocity variable, which only
/// neighbours phi_{M-1}), so the matrix is pentadiagonal in the natural time
/// ordering and a bandwidth-2 Cholesky factorization applies it in O(M).
class ModePreconditioner {
  public:
    // order[v] maps natural banded position -> variable slot in the packed
    // vector for this mode.
    ModePreconditioner(std::vector<std::array<double, 5>> band_rows) : n_(band_rows.size()) {
        // band_rows[i] = {diag, super1, super2, unused, unused} before
        // factorization; we factor in place into L (lower, bandwidth 2).
        l_.assign(n_ * 3, 0.0);
        // convert symmetric band (diag, +1, +2) to lower Cholesky
        std::vector<double> d(n_), e1(n_, 0.0), e2(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            d[i] = band_rows[i][0];
            if (i + 1 < n_) e1[i] = band_rows[i][1];
            if (i + 2 < n_) e2[i] = band_rows[i][2];
        }
        for (std::size_t i = 0; i < n_; ++i) {
            double lii = d[i];
            if (i >= 1) lii -= sq(l(i, i - 1));
            if (i >= 2) lii -= sq(l(i, i - 2));
            l(i, i) = std::sqrt(std::max(lii, 1e-300));
            if (i + 1 < n_) {
                double v = e1[i];
                if (i >= 1) v -= l(i, i - 1) * l(i + 1, i - 1);
                l(i + 1, i) = v / l(i, i);
            }
            if (i + 2 < n_) l(i + 2, i) = e2[i] / l(i, i);
        }
    }

    void solve(std::vector<double>& rhs) const {
        // forward substitution
        for (std::size_t i = 0; i < n_; ++i) {
            double v = rhs[i];
            if (i >= 1) v -= l(i, i - 1) * rhs[i - 1];
            if (i >= 2) v -= l(i, i - 2) * rhs[i - 2];
            rhs[i] = v / l(i, i);
        }
        // backward substitution
        for (std::size_t ii = n_; ii-- > 0;) {
            double v = rhs[ii];
            if (ii + 1 < n_) v -= l(ii + 1, ii) * rhs[ii + 1];
            if (ii + 2 < n_) v -= l(ii + 2, ii) * rhs[ii + 2];
            rhs[ii] = v / l(ii, ii);
        }
    }

  private:
    static double sq(double v) { return v * v; }
    double& l(std::size_t i, std::size_t j) { return l_[i * 3 + (i - j)]; }
    double l(std::size_t i, std::size_t j) const { return l_[i * 3 + (i - j)]; }
    std::size_t n_;
    std::vector<double> l_;  // l_[i*3 + k] = L(i, i-k), k = 0..2
};

/// Builds the per-mode preconditioners for the current rung.
class Preconditioner {
  public:
    Preconditioner(const SpectralConfig& cfg, const MamProblem& p, const DiscreteAction& A)
        : K_(cfg.modes()), M_(A.n_steps()), free_y_(A.free_velocity()),
          free_start_(A.free_start()) {
        const bool wave = p.equation == Equation::Wave;
        const double h = p.opts.dt, mu = p.mu;
        const double h2 = h * h;
        n_per_mode_ = (M_ - 1) + (free_y_ ? 1 : 0) + (free_start_ ? 1 : 0);
        for (std::size_t k = 0; k < K_; ++k) {
            const double a = cfg.alpha[k];
            const double l2 = cfg.lambda[k] * cfg.lambda[k];
            // natural order: [phi_0 if free] phi_1 .. phi_{M-1} [y if free]
            auto slot = [&](std::ptrdiff_t node) -> std::ptrdiff_t {
                // node in 0..M -> banded index or -1 when pinned
                if (node == 0) return free_start_ ? 0 : -1;
                if (node == static_cast<std::ptrdiff_t>(M_)) return -1;
                return node - 1 + (free_start_ ? 1 : 0);
            };
            const std::ptrdiff_t y_slot =
                free_y_ ? static_cast<std::ptrdiff_t>(n_per_mode_ - 1) : -1;

            std::vector<std::array<double, 5>> band(n_per_mode_, {0.0, 0.0, 0.0, 0.0, 0.0});
            auto add = [&](std::ptrdiff_t i, std::ptrdiff_t j, double v) {
                if (i < 0 || j < 0) return;
                if (i > j) std::swap(i, j);
                const std::size_t off = static_cast<std::size_t>(j - i);
                if (off <= 2) band[static_cast<std::size_t>(i)][off] += v;
            };
            for (std::size_t n = 0; n <= M_; ++n) {
                const double w = ((n == 0 || n == M_) ? 0.5 : 1.0) * h / l2;
                // linear residual row: list of (slot, coefficient)
                std::array<std::pair<std::ptrdiff_t, double>, 4> c{};
                std::size_t nc = 0;
                if (n == 0) {
                    if (wave) {
                        c[nc++] = {slot(1), 2.0 * mu / h2};
                        c[nc++] = {slot(0), -2.0 * mu / h2 + a};
                    } else {
                        c[nc++] = {slot(0), -3.0 / (2.0 * h) + a};
                        c[nc++] = {slot(1), 2.0 / h};
                        c[nc++] = {slot(2), -1.0 / (2.0 * h)};
                    }
                } else if (n == M_) {
                    if (wave) {
                        c[nc++] = {slot(M_ - 1), 2.0 * mu / h2};
                        c[nc++] = {y_slot, 2.0 * mu / h + 1.0};
                    } else {
                        c[nc++] = {slot(M_ - 1), -2.0 / h};
                        c[nc++] = {slot(M_ - 2), 1.0 / (2.0 * h)};
                    }
                } else {
                    const std::ptrdiff_t nm = static_cast<std::ptrdiff_t>(n);
                    double diag = a;
                    if (wave) diag += -2.0 * mu / h2;
                    c[nc++] = {slot(nm), diag};
                    c[nc++] = {slot(nm + 1), 1.0 / (2.0 * h) + (wave ? mu / h2 : 0.0)};
                    c[nc++] = {slot(nm - 1), -1.0 / (2.0 * h) + (wave ? mu / h2 : 0.0)};
                }
                for (std::size_t i = 0; i < nc; ++i)
                    for (std::size_t j = 0; j < nc; ++j) {
                        const auto si = c[i].first, sj = c[j].first;
                        if (si < 0 || sj < 0 || si > sj) continue;
                        if (si == sj && i != j) continue;  // slots are distinct per row
                        add(si, sj, w * c[i].second * c[j].second);
                    }
            }
            // small Tikhonov floor keeps the factorization positive definite
            for (auto& row : band) row[0] += 1e-12;
            modes_.emplace_back(std::move(band));
        }
    }

    /// d = P^{-1} g in the packed layout; also returns <g, d>.
    double apply(const std::vector<double>& g, std::vector<double>& d) const {
        d = g;
        std::vector<double> work(n_per_mode_);
        for (std::size_t k = 0; k < K_; ++k) {
            gather(d, k, work);
            modes_[k].solve(work);
            scatter(work, k, d);
        }
        double gd = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gd += g[i] * d[i];
        return gd;
    }

  private:
    // packed layout: [phi_1..phi_{M-1}] [y?] [phi_0?], each K-strided;
    // natural banded layout per mode: [phi_0?] phi_1..phi_{M-1} [y?]
    void gather(const std::vector<double>& v, std::size_t k, std::vector<double>& out) const {
        std::size_t i = 0;
        if (free_start_) out[i++] = v[(M_ - 1) * K_ + (free_y_ ? K_ : 0) + k];
        for (std::size_t n = 0; n + 1 < M_; ++n) out[i++] = v[n * K_ + k];
        if (free_y_) out[i++] = v[(M_ - 1) * K_ + k];
    }

    void scatter(const std::vector<double>& in, std::size_t k, std::vector<double>& v) const {
        std::size_t i = 0;
        if (free_start_) v[(M_ - 1) * K_ + (free_y_ ? K_ : 0) + k] = in[i++];
        for (std::size_t n = 0; n + 1 < M_; ++n) v[n * K_ + k] = in[i++];
        if (free_y_) v[(M_ - 1) * K_ + k] = in[i++];
    }

    std::size_t K_, M_;
    bool free_y_, free_start_;
    std::size_t n_per_mode_ = 0;
    std::vector<ModePreconditioner> modes_;
};

/// Monotone first-order descent: the search direction is the preconditioned
/// gradient, the step is Barzilai-Borwein-seeded in the preconditioned
/// metric, and an Armijo backtracking line search keeps every accepted step
/// a strict decrease. Projects the trial when the start node lives in a ball.
inline DescentOutcome descend(const DiscreteAction& A, const Preconditioner& P,
                              std::vector<double>& x, std::size_t max_iters, double grad_tol) {
    DescentOutcome out;
    std::vector<double> g, d, g_prev, x_prev, trial;
    double f = A.value_and_gradient(x, g);
    double step = 1.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        const double gd = P.apply(g, d);  // d = P^{-1} g, gd = <g, d>
        if (std::sqrt(std::max(0.0, gd)) <= grad_tol * (1.0 + std::abs(f))) {
            out.converged = true;
            out.iterations = it;
            out.value = f;
            return out;
        }

        if (it > 0) {
            // BB step in the P-metric: <s, y> / <y, P^{-1} y>, y = g - g_prev
            std::vector<double> yv(x.size()), tmp;
            for (std::size_t i = 0; i < x.size(); ++i) yv[i] = g[i] - g_prev[i];
            const double y_py = P.apply(yv, tmp);
            double sy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) sy += (x[i] - x_prev[i]) * yv[i];
            step = (sy > 0.0 && y_py > 0.0) ? std::clamp(sy / y_py, 1e-8, 4.0) : 1.0;
        }

        x_prev = x;
        g_prev = g;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            trial = x;
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] -= step * d[i];
            A.project(trial);
            const double f_trial = A.value(trial);
            if (f_trial <= f - 1e-4 * step * gd || f_trial < f) {
                x = trial;
                f = f_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.iterations = it;
            out.value = f;
            return out;  // stalled below machine resolution
        }
        f = A.value_and_gradient(x, g);
        out.iterations = it + 1;
    }
    out.value = f;
    return out;
}

}  // namespace mam_detail

/// Minimizes the discrete action over paths pinned at the target, doubling
/// the horizon until the optimal action settles. Warm-starts every rung with
/// the previous optimum padded by rest at the far end.
inline MamResult mam_minimize(const SpectralConfig& cfg, const MamProblem& problem) {
    const std::size_t K = cfg.modes();
    if (problem.target_u.modes() != K)
        throw std::invalid_argument("mam_minimize: target mode count mismatch");
    if (problem.equation == Equation::Wave && problem.mu <= 0.0)
        throw std::invalid_argument("mam_minimize: mu must be positive");
    if (problem.equation == Equation::Wave) {
        const auto hyp = check_hypotheses(cfg, problem.B.gamma0(), problem.mu);
        if (!hyp.mu_below_threshold)
            std::fprintf(stderr,
                         "mam_minimize: warning: mu=%g is not below the small-mass threshold %g; "
                         "the infinite-horizon representation may not apply\n",
                         problem.mu, hyp.small_mass_threshold);
    }

    const MamOptions& o = problem.opts;
    MamResult res;
    double T = o.t_init;
    std::size_t M = std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(T / o.dt)));

    // straight-line warm start in mode space
    std::vector<Field> phi(M + 1, Field(K));
    for (std::size_t n = 0; n <= M; ++n)
        for (std::size_t k = 0; k < K; ++k)
            phi[n][k] = problem.target_u[k] * static_cast<double>(n) / static_cast<double>(M);
    Field y = problem.target_v ? *problem.target_v : Field(K);

    double prev_action = std::numeric_limits<double>::infinity();
    std::size_t total_iters = 0;
    bool rung_converged = false;
    std::vector<double> x;

    for (std::size_t rung = 0;; ++rung) {
        mam_detail::DiscreteAction A(cfg, problem, M);
        const mam_detail::Preconditioner P(cfg, problem, A);
        x = A.pack(phi, y);
        const auto outcome = mam_detail::descend(A, P, x, o.max_iters, o.grad_tol);
        total_iters += outcome.iterations;
        rung_converged = outcome.converged;
        A.unpack(x, phi, y);
        res.horizon_ladder.emplace_back(T, outcome.value);

        const bool settled =
            std::isfinite(prev_action) &&
            std::abs(outcome.value - prev_action) <= o.horizon_rel_tol * std::max(1e-12, outcome.value);
        prev_action = outcome.value;
        if (settled || rung == o.max_horizon_doublings) break;

        // double the horizon, padding the far end with rest
        std::vector<Field> wide(2 * M + 1, Field(K));
        for (std::size_t n = 0; n <= M; ++n) wide[M + n] = phi[n];
        phi = std::move(wide);
        M *= 2;
        T *= 2.0;
    }

    mam_detail::DiscreteAction A(cfg, problem, M);
    res.action = prev_action;
    res.path = phi;
    res.grid = TimeGrid(-T, o.dt, M);
    res.control = A.recover_control(x, -T);
    res.terminal_velocity = y;
    res.converged = rung_converged;
    res.iterations = total_iters;
    return res;
}

/// V_mu(x): wave quasi-potential minimized over the terminal velocity.
inline MamResult v_mu(const SpectralConfig& cfg, const Field& x, double mu, const Nonlinearity& B,
                      const MamOptions& opts = {}) {
    MamProblem p;
    p.equation = Equation::Wave;
    p.mu = mu;
    p.target_u = x;
    p.B = B;
    p.opts = opts;
    return mam_minimize(cfg, p);
}

/// V(x): heat quasi-potential.
inline MamResult v_heat(const SpectralConfig& cfg, const Field& x, const Nonlinearity& B,
                        const MamOptions& opts = {}) {
    MamProblem p;
    p.equation = Equation::Heat;
    p.target_u = x;
    p.B = B;
    p.opts = opts;
    return mam_minimize(cfg, p);
}

/// Gradient-case closed form
///   V^mu(x, y) = |(-A)^{1/2} Q^{-1} x|^2 + 2 F(x) + mu |Q^{-1} y|^2;
/// without y it returns the y = 0 value, which is also inf_y.
inline double v_exact_gradient(const SpectralConfig& cfg, const Field& x,
                               const std::optional<Field>& y, double mu,
                               const GradientPotential& pot) {
    if (!pot.certified)
        throw std::invalid_argument("v_exact_gradient: potential has not been certified against B");
    double s = 2.0 * pot.F(x);
    for (std::size_t k = 0; k < cfg.modes(); ++k) {
        const double l2 = cfg.lambda[k] * cfg.lambda[k];
        s += cfg.alpha[k] * x[k] * x[k] / l2;
        if (y) s += mu * (*y)[k] * (*y)[k] / l2;
    }
    return s;
}

struct SkLimitRow {
    double mu = 0.0;
    double v_mu = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

struct SkLimitStudy {
    std::vector<SkLimitRow> rows;
    double v_heat = 0.0;
    bool heat_converged = false;

    double gap(std::size_t i) const { return std::abs(rows[i].v_mu - v_heat); }
};

/// Computes V_mu(x) down a mass ladder together with the heat value V(x).
inline SkLimitStudy sk_limit_study(const SpectralConfig& cfg, const Field& x,
                                   const std::vector<double>& mu_ladder, const Nonlinearity& B,
                                   const MamOptions& opts = {}) {
    SkLimitStudy study;
    const MamResult heat = v_heat(cfg, x, B, opts);
    study.v_heat = heat.action;
    study.heat_converged = heat.converged;
    for (double mu : mu_ladder) {
        const MamResult r = v_mu(cfg, x, mu, B, opts);
        study.rows.push_back({mu, r.action, r.converged, r.iterations});
    }
    return study;
}

struct RegularizedControlRow {
    double delta = 0.0;
    double endpoint_drift = 0.0;  // |x^mu - x^{mu,delta}| in H^{2 beta}
    double drift_over_sqrt_delta = 0.0;
    double action = 0.0;  // (1/2) |psi^{mu,delta}|^2
};

/// Applies the smoothing multiplier (1 + delta alpha_k)^{-1/2} to the optimal
/// control of a converged minimizer, re-solves the skeleton from rest, and
/// tracks how far the endpoint drifts.
inline std::vector<RegularizedControlRow> regularized_control_experiment(
    const SpectralConfig& cfg, const MamResult& mam, double mu, const Nonlinearity& B,
    const std::vector<double>& delta_ladder) {
    const std::size_t K = cfg.modes();
    auto solve_endpoint = [&](double delta, double& action_out) {
        Control psi = mam.control;
        for (auto& f : psi.values)
            for (std::size_t k = 0; k < K; ++k) f[k] /= std::sqrt(1.0 + delta * cfg.alpha[k]);
        action_out = psi.half_l2_energy(cfg);
        const WavePath z = skeleton_wave(cfg, PhasePoint(K), mu, B, psi);
        return z.states.back().u;
    };

    double base_action = 0.0;
    const Field base = solve_endpoint(0.0, base_action);
    std::vector<RegularizedControlRow> rows;
    for (double delta : delta_ladder) {
        RegularizedControlRow row;
        row.delta = delta;
        const Field xd = solve_endpoint(delta, row.action);
        row.endpoint_drift = sobolev_norm(cfg, xd - base, 2.0 * cfg.beta);
        row.drift_over_sqrt_delta = delta > 0.0 ? row.endpoint_drift / std::sqrt(delta) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace skld
