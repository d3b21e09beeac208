#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "skld/field.hpp"
#include "skld/spectral.hpp"

namespace skld {

enum class NonlinearityKind { Zero, LinearDiagonal, Nemytskii, Sum };

/// Collocation transform between sine coefficients and point values on the
/// interior grid xi_j = j L / N, j = 1..N-1. Direct O(N K) matrices; the
/// truncation back to K modes is the dealiasing step.
class SineCollocation {
  public:
    SineCollocation(const SpectralConfig& cfg, std::size_t n_points)
        : L_(cfg.domain_length), K_(cfg.modes()), N_(n_points) {
        if (N_ < K_ + 1) throw std::invalid_argument("SineCollocation: need more collocation points than modes");
        xi_.resize(N_ - 1);
        table_.resize((N_ - 1) * K_);
        const double norm = std::sqrt(2.0 / L_);
        for (std::size_t j = 1; j < N_; ++j) {
            xi_[j - 1] = static_cast<double>(j) * L_ / static_cast<double>(N_);
            for (std::size_t k = 1; k <= K_; ++k)
                table_[(j - 1) * K_ + (k - 1)] =
                    norm * std::sin(M_PI * static_cast<double>(k * j) / static_cast<double>(N_));
        }
    }

    std::size_t points() const { return N_ - 1; }
    double point(std::size_t j) const { return xi_[j]; }

    std::vector<double> to_values(const Field& x) const {
        std::vector<double> vals(N_ - 1, 0.0);
        for (std::size_t j = 0; j < N_ - 1; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < K_; ++k) s += x[k] * table_[j * K_ + k];
            vals[j] = s;
        }
        return vals;
    }

    Field to_coeffs(const std::vector<double>& vals) const {
        Field x(K_);
        const double w = L_ / static_cast<double>(N_);
        for (std::size_t k = 0; k < K_; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < N_ - 1; ++j) s += vals[j] * table_[j * K_ + k];
            x[k] = w * s;
        }
        return x;
    }

  private:
    double L_;
    std::size_t K_;
    std::size_t N_;
    std::vector<double> xi_;
    std::vector<double> table_;
};

/// Reaction term B. Zero, a diagonal linear drag B(x) = -kappa x, or a
/// Nemytskii composition B(x)(xi) = b(xi, x(xi)) evaluated by collocation.
class Nonlinearity {
  public:
    using PointFn = std::function<double(double, double)>;

    static Nonlinearity zero() { return Nonlinearity(); }

    static Nonlinearity linear_diagonal(const SpectralConfig& cfg, double kappa) {
        return linear_diagonal(cfg, std::vector<double>(cfg.modes(), kappa));
    }

    static Nonlinearity linear_diagonal(const SpectralConfig& cfg, std::vector<double> rates) {
        if (rates.size() != cfg.modes())
            throw std::invalid_argument("Nonlinearity: one rate per mode required");
        Nonlinearity b;
        b.kind_ = NonlinearityKind::LinearDiagonal;
        b.rates_ = std::move(rates);
        for (double k : b.rates_) b.gamma0_ = std::max(b.gamma0_, std::abs(k));
        return b;
    }

    /// Pointwise sum of two reaction terms; the declared Lipschitz bound is
    /// the sum of the parts' bounds.
    static Nonlinearity sum(Nonlinearity a, Nonlinearity b) {
        Nonlinearity s;
        s.kind_ = NonlinearityKind::Sum;
        s.gamma0_ = a.gamma0() + b.gamma0();
        s.parts_ = std::make_shared<std::pair<Nonlinearity, Nonlinearity>>(std::move(a), std::move(b));
        return s;
    }

    static Nonlinearity nemytskii(const SpectralConfig& cfg, PointFn b, double lipschitz_bound,
                                  std::size_t collocation_points = 0) {
        if (lipschitz_bound <= 0.0)
            throw std::invalid_argument("Nonlinearity: declared Lipschitz bound must be positive");
        Nonlinearity nl;
        nl.kind_ = NonlinearityKind::Nemytskii;
        nl.point_fn_ = std::move(b);
        nl.gamma0_ = lipschitz_bound;
        const std::size_t n = collocation_points ? collocation_points : 2 * (cfg.modes() + 1);
        nl.colloc_ = std::make_shared<SineCollocation>(cfg, n);
        nl.spot_check(cfg);
        return nl;
    }

    NonlinearityKind kind() const { return kind_; }
    double gamma0() const { return gamma0_; }
    bool is_zero() const { return kind_ == NonlinearityKind::Zero; }

    Field operator()(const Field& x) const { return apply(x); }

    Field apply(const Field& x) const {
        switch (kind_) {
            case NonlinearityKind::Zero:
                return Field(x.modes());
            case NonlinearityKind::LinearDiagonal: {
                Field r(x.modes());
                for (std::size_t i = 0; i < x.modes(); ++i) r[i] = -rates_[i] * x[i];
                return r;
            }
            case NonlinearityKind::Nemytskii: {
                std::vector<double> vals = colloc_->to_values(x);
                for (std::size_t j = 0; j < vals.size(); ++j) {
                    const double out = point_fn_(colloc_->point(j), vals[j]);
                    // b(xi,0)=0 makes |b(xi,s)| <= gamma0 |s| a valid online check.
                    if (std::abs(out) > 1.1 * gamma0_ * std::abs(vals[j]) + 1e-14)
                        throw std::runtime_error(
                            "Nonlinearity: pointwise value exceeds declared Lipschitz bound by >10%");
                    vals[j] = out;
                }
                return colloc_->to_coeffs(vals);
            }
            case NonlinearityKind::Sum:
                return parts_->first.apply(x) + parts_->second.apply(x);
        }
        throw std::logic_error("Nonlinearity: unreachable");
    }

    /// Transpose of the derivative DB(x) applied to g, for descent gradients.
    Field jacobian_transpose(const Field& x, const Field& g) const {
        switch (kind_) {
            case NonlinearityKind::Zero:
                return Field(x.modes());
            case NonlinearityKind::LinearDiagonal: {
                Field r(x.modes());
                for (std::size_t i = 0; i < x.modes(); ++i) r[i] = -rates_[i] * g[i];
                return r;
            }
            case NonlinearityKind::Nemytskii: {
                // Pointwise multiplication by d_sigma b is self-adjoint on the grid.
                std::vector<double> uvals = colloc_->to_values(x);
                std::vector<double> gvals = colloc_->to_values(g);
                const double eps = 1e-6;
                for (std::size_t j = 0; j < uvals.size(); ++j) {
                    const double xi = colloc_->point(j);
                    const double d =
                        (point_fn_(xi, uvals[j] + eps) - point_fn_(xi, uvals[j] - eps)) / (2.0 * eps);
                    gvals[j] *= d;
                }
                return colloc_->to_coeffs(gvals);
            }
            case NonlinearityKind::Sum:
                return parts_->first.jacobian_transpose(x, g) +
                       parts_->second.jacobian_transpose(x, g);
        }
        throw std::logic_error("Nonlinearity: unreachable");
    }

  private:
    Nonlinearity() = default;

    void spot_check(const SpectralConfig& cfg) const {
        // B(0) = 0 and a pointwise Lipschitz probe on deterministic sigma pairs.
        Field zero_field(cfg.modes());
        Field b0 = apply(zero_field);
        for (std::size_t i = 0; i < b0.modes(); ++i)
            if (std::abs(b0[i]) > 1e-12)
                throw std::invalid_argument("Nonlinearity: B(0) != 0");
        const double xi = colloc_->point(colloc_->points() / 2);
        double s = 0.37;
        for (int i = 0; i < 64; ++i) {
            const double s2 = -1.7 * s + 0.11 * i;
            const double num = std::abs(point_fn_(xi, s) - point_fn_(xi, s2));
            if (num > 1.1 * gamma0_ * std::abs(s - s2) + 1e-14)
                throw std::invalid_argument("Nonlinearity: Lipschitz spot-check failed against gamma0");
            s = 0.9 * s2 + 0.3;
        }
    }

    NonlinearityKind kind_ = NonlinearityKind::Zero;
    std::vector<double> rates_;
    PointFn point_fn_;
    double gamma0_ = 0.0;
    std::shared_ptr<SineCollocation> colloc_;
    std::shared_ptr<std::pair<Nonlinearity, Nonlinearity>> parts_;
};

/// Potential F with gradient dF such that B(x) = -Q^2 dF(x).
struct GradientPotential {
    std::function<double(const Field&)> F;
    std::function<Field(const Field&)> dF;
    bool certified = false;
};

/// Checks B = -Q^2 dF and dF against finite differences of F on a fixed set
/// of probe fields; marks the potential certified on success.
inline bool certify_gradient(const SpectralConfig& cfg, const Nonlinearity& B, GradientPotential& pot,
                             double tol = 1e-6) {
    const std::size_t K = cfg.modes();
    std::vector<Field> probes;
    probes.push_back(Field(K));
    for (std::size_t k = 1; k <= std::min<std::size_t>(K, 3); ++k) probes.push_back(Field::basis(K, k, 0.6));
    Field mix(K);
    for (std::size_t i = 0; i < K; ++i) mix[i] = 0.4 * std::cos(1.7 * static_cast<double>(i + 1));
    probes.push_back(mix);

    for (const Field& x : probes) {
        const Field g = pot.dF(x);
        const Field bx = B(x);
        double scale = 1.0;
        for (std::size_t i = 0; i < K; ++i) scale = std::max(scale, std::abs(bx[i]));
        for (std::size_t i = 0; i < K; ++i) {
            const double want = -cfg.lambda[i] * cfg.lambda[i] * g[i];
            if (std::abs(bx[i] - want) > 1e-8 * scale) return false;
        }
        // dF against central differences of F.
        const double h = 1e-5;
        for (std::size_t i = 0; i < K; ++i) {
            Field xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (pot.F(xp) - pot.F(xm)) / (2.0 * h);
            const double ref = std::max(1.0, std::abs(g[i]));
            if (std::abs(fd - g[i]) > tol * ref) return false;
        }
    }
    pot.certified = true;
    return true;
}

}  // namespace skld
