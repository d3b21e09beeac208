#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace skld {

/// Truncated sine-coefficient vector: x = sum_k coeffs[k-1] * e_k.
struct Field {
    std::vector<double> coeffs;

    Field() = default;
    explicit Field(std::size_t n_modes) : coeffs(n_modes, 0.0) {}
    explicit Field(std::vector<double> c) : coeffs(std::move(c)) {}

    std::size_t modes() const { return coeffs.size(); }
    double& operator[](std::size_t k) { return coeffs[k]; }
    double operator[](std::size_t k) const { return coeffs[k]; }

    /// Unit coefficient on mode k (1-based, matching e_k).
    static Field basis(std::size_t n_modes, std::size_t k, double amplitude = 1.0) {
        if (k < 1 || k > n_modes) throw std::invalid_argument("Field::basis: mode index out of range");
        Field f(n_modes);
        f.coeffs[k - 1] = amplitude;
        return f;
    }

    bool finite() const {
        for (double c : coeffs)
            if (!std::isfinite(c)) return false;
        return true;
    }
};

inline Field operator+(const Field& a, const Field& b) {
    Field r = a;
    for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] += b.coeffs[i];
    return r;
}

inline Field operator-(const Field& a, const Field& b) {
    Field r = a;
    for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] -= b.coeffs[i];
    return r;
}

inline Field operator*(double s, const Field& a) {
    Field r = a;
    for (double& c : r.coeffs) c *= s;
    return r;
}

/// Point in the phase space: position u and velocity v.
struct PhasePoint {
    Field u;
    Field v;

    PhasePoint() = default;
    PhasePoint(Field pos, Field vel) : u(std::move(pos)), v(std::move(vel)) {
        if (u.modes() != v.modes()) throw std::invalid_argument("PhasePoint: component size mismatch");
    }
    explicit PhasePoint(std::size_t n_modes) : u(n_modes), v(n_modes) {}

    std::size_t modes() const { return u.modes(); }
    bool finite() const { return u.finite() && v.finite(); }
};

/// Velocity scaling (u, v) -> (u, sqrt(mu) v); a bijection for mu > 0.
inline PhasePoint scale_velocity(const PhasePoint& z, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("scale_velocity: mu must be positive");
    return PhasePoint(z.u, std::sqrt(mu) * z.v);
}

inline PhasePoint unscale_velocity(const PhasePoint& z, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("unscale_velocity: mu must be positive");
    return PhasePoint(z.u, (1.0 / std::sqrt(mu)) * z.v);
}

}  // namespace skld
