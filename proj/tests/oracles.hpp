#pragma once

// Independent numerical oracles used by the test suites. Everything here is
// deliberately implemented without touching the library's closed forms so the
// two routes stay independent.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

using Mat2 = std::array<double, 4>;  // row-major
using LMat2 = std::array<long double, 4>;

inline LMat2 matmul(const LMat2& a, const LMat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

/// Scaling-and-squaring matrix exponential; extended precision internally so
/// the repeated squarings do not eat the 1e-10 comparison budget.
inline Mat2 expm22(const Mat2& in) {
    LMat2 m{in[0], in[1], in[2], in[3]};
    long double nrm = 0.0;
    for (long double v : m) nrm = std::max(nrm, std::abs(v));
    int squarings = 0;
    while (nrm > 0.25L) {
        nrm /= 2.0L;
        ++squarings;
    }
    const long double scale = std::ldexp(1.0L, -squarings);
    for (long double& v : m) v *= scale;

    LMat2 result{1.0L, 0.0L, 0.0L, 1.0L};
    LMat2 term{1.0L, 0.0L, 0.0L, 1.0L};
    for (int k = 1; k <= 24; ++k) {
        term = matmul(term, m);
        for (long double& v : term) v /= static_cast<long double>(k);
        for (int i = 0; i < 4; ++i) result[i] += term[i];
    }
    for (int s = 0; s < squarings; ++s) result = matmul(result, result);
    return {static_cast<double>(result[0]), static_cast<double>(result[1]),
            static_cast<double>(result[2]), static_cast<double>(result[3])};
}

/// Dense RK4 integration of x' = f(t, x) for small state vectors.
template <std::size_t N>
inline std::array<double, N> rk4(std::function<std::array<double, N>(double, const std::array<double, N>&)> f,
                                 std::array<double, N> x, double t0, double t1, std::size_t steps) {
    const double h = (t1 - t0) / static_cast<double>(steps);
    double t = t0;
    for (std::size_t n = 0; n < steps; ++n) {
        const auto k1 = f(t, x);
        std::array<double, N> tmp;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        const auto k2 = f(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        const auto k3 = f(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + h * k3[i];
        const auto k4 = f(t + h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;
    }
    return x;
}

/// Damped oscillator mu u'' + u' + alpha u = 0 integrated by RK4.
inline std::array<double, 2> damped_mode(double mu, double alpha, double u0, double v0, double t,
                                         std::size_t steps = 200000) {
    auto f = [mu, alpha](double, const std::array<double, 2>& x) {
        return std::array<double, 2>{x[1], (-alpha * x[0] - x[1]) / mu};
    };
    return rk4<2>(f, {u0, v0}, 0.0, t, steps);
}

/// Minimum 0.5 * int |psi|^2 driving x' = M x + N psi from 0 to target over
/// [0, T]: least-norm discrete control via the 2x2 reachability normal
/// equations on a midpoint grid.
inline double least_norm_control_energy(const Mat2& M, const std::array<double, 2>& N,
                                        const std::array<double, 2>& target, double T,
                                        std::size_t steps) {
    const double h = T / static_cast<double>(steps);
    // rows of the reachability map L: state response to a unit impulse held
    // over step n is S(T - t_mid) N h (midpoint rule).
    std::vector<std::array<double, 2>> rows(steps);
    for (std::size_t n = 0; n < steps; ++n) {
        const double tm = (static_cast<double>(n) + 0.5) * h;
        Mat2 s = expm22({M[0] * (T - tm), M[1] * (T - tm), M[2] * (T - tm), M[3] * (T - tm)});
        rows[n] = {s[0] * N[0] + s[1] * N[1], s[2] * N[0] + s[3] * N[1]};
    }
    // Gram matrix G = h * sum rows rows^T, psi* = rows^T G^{-1} target.
    double g11 = 0, g12 = 0, g22 = 0;
    for (const auto& r : rows) {
        g11 += r[0] * r[0];
        g12 += r[0] * r[1];
        g22 += r[1] * r[1];
    }
    g11 *= h;
    g12 *= h;
    g22 *= h;
    const double det = g11 * g22 - g12 * g12;
    const double y0 = (g22 * target[0] - g12 * target[1]) / det;
    const double y1 = (-g12 * target[0] + g11 * target[1]) / det;
    // energy = 0.5 |psi|^2 = 0.5 target^T G^{-1} target
    return 0.5 * (target[0] * y0 + target[1] * y1);
}

/// Stationary covariance of dz = M z dt + N dW via the 2x2 Lyapunov equation
/// M P + P M^T + N N^T = 0, solved by direct elimination.
inline std::array<double, 3> lyapunov_stationary(const Mat2& M, const std::array<double, 2>& N) {
    // Unknowns p11, p12, p22; equations from the symmetric entries.
    const double a = M[0], b = M[1], c = M[2], d = M[3];
    const double q11 = N[0] * N[0], q12 = N[0] * N[1], q22 = N[1] * N[1];
    // (1,1): 2 a p11 + 2 b p12 = -q11
    // (1,2): c p11 + (a + d) p12 + b p22 = -q12
    // (2,2): 2 c p12 + 2 d p22 = -q22
    double A[3][4] = {{2 * a, 2 * b, 0, -q11}, {c, a + d, b, -q12}, {0, 2 * c, 2 * d, -q22}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[piv], A[col]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = A[r][col] / A[col][col];
            for (int cc = col; cc < 4; ++cc) A[r][cc] -= f * A[col][cc];
        }
    }
    return {A[0][3] / A[0][0], A[1][3] / A[1][1], A[2][3] / A[2][2]};
}

/// Mean first passage time to |x| = r for dx = -alpha x dt + sqrt(eps) lambda dW
/// started at 0: T(0) = (2/(eps l^2)) int_0^r e^{a y^2/(eps l^2)} int_0^y
/// e^{-a z^2/(eps l^2)} dz dy, inner integral via erf.
inline double ou_mfpt_symmetric(double alpha, double lambda, double eps, double r,
                                std::size_t n_intervals = 1 << 14) {
    const double sig2 = eps * lambda * lambda;
    const double c = alpha / sig2;
    auto inner = [&](double y) { return std::sqrt(M_PI / (4.0 * c)) * std::erf(std::sqrt(c) * y); };
    auto f = [&](double y) { return std::exp(c * y * y) * inner(y); };
    const double h = r / static_cast<double>(n_intervals);
    double s = f(0.0) + f(r);
    for (std::size_t i = 1; i < n_intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(h * static_cast<double>(i));
    return (2.0 / sig2) * s * h / 3.0;
}

}  // namespace oracles
