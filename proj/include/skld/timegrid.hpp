#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "skld/field.hpp"
#include "skld/spectral.hpp"

namespace skld {

/// Uniform grid t_start + n dt, n = 0..n_steps.
struct TimeGrid {
    double t_start = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double start, double step, std::size_t steps) : t_start(start), dt(step), n_steps(steps) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    }

    static TimeGrid span(double start, double end, std::size_t steps) {
        if (!(end > start)) throw std::invalid_argument("TimeGrid: empty interval");
        if (steps == 0) throw std::invalid_argument("TimeGrid: need at least one step");
        return TimeGrid(start, (end - start) / static_cast<double>(steps), steps);
    }

    double t_end() const { return t_start + dt * static_cast<double>(n_steps); }
    std::size_t nodes() const { return n_steps + 1; }
    double time(std::size_t n) const { return t_start + dt * static_cast<double>(n); }
};

/// Heat-side trajectory: one Field per grid node.
struct HeatPath {
    TimeGrid grid;
    std::vector<Field> states;

    bool finite() const {
        for (const Field& f : states)
            if (!f.finite()) return false;
        return true;
    }
};

/// Wave-side trajectory: one PhasePoint per grid node.
struct WavePath {
    TimeGrid grid;
    std::vector<PhasePoint> states;

    bool finite() const {
        for (const PhasePoint& z : states)
            if (!z.finite()) return false;
        return true;
    }
};

/// Time-gridded control psi(t), one Field per node.
struct Control {
    TimeGrid grid;
    std::vector<Field> values;

    /// (1/2) integral of |psi|_H^2 by the trapezoidal rule.
    double half_l2_energy(const SpectralConfig& cfg) const {
        double s = 0.0;
        for (std::size_t n = 0; n < values.size(); ++n) {
            const double nrm = h_norm(cfg, values[n]);
            const double w = (n == 0 || n + 1 == values.size()) ? 0.5 : 1.0;
            s += w * nrm * nrm;
        }
        return 0.5 * s * grid.dt;
    }
};

}  // namespace skld
