#pragma once

// Built-in invariant suite behind the `verify` command: fast deterministic
// checks of the core numerics, one PASS/FAIL line each.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "skld/action.hpp"
#include "skld/dynamics.hpp"
#include "skld/mollifier.hpp"
#include "skld/propagator.hpp"
#include "skld/quasipotential.hpp"
#include "skld/spectral.hpp"

namespace skld {

struct VerifyLine {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double bound = 0.0;
};

inline std::vector<VerifyLine> run_verify_suite() {
    std::vector<VerifyLine> lines;
    auto check = [&](const std::string& name, double measured, double bound) {
        lines.push_back({name, measured <= bound, measured, bound});
    };

    const auto cfg = build_config(M_PI, 6, 0.25, 1.0, 1);

    {  // propagator determinant identity on step-scale matrices
        double worst = 0.0;
        for (double mu : {0.05, 0.25, 1.0})
            for (double a : {1.0, 9.0, 36.0})
                for (double frac : {0.5, 2.0}) {
                    const double t = std::min(frac * 2.0 * mu, 1.0);
                    const ModeStep s = mode_step(mu, a, t);
                    const double det = s.m[0] * s.m[3] - s.m[1] * s.m[2];
                    worst = std::max(worst, std::abs(det - std::exp(-t / mu)) / std::exp(-t / mu));
                }
        check("propagator_determinant", worst, 1e-12);
    }
    {  // semigroup property
        PhasePoint z(Field::basis(6, 1, 0.4), Field::basis(6, 3, -0.8));
        const auto once = wave_propagate(cfg, z, 0.3, 1.1);
        const auto twice = wave_propagate(cfg, wave_propagate(cfg, z, 0.3, 0.4), 0.3, 0.7);
        double diff = 0.0;
        for (std::size_t k = 0; k < 6; ++k)
            diff = std::max({diff, std::abs(once.u[k] - twice.u[k]), std::abs(once.v[k] - twice.v[k])});
        check("semigroup_property", diff, 1e-11);
    }
    {  // Sobolev norms
        const auto c3 = build_config(M_PI, 3, 0.0, 1.0, 1);
        const double a = sobolev_norm(c3, Field::basis(3, 2), -1.0);
        check("sobolev_norm", std::abs(a - 0.5), 1e-14);
    }
    {  // heat integrator linear exactness
        const auto c2 = build_config(M_PI, 2, 0.0, 1.0, 1);
        const auto path = simulate_heat(c2, Field::basis(2, 1), 0.0, Nonlinearity::zero(),
                                        TimeGrid::span(0.0, std::log(2.0), 64), NoisePlan(1, 0));
        check("heat_linear_exact", std::abs(path.states.back()[0] - 0.5), 1e-12);
    }
    {  // wave run against the closed-form semigroup
        const auto c2 = build_config(M_PI, 2, 0.0, 1.0, 1);
        PhasePoint z0(Field::basis(2, 1, 0.7), Field::basis(2, 2, -0.2));
        const auto path = simulate_wave(c2, z0, 0.4, 0.0, Nonlinearity::zero(),
                                        TimeGrid::span(0.0, 2.0, 100), NoisePlan(1, 0));
        const auto direct = wave_propagate(c2, z0, 0.4, 2.0);
        double diff = 0.0;
        for (std::size_t k = 0; k < 2; ++k)
            diff = std::max(diff, std::abs(path.states.back().u[k] - direct.u[k]));
        check("wave_linear_exact", diff, 1e-11);
    }
    {  // finite-horizon energy: monotone and convergent to the closed form
        PhasePoint z(Field::basis(6, 1), Field(6));
        const double vinf = linear_min_energy_infinite(cfg, z, 1.0);
        const double v1 = linear_min_energy_finite(cfg, z, 1.0, 1.0);
        const double v10 = linear_min_energy_finite(cfg, z, 1.0, 10.0);
        const double v40 = linear_min_energy_finite(cfg, z, 1.0, 40.0);
        const bool mono = v1 >= v10 && v10 >= v40 && v40 >= vinf - 1e-12;
        check("min_energy_monotone", mono ? 0.0 : 1.0, 0.5);
        check("min_energy_horizon_limit", std::abs(v40 - vinf) / vinf, 1e-6);
    }
    {  // action decomposition identity on the sine path
        const auto c2 = build_config(M_PI, 2, 0.0, 1.0, 1);
        const TimeGrid grid = TimeGrid::span(0.0, 2.0 * M_PI, 4000);
        std::vector<Field> phi(grid.nodes(), Field(2));
        for (std::size_t n = 0; n < grid.nodes(); ++n) phi[n][0] = std::sin(grid.time(n));
        const auto rep = action_wave(c2, phi, grid, 0.3, Nonlinearity::zero());
        check("action_decomposition", rep.residual_norm / rep.value, 1e-8);
    }
    {  // mollifier mass and constant fixed point
        const MollifierSpec spec(0.5);
        check("mollifier_mass", std::abs(spec.mass(1e-2) - 1.0), 1e-12);
        const auto c1 = build_config(M_PI, 1, 0.0, 1.0, 1);
        HeatPath p;
        p.grid = TimeGrid::span(-4.0, 0.0, 400);
        p.states.assign(p.grid.nodes(), Field::basis(1, 1, 0.7));
        const auto res = mollify(c1, p, spec, 1e-2);
        double diff = 0.0;
        for (const auto& f : res.path.states) diff = std::max(diff, std::abs(f[0] - 0.7));
        check("mollifier_constant_fixed_point", diff, 1e-12);
    }
    {  // stochastic determinism
        const auto c2 = build_config(M_PI, 2, 0.0, 1.0, 1);
        const TimeGrid grid = TimeGrid::span(0.0, 0.5, 50);
        const auto B = Nonlinearity::linear_diagonal(c2, 0.3);
        const auto a = simulate_wave(c2, PhasePoint(2), 0.2, 0.5, B, grid, NoisePlan(9, 4));
        const auto b = simulate_wave(c2, PhasePoint(2), 0.2, 0.5, B, grid, NoisePlan(9, 4));
        double diff = 0.0;
        for (std::size_t n = 0; n < grid.nodes(); ++n)
            for (std::size_t k = 0; k < 2; ++k)
                diff = std::max(diff, std::abs(a.states[n].u[k] - b.states[n].u[k]));
        check("replica_determinism", diff, 0.0);
    }
    {  // hypothesis thresholds
        const auto r = check_hypotheses(cfg, 0.5, 1.0);
        check("small_mass_threshold",
              std::abs(r.small_mass_threshold - (cfg.alpha[0] - 0.5) / 0.25), 1e-12);
    }
    {  // linear quasi-potential via the optimizer
        const auto c2 = build_config(M_PI, 2, 0.0, 1.0, 1);
        MamOptions o;
        o.dt = 0.02;
        const auto res = v_mu(c2, Field::basis(2, 1), 0.5, Nonlinearity::zero(), o);
        check("mam_linear_oracle", std::abs(res.action - 1.0), 0.02);
    }
    return lines;
}

inline bool print_verify_lines(const std::vector<VerifyLine>& lines, std::FILE* out = stdout) {
    bool all = true;
    for (const auto& l : lines) {
        std::fprintf(out, "%s %-32s measured=%.3e bound=%.3e\n", l.pass ? "PASS" : "FAIL",
                     l.name.c_str(), l.measured, l.bound);
        all = all && l.pass;
    }
    return all;
}

}  // namespace skld
