#pragma once

// Configuration-driven experiment runner: one JSON document per experiment,
// deterministic CSV/JSON artifacts stamped with the config hash.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "skld/action.hpp"
#include "skld/dynamics.hpp"
#include "skld/exit.hpp"
#include "skld/mollifier.hpp"
#include "skld/quasipotential.hpp"
#include "skld/threads.hpp"
#include "skld/verify.hpp"
#include "skld/version.hpp"

namespace skld {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cfgio {

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
inline T require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": key '" + key + "' has the wrong type");
    }
}

template <typename T>
inline T optional(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

/// Field literal: either a coefficient array (padded to K) or
/// {"mode": k, "amplitude": a}.
inline Field parse_field(const json& j, std::size_t K, const std::string& where) {
    Field f(K);
    if (j.is_array()) {
        if (j.size() > K) throw ConfigError(where + ": more coefficients than modes");
        for (std::size_t i = 0; i < j.size(); ++i) f[i] = j[i].get<double>();
        return f;
    }
    if (j.is_object()) {
        reject_unknown_keys(j, {"mode", "amplitude"}, where);
        const auto mode = require<std::size_t>(j, "mode", where);
        const auto amp = require<double>(j, "amplitude", where);
        if (mode < 1 || mode > K) throw ConfigError(where + ": mode index out of range");
        f[mode - 1] = amp;
        return f;
    }
    throw ConfigError(where + ": expected an array or {mode, amplitude}");
}

/// FNV-1a over the canonical (sorted-key) serialization.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cfgio

struct ExperimentConfig {
    SpectralConfig spectral;
    Nonlinearity B = Nonlinearity::zero();
    Equation equation = Equation::Heat;
    double mu = 1.0;
    json experiment;  // validated per-type inside the runner
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "results";
    std::string hash;
    json raw;
};

inline ExperimentConfig parse_config(const json& j) {
    cfgio::reject_unknown_keys(
        j, {"spectral", "nonlinearity", "equation", "experiment", "seed", "output_dir"}, "config");
    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.hash = cfgio::config_hash(j);

    const json& sp = j.contains("spectral") ? j.at("spectral") : json::object();
    cfgio::reject_unknown_keys(
        sp, {"domain_length", "mode_cutoff", "beta", "noise_scale", "space_dim"}, "spectral");
    const double L = cfgio::optional(sp, "domain_length", M_PI);
    const auto K_raw = cfgio::optional<long long>(sp, "mode_cutoff", 8);
    if (K_raw < 1) throw ConfigError("spectral: mode_cutoff must be at least 1");
    const double beta = cfgio::optional(sp, "beta", 0.0);
    const double c = cfgio::optional(sp, "noise_scale", 1.0);
    const int d = cfgio::optional(sp, "space_dim", 1);
    try {
        cfg.spectral = build_config(L, static_cast<std::size_t>(K_raw), beta, c, d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("spectral: ") + e.what());
    }

    const json& nl = j.contains("nonlinearity") ? j.at("nonlinearity") : json{{"kind", "zero"}};
    cfgio::reject_unknown_keys(nl, {"kind", "rate", "rates", "strength"}, "nonlinearity");
    const auto kind = cfgio::require<std::string>(nl, "kind", "nonlinearity");
    if (kind == "zero") {
        cfg.B = Nonlinearity::zero();
    } else if (kind == "linear_diagonal") {
        if (nl.contains("rates")) {
            auto rates = nl.at("rates").get<std::vector<double>>();
            if (rates.size() != cfg.spectral.modes())
                throw ConfigError("nonlinearity: rates must list one entry per mode");
            cfg.B = Nonlinearity::linear_diagonal(cfg.spectral, std::move(rates));
        } else {
            cfg.B = Nonlinearity::linear_diagonal(cfg.spectral,
                                                  cfgio::require<double>(nl, "rate", "nonlinearity"));
        }
    } else if (kind == "nemytskii_sin") {
        // b(xi, s) = -strength sin(s); of gradient type when Q = I
        const double s = cfgio::require<double>(nl, "strength", "nonlinearity");
        if (s <= 0.0) throw ConfigError("nonlinearity: strength must be positive");
        cfg.B = Nonlinearity::nemytskii(
            cfg.spectral, [s](double, double v) { return -s * std::sin(v); }, s);
    } else {
        throw ConfigError("nonlinearity: unknown kind '" + kind + "'");
    }

    const json& eq = j.contains("equation") ? j.at("equation") : json{{"type", "heat"}};
    cfgio::reject_unknown_keys(eq, {"type", "mu"}, "equation");
    const auto type = cfgio::require<std::string>(eq, "type", "equation");
    if (type == "heat") {
        cfg.equation = Equation::Heat;
    } else if (type == "wave") {
        cfg.equation = Equation::Wave;
        cfg.mu = cfgio::require<double>(eq, "mu", "equation");
        if (cfg.mu <= 0.0) throw ConfigError("equation: mu must be positive");
    } else {
        throw ConfigError("equation: unknown type '" + type + "'");
    }

    if (!j.contains("experiment")) throw ConfigError("config: missing key 'experiment'");
    cfg.experiment = j.at("experiment");
    if (!cfg.experiment.contains("type")) throw ConfigError("experiment: missing key 'type'");

    cfg.seed = cfgio::optional<std::uint64_t>(j, "seed", 0);
    cfg.output_dir = cfgio::optional<std::string>(j, "output_dir", "results");
    return cfg;
}

namespace expio {

inline std::string stamp_comment(const ExperimentConfig& cfg) {
    return std::string("# skld ") + version() + " config " + cfg.hash;
}

inline void stamp_json(json& out, const ExperimentConfig& cfg) {
    out["toolkit_version"] = version();
    out["config_hash"] = cfg.hash;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path.string());
    f << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string wave_path_csv(const ExperimentConfig& cfg, const WavePath& p) {
    std::ostringstream os;
    os << stamp_comment(cfg) << "\n";
    os << "t,mode,u,v\n";
    for (std::size_t n = 0; n < p.states.size(); ++n)
        for (std::size_t k = 0; k < cfg.spectral.modes(); ++k)
            os << fmt(p.grid.time(n)) << "," << (k + 1) << "," << fmt(p.states[n].u[k]) << ","
               << fmt(p.states[n].v[k]) << "\n";
    return os.str();
}

inline std::string heat_path_csv(const ExperimentConfig& cfg, const HeatPath& p) {
    std::ostringstream os;
    os << stamp_comment(cfg) << "\n";
    os << "t,mode,u,v\n";
    for (std::size_t n = 0; n < p.states.size(); ++n)
        for (std::size_t k = 0; k < cfg.spectral.modes(); ++k)
            os << fmt(p.grid.time(n)) << "," << (k + 1) << "," << fmt(p.states[n][k]) << ",0\n";
    return os.str();
}

}  // namespace expio

struct RunOutcome {
    int exit_code = 0;
    std::string summary;
};

namespace runners {

inline TimeGrid grid_from(const json& e, const std::string& where) {
    const double t_end = cfgio::require<double>(e, "t_end", where);
    const double dt = cfgio::require<double>(e, "dt", where);
    if (dt <= 0.0 || t_end <= 0.0) throw ConfigError(where + ": t_end and dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    if (steps < 1) throw ConfigError(where + ": grid has no steps");
    return TimeGrid(0.0, t_end / static_cast<double>(steps), steps);
}

inline RunOutcome run_simulate(const ExperimentConfig& cfg) {
    const json& e = cfg.experiment;
    cfgio::reject_unknown_keys(e, {"type", "t_end", "dt", "eps", "u0", "v0", "replica"}, "simulate");
    const TimeGrid grid = grid_from(e, "simulate");
    const double eps = cfgio::optional(e, "eps", 0.0);
    const std::size_t K = cfg.spectral.modes();
    const Field u0 = e.contains("u0") ? cfgio::parse_field(e.at("u0"), K, "simulate.u0") : Field(K);
    const auto replica = cfgio::optional<std::uint64_t>(e, "replica", 0);
    const NoisePlan noise(cfg.seed, replica);

    json out;
    std::string csv;
    if (cfg.equation == Equation::Heat) {
        const auto path = simulate_heat(cfg.spectral, u0, eps, cfg.B, grid, noise);
        csv = expio::heat_path_csv(cfg, path);
        out["final_h_norm"] = h_norm(cfg.spectral, path.states.back());
    } else {
        const Field v0 = e.contains("v0") ? cfgio::parse_field(e.at("v0"), K, "simulate.v0") : Field(K);
        const auto path = simulate_wave(cfg.spectral, PhasePoint(u0, v0), cfg.mu, eps, cfg.B, grid, noise);
        csv = expio::wave_path_csv(cfg, path);
        out["final_h_norm"] = h_norm(cfg.spectral, path.states.back().u);
    }
    expio::stamp_json(out, cfg);
    out["experiment"] = "simulate";
    expio::write_text(cfg.output_dir / "path.csv", csv);
    expio::write_json(cfg.output_dir / "simulate.json", out);
    return {0, "simulate final_h_norm=" + expio::fmt(out["final_h_norm"].get<double>())};
}

inline RunOutcome run_sk_converge(const ExperimentConfig& cfg) {
    const json& e = cfg.experiment;
    cfgio::reject_unknown_keys(e, {"type", "t_end", "dt", "eps", "mu_ladder", "replicas", "u0", "v0"},
                               "sk-converge");
    const TimeGrid grid = grid_from(e, "sk-converge");
    const double eps = cfgio::require<double>(e, "eps", "sk-converge");
    const auto mus = cfgio::require<std::vector<double>>(e, "mu_ladder", "sk-converge");
    const auto replicas = cfgio::optional<std::size_t>(e, "replicas", 100);
    const std::size_t K = cfg.spectral.modes();
    const Field u0 =
        e.contains("u0") ? cfgio::parse_field(e.at("u0"), K, "sk-converge.u0") : Field(K);
    const Field v0 =
        e.contains("v0") ? cfgio::parse_field(e.at("v0"), K, "sk-converge.v0") : Field(K);

    std::vector<std::vector<double>> sups(mus.size(), std::vector<double>(replicas));
    parallel_for(replicas, [&](std::size_t r) {
        const auto rows =
            coupled_sk_run(cfg.spectral, u0, v0, mus, eps, cfg.B, grid, NoisePlan(cfg.seed, r));
        for (std::size_t i = 0; i < mus.size(); ++i) sups[i][r] = rows[i].sup_difference;
    });

    json table = json::array();
    std::ostringstream csv;
    csv << expio::stamp_comment(cfg) << "\n";
    csv << "mu,median_sup_diff,mean_sup_diff\n";
    for (std::size_t i = 0; i < mus.size(); ++i) {
        auto v = sups[i];
        std::sort(v.begin(), v.end());
        double mean = 0.0;
        for (double s : v) mean += s;
        mean /= static_cast<double>(replicas);
        const double median = v[replicas / 2];
        table.push_back({{"mu", mus[i]}, {"median_sup_diff", median}, {"mean_sup_diff", mean}});
        csv << expio::fmt(mus[i]) << "," << expio::fmt(median) << "," << expio::fmt(mean) << "\n";
    }
    json out;
    out["experiment"] = "sk-converge";
    out["rows"] = table;
    out["replicas"] = replicas;
    expio::stamp_json(out, cfg);
    expio::write_json(cfg.output_dir / "sk_converge.json", out);
    expio::write_text(cfg.output_dir / "sk_converge.csv", csv.str());
    return {0, "sk-converge ladder_size=" + std::to_string(mus.size())};
}

inline RunOutcome run_action(const ExperimentConfig& cfg) {
    const json& e = cfg.experiment;
    cfgio::reject_unknown_keys(e, {"type", "t_end", "dt", "path", "path_mode", "amplitude"}, "action");
    const TimeGrid grid = grid_from(e, "action");
    const auto shape = cfgio::optional<std::string>(e, "path", "sin");
    const auto mode = cfgio::optional<std::size_t>(e, "path_mode", 1);
    const double amp = cfgio::optional(e, "amplitude", 1.0);
    const std::size_t K = cfg.spectral.modes();
    if (mode < 1 || mode > K) throw ConfigError("action: path_mode out of range");

    std::vector<Field> phi(grid.nodes(), Field(K));
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
        const double t = grid.time(n);
        double v = 0.0;
        if (shape == "sin")
            v = amp * std::sin(t);
        else if (shape == "reversed_flow")
            v = amp * std::exp(cfg.spectral.alpha[mode - 1] * (t - grid.t_end()));
        else
            throw ConfigError("action: unknown path shape '" + shape + "'");
        phi[n][mode - 1] = v;
    }

    const ActionReport rep = cfg.equation == Equation::Wave
                                 ? action_wave(cfg.spectral, phi, grid, cfg.mu, cfg.B)
                                 : action_heat(cfg.spectral, phi, grid, cfg.B);
    json out;
    out["experiment"] = "action";
    out["value"] = rep.value;
    out["heat_part"] = rep.heat_part;
    out["remainder"] = rep.remainder;
    out["residual_norm"] = rep.residual_norm;
    expio::stamp_json(out, cfg);
    expio::write_json(cfg.output_dir / "action.json", out);
    return {0, "action value=" + expio::fmt(rep.value)};
}

inline MamOptions mam_options_from(const json& e) {
    MamOptions o;
    o.dt = cfgio::optional(e, "dt", o.dt);
    o.t_init = cfgio::optional(e, "t_init", o.t_init);
    o.horizon_rel_tol = cfgio::optional(e, "horizon_rel_tol", o.horizon_rel_tol);
    o.max_horizon_doublings =
        cfgio::optional<std::size_t>(e, "max_horizon_doublings", o.max_horizon_doublings);
    o.max_iters = cfgio::optional<std::size_t>(e, "max_iters", o.max_iters);
    o.grad_tol = cfgio::optional(e, "grad_tol", o.grad_tol);
    return o;
}

inline json mam_result_json(const MamResult& res, double mu_value) {
    json out;
    out["mu"] = mu_value;
    out["action"] = res.action;
    out["converged"] = res.converged;
    out["iterations"] = res.iterations;
    json ladder = json::array();
    for (const auto& [T, a] : res.horizon_ladder) ladder.push_back({{"T", T}, {"action", a}});
    out["horizon_ladder"] = ladder;
    return out;
}

inline RunOutcome run_quasipotential(const ExperimentConfig& cfg) {
    const json& e = cfg.experiment;
    cfgio::reject_unknown_keys(e,
                               {"type", "target", "target_velocity", "dt", "t_init",
                                "horizon_rel_tol", "max_horizon_doublings", "max_iters", "grad_tol"},
                               "quasipotential");
    const std::size_t K = cfg.spectral.modes();
    if (!e.contains("target")) throw ConfigError("quasipotential: missing key 'target'");
    MamProblem p;
    p.equation = cfg.equation;
    p.mu = cfg.mu;
    p.target_u = cfgio::parse_field(e.at("target"), K, "quasipotential.target");
    p.B = cfg.B;
    p.opts = mam_options_from(e);
    if (cfg.equation == Equation::Wave && e.contains("target_velocity") &&
        !(e.at("target_velocity").is_string() && e.at("target_velocity") == "free"))
        p.target_v = cfgio::parse_field(e.at("target_velocity"), K, "quasipotential.target_velocity");

    const auto hyp = check_hypotheses(cfg.spectral, cfg.B.gamma0(), cfg.mu);
    const MamResult res = mam_minimize(cfg.spectral, p);

    json out = mam_result_json(res, cfg.equation == Equation::Wave ? cfg.mu : 0.0);
    out["experiment"] = "quasipotential";
    out["hypotheses_pass"] = hyp.all_pass();
    expio::stamp_json(out, cfg);
    expio::write_json(cfg.output_dir / "quasipotential.json", out);

    std::ostringstream csv;
    csv << expio::stamp_comment(cfg) << "\n";
    csv << "t,mode,u,v\n";
    for (std::size_t n = 0; n < res.path.size(); ++n)
        for (std::size_t k = 0; k < K; ++k)
            csv << expio::fmt(res.grid.time(n)) << "," << (k + 1) << ","
                << expio::fmt(res.path[n][k]) << ",0\n";
    expio::write_text(cfg.output_dir / "mam_path.csv", csv.str());

    return {res.converged ? 0 : 2,
            "quasipotential action=" + expio::fmt(res.action) +
                (res.converged ? "" : " (not converged)")};
}

inline RunOutcome run_sk_limit(const ExperimentConfig& cfg) {
    const json& e = cfg.experiment;
    cfgio::reject_unknown_keys(e,
                               {"type", "target", "mu_ladder", "dt", "t_init", "horizon_rel_tol",
                                "max_horizon_doublings", "max_iters", "grad_tol"},
                               "sk-limit");
    const std::size_t K = cfg.spectral.modes();
    if (!e.contains("target")) throw ConfigError("sk-limit: missing key 'target'");
    const Field x = cfgio::parse_field(e.at("target"), K, "sk-limit.target");
    const auto mus = cfgio::require<std::vector<double>>(e, "mu_ladder", "sk-limit");
    const auto study = sk_limit_study(cfg.spectral, x, mus, cfg.B, mam_options_from(e));

    bool all_converged = study.heat_converged;
    json rows = json::array();
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const auto& r = study.rows[i];
        all_converged = all_converged && r.converged;
        rows.push_back({{"mu", r.mu},
                        {"v_mu", r.v_mu},
                        {"v_heat", study.v_heat},
                        {"gap", study.gap(i)},
                        {"converged", r.converged}});
    }
    json out;
    out["experiment"] = "sk-limit";
    out["rows"] = rows;
    out["v_heat"] = study.v_heat;
    expio::stamp_json(out, cfg);
    expio::write_json(cfg.output_dir / "sk_limit.json", out);
    return {all_converged ? 0 : 2, "sk-limit v_heat=" + expio::fmt(study.v_heat)};
}

inline RunOutcome run_exit_experiment(const ExperimentConfig& cfg) {
    const json& e = cfg.experiment;
    cfgio::reject_unknown_keys(e,
                               {"type", "eps_ladder", "replicas", "dt", "max_steps", "domain", "u0",
                                "v0", "target", "cap_mode", "cap_cos", "place_histogram"},
                               "exit");
    const std::size_t K = cfg.spectral.modes();
    ExitProblem p;
    p.equation = cfg.equation;
    p.mu = cfg.mu;
    p.B = cfg.B;
    p.dt = cfgio::optional(e, "dt", 0.005);
    p.max_steps = cfgio::optional<std::size_t>(e, "max_steps", 10000000);
    p.u0 = e.contains("u0") ? cfgio::parse_field(e.at("u0"), K, "exit.u0") : Field(K);
    p.v0 = e.contains("v0") ? cfgio::parse_field(e.at("v0"), K, "exit.v0") : Field(K);

    const json& dom = e.contains("domain") ? e.at("domain") : json{{"kind", "ball"}, {"radius", 0.35}};
    cfgio::reject_unknown_keys(dom, {"kind", "radius", "mode", "level"}, "exit.domain");
    const auto kind = cfgio::require<std::string>(dom, "kind", "exit.domain");
    if (kind == "ball")
        p.domain = ExitDomain::ball(cfgio::require<double>(dom, "radius", "exit.domain"));
    else if (kind == "halfspace")
        p.domain = ExitDomain::halfspace(cfgio::require<std::size_t>(dom, "mode", "exit.domain"),
                                         cfgio::require<double>(dom, "level", "exit.domain"));
    else
        throw ConfigError("exit.domain: unknown kind '" + kind + "'");

    const auto eps_ladder = cfgio::require<std::vector<double>>(e, "eps_ladder", "exit");
    const auto replicas = cfgio::optional<std::size_t>(e, "replicas", 400);
    const double target = cfgio::optional(e, "target", 0.0);

    std::vector<std::pair<double, ExitRecord>> records;
    const auto stats =
        estimate_exit_scaling(cfg.spectral, p, eps_ladder, replicas, target, cfg.seed, 200, &records);

    {  // per-replica record stream
        std::ostringstream rcsv;
        rcsv << expio::stamp_comment(cfg) << "\n";
        rcsv << "eps,tau,censored";
        for (std::size_t k = 1; k <= K; ++k) rcsv << ",u" << k;
        rcsv << "\n";
        for (const auto& [eps, rec] : records) {
            rcsv << expio::fmt(eps) << "," << expio::fmt(rec.tau) << ","
                 << (rec.hit_max_steps ? 1 : 0);
            for (std::size_t k = 0; k < K; ++k) rcsv << "," << expio::fmt(rec.exit_point[k]);
            rcsv << "\n";
        }
        expio::write_text(cfg.output_dir / "exit_records.csv", rcsv.str());
    }

    bool all_valid = true;
    json rows = json::array();
    std::ostringstream csv;
    csv << expio::stamp_comment(cfg) << "\n";
    csv << "eps,eps_log_mean_tau,ci_lo,ci_hi,target,mean_tau,median_tau,censored_fraction\n";
    for (const auto& st : stats) {
        all_valid = all_valid && st.valid;
        rows.push_back({{"eps", st.eps},
                        {"replicas", st.replicas},
                        {"mean_tau", st.mean_tau},
                        {"median_tau", st.median_tau},
                        {"eps_log_mean", st.eps_log_mean},
                        {"ci_lo", st.ci_lo},
                        {"ci_hi", st.ci_hi},
                        {"censored_fraction", st.censored_fraction},
                        {"valid", st.valid},
                        {"target", st.target}});
        csv << expio::fmt(st.eps) << "," << expio::fmt(st.eps_log_mean) << ","
            << expio::fmt(st.ci_lo) << "," << expio::fmt(st.ci_hi) << "," << expio::fmt(st.target)
            << "," << expio::fmt(st.mean_tau) << "," << expio::fmt(st.median_tau) << ","
            << expio::fmt(st.censored_fraction) << "\n";
    }
    json out;
    out["experiment"] = "exit";
    out["rows"] = rows;
    expio::stamp_json(out, cfg);

    if (cfgio::optional(e, "place_histogram", false)) {
        BoundaryCap cap{cfgio::optional<std::size_t>(e, "cap_mode", K >= 2 ? 2 : 1),
                        cfgio::optional(e, "cap_cos", 0.9)};
        ExitProblem pp = p;
        pp.eps = eps_ladder.back();
        // seed offset keeps the histogram replicas disjoint from the ladder's
        const auto place = exit_place_histogram(cfg.spectral, pp, replicas, cap, cfg.seed + 7777);
        json pj;
        pj["exits"] = place.exits;
        pj["censored"] = place.censored;
        pj["frac_in_cap"] = place.frac_in_cap;
        pj["frac_plus"] = place.frac_plus;
        pj["frac_minus"] = place.frac_minus;
        if (!std::isnan(place.v_cap)) {
            pj["v_cap"] = place.v_cap;
            pj["v_boundary"] = place.v_boundary;
        }
        pj["angle_histogram"] = place.angle_histogram;
        out["place"] = pj;
    }

    expio::write_json(cfg.output_dir / "exit_stats.json", out);
    expio::write_text(cfg.output_dir / "exit_stats.csv", csv.str());
    return {all_valid ? 0 : 3,
            all_valid ? "exit ladder_size=" + std::to_string(stats.size())
                      : "exit censoring budget exceeded"};
}

inline RunOutcome run_verify(const ExperimentConfig& cfg) {
    const auto lines = run_verify_suite();
    const bool pass = print_verify_lines(lines);
    json out;
    out["experiment"] = "verify";
    json arr = json::array();
    for (const auto& l : lines)
        arr.push_back(
            {{"name", l.name}, {"pass", l.pass}, {"measured", l.measured}, {"bound", l.bound}});
    out["checks"] = arr;
    out["all_pass"] = pass;
    expio::stamp_json(out, cfg);
    expio::write_json(cfg.output_dir / "verify.json", out);
    return {pass ? 0 : 1, pass ? "verify all checks passed" : "verify FAILED"};
}

}  // namespace runners

/// Executes a parsed experiment; creates the output directory first.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    const auto type = cfgio::require<std::string>(cfg.experiment, "type", "experiment");
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome out;
    if (type == "simulate")
        out = runners::run_simulate(cfg);
    else if (type == "sk-converge")
        out = runners::run_sk_converge(cfg);
    else if (type == "action")
        out = runners::run_action(cfg);
    else if (type == "quasipotential")
        out = runners::run_quasipotential(cfg);
    else if (type == "sk-limit")
        out = runners::run_sk_limit(cfg);
    else if (type == "exit")
        out = runners::run_exit_experiment(cfg);
    else if (type == "verify")
        out = runners::run_verify(cfg);
    else
        throw ConfigError("experiment: unknown type '" + type + "'");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), " wall=%.2fs", wall);
    out.summary += buf;
    return out;
}

/// Top-level entry used by the CLI: parse, validate, execute.
/// Exit codes: 0 success, 1 validation failure, 2 solver non-convergence,
/// 3 Monte Carlo budget exceeded.
inline int run_config_file(const std::string& path, std::string& summary) {
    json j;
    try {
        std::ifstream f(path);
        if (!f) {
            summary = "cannot open config file " + path;
            return 1;
        }
        j = json::parse(f);
    } catch (const json::exception& e) {
        summary = std::string("config parse error: ") + e.what();
        return 1;
    }
    try {
        const ExperimentConfig cfg = parse_config(j);
        const RunOutcome out = run_experiment(cfg);
        summary = out.summary;
        return out.exit_code;
    } catch (const ConfigError& e) {
        summary = std::string("config error: ") + e.what();
        return 1;
    } catch (const std::exception& e) {
        summary = std::string("runtime error: ") + e.what();
        return 2;
    }
}

/// Reformats result JSON files in `dir` into gnuplot-ready .dat tables.
/// Missing series are skipped with a warning; an empty directory is fine.
inline int emit_plots(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) {
        std::fprintf(stderr, "warning: results directory %s does not exist\n", dir.string().c_str());
        return 0;
    }
    int written = 0;

    auto stamp_of = [](const json& j) {
        return std::string("# skld ") + j.value("toolkit_version", std::string("?")) + " config " +
               j.value("config_hash", std::string("?")) + "\n";
    };

    const fs::path skl = dir / "sk_limit.json";
    if (fs::exists(skl)) {
        std::ifstream f(skl);
        json j = json::parse(f);
        std::ostringstream os;
        os << stamp_of(j);
        os << "# small-mass quasi-potential ladder: V_mu(x) vs V(x)\n";
        os << "# mu v_mu v_heat gap\n";
        for (const auto& r : j.at("rows"))
            os << expio::fmt(r.at("mu").get<double>()) << " " << expio::fmt(r.at("v_mu").get<double>())
               << " " << expio::fmt(r.at("v_heat").get<double>()) << " "
               << expio::fmt(r.at("gap").get<double>()) << "\n";
        expio::write_text(dir / "sk_limit.dat", os.str());
        ++written;
    } else {
        std::fprintf(stderr, "warning: no sk_limit.json series in %s\n", dir.string().c_str());
    }

    const fs::path ext = dir / "exit_stats.json";
    if (fs::exists(ext)) {
        std::ifstream f(ext);
        json j = json::parse(f);
        std::ostringstream os;
        os << stamp_of(j);
        os << "# exit-time scaling: eps log E tau vs the quasi-potential target\n";
        os << "# eps eps_log_mean_tau ci_lo ci_hi target\n";
        for (const auto& r : j.at("rows"))
            os << expio::fmt(r.at("eps").get<double>()) << " "
               << expio::fmt(r.at("eps_log_mean").get<double>()) << " "
               << expio::fmt(r.at("ci_lo").get<double>()) << " "
               << expio::fmt(r.at("ci_hi").get<double>()) << " "
               << expio::fmt(r.at("target").get<double>()) << "\n";
        expio::write_text(dir / "exit_scaling.dat", os.str());
        ++written;
    } else {
        std::fprintf(stderr, "warning: no exit_stats.json series in %s\n", dir.string().c_str());
    }

    const fs::path skc = dir / "sk_converge.json";
    if (fs::exists(skc)) {
        std::ifstream f(skc);
        json j = json::parse(f);
        std::ostringstream os;
        os << stamp_of(j);
        os << "# pathwise small-mass coupling: sup_t |u_mu - u|_H\n";
        os << "# mu median_sup_diff mean_sup_diff\n";
        for (const auto& r : j.at("rows"))
            os << expio::fmt(r.at("mu").get<double>()) << " "
               << expio::fmt(r.at("median_sup_diff").get<double>()) << " "
               << expio::fmt(r.at("mean_sup_diff").get<double>()) << "\n";
        expio::write_text(dir / "sk_converge.dat", os.str());
        ++written;
    } else {
        std::fprintf(stderr, "warning: no sk_converge.json series in %s\n", dir.string().c_str());
    }

    std::printf("emit-plots wrote %d file(s)\n", written);
    return 0;
}

}  // namespace skld
