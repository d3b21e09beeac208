#include <catch2/catch_amalgamated.hpp>

#include "skld/spectral.hpp"

using namespace skld;
using Catch::Approx;

TEST_CASE("Dirichlet spectrum on (0, pi)") {
    const auto cfg = build_config(M_PI, 3, 0.0, 1.0, 1);
    CHECK(cfg.alpha[0] == Approx(1.0));
    CHECK(cfg.alpha[1] == Approx(4.0));
    CHECK(cfg.alpha[2] == Approx(9.0));
    CHECK(cfg.lambda[0] == Approx(1.0));
    CHECK(cfg.lambda[1] == Approx(1.0));
    CHECK(cfg.lambda[2] == Approx(1.0));
    CHECK(cfg.admissible);  // beta = 0 > -1/4 in d = 1: white noise allowed

    for (std::size_t k = 1; k < cfg.modes(); ++k) {
        CHECK(cfg.alpha[k] > cfg.alpha[k - 1]);
        CHECK(cfg.alpha[k] > 0.0);
    }
}

TEST_CASE("noise spectrum decay") {
    const auto cfg = build_config(M_PI, 2, 0.5, 1.0, 1);
    CHECK(cfg.lambda[0] == Approx(1.0));
    CHECK(cfg.lambda[1] == Approx(0.5));
}

TEST_CASE("beta condition depends on dimension") {
    const auto cfg = build_config(M_PI, 2, 0.0, 1.0, 3);
    CHECK_FALSE(cfg.admissible);  // needs beta > 1/4
    CHECK(build_config(M_PI, 2, 0.3, 1.0, 3).admissible);
}

TEST_CASE("config rejects degenerate input") {
    CHECK_THROWS_AS(build_config(M_PI, 0, 0.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_config(0.0, 4, 0.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_config(-1.0, 4, 0.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("sobolev norms") {
    const auto cfg = build_config(M_PI, 4, 0.0, 1.0, 1);
    CHECK(sobolev_norm(cfg, Field::basis(4, 1), 1.0) == Approx(1.0));
    CHECK(sobolev_norm(cfg, Field::basis(4, 2), -1.0) == Approx(0.5));
    Field two(4);
    two[0] = 1.0;
    two[1] = 1.0;
    CHECK(sobolev_norm(cfg, two, 0.0) == Approx(std::sqrt(2.0)));
}

TEST_CASE("phase norm splits into components") {
    const auto cfg = build_config(M_PI, 5, 0.25, 1.0, 1);
    Field u(5), v(5);
    for (std::size_t i = 0; i < 5; ++i) {
        u[i] = std::sin(1.3 * static_cast<double>(i + 1));
        v[i] = std::cos(0.7 * static_cast<double>(i + 1));
    }
    const PhasePoint z(u, v);
    for (double delta : {0.0, 1.0, 1.0 + 2.0 * cfg.beta}) {
        const double lhs = phase_norm(cfg, z, delta);
        const double a = sobolev_norm(cfg, u, delta);
        const double b = sobolev_norm(cfg, v, delta - 1.0);
        CHECK(lhs * lhs == Approx(a * a + b * b).epsilon(1e-12));
    }
}

TEST_CASE("velocity scaling is a bijection") {
    const auto cfg = build_config(M_PI, 3, 0.0, 1.0, 1);
    PhasePoint z(Field::basis(3, 1, 0.8), Field::basis(3, 2, -1.4));
    const double mu = 0.37;
    const PhasePoint back = unscale_velocity(scale_velocity(z, mu), mu);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.u[i] == Approx(z.u[i]).margin(1e-15).epsilon(0));
        CHECK(back.v[i] == Approx(z.v[i]).margin(1e-15).epsilon(0));
    }
    CHECK(scale_velocity(z, mu).v[1] == Approx(std::sqrt(mu) * z.v[1]));
}

TEST_CASE("hypothesis report") {
    const auto cfg = build_config(M_PI, 4, 0.0, 1.0, 1);

    SECTION("small-mass threshold formula") {
        const auto r = check_hypotheses(cfg, 0.5, 1.0);
        CHECK(r.small_mass_threshold == Approx(2.0));
        CHECK(r.beta_condition);
        CHECK(r.lipschitz_condition);
        CHECK(r.mu_below_threshold);
    }
    SECTION("zero Lipschitz constant gives an infinite threshold") {
        const auto r = check_hypotheses(cfg, 0.0, 1e9);
        CHECK(std::isinf(r.small_mass_threshold));
        CHECK(r.mu_below_threshold);
    }
    SECTION("gamma0 above alpha_1 fails") {
        const auto r = check_hypotheses(cfg, 1.5, 0.1);
        CHECK_FALSE(r.lipschitz_condition);
    }
}
