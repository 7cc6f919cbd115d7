#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "specwass/divergence.hpp"

using namespace specwass;

namespace {

MartingaleModel brownian(double scale, double x0 = 0.0) {
    MartingaleModel m;
    m.x0 = x0;
    m.vol = constant_vol(scale);
    m.tag = "scaled_bm";
    return m;
}

MartingaleModel sin_model(double x0 = 0.0) {
    MartingaleModel m;
    m.x0 = x0;
    m.vol.eval = [](double, double x) { return 1.5 + 0.5 * std::sin(x); };
    m.vol.markov_time_homogeneous = true;
    m.vol.bounded = true;
    m.vol.lipschitz_in_state = true;
    m.vol.uniformly_positive = true;
    m.tag = "sin";
    return m;
}

}  // namespace

TEST_CASE("closed-form divergence on constant fields") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 4);
    const auto two_vs_one = sw_p_closed_form(brownian(2.0), constant_vol(1.0), 1.0, 64, grid, 1);
    REQUIRE_THAT(two_vs_one.mean, Catch::Matchers::WithinAbs(0.7978845608028654, 1e-12));
    REQUIRE(two_vs_one.se == 0.0);

    const auto same = sw_p_closed_form(brownian(1.0), constant_vol(1.0), 0.7, 64, grid, 1);
    REQUIRE(same.mean == 0.0);

    const auto vs_delta = sw_p_closed_form(brownian(2.0), constant_vol(0.0), 2.0, 64, grid, 1);
    REQUIRE_THAT(vs_delta.mean, Catch::Matchers::WithinAbs(2.5464790894703255, 1e-12));

    VolatilityField unbounded;
    unbounded.eval = [](double, double) { return 1.0; };
    REQUIRE_THROWS_AS(sw_p_closed_form(brownian(2.0), unbounded, 1.0, 8, grid, 1), unsupported_error);
}

TEST_CASE("gaussian surrogate is exact for constant fields") {
    for (double p : {0.5, 1.0, 2.0, 3.0}) {
        const double want = sw_scaling_constant(p);
        for (int n_exp : {1, 4, 7, 10}) {
            const auto est = d_Np_gaussian_surrogate(brownian(2.0), brownian(1.0), p, n_exp, 16, 3);
            REQUIRE_THAT(est.mean, Catch::Matchers::WithinAbs(want, 1e-12 * want));
            REQUIRE(est.se == 0.0);
        }
        const auto same = d_Np_gaussian_surrogate(brownian(1.5), brownian(1.5), p, 5, 16, 3);
        REQUIRE(same.mean == 0.0);
    }
}

TEST_CASE("gaussian surrogate approaches the closed form for a state-dependent field") {
    const auto target = sw_p_closed_form(sin_model(), constant_vol(1.0), 1.0, 10000,
                                         make_dyadic_grid(0.0, 1.0, 12), 5);
    SimConfig cfg;
    cfg.substeps_per_cell = 16;
    const auto est = d_Np_gaussian_surrogate(sin_model(), brownian(1.0), 1.0, 8, 10000, 5, cfg);
    const double se = std::sqrt(est.se * est.se + target.se * target.se);
    REQUIRE(std::fabs(est.mean - target.mean) < 3.0 * se + 0.01 * target.mean);
}

TEST_CASE("nested estimator with shared inner noise vanishes on identical models") {
    NestedConfig nested;
    nested.M_inner = 256;
    nested.inner_substeps = 2;
    nested.share_inner_noise = true;
    const auto est = d_Np_nested_mc(sin_model(), sin_model(), 1.0, 3, 8, nested, 9);
    REQUIRE(est.mean == 0.0);
    REQUIRE(est.se == 0.0);
}

TEST_CASE("nested estimator reproduces the constant-field value") {
    NestedConfig nested;
    nested.M_inner = 10000;
    nested.inner_substeps = 1;
    const auto est = d_Np_nested_mc(brownian(2.0), brownian(1.0), 1.0, 4, 24, nested, 12);
    const double want = sw_scaling_constant(1.0);
    REQUIRE(std::fabs(est.mean - want) / want < 0.05);
}

TEST_CASE("nested and surrogate estimators agree within combined errors") {
    NestedConfig nested;
    nested.M_inner = 4096;
    nested.inner_substeps = 4;
    SimConfig cfg;
    cfg.substeps_per_cell = 8;
    for (int n_exp : {3, 4}) {
        const auto a = d_Np_nested_mc(sin_model(), brownian(1.0), 1.0, n_exp, 96, nested, 21, cfg);
        const auto b = d_Np_gaussian_surrogate(sin_model(), brownian(1.0), 1.0, n_exp, 4096, 22, cfg);
        const double se = std::sqrt(a.se * a.se + b.se * b.se);
        REQUIRE(std::fabs(a.mean - b.mean) < 3.0 * se + 0.02 * b.mean);
    }
}

TEST_CASE("convergence table on the exact case and the trend case") {
    const int exps_exact[] = {1, 3, 5};
    const auto exact = convergence_table(brownian(2.0), brownian(1.0), 1.0, exps_exact, 32, 7);
    for (const auto& row : exact.rows) {
        REQUIRE_THAT(row.scaled_value, Catch::Matchers::WithinAbs(exact.target, 1e-12));
        REQUIRE(row.method == "surrogate");
    }

    const int exps[] = {2, 4, 6};
    SimConfig cfg;
    cfg.substeps_per_cell = 4;
    const auto rep = convergence_table(sin_model(), brownian(1.0), 1.0, exps, 3000, 7, cfg, default_workers(), 10);
    REQUIRE(rep.rows.size() == 3);
    const double err_first = std::fabs(rep.rows.front().scaled_value - rep.target);
    const double err_last = std::fabs(rep.rows.back().scaled_value - rep.target);
    REQUIRE(err_last < err_first + 2.0 * (rep.rows.back().se + rep.rows.front().se));
    REQUIRE(err_last / rep.target < 0.1);
}

TEST_CASE("per-path limit check") {
    const int exps[] = {3, 5, 7};
    const auto same = per_path_limit_check(sin_model(), sin_model(), 3.0, exps, 64, 3);
    for (const auto& row : same) {
        REQUIRE(row.mean_abs_gap == 0.0);
        REQUIRE(row.mean_integral == 0.0);
    }

    const auto consts = per_path_limit_check(brownian(1.7), brownian(0.8), 2.0, exps, 64, 3);
    for (const auto& row : consts) REQUIRE(row.mean_abs_gap < 1e-14);

    const auto rows = per_path_limit_check(sin_model(), brownian(1.0), 3.0, exps, 512, 3);
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[1].mean_abs_gap < rows[0].mean_abs_gap);
    REQUIRE(rows[2].mean_abs_gap < rows[1].mean_abs_gap);

    MartingaleModel no_flags = brownian(1.0);
    no_flags.vol.lipschitz_in_state = false;
    REQUIRE_THROWS_AS(per_path_limit_check(no_flags, brownian(1.0), 2.0, exps, 8, 3), unsupported_error);
}

TEST_CASE("specific relative entropy closed values") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 4);
    REQUIRE(specific_relative_entropy(brownian(1.0), constant_vol(1.0), 16, grid, 1).mean == 0.0);
    REQUIRE_THAT(specific_relative_entropy(brownian(2.0), constant_vol(1.0), 16, grid, 1).mean,
                 Catch::Matchers::WithinAbs(0.8068528194400547, 1e-12));
    REQUIRE_THAT(specific_relative_entropy(brownian(1.0), constant_vol(2.0), 16, grid, 1).mean,
                 Catch::Matchers::WithinAbs(0.3181471805599453, 1e-12));
    REQUIRE_THROWS_AS(specific_relative_entropy(brownian(1.0), constant_vol(0.0), 4, grid, 1),
                      std::domain_error);
}

TEST_CASE("adapted distance squared against the Wiener reference") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 4);
    REQUIRE(aw2_squared_vs_wiener(brownian(1.0), 16, grid, 1).mean == 0.0);
    REQUIRE_THAT(aw2_squared_vs_wiener(brownian(2.0), 16, grid, 1).mean, Catch::Matchers::WithinAbs(1.0, 1e-12));

    const TimeGrid fine = make_dyadic_grid(0.0, 1.0, 9);
    SimConfig cfg;
    cfg.substeps_per_cell = 2;
    const auto aw = aw2_squared_vs_wiener(sin_model(), 8000, fine, 31, cfg);
    const auto sw = sw_p_closed_form(sin_model(), constant_vol(1.0), 2.0, 8000, fine, 77, cfg);
    const double se = std::sqrt(aw.se * aw.se + sw.se * sw.se / sw_scaling_constant(2.0));
    REQUIRE(std::fabs(aw.mean - sw.mean / sw_scaling_constant(2.0)) < 3.0 * se);
}

TEST_CASE("entropy chain check") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 4);
    const auto unit = follmer_chain_check(brownian(1.0), 16, grid, 1);
    REQUIRE(unit.half_aw2 == 0.0);
    REQUIRE(unit.half_sw2 == 0.0);
    REQUIRE(unit.h == 0.0);
    REQUIRE(unit.inequality_holds);

    const auto two = follmer_chain_check(brownian(2.0), 16, grid, 1);
    REQUIRE_THAT(two.half_aw2, Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE(two.half_sw2 == two.half_aw2);
    REQUIRE_THAT(two.h, Catch::Matchers::WithinAbs(0.806852819440055, 1e-6));
    REQUIRE(two.inequality_holds);

    // pointwise oracle for the chain inequality on a volatility range
    for (double s = 0.5; s <= 2.5; s += 0.01) {
        const double lhs = (s - 1.0) * (s - 1.0);
        const double rhs = s * s - 1.0 - std::log(s * s);
        REQUIRE(lhs <= rhs + 1e-12);
    }

    SimConfig cfg;
    cfg.substeps_per_cell = 2;
    const auto sin_rep = follmer_chain_check(sin_model(), 4000, make_dyadic_grid(0.0, 1.0, 8), 13, cfg);
    REQUIRE(sin_rep.inequality_holds);
    REQUIRE(sin_rep.margin > 3.0 * sin_rep.margin_se);
}

TEST_CASE("reference-shrink sandwich") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 4);
    const auto basic = epsilon_sandwich_check(brownian(1.0), 1.0, 0.1, 1.0, 32, grid, 1);
    REQUIRE(basic.holds);

    const auto eps0 = epsilon_sandwich_check(brownian(1.3), 1.0, 0.0, 1e-8, 32, grid, 1);
    REQUIRE(eps0.holds);
    REQUIRE_THAT(eps0.lhs, Catch::Matchers::WithinAbs(eps0.mid, 1e-12));
    REQUIRE_THAT(eps0.rhs, Catch::Matchers::WithinAbs(eps0.mid, 1e-12));

    const auto still = epsilon_sandwich_check(brownian(0.0, 0.3), 0.7, 0.25, 0.8, 32, grid, 1);
    REQUIRE(still.holds);
    REQUIRE(still.mid == 0.0);
    REQUIRE_THAT(still.lhs, Catch::Matchers::WithinAbs(0.0, 1e-14));

    REQUIRE_THROWS_AS(epsilon_sandwich_check(brownian(1.0), 2.5, 0.1, 1.0, 8, grid, 1), std::domain_error);
}

TEST_CASE("two-step divergence against Gaussian kernels: dirac oracle") {
    GaussianKernelSpec ref;
    ref.mean1 = 0.1;
    ref.sd1 = 0.8;
    ref.cond = [](double x1) { return std::pair{x1, 0.5}; };
    TwoStepMeasure q;
    q.atoms = {{0.4, 0.9, 1.0}};
    const double want = std::pow(folded_normal_mean(0.4 - 0.1, 0.8), 1.5) +
                        std::pow(folded_normal_mean(0.9 - 0.4, 0.5), 1.5);
    REQUIRE_THAT(d2p_two_step(q, ref, 1.5), Catch::Matchers::WithinAbs(want, 1e-12));
}

TEST_CASE("two-step divergence is convex in the measure") {
    GaussianKernelSpec ref;
    ref.mean1 = 0.0;
    ref.sd1 = 1.0;
    ref.cond = [](double x1) { return std::pair{x1, 0.6}; };

    std::mt19937_64 gen(15);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::uniform_real_distribution<double> wdist(0.1, 1.0);
    const auto random_measure = [&] {
        TwoStepMeasure q;
        double total = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double w = wdist(gen);
            q.atoms.push_back({unif(gen), unif(gen), w});
            total += w;
        }
        for (auto& a : q.atoms) a.w /= total;
        return q;
    };

    for (int trial = 0; trial < 100; ++trial) {
        const TwoStepMeasure q = random_measure();
        const TwoStepMeasure qt = random_measure();
        for (double p : {1.0, 1.5, 2.0}) {
            const auto rep = convexity_probe_N2(ref, q, qt, 0.5, p);
            REQUIRE(rep.holds);
        }
        // equality cases
        const auto same = convexity_probe_N2(ref, q, q, 0.37, 1.5);
        REQUIRE_THAT(same.slack, Catch::Matchers::WithinAbs(0.0, 1e-12));
        const auto t0 = convexity_probe_N2(ref, q, qt, 0.0, 1.5);
        REQUIRE_THAT(t0.slack, Catch::Matchers::WithinAbs(0.0, 1e-12));
        const auto t1 = convexity_probe_N2(ref, q, qt, 1.0, 1.5);
        REQUIRE_THAT(t1.slack, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    REQUIRE_THROWS_AS(convexity_probe_N2(ref, random_measure(), random_measure(), 0.5, 0.8), unsupported_error);
}

TEST_CASE("divergence is linear in the simulated measure") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 7);
    SimConfig cfg;
    cfg.substeps_per_cell = 2;
    const std::size_t n_paths = 20000;
    const auto mix =
        sw_p_closed_form_mixture(brownian(2.0), sin_model(), constant_vol(1.0), 1.0, n_paths, grid, 5, cfg);
    const auto a = sw_p_closed_form(brownian(2.0), constant_vol(1.0), 1.0, n_paths, grid, 6, cfg);
    const auto b = sw_p_closed_form(sin_model(), constant_vol(1.0), 1.0, n_paths, grid, 7, cfg);
    const double want = 0.5 * (a.mean + b.mean);
    const double se = std::sqrt(mix.se * mix.se + 0.25 * a.se * a.se + 0.25 * b.se * b.se);
    REQUIRE(std::fabs(mix.mean - want) < 3.0 * se);
}
