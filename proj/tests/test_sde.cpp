#include <catch2/catch_amalgamated.hpp>

#include "specwass/divergence.hpp"
#include "specwass/sde.hpp"

using namespace specwass;

namespace {

MartingaleModel brownian(double scale, double x0 = 0.0) {
    MartingaleModel m;
    m.x0 = x0;
    m.vol = constant_vol(scale);
    m.tag = "bm_x" + std::to_string(scale);
    return m;
}

std::vector<double> marginal(const PathEnsemble& e, std::size_t point) {
    std::vector<double> out(e.n_paths);
    for (std::size_t k = 0; k < e.n_paths; ++k) out[k] = e.state(k, point);
    return out;
}

}  // namespace

TEST_CASE("zero volatility gives constant paths and zero qv") {
    const PathEnsemble e = simulate(brownian(0.0, 0.7), make_dyadic_grid(0.0, 1.0, 4), 16, 5);
    for (double s : e.states) REQUIRE(s == 0.7);
    for (double q : e.realized_qv) REQUIRE(q == 0.0);
}

TEST_CASE("brownian terminal moments") {
    const std::size_t n_paths = 100000;
    const PathEnsemble e = simulate(brownian(1.0), make_dyadic_grid(0.0, 1.0, 6), n_paths, 2024, SimConfig{1});
    const auto term = marginal(e, e.grid.n_cells());
    const MeanStderr ms = mean_stderr(term);
    REQUIRE(std::fabs(ms.mean) < 3.0 / std::sqrt(static_cast<double>(n_paths)));
    double var = 0.0;
    for (double v : term) var += v * v;
    var /= static_cast<double>(n_paths);
    REQUIRE(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("linear scaling with shared noise is exact") {
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 5);
    const PathEnsemble e1 = simulate(brownian(1.0), grid, 64, 99, SimConfig{3});
    const PathEnsemble e2 = simulate(brownian(2.0), grid, 64, 99, SimConfig{3});
    for (std::size_t i = 0; i < e1.states.size(); ++i) REQUIRE(e2.states[i] == 2.0 * e1.states[i]);
}

TEST_CASE("martingale property along the grid") {
    MartingaleModel q;
    q.x0 = 0.4;
    q.vol.eval = [](double, double x) { return 1.5 + 0.5 * std::sin(x); };
    q.vol.markov_time_homogeneous = true;
    q.vol.bounded = true;
    q.vol.lipschitz_in_state = true;
    q.vol.uniformly_positive = true;
    const PathEnsemble e = simulate(q, make_dyadic_grid(0.0, 1.0, 3), 40000, 31, SimConfig{8});
    for (std::size_t i = 1; i <= e.grid.n_cells(); ++i) {
        const MeanStderr ms = mean_stderr(marginal(e, i));
        REQUIRE(std::fabs(ms.mean - q.x0) < 3.0 * ms.se);
    }
}

TEST_CASE("squared increments agree with accumulated qv") {
    MartingaleModel q;
    q.x0 = 0.0;
    q.vol.eval = [](double, double x) { return 1.5 + 0.5 * std::sin(x); };
    q.vol.markov_time_homogeneous = true;
    q.vol.bounded = true;
    const PathEnsemble e = simulate(q, make_dyadic_grid(0.0, 1.0, 12), 256, 8, SimConfig{1});
    std::vector<double> inc_sum(e.n_paths, 0.0), qv_sum(e.n_paths, 0.0);
    for (std::size_t k = 0; k < e.n_paths; ++k) {
        const auto row = e.path_states(k);
        for (std::size_t i = 0; i < e.grid.n_cells(); ++i) {
            const double d = row[i + 1] - row[i];
            inc_sum[k] += d * d;
            qv_sum[k] += e.qv(k, i);
        }
    }
    const double a = mean_stderr(inc_sum).mean;
    const double b = mean_stderr(qv_sum).mean;
    REQUIRE(std::fabs(a - b) / b < 0.05);
}

TEST_CASE("absorbed paths stay absorbed") {
    const OptimalProfile prof = solve_profile(0.5);
    MartingaleModel m = make_profile_model(prof, 0.05);
    SimConfig cfg;
    cfg.substeps_per_cell = 2;
    cfg.singular_step_rule = SingularStepRule::geometric;
    const TimeGrid grid = make_logclock_grid(0.0, 0.999, 0.5);
    const PathEnsemble e = simulate(m, grid, 4000, 12, cfg);
    std::size_t n_absorbed = 0;
    for (std::size_t k = 0; k < e.n_paths; ++k) {
        const auto row = e.path_states(k);
        bool hit = false;
        double level = -1.0;
        for (double x : row) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
            if (hit) REQUIRE(x == level);
            if (!hit && (x == 0.0 || x == 1.0)) {
                hit = true;
                level = x;
            }
        }
        if (hit) ++n_absorbed;
    }
    REQUIRE(n_absorbed > 0);
}

TEST_CASE("one-step conditional sampling") {
    RngStream rng(4, 0);
    MartingaleModel still = brownian(0.0, 0.3);
    const EmpiricalDist d0 = sample_one_step(still, 0.0, 0.5, 0.3, 100, 4, rng);
    for (double a : d0.atoms) REQUIRE(a == 0.3);

    MartingaleModel bm = brownian(1.0);
    const double h = 1.0 / 16.0;
    RngStream rng2(4, 1);
    const EmpiricalDist d1 = sample_one_step(bm, 0.0, h, 0.2, 100000, 1, rng2);
    const MeanStderr ms = mean_stderr(d1.atoms);
    REQUIRE(std::fabs(ms.mean - 0.2) < 3.0 * std::sqrt(h / 100000.0));

    MartingaleModel bm3 = brownian(3.0);
    RngStream rng3(4, 2);
    const EmpiricalDist d2 = sample_one_step(bm3, 0.25, 0.25 + h, 0.0, 100000, 2, rng3);
    double var = 0.0;
    for (double a : d2.atoms) var += a * a;
    var /= static_cast<double>(d2.atoms.size());
    REQUIRE(std::fabs(var - 9.0 * h) / (9.0 * h) < 0.05);
}

TEST_CASE("log-clock relabel") {
    MartingaleModel bm = brownian(1.0);
    const PathEnsemble e = simulate(bm, TimeGrid::from_points({0.0, 1.0 - std::exp(-0.5), 0.75}), 4, 3);
    const PathEnsemble r = time_change_to_infinite_horizon(e);
    REQUIRE(r.grid.points[0] == 0.0);
    REQUIRE_THAT(r.grid.points[1], Catch::Matchers::WithinAbs(1.0, 1e-13));
    REQUIRE_THAT(r.grid.points[2], Catch::Matchers::WithinAbs(2.772588722239781, 1e-13));
    REQUIRE(r.states == e.states);

    const PathEnsemble bad = simulate(bm, make_dyadic_grid(0.0, 1.0, 2), 4, 3);
    REQUIRE_THROWS_AS(time_change_to_infinite_horizon(bad), std::domain_error);
}

TEST_CASE("win-martingale simulation") {
    const OptimalProfile prof = solve_profile(0.5);
    SimConfig cfg;
    cfg.substeps_per_cell = 16;
    cfg.t_cut = 1.0 - std::pow(2.0, -12);
    cfg.terminal_rule = TerminalRule::bernoulli_snap;
    const std::size_t n_paths = 20000;
    const PathEnsemble e = simulate_win(0.5, 0.3, prof, n_paths, 91, cfg);

    // terminal values land exactly on {0,1}
    const auto term = marginal(e, e.grid.n_cells());
    for (double v : term) REQUIRE((v == 0.0 || v == 1.0));
    const MeanStderr ms = mean_stderr(term);
    REQUIRE(std::fabs(ms.mean - 0.3) < 3.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(n_paths)));

    REQUIRE_THROWS_AS(simulate_win(-0.5, 0.3, prof, 8, 1, cfg), std::domain_error);
    SimConfig bad = cfg;
    bad.terminal_rule = TerminalRule::none;
    REQUIRE_THROWS_AS(simulate_win(0.5, 0.3, prof, 8, 1, bad), std::domain_error);
}

TEST_CASE("symmetric start keeps the mean at one half") {
    const OptimalProfile prof = solve_profile(0.5);
    SimConfig cfg;
    cfg.substeps_per_cell = 16;
    cfg.t_cut = 0.99;
    cfg.terminal_rule = TerminalRule::bernoulli_snap;
    const PathEnsemble e = simulate_win(0.5, 0.5, prof, 20000, 17, cfg);
    for (std::size_t i = 1; i <= e.grid.n_cells(); ++i) {
        const MeanStderr ms = mean_stderr(marginal(e, i));
        REQUIRE(std::fabs(ms.mean - 0.5) < 3.5 * std::max(ms.se, 1e-12));
    }
}

TEST_CASE("sigma^p along the optimal martingale is a martingale") {
    for (double p : {0.5, 3.0}) {
        const OptimalProfile prof = solve_profile(p);
        MartingaleModel m = make_profile_model(prof, 0.35);
        SimConfig cfg;
        cfg.substeps_per_cell = 32;
        cfg.singular_step_rule = SingularStepRule::geometric;
        const TimeGrid grid = make_logclock_grid(0.0, 0.9375, 0.7);
        const PathEnsemble e = simulate(m, grid, 30000, 5, cfg);
        const double l0 = std::pow(prof.sigma(0.0, 0.35), p);
        for (std::size_t i = 1; i <= e.grid.n_cells(); ++i) {
            const double t = e.grid.points[i];
            std::vector<double> lvals(e.n_paths);
            for (std::size_t k = 0; k < e.n_paths; ++k) lvals[k] = std::pow(prof.sigma(t, e.state(k, i)), p);
            const MeanStderr ms = mean_stderr(lvals);
            // small slack beyond 3se for the Euler discretization bias
            REQUIRE(std::fabs(ms.mean - l0) < 3.0 * ms.se + 0.01 * l0);
        }
    }
}

TEST_CASE("simulate rejects grids outside the field domain") {
    const OptimalProfile prof = solve_profile(0.5);
    MartingaleModel m = make_profile_model(prof, 0.5);
    REQUIRE_THROWS_AS(simulate(m, make_dyadic_grid(0.0, 1.0, 2), 4, 1), std::domain_error);
}
