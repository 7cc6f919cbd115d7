// Command-line driver: builds divergence convergence tables, optimal
// win-martingale profiles, path ensembles, and the verification suites, and
// writes deterministic CSV/JSON reports (timestamps go to a separate
// metadata file). Exit codes: 0 pass, 1 check failure, 2 config error,
// 3 numeric error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "specwass/specwass.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specwass;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return cfg;
}

const json& need(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw ConfigError("missing config field: " + key);
    return cfg.at(key);
}

double need_num(const json& cfg, const std::string& key) {
    const json& v = need(cfg, key);
    if (!v.is_number()) throw ConfigError("config field must be numeric: " + key);
    return v.get<double>();
}

double opt_num(const json& cfg, const std::string& key, double fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg.at(key).is_number()) throw ConfigError("config field must be numeric: " + key);
    return cfg.at(key).get<double>();
}

std::size_t need_count(const json& cfg, const std::string& key) {
    const double v = need_num(cfg, key);
    if (!(v >= 1.0)) throw ConfigError("config field must be a positive count: " + key);
    return static_cast<std::size_t>(v);
}

std::size_t opt_count(const json& cfg, const std::string& key, std::size_t fallback) {
    if (!cfg.contains(key)) return fallback;
    return need_count(cfg, key);
}

bool opt_bool(const json& cfg, const std::string& key, bool fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg.at(key).is_boolean()) throw ConfigError("config field must be boolean: " + key);
    return cfg.at(key).get<bool>();
}

std::vector<double> opt_num_list(const json& cfg, const std::string& key, std::vector<double> fallback) {
    if (!cfg.contains(key)) return fallback;
    const json& v = cfg.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError("config field must be a nonempty array: " + key);
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("config field must hold numbers: " + key);
        out.push_back(e.get<double>());
    }
    return out;
}

struct ParsedModel {
    MartingaleModel model;
    bool is_win = false;       // lives on [0,1] with a profile/closed-form volatility
    double profile_p = 0.0;    // set when kind == "profile"
    bool has_profile = false;
    OptimalProfile profile;
};

VolatilityField sin_vol(double base, double amplitude) {
    VolatilityField f;
    f.eval = [base, amplitude](double, double x) { return base + amplitude * std::sin(x); };
    f.markov_time_homogeneous = true;
    f.bounded = true;
    f.lipschitz_in_state = true;
    f.uniformly_positive = base - std::fabs(amplitude) > 0.0;
    return f;
}

ParsedModel parse_model(const json& m) {
    if (!m.is_object()) throw ConfigError("model must be an object with a kind field");
    const std::string kind = need(m, "kind").get<std::string>();
    ParsedModel out;
    if (kind == "constant") {
        const double sigma = need_num(m, "sigma");
        if (sigma < 0.0) throw ConfigError("model.sigma must be nonnegative");
        out.model.x0 = opt_num(m, "x0", 0.0);
        out.model.vol = constant_vol(sigma);
        out.model.tag = "constant_" + fmt_double(sigma);
        return out;
    }
    if (kind == "sin") {
        out.model.x0 = opt_num(m, "x0", 0.0);
        out.model.vol = sin_vol(opt_num(m, "base", 1.5), opt_num(m, "amplitude", 0.5));
        out.model.tag = "sin";
        return out;
    }
    if (kind == "profile") {
        const double p = need_num(m, "p");
        if (!(p > 0.0)) throw ConfigError("model.p must be positive");
        const double x0 = need_num(m, "x0");
        if (!(x0 > 0.0 && x0 < 1.0)) throw ConfigError("model.x0 must lie in (0,1)");
        out.profile = solve_profile(p);
        out.has_profile = true;
        out.profile_p = p;
        out.model = make_profile_model(out.profile, x0);
        out.is_win = true;
        return out;
    }
    for (WinKind k : {WinKind::p_half, WinKind::bass, WinKind::wright_fisher, WinKind::aldous}) {
        if (kind == win_kind_name(k)) {
            const double x0 = need_num(m, "x0");
            if (!(x0 > 0.0 && x0 < 1.0)) throw ConfigError("model.x0 must lie in (0,1)");
            out.model = make_closed_form_model(k, x0);
            out.is_win = true;
            return out;
        }
    }
    throw ConfigError("unknown model.kind: " + kind);
}

struct Ctx {
    json cfg;
    fs::path out_dir;
    std::uint64_t seed = 1;
    int workers = default_workers();
};

void write_out(const Ctx& ctx, const std::string& name, const std::string& content) {
    write_text_file((ctx.out_dir / name).string(), content);
}

void write_json_out(const Ctx& ctx, const std::string& name, const json& j) {
    write_out(ctx, name, j.dump(2) + "\n");
}

void write_metadata(const Ctx& ctx, const std::string& command) {
    json meta = {{"command", command},
                 {"workers", ctx.workers},
                 {"unix_time", static_cast<long long>(std::time(nullptr))}};
    write_json_out(ctx, command + "_meta.json", meta);
}

// ---------------------------------------------------------------------------

int run_converge(const Ctx& ctx) {
    const json& cfg = ctx.cfg;
    const double p = need_num(cfg, "p");
    if (!(p > 0.0)) throw ConfigError("p must be positive");
    const std::size_t n_paths = need_count(cfg, "K");
    std::vector<int> exps;
    for (double v : opt_num_list(cfg, "n_exponents", {2, 4, 6, 8})) {
        if (v < 0 || v != std::floor(v)) throw ConfigError("n_exponents must be nonnegative integers");
        exps.push_back(static_cast<int>(v));
    }
    SimConfig sim;
    sim.substeps_per_cell = static_cast<int>(opt_count(cfg, "substeps", 4));
    ParsedModel q = parse_model(need(cfg, "model"));
    ParsedModel ref = cfg.contains("reference") ? parse_model(cfg.at("reference"))
                                                : parse_model(json{{"kind", "constant"}, {"sigma", 1.0}});
    const DivergenceReport rep =
        convergence_table(q.model, ref.model, p, exps, n_paths, ctx.seed, sim, ctx.workers);
    write_out(ctx, "converge.csv", divergence_report_csv(rep));
    json j = divergence_report_json(rep);
    j["claim"] = "scaled-divergence-limit";
    j["model"] = q.model.tag;
    j["reference"] = ref.model.tag;
    j["seed"] = ctx.seed;
    write_json_out(ctx, "converge.json", j);
    write_out(ctx, "converge.dat", divergence_report_plot_data(rep));
    write_out(ctx, "converge.gp",
              "set logscale x 2\n"
              "set xlabel 'N'\n"
              "set ylabel 'scaled divergence'\n"
              "plot 'converge.dat' using 1:2:3 with yerrorlines title 'N^{p/2-1} D^{N,p}', \\\n"
              "     'converge.dat' using 1:4 with lines title 'limit'\n");
    write_metadata(ctx, "converge");
    std::cout << "converge: wrote " << rep.rows.size() << " rows, target " << fmt_double(rep.target) << "\n";
    return 0;
}

int run_optimal(const Ctx& ctx) {
    const json& cfg = ctx.cfg;
    const double p = need_num(cfg, "p");
    if (!(p > 0.0)) throw ConfigError("p must be positive");
    const std::size_t n_nodes = opt_count(cfg, "n_nodes", 4096);
    const OptimalProfile prof = solve_profile(p, n_nodes);
    write_out(ctx, "profile.csv", profile_csv(prof));
    json header = profile_header_json(prof);
    header["claim"] = "optimal-profile-construction";
    header["peak_sigma_t0"] = prof.sigma(0.0, 0.5);
    write_json_out(ctx, "profile.json", header);

    const auto t_list = opt_num_list(cfg, "t_list", {0.0, 0.25, 0.5, 0.75});
    const auto x_list = opt_num_list(cfg, "x_list", [] {
        std::vector<double> xs;
        for (int i = 1; i < 20; ++i) xs.push_back(i / 20.0);
        return xs;
    }());
    {
        std::ostringstream out;
        out << "t,x,sigma\n";
        for (double t : t_list)
            for (double x : x_list)
                out << fmt_double(t) << ',' << fmt_double(x) << ',' << fmt_double(prof.sigma(t, x)) << '\n';
        write_out(ctx, "sigma_samples.csv", out.str());
    }
    {
        const int n = static_cast<int>(opt_count(cfg, "residual_grid", 10));
        const bool skip_hjb = std::fabs(p - 2.0) < 1e-9;
        std::ostringstream out;
        out << "t,x,pmd_residual,hjb_residual\n";
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                const double t = 0.9 * i / (n + 1.0);
                const double x = j / (n + 1.0);
                out << fmt_double(t) << ',' << fmt_double(x) << ',' << fmt_double(pmd_residual(prof, t, x)) << ','
                    << (skip_hjb ? "" : fmt_double(hjb_residual(prof, t, x))) << '\n';
            }
        write_out(ctx, "residuals.csv", out.str());
    }
    write_metadata(ctx, "optimal");
    std::cout << "optimal: p = " << fmt_double(p) << ", C_p = " << fmt_double(prof.C_p) << ", y0 = "
              << fmt_double(prof.y0) << ", peak sigma(0,1/2) = " << fmt_double(prof.sigma(0.0, 0.5)) << "\n";
    return 0;
}

int run_simulate(const Ctx& ctx) {
    const json& cfg = ctx.cfg;
    const std::size_t n_paths = need_count(cfg, "K");
    ParsedModel pm = parse_model(need(cfg, "model"));
    SimConfig sim;
    sim.substeps_per_cell = static_cast<int>(opt_count(cfg, "substeps", 4));
    PathEnsemble ens;
    if (pm.is_win && opt_bool(cfg, "win", pm.has_profile)) {
        if (!pm.has_profile) throw ConfigError("win simulation requires a profile model");
        sim.t_cut = opt_num(cfg, "t_cut", 1.0 - std::pow(2.0, -12));
        if (!(sim.t_cut > 0.0 && sim.t_cut < 1.0)) throw ConfigError("t_cut must lie in (0,1)");
        sim.terminal_rule = TerminalRule::bernoulli_snap;
        sim.singular_step_rule = SingularStepRule::geometric;
        ens = simulate_win(pm.profile_p, pm.model.x0, pm.profile, n_paths, ctx.seed, sim, ctx.workers);
    } else {
        const double t_end = opt_num(cfg, "t_end", pm.is_win ? 0.9 : 1.0);
        const double t_start = opt_num(cfg, "t_start", 0.0);
        const int n_exp = static_cast<int>(opt_count(cfg, "n_exponent", 8));
        if (pm.is_win) {
            if (!(t_end < 1.0)) throw ConfigError("win-martingale grids must end before 1");
            sim.singular_step_rule = SingularStepRule::geometric;
        }
        ens = simulate(pm.model, make_dyadic_grid(t_start, t_end, n_exp), n_paths, ctx.seed, sim, ctx.workers);
    }
    const std::string bin_path = (ctx.out_dir / "ensemble.swpe").string();
    ens.save_binary(bin_path);
    const PathEnsemble reread = PathEnsemble::load_binary(bin_path);
    if (reread.states != ens.states || reread.realized_qv != ens.realized_qv ||
        reread.grid.points != ens.grid.points)
        throw std::runtime_error("ensemble round trip mismatch");
    if (opt_bool(cfg, "csv", false)) ens.save_csv((ctx.out_dir / "ensemble.csv").string());
    {
        // sample-path plot data: one t column then one column per plotted path
        const std::size_t n_plot = std::min<std::size_t>(opt_count(cfg, "plot_paths", 20), ens.n_paths);
        std::ostringstream out;
        out << "# t";
        for (std::size_t k = 0; k < n_plot; ++k) out << " path" << k;
        out << '\n';
        for (std::size_t i = 0; i <= ens.grid.n_cells(); ++i) {
            out << fmt_double(ens.grid.points[i]);
            for (std::size_t k = 0; k < n_plot; ++k) out << ' ' << fmt_double(ens.state(k, i));
            out << '\n';
        }
        write_out(ctx, "paths.dat", out.str());
        std::ostringstream gp;
        gp << "set xlabel 't'\nset ylabel 'X_t'\nplot for [k=2:" << (n_plot + 1)
           << "] 'paths.dat' using 1:k with lines notitle\n";
        write_out(ctx, "paths.gp", gp.str());
    }
    json j = {{"claim", "path-ensemble-emission"},
              {"model", ens.model_tag},
              {"K", ens.n_paths},
              {"n_cells", ens.grid.n_cells()},
              {"seed", ctx.seed},
              {"file", "ensemble.swpe"}};
    write_json_out(ctx, "simulate.json", j);
    write_metadata(ctx, "simulate");
    std::cout << "simulate: " << ens.n_paths << " paths on " << ens.grid.n_cells() << " cells -> ensemble.swpe\n";
    return 0;
}

int run_verify(const Ctx& ctx) {
    const json& cfg = ctx.cfg;
    const std::size_t n_paths = opt_count(cfg, "K", 8192);
    const double x0 = opt_num(cfg, "x0", 0.5);
    const bool swap_probe = opt_bool(cfg, "swap_competitors_probe", false);
    SimConfig sim;
    sim.substeps_per_cell = static_cast<int>(opt_count(cfg, "substeps", 16));
    sim.t_cut = opt_num(cfg, "t_cut", 1.0 - std::pow(2.0, -12));
    sim.singular_step_rule = SingularStepRule::geometric;
    if (!(sim.t_cut > 0.0 && sim.t_cut < 1.0)) throw ConfigError("t_cut must lie in (0,1)");

    json checks = json::array();
    bool all_pass = true;
    const auto note = [&](const std::string& claim, bool pass, json detail) {
        detail["claim"] = claim;
        detail["pass"] = pass;
        checks.push_back(detail);
        if (!pass) all_pass = false;
    };

    const CompetitorSpec comps[] = {CompetitorSpec::closed_form(WinKind::bass),
                                    CompetitorSpec::closed_form(WinKind::wright_fisher),
                                    CompetitorSpec::closed_form(WinKind::aldous)};
    for (double p : opt_num_list(cfg, "p_list", {0.5, 3.0})) {
        OptimalityReport rep = optimality_comparison(p, x0, comps, n_paths, sim, ctx.seed, ctx.workers);
        bool pass = true;
        for (const auto& row : rep.rows) {
            const bool row_ok = swap_probe ? (!row.identical_to_optimal && row.edge < -3.0 * row.edge_se)
                                           : row.beaten;
            if (!row_ok) pass = false;
        }
        note("optimal-profile-beats-competitors", pass, optimality_report_json(rep));
    }
    {
        OptimalityReport rep = optimality_comparison(2.0, x0, comps, n_paths, sim, ctx.seed, ctx.workers);
        bool pass = std::fabs(rep.optimal_cost - x0 * (1.0 - x0)) <= 3.0 * rep.optimal_cost_se;
        for (const auto& row : rep.rows)
            if (std::fabs(row.cost - x0 * (1.0 - x0)) > 3.0 * row.cost_se) pass = false;
        json detail = optimality_report_json(rep);
        detail["expected_cost"] = x0 * (1.0 - x0);
        note("p2-cost-model-free", pass, detail);
    }
    for (const auto& vc : opt_num_list(cfg, "value_p_list", {0.5, 3.0})) {
        const OptimalProfile prof = solve_profile(vc);
        const ValueCheckReport rep = mc_value_check(prof, 0.0, opt_num(cfg, "value_x0", 0.3), n_paths, sim,
                                                    ctx.seed + 17, ctx.workers);
        json detail = value_check_json(rep);
        detail["p"] = vc;
        note("value-identity", rep.within_3se, detail);
    }
    {
        ParsedModel q = cfg.contains("follmer_model") ? parse_model(cfg.at("follmer_model"))
                                                      : parse_model(json{{"kind", "sin"}});
        const TimeGrid grid = make_dyadic_grid(0.0, 1.0, 9);
        SimConfig fcfg;
        fcfg.substeps_per_cell = 2;
        const FollmerReport rep = follmer_chain_check(q.model, n_paths, grid, ctx.seed + 23, fcfg, ctx.workers);
        note("entropy-chain-inequality", rep.inequality_holds, follmer_report_json(rep));
    }
    {
        const auto p_list = opt_num_list(cfg, "convex_order_p_list", {0.5, 1.0, 2.0});
        const double ts[] = {0.25, 0.5, 0.75};
        std::vector<double> xs;
        for (int i = 1; i < 50; ++i) xs.push_back(i / 50.0);
        const ConvexOrderReport rep =
            convex_order_check(p_list, ts, xs, n_paths, ctx.seed + 29, x0, SimConfig{8}, ctx.workers);
        note("convex-order", rep.pointwise_strict && rep.potentials_ordered, convex_order_report_json(rep));
    }

    json summary = {{"pass", all_pass}, {"checks", checks}, {"seed", ctx.seed}, {"K", n_paths}};
    json failures = json::array();
    for (const auto& c : checks)
        if (!c.at("pass").get<bool>()) failures.push_back(c.at("claim"));
    summary["failures"] = failures;
    write_json_out(ctx, "verify.json", summary);
    write_metadata(ctx, "verify");
    std::cout << "verify: " << (all_pass ? "all checks passed" : "FAILURES present") << " ("
              << checks.size() << " checks)\n";
    return all_pass ? 0 : 1;
}

int run_schrodinger(const Ctx& ctx) {
    const json& cfg = ctx.cfg;
    const std::size_t n_paths = opt_count(cfg, "K", 10000);
    const std::size_t n_steps = opt_count(cfg, "steps", 256);
    const double t = opt_num(cfg, "t", 1.0);
    const auto T_list = opt_num_list(cfg, "T_list", {5.0, 10.0, 20.0, 40.0});
    bool all_pass = true;

    const auto gaps = entropy_gap_table(T_list, t, n_paths, n_steps, ctx.seed, ctx.workers);
    {
        std::ostringstream out;
        out << "T,estimate,stderr\n";
        for (std::size_t j = 0; j < T_list.size(); ++j)
            out << fmt_double(T_list[j]) << ',' << fmt_double(gaps[j].mean) << ',' << fmt_double(gaps[j].se)
                << '\n';
        write_out(ctx, "entropy_gap.csv", out.str());
    }
    bool decreasing = true;
    for (std::size_t j = 1; j < gaps.size(); ++j)
        if (!(gaps[j].mean < gaps[j - 1].mean)) decreasing = false;
    const double final_bound = opt_num(cfg, "final_gap_bound", 1e-2);
    const bool final_ok = gaps.back().mean < final_bound;
    if (!(decreasing && final_ok)) all_pass = false;

    // terminal density table: closed form vs histogram of simulated paths
    {
        const double span = 5.0 * std::sqrt(t) + 0.5 * t;
        const std::size_t n_bins = 81;
        std::vector<double> counts(n_bins, 0.0);
        const double lo = -span, dz = 2.0 * span / static_cast<double>(n_bins);
        std::vector<double> terminals(n_paths);
        parallel_for(n_paths, ctx.workers, [&](std::size_t k) {
            RngStream rng = derive_stream(ctx.seed + 7, k);
            double x = 0.0;
            const double dt = t / static_cast<double>(n_steps);
            for (std::size_t i = 0; i < n_steps; ++i) x += drift_C(x) * dt + std::sqrt(dt) * rng.normal();
            terminals[k] = x;
        });
        for (double x : terminals) {
            const auto bin = static_cast<long>((x - lo) / dz);
            if (bin >= 0 && bin < static_cast<long>(n_bins)) counts[static_cast<std::size_t>(bin)] += 1.0;
        }
        std::ostringstream out;
        out << "z,model_density,empirical_density\n";
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double z = lo + (b + 0.5) * dz;
            out << fmt_double(z) << ',' << fmt_double(density_C(t, z, 0.0)) << ','
                << fmt_double(counts[b] / (static_cast<double>(n_paths) * dz)) << '\n';
        }
        write_out(ctx, "density_table.csv", out.str());
    }

    // logit change of coordinates on the p = 1/2 optimal martingale
    LogitChangeReport logit;
    {
        const OptimalProfile prof = solve_profile(0.5);
        const double x0 = opt_num(cfg, "logit_x0", 0.5);
        SimConfig sim;
        sim.substeps_per_cell = static_cast<int>(opt_count(cfg, "logit_substeps", 16));
        sim.singular_step_rule = SingularStepRule::geometric;
        const double t_end = time_of_log_clock(t);
        const TimeGrid grid = make_logclock_grid(0.0, t_end, 1.0 / 32.0);
        const PathEnsemble ens = simulate(make_profile_model(prof, x0), grid,
                                          opt_count(cfg, "logit_K", n_paths), ctx.seed + 11, sim, ctx.workers);
        logit = logit_change_check(time_change_to_infinite_horizon(ens));
        write_json_out(ctx, "logit_check.json", [&] {
            json j = logit_report_json(logit);
            j["claim"] = "logit-marginal-law";
            return j;
        }());
        if (!logit.pass) all_pass = false;
    }

    json j = {{"claims", {"entropy-gap-decay", "density-normalization", "logit-marginal-law"}},
              {"entropy_gap_decreasing", decreasing},
              {"entropy_gap_final", gaps.back().mean},
              {"entropy_gap_final_bound", final_bound},
              {"entropy_gap_final_ok", final_ok},
              {"logit_pass", logit.pass},
              {"pass", all_pass},
              {"seed", ctx.seed}};
    write_json_out(ctx, "schrodinger.json", j);
    write_metadata(ctx, "schrodinger");
    std::cout << "schrodinger: " << (all_pass ? "pass" : "FAIL") << ", final entropy gap "
              << fmt_double(gaps.back().mean) << "\n";
    return all_pass ? 0 : 1;
}

int run_filter(const Ctx& ctx) {
    const json& cfg = ctx.cfg;
    const double x0 = opt_num(cfg, "x0", 0.5);
    const double horizon = opt_num(cfg, "horizon", 4.0);
    const std::size_t n_paths = opt_count(cfg, "K", 20000);
    const std::size_t n_steps = opt_count(cfg, "steps", 1024);
    const FilteringReport rep =
        filtering_experiment(x0, horizon, n_paths, n_steps, ctx.seed, ctx.workers,
                             opt_bool(cfg, "force_drift_one", false));
    json j = filtering_report_json(rep);
    j["claim"] = "filtering-representation";
    write_json_out(ctx, "filter.json", j);
    {
        std::ostringstream out;
        out << "t,posterior_mean,posterior_mean_stderr,mean_abs_dev_from_drift\n";
        for (std::size_t i = 0; i < rep.checkpoints.size(); ++i)
            out << fmt_double(rep.checkpoints[i]) << ',' << fmt_double(rep.posterior_mean[i]) << ','
                << fmt_double(rep.posterior_mean_se[i]) << ',' << fmt_double(rep.concentration[i]) << '\n';
        write_out(ctx, "filter_checkpoints.csv", out.str());
    }
    write_metadata(ctx, "filter");
    std::cout << "filter: " << (rep.pass ? "pass" : "FAIL") << "\n";
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"specific Wasserstein divergence toolkit"};
    app.fallthrough();
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int workers = default_workers();
    app.add_option("--config", config_path, "JSON experiment configuration")->required(false);
    app.add_option("--out", out_dir, "output directory (SPECWASS_OUT overrides)");
    auto* seed_opt = app.add_option("--seed", seed_override, "master seed override");
    app.add_option("--workers", workers, "worker threads (results are worker-count independent)");

    const std::map<std::string, int (*)(const Ctx&)> commands = {
        {"converge", run_converge}, {"optimal", run_optimal},       {"simulate", run_simulate},
        {"verify", run_verify},     {"schrodinger", run_schrodinger}, {"filter", run_filter}};
    for (const auto& [name, fn] : commands) {
        (void)fn;
        app.add_subcommand(name, "run the " + name + " command");
    }
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }
    seed_given = seed_opt->count() > 0;

    Ctx ctx;
    try {
        if (config_path.empty()) throw ConfigError("missing required --config PATH");
        ctx.cfg = load_config(config_path);
        if (const char* env = std::getenv("SPECWASS_OUT")) out_dir = env;
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);
        ctx.seed = seed_given ? seed_override : static_cast<std::uint64_t>(opt_num(ctx.cfg, "seed", 1.0));
        ctx.workers = workers;
        if (ctx.workers < 1) throw ConfigError("--workers must be at least 1");
        const std::string command = ctx.cfg.contains("command")
                                        ? ctx.cfg.at("command").get<std::string>()
                                        : app.get_subcommands().front()->get_name();
        const std::string invoked = app.get_subcommands().front()->get_name();
        if (ctx.cfg.contains("command") && command != invoked)
            throw ConfigError("config command '" + command + "' does not match subcommand '" + invoked + "'");
        const auto it = commands.find(invoked);
        if (it == commands.end()) throw ConfigError("unknown command: " + invoked);
        try {
            return it->second(ctx);
        } catch (const ConfigError&) {
            throw;
        } catch (const unsupported_error& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "numeric error: " << e.what() << "\n";
            return 3;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}
