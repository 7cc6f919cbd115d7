#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "specwass/divergence.hpp"
#include "specwass/sde.hpp"

namespace specwass {

namespace detail {

inline double sigma_pow_p(const OptimalProfile& prof, double t, double x) {
    return prof.y(x) * std::pow(1.0 - t, -0.5 * prof.p);
}

inline void require_interior(const OptimalProfile&, double t, double x, double h) {
    if (!(h > 0.0)) throw std::domain_error("residual: fd_step must be positive");
    if (!(t - h >= 0.0 && t + h < 1.0)) throw std::domain_error("residual: t-stencil leaves [0,1)");
    if (!(x - h >= 0.0 && x + h <= 1.0)) throw std::domain_error("residual: x-stencil leaves [0,1]");
}

}  // namespace detail

/// Central-difference residual of d_t sigma^p + (1/2) sigma^2 d_xx sigma^p
/// at an interior point; the profile solves this identically, so the value
/// is pure discretization error.
inline double pmd_residual(const OptimalProfile& prof, double t, double x, double fd_step = 1e-3) {
    detail::require_interior(prof, t, x, fd_step);
    const double h = fd_step;
    const double dt = (detail::sigma_pow_p(prof, t + h, x) - detail::sigma_pow_p(prof, t - h, x)) / (2.0 * h);
    const double dxx = (detail::sigma_pow_p(prof, t, x + h) - 2.0 * detail::sigma_pow_p(prof, t, x) +
                        detail::sigma_pow_p(prof, t, x - h)) /
                       (h * h);
    const double sig = prof.sigma(t, x);
    return dt + 0.5 * sig * sig * dxx;
}

/// Closed-form extremizer of sigma -> (1/2) sigma^2 v_xx + sigma^p from the
/// finite-difference curvature of the value surface (p != 2).
inline double hjb_extremizer(const OptimalProfile& prof, double t, double x, double fd_step = 1e-3) {
    if (std::fabs(prof.p - 2.0) < 1e-9) throw std::domain_error("hjb_extremizer: p must differ from 2");
    detail::require_interior(prof, t, x, fd_step);
    const double h = fd_step;
    const double vxx = (prof.value(t, x + h) - 2.0 * prof.value(t, x) + prof.value(t, x - h)) / (h * h);
    if (!(vxx < 0.0))
        throw std::runtime_error("hjb_extremizer: value curvature has the wrong sign for this branch");
    return std::pow(-vxx / prof.p, 1.0 / (prof.p - 2.0));
}

/// Residual of the dynamic-programming equation
///   d_t v + ext_{sigma>=0} { (1/2) sigma^2 d_xx v + sigma^p } = 0
/// (sup for p<2, inf for p>2) with the extremum evaluated in closed form.
inline double hjb_residual(const OptimalProfile& prof, double t, double x, double fd_step = 1e-3) {
    if (std::fabs(prof.p - 2.0) < 1e-9) throw std::domain_error("hjb_residual: p must differ from 2");
    detail::require_interior(prof, t, x, fd_step);
    const double h = fd_step;
    const double vt = (prof.value(t + h, x) - prof.value(t - h, x)) / (2.0 * h);
    const double vxx = (prof.value(t, x + h) - 2.0 * prof.value(t, x) + prof.value(t, x - h)) / (h * h);
    if (!(vxx < 0.0))
        throw std::runtime_error("hjb_residual: value curvature has the wrong sign for this branch");
    const double sig = std::pow(-vxx / prof.p, 1.0 / (prof.p - 2.0));
    return vt + 0.5 * sig * sig * vxx + std::pow(sig, prof.p);
}

/// Per-path realized cost int sigma^p(t, M_t) dt under a model, truncated at
/// grid.t_end. With complete_p2 the squared Bernoulli-snap jump is appended,
/// which makes the p = 2 cost estimator unbiased for the full horizon. At
/// p = 2 the cost is accumulated from squared increments, whose conditional
/// expectations telescope exactly to the variance spent by the scheme.
inline std::vector<double> mc_power_costs(const MartingaleModel& model, double p, const TimeGrid& grid,
                                          std::size_t n_paths, std::uint64_t seed, const SimConfig& cfg,
                                          bool complete_p2 = false, int workers = default_workers()) {
    detail::validate_sim_inputs(model, grid, cfg, n_paths);
    const bool quadratic = std::fabs(p - 2.0) < 1e-9;
    std::vector<double> costs(n_paths, 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        double acc = 0.0;
        double x_end = model.x0;
        double x_prev = model.x0;
        detail::euler_path(
            model, grid, cfg, rng,
            [&](double, double x, double sig, double dt) {
                if (quadratic) {
                    const double d = x - x_prev;
                    acc += d * d;
                    x_prev = x;
                } else {
                    acc += std::pow(sig, p) * dt;
                }
            },
            [&](std::size_t, double x, double) { x_end = x; });
        if (quadratic) {
            const double d = x_end - x_prev;
            acc += d * d;
        }
        if (complete_p2) {
            const double terminal = rng.bernoulli(x_end) ? 1.0 : 0.0;
            const double jump = terminal - x_end;
            acc += jump * jump;
        }
        costs[k] = acc;
    });
    return costs;
}

struct ValueCheckReport {
    double value = 0.0;    // (1-s) sigma^p(s,x)
    double mc_mean = 0.0;  // realized cost
    double mc_se = 0.0;
    double t_cut = 0.0;
    bool within_3se = false;
};

/// Monte Carlo check of the value identity: the realized cost of the optimal
/// martingale started at (s,x) reproduces (1-s) sigma^p(s,x).
inline ValueCheckReport mc_value_check(const OptimalProfile& prof, double s, double x, std::size_t n_paths,
                                       const SimConfig& cfg, std::uint64_t seed, int workers = default_workers()) {
    if (!(s >= 0.0 && s < 1.0)) throw std::domain_error("mc_value_check: s must lie in [0,1)");
    if (!(cfg.t_cut > s && cfg.t_cut < 1.0)) throw std::domain_error("mc_value_check: t_cut must lie in (s,1)");
    MartingaleModel model = make_profile_model(prof, x);
    SimConfig run_cfg = cfg;
    run_cfg.singular_step_rule = SingularStepRule::geometric;
    const TimeGrid grid = make_logclock_grid(s, cfg.t_cut, 0.5);
    const bool complete = std::fabs(prof.p - 2.0) < 1e-9;
    const auto costs = mc_power_costs(model, prof.p, grid, n_paths, seed, run_cfg, complete, workers);
    const McEstimate est = mc_estimate(costs);
    ValueCheckReport rep;
    rep.value = prof.value(s, x);
    rep.mc_mean = est.mean;
    rep.mc_se = est.se;
    rep.t_cut = cfg.t_cut;
    rep.within_3se = std::fabs(est.mean - rep.value) <= 3.0 * est.se;
    return rep;
}

struct TildeBoundReport {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double endpoint_ratio = 0.0;  // at x = 1e-4, worst of the two ends
    double sqrt_cp = 0.0;
    double endpoint_rel_err = 0.0;
    bool positive_and_finite = false;
    bool endpoint_within_1pct = false;
};

/// For p > 2 compares the value surface with the envelope
/// (1-t)^{1-p/2} ((1-x)^p x + (1-x) x^p): the ratio must stay positive and
/// finite, and approach sqrt(C_p) at the space boundary.
inline TildeBoundReport tilde_v_bound_check(const OptimalProfile& prof, std::span<const double> t_grid,
                                            std::span<const double> x_grid) {
    if (!(prof.p > 2.0)) throw std::domain_error("tilde_v_bound_check: requires p > 2");
    const double p = prof.p;
    const auto tilde = [p](double t, double x) {
        return std::pow(1.0 - t, 1.0 - 0.5 * p) * (std::pow(1.0 - x, p) * x + (1.0 - x) * std::pow(x, p));
    };
    TildeBoundReport rep;
    rep.sqrt_cp = std::sqrt(prof.C_p);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double t : t_grid)
        for (double x : x_grid) {
            const double r = prof.value(t, x) / tilde(t, x);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    rep.min_ratio = lo;
    rep.max_ratio = hi;
    const double r_left = prof.value(0.0, 1e-4) / tilde(0.0, 1e-4);
    const double r_right = prof.value(0.0, 1.0 - 1e-4) / tilde(0.0, 1.0 - 1e-4);
    rep.endpoint_ratio = (std::fabs(r_left - rep.sqrt_cp) > std::fabs(r_right - rep.sqrt_cp)) ? r_left : r_right;
    rep.endpoint_rel_err = std::fabs(rep.endpoint_ratio - rep.sqrt_cp) / rep.sqrt_cp;
    rep.positive_and_finite = lo > 0.0 && std::isfinite(hi);
    rep.endpoint_within_1pct = rep.endpoint_rel_err < 0.01;
    return rep;
}

/// A feasible win-martingale volatility entering a cost comparison: one of
/// the closed forms or a generic-p profile.
struct CompetitorSpec {
    bool is_profile = false;
    WinKind kind = WinKind::wright_fisher;
    double profile_p = 0.0;

    static CompetitorSpec closed_form(WinKind k) { return {false, k, 0.0}; }
    static CompetitorSpec profile(double p) { return {true, WinKind::wright_fisher, p}; }

    std::string name() const {
        return is_profile ? ("profile_p" + std::to_string(profile_p)) : win_kind_name(kind);
    }

    /// The closed forms coincide with the optimal profile at these exponents.
    bool same_as_optimal(double p) const {
        if (is_profile) return std::fabs(profile_p - p) < 1e-12;
        switch (kind) {
            case WinKind::p_half: return std::fabs(p - 0.5) < 1e-12;
            case WinKind::bass: return std::fabs(p - 1.0) < 1e-12;
            case WinKind::wright_fisher: return std::fabs(p - 2.0) < 1e-12;
            case WinKind::aldous: return false;
        }
        return false;
    }
};

struct CostRow {
    std::string name;
    double cost = 0.0;
    double cost_se = 0.0;
    double edge = 0.0;  // signed per-path mean of (optimal beating competitor)
    double edge_se = 0.0;
    bool identical_to_optimal = false;
    bool beaten = false;
};

struct OptimalityReport {
    double p = 0.0;
    double x0 = 0.0;
    double optimal_cost = 0.0;
    double optimal_cost_se = 0.0;
    std::vector<CostRow> rows;
    bool all_beaten = false;
};

/// Common-random-number cost comparison: the p-profile martingale must beat
/// every distinct competitor (higher cost for p < 2, lower for p > 2) by
/// more than 3 standard errors of the per-path cost difference. For p = 2
/// the snap-completed costs of all competitors agree with x0(1-x0).
inline OptimalityReport optimality_comparison(double p, double x0, std::span<const CompetitorSpec> competitors,
                                              std::size_t n_paths, const SimConfig& cfg, std::uint64_t seed,
                                              int workers = default_workers()) {
    if (!(cfg.t_cut > 0.0 && cfg.t_cut < 1.0)) throw std::domain_error("optimality_comparison: bad t_cut");
    const OptimalProfile prof = solve_profile(p);
    const MartingaleModel opt_model = make_profile_model(prof, x0);
    SimConfig run_cfg = cfg;
    run_cfg.singular_step_rule = SingularStepRule::geometric;
    const TimeGrid grid = make_logclock_grid(0.0, cfg.t_cut, 0.5);
    const bool complete = std::fabs(p - 2.0) < 1e-9;
    const auto opt_costs = mc_power_costs(opt_model, p, grid, n_paths, seed, run_cfg, complete, workers);
    OptimalityReport rep;
    rep.p = p;
    rep.x0 = x0;
    const McEstimate opt_est = mc_estimate(opt_costs);
    rep.optimal_cost = opt_est.mean;
    rep.optimal_cost_se = opt_est.se;
    rep.all_beaten = true;
    const double direction = (p < 2.0) ? 1.0 : -1.0;  // maximization below 2, minimization above
    for (const CompetitorSpec& spec : competitors) {
        MartingaleModel model = spec.is_profile ? make_profile_model(solve_profile(spec.profile_p), x0)
                                                : make_closed_form_model(spec.kind, x0);
        const auto costs = mc_power_costs(model, p, grid, n_paths, seed, run_cfg, complete, workers);
        CostRow row;
        row.name = spec.name();
        const McEstimate est = mc_estimate(costs);
        row.cost = est.mean;
        row.cost_se = est.se;
        row.identical_to_optimal = spec.same_as_optimal(p);
        std::vector<double> diffs(n_paths);
        for (std::size_t k = 0; k < n_paths; ++k) diffs[k] = direction * (opt_costs[k] - costs[k]);
        const McEstimate d = mc_estimate(diffs);
        row.edge = d.mean;
        row.edge_se = d.se;
        row.beaten = row.identical_to_optimal || complete || d.mean > 3.0 * d.se;
        if (!row.beaten) rep.all_beaten = false;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

struct ConvexOrderReport {
    bool pointwise_strict = false;
    double min_pointwise_gap = 0.0;
    bool potentials_ordered = false;
    double worst_potential_margin_se = 0.0;  // most negative (U_{j+1}-U_j)/se over the grid
    std::vector<std::string> model_names;    // base then increasing p
};

/// Convex-order certificate across exponents: (a) strict pointwise ordering
/// of the volatilities starting from the log-limit competitor, and
/// (b) empirical potential functions E|M_t - k| ordered within 3 standard
/// errors of the common-random-number differences.
inline ConvexOrderReport convex_order_check(std::span<const double> p_list, std::span<const double> t_list,
                                            std::span<const double> x_grid, std::size_t n_paths,
                                            std::uint64_t seed, double x0 = 0.5,
                                            const SimConfig& cfg_in = SimConfig{8, SingularStepRule::geometric, 0.97,
                                                                                TerminalRule::none},
                                            int workers = default_workers()) {
    for (std::size_t i = 1; i < p_list.size(); ++i)
        if (!(p_list[i] > p_list[i - 1])) throw std::domain_error("convex_order_check: p_list must increase");
    ConvexOrderReport rep;
    std::vector<OptimalProfile> profiles;
    for (double p : p_list) profiles.push_back(solve_profile(p));
    rep.model_names.push_back("aldous");
    for (double p : p_list) rep.model_names.push_back("p=" + std::to_string(p));

    // (a) pointwise volatility ordering on the interior grid
    double min_gap = std::numeric_limits<double>::infinity();
    bool strict = true;
    for (double t : t_list) {
        for (double x : x_grid) {
            double prev = closed_form_sigma(WinKind::aldous, t, x);
            for (const auto& prof : profiles) {
                const double cur = prof.sigma(t, x);
                min_gap = std::min(min_gap, cur - prev);
                if (!(cur > prev)) strict = false;
                prev = cur;
            }
        }
    }
    rep.pointwise_strict = strict;
    rep.min_pointwise_gap = min_gap;

    // (b) potential functions under common random numbers
    double t_max = 0.0;
    for (double t : t_list) t_max = std::max(t, t_max);
    const TimeGrid grid = make_logclock_grid(0.0, std::max(t_max, 1e-3) , 0.25, t_list);
    SimConfig cfg = cfg_in;
    cfg.singular_step_rule = SingularStepRule::geometric;
    std::vector<MartingaleModel> models;
    models.push_back(make_closed_form_model(WinKind::aldous, x0));
    for (const auto& prof : profiles) models.push_back(make_profile_model(prof, x0));
    std::vector<PathEnsemble> ens;
    for (const auto& model : models) ens.push_back(simulate(model, grid, n_paths, seed, cfg, workers));
    std::vector<std::size_t> t_idx;
    for (double t : t_list) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < grid.points.size(); ++i)
            if (std::fabs(grid.points[i] - t) < std::fabs(grid.points[best] - t)) best = i;
        t_idx.push_back(best);
    }
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> diff(n_paths);
    for (std::size_t j = 0; j + 1 < ens.size(); ++j) {
        for (std::size_t ti : t_idx) {
            for (int kk = 1; kk <= 9; ++kk) {
                const double strike = kk / 10.0;
                for (std::size_t path = 0; path < n_paths; ++path)
                    diff[path] = std::fabs(ens[j + 1].state(path, ti) - strike) -
                                 std::fabs(ens[j].state(path, ti) - strike);
                const McEstimate d = mc_estimate(diff);
                if (d.se > 0.0) worst = std::min(worst, d.mean / d.se);
                else if (d.mean < 0.0) worst = std::min(worst, -std::numeric_limits<double>::infinity());
            }
        }
    }
    rep.worst_potential_margin_se = worst;
    rep.potentials_ordered = worst >= -3.0;
    return rep;
}

}  // namespace specwass
