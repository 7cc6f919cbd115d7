#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "specwass/core.hpp"
#include "specwass/parallel.hpp"
#include "specwass/profile.hpp"
#include "specwass/wasserstein.hpp"

namespace specwass {

enum class SingularStepRule { uniform, geometric };
enum class TerminalRule { none, bernoulli_snap };

/// Discretization policy. With the geometric rule, substeps inside a cell are
/// uniform in the r = -2 log(1-t) clock, so consecutive dt shrink by a
/// constant ratio in (0,1) proportionally to 1-t and sigma^2 dt stays bounded
/// for (1-t)^{-1/2} volatilities.
struct SimConfig {
    int substeps_per_cell = 1;
    SingularStepRule singular_step_rule = SingularStepRule::uniform;
    double t_cut = 1.0;  // simulation stops here when the field is singular at t=1
    TerminalRule terminal_rule = TerminalRule::none;
};

namespace detail {

inline double substep_time(double a, double b, int j, int m, SingularStepRule rule) {
    if (j == 0) return a;
    if (j == m) return b;
    const double frac = static_cast<double>(j) / static_cast<double>(m);
    if (rule == SingularStepRule::geometric) {
        const double ra = log_clock_of_time(a);
        const double rb = log_clock_of_time(b);
        return time_of_log_clock(ra + (rb - ra) * frac);
    }
    return a + (b - a) * frac;
}

// One Euler path over the recording grid. Per substep the observer sees
// (t, x, sigma, dt) before the increment; per cell it sees the end state and
// the accumulated sigma^2 dt. States are clamped into the model domain after
// each substep. Absorbing boundaries additionally kill interior crossings
// with the Brownian-bridge hitting probability exp(-2 d d'/(sigma^2 dt)),
// which removes the O(sqrt(dt)) barrier bias of plain projection.
template <class SubstepFn, class CellFn>
void euler_path(const MartingaleModel& model, const TimeGrid& grid, const SimConfig& cfg,
                RngStream& rng, SubstepFn&& on_substep, CellFn&& on_cell) {
    double x = model.x0;
    const int m = cfg.substeps_per_cell;
    const bool absorbing = model.boundary == BoundaryRule::absorbing_unit_interval && model.state_domain;
    for (std::size_t cell = 0; cell < grid.n_cells(); ++cell) {
        const double a = grid.points[cell];
        const double b = grid.points[cell + 1];
        double qv = 0.0;
        double t0 = a;
        for (int j = 1; j <= m; ++j) {
            const double t1 = substep_time(a, b, j, m, cfg.singular_step_rule);
            const double dt = t1 - t0;
            const double sig = model.vol(t0, x);
            if (!(sig >= 0.0) || !std::isfinite(sig))
                throw std::domain_error("euler_path: volatility evaluated outside its domain");
            on_substep(t0, x, sig, dt);
            qv += sig * sig * dt;
            if (sig > 0.0) {
                const double lo = model.state_domain ? model.state_domain->lo : 0.0;
                const double hi = model.state_domain ? model.state_domain->hi : 0.0;
                const double s2dt = sig * sig * dt;
                double xn = x + sig * std::sqrt(dt) * rng.normal();
                if (model.state_domain) {
                    if (xn <= lo) xn = lo;
                    if (xn >= hi) xn = hi;
                }
                if (absorbing && xn > lo && xn < hi) {
                    const double e0 = -2.0 * (x - lo) * (xn - lo) / s2dt;
                    const double e1 = -2.0 * (hi - x) * (hi - xn) / s2dt;
                    const double p0 = e0 > -36.0 ? std::exp(e0) : 0.0;
                    const double p1 = e1 > -36.0 ? std::exp(e1) : 0.0;
                    if (p0 + p1 > 1e-12) {
                        const double u = rng.uniform01();
                        if (u < p0) xn = lo;
                        else if (u < p0 + p1) xn = hi;
                    }
                }
                x = xn;
            }
            t0 = t1;
        }
        on_cell(cell, x, qv);
    }
}

inline void validate_sim_inputs(const MartingaleModel& model, const TimeGrid& grid, const SimConfig& cfg,
                                std::size_t n_paths) {
    model.validate();
    if (n_paths == 0) throw std::domain_error("simulate: need at least one path");
    if (cfg.substeps_per_cell < 1) throw std::domain_error("simulate: substeps_per_cell must be positive");
    if (grid.t_start < model.vol.time_domain.lo || grid.t_end > model.vol.time_domain.hi)
        throw std::domain_error("simulate: grid outside the volatility time domain");
    if (model.vol.singular_at_end) {
        if (!(grid.t_end < model.vol.time_domain.hi))
            throw std::domain_error("simulate: singular field requires grid strictly before the end time");
        if (!(grid.t_end <= cfg.t_cut))
            throw std::domain_error("simulate: grid exceeds the configured t_cut");
    }
}

}  // namespace detail

/// K independent Euler-Maruyama paths of dX = sigma(t,X) dB on the recording
/// grid. Path k draws from derive_stream(seed, k), so the result is
/// bit-identical for every worker count.
inline PathEnsemble simulate(const MartingaleModel& model, const TimeGrid& grid, std::size_t n_paths,
                             std::uint64_t seed, const SimConfig& cfg = {}, int workers = default_workers()) {
    detail::validate_sim_inputs(model, grid, cfg, n_paths);
    PathEnsemble e;
    e.grid = grid;
    e.n_paths = n_paths;
    e.model_tag = model.tag;
    e.master_seed = seed;
    const std::size_t np = grid.n_cells() + 1;
    e.states.assign(n_paths * np, 0.0);
    e.realized_qv.assign(n_paths * grid.n_cells(), 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        double* row = e.states.data() + k * np;
        double* qrow = e.realized_qv.data() + k * grid.n_cells();
        row[0] = model.x0;
        detail::euler_path(
            model, grid, cfg, rng, [](double, double, double, double) {},
            [&](std::size_t cell, double x, double qv) {
                row[cell + 1] = x;
                qrow[cell] = qv;
            });
    });
    return e;
}

/// Builds the martingale diffusion model attached to an optimal profile.
/// The profile tables are copied into the field, so the model owns its data.
inline MartingaleModel make_profile_model(const OptimalProfile& prof, double x0) {
    MartingaleModel model;
    model.x0 = x0;
    model.state_domain = Interval{0.0, 1.0};
    model.boundary = BoundaryRule::absorbing_unit_interval;
    model.tag = "optimal_p" + std::to_string(prof.p);
    VolatilityField vol;
    vol.eval = [prof](double t, double x) { return prof.sigma(t, x); };
    vol.time_domain = {0.0, 1.0};
    vol.state_domain = Interval{0.0, 1.0};
    vol.singular_at_end = true;  // sup_x sigma ~ (1-t)^{-1/2}
    vol.markov_time_homogeneous = false;
    vol.bounded = false;
    vol.lipschitz_in_state = prof.p >= 1.0;
    model.vol = vol;
    return model;
}

inline MartingaleModel make_closed_form_model(WinKind kind, double x0) {
    MartingaleModel model;
    model.x0 = x0;
    model.state_domain = Interval{0.0, 1.0};
    model.boundary = BoundaryRule::absorbing_unit_interval;
    model.tag = win_kind_name(kind);
    VolatilityField vol;
    vol.eval = [kind](double t, double x) { return closed_form_sigma(kind, t, x); };
    vol.time_domain = {0.0, 1.0};
    vol.state_domain = Interval{0.0, 1.0};
    vol.singular_at_end = true;
    vol.markov_time_homogeneous = false;
    model.vol = vol;
    return model;
}

/// Simulates the optimal win-martingale for exponent p up to cfg.t_cut and
/// then assigns the terminal value by a Bernoulli(M_{t_cut}) draw, which is
/// exact in law for the time-1 marginal. The appended final cell carries the
/// squared terminal jump as its realized_qv entry, making the per-path qv sum
/// an unbiased estimate of the full quadratic variation; path functionals
/// beyond t_cut should not be read off this segment.
inline PathEnsemble simulate_win(double p, double x0, const OptimalProfile& prof, std::size_t n_paths,
                                 std::uint64_t seed, const SimConfig& cfg, int workers = default_workers()) {
    if (!(p > 0.0)) throw std::domain_error("simulate_win: p must be positive");
    if (std::fabs(p - prof.p) > 1e-12) throw std::domain_error("simulate_win: profile built for a different p");
    if (!(x0 > 0.0 && x0 < 1.0)) throw std::domain_error("simulate_win: x0 must lie in (0,1)");
    if (!(cfg.t_cut > 0.0 && cfg.t_cut < 1.0)) throw std::domain_error("simulate_win: t_cut must lie in (0,1)");
    if (cfg.terminal_rule != TerminalRule::bernoulli_snap)
        throw std::domain_error("simulate_win: terminal_rule must be bernoulli_snap");

    MartingaleModel model = make_profile_model(prof, x0);
    SimConfig run_cfg = cfg;
    run_cfg.singular_step_rule = SingularStepRule::geometric;
    const TimeGrid inner = make_logclock_grid(0.0, cfg.t_cut, 0.5);
    detail::validate_sim_inputs(model, inner, run_cfg, n_paths);

    PathEnsemble e;
    std::vector<double> pts = inner.points;
    pts.push_back(1.0);
    e.grid = TimeGrid::from_points(std::move(pts));
    e.n_paths = n_paths;
    e.model_tag = model.tag;
    e.master_seed = seed;
    const std::size_t np = e.grid.n_cells() + 1;
    e.states.assign(n_paths * np, 0.0);
    e.realized_qv.assign(n_paths * e.grid.n_cells(), 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        double* row = e.states.data() + k * np;
        double* qrow = e.realized_qv.data() + k * e.grid.n_cells();
        row[0] = x0;
        detail::euler_path(
            model, inner, run_cfg, rng, [](double, double, double, double) {},
            [&](std::size_t cell, double x, double qv) {
                row[cell + 1] = x;
                qrow[cell] = qv;
            });
        const double x_cut = row[np - 2];
        const double terminal = rng.bernoulli(x_cut) ? 1.0 : 0.0;
        row[np - 1] = terminal;
        const double jump = terminal - x_cut;
        qrow[e.grid.n_cells() - 1] = jump * jump;
    });
    return e;
}

/// M Euler samples of X_{t1} given X_{t0} = x under a Markov model.
inline EmpiricalDist sample_one_step(const MartingaleModel& model, double t0, double t1, double x,
                                     std::size_t n_samples, int substeps, RngStream& rng) {
    if (!model.vol.eval) throw std::domain_error("sample_one_step: model has no volatility");
    if (!(t0 < t1)) throw std::domain_error("sample_one_step: need t0 < t1");
    if (substeps < 1 || n_samples == 0) throw std::domain_error("sample_one_step: bad sampling parameters");
    std::vector<double> out(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        double xx = x;
        double a = t0;
        for (int j = 1; j <= substeps; ++j) {
            const double b = t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(substeps);
            const double sig = model.vol(a, xx);
            if (sig > 0.0) {
                xx += sig * std::sqrt(b - a) * rng.normal();
                if (model.state_domain) {
                    if (xx < model.state_domain->lo) xx = model.state_domain->lo;
                    if (xx > model.state_domain->hi) xx = model.state_domain->hi;
                }
            }
            a = b;
        }
        out[s] = xx;
    }
    return EmpiricalDist::uniform(std::move(out));
}

/// Relabels grid times by r(t) = -2 log(1-t); states and realized_qv are
/// untouched (qv entries remain sigma^2 dt increments of the original clock).
inline PathEnsemble time_change_to_infinite_horizon(const PathEnsemble& e) {
    std::vector<double> pts;
    pts.reserve(e.grid.points.size());
    for (double t : e.grid.points) {
        if (!(t < 1.0)) throw std::domain_error("time_change_to_infinite_horizon: grid must stay below 1");
        pts.push_back(log_clock_of_time(t));
    }
    PathEnsemble out = e;
    out.grid = TimeGrid::from_points(std::move(pts));
    return out;
}

/// Per-path integrals sum_substeps g_j(t, x, sigma) dt along simulated paths
/// of the model, one vector per integrand, evaluated in a single sweep so
/// several functionals share the same randomness.
using PathIntegrand = std::function<double(double t, double x, double sig)>;

inline std::vector<std::vector<double>> mc_path_integrals(const MartingaleModel& model, const TimeGrid& grid,
                                                          std::size_t n_paths, std::uint64_t seed,
                                                          const SimConfig& cfg,
                                                          std::span<const PathIntegrand> integrands,
                                                          int workers = default_workers()) {
    detail::validate_sim_inputs(model, grid, cfg, n_paths);
    std::vector<std::vector<double>> acc(integrands.size(), std::vector<double>(n_paths, 0.0));
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        std::vector<double> local(integrands.size(), 0.0);
        detail::euler_path(
            model, grid, cfg, rng,
            [&](double t, double x, double sig, double dt) {
                for (std::size_t j = 0; j < integrands.size(); ++j) local[j] += integrands[j](t, x, sig) * dt;
            },
            [](std::size_t, double, double) {});
        for (std::size_t j = 0; j < integrands.size(); ++j) acc[j][k] = local[j];
    });
    return acc;
}

}  // namespace specwass
