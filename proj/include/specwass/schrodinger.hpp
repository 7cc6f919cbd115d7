#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "specwass/divergence.hpp"
#include "specwass/sde.hpp"

namespace specwass {

/// Density of the logit-coordinate diffusion dC = (1/2) tanh(C/2) dt + dW
/// started at c, relative to Lebesgue measure:
/// N(c,t)-density times cosh(z/2)/cosh(c/2) e^{-t/8}.
inline double density_C(double t, double z, double c) {
    if (!(t > 0.0)) throw std::domain_error("density_C: t must be positive");
    return normal_pdf(z, c, t) * std::cosh(0.5 * z) / std::cosh(0.5 * c) * std::exp(-t / 8.0);
}

/// Same law written as a two-Gaussian mixture with logistic weights:
/// weight(c) N(c + t/2, t) + (1-weight(c)) N(c - t/2, t).
inline double density_C_mixture(double t, double z, double c) {
    if (!(t > 0.0)) throw std::domain_error("density_C_mixture: t must be positive");
    const double w_up = 1.0 / (1.0 + std::exp(-c));
    return w_up * normal_pdf(z, c + 0.5 * t, t) + (1.0 - w_up) * normal_pdf(z, c - 0.5 * t, t);
}

inline double cdf_C(double t, double z, double c) {
    if (!(t > 0.0)) throw std::domain_error("cdf_C: t must be positive");
    const double s = std::sqrt(t);
    const double w_up = 1.0 / (1.0 + std::exp(-c));
    return w_up * normal_cdf((z - c - 0.5 * t) / s) + (1.0 - w_up) * normal_cdf((z - c + 0.5 * t) / s);
}

inline double drift_C(double x) { return 0.5 * std::tanh(0.5 * x); }

/// Brownian bridge mixture pinned at +-T/2: evaluation point t < T, start c
/// (the closed forms below are for c = 0).
struct BridgeParams {
    double T = 1.0;
    double t = 0.5;
    double c = 0.0;
};

/// Density of the bridge mixture w.r.t. Wiener measure at (t,x).
inline double bridge_density(const BridgeParams& bp, double x) {
    if (!(bp.t >= 0.0 && bp.t < bp.T)) throw std::domain_error("bridge_density: need 0 <= t < T");
    const double rem = bp.T - bp.t;
    return std::sqrt(bp.T / rem) * std::exp(-x * x / (2.0 * rem)) *
           std::exp(-(bp.T * bp.T / 8.0) * (1.0 / rem - 1.0 / bp.T)) * std::cosh(0.5 * x * bp.T / rem);
}

/// The same density as a ratio of two-point Gaussian mixtures; kept as an
/// independent algebraic route for cross-checking.
inline double bridge_density_gaussian_ratio(const BridgeParams& bp, double x) {
    if (!(bp.t >= 0.0 && bp.t < bp.T)) throw std::domain_error("bridge_density_gaussian_ratio: need 0 <= t < T");
    const double rem = bp.T - bp.t;
    const double half = 0.5 * bp.T;
    const double num = (std::exp(-(x - half) * (x - half) / (2.0 * rem)) +
                        std::exp(-(x + half) * (x + half) / (2.0 * rem))) /
                       std::sqrt(2.0 * kPi * rem);
    const double den = 2.0 * std::exp(-bp.T / 8.0) / std::sqrt(2.0 * kPi * bp.T);
    return num / den;
}

/// Drift of the pinned bridge mixture: d_x log f^T(t,x).
inline double bridge_drift(const BridgeParams& bp, double x) {
    if (!(bp.t >= 0.0 && bp.t < bp.T)) throw std::domain_error("bridge_drift: need 0 <= t < T");
    const double rem = bp.T - bp.t;
    return 0.5 * (bp.T / rem) * std::tanh(0.5 * x * bp.T / rem) - x / rem;
}

/// Relative entropy of the logit diffusion w.r.t. the T-bridge mixture on
/// [0,t], estimated along drifted Euler paths of the diffusion itself:
/// (1/2) E int (drift_C(X_u) - bridge_drift(T,u,X_u))^2 du. One path sweep
/// serves every horizon in T_list.
inline std::vector<McEstimate> entropy_gap_table(std::span<const double> T_list, double t, std::size_t n_paths,
                                                 std::size_t n_steps, std::uint64_t seed,
                                                 int workers = default_workers()) {
    for (double T : T_list)
        if (!(T > t)) throw std::domain_error("entropy_gap_table: every horizon must exceed t");
    if (n_steps == 0 || n_paths == 0) throw std::domain_error("entropy_gap_table: empty discretization");
    if (t == 0.0) return std::vector<McEstimate>(T_list.size(), McEstimate{0.0, 0.0, n_paths});
    const double dt = t / static_cast<double>(n_steps);
    std::vector<std::vector<double>> acc(T_list.size(), std::vector<double>(n_paths, 0.0));
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        double x = 0.0;
        std::vector<double> local(T_list.size(), 0.0);
        for (std::size_t i = 0; i < n_steps; ++i) {
            const double u = dt * static_cast<double>(i);
            const double d0 = drift_C(x);
            for (std::size_t j = 0; j < T_list.size(); ++j) {
                const double g = d0 - bridge_drift({T_list[j], u, 0.0}, x);
                local[j] += 0.5 * g * g * dt;
            }
            x += d0 * dt + std::sqrt(dt) * rng.normal();
        }
        for (std::size_t j = 0; j < T_list.size(); ++j) acc[j][k] = local[j];
    });
    std::vector<McEstimate> out;
    out.reserve(T_list.size());
    for (const auto& v : acc) out.push_back(mc_estimate(v));
    return out;
}

inline McEstimate entropy_gap(double T, double t, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                              int workers = default_workers()) {
    const double Ts[] = {T};
    return entropy_gap_table(std::span(Ts, 1), t, n_paths, n_steps, seed, workers)[0];
}

struct LogitChangeReport {
    double ks_distance = 0.0;
    double ks_bound = 0.0;
    bool ks_pass = false;
    double qv_mean = 0.0;
    double qv_expected = 0.0;
    double qv_rel_err = 0.0;
    bool qv_pass = false;
    double terminal_mean = 0.0;
    double terminal_se = 0.0;
    double x0 = 0.0;
    bool martingale_pass = false;
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;
    bool pass = false;
};

/// Consistency of the logit change of coordinates on a log-clock ensemble
/// (grid times are r-values, states are the [0,1]-valued martingale): the
/// terminal logit marginal must match the closed-form density by KS
/// distance, the logit path must carry unit quadratic variation, and the
/// [0,1] process stays a martingale. Boundary-touching paths are excluded
/// and counted.
inline LogitChangeReport logit_change_check(const PathEnsemble& ens, double ks_slack = 1.5) {
    LogitChangeReport rep;
    const std::size_t n_pts = ens.grid.n_cells() + 1;
    const double r_end = ens.grid.t_end - ens.grid.t_start;
    rep.x0 = ens.state(0, 0);
    const double c0 = std::log(rep.x0 / (1.0 - rep.x0));
    std::vector<double> terminal_c;
    std::vector<double> terminal_y;
    std::vector<double> qv_sums;
    terminal_c.reserve(ens.n_paths);
    for (std::size_t k = 0; k < ens.n_paths; ++k) {
        const auto row = ens.path_states(k);
        bool inside = true;
        for (double y : row)
            if (!(y > 0.0 && y < 1.0)) {
                inside = false;
                break;
            }
        if (!inside) {
            ++rep.n_excluded;
            continue;
        }
        double qv = 0.0;
        double prev_c = std::log(row[0] / (1.0 - row[0]));
        for (std::size_t i = 1; i < n_pts; ++i) {
            const double ci = std::log(row[i] / (1.0 - row[i]));
            const double d = ci - prev_c;
            qv += d * d;
            prev_c = ci;
        }
        qv_sums.push_back(qv);
        terminal_c.push_back(prev_c);
        terminal_y.push_back(row[n_pts - 1]);
    }
    rep.n_used = terminal_c.size();
    if (rep.n_used == 0) throw std::runtime_error("logit_change_check: every path touched the boundary");
    std::sort(terminal_c.begin(), terminal_c.end());
    double ks = 0.0;
    const double inv_n = 1.0 / static_cast<double>(rep.n_used);
    for (std::size_t i = 0; i < terminal_c.size(); ++i) {
        const double f = cdf_C(r_end, terminal_c[i], c0);
        ks = std::max(ks, std::fabs(f - static_cast<double>(i) * inv_n));
        ks = std::max(ks, std::fabs(static_cast<double>(i + 1) * inv_n - f));
    }
    rep.ks_distance = ks;
    rep.ks_bound = 1.63 * ks_slack / std::sqrt(static_cast<double>(rep.n_used));
    rep.ks_pass = ks < rep.ks_bound;
    const MeanStderr qv_ms = mean_stderr(qv_sums);
    rep.qv_mean = qv_ms.mean;
    rep.qv_expected = r_end;
    rep.qv_rel_err = std::fabs(qv_ms.mean - r_end) / r_end;
    rep.qv_pass = rep.qv_rel_err < 0.02;
    const MeanStderr term = mean_stderr(terminal_y);
    rep.terminal_mean = term.mean;
    rep.terminal_se = term.se;
    rep.martingale_pass = std::fabs(term.mean - rep.x0) <= 3.0 * term.se;
    rep.pass = rep.ks_pass && rep.qv_pass && rep.martingale_pass;
    return rep;
}

/// Posterior probability of a unit drift given the observation value at t,
/// under a Bernoulli(x0) prior: x0 e^{x - t/2} / (x0 e^{x - t/2} + 1 - x0).
inline double filtering_posterior(double x, double t, double x0) {
    if (!(x0 > 0.0 && x0 < 1.0)) throw std::domain_error("filtering_posterior: x0 must lie in (0,1)");
    const double e = std::exp(x - 0.5 * t);
    return x0 * e / (x0 * e + (1.0 - x0));
}

struct FilteringReport {
    double x0 = 0.0;
    double horizon = 0.0;
    std::vector<double> checkpoints;
    std::vector<double> posterior_mean;     // per checkpoint
    std::vector<double> posterior_mean_se;  // per checkpoint
    bool martingale_pass = false;           // E P_t = x0 within 3 se
    double qv_realized = 0.0;
    double qv_integrated = 0.0;
    double qv_rel_err = 0.0;
    bool qv_pass = false;
    double law_worst_margin_se = 0.0;  // potential comparison vs the direct SDE
    bool law_pass = false;
    std::vector<double> concentration;  // mean |P_t - u| per checkpoint
    bool concentration_pass = false;
    bool pass = false;
};

/// Runs the drift-detection experiment: draw u ~ Bernoulli(x0), observe a
/// unit-volatility Brownian motion with drift u, and track the posterior
/// P_t of {u = 1}. Checks that P is a martingale started at x0, that its
/// realized quadratic variation matches int P^2 (1-P)^2 dt, that the law of
/// P_t agrees with the direct simulation of dY = Y(1-Y) dW, and that P
/// concentrates on u as t grows. force_drift_one conditions on u = 1.
inline FilteringReport filtering_experiment(double x0, double horizon, std::size_t n_paths, std::size_t n_steps,
                                            std::uint64_t seed, int workers = default_workers(),
                                            bool force_drift_one = false) {
    if (!(x0 > 0.0 && x0 < 1.0)) throw std::domain_error("filtering_experiment: x0 must lie in (0,1)");
    if (!(horizon > 0.0) || n_steps == 0 || n_paths == 0)
        throw std::domain_error("filtering_experiment: bad discretization");
    FilteringReport rep;
    rep.x0 = x0;
    rep.horizon = horizon;
    const int n_checks = 5;
    n_steps = ((n_steps + n_checks - 1) / n_checks) * n_checks;  // align checkpoints exactly
    for (int j = 1; j <= n_checks; ++j)
        rep.checkpoints.push_back(horizon * static_cast<double>(j) / static_cast<double>(n_checks));
    const double dt = horizon / static_cast<double>(n_steps);
    const std::size_t stride = n_steps / n_checks;

    std::vector<std::vector<double>> p_at(n_checks, std::vector<double>(n_paths, 0.0));
    std::vector<std::vector<double>> dev_at(n_checks, std::vector<double>(n_paths, 0.0));
    std::vector<double> qv_emp(n_paths, 0.0), qv_int(n_paths, 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        const double u = force_drift_one ? 1.0 : (rng.bernoulli(x0) ? 1.0 : 0.0);
        double x = 0.0;
        double p_prev = x0;
        double acc_emp = 0.0, acc_int = 0.0;
        std::size_t check = 0;
        for (std::size_t i = 1; i <= n_steps; ++i) {
            acc_int += p_prev * p_prev * (1.0 - p_prev) * (1.0 - p_prev) * dt;
            x += u * dt + std::sqrt(dt) * rng.normal();
            const double t_now = dt * static_cast<double>(i);
            const double p_now = filtering_posterior(x, t_now, x0);
            const double d = p_now - p_prev;
            acc_emp += d * d;
            p_prev = p_now;
            if (i % stride == 0 && check < static_cast<std::size_t>(n_checks)) {
                p_at[check][k] = p_now;
                dev_at[check][k] = std::fabs(p_now - u);
                ++check;
            }
        }
        qv_emp[k] = acc_emp;
        qv_int[k] = acc_int;
    });

    rep.martingale_pass = true;
    for (int j = 0; j < n_checks; ++j) {
        const McEstimate est = mc_estimate(p_at[j]);
        rep.posterior_mean.push_back(est.mean);
        rep.posterior_mean_se.push_back(est.se);
        if (!force_drift_one && std::fabs(est.mean - x0) > 3.0 * est.se) rep.martingale_pass = false;
    }
    rep.qv_realized = mc_estimate(qv_emp).mean;
    rep.qv_integrated = mc_estimate(qv_int).mean;
    rep.qv_rel_err = std::fabs(rep.qv_realized - rep.qv_integrated) / rep.qv_integrated;
    rep.qv_pass = rep.qv_rel_err < 0.02;

    // direct simulation of dY = Y(1-Y) dW on the same checkpoints
    std::vector<std::vector<double>> y_at(n_checks, std::vector<double>(n_paths, 0.0));
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, substream_id(4, k));
        double y = x0;
        std::size_t check = 0;
        for (std::size_t i = 1; i <= n_steps; ++i) {
            const double sig = y * (1.0 - y);
            if (sig > 0.0) {
                y += sig * std::sqrt(dt) * rng.normal();
                y = std::clamp(y, 0.0, 1.0);
            }
            if (i % stride == 0 && check < static_cast<std::size_t>(n_checks)) {
                y_at[check][k] = y;
                ++check;
            }
        }
    });

    double worst = std::numeric_limits<double>::infinity();
    if (!force_drift_one) {
        std::vector<double> diff(n_paths);
        for (int j = 0; j < n_checks; ++j) {
            for (int kk = 1; kk <= 9; ++kk) {
                const double strike = kk / 10.0;
                std::vector<double> up(n_paths), vp(n_paths);
                for (std::size_t path = 0; path < n_paths; ++path) {
                    up[path] = std::fabs(p_at[j][path] - strike);
                    vp[path] = std::fabs(y_at[j][path] - strike);
                }
                const McEstimate a = mc_estimate(up);
                const McEstimate b = mc_estimate(vp);
                const double se = std::sqrt(a.se * a.se + b.se * b.se);
                if (se > 0.0) worst = std::min(worst, -std::fabs(a.mean - b.mean) / se);
            }
        }
    }
    rep.law_worst_margin_se = worst;
    rep.law_pass = force_drift_one || worst >= -3.0;

    rep.concentration_pass = true;
    for (int j = 0; j < n_checks; ++j) {
        rep.concentration.push_back(mc_estimate(dev_at[j]).mean);
        if (j > 0 && !(rep.concentration[j] < rep.concentration[j - 1])) rep.concentration_pass = false;
    }
    rep.pass = rep.martingale_pass && rep.qv_pass && rep.law_pass && rep.concentration_pass;
    return rep;
}

}  // namespace specwass
