#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "specwass/sde.hpp"

namespace specwass {

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline McEstimate mc_estimate(std::span<const double> per_path) {
    const MeanStderr ms = mean_stderr(per_path);
    return {ms.mean, ms.se, ms.n};
}

/// (2/pi)^{p/2}, the Gaussian-W1 constant entering every scaling limit here.
inline double sw_scaling_constant(double p) { return std::pow(2.0 / kPi, 0.5 * p); }

/// Monte Carlo evaluation of the scaling-limit divergence
///   (2/pi)^{p/2} E_Q[ int |sigma(t,X)| - |eta(t,X)||^p dt ]
/// along simulated Q-paths. The reference field eta must be declared bounded.
inline McEstimate sw_p_closed_form(const MartingaleModel& model_q, const VolatilityField& eta, double p,
                                   std::size_t n_paths, const TimeGrid& grid, std::uint64_t seed,
                                   const SimConfig& cfg = {}, int workers = default_workers()) {
    if (!(p > 0.0)) throw std::domain_error("sw_p_closed_form: p must be positive");
    if (!eta.bounded) throw unsupported_error("sw_p_closed_form: reference volatility must be flagged bounded");
    const double c = sw_scaling_constant(p);
    const PathIntegrand g = [&eta, p](double t, double x, double sig) {
        return std::pow(std::fabs(std::fabs(sig) - std::fabs(eta(t, x))), p);
    };
    const auto acc = mc_path_integrals(model_q, grid, n_paths, seed, cfg, std::span(&g, 1), workers);
    std::vector<double> scaled(acc[0]);
    for (double& v : scaled) v *= c;
    return mc_estimate(scaled);
}

/// Same functional with the model chosen per path by a fair coin between two
/// dynamics; used to exercise linearity of the divergence in the measure.
inline McEstimate sw_p_closed_form_mixture(const MartingaleModel& model_a, const MartingaleModel& model_b,
                                           const VolatilityField& eta, double p, std::size_t n_paths,
                                           const TimeGrid& grid, std::uint64_t seed, const SimConfig& cfg = {},
                                           int workers = default_workers()) {
    if (!eta.bounded) throw unsupported_error("sw_p_closed_form_mixture: reference volatility must be bounded");
    detail::validate_sim_inputs(model_a, grid, cfg, n_paths);
    detail::validate_sim_inputs(model_b, grid, cfg, n_paths);
    const double c = sw_scaling_constant(p);
    std::vector<double> vals(n_paths, 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream coin = derive_stream(seed, substream_id(3, k));
        const MartingaleModel& model = coin.bernoulli(0.5) ? model_a : model_b;
        RngStream rng = derive_stream(seed, k);
        double acc = 0.0;
        detail::euler_path(
            model, grid, cfg, rng,
            [&](double t, double x, double sig, double dt) {
                acc += std::pow(std::fabs(std::fabs(sig) - std::fabs(eta(t, x))), p) * dt;
            },
            [](std::size_t, double, double) {});
        vals[k] = c * acc;
    });
    return mc_estimate(vals);
}

/// Pre-limit divergence with each one-cell conditional replaced by the
/// Gaussian with matching mean and left-endpoint variance:
/// N^{p/2-1} sum_i W1^p(N(x, sigma^2/N), N(x, eta^2/N)) along Q-paths.
/// Exact (zero Monte Carlo variance) when both fields are constant.
inline McEstimate d_Np_gaussian_surrogate(const MartingaleModel& model_q, const MartingaleModel& model_p,
                                          double p, int n_exponent, std::size_t n_paths, std::uint64_t seed,
                                          const SimConfig& cfg = {}, int workers = default_workers()) {
    if (!(p > 0.0)) throw std::domain_error("d_Np_gaussian_surrogate: p must be positive");
    if (n_exponent < 0) throw std::domain_error("d_Np_gaussian_surrogate: grids are the dyadic N = 2^n");
    const double n_cells = std::pow(2.0, n_exponent);
    const double root_n = std::sqrt(n_cells);
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, n_exponent);
    detail::validate_sim_inputs(model_q, grid, cfg, n_paths);
    const double scale = std::pow(n_cells, 0.5 * p - 1.0);
    std::vector<double> vals(n_paths, 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        std::vector<double> cells;
        cells.reserve(grid.n_cells());
        double t_left = grid.points[0];
        double x_left = model_q.x0;
        std::size_t sub_in_cell = 0;
        const int m = cfg.substeps_per_cell;
        detail::euler_path(
            model_q, grid, cfg, rng,
            [&](double t, double x, double, double) {
                if (sub_in_cell == 0) {
                    t_left = t;
                    x_left = x;
                    const double sq = model_q.vol(t_left, x_left);
                    const double sp = model_p.vol(t_left, x_left);
                    const double w1 = w1_gaussian(x_left, sq / root_n, x_left, sp / root_n);
                    cells.push_back(std::pow(w1, p));
                }
                sub_in_cell = (sub_in_cell + 1) % static_cast<std::size_t>(m);
            },
            [](std::size_t, double, double) {});
        vals[k] = scale * pairwise_sum(cells);
    });
    return mc_estimate(vals);
}

/// Inner-sampling controls for the nested estimator. With share_inner_noise
/// the Q- and P-clouds at a cell reuse one stream, so identical dynamics give
/// exactly zero distance.
struct NestedConfig {
    std::size_t M_inner = 4096;
    int inner_substeps = 4;
    bool share_inner_noise = false;
};

/// Nested Monte Carlo pre-limit divergence: each cell's W1 is the exact
/// empirical distance between M_inner one-step samples from the two dynamics
/// started at the simulated left endpoint.
inline McEstimate d_Np_nested_mc(const MartingaleModel& model_q, const MartingaleModel& model_p, double p,
                                 int n_exponent, std::size_t k_outer, const NestedConfig& nested,
                                 std::uint64_t seed, const SimConfig& cfg = {}, int workers = default_workers()) {
    if (!(p > 0.0)) throw std::domain_error("d_Np_nested_mc: p must be positive");
    if (n_exponent < 0) throw std::domain_error("d_Np_nested_mc: grids are the dyadic N = 2^n");
    const double n_cells = std::pow(2.0, n_exponent);
    const TimeGrid grid = make_dyadic_grid(0.0, 1.0, n_exponent);
    detail::validate_sim_inputs(model_q, grid, cfg, k_outer);
    const double scale = std::pow(n_cells, 0.5 * p - 1.0);
    std::vector<double> vals(k_outer, 0.0);
    parallel_for(k_outer, workers, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, k);
        std::vector<double> cells;
        cells.reserve(grid.n_cells());
        std::size_t cell_idx = 0;
        std::size_t sub_in_cell = 0;
        const int m = cfg.substeps_per_cell;
        detail::euler_path(
            model_q, grid, cfg, rng,
            [&](double t, double x, double, double) {
                if (sub_in_cell == 0) {
                    const double t1 = grid.points[cell_idx + 1];
                    RngStream rng_q = derive_stream(seed, substream_id(1, k, cell_idx));
                    RngStream rng_p = nested.share_inner_noise
                                          ? derive_stream(seed, substream_id(1, k, cell_idx))
                                          : derive_stream(seed, substream_id(2, k, cell_idx));
                    const EmpiricalDist cloud_q =
                        sample_one_step(model_q, t, t1, x, nested.M_inner, nested.inner_substeps, rng_q);
                    const EmpiricalDist cloud_p =
                        sample_one_step(model_p, t, t1, x, nested.M_inner, nested.inner_substeps, rng_p);
                    cells.push_back(std::pow(w1_empirical(cloud_q, cloud_p), p));
                    ++cell_idx;
                }
                sub_in_cell = (sub_in_cell + 1) % static_cast<std::size_t>(m);
            },
            [](std::size_t, double, double) {});
        vals[k] = scale * pairwise_sum(cells);
    });
    return mc_estimate(vals);
}

struct DivergenceRow {
    std::uint64_t n_cells = 0;
    double scaled_value = 0.0;
    double se = 0.0;
    std::string method;  // "surrogate" or "nested"
};

struct DivergenceReport {
    double p = 0.0;
    std::vector<DivergenceRow> rows;
    double target = 0.0;
    double target_se = 0.0;
};

/// Scaled pre-limit divergences over a dyadic ladder of grids, with the
/// closed-form estimate on a fine grid as the target column.
inline DivergenceReport convergence_table(const MartingaleModel& model_q, const MartingaleModel& model_p,
                                          double p, std::span<const int> n_exponents, std::size_t n_paths,
                                          std::uint64_t seed, const SimConfig& cfg = {},
                                          int workers = default_workers(), int target_exponent = 12) {
    if (!model_p.vol.bounded)
        throw unsupported_error("convergence_table: reference volatility must be flagged bounded");
    DivergenceReport rep;
    rep.p = p;
    const TimeGrid fine = make_dyadic_grid(0.0, 1.0, target_exponent);
    SimConfig fine_cfg = cfg;
    fine_cfg.substeps_per_cell = 1;
    const McEstimate target = sw_p_closed_form(model_q, model_p.vol, p, n_paths, fine, seed + 1, fine_cfg, workers);
    rep.target = target.mean;
    rep.target_se = target.se;
    for (int n_exp : n_exponents) {
        SimConfig run_cfg = cfg;
        // keep the simulated path resolution comparable across ladder rows
        const int wanted = 1 << std::max(0, target_exponent - n_exp);
        run_cfg.substeps_per_cell = std::max(cfg.substeps_per_cell, wanted);
        const McEstimate est = d_Np_gaussian_surrogate(model_q, model_p, p, n_exp, n_paths, seed, run_cfg, workers);
        rep.rows.push_back({std::uint64_t{1} << n_exp, est.mean, est.se, "surrogate"});
    }
    return rep;
}

struct PerPathGapRow {
    std::uint64_t n_cells = 0;
    double mean_abs_gap = 0.0;
    double gap_se = 0.0;
    double mean_integral = 0.0;
};

/// Per-path comparison of the scaled one-cell Gaussian sums with the time
/// integral along the same path, on nested dyadic grids read off one fine
/// simulation. Requires time-homogeneous Markov fields with Lipschitz,
/// uniformly positive bounded volatility on both sides.
inline std::vector<PerPathGapRow> per_path_limit_check(const MartingaleModel& model_q,
                                                       const MartingaleModel& model_p, double p,
                                                       std::span<const int> n_exponents, std::size_t n_paths,
                                                       std::uint64_t seed, int workers = default_workers(),
                                                       int fine_exponent = 12) {
    for (const VolatilityField* f : {&model_q.vol, &model_p.vol}) {
        if (!(f->markov_time_homogeneous && f->lipschitz_in_state && f->bounded && f->uniformly_positive))
            throw unsupported_error(
                "per_path_limit_check: needs time-homogeneous Markov fields with Lipschitz volatility "
                "bounded away from 0 and infinity (flags)");
    }
    int max_exp = 0;
    for (int e : n_exponents) max_exp = std::max(max_exp, e);
    if (fine_exponent < max_exp + 2) fine_exponent = max_exp + 2;
    const TimeGrid fine = make_dyadic_grid(0.0, 1.0, fine_exponent);
    const PathEnsemble ens = simulate(model_q, fine, n_paths, seed, SimConfig{}, workers);
    const double c = sw_scaling_constant(p);
    const std::size_t n_fine = fine.n_cells();
    const auto f_gap = [&](double x) {
        return std::pow(std::fabs(std::fabs(model_q.vol(0.0, x)) - std::fabs(model_p.vol(0.0, x))), p);
    };
    std::vector<PerPathGapRow> out;
    std::vector<double> integral(n_paths, 0.0);
    parallel_for(n_paths, workers, [&](std::size_t k) {
        const auto row = ens.path_states(k);
        std::vector<double> terms(n_fine);
        for (std::size_t i = 0; i < n_fine; ++i) terms[i] = f_gap(row[i]);
        integral[k] = pairwise_sum(terms) / static_cast<double>(n_fine);
    });
    const double mean_integral = c * mean_stderr(integral).mean;
    for (int n_exp : n_exponents) {
        const std::size_t n_coarse = std::size_t{1} << n_exp;
        const std::size_t stride = n_fine / n_coarse;
        std::vector<double> gaps(n_paths, 0.0);
        parallel_for(n_paths, workers, [&](std::size_t k) {
            const auto row = ens.path_states(k);
            std::vector<double> terms(n_coarse);
            for (std::size_t i = 0; i < n_coarse; ++i) terms[i] = f_gap(row[i * stride]);
            const double coarse = pairwise_sum(terms) / static_cast<double>(n_coarse);
            gaps[k] = std::fabs(c * coarse - c * integral[k]);
        });
        const MeanStderr ms = mean_stderr(gaps);
        out.push_back({n_coarse, ms.mean, ms.se, mean_integral});
    }
    return out;
}

/// Monte Carlo specific relative entropy along Q-paths:
///   (1/2) E_Q[ int { sigma^2/eta^2 - 1 - log(sigma^2/eta^2) } dt ].
inline McEstimate specific_relative_entropy(const MartingaleModel& model_q, const VolatilityField& eta,
                                            std::size_t n_paths, const TimeGrid& grid, std::uint64_t seed,
                                            const SimConfig& cfg = {}, int workers = default_workers()) {
    const PathIntegrand g = [&eta](double t, double x, double sig) {
        const double e = eta(t, x);
        if (!(e > 0.0)) throw std::domain_error("specific_relative_entropy: eta vanished along a path");
        const double ratio = (sig * sig) / (e * e);
        if (!(ratio > 0.0)) return std::numeric_limits<double>::infinity();
        return 0.5 * (ratio - 1.0 - std::log(ratio));
    };
    const auto acc = mc_path_integrals(model_q, grid, n_paths, seed, cfg, std::span(&g, 1), workers);
    return mc_estimate(acc[0]);
}

/// E_Q[ int (|sigma|-1)^2 dt ], the squared adapted-W2 distance to Wiener
/// measure in closed form.
inline McEstimate aw2_squared_vs_wiener(const MartingaleModel& model_q, std::size_t n_paths, const TimeGrid& grid,
                                        std::uint64_t seed, const SimConfig& cfg = {},
                                        int workers = default_workers()) {
    const PathIntegrand g = [](double, double, double sig) {
        const double d = std::fabs(sig) - 1.0;
        return d * d;
    };
    const auto acc = mc_path_integrals(model_q, grid, n_paths, seed, cfg, std::span(&g, 1), workers);
    return mc_estimate(acc[0]);
}

struct FollmerReport {
    double half_aw2 = 0.0;
    double half_sw2 = 0.0;  // = half_aw2 by construction: the (2/pi) factor is divided back out
    double sw2 = 0.0;
    double h = 0.0;
    double h_se = 0.0;
    double margin = 0.0;  // h - half_sw2
    double margin_se = 0.0;
    bool inequality_holds = false;
};

/// One-sweep check of the entropy chain against the Wiener reference:
/// half the (squared) adapted distance equals half the p=2 divergence up to
/// its Gaussian constant, and both are dominated by the specific relative
/// entropy. All three functionals share the same simulated paths.
inline FollmerReport follmer_chain_check(const MartingaleModel& model_q, std::size_t n_paths, const TimeGrid& grid,
                                         std::uint64_t seed, const SimConfig& cfg = {},
                                         int workers = default_workers()) {
    const PathIntegrand base = [](double, double, double sig) {
        const double d = std::fabs(sig) - 1.0;
        return d * d;
    };
    const PathIntegrand ent = [](double, double, double sig) {
        const double s2 = sig * sig;
        if (!(s2 > 0.0)) return std::numeric_limits<double>::infinity();
        return 0.5 * (s2 - 1.0 - std::log(s2));
    };
    const PathIntegrand gs[] = {base, ent};
    const auto acc = mc_path_integrals(model_q, grid, n_paths, seed, cfg, std::span(gs, 2), workers);
    FollmerReport rep;
    const McEstimate base_est = mc_estimate(acc[0]);
    const McEstimate h_est = mc_estimate(acc[1]);
    rep.half_aw2 = 0.5 * base_est.mean;
    rep.half_sw2 = rep.half_aw2;
    rep.sw2 = sw_scaling_constant(2.0) * base_est.mean;
    rep.h = h_est.mean;
    rep.h_se = h_est.se;
    std::vector<double> margins(n_paths);
    for (std::size_t k = 0; k < n_paths; ++k) margins[k] = acc[1][k] - 0.5 * acc[0][k];
    const McEstimate m = mc_estimate(margins);
    rep.margin = m.mean;
    rep.margin_se = m.se;
    rep.inequality_holds = rep.margin >= -3.0 * rep.margin_se;
    return rep;
}

struct SandwichReport {
    double lhs = 0.0, mid = 0.0, rhs = 0.0;
    double margin_low = 0.0, margin_low_se = 0.0;    // mid - lhs
    double margin_high = 0.0, margin_high_se = 0.0;  // rhs - mid
    bool holds = false;
};

/// Checks SW_p(Q||P_eps) - (2/pi)^{p/2} eps^p <= SW_p(Q||P_delta) together
/// with the reverse bound at tuning parameter r, all three sides evaluated
/// on the same paths. Only valid for p in (0,2).
inline SandwichReport epsilon_sandwich_check(const MartingaleModel& model_q, double p, double eps, double r,
                                             std::size_t n_paths, const TimeGrid& grid, std::uint64_t seed,
                                             const SimConfig& cfg = {}, int workers = default_workers()) {
    if (!(p > 0.0 && p < 2.0)) throw std::domain_error("epsilon_sandwich_check: p must lie in (0,2)");
    if (eps < 0.0 || !(r > 0.0)) throw std::domain_error("epsilon_sandwich_check: need eps >= 0 and r > 0");
    const double c = sw_scaling_constant(p);
    const PathIntegrand f_eps = [p, eps](double, double, double sig) {
        return std::pow(std::fabs(std::fabs(sig) - eps), p);
    };
    const PathIntegrand f_zero = [p](double, double, double sig) { return std::pow(std::fabs(sig), p); };
    const PathIntegrand gs[] = {f_eps, f_zero};
    const auto acc = mc_path_integrals(model_q, grid, n_paths, seed, cfg, std::span(gs, 2), workers);
    const double eps_term = c * std::pow(eps, p);
    const double amp = std::pow(1.0 + r * r, 0.5 * p);
    const double tail = c * std::pow(std::fabs(1.0 - 1.0 / (r * r)), 0.5 * p) * std::pow(eps, p);
    std::vector<double> lhs(n_paths), mid(n_paths), rhs(n_paths), m_low(n_paths), m_high(n_paths);
    for (std::size_t k = 0; k < n_paths; ++k) {
        lhs[k] = c * acc[0][k] - eps_term;
        mid[k] = c * acc[1][k];
        rhs[k] = amp * c * acc[0][k] + tail;
        m_low[k] = mid[k] - lhs[k];
        m_high[k] = rhs[k] - mid[k];
    }
    SandwichReport rep;
    rep.lhs = mc_estimate(lhs).mean;
    rep.mid = mc_estimate(mid).mean;
    rep.rhs = mc_estimate(rhs).mean;
    const McEstimate lo = mc_estimate(m_low), hi = mc_estimate(m_high);
    rep.margin_low = lo.mean;
    rep.margin_low_se = lo.se;
    rep.margin_high = hi.mean;
    rep.margin_high_se = hi.se;
    // absolute floor guards the zero-variance degenerate cases against
    // last-ulp rounding of the shared per-path terms
    const double floor = 1e-12 * (1.0 + std::fabs(rep.mid) + std::fabs(rep.rhs));
    rep.holds = lo.mean >= -3.0 * lo.se - floor && hi.mean >= -3.0 * hi.se - floor;
    return rep;
}

/// Finitely supported two-step law: atoms (x1, x2) with positive weights
/// summing to 1.
struct TwoStepMeasure {
    struct Atom {
        double x1 = 0.0;
        double x2 = 0.0;
        double w = 0.0;
    };
    std::vector<Atom> atoms;

    void validate() const {
        if (atoms.empty()) throw std::domain_error("TwoStepMeasure: empty support");
        double sum = 0.0;
        for (const Atom& a : atoms) {
            if (!(a.w > 0.0)) throw std::domain_error("TwoStepMeasure: weights must be positive");
            sum += a.w;
        }
        if (std::fabs(sum - 1.0) > 1e-12) throw std::domain_error("TwoStepMeasure: weights must sum to 1");
    }
};

/// Reference kernels for the two-step probe: Gaussian first marginal and a
/// Gaussian conditional per first coordinate.
struct GaussianKernelSpec {
    double mean1 = 0.0;
    double sd1 = 1.0;
    std::function<std::pair<double, double>(double)> cond;  // x1 -> (mean, sd)
};

/// D^{2,p} of a finitely supported law against Gaussian reference kernels:
/// W1^p of the first marginals plus the weighted W1^p of the conditionals.
inline double d2p_two_step(const TwoStepMeasure& q, const GaussianKernelSpec& ref, double p) {
    q.validate();
    std::map<double, std::vector<std::pair<double, double>>> groups;  // x1 -> [(x2, w)]
    std::map<double, double> w1mass;
    for (const auto& a : q.atoms) {
        groups[a.x1].push_back({a.x2, a.w});
        w1mass[a.x1] += a.w;
    }
    std::vector<double> marg_atoms, marg_w;
    for (const auto& [x1, w] : w1mass) {
        marg_atoms.push_back(x1);
        marg_w.push_back(w);
    }
    double total = w1_empirical_gaussian(EmpiricalDist::weighted(marg_atoms, marg_w), ref.mean1, ref.sd1);
    total = std::pow(total, p);
    for (const auto& [x1, pts] : groups) {
        const double mass = w1mass[x1];
        std::vector<double> atoms, ws;
        for (const auto& [x2, w] : pts) {
            atoms.push_back(x2);
            ws.push_back(w / mass);
        }
        const auto [cm, cs] = ref.cond(x1);
        const double w1 = w1_empirical_gaussian(EmpiricalDist::weighted(atoms, ws), cm, cs);
        total += mass * std::pow(w1, p);
    }
    return total;
}

struct ConvexityReport {
    double mixture_value = 0.0;
    double convex_bound = 0.0;
    double slack = 0.0;  // bound - mixture, nonnegative up to 1e-12 when convexity holds
    bool holds = false;
};

/// Convexity of the two-step divergence in its first argument, checked by
/// exact disintegration of t Q + (1-t) Qtilde. Requires p >= 1.
inline ConvexityReport convexity_probe_N2(const GaussianKernelSpec& ref, const TwoStepMeasure& q,
                                          const TwoStepMeasure& q_tilde, double t, double p) {
    if (!(p >= 1.0)) throw unsupported_error("convexity_probe_N2: convexity requires p >= 1");
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("convexity_probe_N2: t must lie in [0,1]");
    q.validate();
    q_tilde.validate();
    TwoStepMeasure mix;
    if (t > 0.0)
        for (const auto& a : q.atoms) mix.atoms.push_back({a.x1, a.x2, t * a.w});
    if (t < 1.0)
        for (const auto& a : q_tilde.atoms) mix.atoms.push_back({a.x1, a.x2, (1.0 - t) * a.w});
    ConvexityReport rep;
    rep.mixture_value = d2p_two_step(mix, ref, p);
    rep.convex_bound = t * d2p_two_step(q, ref, p) + (1.0 - t) * d2p_two_step(q_tilde, ref, p);
    rep.slack = rep.convex_bound - rep.mixture_value;
    rep.holds = rep.slack >= -1e-12;
    return rep;
}

}  // namespace specwass
