#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "specwass/divergence.hpp"
#include "specwass/schrodinger.hpp"
#include "specwass/winmart.hpp"

namespace specwass {

/// Round-trip formatting for every number that lands in a report, so that
/// identical runs produce byte-identical files.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string divergence_report_csv(const DivergenceReport& rep) {
    std::ostringstream out;
    out << "p,N,method,scaled_value,stderr,target,target_stderr,rel_error\n";
    for (const auto& row : rep.rows) {
        const double rel = rep.target != 0.0 ? std::fabs(row.scaled_value - rep.target) / std::fabs(rep.target)
                                             : std::fabs(row.scaled_value);
        out << fmt_double(rep.p) << ',' << row.n_cells << ',' << row.method << ',' << fmt_double(row.scaled_value)
            << ',' << fmt_double(row.se) << ',' << fmt_double(rep.target) << ',' << fmt_double(rep.target_se) << ','
            << fmt_double(rel) << '\n';
    }
    return out.str();
}

inline nlohmann::json divergence_report_json(const DivergenceReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rep.rows) {
        rows.push_back({{"N", row.n_cells},
                        {"method", row.method},
                        {"scaled_value", row.scaled_value},
                        {"stderr", row.se}});
    }
    return {{"p", rep.p}, {"rows", rows}, {"target", rep.target}, {"target_stderr", rep.target_se}};
}

/// Gnuplot-ready data block: N, scaled value, stderr, target.
inline std::string divergence_report_plot_data(const DivergenceReport& rep) {
    std::ostringstream out;
    out << "# N scaled_value stderr target\n";
    for (const auto& row : rep.rows)
        out << row.n_cells << ' ' << fmt_double(row.scaled_value) << ' ' << fmt_double(row.se) << ' '
            << fmt_double(rep.target) << '\n';
    return out.str();
}

inline std::string profile_csv(const OptimalProfile& prof) {
    std::ostringstream out;
    out << "x,y,sigma_at_t0\n";
    const double h = 0.5 / static_cast<double>(prof.n_nodes);
    for (std::size_t i = 0; i <= 2 * prof.n_nodes; ++i) {
        const double x = std::min(1.0, static_cast<double>(i) * h);
        out << fmt_double(x) << ',' << fmt_double(prof.y(x)) << ',' << fmt_double(prof.sigma(0.0, x)) << '\n';
    }
    return out.str();
}

inline nlohmann::json profile_header_json(const OptimalProfile& prof) {
    return {{"p", prof.p}, {"C_p", prof.C_p}, {"y0", prof.y0}, {"n_nodes", prof.n_nodes}};
}

inline nlohmann::json follmer_report_json(const FollmerReport& rep) {
    return {{"half_aw2", rep.half_aw2},   {"half_sw2", rep.half_sw2},
            {"sw2", rep.sw2},             {"h", rep.h},
            {"h_stderr", rep.h_se},       {"margin", rep.margin},
            {"margin_stderr", rep.margin_se}, {"inequality_holds", rep.inequality_holds}};
}

inline nlohmann::json sandwich_report_json(const SandwichReport& rep) {
    return {{"lhs", rep.lhs},
            {"mid", rep.mid},
            {"rhs", rep.rhs},
            {"margin_low", rep.margin_low},
            {"margin_low_stderr", rep.margin_low_se},
            {"margin_high", rep.margin_high},
            {"margin_high_stderr", rep.margin_high_se},
            {"holds", rep.holds}};
}

inline nlohmann::json optimality_report_json(const OptimalityReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rep.rows) {
        rows.push_back({{"name", row.name},
                        {"cost", row.cost},
                        {"cost_stderr", row.cost_se},
                        {"edge", row.edge},
                        {"edge_stderr", row.edge_se},
                        {"identical_to_optimal", row.identical_to_optimal},
                        {"beaten", row.beaten}});
    }
    return {{"p", rep.p},
            {"x0", rep.x0},
            {"optimal_cost", rep.optimal_cost},
            {"optimal_cost_stderr", rep.optimal_cost_se},
            {"competitors", rows},
            {"all_beaten", rep.all_beaten}};
}

inline nlohmann::json convex_order_report_json(const ConvexOrderReport& rep) {
    return {{"models", rep.model_names},
            {"pointwise_strict", rep.pointwise_strict},
            {"min_pointwise_gap", rep.min_pointwise_gap},
            {"potentials_ordered", rep.potentials_ordered},
            {"worst_potential_margin_se", rep.worst_potential_margin_se}};
}

inline nlohmann::json value_check_json(const ValueCheckReport& rep) {
    return {{"value", rep.value},
            {"mc_mean", rep.mc_mean},
            {"mc_stderr", rep.mc_se},
            {"t_cut", rep.t_cut},
            {"within_3se", rep.within_3se}};
}

inline nlohmann::json logit_report_json(const LogitChangeReport& rep) {
    return {{"ks_distance", rep.ks_distance},
            {"ks_bound", rep.ks_bound},
            {"ks_pass", rep.ks_pass},
            {"qv_mean", rep.qv_mean},
            {"qv_expected", rep.qv_expected},
            {"qv_rel_err", rep.qv_rel_err},
            {"qv_pass", rep.qv_pass},
            {"terminal_mean", rep.terminal_mean},
            {"terminal_stderr", rep.terminal_se},
            {"x0", rep.x0},
            {"martingale_pass", rep.martingale_pass},
            {"n_used", rep.n_used},
            {"n_excluded", rep.n_excluded},
            {"pass", rep.pass}};
}

inline nlohmann::json filtering_report_json(const FilteringReport& rep) {
    return {{"x0", rep.x0},
            {"horizon", rep.horizon},
            {"checkpoints", rep.checkpoints},
            {"posterior_mean", rep.posterior_mean},
            {"posterior_mean_stderr", rep.posterior_mean_se},
            {"martingale_pass", rep.martingale_pass},
            {"qv_realized", rep.qv_realized},
            {"qv_integrated", rep.qv_integrated},
            {"qv_rel_err", rep.qv_rel_err},
            {"qv_pass", rep.qv_pass},
            {"law_worst_margin_se", rep.law_worst_margin_se},
            {"law_pass", rep.law_pass},
            {"concentration", rep.concentration},
            {"concentration_pass", rep.concentration_pass},
            {"pass", rep.pass}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

}  // namespace specwass
