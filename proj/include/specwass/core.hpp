#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specwass/rng.hpp"

namespace specwass {

/// Thrown when an operation's model hypotheses are not declared by the
/// input (missing regularity flags, non-Markov field, ...).
struct unsupported_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Partition of [t_start, t_end] into n_cells cells; points are the
/// n_cells+1 strictly increasing cell boundaries.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 1.0;
    std::vector<double> points;

    std::size_t n_cells() const { return points.size() - 1; }

    static TimeGrid from_points(std::vector<double> pts) {
        if (pts.size() < 2) throw std::domain_error("TimeGrid: need at least two points");
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (!(pts[i] > pts[i - 1])) throw std::domain_error("TimeGrid: points must be strictly increasing");
        TimeGrid g;
        g.t_start = pts.front();
        g.t_end = pts.back();
        g.points = std::move(pts);
        return g;
    }
};

/// Uniform grid with 2^n_exponent cells on [t_start, t_end] in [0,1].
inline TimeGrid make_dyadic_grid(double t_start, double t_end, int n_exponent) {
    if (!(0.0 <= t_start && t_start < t_end && t_end <= 1.0))
        throw std::domain_error("make_dyadic_grid: need 0 <= t_start < t_end <= 1");
    if (n_exponent < 0) throw std::domain_error("make_dyadic_grid: n_exponent must be >= 0");
    const std::size_t n = std::size_t{1} << n_exponent;
    std::vector<double> pts(n + 1);
    const double span = t_end - t_start;
    for (std::size_t k = 0; k <= n; ++k)
        pts[k] = t_start + span * (static_cast<double>(k) / static_cast<double>(n));
    pts.front() = t_start;
    pts.back() = t_end;
    return TimeGrid::from_points(std::move(pts));
}

inline TimeGrid make_uniform_grid(double t_start, double t_end, std::size_t n_cells) {
    if (!(t_start < t_end) || n_cells == 0) throw std::domain_error("make_uniform_grid: bad arguments");
    std::vector<double> pts(n_cells + 1);
    const double span = t_end - t_start;
    for (std::size_t k = 0; k <= n_cells; ++k)
        pts[k] = t_start + span * (static_cast<double>(k) / static_cast<double>(n_cells));
    pts.front() = t_start;
    pts.back() = t_end;
    return TimeGrid::from_points(std::move(pts));
}

/// Time change used for volatilities blowing up like (1-t)^{-1/2}:
/// r(t) = -2 log(1-t), t(r) = 1 - exp(-r/2).
inline double log_clock_of_time(double t) {
    if (!(t < 1.0)) throw std::domain_error("log_clock_of_time: t must be < 1");
    return -2.0 * std::log1p(-t);
}
inline double time_of_log_clock(double r) { return -std::expm1(-0.5 * r); }

/// Grid on [t_start, t_cut] with cells of roughly equal width in the
/// r = -2 log(1-t) clock; any requested interior times are inserted exactly.
inline TimeGrid make_logclock_grid(double t_start, double t_cut, double dr,
                                   std::span<const double> insert_times = {}) {
    if (!(0.0 <= t_start && t_start < t_cut && t_cut < 1.0))
        throw std::domain_error("make_logclock_grid: need 0 <= t_start < t_cut < 1");
    if (!(dr > 0.0)) throw std::domain_error("make_logclock_grid: dr must be positive");
    std::vector<double> rs;
    const double r0 = log_clock_of_time(t_start);
    const double r1 = log_clock_of_time(t_cut);
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((r1 - r0) / dr)));
    for (std::size_t k = 0; k <= n; ++k)
        rs.push_back(r0 + (r1 - r0) * static_cast<double>(k) / static_cast<double>(n));
    std::vector<double> pts;
    pts.reserve(rs.size() + insert_times.size());
    for (double r : rs) pts.push_back(time_of_log_clock(r));
    pts.front() = t_start;
    pts.back() = t_cut;
    for (double t : insert_times) {
        if (t <= t_start || t >= t_cut) continue;
        pts.push_back(t);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double a, double b) { return std::fabs(a - b) < 1e-13; }),
              pts.end());
    return TimeGrid::from_points(std::move(pts));
}

/// Evaluatable diffusion coefficient sigma(t,x) >= 0 with the regularity
/// metadata callers branch on. Fields with singular_at_end are only
/// evaluated strictly before time_domain.hi.
struct VolatilityField {
    std::function<double(double, double)> eval;
    Interval time_domain{0.0, 1.0};
    std::optional<Interval> state_domain;  // nullopt: all of R
    bool singular_at_end = false;
    bool markov_time_homogeneous = false;
    bool bounded = false;
    bool lipschitz_in_state = false;
    bool uniformly_positive = false;

    double operator()(double t, double x) const { return eval(t, x); }
};

inline VolatilityField constant_vol(double c) {
    if (c < 0.0) throw std::domain_error("constant_vol: sigma must be nonnegative");
    VolatilityField f;
    f.eval = [c](double, double) { return c; };
    f.markov_time_homogeneous = true;
    f.bounded = true;
    f.lipschitz_in_state = true;
    f.uniformly_positive = c > 0.0;
    return f;
}

enum class BoundaryRule { none, absorbing_unit_interval };

/// Scalar martingale diffusion dX = sigma(t,X) dB started at x0.
struct MartingaleModel {
    double x0 = 0.0;
    VolatilityField vol;
    std::optional<Interval> state_domain;  // [0,1] models must have vanishing vol at 0 and 1
    BoundaryRule boundary = BoundaryRule::none;
    std::string tag;

    void validate() const {
        if (state_domain) {
            if (!state_domain->contains(x0)) throw std::domain_error("MartingaleModel: x0 outside state domain");
            for (double t : {0.0, 0.25, 0.5}) {
                if (vol.eval(t, state_domain->lo) != 0.0 || vol.eval(t, state_domain->hi) != 0.0)
                    throw std::domain_error("MartingaleModel: volatility must vanish on the state boundary");
            }
        }
    }
};

/// K simulated paths on a time grid together with the per-cell quadratic
/// variation increments accumulated from simulation substeps.
struct PathEnsemble {
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::vector<double> states;       // K x (n_cells+1), row-major
    std::vector<double> realized_qv;  // K x n_cells, row-major
    std::string model_tag;
    std::uint64_t master_seed = 0;

    double state(std::size_t path, std::size_t point) const {
        return states[path * (grid.n_cells() + 1) + point];
    }
    double qv(std::size_t path, std::size_t cell) const { return realized_qv[path * grid.n_cells() + cell]; }
    std::span<const double> path_states(std::size_t path) const {
        return std::span<const double>(states).subspan(path * (grid.n_cells() + 1), grid.n_cells() + 1);
    }
    std::span<const double> path_qv(std::size_t path) const {
        return std::span<const double>(realized_qv).subspan(path * grid.n_cells(), grid.n_cells());
    }

    void save_binary(const std::string& path) const;
    static PathEnsemble load_binary(const std::string& path);
    void save_csv(const std::string& path) const;
};

namespace detail {

template <class T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_raw(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

inline void require_little_endian() {
    const std::uint32_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    if (b != 1) throw std::runtime_error("PathEnsemble io: little-endian platform required");
}

}  // namespace detail

// Flat layout: "SWPE", version u32, K u64, n_cells u64, grid f64[n_cells+1],
// states f64[K*(n_cells+1)], realized_qv f64[K*n_cells]; all little-endian.
inline void PathEnsemble::save_binary(const std::string& path) const {
    detail::require_little_endian();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("PathEnsemble: cannot open " + path + " for writing");
    out.write("SWPE", 4);
    detail::write_raw(out, std::uint32_t{1});
    detail::write_raw(out, static_cast<std::uint64_t>(n_paths));
    detail::write_raw(out, static_cast<std::uint64_t>(grid.n_cells()));
    out.write(reinterpret_cast<const char*>(grid.points.data()),
              static_cast<std::streamsize>(grid.points.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(states.data()),
              static_cast<std::streamsize>(states.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(realized_qv.data()),
              static_cast<std::streamsize>(realized_qv.size() * sizeof(double)));
    if (!out) throw std::runtime_error("PathEnsemble: write failed for " + path);
}

inline PathEnsemble PathEnsemble::load_binary(const std::string& path) {
    detail::require_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("PathEnsemble: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SWPE", 4) != 0) throw std::runtime_error("PathEnsemble: bad magic in " + path);
    std::uint32_t version = 0;
    detail::read_raw(in, version);
    if (version != 1) throw std::runtime_error("PathEnsemble: unsupported version");
    std::uint64_t k = 0, n = 0;
    detail::read_raw(in, k);
    detail::read_raw(in, n);
    PathEnsemble e;
    e.n_paths = static_cast<std::size_t>(k);
    std::vector<double> pts(n + 1);
    in.read(reinterpret_cast<char*>(pts.data()), static_cast<std::streamsize>(pts.size() * sizeof(double)));
    e.grid = TimeGrid::from_points(std::move(pts));
    e.states.resize(k * (n + 1));
    e.realized_qv.resize(k * n);
    in.read(reinterpret_cast<char*>(e.states.data()),
            static_cast<std::streamsize>(e.states.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(e.realized_qv.data()),
            static_cast<std::streamsize>(e.realized_qv.size() * sizeof(double)));
    if (!in) throw std::runtime_error("PathEnsemble: truncated file " + path);
    return e;
}

inline void PathEnsemble::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("PathEnsemble: cannot open " + path + " for writing");
    out << "path_id,t,x\n";
    char buf[64];
    for (std::size_t k = 0; k < n_paths; ++k) {
        for (std::size_t i = 0; i <= grid.n_cells(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", k, grid.points[i], state(k, i));
            out << buf;
        }
    }
}

}  // namespace specwass
