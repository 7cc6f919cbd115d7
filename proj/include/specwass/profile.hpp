#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "specwass/math.hpp"

namespace specwass {

namespace detail {

// First integral of y'' + p y^{(p-2)/p} = 0 with y(0)=y(1)=0, written in the
// peak-normalized variable z = y/y0:
//   y'(x)^2 = C_eff * q(z),
// where q(z) = -sign(a) * expm1(a log z) for p != 1 (a = (2p-2)/p) and
// q(z) = -2 log z for p = 1 (with C_eff = 1). This form is stable for all
// p > 0 including near p = 1 where the raw coefficients blow up.
struct ProfileLaw {
    double p = 0.0;
    double a = 0.0;      // (2p-2)/p, 0 flags the log branch
    double c_eff = 1.0;  // C_p for p != 1, 1 for p = 1
    double y0 = 0.0;
    bool log_branch = false;

    double q(double z) const {
        if (log_branch) return -2.0 * std::log(z);
        const double e = std::expm1(a * std::log(z));
        return a > 0.0 ? -e : e;
    }

    double slope_of_z(double z) const { return std::sqrt(c_eff * q(z)); }

    // Integrand of x(zeta) = pref * int_0^zeta dz / sqrt(q(z)) after the
    // substitution z = 1 - u^2 that removes the square-root endpoint
    // singularity at z = 1. log(1-u^2) is evaluated as log1p(-u^2) so the
    // u -> 0 limit 2/sqrt(|a|) comes out exactly.
    double integrand_u(double u) const {
        const double lz = std::log1p(-u * u);
        if (!(lz < 0.0)) return log_branch ? kSqrt2 : 2.0 / std::sqrt(std::fabs(a));
        double qv;
        if (log_branch) {
            qv = -2.0 * lz;
        } else {
            const double e = std::expm1(a * lz);
            qv = a > 0.0 ? -e : e;
        }
        return 2.0 * u / std::sqrt(qv);
    }

    double prefactor() const { return y0 / std::sqrt(c_eff); }
};

inline double profile_branch_exponent(double p) { return (2.0 * p - 2.0) / p; }

}  // namespace detail

/// Unique constant making the symmetric nonnegative solution of
/// y'' + p y^{(p-2)/p} = 0, y(0)=y(1)=0, hit its peak at x = 1/2.
inline double solve_Cp(double p) {
    if (!(p > 0.0)) throw std::domain_error("solve_Cp: p must be positive");
    if (std::fabs(p - 2.0) < 1e-6) return 1.0;
    if (std::fabs(p - 1.0) < 1e-9) {
        // int_0^1 dz/sqrt(-log z) = int_0^inf 2 exp(-w^2) dw after z = exp(-w^2)
        const double i1 = integrate([](double w) { return 2.0 * std::exp(-w * w); }, 0.0, 8.5, 1e-13);
        return 2.0 * std::log(kSqrt2 * i1);
    }
    const double a = detail::profile_branch_exponent(p);
    detail::ProfileLaw law;
    law.p = p;
    law.a = a;
    const double ip = integrate([&law](double u) { return law.integrand_u(u); }, 0.0, 1.0, 1e-13);
    const double log_c = (2.0 * p - 2.0) * (std::log(0.5) - std::log(ip)) -
                         p * std::log(std::fabs(2.0 * p - 2.0) / (2.0 * p * p));
    return std::exp(log_c);
}

/// Half-profile y on [0, 1/2] of the optimal win-martingale for exponent p,
/// tabulated on a uniform x-grid with exact first-integral slopes, plus the
/// companion table h = y^{1/p} (the volatility shape at t = 0). Extended to
/// [1/2, 1] by the symmetry y(x) = y(1-x).
struct OptimalProfile {
    double p = 0.0;
    double C_p = 0.0;
    double y0 = 0.0;
    std::size_t n_nodes = 0;
    UniformCubic y_tab;  // y on [0, 1/2]
    UniformCubic h_tab;  // y^{1/p} on [0, 1/2]

    double y(double x) const { return y_tab(fold(x)); }
    double dy(double x) const {
        const double xf = fold(x);
        const double d = y_tab.derivative(xf);
        return x <= 0.5 ? d : -d;
    }
    double h(double x) const { return h_tab(fold(x)); }

    /// sigma(t,x) = y(x)^{1/p} / sqrt(1-t); vanishes only at x in {0,1}.
    double sigma(double t, double x) const {
        if (!(t < 1.0)) throw std::domain_error("OptimalProfile::sigma: t must be < 1");
        return h(x) / std::sqrt(1.0 - t);
    }

    /// Expected remaining cost (1-s) sigma^p(s,x) = (1-s)^{1-p/2} y(x).
    double value(double s, double x) const {
        if (!(s < 1.0)) throw std::domain_error("OptimalProfile::value: s must be < 1");
        return std::pow(1.0 - s, 1.0 - 0.5 * p) * y(x);
    }

  private:
    static double fold(double x) {
        if (x < 0.0) x = 0.0;
        if (x > 1.0) x = 1.0;
        return x <= 0.5 ? x : 1.0 - x;
    }
};

namespace detail {

inline double profile_y0(double p, double c) {
    if (std::fabs(p - 1.0) < 1e-9) return std::exp(-0.5 * c);
    return std::exp(p / (2.0 * p - 2.0) * std::log(std::fabs(2.0 * p - 2.0) * c / (2.0 * p * p)));
}

// Replaces non-finite end slopes by a secant-based value; the Fritsch-Carlson
// clamp inside UniformCubic further restricts them to the monotone region.
inline void sanitize_slopes(const std::vector<double>& y, double h, std::vector<double>& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (std::isfinite(m[i])) continue;
        const double secant =
            (i + 1 < y.size()) ? (y[i + 1] - y[i]) / h : (y[i] - y[i - 1]) / h;
        m[i] = 3.0 * secant;
    }
}

}  // namespace detail

inline OptimalProfile solve_profile(double p, std::size_t n_nodes = 4096) {
    if (!(p > 0.0)) throw std::domain_error("solve_profile: p must be positive");
    if (n_nodes < 16) throw std::domain_error("solve_profile: too few nodes");

    OptimalProfile prof;
    prof.p = p;
    prof.C_p = solve_Cp(p);
    prof.y0 = detail::profile_y0(p, prof.C_p);
    prof.n_nodes = n_nodes;
    const double x_step = 0.5 / static_cast<double>(n_nodes);

    std::vector<double> ys(n_nodes + 1), ms(n_nodes + 1), hs(n_nodes + 1), hms(n_nodes + 1);

    if (std::fabs(p - 2.0) < 1e-6) {
        // Wright-Fisher closed form y = x(1-x); the generic machinery is
        // continuous through p = 2 but needlessly ill-conditioned there.
        prof.y0 = 0.25;
        const double invp = 1.0 / p;
        for (std::size_t i = 0; i <= n_nodes; ++i) {
            const double x = static_cast<double>(i) * x_step;
            ys[i] = x * (1.0 - x);
            ms[i] = 1.0 - 2.0 * x;
            hs[i] = std::pow(ys[i], invp);
            hms[i] = ys[i] > 0.0 ? invp * std::pow(ys[i], invp - 1.0) * ms[i]
                                 : std::numeric_limits<double>::infinity();
        }
        hms[n_nodes] = 0.0;
        detail::sanitize_slopes(hs, x_step, hms);
        prof.y_tab = UniformCubic(0.0, x_step, ys, ms);
        prof.h_tab = UniformCubic(0.0, x_step, hs, hms);
        return prof;
    }

    detail::ProfileLaw law;
    law.p = p;
    law.log_branch = std::fabs(p - 1.0) < 1e-9;
    law.a = law.log_branch ? 0.0 : detail::profile_branch_exponent(p);
    law.c_eff = law.log_branch ? 1.0 : prof.C_p;
    law.y0 = prof.y0;
    const double pref = law.prefactor();

    // Dense map zeta_j -> x(zeta_j), with nodes clustered at both endpoints.
    const std::size_t n_dense = 1024;
    std::vector<double> zeta(n_dense + 1), xd(n_dense + 1);
    for (std::size_t j = 0; j <= n_dense; ++j) {
        const double s = std::sin(0.5 * kPi * static_cast<double>(j) / static_cast<double>(n_dense));
        zeta[j] = s * s;
    }
    zeta.front() = 0.0;
    zeta.back() = 1.0;
    xd[0] = 0.0;
    const auto f_u = [&law](double u) { return law.integrand_u(u); };
    for (std::size_t j = 1; j <= n_dense; ++j) {
        const double u_hi = std::sqrt(1.0 - zeta[j - 1]);
        const double u_lo = std::sqrt(std::max(0.0, 1.0 - zeta[j]));
        xd[j] = xd[j - 1] + pref * integrate(f_u, u_lo, u_hi, 1e-14);
    }
    const double half_err = xd.back() - 0.5;
    if (std::fabs(half_err) > 1e-7)
        throw std::runtime_error("solve_profile: quadrature failed to reproduce the half-interval");
    const double rescale = 0.5 / xd.back();
    for (double& v : xd) v *= rescale;
    xd.back() = 0.5;

    // Invert x(zeta) onto the uniform x-grid with a safeguarded Newton
    // iteration; dx/dzeta = pref / sqrt(q(zeta)).
    const auto x_of = [&](double z, std::size_t j_lo) {
        const double u_hi = std::sqrt(1.0 - zeta[j_lo]);
        const double u_lo = std::sqrt(std::max(0.0, 1.0 - z));
        return xd[j_lo] + rescale * pref * integrate(f_u, u_lo, u_hi, 1e-14);
    };

    ys[0] = 0.0;
    std::size_t j_lo = 0;
    for (std::size_t i = 1; i < n_nodes; ++i) {
        const double x_target = static_cast<double>(i) * x_step;
        while (j_lo + 1 < xd.size() && xd[j_lo + 1] <= x_target) ++j_lo;
        double z_lo = zeta[j_lo], z_hi = zeta[std::min(j_lo + 1, n_dense)];
        double z = 0.5 * (z_lo + z_hi);
        for (int it = 0; it < 60; ++it) {
            const double g = x_of(z, j_lo) - x_target;
            if (g > 0.0) z_hi = z; else z_lo = z;
            const double step = -g * std::sqrt(law.q(z)) / (rescale * pref);
            double z_next = z + step;
            if (!(z_next > z_lo && z_next < z_hi)) z_next = 0.5 * (z_lo + z_hi);
            if (std::fabs(z_next - z) < 1e-16 * (1.0 + z)) { z = z_next; break; }
            z = z_next;
        }
        ys[i] = prof.y0 * z;
        ms[i] = law.slope_of_z(z);
    }
    ys[n_nodes] = prof.y0;
    ms[n_nodes] = 0.0;
    // q(0+) = 1 on the p > 1 branch, so the boundary slope is sqrt(C_p);
    // for p <= 1 the slope diverges at the boundary and gets clamped.
    ms[0] = (p > 1.0 && !law.log_branch) ? std::sqrt(law.c_eff)
                                         : std::numeric_limits<double>::infinity();

    const double invp = 1.0 / p;
    for (std::size_t i = 0; i <= n_nodes; ++i) {
        hs[i] = std::pow(ys[i], invp);
        if (ys[i] > 0.0 && std::isfinite(ms[i]))
            hms[i] = invp * std::pow(ys[i], invp - 1.0) * ms[i];
        else
            hms[i] = std::numeric_limits<double>::infinity();
    }
    hms[n_nodes] = 0.0;
    detail::sanitize_slopes(ys, x_step, ms);
    detail::sanitize_slopes(hs, x_step, hms);
    prof.y_tab = UniformCubic(0.0, x_step, ys, ms);
    prof.h_tab = UniformCubic(0.0, x_step, hs, hms);
    return prof;
}

inline double sigma_bar(const OptimalProfile& prof, double t, double x) { return prof.sigma(t, x); }

inline double value_fn(const OptimalProfile& prof, double s, double x) { return prof.value(s, x); }

/// Value surface (t,x) -> (1-t) sigma^p(t,x) of a profile.
struct ValueSurface {
    double p = 0.0;
    const OptimalProfile* profile = nullptr;
    double operator()(double t, double x) const { return profile->value(t, x); }
};

inline ValueSurface value_surface(const OptimalProfile& prof) { return ValueSurface{prof.p, &prof}; }

enum class WinKind { p_half, bass, wright_fisher, aldous };

inline const char* win_kind_name(WinKind k) {
    switch (k) {
        case WinKind::p_half: return "p_half";
        case WinKind::bass: return "bass";
        case WinKind::wright_fisher: return "wright_fisher";
        case WinKind::aldous: return "aldous";
    }
    throw std::domain_error("win_kind_name: unknown kind");
}

/// Closed-form win-martingale volatilities on [0,1) x [0,1].
inline double closed_form_sigma(WinKind kind, double t, double x) {
    if (!(t < 1.0)) throw std::domain_error("closed_form_sigma: t must be < 1");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("closed_form_sigma: x must be in [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;  // absorbing ends, exactly
    const double root = std::sqrt(1.0 - t);
    switch (kind) {
        case WinKind::p_half:
            return std::sqrt(2.0) * x * (1.0 - x) / root;
        case WinKind::bass:
            return normal_pdf(normal_quantile(x)) / root;
        case WinKind::wright_fisher:
            return std::sqrt(x * (1.0 - x)) / root;
        case WinKind::aldous:
            return std::sin(kPi * x) / (kPi * root);
    }
    throw std::domain_error("closed_form_sigma: unknown kind");
}

}  // namespace specwass
