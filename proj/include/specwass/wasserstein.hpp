#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "specwass/math.hpp"

namespace specwass {

/// Finitely supported distribution on the line. Uniform weights unless
/// explicit weights (positive, summing to 1 within 1e-12) are given.
struct EmpiricalDist {
    std::vector<double> atoms;
    std::vector<double> weights;  // empty means uniform

    static EmpiricalDist uniform(std::vector<double> a) {
        EmpiricalDist d;
        d.atoms = std::move(a);
        d.validate();
        return d;
    }

    static EmpiricalDist weighted(std::vector<double> a, std::vector<double> w) {
        EmpiricalDist d;
        d.atoms = std::move(a);
        d.weights = std::move(w);
        d.validate();
        return d;
    }

    void validate() const {
        if (atoms.empty()) throw std::domain_error("EmpiricalDist: empty support");
        for (double x : atoms)
            if (!std::isfinite(x)) throw std::domain_error("EmpiricalDist: atoms must be finite");
        if (!weights.empty()) {
            if (weights.size() != atoms.size()) throw std::domain_error("EmpiricalDist: weight count mismatch");
            double sum = 0.0;
            for (double w : weights) {
                if (!(w > 0.0)) throw std::domain_error("EmpiricalDist: weights must be positive");
                sum += w;
            }
            if (std::fabs(sum - 1.0) > 1e-12) throw std::domain_error("EmpiricalDist: weights must sum to 1");
        }
    }

    double weight(std::size_t i) const {
        return weights.empty() ? 1.0 / static_cast<double>(atoms.size()) : weights[i];
    }
};

namespace detail {

struct SortedAtoms {
    std::vector<double> x;
    std::vector<double> w;
};

inline SortedAtoms sorted_atoms(const EmpiricalDist& d) {
    std::vector<std::size_t> idx(d.atoms.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d.atoms[a] < d.atoms[b]; });
    SortedAtoms s;
    s.x.reserve(idx.size());
    s.w.reserve(idx.size());
    for (std::size_t i : idx) {
        s.x.push_back(d.atoms[i]);
        s.w.push_back(d.weight(i));
    }
    return s;
}

}  // namespace detail

/// Exact 1-Wasserstein distance between finitely supported distributions:
/// the integral of |F_a - F_b| swept over the merged atom positions.
inline double w1_empirical(const EmpiricalDist& a, const EmpiricalDist& b) {
    a.validate();
    b.validate();
    const auto sa = detail::sorted_atoms(a);
    const auto sb = detail::sorted_atoms(b);
    double dist = 0.0;
    double fa = 0.0, fb = 0.0;
    std::size_t ia = 0, ib = 0;
    double prev = 0.0;
    bool have_prev = false;
    while (ia < sa.x.size() || ib < sb.x.size()) {
        double x;
        if (ib >= sb.x.size() || (ia < sa.x.size() && sa.x[ia] <= sb.x[ib]))
            x = sa.x[ia];
        else
            x = sb.x[ib];
        if (have_prev) dist += std::fabs(fa - fb) * (x - prev);
        while (ia < sa.x.size() && sa.x[ia] == x) fa += sa.w[ia++];
        while (ib < sb.x.size() && sb.x[ib] == x) fb += sb.w[ib++];
        prev = x;
        have_prev = true;
    }
    return dist;
}

/// Mean of |m + s Z| for standard normal Z.
inline double folded_normal_mean(double m, double s) {
    if (!(s > 0.0)) throw std::domain_error("folded_normal_mean: s must be positive");
    const double am = std::fabs(m);
    return s * kSqrtTwoOverPi * std::exp(-m * m / (2.0 * s * s)) + am * (2.0 * normal_cdf(am / s) - 1.0);
}

/// W1 between N(m1,s1^2) and N(m2,s2^2): the comonotone coupling gives
/// E|dm + ds Z| with dm = m1-m2, ds = s1-s2.
inline double w1_gaussian(double m1, double s1, double m2, double s2) {
    if (s1 < 0.0 || s2 < 0.0) throw std::domain_error("w1_gaussian: standard deviations must be nonnegative");
    const double dm = m1 - m2;
    const double ds = std::fabs(s1 - s2);
    if (ds == 0.0) return std::fabs(dm);
    return folded_normal_mean(dm, ds);
}

namespace detail {

// Antiderivative of the N(m,s^2) CDF at x (vanishing as x -> -inf).
inline double gaussian_cdf_antideriv(double x, double m, double s) {
    const double z = (x - m) / s;
    return s * (z * normal_cdf(z) + normal_pdf(z));
}

}  // namespace detail

/// Exact W1 between a finitely supported distribution and N(m,s^2), via the
/// CDF-difference integral evaluated in closed form on each constant piece.
inline double w1_empirical_gaussian(const EmpiricalDist& a, double m, double s) {
    a.validate();
    if (!(s >= 0.0)) throw std::domain_error("w1_empirical_gaussian: s must be nonnegative");
    if (s == 0.0) {
        // Dirac target: W1 is the mean absolute deviation from m.
        double acc = 0.0;
        for (std::size_t i = 0; i < a.atoms.size(); ++i) acc += a.weight(i) * std::fabs(a.atoms[i] - m);
        return acc;
    }
    const auto sa = detail::sorted_atoms(a);
    const auto seg = [&](double lo, double hi, double level) {
        // integral over [lo,hi] of |level - Phi_{m,s}|; Phi crosses `level`
        // at most once, at m + s*quantile(level).
        const auto piece = [&](double l, double h) {
            const double area = detail::gaussian_cdf_antideriv(h, m, s) - detail::gaussian_cdf_antideriv(l, m, s);
            return std::fabs(area - level * (h - l));
        };
        if (level <= 0.0 || level >= 1.0) return piece(lo, hi);
        const double cross = m + s * normal_quantile(level);
        if (cross <= lo || cross >= hi) return piece(lo, hi);
        return piece(lo, cross) + piece(cross, hi);
    };
    double dist = 0.0;
    // Lower tail: F_a = 0 below the smallest atom.
    dist += detail::gaussian_cdf_antideriv(sa.x.front(), m, s);
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < sa.x.size(); ++i) {
        cum += sa.w[i];
        dist += seg(sa.x[i], sa.x[i + 1], std::min(cum, 1.0));
    }
    // Upper tail: integral of 1 - Phi above the largest atom.
    const double xn = sa.x.back();
    dist += m - (xn - detail::gaussian_cdf_antideriv(xn, m, s));
    return dist;
}

}  // namespace specwass
