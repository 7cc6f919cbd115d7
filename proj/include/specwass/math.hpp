#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace specwass {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811045253;
inline constexpr double kSqrtTwoOverPi = 0.797884560802865355879892119868763737;

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }

inline double normal_pdf(double z, double mean, double variance) {
    const double s = std::sqrt(variance);
    const double u = (z - mean) / s;
    return std::exp(-0.5 * u * u) / (kSqrt2Pi * s);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

/// Inverse standard normal CDF (Wichura's PPND16 rational approximations,
/// accurate to ~1e-15 over (0,1)).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                 4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                 2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        z = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        z = num / den;
    }
    return (q < 0.0) ? -z : z;
}

/// Sum with pairwise (cascade) splitting: deterministic and accurate
/// regardless of how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanStderr mean_stderr(std::span<const double> v) {
    if (v.empty()) throw std::domain_error("mean_stderr: empty sample");
    MeanStderr out;
    out.n = v.size();
    bool constant = true;
    for (double x : v)
        if (x != v.front()) {
            constant = false;
            break;
        }
    if (constant) {
        out.mean = v.front();
        return out;
    }
    out.mean = pairwise_sum(v) / static_cast<double>(v.size());
    if (v.size() == 1) return out;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(v.size()));
    return out;
}

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1,1].
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(const F& f, double a, double b, double& result_k, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double res_g = fc * kGK15WeightsG[3];
    double res_k = fc * kGK15WeightsK[7];
    for (int i = 0; i < 7; ++i) {
        const double x = h * kGK15Nodes[i];
        const double fsum = f(c - x) + f(c + x);
        res_k += fsum * kGK15WeightsK[i];
        if (i % 2 == 1) res_g += fsum * kGK15WeightsG[i / 2];
    }
    result_k = res_k * h;
    err = std::fabs((res_k - res_g) * h);
}

template <class F>
double adaptive_gk(const F& f, double a, double b, double tol, int depth) {
    double val, err;
    gk15(f, a, b, val, err);
    if (err <= tol || depth >= 28 || (b - a) < 1e-15 * (std::fabs(a) + std::fabs(b) + 1.0)) return val;
    const double c = 0.5 * (a + b);
    return adaptive_gk(f, a, c, 0.6 * tol, depth + 1) + adaptive_gk(f, c, b, 0.6 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of f over [a,b] to absolute tolerance tol.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-11) {
    if (!(a <= b)) throw std::domain_error("integrate: need a <= b");
    if (a == b) return 0.0;
    return detail::adaptive_gk(f, a, b, tol, 0);
}

/// Cubic Hermite table with uniform node spacing on [x0, x0 + n*h].
/// Slopes are clamped to the Fritsch-Carlson region so monotone data
/// stays monotone under evaluation.
class UniformCubic {
  public:
    UniformCubic() = default;
    UniformCubic(double x0, double h, std::vector<double> values, std::vector<double> slopes)
        : x0_(x0), h_(h), y_(std::move(values)), m_(std::move(slopes)) {
        if (y_.size() < 2 || y_.size() != m_.size()) throw std::invalid_argument("UniformCubic: bad table");
        clamp_monotone();
    }

    double x_min() const { return x0_; }
    double x_max() const { return x0_ + h_ * static_cast<double>(y_.size() - 1); }
    std::size_t size() const { return y_.size(); }
    double node_value(std::size_t i) const { return y_[i]; }

    double operator()(double x) const {
        const auto [i, s] = locate(x);
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * y_[i] + h10 * h_ * m_[i] + h01 * y_[i + 1] + h11 * h_ * m_[i + 1];
    }

    double derivative(double x) const {
        const auto [i, s] = locate(x);
        const double d00 = 6 * s * (s - 1);
        const double d10 = (1 - s) * (1 - 3 * s);
        const double d01 = -d00;
        const double d11 = s * (3 * s - 2);
        return (d00 * y_[i] + d01 * y_[i + 1]) / h_ + d10 * m_[i] + d11 * m_[i + 1];
    }

  private:
    std::pair<std::size_t, double> locate(double x) const {
        const double u = (x - x0_) / h_;
        std::size_t i = (u <= 0.0) ? 0 : static_cast<std::size_t>(u);
        if (i > y_.size() - 2) i = y_.size() - 2;
        return {i, u - static_cast<double>(i)};
    }

    void clamp_monotone() {
        const std::size_t n = y_.size() - 1;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = (y_[i + 1] - y_[i]) / h_;
            if (delta == 0.0) continue;
            double a = m_[i] / delta, b = m_[i + 1] / delta;
            if (a < 0.0) { m_[i] = 0.0; a = 0.0; }
            if (b < 0.0) { m_[i + 1] = 0.0; b = 0.0; }
            const double r2 = a * a + b * b;
            if (r2 > 9.0) {
                const double tau = 3.0 / std::sqrt(r2);
                m_[i] = tau * a * delta;
                m_[i + 1] = tau * b * delta;
            }
        }
    }

    double x0_ = 0.0;
    double h_ = 1.0;
    std::vector<double> y_, m_;
};

}  // namespace specwass
