#pragma once

#include <cmath>
#include <limits>

namespace conewarp {

// Keep the threshold centralized so every caller switches to the series at
// the same point near kappa*theta^2 = 0.
inline constexpr double kCoeffSeriesThreshold = 1e-8;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

inline constexpr double infinity() { return std::numeric_limits<double>::infinity(); }

/// Generalized sine.
///
///   s_k(x) = sin(sqrt(k) x)/sqrt(k)    k > 0
///   s_0(x) = 0
///   s_k(x) = sinh(sqrt(-k) x)/sqrt(-k) k < 0
[[nodiscard]] inline double generalized_sin(double kappa, double theta) noexcept {
    if (kappa > 0.0) {
        const double s = std::sqrt(kappa);
        return std::sin(s * theta) / s;
    }
    if (kappa == 0.0) return 0.0;
    const double s = std::sqrt(-kappa);
    return std::sinh(s * theta) / s;
}

struct DistortionQuery {
    double kappa_eff; // K/N or K/(N-1), depending on the caller
    double t;         // in [0,1]
    double theta;     // >= 0
};

namespace detail {

// Normalized series of the generalized sine: s_k(x) = x * S(k x^2) with
// S(u) = 1 - u/6 + u^2/120 - u^3/5040.  Truncation error is O(u^4/362880),
// far below 1e-12 for |u| < kCoeffSeriesThreshold.
[[nodiscard]] inline double sine_series(double u) noexcept {
    return 1.0 + u * (-1.0 / 6.0 + u * (1.0 / 120.0 - u / 5040.0));
}

// sinh(a)/sinh(b) for 0 <= a <= b, overflow-safe for large b.
[[nodiscard]] inline double sinh_ratio(double a, double b) noexcept {
    if (b < 30.0) return std::sinh(a) / std::sinh(b);
    return std::exp(a - b) * (1.0 - std::exp(-2.0 * a)) / (1.0 - std::exp(-2.0 * b));
}

} // namespace detail

/// Volume distortion coefficient
///
///   sigma_k^{(t)}(theta) = s_k(t theta)/s_k(theta)   if k theta^2 != 0 and k theta^2 < pi^2
///                        = t                          if k theta^2 == 0
///                        = +inf                       if k theta^2 >= pi^2
///
/// +inf is the IEEE infinity, so branch tests compare exactly.
[[nodiscard]] inline double sigma_coeff(double kappa, double t, double theta) noexcept {
    const double u = kappa * theta * theta;
    if (u == 0.0) return t; // includes sigma^{(t)}(0) = t
    if (u >= kPi * kPi) return infinity();
    if (std::fabs(u) < kCoeffSeriesThreshold) {
        return t * detail::sine_series(u * t * t) / detail::sine_series(u);
    }
    if (kappa < 0.0) {
        const double s = std::sqrt(-kappa);
        return detail::sinh_ratio(s * t * theta, s * theta);
    }
    const double s = std::sqrt(kappa);
    return std::sin(s * t * theta) / std::sin(s * theta);
}

[[nodiscard]] inline double sigma_coeff(const DistortionQuery& q) noexcept {
    return sigma_coeff(q.kappa_eff, q.t, q.theta);
}

/// sigma_{K,N}^{(t)}(theta) = sigma_{K/N}^{(t)}(theta).
[[nodiscard]] inline double sigma_KN(double K, double N, double t, double theta) noexcept {
    return sigma_coeff(K / N, t, theta);
}

/// tau_{K,N}^{(t)}(theta) = (t * sigma_{K,N-1}^{(t)}(theta)^{N-1})^{1/N};
/// for N = 1: t if K <= 0, +inf if K > 0.
[[nodiscard]] inline double tau_coeff(double K, double N, double t, double theta) noexcept {
    if (N == 1.0) return K <= 0.0 ? t : infinity();
    const double s = sigma_coeff(K / (N - 1.0), t, theta);
    if (std::isinf(s)) return infinity();
    return std::pow(t * std::pow(s, N - 1.0), 1.0 / N);
}

} // namespace conewarp
