#pragma once

// Reference laws sigma*xi + chi^2_1 and sigma*xi + (chi^2_1 - 1).
//
// Writing chi^2_1 = G^2 for a standard normal G independent of xi,
//
//   P(sigma xi + G^2 <= t) = integral Phi((t - y^2) / sigma) phi(y) dy
//                          = 2 * integral_0^inf Phi((t - y^2) / sigma) phi(y) dy.
//
// The integrand is bounded by phi(y), so the range is cut at y = 10 (the
// discarded mass is below 2e-23). For small sigma the integrand steps from
// phi(y) to 0 around y = sqrt(t); that point is used as a breakpoint.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "slowrate/error.hpp"
#include "slowrate/quadrature.hpp"

namespace slowrate {

inline constexpr double kInvSqrtTwo = 0.70710678118654752440;
inline constexpr double kInvSqrtTwoPi = 0.39894228040143267794;

inline double normal_pdf(double x) noexcept { return kInvSqrtTwoPi * std::exp(-0.5 * x * x); }

// Phi(x) through erfc, which keeps full relative accuracy in the lower tail.
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrtTwo); }

// P(chi^2_1 <= t) = 2 Phi(sqrt t) - 1 = erf(sqrt(t / 2)).
inline double chisq1_cdf(double t) noexcept {
  if (!(t > 0.0)) {
    return 0.0;
  }
  return std::erf(std::sqrt(0.5 * t));
}

struct ReferenceCdf {
  static constexpr std::size_t kDefaultQuadNodes = 200000;
  static constexpr double kDefaultAbsTol = 1e-9;

  double sigma = 0.0;
  bool centered = false;
  std::size_t quad_nodes = kDefaultQuadNodes;  // evaluation budget per CDF value
  double abs_tol = kDefaultAbsTol;

  double operator()(double t) const;
};

struct MixtureCdfValue {
  double value;
  double error;
  std::size_t evaluations;
};

namespace detail {

inline constexpr double kGaussianCutoff = 10.0;
inline constexpr double kTransitionWidth = 8.0;  // in units of sigma

inline MixtureCdfValue mixture_cdf_uncentered(double sigma, double t, std::size_t budget,
                                              double abs_tol) {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw ParameterError("mixture_cdf: constraint sigma >= 0 violated");
  }
  if (sigma == 0.0) {
    return {chisq1_cdf(t), 0.0, 0};
  }
  if (std::isnan(t)) {
    throw ParameterError("mixture_cdf: t is NaN");
  }
  const double inv_sigma = 1.0 / sigma;
  auto integrand = [t, inv_sigma](double y) {
    return normal_cdf((t - y * y) * inv_sigma) * normal_pdf(y);
  };
  // Breakpoints at sqrt(t) and at the edges of the band where the normal
  // factor moves from 0 to 1, so no panel straddles the transition unseen.
  std::array<double, 5> cuts{};
  std::size_t cut_count = 0;
  cuts[cut_count++] = 0.0;
  for (double s : {t - kTransitionWidth * sigma, t, t + kTransitionWidth * sigma}) {
    if (s > 0.0) {
      const double y = std::sqrt(s);
      if (y > cuts[cut_count - 1] && y < kGaussianCutoff) {
        cuts[cut_count++] = y;
      }
    }
  }
  cuts[cut_count++] = kGaussianCutoff;
  std::array<Interval, 4> pieces{};
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < cut_count; ++i) {
    pieces[count++] = {cuts[i], cuts[i + 1]};
  }
  // Both halves of the symmetric integral carry the tolerance.
  const auto result = integrate_adaptive(integrand, std::span<const Interval>(pieces.data(), count),
                                         0.5 * abs_tol, budget);
  const double value = std::clamp(2.0 * result.value, 0.0, 1.0);
  return {value, 2.0 * result.error, result.evaluations};
}

}  // namespace detail

// CDF of sigma xi + chi^2_1 (or its centred variant) at t, with the error
// bound and node count the quadrature used.
inline MixtureCdfValue mixture_cdf_detailed(const ReferenceCdf& ref, double t) {
  if (!(ref.abs_tol > 0.0)) {
    throw ParameterError("mixture_cdf: constraint abs_tol > 0 violated");
  }
  // chi^2_1 - 1 <= t  <=>  chi^2_1 <= t + 1.
  const double shifted = ref.centered ? t + 1.0 : t;
  return detail::mixture_cdf_uncentered(ref.sigma, shifted, ref.quad_nodes, ref.abs_tol);
}

inline double mixture_cdf(const ReferenceCdf& ref, double t) {
  return mixture_cdf_detailed(ref, t).value;
}

inline double ReferenceCdf::operator()(double t) const { return mixture_cdf(*this, t); }

// Integrals over the admissible region {y : |tau - y^2| >= 1}:
//
//   I1(tau) = integral exp(-(tau - y^2)^2 / 16) dy   <= 2 + 4 sqrt(pi)
//   I2(tau) = integral (tau - y^2)^{-4} dy           <= 8/3
struct ProofIntegralOptions {
  double abs_tol = 1e-9;
  std::size_t max_evaluations = 2000000;
};

inline constexpr double kI1Bound = 2.0 + 4.0 * 1.77245385090551602730;  // 2 + 4 sqrt(pi)
inline constexpr double kI2Bound = 8.0 / 3.0;

namespace detail {

// Admissible region intersected with y >= 0; the integrands are even in y.
inline std::vector<Interval> admissible_half_line(double tau) {
  std::vector<Interval> pieces;
  if (tau - 1.0 > 0.0) {
    pieces.push_back({0.0, std::sqrt(tau - 1.0)});
  }
  const double right = tau + 1.0 > 0.0 ? std::sqrt(tau + 1.0) : 0.0;
  pieces.push_back({right, std::numeric_limits<double>::infinity()});
  return pieces;
}

template <class F>
double proof_integral(const F& f, double tau, const ProofIntegralOptions& options) {
  if (!std::isfinite(tau)) {
    throw ParameterError("proof integral: tau must be finite");
  }
  const auto pieces = admissible_half_line(tau);
  const auto result = integrate_adaptive(f, pieces, 0.5 * options.abs_tol, options.max_evaluations);
  return 2.0 * result.value;
}

}  // namespace detail

inline double integral_I1(double tau, const ProofIntegralOptions& options = {}) {
  return detail::proof_integral(
      [tau](double y) {
        const double d = tau - y * y;
        return std::exp(-d * d / 16.0);
      },
      tau, options);
}

inline double integral_I2(double tau, const ProofIntegralOptions& options = {}) {
  return detail::proof_integral(
      [tau](double y) {
        const double d = tau - y * y;
        const double d2 = d * d;
        return 1.0 / (d2 * d2);
      },
      tau, options);
}

struct ProofIntegralMaxima {
  double max_I1;
  double max_I2;
};

inline ProofIntegralMaxima verify_I1_I2(std::span<const double> tau_grid,
                                        const ProofIntegralOptions& options = {}) {
  ProofIntegralMaxima maxima{0.0, 0.0};
  for (double tau : tau_grid) {
    maxima.max_I1 = std::max(maxima.max_I1, integral_I1(tau, options));
    maxima.max_I2 = std::max(maxima.max_I2, integral_I2(tau, options));
  }
  return maxima;
}

}  // namespace slowrate
