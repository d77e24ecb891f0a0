#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>

#include "grl/errors.hpp"

namespace grl {

namespace detail {

// Halley on h(w) = w + log(-w) - L, the log form of w e^w = -exp(L).
// Well conditioned for w <= -2; used away from the branch point and when
// exp(L) would underflow.
template <std::floating_point Real>
Real wm1_from_log(Real log_neg_x) {
  const Real L = log_neg_x;
  const Real l2 = std::log(-L);
  Real w = L - l2 + l2 / L;
  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  for (int it = 0; it < 100; ++it) {
    const Real h = w + std::log(-w) - L;
    const Real d1 = (w + 1) / w;
    const Real d2 = -1 / (w * w);
    const Real step = 2 * h * d1 / (2 * d1 * d1 - h * d2);
    w -= step;
    if (w > -1) w = Real(-1);
    if (std::abs(step) <= 4 * eps * std::abs(w)) return w;
  }
  // Bisection fallback; h is increasing on (-inf, -1).
  Real lo = 2 * L - 1;
  Real hi = Real(-1);
  for (int it = 0; it < 200; ++it) {
    const Real mid = (lo + hi) / 2;
    if (mid + std::log(-mid) - L < 0) lo = mid; else hi = mid;
  }
  return (lo + hi) / 2;
}

// Halley on f(w) = w e^w - x with the branch-point series as initial guess.
template <std::floating_point Real>
Real wm1_near_branch(Real x) {
  constexpr Real e = std::numbers::e_v<Real>;
  const Real q = std::fma(e, x, Real(1));
  const Real p = -std::sqrt(2 * (q > 0 ? q : Real(0)));
  Real w = -1 + p * (1 + p * (Real(-1) / 3 + p * (Real(11) / 72 + p * Real(-43) / 540)));
  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  for (int it = 0; it < 100; ++it) {
    if (w >= -1) return Real(-1);
    const Real ew = std::exp(w);
    const Real f = w * ew - x;
    if (f == 0) return w;
    const Real wp1 = w + 1;
    const Real step = f / (ew * wp1 - (w + 2) * f / (2 * wp1));
    Real next = w - step;
    if (!(next < -1)) next = (w - 1) / 2;  // keep strictly on the branch
    const Real delta = std::abs(next - w);
    w = next;
    if (delta <= 4 * eps * std::abs(w)) return w;
  }
  // Bisection on [-3, -1]: g(-3) > 0 >= g(-1) for x in [-1/e, -0.25].
  Real lo = -3, hi = -1;
  for (int it = 0; it < 200; ++it) {
    const Real mid = (lo + hi) / 2;
    if (mid * std::exp(mid) - x > 0) lo = mid; else hi = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace detail

/// Lower real branch W_{-1} of the Lambert W function.
///
/// Defined on [-1/e, 0) with values in (-inf, -1]. Arguments undershooting
/// -1/e by at most 1e-15 are treated as the branch point.
template <std::floating_point Real>
Real lambert_wm1(Real x) {
  constexpr Real inv_e = 1 / std::numbers::e_v<Real>;
  if (!(x < 0) || x < -inv_e - Real(1e-15)) {
    throw DomainError("lambert_wm1: argument " + std::to_string(double(x)) +
                      " outside [-1/e, 0)");
  }
  if (x <= -inv_e) return Real(-1);
  if (x > Real(-0.25)) return detail::wm1_from_log(std::log(-x));
  return detail::wm1_near_branch(x);
}

/// W_{-1}(-exp(log_neg_x)) for log_neg_x <= -1, without forming the argument.
/// Lets callers reach arguments far below the smallest representable double.
template <std::floating_point Real>
Real lambert_wm1_log(Real log_neg_x) {
  if (!(log_neg_x <= Real(-1) + Real(3e-15))) {
    throw DomainError("lambert_wm1_log: log(-x) = " + std::to_string(double(log_neg_x)) +
                      " above -1");
  }
  if (log_neg_x < std::log(Real(0.25))) return detail::wm1_from_log(log_neg_x);
  if (log_neg_x >= Real(-1)) return Real(-1);
  return lambert_wm1(-std::exp(log_neg_x));
}

/// Natural log of the gamma function for z > 0 (Lanczos, g = 7, 9 terms).
template <std::floating_point Real>
Real ln_gamma(Real z) {
  if (!(z > 0) || std::isinf(z)) {
    if (z == std::numeric_limits<Real>::infinity()) return z;
    throw DomainError("ln_gamma: argument must be positive");
  }
  constexpr std::array<double, 9> c = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr Real pi = std::numbers::pi_v<Real>;
  if (z < Real(0.5)) {
    // Reflection; sin(pi z) > 0 on (0, 1/2).
    return std::log(pi / std::sin(pi * z)) - ln_gamma(1 - z);
  }
  const Real zm1 = z - 1;
  Real sum = Real(c[0]);
  for (int i = 1; i < 9; ++i) sum += Real(c[i]) / (zm1 + Real(i));
  const Real t = zm1 + Real(7.5);
  constexpr Real half_log_2pi = Real(0.91893853320467274178032973640562);
  return half_log_2pi + (zm1 + Real(0.5)) * std::log(t) - t + std::log(sum);
}

/// log1p(x) - x, accurate for small |x|.
template <std::floating_point Real>
Real log1pmx(Real x) {
  if (std::abs(x) < Real(0.1)) {
    // -x^2/2 + x^3/3 - ...
    Real term = -x * x / 2;
    Real sum = term;
    Real pw = x * x;
    for (int k = 3; k < 40; ++k) {
      pw *= -x;
      const Real t = -pw / Real(k);
      sum += t;
      if (std::abs(t) <= std::numeric_limits<Real>::epsilon() * std::abs(sum)) break;
    }
    return sum;
  }
  return std::log1p(x) - x;
}

}  // namespace grl
