#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "grl/distribution.hpp"
#include "grl/estimators.hpp"
#include "grl/parallel.hpp"
#include "grl/rng.hpp"

namespace grl {

struct GofReport {
  double neg_loglik;
  double cvm_w;     // Cramer-von Mises W (raw, or corrected when `modified`)
  double ad_a;      // Anderson-Darling A (raw, or corrected when `modified`)
  double cvm_star;  // Chen-Balakrishnan W*
  double ad_star;   // Chen-Balakrishnan A*
  double ks;
  std::optional<double> ks_pvalue;
  int bootstrap_failures = 0;
  bool modified = false;
};

struct BootstrapResult {
  double p_value;
  double observed_ks;
  GrlParams fitted;
  int replicates_used;
  int failed_refits;
};

struct GofOptions {
  bool modified = false;
  int bootstrap = 0;  // B; 0 disables the p-value
  std::uint64_t seed = 0;
  Method method = Method::MLE;  // refit method for the bootstrap
  EstimateOptions estimate;
  unsigned threads = 1;
};

namespace detail {

inline std::vector<double> fitted_cdf(const GrlParams& p, const Sample& s) {
  std::vector<double> f;
  f.reserve(s.size());
  for (double x : s.sorted()) f.push_back(cdf(p, x));
  return f;
}

inline double cvm_from_uniforms(const std::vector<double>& u) {
  const double n = double(u.size());
  double w = 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = u[i] - (2.0 * double(i + 1) - 1.0) / (2.0 * n);
    w += e * e;
  }
  return w;
}

inline double ad_from_uniforms(const std::vector<double>& u) {
  const std::size_t n = u.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += (2.0 * double(i + 1) - 1.0) * (std::log(u[i]) + std::log1p(-u[n - 1 - i]));
  }
  return -double(n) - acc / double(n);
}

inline double ks_from_uniforms(const std::vector<double>& u) {
  const double n = double(u.size());
  double d = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, double(i + 1) / n - u[i], u[i] - double(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

inline double cvm_factor(double n) { return 1.0 + 0.5 / n; }
inline double ad_factor(double n) { return 1.0 + 0.75 / n + 2.25 / (n * n); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace detail

/// Kolmogorov-Smirnov distance between the empirical and fitted CDF.
inline double ks_statistic(const GrlParams& p, const Sample& s) {
  if (s.empty()) throw EmptySampleError();
  return detail::ks_from_uniforms(detail::fitted_cdf(p, s));
}

/// Cramer-von Mises W = 1/(12n) + sum (F(x_(i)) - (2i-1)/(2n))^2, times
/// (1 + 0.5/n) when `modified`.
inline double cvm_statistic(const GrlParams& p, const Sample& s, bool modified = false) {
  if (s.empty()) throw EmptySampleError();
  const double w = detail::cvm_from_uniforms(detail::fitted_cdf(p, s));
  return modified ? w * detail::cvm_factor(double(s.size())) : w;
}

/// Anderson-Darling A, times (1 + 0.75/n + 2.25/n^2) when `modified`.
/// +inf when some F(x_(i)) is 0 or 1 to machine precision.
inline double ad_statistic(const GrlParams& p, const Sample& s, bool modified = false) {
  if (s.empty()) throw EmptySampleError();
  const double a = detail::ad_from_uniforms(detail::fitted_cdf(p, s));
  if (std::isnan(a)) return std::numeric_limits<double>::infinity();
  return modified ? a * detail::ad_factor(double(s.size())) : a;
}

/// Chen-Balakrishnan W* and A*: fitted CDF values are mapped to normal
/// scores, standardized with the sample mean and standard deviation, mapped
/// back through the normal CDF, and the corrected statistics are taken.
inline std::pair<double, double> chen_balakrishnan(const GrlParams& p, const Sample& s) {
  if (s.size() < 2) throw std::invalid_argument("Chen-Balakrishnan statistics need n >= 2");
  auto f = detail::fitted_cdf(p, s);
  const double n = double(f.size());
  std::vector<double> q(f.size());
  double mean = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double fi = std::clamp(f[i], 1e-300, 1.0 - 1e-16);
    q[i] = detail::normal_quantile(fi);
    mean += q[i];
  }
  mean /= n;
  double ss = 0;
  for (double v : q) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> y(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) y[i] = detail::normal_cdf((q[i] - mean) / sd);
  std::sort(y.begin(), y.end());
  return {detail::cvm_from_uniforms(y) * detail::cvm_factor(n),
          detail::ad_from_uniforms(y) * detail::ad_factor(n)};
}

/// Parametric bootstrap p-value of KS with the model given: draws B samples
/// of size n from `fitted`, refits each by `method`, and returns
/// (1 + #{KS_b >= KS_obs}) / (B' + 1) over the B' successful refits.
inline BootstrapResult bootstrap_ks_pvalue_at(const GrlParams& fitted, Method method, const Sample& s,
                                              int B, std::uint64_t seed,
                                              const EstimateOptions& est = {}, unsigned threads = 1) {
  if (B < 1) throw std::invalid_argument("bootstrap needs B >= 1");
  if (s.empty()) throw EmptySampleError();
  const double observed = ks_statistic(fitted, s);
  std::vector<signed char> outcome(std::size_t(B), -1);  // -1 failed, 0 below, 1 at/above
  parallel_for(std::size_t(B), threads, [&](std::size_t b) {
    const std::uint64_t rs = derive_seed(seed, {0xB007u, std::uint64_t(b)});
    try {
      const Sample boot = sample_inverse(fitted, s.size(), rs);
      EstimateOptions o = est;
      o.seed = derive_seed(rs, {1});
      const auto r = estimate(method, boot, o);
      if (!r.converged) return;
      const double ks = ks_statistic(r.params, boot);
      if (!std::isfinite(ks)) return;
      outcome[b] = ks >= observed ? 1 : 0;
    } catch (const std::exception&) {
    }
  });
  int used = 0, failed = 0, exceed = 0;
  for (signed char o : outcome) {
    if (o < 0) { ++failed; continue; }
    ++used;
    exceed += o;
  }
  return {(1.0 + exceed) / (used + 1.0), observed, fitted, used, failed};
}

/// Fits `sample` by `method`, then runs the refit bootstrap at the fit.
inline BootstrapResult bootstrap_ks_pvalue(Method method, const Sample& s, int B, std::uint64_t seed,
                                           const EstimateOptions& est = {}, unsigned threads = 1) {
  EstimateOptions o = est;
  o.seed = derive_seed(seed, {0xF17u});
  const auto fit = estimate(method, s, o);
  return bootstrap_ks_pvalue_at(fit.params, method, s, B, seed, est, threads);
}

/// All goodness-of-fit measures for the model `p` on `s`.
inline GofReport gof_report(const GrlParams& p, const Sample& s, const GofOptions& opt = {}) {
  if (s.empty()) throw EmptySampleError();
  GofReport r{};
  r.modified = opt.modified;
  r.neg_loglik = -log_likelihood(p, s);
  r.cvm_w = cvm_statistic(p, s, opt.modified);
  r.ad_a = ad_statistic(p, s, opt.modified);
  if (s.size() >= 2) {
    std::tie(r.cvm_star, r.ad_star) = chen_balakrishnan(p, s);
  } else {
    r.cvm_star = r.ad_star = std::numeric_limits<double>::quiet_NaN();
  }
  r.ks = ks_statistic(p, s);
  if (opt.bootstrap > 0) {
    const auto b = bootstrap_ks_pvalue_at(p, opt.method, s, opt.bootstrap, opt.seed, opt.estimate, opt.threads);
    r.ks_pvalue = b.p_value;
    r.bootstrap_failures = b.failed_refits;
  }
  return r;
}

}  // namespace grl
