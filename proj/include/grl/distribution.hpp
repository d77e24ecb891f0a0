#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "grl/errors.hpp"
#include "grl/rng.hpp"
#include "grl/sample.hpp"
#include "grl/special_fn.hpp"

namespace grl {

// Shape pair (lambda, alpha) of the generalized Ramos-Louzada distribution,
// lambda >= 2 and alpha > 0. Survival function
//   S(t) = (1 + z/(lambda-1)) exp(-z),   z = t^alpha / lambda.
class GrlParams {
 public:
  GrlParams(double lambda, double alpha) : lambda_(lambda), alpha_(alpha) {
    if (!std::isfinite(lambda) || !(lambda >= 2)) {
      throw DomainError("lambda must be finite and >= 2, got " + std::to_string(lambda));
    }
    if (!std::isfinite(alpha) || !(alpha > 0)) {
      throw DomainError("alpha must be finite and > 0, got " + std::to_string(alpha));
    }
  }

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double alpha() const { return alpha_; }

  friend bool operator==(const GrlParams&, const GrlParams&) = default;

 private:
  double lambda_;
  double alpha_;
};

struct MomentSet {
  double mean;
  double variance;
  double skewness;
  double kurtosis;
};

// Weight p of the Weibull component; the generalized-gamma component
// carries 1 - p = 1/(lambda - 1).
struct MixtureWeight {
  double p;
};

// Limit of the density at t -> 0+.
struct OriginDensity {
  enum class Kind { finite, zero, infinite };
  Kind kind;
  double value;
};

struct TttPoint {
  double u;
  double value;
};

namespace detail {

inline void require_positive(double t, const char* what) {
  if (!(t > 0)) throw DomainError(std::string(what) + ": t must be > 0");
}
inline void require_nonnegative(double t, const char* what) {
  if (!(t >= 0)) throw DomainError(std::string(what) + ": t must be >= 0");
}

// z = t^alpha / lambda from log t.
inline double scaled_power(const GrlParams& p, double log_t) {
  return std::exp(p.alpha() * log_t - std::log(p.lambda()));
}

// log S as a function of z; exact cancellation handled at lambda = 2.
inline double log_survival_z(double lambda, double z) {
  if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
  const double c = 1.0 / (lambda - 1.0);
  return log1pmx(c * z) - (1.0 - c) * z;
}

inline double log_pdf_z(const GrlParams& p, double log_t, double z) {
  if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
  const double l = p.lambda();
  return std::log(p.alpha()) - std::log(l) - std::log(l - 1.0) + (p.alpha() - 1.0) * log_t +
         std::log(l - 2.0 + z) - z;
}

}  // namespace detail

inline MixtureWeight mixture_weight(const GrlParams& p) {
  return {(p.lambda() - 2.0) / (p.lambda() - 1.0)};
}

inline OriginDensity pdf_at_origin(const GrlParams& p) {
  if (p.alpha() < 1) return {OriginDensity::Kind::infinite, std::numeric_limits<double>::infinity()};
  if (p.alpha() > 1) return {OriginDensity::Kind::zero, 0.0};
  const double v = (p.lambda() - 2.0) / (p.lambda() * (p.lambda() - 1.0));
  return {v == 0 ? OriginDensity::Kind::zero : OriginDensity::Kind::finite, v};
}

/// Log density for t > 0. Evaluated entirely in log space, so it stays
/// finite where the density itself underflows.
inline double log_pdf(const GrlParams& p, double t) {
  detail::require_positive(t, "log_pdf");
  const double lt = std::log(t);
  return detail::log_pdf_z(p, lt, detail::scaled_power(p, lt));
}

/// Density. t = 0 returns the limit from the right (possibly +inf).
inline double pdf(const GrlParams& p, double t) {
  detail::require_nonnegative(t, "pdf");
  if (t == 0) return pdf_at_origin(p).value;
  return std::exp(log_pdf(p, t));
}

inline double log_survival(const GrlParams& p, double t) {
  detail::require_nonnegative(t, "survival");
  if (t == 0) return 0.0;
  return detail::log_survival_z(p.lambda(), detail::scaled_power(p, std::log(t)));
}

inline double survival(const GrlParams& p, double t) { return std::exp(log_survival(p, t)); }

inline double cdf(const GrlParams& p, double t) {
  detail::require_nonnegative(t, "cdf");
  return -std::expm1(log_survival(p, t));
}

inline double log_cdf(const GrlParams& p, double t) { return std::log(cdf(p, t)); }

/// Hazard rate f(t)/S(t) = alpha t^(alpha-1) (lambda-2+z) / (lambda (lambda-1+z)).
inline double hazard(const GrlParams& p, double t) {
  detail::require_positive(t, "hazard");
  const double lt = std::log(t);
  const double z = detail::scaled_power(p, lt);
  const double l = p.lambda();
  const double ratio = std::isinf(z) ? 1.0 : (l - 2.0 + z) / (l - 1.0 + z);
  return p.alpha() / l * std::exp((p.alpha() - 1.0) * lt) * ratio;
}

/// Quantile through the lower Lambert branch:
///   Q(u) = (-lambda [W_{-1}((lambda-1)(u-1) e^{1-lambda}) + lambda - 1])^(1/alpha).
/// The Lambert argument is handled in log form so that e^{1-lambda} never
/// underflows for large lambda.
inline double quantile(const GrlParams& p, double u) {
  if (!(u > 0 && u < 1)) throw DomainError("quantile: probability must lie in (0, 1)");
  const double l = p.lambda();
  const double log_s = std::log1p(-u);
  const double log_neg_arg = std::log(l - 1.0) + log_s + 1.0 - l;
  const double w = lambert_wm1_log(log_neg_arg);
  double z = -w - (l - 1.0);
  // One Newton step on log S(z) = log(1-u) recovers digits lost in the
  // subtraction above when lambda is large.
  if (z > 0) {
    const double g = detail::log_survival_z(l, z) - log_s;
    const double dg = 1.0 / (l - 1.0 + z) - 1.0;
    if (dg < -0.5) {
      const double zn = z - g / dg;
      if (zn > 0) z = zn;
    }
  }
  if (!(z > 0)) z = std::numeric_limits<double>::min();
  return std::exp((std::log(l) + std::log(z)) / p.alpha());
}

/// Component densities of the two-part mixture: j = 1 is Weibull,
/// j = 2 the generalized-gamma member.
inline double mixture_component_pdf(const GrlParams& p, int j, double t) {
  detail::require_positive(t, "mixture_component_pdf");
  if (j != 1 && j != 2) throw DomainError("mixture component must be 1 or 2");
  const double lt = std::log(t);
  const double z = detail::scaled_power(p, lt);
  return std::exp(std::log(p.alpha()) - j * std::log(p.lambda()) + (j * p.alpha() - 1.0) * lt - z);
}

/// n draws by inverse transform Q(U), U ~ Uniform(0, 1).
inline Sample sample_inverse(const GrlParams& p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = quantile(p, rng.uniform_open());
  return Sample(std::move(out));
}

/// n draws through the mixture representation: t^alpha is Exponential with
/// mean lambda (weight p) or Gamma(2, scale lambda) (weight 1 - p).
inline Sample sample_mixture(const GrlParams& p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const double w = mixture_weight(p).p;
  std::vector<double> out(n);
  for (auto& v : out) {
    const bool weibull = rng.uniform_open() < w;
    double y = -std::log(rng.uniform_open());
    if (!weibull) y -= std::log(rng.uniform_open());
    v = std::exp((std::log(p.lambda()) + std::log(y)) / p.alpha());
  }
  return Sample(std::move(out));
}

/// log E[T^r] = log(r lambda^(r/alpha) (lambda + r/alpha - 1) Gamma(r/alpha) / (alpha (lambda-1))).
inline double log_raw_moment(const GrlParams& p, int r) {
  if (r < 1) throw DomainError("raw_moment: order must be >= 1");
  const double q = double(r) / p.alpha();
  return std::log(q) + q * std::log(p.lambda()) + std::log(p.lambda() + q - 1.0) +
         ln_gamma(q) - std::log(p.lambda() - 1.0);
}

inline double raw_moment(const GrlParams& p, int r) {
  const double lm = log_raw_moment(p, r);
  if (lm > std::log(std::numeric_limits<double>::max())) {
    throw OverflowError("raw_moment: moment of order " + std::to_string(r) + " overflows");
  }
  return std::exp(lm);
}

namespace detail {
struct KahanSum {
  double sum = 0, comp = 0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};
}  // namespace detail

/// Central moment of order r expanded over raw moments.
inline double central_moment(const GrlParams& p, int r) {
  const double mu = raw_moment(p, 1);
  detail::KahanSum acc;
  double binom = 1;
  for (int i = 0; i <= r; ++i) {
    const double raw_i = i == 0 ? 1.0 : raw_moment(p, i);
    acc.add(binom * std::pow(-mu, r - i) * raw_i);
    binom = binom * double(r - i) / double(i + 1);
  }
  return acc.sum;
}

inline MomentSet moments(const GrlParams& p) {
  const double mean = raw_moment(p, 1);
  const double var = central_moment(p, 2);
  const double m3 = central_moment(p, 3);
  const double m4 = central_moment(p, 4);
  return {mean, var, m3 / std::pow(var, 1.5), m4 / (var * var)};
}

namespace detail {
inline void check_order_index(int r, int n) {
  if (n < 1 || r < 1 || r > n) {
    throw IndexError("order statistic index r=" + std::to_string(r) + " outside [1, " +
                     std::to_string(n) + "]");
  }
}
inline double log_choose(int n, int k) {
  return ln_gamma(double(n) + 1) - ln_gamma(double(k) + 1) - ln_gamma(double(n - k) + 1);
}
}  // namespace detail

/// Density of the r-th order statistic of n draws.
inline double order_stat_pdf(const GrlParams& p, int r, int n, double x) {
  detail::check_order_index(r, n);
  detail::require_positive(x, "order_stat_pdf");
  const double ls = log_survival(p, x);
  const double lf = std::log(-std::expm1(ls));
  const double log_coef = std::log(double(n)) + detail::log_choose(n - 1, r - 1);
  const double a = (r - 1) == 0 ? 0.0 : (r - 1) * lf;
  const double b = (n - r) == 0 ? 0.0 : (n - r) * ls;
  return std::exp(log_coef + a + b + log_pdf(p, x));
}

/// P(X_(r) <= x) = sum_{l=r}^{n} C(n,l) F^l (1-F)^(n-l).
inline double order_stat_cdf(const GrlParams& p, int r, int n, double x) {
  detail::check_order_index(r, n);
  detail::require_nonnegative(x, "order_stat_cdf");
  if (x == 0) return 0.0;
  const double ls = log_survival(p, x);
  const double lf = std::log(-std::expm1(ls));
  double sum = 0;
  for (int l = r; l <= n; ++l) {
    const double a = l == 0 ? 0.0 : l * lf;
    const double b = (n - l) == 0 ? 0.0 : (n - l) * ls;
    sum += std::exp(detail::log_choose(n, l) + a + b);
  }
  return std::min(sum, 1.0);
}

/// Scaled total-time-on-test curve of a sample.
inline std::vector<TttPoint> ttt_transform(const Sample& s) {
  if (s.empty()) throw EmptySampleError();
  const auto x = s.sorted();
  const std::size_t n = x.size();
  double total = 0;
  for (double v : x) total += v;
  std::vector<TttPoint> out;
  out.reserve(n);
  double partial = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    partial += x[i - 1];
    const double num = partial + double(n - i) * x[i - 1];
    out.push_back({double(i) / double(n), i == n ? 1.0 : num / total});
  }
  return out;
}

}  // namespace grl
