#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grl/distribution.hpp"
#include "grl/errors.hpp"
#include "grl/optimizer.hpp"
#include "grl/rng.hpp"
#include "grl/sample.hpp"

namespace grl {

enum class Method { WLSE, OLSE, MLE, MPSE, CVME, ADE, RADE, PCE };

// Canonical method order, used for output rows and rank tables.
inline constexpr std::array<Method, 8> kAllMethods = {Method::WLSE, Method::OLSE, Method::MLE,
                                                      Method::MPSE, Method::CVME, Method::ADE,
                                                      Method::RADE, Method::PCE};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::WLSE: return "WLSE";
    case Method::OLSE: return "OLSE";
    case Method::MLE: return "MLE";
    case Method::MPSE: return "MPSE";
    case Method::CVME: return "CVME";
    case Method::ADE: return "ADE";
    case Method::RADE: return "RADE";
    case Method::PCE: return "PCE";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  std::string up(s);
  for (auto& c : up) c = char(std::toupper(static_cast<unsigned char>(c)));
  for (Method m : kAllMethods) {
    if (up == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown estimation method '" + std::string(s) + "'");
}

// Observed information (negative Hessian of the log-likelihood); symmetric.
struct InfoMatrix {
  double h11;
  double h12;
  double h22;

  [[nodiscard]] double determinant() const { return h11 * h22 - h12 * h12; }
  [[nodiscard]] bool positive_definite() const { return h11 > 0 && determinant() > 0; }
};

struct StdErrors {
  double se_lambda;
  double se_alpha;
};

struct EstimationResult {
  Method method;
  GrlParams params;
  double objective;  // minimized value
  bool converged;
  int iterations;
  bool at_boundary;  // lambda clamped to 2 + 1e-6
  std::optional<StdErrors> std_errors;
};

struct EstimateOptions {
  std::optional<GrlParams> start;
  int max_iterations = 2000;
  double tolerance = 1e-8;
  double f_tolerance = 1e-10;
  std::uint64_t seed = 0;
  int starts = 5;
  // Estimate lambda alone with alpha held fixed (alpha = 1 gives the RL model).
  std::optional<double> fixed_alpha;
};

inline constexpr double kLambdaBoundaryGap = 1e-6;

/// Plotting positions u_i = i/(n+1), i = 1..n.
inline std::vector<double> plotting_positions(std::size_t n) {
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = double(i + 1) / double(n + 1);
  return u;
}

namespace detail {
inline void require_observations(const Sample& s, std::size_t min_n = 1) {
  if (s.size() < min_n) {
    if (s.empty()) throw EmptySampleError();
    throw std::invalid_argument("need at least " + std::to_string(min_n) + " observations");
  }
}
}  // namespace detail

/// Log-likelihood, equal to the sum of log densities:
///   n log a - 2n log l - n log(l-1) - sum t^a / l + (a-1) sum log t + sum log(l^2 + t^a - 2l).
inline double log_likelihood(const GrlParams& p, const Sample& s) {
  detail::require_observations(s);
  const double l = p.lambda(), a = p.alpha();
  const double n = double(s.size());
  double acc = n * (std::log(a) - std::log(l) - std::log(l - 1.0));
  for (double lt : s.log_sorted()) {
    const double z = std::exp(a * lt - std::log(l));
    acc += (a - 1.0) * lt + std::log(l - 2.0 + z) - z;
  }
  return acc;
}

/// Gradient of the log-likelihood, (d/dlambda, d/dalpha).
inline std::pair<double, double> score(const GrlParams& p, const Sample& s) {
  detail::require_observations(s);
  const double l = p.lambda(), a = p.alpha();
  const double n = double(s.size());
  double dl = -2.0 * n / l - n / (l - 1.0);
  double da = n / a;
  for (double lt : s.log_sorted()) {
    const double ta = std::exp(a * lt);
    const double d = l * l + ta - 2.0 * l;
    dl += ta / (l * l) + 2.0 * (l - 1.0) / d;
    da += -ta * lt / l + lt + ta * lt / d;
  }
  return {dl, da};
}

inline InfoMatrix observed_information(const GrlParams& p, const Sample& s) {
  detail::require_observations(s);
  const double l = p.lambda(), a = p.alpha();
  const double n = double(s.size());
  double h11 = -2.0 * n / (l * l) - n / ((l - 1.0) * (l - 1.0));
  double h12 = 0;
  double h22 = n / (a * a);
  for (double lt : s.log_sorted()) {
    const double ta = std::exp(a * lt);
    const double d = l * l + ta - 2.0 * l;
    const double d2 = d * d;
    h11 += 2.0 * ta / (l * l * l) - 2.0 * (ta - l * l + 2.0 * l - 2.0) / d2;
    h12 += -ta * lt / (l * l) + 2.0 * (l - 1.0) * ta * lt / d2;
    h22 += ta * lt * lt / l - l * (l - 2.0) * ta * lt * lt / d2;
  }
  return {h11, h12, h22};
}

/// Partial derivatives of the CDF, (dF/dlambda, dF/dalpha), at x > 0.
inline std::pair<double, double> cdf_gradient(const GrlParams& p, double x) {
  detail::require_positive(x, "cdf_gradient");
  const double l = p.lambda();
  const double lx = std::log(x);
  const double z = detail::scaled_power(p, lx);
  const double ez = std::exp(-z);
  const double d_lambda = z * ez / (l - 1.0) * (1.0 / (l - 1.0) - (l - 2.0 + z) / l);
  const double d_alpha = (l - 2.0 + z) / (l - 1.0) * ez * z * lx;
  return {d_lambda, d_alpha};
}

/// CDF spacings D_1..D_{n+1} of the ordered sample, with F(x_(0)) = 0 and
/// F(x_(n+1)) = 1.
inline std::vector<double> spacings(const GrlParams& p, const Sample& s) {
  detail::require_observations(s);
  const auto x = s.sorted();
  std::vector<double> d;
  d.reserve(x.size() + 1);
  double prev_f = 0, prev_s = 1;
  for (double v : x) {
    const double ls = log_survival(p, v);
    const double sv = std::exp(ls);
    const double fv = -std::expm1(ls);
    d.push_back(prev_f > 0.5 ? prev_s - sv : fv - prev_f);
    prev_f = fv;
    prev_s = sv;
  }
  d.push_back(prev_s);
  return d;
}

namespace detail {

// Per-evaluation scratch for the distance objectives on a fixed sample.
class ObjectiveEvaluator {
 public:
  explicit ObjectiveEvaluator(const Sample& s)
      : x_(s.sorted()), lx_(s.log_sorted()), n_(s.size()),
        z_(n_), ls_(n_), f_(n_), lf_(n_) {}

  double operator()(Method m, const GrlParams& p) {
    if (m == Method::MLE) return -log_likelihood_fast(p);
    if (m == Method::PCE) return pce(p);
    fill(p);
    const double n = double(n_);
    double acc = 0;
    switch (m) {
      case Method::OLSE:
        for (std::size_t i = 0; i < n_; ++i) {
          const double e = f_[i] - double(i + 1) / (n + 1);
          acc += e * e;
        }
        return acc;
      case Method::WLSE:
        for (std::size_t i = 0; i < n_; ++i) {
          const double k = double(i + 1);
          const double e = f_[i] - k / (n + 1);
          acc += (n + 1) * (n + 1) * (n + 2) / (k * (n - k + 1)) * e * e;
        }
        return acc;
      case Method::CVME:
        acc = 1.0 / (12.0 * n);
        for (std::size_t i = 0; i < n_; ++i) {
          const double e = f_[i] - (2.0 * double(i + 1) - 1.0) / (2.0 * n);
          acc += e * e;
        }
        return acc;
      case Method::ADE:
        for (std::size_t i = 0; i < n_; ++i) {
          acc += (2.0 * double(i + 1) - 1.0) * (lf_[i] + ls_[n_ - 1 - i]);
        }
        return -n - acc / n;
      case Method::RADE: {
        double sf = 0;
        for (std::size_t i = 0; i < n_; ++i) {
          sf += f_[i];
          acc += (2.0 * double(i + 1) - 1.0) * ls_[n_ - 1 - i];
        }
        return n / 2.0 - 2.0 * sf - acc / n;
      }
      case Method::MPSE: return mpse(p);
      default: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

 private:
  void fill(const GrlParams& p) {
    const double la = std::log(p.lambda());
    for (std::size_t i = 0; i < n_; ++i) {
      z_[i] = std::exp(p.alpha() * lx_[i] - la);
      ls_[i] = log_survival_z(p.lambda(), z_[i]);
      f_[i] = -std::expm1(ls_[i]);
      lf_[i] = std::log(f_[i]);
    }
  }

  double log_likelihood_fast(const GrlParams& p) const {
    const double l = p.lambda(), a = p.alpha();
    const double la = std::log(l);
    double acc = double(n_) * (std::log(a) - la - std::log(l - 1.0));
    for (double lt : lx_) {
      const double z = std::exp(a * lt - la);
      acc += (a - 1.0) * lt + std::log(l - 2.0 + z) - z;
    }
    return acc;
  }

  // Tied observations give zero interior spacings; their term is replaced
  // by log f(x_(i)).
  double mpse(const GrlParams& p) {
    double acc = lf_[0] + ls_[n_ - 1];
    for (std::size_t i = 1; i < n_; ++i) {
      const double d = f_[i - 1] > 0.5 ? std::exp(ls_[i - 1]) - std::exp(ls_[i]) : f_[i] - f_[i - 1];
      acc += d < 1e-300 ? log_pdf_z(p, lx_[i], z_[i]) : std::log(d);
    }
    return -acc / double(n_ + 1);
  }

  double pce(const GrlParams& p) const {
    double acc = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = x_[i] - quantile(p, double(i + 1) / double(n_ + 1));
      acc += e * e;
    }
    return acc;
  }

  std::span<const double> x_, lx_;
  std::size_t n_;
  std::vector<double> z_, ls_, f_, lf_;
};

// Unconstrained coordinates: lambda = 2 + exp(u), alpha = exp(v).
inline constexpr double kUMin = -13.815510557964274;  // log(1e-6)
inline constexpr double kUMax = 27.631021115928547;   // log(1e12)
inline constexpr double kVMin = -9.2103403719761836;  // log(1e-4)
inline constexpr double kVMax = 9.2103403719761836;

inline GrlParams from_unconstrained(double u, double v) {
  return GrlParams(2.0 + std::exp(std::clamp(u, kUMin, kUMax)), std::exp(std::clamp(v, kVMin, kVMax)));
}
inline std::pair<double, double> to_unconstrained(const GrlParams& p) {
  const double gap = std::max(p.lambda() - 2.0, kLambdaBoundaryGap);
  return {std::log(gap), std::log(p.alpha())};
}

}  // namespace detail

/// Value of a method's objective (minimization convention) at `p`.
inline double objective(Method m, const GrlParams& p, const Sample& s) {
  detail::require_observations(s);
  detail::ObjectiveEvaluator ev(s);
  return ev(m, p);
}

/// Method-of-moments style start: matches the model mean and variance to
/// the sample ones. Falls back to (3, 1) when no close match exists.
inline GrlParams moment_start(const Sample& s) {
  const GrlParams fallback(3.0, 1.0);
  if (s.size() < 2) return fallback;
  const double lm = std::log(s.mean());
  const double lv = std::log(s.variance());
  if (!std::isfinite(lm) || !std::isfinite(lv)) return fallback;
  auto resid = [&](const std::vector<double>& x) {
    const GrlParams p = detail::from_unconstrained(x[0], x[1]);
    const double m1 = log_raw_moment(p, 1);
    const double m2 = log_raw_moment(p, 2);
    const double var = m2 + std::log1p(-std::exp(2.0 * m1 - m2));
    const double a = m1 - lm, b = var - lv;
    return a * a + b * b;
  };
  SimplexOptions opt;
  opt.max_iterations = 600;
  opt.x_tolerance = 1e-7;
  opt.f_tolerance = 1e-14;
  const auto r = nelder_mead(resid, {0.0, 0.0}, opt);
  if (!(r.value < 1e-6)) return fallback;
  return detail::from_unconstrained(r.x[0], r.x[1]);
}

/// Fit by one of the eight methods. Nelder-Mead in (log(lambda-2), log alpha)
/// from the moment start, the best point of a coarse grid scan, and seeded
/// perturbations; the lowest objective wins.
inline EstimationResult estimate(Method m, const Sample& s, const EstimateOptions& opt = {}) {
  if (s.size() < 3) throw std::invalid_argument("estimation needs at least 3 observations");
  if (s.all_equal()) throw DegenerateSampleError("all observations are equal");
  if (opt.fixed_alpha && !(*opt.fixed_alpha > 0)) throw DomainError("fixed alpha must be > 0");

  detail::ObjectiveEvaluator ev(s);
  const bool one_d = opt.fixed_alpha.has_value();

  auto params_of = [&](const std::vector<double>& x) {
    return one_d ? GrlParams(2.0 + std::exp(std::clamp(x[0], detail::kUMin, detail::kUMax)),
                             *opt.fixed_alpha)
                 : detail::from_unconstrained(x[0], x[1]);
  };
  auto f = [&](const std::vector<double>& x) {
    try {
      return ev(m, params_of(x));
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Candidate starts: the override or the moment start, then the best point
  // of a coarse grid scan; the remaining starts perturb the better of the two.
  GrlParams first = opt.start ? *opt.start : moment_start(s);
  if (one_d) first = GrlParams(first.lambda(), *opt.fixed_alpha);
  const auto [u0, v0] = detail::to_unconstrained(first);
  std::vector<double> x_first = one_d ? std::vector<double>{u0} : std::vector<double>{u0, v0};
  std::vector<double> x_grid = x_first;
  double f_grid = f(x_first);
  const bool scan = !opt.start;
  if (scan) {
    static constexpr std::array<double, 9> us = {-9.0, -6.0, -3.5, -2.0, -0.5, 0.7, 2.0, 3.5, 5.5};
    static constexpr std::array<double, 8> as = {0.3, 0.5, 0.7, 1.0, 1.5, 2.5, 4.0, 7.0};
    for (double u : us) {
      if (one_d) {
        const double fv = f({u});
        if (fv < f_grid) { f_grid = fv; x_grid = {u}; }
        continue;
      }
      for (double a : as) {
        const std::vector<double> x{u, std::log(a)};
        const double fv = f(x);
        if (fv < f_grid) { f_grid = fv; x_grid = x; }
      }
    }
  }
  const std::vector<double>& x_centre = f_grid < f(x_first) ? x_grid : x_first;

  SimplexOptions so;
  so.max_iterations = opt.max_iterations;
  so.x_tolerance = opt.tolerance;
  so.f_tolerance = opt.f_tolerance;
  so.initial_step = {0.5, 0.2};

  SimplexResult best;
  const int starts = std::max(1, opt.starts);
  for (int k = 0; k < starts; ++k) {
    std::vector<double> x0 = k == 0 ? x_first : (k == 1 && scan ? x_grid : x_centre);
    if (k >= (scan ? 2 : 1)) {
      Rng rng(derive_seed(opt.seed, {std::uint64_t(k)}));
      x0[0] += 2.0 * rng.uniform_open() - 1.0;
      if (!one_d) x0[1] += rng.uniform_open() - 0.5;
    }
    auto r = nelder_mead(f, x0, so);
    if (k == 0 || r.value < best.value) best = std::move(r);
  }

  const bool at_boundary = best.x[0] <= detail::kUMin;
  const GrlParams fitted = params_of(best.x);
  EstimationResult res{m, fitted, best.value, best.converged, best.iterations, at_boundary, std::nullopt};
  if (m == Method::MLE && !one_d) {
    const InfoMatrix h = observed_information(fitted, s);
    if (h.positive_definite()) {
      const double det = h.determinant();
      res.std_errors = StdErrors{std::sqrt(h.h22 / det), std::sqrt(h.h11 / det)};
    }
  }
  return res;
}

}  // namespace grl
