#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "grl/estimators.hpp"

using namespace grl;

namespace {

Sample leukaemia() {
  std::ifstream in(GRL_DATA_DIR "/leukaemia.txt");
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    for (double x; ls >> x;) v.push_back(x);
  }
  return Sample(std::move(v));
}

// Objectives written out directly from their textbook forms.
double naive_objective(Method m, const GrlParams& p, const Sample& s) {
  const auto x = s.sorted();
  const double n = double(x.size());
  double acc = 0;
  switch (m) {
    case Method::MLE:
      for (double v : x) acc -= std::log(pdf(p, v));
      return acc;
    case Method::OLSE:
      for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(cdf(p, x[i]) - (i + 1) / (n + 1), 2);
      return acc;
    case Method::WLSE:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double k = double(i + 1);
        acc += (n + 1) * (n + 1) * (n + 2) / (k * (n - k + 1)) * std::pow(cdf(p, x[i]) - k / (n + 1), 2);
      }
      return acc;
    case Method::CVME:
      acc = 1 / (12 * n);
      for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(cdf(p, x[i]) - (2.0 * (i + 1) - 1) / (2 * n), 2);
      return acc;
    case Method::ADE:
      for (std::size_t i = 0; i < x.size(); ++i) {
        acc += (2.0 * (i + 1) - 1) * (std::log(cdf(p, x[i])) + std::log(survival(p, x[x.size() - 1 - i])));
      }
      return -n - acc / n;
    case Method::RADE: {
      double sf = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        sf += cdf(p, x[i]);
        acc += (2.0 * (i + 1) - 1) * std::log(survival(p, x[x.size() - 1 - i]));
      }
      return n / 2 - 2 * sf - acc / n;
    }
    case Method::MPSE: {
      double prev = 0;
      for (double v : x) {
        acc += std::log(cdf(p, v) - prev);
        prev = cdf(p, v);
      }
      acc += std::log(1 - prev);
      return -acc / (n + 1);
    }
    case Method::PCE:
      for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(x[i] - quantile(p, (i + 1) / (n + 1)), 2);
      return acc;
  }
  return NAN;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("mpse"), Method::MPSE);
  EXPECT_THROW(parse_method("LSE"), std::invalid_argument);
  EXPECT_EQ(to_string(kAllMethods.front()), "WLSE");
  EXPECT_EQ(to_string(kAllMethods.back()), "PCE");
}

TEST(LogLikelihood, EqualsSumOfLogDensities) {
  const Sample s = sample_inverse(GrlParams(3.1, 0.7), 40, 5);
  for (const auto& p : {GrlParams(2.0, 0.5), GrlParams(3.1, 0.7), GrlParams(14.7, 0.77)}) {
    double ref = 0;
    for (double v : s.values()) ref += log_pdf(p, v);
    EXPECT_NEAR(log_likelihood(p, s), ref, 1e-10 * std::abs(ref));
  }
  // n = 1 reduces to a single log density.
  EXPECT_NEAR(log_likelihood(GrlParams(4, 2), Sample({1.3})), log_pdf(GrlParams(4, 2), 1.3), 1e-14);
  EXPECT_THROW(log_likelihood(GrlParams(4, 2), Sample{}), EmptySampleError);
}

TEST(Derivatives, ScoreMatchesFiniteDifferences) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ul(2.05, 8.0), ua(0.4, 3.5);
  for (int i = 0; i < 50; ++i) {
    const GrlParams p(ul(gen), ua(gen));
    const Sample s = sample_inverse(GrlParams(ul(gen), ua(gen)), 30, gen());
    const auto [dl, da] = score(p, s);
    const double hl = 1e-5 * p.lambda(), ha = 1e-5 * p.alpha();
    const double fl = (log_likelihood(GrlParams(p.lambda() + hl, p.alpha()), s) -
                       log_likelihood(GrlParams(p.lambda() - hl, p.alpha()), s)) / (2 * hl);
    const double fa = (log_likelihood(GrlParams(p.lambda(), p.alpha() + ha), s) -
                       log_likelihood(GrlParams(p.lambda(), p.alpha() - ha), s)) / (2 * ha);
    const double scale = std::abs(log_likelihood(p, s)) / std::min(p.lambda(), p.alpha());
    EXPECT_LT(std::abs(dl - fl), 1e-6 * std::max(std::abs(fl), scale * 1e-3));
    EXPECT_LT(std::abs(da - fa), 1e-6 * std::max(std::abs(fa), scale * 1e-3));
  }
}

TEST(Derivatives, InformationIsNegativeHessian) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> ul(2.05, 8.0), ua(0.4, 3.5);
  for (int i = 0; i < 50; ++i) {
    const GrlParams p(ul(gen), ua(gen));
    const Sample s = sample_inverse(GrlParams(ul(gen), ua(gen)), 30, gen());
    const auto h = observed_information(p, s);
    const double hl = 1e-5 * p.lambda(), ha = 1e-5 * p.alpha();
    const auto sl_p = score(GrlParams(p.lambda() + hl, p.alpha()), s);
    const auto sl_m = score(GrlParams(p.lambda() - hl, p.alpha()), s);
    const auto sa_p = score(GrlParams(p.lambda(), p.alpha() + ha), s);
    const auto sa_m = score(GrlParams(p.lambda(), p.alpha() - ha), s);
    const double f11 = -(sl_p.first - sl_m.first) / (2 * hl);
    const double f12 = -(sa_p.first - sa_m.first) / (2 * ha);
    const double f21 = -(sl_p.second - sl_m.second) / (2 * hl);
    const double f22 = -(sa_p.second - sa_m.second) / (2 * ha);
    const double norm = std::abs(f11) + std::abs(f12) + std::abs(f22);
    EXPECT_LT(std::abs(h.h11 - f11), 1e-4 * norm);
    EXPECT_LT(std::abs(h.h12 - f12), 1e-4 * norm);
    EXPECT_LT(std::abs(h.h12 - f21), 1e-4 * norm);
    EXPECT_LT(std::abs(h.h22 - f22), 1e-4 * norm);
  }
}

TEST(Derivatives, CdfGradient) {
  for (const auto& p : {GrlParams(2.01, 0.5), GrlParams(2.5, 1.0), GrlParams(3.1, 3.5), GrlParams(20, 0.8)}) {
    for (double u : {0.05, 0.3, 0.7, 0.95}) {
      const double x = quantile(p, u);
      const auto [gl, ga] = cdf_gradient(p, x);
      const double hl = 1e-6 * p.lambda(), ha = 1e-6 * p.alpha();
      const double fl = (cdf(GrlParams(p.lambda() + hl, p.alpha()), x) -
                         cdf(GrlParams(p.lambda() - hl, p.alpha()), x)) / (2 * hl);
      const double fa = (cdf(GrlParams(p.lambda(), p.alpha() + ha), x) -
                         cdf(GrlParams(p.lambda(), p.alpha() - ha), x)) / (2 * ha);
      EXPECT_NEAR(gl, fl, 1e-7 * std::max(1.0, std::abs(fl)));
      EXPECT_NEAR(ga, fa, 1e-7 * std::max(1.0, std::abs(fa)));
    }
  }
  EXPECT_THROW(cdf_gradient(GrlParams(3, 1), 0.0), DomainError);
}

TEST(Spacings, SumToOneAndPositive) {
  const Sample s = sample_inverse(GrlParams(2.4, 1.7), 60, 8);
  const auto d = spacings(GrlParams(3.0, 1.2), s);
  ASSERT_EQ(d.size(), 61u);
  double sum = 0;
  for (double v : d) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-14);
}

TEST(Objectives, MatchDirectForms) {
  const Sample s = sample_inverse(GrlParams(3.1, 0.7), 25, 21);
  for (const auto& p : {GrlParams(2.2, 0.6), GrlParams(3.1, 0.7), GrlParams(9.0, 1.4)}) {
    for (Method m : kAllMethods) {
      EXPECT_LT(rel(objective(m, p, s), naive_objective(m, p, s)), 1e-10) << to_string(m);
    }
  }
}

TEST(Objectives, MpseTieUsesLogDensity) {
  const GrlParams p(3, 1);
  const Sample s({1.0, 2.0, 2.0, 4.0});
  const double v = objective(Method::MPSE, p, s);
  EXPECT_TRUE(std::isfinite(v));
  const double ref = -(std::log(cdf(p, 1.0)) + std::log(cdf(p, 2.0) - cdf(p, 1.0)) + log_pdf(p, 2.0) +
                       std::log(cdf(p, 4.0) - cdf(p, 2.0)) + std::log(survival(p, 4.0))) / 5;
  EXPECT_NEAR(v, ref, 1e-12);
}

TEST(Estimate, PceRecoversQuantileSample) {
  const GrlParams truth(3.0, 2.0);
  const std::size_t n = 50;
  std::vector<double> x;
  for (std::size_t i = 1; i <= n; ++i) x.push_back(quantile(truth, double(i) / (n + 1)));
  const Sample s(std::move(x));
  EXPECT_NEAR(objective(Method::PCE, truth, s), 0.0, 1e-20);
  const auto r = estimate(Method::PCE, s);
  EXPECT_NEAR(r.params.lambda(), 3.0, 1e-4);
  EXPECT_NEAR(r.params.alpha(), 2.0, 1e-4);
}

TEST(Estimate, LeukaemiaMle) {
  const auto r = estimate(Method::MLE, leukaemia());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.params.lambda(), 14.6996, 1e-3);
  EXPECT_NEAR(r.params.alpha(), 0.77410, 1e-4);
  EXPECT_NEAR(r.objective, 153.58031, 1e-4);
  ASSERT_TRUE(r.std_errors.has_value());
  EXPECT_NEAR(r.std_errors->se_lambda, 7.677, 0.01);
  EXPECT_NEAR(r.std_errors->se_alpha, 0.10927, 1e-4);
}

TEST(Estimate, FixedAlphaFitsOneParameterModel) {
  EstimateOptions o;
  o.fixed_alpha = 1.0;
  const auto r = estimate(Method::MLE, leukaemia(), o);
  EXPECT_EQ(r.params.alpha(), 1.0);
  EXPECT_NEAR(r.params.lambda(), 39.869, 1e-2);
  EXPECT_FALSE(r.std_errors.has_value());
}

TEST(Estimate, ScoreVanishesAtMle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Sample s = sample_inverse(GrlParams(4.0, 1.5), 80, seed);
    const auto r = estimate(Method::MLE, s);
    if (!r.converged || r.at_boundary) continue;
    const auto [dl, da] = score(r.params, s);
    // Scaled by the parameter: derivative with respect to log-parameters.
    EXPECT_LT(std::hypot(dl * (r.params.lambda() - 2), da * r.params.alpha()) / double(s.size()), 1e-4);
  }
}

TEST(Estimate, NoRandomProbeBeatsTheFit) {
  const Sample s = sample_inverse(GrlParams(3.1, 2.5), 40, 77);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> ul(2.0, 30.0), ua(0.1, 10.0);
  for (Method m : kAllMethods) {
    const auto r = estimate(m, s);
    for (int i = 0; i < 32; ++i) {
      const GrlParams q(ul(gen), ua(gen));
      EXPECT_LE(r.objective, objective(m, q, s) + 1e-9) << to_string(m);
    }
  }
}

TEST(Estimate, DeterministicInSeed) {
  const Sample s = sample_inverse(GrlParams(2.5, 0.9), 35, 3);
  EstimateOptions o;
  o.seed = 123;
  for (Method m : kAllMethods) {
    const auto a = estimate(m, s, o), b = estimate(m, s, o);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.objective, b.objective);
  }
}

TEST(Estimate, StartOverrideIsUsed) {
  const Sample s = sample_inverse(GrlParams(2.5, 0.9), 35, 3);
  EstimateOptions o;
  o.start = GrlParams(2.5, 0.9);
  o.starts = 1;
  const auto r = estimate(Method::MLE, s, o);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.objective, objective(Method::MLE, *o.start, s));
}

TEST(Estimate, Errors) {
  EXPECT_THROW(estimate(Method::MLE, Sample({1.0, 2.0})), std::invalid_argument);
  EXPECT_THROW(estimate(Method::MLE, Sample({2.0, 2.0, 2.0})), DegenerateSampleError);
  EstimateOptions o;
  o.fixed_alpha = -1.0;
  EXPECT_THROW(estimate(Method::MLE, Sample({1.0, 2.0, 3.0}), o), DomainError);
}

TEST(Estimate, BoundaryIsFlagged) {
  // Data from lambda = 2 often put the likelihood maximum on the boundary.
  int flagged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = estimate(Method::MLE, sample_inverse(GrlParams(2.0, 2.5), 200, seed));
    if (r.at_boundary) {
      ++flagged;
      EXPECT_NEAR(r.params.lambda(), 2.0, 1e-5);
    }
  }
  EXPECT_GT(flagged, 0);
}

TEST(MomentStart, MatchesPopulationMoments) {
  const GrlParams truth(4.0, 1.3);
  const Sample s = sample_inverse(truth, 20000, 9);
  const GrlParams m = moment_start(s);
  EXPECT_NEAR(raw_moment(m, 1), s.mean(), 1e-3 * s.mean());
  EXPECT_NEAR(central_moment(m, 2), s.variance(), 1e-3 * s.variance());
}

TEST(InfoMatrix, Helpers) {
  const InfoMatrix h{2, 1, 3};
  EXPECT_EQ(h.determinant(), 5);
  EXPECT_TRUE(h.positive_definite());
  EXPECT_FALSE((InfoMatrix{1, 2, 1}).positive_definite());
}
