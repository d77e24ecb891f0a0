#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace grl {

struct SimplexOptions {
  int max_iterations = 2000;
  double x_tolerance = 1e-8;   // simplex diameter
  double f_tolerance = 1e-10;  // spread of vertex values
  std::vector<double> initial_step;  // per coordinate; default 0.5
};

struct SimplexResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free Nelder-Mead minimization (standard coefficients
/// 1, 2, 1/2, 1/2). NaN objective values are treated as +inf.
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, const SimplexOptions& opt = {}) {
  const std::size_t d = x0.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> pts(d + 1, x0);
  for (std::size_t i = 0; i < d; ++i) {
    pts[i + 1][i] += opt.initial_step.size() > i ? opt.initial_step[i] : 0.5;
  }
  std::vector<double> vals(d + 1);
  for (std::size_t i = 0; i <= d; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  SimplexResult res;

  auto diameter = [&](std::size_t best) {
    double m = 0;
    for (std::size_t i = 0; i <= d; ++i) {
      double s = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const double dx = pts[i][k] - pts[best][k];
        s += dx * dx;
      }
      m = std::max(m, std::sqrt(s));
    }
    return m;
  };

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

    const double spread = vals[worst] - vals[best];
    if (diameter(best) < opt.x_tolerance &&
        (spread < opt.f_tolerance || (std::isinf(vals[best]) && std::isinf(vals[worst])))) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / double(d);
    }
    for (std::size_t k = 0; k < d; ++k) xr[k] = centroid[k] + (centroid[k] - pts[worst][k]);
    const double fr = eval(xr);

    if (fr < vals[best]) {
      for (std::size_t k = 0; k < d; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
      const double fe = eval(xe);
      if (fe < fr) { pts[worst] = xe; vals[worst] = fe; }
      else { pts[worst] = xr; vals[worst] = fr; }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    for (std::size_t k = 0; k < d; ++k) {
      xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k])
                      : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
    }
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.value = vals[best];
  res.iterations = it;
  return res;
}

}  // namespace grl
