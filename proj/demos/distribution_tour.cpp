// Density, hazard, moments and sampling for a few parameter choices.
#include <cstdio>

#include "grl/distribution.hpp"

using namespace grl;

int main() {
  for (const GrlParams p : {GrlParams(2.0, 0.5), GrlParams(3.1, 2.5), GrlParams(5.5, 10)}) {
    const auto m = moments(p);
    std::printf("lambda=%.1f alpha=%.1f  weibull weight %.3f\n", p.lambda(), p.alpha(), mixture_weight(p).p);
    std::printf("  mean %.4f  variance %.4f  skewness %.4f  kurtosis %.4f\n", m.mean, m.variance, m.skewness,
                m.kurtosis);
    std::printf("  median %.4f  90%% quantile %.4f\n", quantile(p, 0.5), quantile(p, 0.9));
    for (double t : {0.5, 1.0, 2.0}) {
      std::printf("  t=%.1f  pdf %.5f  survival %.5f  hazard %.5f\n", t, pdf(p, t), survival(p, t), hazard(p, t));
    }
    const Sample s = sample_inverse(p, 5000, 42);
    std::printf("  sample mean of 5000 draws %.4f\n\n", s.mean());
  }
}
