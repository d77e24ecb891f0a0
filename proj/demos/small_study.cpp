// A small Monte Carlo comparison of the estimators at two parameter points.
#include <cstdio>

#include "grl/simstudy.hpp"

using namespace grl;

int main() {
  SimConfig c;
  c.thetas = {{2.0, 2.5}, {3.1, 0.7}};
  c.sample_sizes = {30, 80};
  c.replicates = 40;
  c.threads = default_threads();
  const auto r = run_study(c);

  for (const auto& cell : r.cells) {
    const auto& th = c.thetas[cell.theta_index];
    std::printf("lambda=%.1f alpha=%.1f n=%zu\n", th.lambda(), th.alpha(), cell.n);
    for (const auto& st : cell.stats) {
      std::printf("  %-5s MSE(lambda) %9.4f  MSE(alpha) %9.4f\n", std::string(to_string(st.method)).c_str(),
                  st.mse_lambda, st.mse_alpha);
    }
  }
  std::printf("\noverall ranks:");
  for (std::size_t k = 0; k < c.methods.size(); ++k) {
    std::printf(" %s=%g", std::string(to_string(c.methods[k])).c_str(), r.ranks.overall_ranks[k]);
  }
  std::printf("\n");
}
