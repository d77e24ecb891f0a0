#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "grl/errors.hpp"

namespace grl {

// Immutable collection of positive observations. Keeps the input order,
// the ascending order, and the logs of the sorted values.
class Sample {
 public:
  Sample() = default;

  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!std::isfinite(v) || !(v > 0)) {
        throw DomainError("sample value #" + std::to_string(i + 1) + " = " + std::to_string(v) +
                          " is not a finite positive number");
      }
    }
    sorted_ = values_;
    std::sort(sorted_.begin(), sorted_.end());
    log_sorted_.resize(sorted_.size());
    std::transform(sorted_.begin(), sorted_.end(), log_sorted_.begin(),
                   [](double v) { return std::log(v); });
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<const double> sorted() const { return sorted_; }
  [[nodiscard]] std::span<const double> log_sorted() const { return log_sorted_; }

  [[nodiscard]] double mean() const {
    double s = 0;
    for (double v : values_) s += v;
    return s / double(values_.size());
  }

  // Unbiased sample variance; 0 for fewer than two observations.
  [[nodiscard]] double variance() const {
    if (values_.size() < 2) return 0;
    const double m = mean();
    double s = 0;
    for (double v : values_) s += (v - m) * (v - m);
    return s / double(values_.size() - 1);
  }

  [[nodiscard]] bool all_equal() const {
    return !sorted_.empty() && sorted_.front() == sorted_.back();
  }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
  std::vector<double> log_sorted_;
};

}  // namespace grl
