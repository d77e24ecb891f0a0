#pragma once

#include <stdexcept>
#include <string>

namespace grl {

// Argument outside the mathematical domain of a function or parameter set.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Order-statistic index outside [1, n].
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class EmptySampleError : public std::invalid_argument {
 public:
  EmptySampleError() : std::invalid_argument("sample is empty") {}
  using std::invalid_argument::invalid_argument;
};

// All observations identical; no distribution can be fitted.
class DegenerateSampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

}  // namespace grl
