#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace explab {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Shape or grid mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input violates a documented precondition (spectrum location, argument range, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iteration failed to converge, or a computation left the finite range.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

/// Single pass NaN/Inf detector: a non-finite entry poisons the running sum.
inline bool all_finite(const CVector& v) {
  double acc = 0.0;
  for (const Complex& z : v) acc += std::abs(z.real()) + std::abs(z.imag());
  return std::isfinite(acc);
}

}  // namespace explab
