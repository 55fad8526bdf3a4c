#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qseries/core.hpp"
#include "qseries/harness.hpp"

namespace qseries::testing {

inline double rel_diff(Complex x, Complex y) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300});
}

/// Modulus log-uniform in [lo, hi], phase uniform.
inline Complex random_complex(Rng& rng, double lo = 0.3, double hi = 3.0) {
  const double r = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  return std::polar(r, rng.uniform(-std::numbers::pi, std::numbers::pi));
}

inline QBase random_q(Rng& rng, bool complex_q = false) {
  const double r = rng.uniform(0.1, 0.6);
  return QBase(complex_q ? std::polar(r, rng.uniform(-std::numbers::pi, std::numbers::pi))
                         : Complex(r));
}

}  // namespace qseries::testing
