#pragma once

// q-shifted factorials (x;q)_n for every integer n and (x;q)_inf with a
// rigorous truncation bound. Everything here is direct product evaluation:
// these routines are the oracle for the rest of the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "qseries/core.hpp"

namespace qseries {

/// Tag selecting the infinite product (x;q)_inf in overloads taking a length.
struct Infinity {};
inline constexpr Infinity kInfinity{};

struct ProductConfig {
  /// Target bound on |log| of the discarded tail.
  double tol = 1e-17;
  int max_factors = 20000;
  double pole_guard = kDefaultPoleGuard;
  /// Accept factors inside the pole guard (numerator use). When false a
  /// factor with 0 < |1 - x q^i| < pole_guard is a PoleHit.
  bool allow_zero = false;

  void validate() const {
    if (!(tol > 0.0) || max_factors < 1 || !(pole_guard > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "ProductConfig requires tol > 0, max_factors >= 1, pole_guard > 0");
    }
  }
};

/// A value together with a bound on its absolute error.
struct Estimate {
  Complex value{1.0};
  double err = 0.0;
};
using ProductValue = Estimate;

namespace detail {

inline void require_finite_result(Complex v, Complex x) {
  if (!is_finite(v)) {
    throw Error(ErrorCode::Budget,
                "q-product overflow at x = " + format_complex(x));
  }
}

}  // namespace detail

/// (x;q)_n for any integer n. Negative n uses (x;q)_{-m} = 1/(x q^{-m};q)_m,
/// so its factors sit in a denominator and are pole-guarded.
inline Complex poch_finite(Complex x, const QBase& q, int n,
                           double pole_guard = kDefaultPoleGuard) {
  require_finite(x, "x");
  if (n == 0) return Complex(1.0);
  Complex result(1.0);
  if (n > 0) {
    Complex w = x;
    for (int i = 0; i < n; ++i) {
      result *= Complex(1.0) - w;
      w *= q.value();
    }
    detail::require_finite_result(result, x);
    return result;
  }
  // Factors (1 - x q^{-j}) for j = m, ..., 1: ascending i in (x q^{-m};q)_m.
  const int m = -n;
  Complex w = x * q.pow(-m);
  Complex denom(1.0);
  for (int j = m; j >= 1; --j) {
    const Complex f = Complex(1.0) - w;
    if (std::abs(f) < pole_guard) {
      throw Error(ErrorCode::PoleHit,
                  "(x;q)_" + std::to_string(n) + " diverges: x q^-" +
                      std::to_string(j) + " = 1 within guard, x = " +
                      format_complex(x));
    }
    denom *= f;
    w *= q.value();
  }
  result = Complex(1.0) / denom;
  detail::require_finite_result(result, x);
  return result;
}

/// Number of leading factors of (x;q)_inf needed so that the discarded tail
/// satisfies |log prod_{i>=N}(1 - x q^i)| <= 2|x||q|^N/(1-|q|) <= tol.
inline int infinite_product_length(double abs_x, double abs_q, double tol) {
  if (abs_x == 0.0) return 0;
  const double target = std::min(0.5, tol * (1.0 - abs_q) / 2.0);
  if (abs_x <= target) return 0;
  const double n = std::ceil(std::log(target / abs_x) / std::log(abs_q));
  if (!(n < 1e9)) return std::numeric_limits<int>::max();
  int count = static_cast<int>(std::max(0.0, n));
  // The closed form can be off by one through rounding of the logs.
  while (count > 0 && abs_x * std::pow(abs_q, count - 1) <= target) --count;
  while (abs_x * std::pow(abs_q, count) > target) ++count;
  return count;
}

/// (x;q)_inf truncated after N factors, multiplied in ascending order.
/// err = |value| (expm1(tail) + eps (2 (N + 1) + sum |x q^i| / |1 - x q^i|)):
/// the tail bound propagated multiplicatively plus a rounding allowance that
/// covers cancellation in factors close to zero.
inline ProductValue poch_infinite(Complex x, const QBase& q,
                                  const ProductConfig& cfg = {}) {
  cfg.validate();
  require_finite(x, "x");
  const double ax = std::abs(x);
  if (ax == 0.0) return {Complex(1.0), 0.0};
  const double aq = q.modulus();
  const int count = infinite_product_length(ax, aq, cfg.tol);
  if (count > cfg.max_factors) {
    throw Error(ErrorCode::Budget,
                "(x;q)_inf needs " +
                    (count == std::numeric_limits<int>::max() ? std::string("too many")
                                                              : std::to_string(count)) +
                    " factors, max_factors = " + std::to_string(cfg.max_factors));
  }
  Complex value(1.0);
  Complex w = x;
  double cond = 0.0;
  for (int i = 0; i < count; ++i) {
    const Complex f = Complex(1.0) - w;
    if (f == Complex(0.0)) return {Complex(0.0), 0.0};
    if (!cfg.allow_zero && std::abs(f) < cfg.pole_guard) {
      throw Error(ErrorCode::PoleHit,
                  "(x;q)_inf factor " + std::to_string(i) +
                      " within pole guard, x = " + format_complex(x));
    }
    value *= f;
    cond += std::abs(w) / std::abs(f);
    w *= q.value();
  }
  detail::require_finite_result(value, x);
  const double tail = 2.0 * ax * std::pow(aq, count) / (1.0 - aq);
  const double err = std::abs(value) * (std::expm1(tail) + (2.0 * (count + 1) + cond) * kEpsilon);
  return {value, err};
}

namespace detail {

template <class Fn>
ProductValue multiply_each(std::span<const Complex> xs, Fn&& single) {
  ProductValue total;
  double rel = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ProductValue p;
    try {
      p = single(xs[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "argument " + std::to_string(i) + " (" +
                                format_complex(xs[i]) + "): " + e.detail());
    }
    total.value *= p.value;
    const double m = std::abs(p.value);
    rel += m > 0.0 ? p.err / m : 0.0;
  }
  require_finite_result(total.value, Complex(0.0));
  total.err = std::abs(total.value) * (rel + 2.0 * static_cast<double>(xs.size()) * kEpsilon);
  return total;
}

}  // namespace detail

/// (x_1, ..., x_r; q)_n. Errors carry the index and value of the offending x_i.
inline ProductValue poch_multi(std::span<const Complex> xs, const QBase& q, int n,
                               double pole_guard = kDefaultPoleGuard) {
  return detail::multiply_each(xs, [&](Complex x) {
    const Complex v = poch_finite(x, q, n, pole_guard);
    return ProductValue{v, std::abs(v) * 2.0 * std::abs(n) * kEpsilon};
  });
}

inline ProductValue poch_multi(std::span<const Complex> xs, const QBase& q, Infinity,
                               const ProductConfig& cfg = {}) {
  return detail::multiply_each(xs, [&](Complex x) { return poch_infinite(x, q, cfg); });
}

/// (x;q)_n (-x;q)_n = (x^2;q^2)_n, evaluated from x^2 so no square root is
/// ever taken.
inline ProductValue poch_pair_sq(Complex x_squared, const QBase& q, int n,
                                 double pole_guard = kDefaultPoleGuard) {
  const Complex v = poch_finite(x_squared, q.squared(), n, pole_guard);
  return {v, std::abs(v) * 2.0 * std::abs(n) * kEpsilon};
}

inline ProductValue poch_pair_sq(Complex x_squared, const QBase& q, Infinity,
                                 const ProductConfig& cfg = {}) {
  return poch_infinite(x_squared, q.squared(), cfg);
}

}  // namespace qseries
