#pragma once

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qseries {

/// Universal value type. Public operations never return non-finite values.
using Complex = std::complex<double>;

inline constexpr double kEpsilon = std::numeric_limits<double>::epsilon();

/// Default distance from 1 at which a factor (1 - w) in a denominator
/// position counts as a pole.
inline constexpr double kDefaultPoleGuard = 1e-8;

/// A multiplying factor (1 - w) with |1 - w| at or below this value is an
/// exact zero. Parameters pinned onto the q-lattice (c = a q^-m, x = 1/c)
/// only land there up to rounding.
inline constexpr double kExactZeroSnap = 1e-13;

enum class ErrorCode {
  PoleHit,
  Budget,
  DivergentRegion,
  DomainViolation,
  Exhausted,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::Budget: return "Budget";
    case ErrorCode::DivergentRegion: return "DivergentRegion";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::Exhausted: return "Exhausted";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

inline bool is_finite(Complex z) noexcept {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline Complex require_finite(Complex z, std::string_view what) {
  if (!is_finite(z)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " is not a finite complex number");
  }
  return z;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// "re+imi" / "re-imi" with 17 significant digits.
inline std::string format_complex(Complex z) {
  std::string out = format_double(z.real());
  const double im = z.imag();
  if (std::signbit(im)) {
    out += "-" + format_double(-im);
  } else {
    out += "+" + format_double(im);
  }
  return out + "i";
}

namespace detail {

inline double parse_real(std::string_view text, std::string_view whole) {
  const std::string buf(text);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument,
                "malformed complex literal '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace detail

/// Parses "a", "a+bi", "a-bi", "bi", "i", "-i" (decimal or exponent notation).
inline Complex parse_complex(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty() || text.back() != 'i') return {detail::parse_real(text, text), 0.0};
  const std::string_view body = text.substr(0, text.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  auto imaginary = [&](std::string_view part) {
    if (part.empty() || part == "+") return 1.0;
    if (part == "-") return -1.0;
    return detail::parse_real(part, text);
  };
  if (split == std::string_view::npos) return {0.0, imaginary(body)};
  return {detail::parse_real(body.substr(0, split), text), imaginary(body.substr(split))};
}

/// The base q of every product and series: 0 < |q| < 1.
class QBase {
 public:
  explicit QBase(Complex q) : q_(q) {
    const double m = std::abs(q);
    if (!is_finite(q) || !(m > 0.0) || !(m < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "base q must satisfy 0 < |q| < 1");
    }
  }

  Complex value() const noexcept { return q_; }
  double modulus() const noexcept { return std::abs(q_); }
  QBase squared() const { return QBase(q_ * q_); }

  /// q^n by repeated multiplication, for any integer n.
  Complex pow(int n) const noexcept {
    Complex step = n >= 0 ? q_ : Complex(1.0) / q_;
    Complex r(1.0);
    for (int i = 0, m = n >= 0 ? n : -n; i < m; ++i) r *= step;
    return r;
  }

 private:
  Complex q_;
};

}  // namespace qseries
