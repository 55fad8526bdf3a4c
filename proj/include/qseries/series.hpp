#pragma once

// Unilateral r-phi-s and bilateral r-psi-s series summed by term-ratio
// recurrences marching away from k = 0.
//
// Forward (k >= 0):  t_{k+1} = t_k z ((-1) q^k)^e prod(1 - a q^k) / prod(1 - b q^k)
// Backward (j < 0):  t_j = t_{j+1} / ratio(j), evaluated in the split form
//   1 - p q^j = (-p q^j)(1 - q^{-j}/p)
// so that q^{-j} never overflows: with u = q^{|j|}
//   1/ratio(j) = K u^n prod_den(1 - u/b) / prod_num(1 - u/a),
// where K collects the parameter products and z, and n = 0 whenever no
// parameter is zero.
//
// A squared pair w stands for the two parameters (w^1/2, -w^1/2); its
// factor is (1 - w q^{2k}), so no square root is ever formed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qseries/core.hpp"

namespace qseries {

enum class SeriesKind { Unilateral, Bilateral };

/// Parameters of one side of a series. Each squared-pair entry w contributes
/// the pair w^1/2, -w^1/2 and counts as two parameters.
struct ParamList {
  std::vector<Complex> plain;
  std::vector<Complex> squared_pairs;

  std::size_t count() const noexcept { return plain.size() + 2 * squared_pairs.size(); }
};

class SeriesSpec {
 public:
  /// For a unilateral series `denominator` excludes the implicit q.
  SeriesSpec(SeriesKind kind, ParamList numerator, ParamList denominator, QBase q,
             Complex z)
      : kind_(kind),
        numerator_(std::move(numerator)),
        denominator_(std::move(denominator)),
        q_(q),
        z_(require_finite(z, "z")) {
    canonicalize(numerator_);
    canonicalize(denominator_);
    for (Complex p : numerator_.plain) require_finite(p, "numerator parameter");
    for (Complex p : numerator_.squared_pairs) require_finite(p, "numerator pair");
    for (Complex p : denominator_.plain) require_finite(p, "denominator parameter");
    for (Complex p : denominator_.squared_pairs) require_finite(p, "denominator pair");
    const long den_total = static_cast<long>(denominator_.count()) +
                           (kind_ == SeriesKind::Unilateral ? 1 : 0);
    const long e = den_total - static_cast<long>(numerator_.count());
    if (e < 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "more numerator than denominator parameters (negative sign exponent)");
    }
    sign_exponent_ = static_cast<int>(e);
  }

  static SeriesSpec unilateral(ParamList numerator, ParamList denominator, QBase q,
                               Complex z) {
    return {SeriesKind::Unilateral, std::move(numerator), std::move(denominator), q, z};
  }
  static SeriesSpec bilateral(ParamList numerator, ParamList denominator, QBase q,
                              Complex z) {
    return {SeriesKind::Bilateral, std::move(numerator), std::move(denominator), q, z};
  }

  SeriesKind kind() const noexcept { return kind_; }
  const ParamList& numerator() const noexcept { return numerator_; }
  /// Explicit denominator parameters (without the implicit q of a unilateral series).
  const ParamList& denominator() const noexcept { return denominator_; }
  const QBase& q() const noexcept { return q_; }
  Complex z() const noexcept { return z_; }
  /// e = (#denominator including implicit q) - #numerator.
  int sign_exponent() const noexcept { return sign_exponent_; }

 private:
  // Parameter order never affects a result: lists are sorted so that any
  // permutation of the same multiset evaluates bit-identically.
  static void canonicalize(ParamList& list) {
    auto less = [](Complex x, Complex y) {
      return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
    };
    std::sort(list.plain.begin(), list.plain.end(), less);
    std::sort(list.squared_pairs.begin(), list.squared_pairs.end(), less);
  }

  SeriesKind kind_;
  ParamList numerator_;
  ParamList denominator_;
  QBase q_;
  Complex z_;
  int sign_exponent_ = 0;
};

struct EvalConfig {
  /// A term is small when |t_k| <= tol * max(1, |partial sum|).
  double tol = 1e-15;
  int max_terms = 20000;
  double pole_guard = kDefaultPoleGuard;

  void validate() const {
    if (!(tol >= kEpsilon) || max_terms < 8 || !(pole_guard > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "EvalConfig requires tol >= machine epsilon, max_terms >= 8, "
                  "pole_guard > 0");
    }
  }
};

enum class EvalStatus { Converged, Budget, PoleHit, DivergentRegion };

inline std::string_view to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::Converged: return "Converged";
    case EvalStatus::Budget: return "Budget";
    case EvalStatus::PoleHit: return "PoleHit";
    case EvalStatus::DivergentRegion: return "DivergentRegion";
  }
  return "Unknown";
}

struct EvalResult {
  Complex value{0.0};
  double err = 0.0;
  int n_forward = 0;
  int n_backward = 0;
  /// First-order bound on rounding in the term recurrences and the
  /// summation. Not part of err, which bounds truncation only.
  double rounding_err = 0.0;
  EvalStatus status = EvalStatus::Converged;
  bool forward_terminated = false;
  bool backward_terminated = false;
  std::string detail;

  bool converged() const noexcept { return status == EvalStatus::Converged; }
};

struct ConvergenceRegion {
  bool forward_ok = false;
  bool backward_ok = false;
  /// Log-distance to the boundary; positive inside.
  double forward_margin = 0.0;
  double backward_margin = 0.0;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One parameter list flattened into factor kinds.
struct FactorSet {
  std::vector<Complex> plain;  // nonzero plain parameters
  std::vector<Complex> pairs;  // nonzero squared pairs
  int zero_count = 0;          // zero parameters, counted with pair multiplicity
  Complex coefficient{1.0};    // prod(-p) prod(-w) over nonzero entries
  int nonzero_count() const noexcept {
    return static_cast<int>(plain.size() + 2 * pairs.size());
  }
};

inline FactorSet make_factor_set(const ParamList& list, std::optional<Complex> extra) {
  FactorSet s;
  auto add_plain = [&](Complex p) {
    if (p == Complex(0.0)) {
      ++s.zero_count;
    } else {
      s.plain.push_back(p);
      s.coefficient *= -p;
    }
  };
  for (Complex p : list.plain) add_plain(p);
  if (extra) add_plain(*extra);
  for (Complex w : list.squared_pairs) {
    if (w == Complex(0.0)) {
      s.zero_count += 2;
    } else {
      s.pairs.push_back(w);
      s.coefficient *= -w;
    }
  }
  return s;
}

/// Product of factors at one index, split into its value and the smallest
/// factor modulus (for zero and pole detection).
struct FactorProduct {
  Complex value{1.0};
  double min_abs = kInf;
  Complex min_param{0.0};
  bool min_is_pair = false;
  int count = 0;
  /// sum |x| / |1 - x| over the factors (1 - x): cancellation in forming them.
  double cond = 0.0;

  std::string describe() const {
    return std::string(min_is_pair ? "squared pair " : "parameter ") + format_complex(min_param);
  }
};

/// Forward factors (1 - p v), (1 - w v^2) with v = q^k.
inline FactorProduct forward_factors(const FactorSet& s, Complex v) {
  FactorProduct out;
  const Complex v2 = v * v;
  auto take = [&](Complex f, Complex p, bool pair) {
    out.value *= f;
    const double m = std::abs(f);
    ++out.count;
    out.cond += m > 0.0 ? std::abs(Complex(1.0) - f) / m : 0.0;
    if (m < out.min_abs) {
      out.min_abs = m;
      out.min_param = p;
      out.min_is_pair = pair;
    }
  };
  for (Complex p : s.plain) take(Complex(1.0) - p * v, p, false);
  for (Complex w : s.pairs) take(Complex(1.0) - w * v2, w, true);
  return out;
}

/// Backward reduced factors (1 - u/p), (1 - u^2/w) with u = q^{|j|}.
inline FactorProduct backward_factors(const FactorSet& s, Complex u) {
  FactorProduct out;
  const Complex u2 = u * u;
  auto take = [&](Complex f, Complex p, bool pair) {
    out.value *= f;
    const double m = std::abs(f);
    ++out.count;
    out.cond += m > 0.0 ? std::abs(Complex(1.0) - f) / m : 0.0;
    if (m < out.min_abs) {
      out.min_abs = m;
      out.min_param = p;
      out.min_is_pair = pair;
    }
  };
  for (Complex p : s.plain) take(Complex(1.0) - u / p, p, false);
  for (Complex w : s.pairs) take(Complex(1.0) - u2 / w, w, true);
  return out;
}

/// Everything about a spec that the marches need, computed once.
struct Prepared {
  FactorSet num;
  FactorSet den;  // includes the implicit q of a unilateral series
  Complex q;
  Complex z;
  int e = 0;
  bool bilateral = false;
  /// Backward multiplier 1/ratio(j) = back_k * u^back_n * den(u)/num(u).
  Complex back_k{0.0};
  int back_n = 0;
  bool z_zero = false;
};

inline Prepared prepare(const SeriesSpec& spec) {
  Prepared p;
  p.q = spec.q().value();
  p.z = spec.z();
  p.e = spec.sign_exponent();
  p.bilateral = spec.kind() == SeriesKind::Bilateral;
  p.num = make_factor_set(spec.numerator(), std::nullopt);
  p.den = make_factor_set(spec.denominator(),
                          p.bilateral ? std::nullopt : std::optional<Complex>(p.q));
  p.z_zero = p.z == Complex(0.0);
  p.back_n = p.num.nonzero_count() - p.den.nonzero_count() + p.e;
  if (!p.z_zero) {
    const Complex sign = (p.e % 2 == 0) ? Complex(1.0) : Complex(-1.0);
    p.back_k = p.den.coefficient / (p.z * sign * p.num.coefficient);
  }
  return p;
}

inline Complex int_pow(Complex x, int n) {
  Complex r(1.0);
  const bool inv = n < 0;
  for (int i = 0, m = inv ? -n : n; i < m; ++i) r *= x;
  return inv ? Complex(1.0) / r : r;
}

/// Does a multiplying factor vanish somewhere in the direction?
inline bool forward_terminates(const Prepared& p, const QBase& q) {
  const double lq = -std::log(std::abs(p.q));
  auto hits = [&](Complex a, int mult) {
    // a q^{mult k} = 1  =>  k = log|a| / (mult * lq)
    const double k = std::log(std::abs(a)) / (mult * lq);
    const long k0 = std::lround(k);
    if (k0 < 0 || k0 > 100000) return false;
    const Complex v = q.pow(static_cast<int>(k0));
    const Complex f = Complex(1.0) - a * (mult == 1 ? v : v * v);
    return std::abs(f) <= kExactZeroSnap;
  };
  for (Complex a : p.num.plain)
    if (hits(a, 1)) return true;
  for (Complex w : p.num.pairs)
    if (hits(w, 2)) return true;
  return false;
}

inline bool backward_terminates(const Prepared& p, const QBase& q) {
  if (!p.bilateral) return true;
  const double lq = -std::log(std::abs(p.q));
  auto hits = [&](Complex b, int mult) {
    // b = q^{mult m}, m >= 1
    const double m = -std::log(std::abs(b)) / (mult * lq);
    const long m0 = std::lround(m);
    if (m0 < 1 || m0 > 100000) return false;
    const Complex u = q.pow(static_cast<int>(m0));
    const Complex f = Complex(1.0) - (mult == 1 ? u : u * u) / b;
    return std::abs(f) <= kExactZeroSnap;
  };
  for (Complex b : p.den.plain)
    if (hits(b, 1)) return true;
  for (Complex w : p.den.pairs)
    if (hits(w, 2)) return true;
  return false;
}

/// Asymptotic modulus of the term ratio in each direction.
inline double forward_asymptotic_ratio(const Prepared& p) {
  return p.e > 0 ? 0.0 : std::abs(p.z);
}

inline double backward_asymptotic_ratio(const Prepared& p) {
  if (p.z_zero) return kInf;
  if (p.back_n > 0) return 0.0;
  if (p.back_n < 0) return kInf;
  return std::abs(p.back_k);
}

struct March {
  Complex term{1.0};
  Complex sum{0.0};
  Complex power{1.0};  // q^k forward, q^{|j|} backward (next index)
  int n = 0;
  int small_run = 0;
  double last_ratio = 0.0;
  bool terminated = false;
  double term_rel = 0.0;  // relative rounding bound of the current term
  double rounding = 0.0;  // accumulated absolute rounding bound of sum
};

/// Rounding bookkeeping after a step multiplied the term by a ratio built
/// from `mult` and `div`.
inline void account_rounding(March& m, const FactorProduct& mult, const FactorProduct& div,
                             int extra_ops) {
  m.term_rel += kEpsilon * (3.0 * (mult.count + div.count + extra_ops) + mult.cond + div.cond);
  m.rounding += std::abs(m.term) * m.term_rel + kEpsilon * std::abs(m.sum);
}

struct StepFailure {
  EvalStatus status;
  std::string detail;
};

/// Forward step k -> k+1. Returns a failure or nullopt.
inline std::optional<StepFailure> forward_step(const Prepared& p, March& m,
                                               const EvalConfig& cfg) {
  const int k = m.n - 1;
  const Complex v = m.power;
  const FactorProduct mult = forward_factors(p.num, v);
  const FactorProduct div = forward_factors(p.den, v);
  if (mult.min_abs <= kExactZeroSnap) {
    if (div.min_abs < cfg.pole_guard) {
      return StepFailure{EvalStatus::PoleHit,
                         "Indeterminate: numerator " + mult.describe() + " and denominator " +
                             div.describe() + " vanish together at k = " + std::to_string(k)};
    }
    m.terminated = true;
    m.term = Complex(0.0);
    m.last_ratio = 0.0;
    return std::nullopt;
  }
  if (div.min_abs < cfg.pole_guard) {
    return StepFailure{EvalStatus::PoleHit, "denominator " + div.describe() +
                                                " hits a pole at k = " + std::to_string(k)};
  }
  Complex ratio = p.z * mult.value / div.value;
  if (p.e > 0) ratio *= int_pow(-v, p.e);
  m.term *= ratio;
  m.power *= p.q;
  m.last_ratio = std::abs(ratio);
  if (!is_finite(m.term)) {
    return StepFailure{EvalStatus::Budget, "forward term overflow at k = " + std::to_string(k + 1)};
  }
  m.sum += m.term;
  account_rounding(m, mult, div, 2 + p.e);
  ++m.n;
  if (m.term == Complex(0.0)) m.terminated = true;
  return std::nullopt;
}

/// Backward step j+1 -> j with j = -(n+1).
inline std::optional<StepFailure> backward_step(const Prepared& p, March& m,
                                                const EvalConfig& cfg) {
  const int j = -(m.n + 1);
  const Complex u = m.power;
  const FactorProduct mult = backward_factors(p.den, u);
  const FactorProduct div = backward_factors(p.num, u);
  if (mult.min_abs <= kExactZeroSnap) {
    if (div.min_abs < cfg.pole_guard) {
      return StepFailure{EvalStatus::PoleHit,
                         "Indeterminate: denominator " + mult.describe() + " and numerator " +
                             div.describe() + " vanish together at k = " + std::to_string(j)};
    }
    m.terminated = true;
    m.term = Complex(0.0);
    m.last_ratio = 0.0;
    return std::nullopt;
  }
  if (p.z_zero) {
    return StepFailure{EvalStatus::DivergentRegion,
                       "z = 0 makes the backward terms infinite"};
  }
  if (div.min_abs < cfg.pole_guard) {
    return StepFailure{EvalStatus::PoleHit, "numerator " + div.describe() +
                                                " hits a pole at k = " + std::to_string(j)};
  }
  const Complex factor = p.back_k * int_pow(u, p.back_n) * mult.value / div.value;
  m.term *= factor;
  m.power *= p.q;
  m.last_ratio = std::abs(factor);
  if (!is_finite(m.term)) {
    return StepFailure{EvalStatus::Budget, "backward term overflow at k = " + std::to_string(j)};
  }
  m.sum += m.term;
  account_rounding(m, mult, div, 2 + std::abs(p.back_n));
  ++m.n;
  if (m.term == Complex(0.0)) m.terminated = true;
  return std::nullopt;
}

inline bool is_small(const March& m, const EvalConfig& cfg) {
  return std::abs(m.term) <= cfg.tol * std::max(1.0, std::abs(m.sum));
}

/// Geometric tail bound; nullopt while the ratio is not safely below 1.
inline std::optional<double> tail_bound(const March& m, double asymptotic) {
  if (m.terminated) return 0.0;
  const double r = std::max(m.last_ratio, asymptotic);
  if (!(r < 0.95)) return std::nullopt;
  return std::abs(m.term) * r / (1.0 - r);
}

template <class Step>
std::optional<StepFailure> march_until_small(const Prepared& p, March& m,
                                             const EvalConfig& cfg, double asymptotic,
                                             Step step) {
  while (!m.terminated) {
    if (m.small_run >= 3 && tail_bound(m, asymptotic)) return std::nullopt;
    if (m.n >= cfg.max_terms) {
      return StepFailure{EvalStatus::Budget,
                         "max_terms = " + std::to_string(cfg.max_terms) + " exhausted"};
    }
    if (auto f = step(p, m, cfg)) return f;
    m.small_run = is_small(m, cfg) ? m.small_run + 1 : 0;
  }
  return std::nullopt;
}

inline EvalResult failed(EvalStatus status, std::string detail, const March& fw,
                         const March& bw) {
  EvalResult r;
  r.status = status;
  r.detail = std::move(detail);
  r.n_forward = fw.n;
  r.n_backward = bw.n;
  return r;
}

inline EvalResult evaluate(const Prepared& p, const QBase& q, const EvalConfig& cfg) {
  March fw;
  fw.sum = Complex(1.0);
  fw.n = 1;
  March bw;
  bw.power = p.q;
  bw.terminated = !p.bilateral;

  const double fw_asym = forward_asymptotic_ratio(p);
  const double bw_asym = backward_asymptotic_ratio(p);
  if (!(p.e > 0 || fw_asym < 1.0) && !forward_terminates(p, q)) {
    return failed(EvalStatus::DivergentRegion,
                  "forward direction diverges: |z| = " + format_double(std::abs(p.z)) + " >= 1",
                  fw, bw);
  }
  if (p.bilateral && !(bw_asym < 1.0) && !backward_terminates(p, q)) {
    return failed(EvalStatus::DivergentRegion,
                  "backward direction diverges: backward ratio " + format_double(bw_asym) +
                      " >= 1",
                  fw, bw);
  }

  auto run = [&](March& m, double asym, auto step) -> std::optional<StepFailure> {
    return march_until_small(p, m, cfg, asym, step);
  };
  if (auto f = run(fw, fw_asym, forward_step)) return failed(f->status, f->detail, fw, bw);
  if (auto f = run(bw, bw_asym, backward_step)) return failed(f->status, f->detail, fw, bw);

  for (;;) {
    const Complex value = fw.sum + bw.sum;
    const double err = *tail_bound(fw, fw_asym) + *tail_bound(bw, bw_asym) +
                       4.0 * kEpsilon * std::abs(value);
    if (err <= 10.0 * cfg.tol * std::abs(value) || std::abs(value) < cfg.tol) {
      EvalResult r;
      r.value = value;
      r.err = err;
      r.n_forward = fw.n;
      r.n_backward = bw.n;
      r.rounding_err = fw.rounding + bw.rounding + kEpsilon * std::abs(value);
      r.forward_terminated = fw.terminated;
      r.backward_terminated = p.bilateral && bw.terminated;
      return r;
    }
    // Partial sums cancel: keep marching until the tails are small relative
    // to the total.
    bool advanced = false;
    for (auto [m, asym, step] : {std::tuple{&fw, fw_asym, &forward_step},
                                 std::tuple{&bw, bw_asym, &backward_step}}) {
      if (m->terminated) continue;
      if (m->n >= cfg.max_terms) {
        return failed(EvalStatus::Budget,
                      "max_terms exhausted before the error bound met the tolerance", fw, bw);
      }
      if (auto f = step(p, *m, cfg)) return failed(f->status, f->detail, fw, bw);
      if (!m->terminated && !tail_bound(*m, asym)) {
        if (auto f = run(*m, asym, step)) return failed(f->status, f->detail, fw, bw);
      }
      advanced = true;
    }
    if (!advanced) {
      return failed(EvalStatus::Budget, "error bound cannot reach the tolerance", fw, bw);
    }
  }
}

}  // namespace detail

/// Ratio test for both directions. For e = 0 the forward series converges
/// iff |z| < 1 and the backward one iff |prod b| < |prod a * z|.
inline ConvergenceRegion convergence_region(const SeriesSpec& spec) {
  const detail::Prepared p = detail::prepare(spec);
  ConvergenceRegion r;
  if (p.e > 0) {
    r.forward_ok = true;
    r.forward_margin = detail::kInf;
  } else {
    r.forward_margin = -std::log(std::abs(p.z));
    r.forward_ok = r.forward_margin > 0.0;
  }
  if (!p.bilateral) {
    r.backward_ok = true;
    r.backward_margin = detail::kInf;
    return r;
  }
  const double ratio = detail::backward_asymptotic_ratio(p);
  r.backward_margin = ratio == 0.0 ? detail::kInf : -std::log(ratio);
  r.backward_ok = r.backward_margin > 0.0;
  return r;
}

/// t_{k+1}/t_k of the defining sum. Throws PoleHit when the ratio has a pole
/// (a vanishing denominator factor at k >= 0, or t_k = 0 for k < 0).
inline Complex term_ratio(const SeriesSpec& spec, int k,
                          double pole_guard = kDefaultPoleGuard) {
  const detail::Prepared p = detail::prepare(spec);
  if (k >= 0) {
    const Complex v = spec.q().pow(k);
    const auto num = detail::forward_factors(p.num, v);
    const auto den = detail::forward_factors(p.den, v);
    if (den.min_abs < pole_guard) {
      throw Error(ErrorCode::PoleHit, "denominator " + den.describe() + " vanishes at k = " +
                                          std::to_string(k));
    }
    Complex r = p.z * num.value / den.value;
    if (p.e > 0) r *= detail::int_pow(-v, p.e);
    return r;
  }
  if (!p.bilateral) {
    throw Error(ErrorCode::InvalidArgument, "negative index in a unilateral series");
  }
  // ratio(k) = 1/(K u^n den(u)/num(u)) with u = q^{-k}, written without 1/z.
  const Complex u = spec.q().pow(-k);
  const auto num = detail::backward_factors(p.num, u);
  const auto den = detail::backward_factors(p.den, u);
  if (den.min_abs < pole_guard) {
    throw Error(ErrorCode::PoleHit,
                "term t_" + std::to_string(k) + " vanishes (" + den.describe() + ")");
  }
  const Complex sign = (p.e % 2 == 0) ? Complex(1.0) : Complex(-1.0);
  const Complex r = p.z * sign * p.num.coefficient / p.den.coefficient *
                    detail::int_pow(u, -p.back_n) * num.value / den.value;
  if (!is_finite(r)) throw Error(ErrorCode::Budget, "term ratio overflow");
  return r;
}

/// sum_{k>=0} t_k of a unilateral series.
inline EvalResult eval_phi(const SeriesSpec& spec, const EvalConfig& cfg = {}) {
  cfg.validate();
  if (spec.kind() != SeriesKind::Unilateral) {
    throw Error(ErrorCode::InvalidArgument, "eval_phi needs a unilateral series");
  }
  return detail::evaluate(detail::prepare(spec), spec.q(), cfg);
}

/// sum over all integers k of a bilateral series: forward partial (k >= 0)
/// plus backward partial (k <= -1).
inline EvalResult eval_psi(const SeriesSpec& spec, const EvalConfig& cfg = {}) {
  cfg.validate();
  if (spec.kind() != SeriesKind::Bilateral) {
    throw Error(ErrorCode::InvalidArgument, "eval_psi needs a bilateral series");
  }
  return detail::evaluate(detail::prepare(spec), spec.q(), cfg);
}

/// Dispatches on the spec's kind.
inline EvalResult eval_series(const SeriesSpec& spec, const EvalConfig& cfg = {}) {
  return spec.kind() == SeriesKind::Unilateral ? eval_phi(spec, cfg) : eval_psi(spec, cfg);
}

}  // namespace qseries
