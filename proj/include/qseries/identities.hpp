#pragma once

// Catalog of bilateral and unilateral q-series identities. Every entry has a
// left and a right evaluator that share no intermediate value: each side
// builds its own series specs and products from the raw parameters.
//
// Notation used in the comments below:
//   W(A; b1..bn; z)   very-well-poised series with numerator A, qA^1/2,
//                     -qA^1/2, b1..bn and denominator A^1/2, -A^1/2, Aq/b1..
//   (x1, ..., xr)     (x1;q)_inf ... (xr;q)_inf
// The +-square-root pairs are always stored squared (qA^1/2, -qA^1/2 -> q^2 A).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qseries/core.hpp"
#include "qseries/qpochhammer.hpp"
#include "qseries/series.hpp"

namespace qseries {

/// Parameter values keyed by slot name, in slot order. The base is the
/// slot "q"; its invariant |q| < 1 is checked by every constraint.
class ParamAssignment {
 public:
  ParamAssignment() = default;
  ParamAssignment(std::initializer_list<std::pair<std::string, Complex>> values) {
    for (const auto& [k, v] : values) set(k, v);
  }

  void set(const std::string& name, Complex value) {
    for (auto& [k, v] : values_) {
      if (k == name) {
        v = value;
        return;
      }
    }
    values_.emplace_back(name, value);
  }

  bool contains(std::string_view name) const {
    return std::any_of(values_.begin(), values_.end(),
                       [&](const auto& kv) { return kv.first == name; });
  }

  Complex at(std::string_view name) const {
    for (const auto& [k, v] : values_) {
      if (k == name) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "missing parameter slot '" + std::string(name) + "'");
  }

  template <class... Names>
  std::array<Complex, sizeof...(Names)> get(Names... names) const {
    return {at(names)...};
  }

  QBase q() const { return QBase(at("q")); }

  const std::vector<std::pair<std::string, Complex>>& entries() const noexcept {
    return values_;
  }

  friend bool operator==(const ParamAssignment&, const ParamAssignment&) = default;

 private:
  std::vector<std::pair<std::string, Complex>> values_;
};

/// One modulus inequality `lhs < bound` of a convergence constraint.
struct Condition {
  std::string text;
  double lhs = 0.0;
  double bound = 1.0;

  bool holds() const noexcept { return lhs < bound; }
  /// log(bound / lhs): the log-modulus distance from the boundary.
  double margin() const noexcept {
    if (lhs == 0.0) return bound > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::log(bound / lhs);
  }
};

/// A side of an identity evaluated at one parameter point.
struct SideValue {
  Complex value{0.0};
  double err = 0.0;
  /// Summands making up the side (several for multi-term right sides).
  std::vector<Complex> terms;
  /// Every series evaluated on this side, in evaluation order.
  std::vector<EvalResult> series;
  /// Derived slots (mu, lambda, ...) as recomputed by this side.
  std::vector<std::pair<std::string, Complex>> derived;
};

using SideEvaluator = std::function<SideValue(const ParamAssignment&, const EvalConfig&)>;
using ConstraintFn = std::function<std::vector<Condition>(const ParamAssignment&)>;

struct IdentityDescriptor {
  std::string id;
  std::string name;
  std::vector<std::string> slots;
  std::string constraint_text;
  std::string citation;
  ConstraintFn conditions;  // excludes the |q| < 1 condition, see constraint()
  SideEvaluator lhs;
  SideEvaluator rhs;

  /// All conditions, starting with 0 < |q| < 1.
  std::vector<Condition> constraint(const ParamAssignment& p) const {
    const double mq = std::abs(p.at("q"));
    std::vector<Condition> out{{"|q| < 1", mq, 1.0}};
    if (!(mq > 0.0) || !(mq < 1.0)) return out;
    for (auto& c : conditions(p)) out.push_back(std::move(c));
    return out;
  }

  bool admits(const ParamAssignment& p) const {
    const auto cs = constraint(p);
    return std::all_of(cs.begin(), cs.end(), [](const Condition& c) { return c.holds(); }) &&
           std::abs(p.at("q")) > 0.0;
  }
};

struct IdentityCheck {
  Complex lhs{0.0};
  Complex rhs{0.0};
  double abs_residual = 0.0;
  /// |lhs - rhs| / max(|lhs|, |rhs|, 1e-300)
  double rel_residual = 0.0;
  /// lhs.err + rhs.err (absolute)
  double combined_err = 0.0;
  double tol_check = 0.0;
  bool passed = false;
  SideValue lhs_side;
  SideValue rhs_side;
};

/// Floor of the pass tolerance on rel_residual.
inline constexpr double kCheckToleranceFloor = 1e-8;
/// Multiple of the propagated (relative) error admitted on top of the floor.
inline constexpr double kCheckErrorFactor = 50.0;

namespace detail {

inline Estimate operator*(const Estimate& a, const Estimate& b) {
  const Complex v = a.value * b.value;
  return {v, std::abs(a.value) * b.err + std::abs(b.value) * a.err + a.err * b.err +
                 2.0 * kEpsilon * std::abs(v)};
}

inline Estimate operator+(const Estimate& a, const Estimate& b) {
  const Complex v = a.value + b.value;
  return {v, a.err + b.err + kEpsilon * std::abs(v)};
}

inline Estimate operator-(const Estimate& a, const Estimate& b) {
  const Complex v = a.value - b.value;
  return {v, a.err + b.err + kEpsilon * std::abs(v)};
}

inline Estimate exact(Complex v) { return {v, 0.0}; }

inline ErrorCode error_code(EvalStatus s) {
  switch (s) {
    case EvalStatus::PoleHit: return ErrorCode::PoleHit;
    case EvalStatus::DivergentRegion: return ErrorCode::DivergentRegion;
    default: return ErrorCode::Budget;
  }
}

/// Accumulates one side: products, series and the derived slots it used.
class Side {
 public:
  Side(const ParamAssignment& p, const EvalConfig& cfg) : q_(p.q()), cfg_(cfg) {
    cfg_.validate();
  }

  const QBase& base() const noexcept { return q_; }
  Complex q() const noexcept { return q_.value(); }

  Complex derive(std::string name, Complex v) {
    out_.derived.emplace_back(std::move(name), v);
    return v;
  }

  /// (num_1, ..., num_r; q)_inf / (den_1, ..., den_s; q)_inf. Numerator
  /// products may vanish; denominator factors are pole-guarded.
  Estimate quotient(std::initializer_list<Complex> num, std::initializer_list<Complex> den) {
    ProductConfig pc;
    pc.tol = cfg_.tol * 1e-2;
    pc.pole_guard = cfg_.pole_guard;
    pc.allow_zero = true;
    const std::vector<Complex> nv(num), dv(den);
    const Estimate n = poch_multi(nv, q_, kInfinity, pc);
    pc.allow_zero = false;
    const Estimate d = poch_multi(dv, q_, kInfinity, pc);
    if (d.value == Complex(0.0)) {
      throw Error(ErrorCode::PoleHit, "vanishing denominator product");
    }
    const Complex v = n.value / d.value;
    const double ad = std::abs(d.value);
    return {v, (n.err + std::abs(v) * d.err) / ad + 2.0 * kEpsilon * std::abs(v)};
  }

  Estimate series(const SeriesSpec& spec) {
    EvalResult r = eval_series(spec, cfg_);
    if (!r.converged()) {
      throw Error(error_code(r.status), "series " + std::to_string(out_.series.size()) + ": " +
                                            r.detail);
    }
    const Estimate e{r.value, r.err + r.rounding_err};
    out_.series.push_back(std::move(r));
    return e;
  }

  /// Very-well-poised bilateral W(A; params; z).
  Estimate vwp_psi(Complex a, std::initializer_list<Complex> params, Complex z) {
    return series(very_well_poised(SeriesKind::Bilateral, a, params, z));
  }

  /// Very-well-poised unilateral W(A; params; z); A itself is a numerator
  /// parameter and q the implicit denominator.
  Estimate vwp_phi(Complex a, std::initializer_list<Complex> params, Complex z) {
    return series(very_well_poised(SeriesKind::Unilateral, a, params, z));
  }

  Estimate psi(ParamList num, ParamList den, Complex z) {
    return series(SeriesSpec::bilateral(std::move(num), std::move(den), q_, z));
  }

  Estimate phi(ParamList num, ParamList den, Complex z) {
    return series(SeriesSpec::unilateral(std::move(num), std::move(den), q_, z));
  }

  SideValue finish(std::initializer_list<Estimate> terms) {
    Estimate total{Complex(0.0), 0.0};
    for (const Estimate& t : terms) {
      out_.terms.push_back(t.value);
      total = out_.terms.size() == 1 ? t : total + t;
    }
    out_.value = total.value;
    out_.err = total.err;
    if (!is_finite(out_.value) || !std::isfinite(out_.err)) {
      throw Error(ErrorCode::Budget, "side value overflow");
    }
    return std::move(out_);
  }

 private:
  SeriesSpec very_well_poised(SeriesKind kind, Complex a, std::initializer_list<Complex> params,
                              Complex z) const {
    const Complex q = q_.value();
    ParamList num, den;
    if (kind == SeriesKind::Unilateral) num.plain.push_back(a);
    num.squared_pairs.push_back(q * q * a);
    den.squared_pairs.push_back(a);
    for (Complex b : params) {
      num.plain.push_back(b);
      den.plain.push_back(a * q / b);
    }
    return {kind, std::move(num), std::move(den), q_, z};
  }

  QBase q_;
  EvalConfig cfg_;
  SideValue out_;
};

inline Condition below_one(std::string text, Complex v) { return {std::move(text), std::abs(v), 1.0}; }

// Derived slots. Each side calls these itself.

inline Complex thm3_mu(const ParamAssignment& p) {
  const auto [q, a, b, c, d, e] = p.get("q", "a", "b", "c", "d", "e");
  return b * c * d * e / (a * q);
}

inline Complex watson_lambda(const ParamAssignment& p) {
  const auto [q, a, b, c, d] = p.get("q", "a", "b", "c", "d");
  return a * a * q / (b * c * d);
}

/// Jouhet's argument c = a^3 q^2 / (b d e f g h).
inline Complex jouhet_c(const ParamAssignment& p) {
  const auto [q, a, b, d, e, f, g, h] = p.get("q", "a", "b", "d", "e", "f", "g", "h");
  return a * a * a * q * q / (b * d * e * f * g * h);
}

/// Jouhet's lambda = a^2 q / (c d e).
inline Complex jouhet_lambda(const ParamAssignment& p) {
  const auto [q, a, d, e] = p.get("q", "a", "d", "e");
  return a * a * q / (jouhet_c(p) * d * e);
}

/// S(l, m, n, r) = (l, q/l, m, q/m, n, q/n, r, q/r)
inline Estimate theta_s(Side& s, Complex l, Complex m, Complex n, Complex r) {
  const Complex q = s.q();
  return s.quotient({l, q / l, m, q / m, n, q / n, r, q / r}, {});
}

// ---------------------------------------------------------------------------
// Entries
// ---------------------------------------------------------------------------

inline IdentityDescriptor ramanujan_1psi1() {
  IdentityDescriptor d;
  d.id = "ramanujan_1psi1";
  d.name = "Ramanujan's 1psi1 summation";
  d.slots = {"q", "a", "b", "z"};
  d.constraint_text = "|b/a| < |z| < 1";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Appendix II. 29";
  d.conditions = [](const ParamAssignment& p) {
    const auto [a, b, z] = p.get("a", "b", "z");
    return std::vector<Condition>{{"|b/a| < |z|", std::abs(b / a), std::abs(z)},
                                  below_one("|z| < 1", z)};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, z] = p.get("a", "b", "z");
    return s.finish({s.psi({{a}, {}}, {{b}, {}}, z)});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, z] = p.get("a", "b", "z");
    const Complex q = s.q();
    return s.finish({s.quotient({q, b / a, a * z, q / (a * z)}, {b, q / a, z, b / (a * z)})});
  };
  return d;
}

inline IdentityDescriptor bailey_6psi6() {
  IdentityDescriptor d;
  d.id = "bailey_6psi6";
  d.name = "Bailey's very-well-poised 6psi6 summation";
  d.slots = {"q", "a", "b", "c", "d", "e"};
  d.constraint_text = "|a^2 q/bcde| < 1";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Appendix II. 33";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, dd, e] = p.get("q", "a", "b", "c", "d", "e");
    return std::vector<Condition>{below_one("|a^2 q/bcde| < 1", a * a * q / (b * c * dd * e))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, dd, e] = p.get("a", "b", "c", "d", "e");
    const Complex q = s.q();
    return s.finish({s.vwp_psi(a, {b, c, dd, e}, a * a * q / (b * c * dd * e))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, dd, e] = p.get("a", "b", "c", "d", "e");
    const Complex q = s.q();
    const Complex aq = a * q;
    return s.finish({s.quotient(
        {q, aq, q / a, aq / (b * c), aq / (b * dd), aq / (b * e), aq / (c * dd), aq / (c * e),
         aq / (dd * e)},
        {q / b, q / c, q / dd, q / e, aq / b, aq / c, aq / dd, aq / e,
         a * a * q / (b * c * dd * e)})});
  };
  return d;
}

/// 2psi2(b, c; aq/b, aq/c; aqx/bc) as a prefactor times a well-poised 8psi8 in ax.
inline IdentityDescriptor thm1_2psi2_to_8psi8() {
  IdentityDescriptor d;
  d.id = "thm1_2psi2_to_8psi8";
  d.name = "2psi2 to well-poised 8psi8 transformation";
  d.slots = {"q", "a", "b", "c", "x"};
  d.constraint_text = "max{|aq/bcx|, |aqx/bc|} < 1";
  d.citation = "bilateral transformation, 2psi2 -> 8psi8 (first two-term form)";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, x] = p.get("q", "a", "b", "c", "x");
    return std::vector<Condition>{below_one("|aq/bcx| < 1", a * q / (b * c * x)),
                                  below_one("|aqx/bc| < 1", a * q * x / (b * c))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, x] = p.get("a", "b", "c", "x");
    const Complex q = s.q();
    return s.finish({s.psi({{b, c}, {}}, {{a * q / b, a * q / c}, {}}, a * q * x / (b * c))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, x] = p.get("a", "b", "c", "x");
    const Complex q = s.q();
    const Estimate pre = s.quotient(
        {q / a, a * q / (b * c), q / (b * x), q / (c * x), q * x, a * q * x * x},
        {q / b, q / c, a * q / (b * c * x), q / (a * x), a * q * x, q * x * x});
    // pairs: q(ax)^1/2, (aq)^1/2, a^1/2 over (ax)^1/2, x(aq)^1/2, xqa^1/2
    const Estimate series = s.psi({{b * x, c * x}, {q * q * a * x, a * q, a}},
                                  {{a * q / b, a * q / c}, {a * x, x * x * a * q, x * x * q * q * a}},
                                  a * q * x / (b * c));
    return s.finish({pre * series});
  };
  return d;
}

/// 4psi4 well-poised in a as a prefactor times an 8psi8 in ax.
inline IdentityDescriptor thm2_4psi4_to_8psi8() {
  IdentityDescriptor d;
  d.id = "thm2_4psi4_to_8psi8";
  d.name = "well-poised 4psi4 to 8psi8 transformation";
  d.slots = {"q", "a", "b", "c", "x"};
  d.constraint_text = "max{|aq/bcx|, |ax/bcq|} < 1";
  d.citation = "bilateral transformation, 4psi4 -> 8psi8 (second two-term form)";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, x] = p.get("q", "a", "b", "c", "x");
    return std::vector<Condition>{below_one("|aq/bcx| < 1", a * q / (b * c * x)),
                                  below_one("|ax/bcq| < 1", a * x / (b * c * q))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, x] = p.get("a", "b", "c", "x");
    const Complex q = s.q();
    return s.finish({s.psi({{b, c}, {q * q * a}}, {{a * q / b, a * q / c}, {a}},
                           a * x / (b * c * q))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, x] = p.get("a", "b", "c", "x");
    const Complex q = s.q();
    const Estimate pre = s.quotient(
        {q / a, a * q / (b * c), q / (b * x), q / (c * x), x / q, a * x * x},
        {q / b, q / c, a * q / (b * c * x), q / (a * x), a * q * x, x * x / q});
    const Estimate series = s.psi({{b * x, c * x}, {q * q * a * x, a * q, q * q * a}},
                                  {{a * q / b, a * q / c}, {a * x, x * x * a * q, x * x * a}},
                                  a * x / (b * c * q));
    return s.finish({pre * series});
  };
  return d;
}

struct Thm3Params {
  Complex q, a, b, c, d, e, f, g;
};

inline Thm3Params thm3_params(const ParamAssignment& p) {
  const auto [q, a, b, c, d, e, f, g] = p.get("q", "a", "b", "c", "d", "e", "f", "g");
  return {q, a, b, c, d, e, f, g};
}

/// Very-well-poised 8psi8 = prefactor * 8psi8 (in mu) + prefactor * 8phi7 (in b^2/a).
/// Prefactor reading: "aq/f, g" is aq/(fg) and "a^2q/mu f, g" is a^2q/(mu fg).
inline IdentityDescriptor thm3_8psi8_three_term() {
  IdentityDescriptor d;
  d.id = "thm3_8psi8_three_term";
  d.name = "very-well-poised 8psi8 three-term transformation";
  d.slots = {"q", "a", "b", "c", "d", "e", "f", "g"};
  d.constraint_text = "max{|a^3q^2/bcdefg|, |aq/fg|} < 1, mu = bcde/aq";
  d.citation = "bilateral transformation, 8psi8 -> 8psi8 + 8phi7 (three-term form)";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, dd, e, f, g] = thm3_params(p);
    return std::vector<Condition>{
        below_one("|a^3q^2/bcdefg| < 1", a * a * a * q * q / (b * c * dd * e * f * g)),
        below_one("|aq/fg| < 1", a * q / (f * g))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    s.derive("mu", thm3_mu(p));
    const auto [q, a, b, c, dd, e, f, g] = thm3_params(p);
    return s.finish(
        {s.vwp_psi(a, {b, c, dd, e, f, g}, a * a * a * q * q / (b * c * dd * e * f * g))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const Complex mu = s.derive("mu", thm3_mu(p));
    const auto [q, a, b, c, dd, e, f, g] = thm3_params(p);
    const Complex aq = a * q;
    const Estimate pre1 = s.quotient(
        {aq, q / a, aq / (c * dd), aq / (c * e), aq / (dd * e), aq / (f * g), b / a, mu * q / c,
         mu * q / dd, mu * q / e, aq / (mu * f), aq / (mu * g)},
        {q / f, q / g, aq / c, aq / dd, aq / e, b * c / a, b * dd / a, b * e / a, b / mu, mu * q,
         q / mu, a * aq / (mu * f * g)});
    const Estimate psi = s.vwp_psi(mu, {b, c, dd, e, mu * f / a, mu * g / a}, aq / (f * g));
    const Complex bcde = b * c * dd * e;
    const Complex cde = c * dd * e;
    const Estimate pre2 = s.quotient(
        {q, aq, q / a, c, dd, e, b * q / c, b * q / dd, b * q / e, b * q / f, b * q / g,
         aq / (b * f), aq / (b * g), bcde / (a * aq), aq * aq / bcde},
        {q / f, q / g, aq / b, aq / c, aq / dd, aq / e, aq / f, aq / g, b * c / a, b * dd / a,
         b * e / a, q / b, b * b * q / a, cde / aq, aq * q / cde});
    const Estimate phi =
        s.vwp_phi(b * b / a, {b * c / a, b * dd / a, b * e / a, b * f / a, b * g / a},
                  a * a * a * q * q / (b * c * dd * e * f * g));
    return s.finish({pre1 * psi, pre2 * phi});
  };
  return d;
}

inline IdentityDescriptor cor4() {
  IdentityDescriptor d;
  d.id = "cor4";
  d.name = "2psi2 to very-well-poised 8phi7 (x = 1/c)";
  d.slots = {"q", "a", "b", "c"};
  d.constraint_text = "max{|aq/b|, |aq/bc^2|} < 1";
  d.citation = "specialization x = 1/c of the 2psi2 -> 8psi8 transformation";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c] = p.get("q", "a", "b", "c");
    return std::vector<Condition>{below_one("|aq/b| < 1", a * q / b),
                                  below_one("|aq/bc^2| < 1", a * q / (b * c * c))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c] = p.get("a", "b", "c");
    const Complex q = s.q();
    return s.finish({s.psi({{b, c}, {}}, {{a * q / b, a * q / c}, {}}, a * q / (b * c * c))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c] = p.get("a", "b", "c");
    const Complex q = s.q();
    const Estimate pre =
        s.quotient({q, q / a, a * q / (b * c), a * q / (c * c), c * q / b},
                   {q / b, q / (c * c), a * q / b, a * q / c, c * q / a});
    // pairs: q(c/a)^1/2, c(q/a)^1/2, c/a^1/2 over (c/a)^1/2, (q/a)^1/2, q/a^1/2
    const Estimate series =
        s.phi({{c / a, b / a}, {q * q * c / a, c * c * q / a, c * c / a}},
              {{c * q / b}, {c / a, q / a, q * q / a}}, a * q / (b * c * c));
    return s.finish({pre * series});
  };
  return d;
}

inline IdentityDescriptor cor5() {
  IdentityDescriptor d;
  d.id = "cor5";
  d.name = "well-poised 4psi4 to very-well-poised 8phi7 (x = 1/c)";
  d.slots = {"q", "a", "b", "c"};
  d.constraint_text = "max{|aq/b|, |a/bc^2q|} < 1";
  d.citation = "specialization x = 1/c of the 4psi4 -> 8psi8 transformation";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c] = p.get("q", "a", "b", "c");
    return std::vector<Condition>{below_one("|aq/b| < 1", a * q / b),
                                  below_one("|a/bc^2q| < 1", a / (b * c * c * q))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c] = p.get("a", "b", "c");
    const Complex q = s.q();
    return s.finish({s.psi({{b, c}, {q * q * a}}, {{a * q / b, a * q / c}, {a}},
                           a / (b * c * c * q))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c] = p.get("a", "b", "c");
    const Complex q = s.q();
    const Estimate pre =
        s.quotient({q, q / a, 1.0 / (c * q), a * q / (b * c), a / (c * c), c * q / b},
                   {q / b, q / c, 1.0 / (c * c * q), a * q / b, a * q / c, c * q / a});
    const Estimate series =
        s.phi({{c / a, b / a}, {q * q * c / a, c * c * q / a, c * c * q * q / a}},
              {{c * q / b}, {c / a, q / a, 1.0 / a}}, a / (b * c * c * q));
    return s.finish({pre * series});
  };
  return d;
}

inline IdentityDescriptor rogers_6phi5() {
  IdentityDescriptor d;
  d.id = "rogers_6phi5";
  d.name = "Rogers' very-well-poised 6phi5 summation";
  d.slots = {"q", "a", "b", "c", "d"};
  d.constraint_text = "|aq/bcd| < 1";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Appendix II. 21";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, dd] = p.get("q", "a", "b", "c", "d");
    return std::vector<Condition>{below_one("|aq/bcd| < 1", a * q / (b * c * dd))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, dd] = p.get("a", "b", "c", "d");
    const Complex q = s.q();
    return s.finish({s.vwp_phi(a, {b, c, dd}, a * q / (b * c * dd))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, dd] = p.get("a", "b", "c", "d");
    const Complex aq = a * s.q();
    return s.finish({s.quotient({aq, aq / (b * c), aq / (b * dd), aq / (c * dd)},
                                {aq / b, aq / c, aq / dd, aq / (b * c * dd)})});
  };
  return d;
}

inline IdentityDescriptor watson_III23() {
  IdentityDescriptor d;
  d.id = "watson_III23";
  d.name = "very-well-poised 8phi7 two-term transformation";
  d.slots = {"q", "a", "b", "c", "d", "e", "f"};
  d.constraint_text = "max{|a^2q^2/bcdef|, |aq/ef|} < 1, lambda = a^2q/bcd";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Appendix III. 23";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, dd, e, f] = p.get("q", "a", "b", "c", "d", "e", "f");
    return std::vector<Condition>{
        below_one("|a^2q^2/bcdef| < 1", a * a * q * q / (b * c * dd * e * f)),
        below_one("|aq/ef| < 1", a * q / (e * f))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    s.derive("lambda", watson_lambda(p));
    const auto [a, b, c, dd, e, f] = p.get("a", "b", "c", "d", "e", "f");
    const Complex q = s.q();
    return s.finish({s.vwp_phi(a, {b, c, dd, e, f}, a * a * q * q / (b * c * dd * e * f))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const Complex l = s.derive("lambda", watson_lambda(p));
    const auto [a, b, c, dd, e, f] = p.get("a", "b", "c", "d", "e", "f");
    const Complex q = s.q();
    const Estimate pre = s.quotient({a * q, a * q / (e * f), l * q / e, l * q / f},
                                    {a * q / e, a * q / f, l * q, l * q / (e * f)});
    const Estimate series = s.vwp_phi(l, {l * b / a, l * c / a, l * dd / a, e, f}, a * q / (e * f));
    return s.finish({pre * series});
  };
  return d;
}

inline IdentityDescriptor three_term_S() {
  IdentityDescriptor d;
  d.id = "three_term_S";
  d.name = "three-term theta product relation";
  d.slots = {"q", "x", "lambda", "mu", "nu"};
  d.constraint_text = "none beyond pole guards; S(l,m,n,r) = (l,q/l,m,q/m,n,q/n,r,q/r)";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Exercise 2.16";
  d.conditions = [](const ParamAssignment&) { return std::vector<Condition>{}; };
  // S(x lambda, x/lambda, mu nu, mu/nu) - S(x nu, x/nu, lambda mu, mu/lambda)
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [x, l, m, n] = p.get("x", "lambda", "mu", "nu");
    const Estimate s1 = theta_s(s, x * l, x / l, m * n, m / n);
    const Estimate s2 = theta_s(s, x * n, x / n, l * m, m / l);
    return s.finish({s1 - s2});
  };
  // (mu/lambda) S(x mu, x/mu, lambda nu, lambda/nu)
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [x, l, m, n] = p.get("x", "lambda", "mu", "nu");
    return s.finish({exact(m / l) * theta_s(s, x * m, x / m, l * n, l / n)});
  };
  return d;
}

inline IdentityDescriptor jouhet_eq3() {
  IdentityDescriptor d;
  d.id = "jouhet_eq3";
  d.name = "Jouhet's 8psi8 four-term identity";
  d.slots = {"q", "a", "b", "d", "e", "f", "g", "h"};
  d.constraint_text = "max{|c|, |lambda c/a|} < 1, c = a^3q^2/bdefgh, lambda = a^2q/cde";
  d.citation = "F. Jouhet, Ann. Combin. 11 (2007), 47-57";
  d.conditions = [](const ParamAssignment& p) {
    const Complex c = jouhet_c(p);
    const Complex l = jouhet_lambda(p);
    const Complex a = p.at("a");
    return std::vector<Condition>{below_one("|c| < 1", c), below_one("|lambda c/a| < 1", l * c / a)};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const Complex c = s.derive("c", jouhet_c(p));
    s.derive("lambda", jouhet_lambda(p));
    const auto [a, b, dd, e, f, g, h] = p.get("a", "b", "d", "e", "f", "g", "h");
    return s.finish({s.vwp_psi(a, {b, dd, e, f, g, h}, c)});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const Complex c = s.derive("c", jouhet_c(p));
    const Complex l = s.derive("lambda", jouhet_lambda(p));
    const auto [a, b, dd, e, f, g, h] = p.get("a", "b", "d", "e", "f", "g", "h");
    const Complex q = s.q();
    const Complex aq = a * q;
    const Estimate pre1 = s.quotient(
        {aq, q / a, l * c / a, aq / (l * dd), aq / (l * e), b / a, b * f / l, b * g / l,
         b * h / l, l * q / f, l * q / g, l * q / h},
        {l * q, q / l, c, q / dd, q / e, b / l, b * f / a, b * g / a, b * h / a, aq / f, aq / g,
         aq / h});
    const Estimate psi = s.vwp_psi(l, {b, l * dd / a, l * e / a, f, g, h}, l * c / a);
    const Estimate pre2 = s.quotient(
        {q, q / a, c / b, aq, b * q / c, b * q / dd, b * q / e, b * q / f, b * q / g, b * q / h,
         dd, e, f, g, h},
        {q / b, c / a, b * b * q / a, aq / b, aq / c, b * dd / a, b * e / a, b * f / a,
         b * g / a, b * h / a, aq / dd, aq / e, aq / f, aq / g, aq / h});
    const Estimate phi1 =
        s.vwp_phi(b * b / a, {b * dd / a, b * e / a, b * f / a, b * g / a, b * h / a}, c);
    const Estimate pre3 = s.quotient(
        {q, q / a, b / a, aq / (l * dd), aq / (l * e), l * c / (a * b), aq, f, g, h, l * c / a,
         l * dd / a, l * e / a, b * q / f, b * q / g, b * q / h, a * b * q / (l * c),
         a * b * q / (l * dd), a * b * q / (l * e)},
        {c, c / a, q / b, q / dd, q / e, b * q / l, b * b * q / l, aq / f, aq / g, aq / h,
         b * dd / a, b * e / a, b * f / a, b * g / a, b * h / a, l / b, aq / c, aq / dd, aq / e});
    const Estimate phi2 =
        s.vwp_phi(b * b / l, {b * dd / a, b * e / a, b * f / l, b * g / l, b * h / l}, l * c / a);
    return s.finish({pre1 * psi, exact(b / a) * pre2 * phi1, pre3 * phi2});
  };
  return d;
}

inline IdentityDescriptor gasper_347() {
  IdentityDescriptor d;
  d.id = "gasper_347";
  d.name = "well-poised 2phi1 to 8phi7 transformation";
  d.slots = {"q", "a", "b", "x"};
  d.constraint_text = "|qx/b^2| < 1";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Equation (3.4.7)";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, b, x] = p.get("q", "b", "x");
    return std::vector<Condition>{below_one("|qx/b^2| < 1", q * x / (b * b))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, x] = p.get("a", "b", "x");
    const Complex q = s.q();
    return s.finish({s.phi({{a, b}, {}}, {{a * q / b}, {}}, q * x / (b * b))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, x] = p.get("a", "b", "x");
    const Complex q = s.q();
    const Complex bb = b * b;
    const Estimate pre =
        s.quotient({x * q / b, a * q * x * x / bb}, {a * q * x / b, q * x * x / bb});
    const Estimate series =
        s.phi({{a * x / b, x}, {q * q * a * x / b, a * q, a}},
              {{a * q / b}, {a * x / b, x * x * a * q / bb, x * x * q * q * a / bb}}, q * x / bb);
    return s.finish({pre * series});
  };
  return d;
}

inline IdentityDescriptor gasper_348() {
  IdentityDescriptor d;
  d.id = "gasper_348";
  d.name = "well-poised 4phi3 to 8phi7 transformation";
  d.slots = {"q", "a", "b", "x"};
  d.constraint_text = "|x/b^2q| < 1";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Equation (3.4.8)";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, b, x] = p.get("q", "b", "x");
    return std::vector<Condition>{below_one("|x/b^2q| < 1", x / (b * b * q))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, x] = p.get("a", "b", "x");
    const Complex q = s.q();
    return s.finish({s.vwp_phi(a, {b}, x / (b * b * q))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, x] = p.get("a", "b", "x");
    const Complex q = s.q();
    const Complex bb = b * b;
    const Estimate pre =
        s.quotient({a * x * x / bb, x / (b * q)}, {a * q * x / b, x * x / (bb * q)});
    const Estimate series =
        s.phi({{a * x / b, x}, {q * q * a * x / b, a * q, q * q * a}},
              {{a * q / b}, {a * x / b, x * x * a * q / bb, x * x * a / bb}}, x / (bb * q));
    return s.finish({pre * series});
  };
  return d;
}

/// Two-term 8phi7 relation. The first prefactor's denominator carries efq/c.
inline IdentityDescriptor bailey_III37() {
  IdentityDescriptor d;
  d.id = "bailey_III37";
  d.name = "very-well-poised 8phi7 three-term relation";
  d.slots = {"q", "a", "b", "c", "d", "e", "f"};
  d.constraint_text = "max{|a^2q^2/bcdef|, |bd/a|} < 1";
  d.citation = "Gasper-Rahman, Basic Hypergeometric Series (2004), Appendix III. 37";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, dd, e, f] = p.get("q", "a", "b", "c", "d", "e", "f");
    return std::vector<Condition>{
        below_one("|a^2q^2/bcdef| < 1", a * a * q * q / (b * c * dd * e * f)),
        below_one("|bd/a| < 1", b * dd / a)};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, dd, e, f] = p.get("a", "b", "c", "d", "e", "f");
    const Complex q = s.q();
    return s.finish({s.vwp_phi(a, {b, c, dd, e, f}, a * a * q * q / (b * c * dd * e * f))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, dd, e, f] = p.get("a", "b", "c", "d", "e", "f");
    const Complex q = s.q();
    const Complex aq = a * q;
    const Estimate pre1 = s.quotient(
        {aq, aq / (dd * e), aq / (dd * f), aq / (e * f), e * q / c, f * q / c, b / a,
         b * e * f / a},
        {aq / dd, aq / e, aq / f, aq / (dd * e * f), q / c, e * f * q / c, b * e / a, b * f / a});
    const Estimate phi1 =
        s.vwp_phi(e * f / c, {aq / (b * c), aq / (c * dd), e * f / a, e, f}, b * dd / a);
    const Complex bdef = b * dd * e * f;
    const Estimate pre2 = s.quotient(
        {aq, b * q / a, b * q / c, b * q / dd, b * q / e, b * q / f, dd, e, f, aq / (b * c),
         bdef / (a * a), a * aq / bdef},
        {aq / b, aq / c, aq / dd, aq / e, aq / f, b * dd / a, b * e / a, b * f / a,
         dd * e * f / a, aq / (dd * e * f), q / c, b * b * q / a});
    const Estimate phi2 = s.vwp_phi(b * b / a, {b, b * c / a, b * dd / a, b * e / a, b * f / a},
                                    a * a * q * q / (b * c * dd * e * f));
    return s.finish({pre1 * phi1, exact(b / a) * pre2 * phi2});
  };
  return d;
}

inline IdentityDescriptor lemma8_8phi7_three_term() {
  IdentityDescriptor d;
  d.id = "lemma8_8phi7_three_term";
  d.name = "very-well-poised 8phi7 three-term relation in mu";
  d.slots = {"q", "a", "b", "c", "d", "e", "f"};
  d.constraint_text = "max{|q/f|, |a^2q^2/bcdef|} < 1, mu = bcde/aq";
  d.citation = "8phi7 three-term relation (Watson transformation composed with Appendix III. 37)";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, dd, e, f] = p.get("q", "a", "b", "c", "d", "e", "f");
    return std::vector<Condition>{
        below_one("|q/f| < 1", q / f),
        below_one("|a^2q^2/bcdef| < 1", a * a * q * q / (b * c * dd * e * f))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    s.derive("mu", thm3_mu(p));
    const auto [a, b, c, dd, e, f] = p.get("a", "b", "c", "d", "e", "f");
    const Complex q = s.q();
    return s.finish({s.vwp_phi(a, {b, c, dd, e, f}, a * a * q * q / (b * c * dd * e * f))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const Complex mu = s.derive("mu", thm3_mu(p));
    const auto [a, b, c, dd, e, f] = p.get("a", "b", "c", "d", "e", "f");
    const Complex q = s.q();
    const Complex aq = a * q;
    const Estimate pre1 = s.quotient(
        {aq, aq / (c * dd), aq / (c * e), aq / (dd * e), b / a, mu * q / c, mu * q / dd,
         mu * q / e},
        {aq / c, aq / dd, aq / e, b * c / a, b * dd / a, b * e / a, b / mu, mu * q});
    const Estimate phi1 = s.vwp_phi(mu, {mu * f / a, b, c, dd, e}, q / f);
    const Complex bcde = b * c * dd * e;
    const Complex cde = c * dd * e;
    const Estimate pre2 = s.quotient(
        {aq, b * q / a, b * q / c, b * q / dd, b * q / e, b * q / f, c, dd, e, aq / (b * f),
         bcde / (a * aq), aq * aq / bcde},
        {aq / b, aq / c, aq / dd, aq / e, aq / f, b * c / a, b * dd / a, b * e / a, cde / aq,
         aq * q / cde, q / f, b * b * q / a});
    const Estimate phi2 = s.vwp_phi(b * b / a, {b, b * c / a, b * dd / a, b * e / a, b * f / a},
                                    a * a * q * q / (b * c * dd * e * f));
    return s.finish({pre1 * phi1, pre2 * phi2});
  };
  return d;
}

/// 6psi6 = prefactor * 6phi5(b^2/a; bc/a, bf/a, bg/a): the three-term 8psi8
/// transformation with aq = de.
inline IdentityDescriptor thm3_reduction_aq_de() {
  IdentityDescriptor d;
  d.id = "thm3_reduction_aq_de";
  d.name = "6psi6 to 6phi5 transformation (aq = de)";
  d.slots = {"q", "a", "b", "c", "f", "g"};
  d.constraint_text = "|a^2q/bcfg| < 1";
  d.citation = "reduction aq = de of the 8psi8 three-term transformation";
  d.conditions = [](const ParamAssignment& p) {
    const auto [q, a, b, c, f, g] = p.get("q", "a", "b", "c", "f", "g");
    return std::vector<Condition>{below_one("|a^2q/bcfg| < 1", a * a * q / (b * c * f * g))};
  };
  d.lhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, f, g] = p.get("a", "b", "c", "f", "g");
    const Complex q = s.q();
    return s.finish({s.vwp_psi(a, {b, c, f, g}, a * a * q / (b * c * f * g))});
  };
  d.rhs = [](const ParamAssignment& p, const EvalConfig& cfg) {
    Side s(p, cfg);
    const auto [a, b, c, f, g] = p.get("a", "b", "c", "f", "g");
    const Complex q = s.q();
    const Complex aq = a * q;
    const Estimate pre = s.quotient(
        {q, aq, q / a, aq / (b * c), aq / (b * f), aq / (b * g), b * q / c, b * q / f, b * q / g},
        {q / b, q / c, q / f, q / g, aq / b, aq / c, aq / f, aq / g, b * b * q / a});
    const Estimate series =
        s.vwp_phi(b * b / a, {b * c / a, b * f / a, b * g / a}, a * a * q / (b * c * f * g));
    return s.finish({pre * series});
  };
  return d;
}

inline std::vector<IdentityDescriptor> build_catalog() {
  return {ramanujan_1psi1(),     bailey_6psi6(),          thm1_2psi2_to_8psi8(),
          thm2_4psi4_to_8psi8(), thm3_8psi8_three_term(), cor4(),
          cor5(),                rogers_6phi5(),          watson_III23(),
          three_term_S(),        jouhet_eq3(),            gasper_347(),
          gasper_348(),          bailey_III37(),          lemma8_8phi7_three_term(),
          thm3_reduction_aq_de()};
}

}  // namespace detail

/// The sixteen catalog entries, in a fixed order. Built once; immutable.
inline const std::vector<IdentityDescriptor>& catalog() {
  static const std::vector<IdentityDescriptor> entries = detail::build_catalog();
  return entries;
}

/// Throws InvalidArgument for an unknown id.
inline const IdentityDescriptor& find_identity(std::string_view id) {
  for (const auto& d : catalog()) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown identity '" + std::string(id) + "'");
}

/// Throws DomainViolation naming the first violated condition.
inline void require_domain(const IdentityDescriptor& d, const ParamAssignment& p) {
  for (const auto& slot : d.slots) {
    if (!p.contains(slot)) {
      throw Error(ErrorCode::InvalidArgument,
                  d.id + ": missing parameter slot '" + slot + "'");
    }
  }
  for (const auto& [k, v] : p.entries()) require_finite(v, k);
  if (!(std::abs(p.at("q")) > 0.0)) {
    throw Error(ErrorCode::DomainViolation, d.id + ": 0 < |q| violated");
  }
  for (const auto& c : d.constraint(p)) {
    if (!c.holds()) {
      throw Error(ErrorCode::DomainViolation, d.id + ": " + c.text + " violated (" +
                                                  format_double(c.lhs) + " >= " +
                                                  format_double(c.bound) + ")");
    }
  }
}

inline IdentityCheck make_check(SideValue lhs, SideValue rhs) {
  IdentityCheck r;
  r.lhs = lhs.value;
  r.rhs = rhs.value;
  r.abs_residual = std::abs(r.lhs - r.rhs);
  const double scale = std::max({std::abs(r.lhs), std::abs(r.rhs), 1e-300});
  r.rel_residual = r.abs_residual / scale;
  r.combined_err = lhs.err + rhs.err;
  r.tol_check = std::max(kCheckToleranceFloor, kCheckErrorFactor * r.combined_err / scale);
  r.passed = r.rel_residual <= r.tol_check;
  r.lhs_side = std::move(lhs);
  r.rhs_side = std::move(rhs);
  return r;
}

namespace detail {

inline SideValue tagged(const SideEvaluator& side, const char* tag, const std::string& id,
                        const ParamAssignment& p, const EvalConfig& cfg) {
  try {
    return side(p, cfg);
  } catch (const Error& e) {
    throw Error(e.code(), id + " " + tag + ": " + e.detail());
  }
}

}  // namespace detail

inline IdentityCheck evaluate_identity(const IdentityDescriptor& d, const ParamAssignment& p,
                                       const EvalConfig& cfg = {}) {
  cfg.validate();
  require_domain(d, p);
  SideValue lhs = detail::tagged(d.lhs, "lhs", d.id, p, cfg);
  SideValue rhs = detail::tagged(d.rhs, "rhs", d.id, p, cfg);
  return make_check(std::move(lhs), std::move(rhs));
}

inline IdentityCheck evaluate_identity(std::string_view id, const ParamAssignment& p,
                                       const EvalConfig& cfg = {}) {
  return evaluate_identity(find_identity(id), p, cfg);
}

// ---------------------------------------------------------------------------
// Specialization at q^{1+m}
// ---------------------------------------------------------------------------

struct SpecializationCheck {
  IdentityCheck check;
  ParamAssignment pinned;
  std::string pinned_slot;
  int m = 0;
  /// Backward terms summed in the left-hand series (m when it terminates
  /// where predicted).
  int lhs_backward_terms = 0;
  bool lhs_backward_terminated = false;
  bool termination_as_predicted = false;
};

/// The slot pinned so that aq/slot = q^{1+m}: c for the two-term
/// transformations, g for the three-term one.
inline std::string specialization_slot(std::string_view id) {
  if (id == "thm1_2psi2_to_8psi8" || id == "thm2_4psi4_to_8psi8") return "c";
  if (id == "thm3_8psi8_three_term") return "g";
  throw Error(ErrorCode::InvalidArgument,
              "no integer specialization for identity '" + std::string(id) + "'");
}

inline ParamAssignment pin_at_integer(std::string_view id, int m, const ParamAssignment& free) {
  const std::string slot = specialization_slot(id);
  ParamAssignment pinned = free;
  const QBase q = free.q();
  pinned.set(slot, free.at("a") * q.pow(-m));
  return pinned;
}

inline SpecializationCheck specialize_at_integer(std::string_view id, int m,
                                                 const ParamAssignment& free,
                                                 const EvalConfig& cfg = {}) {
  if (m < 0 || m > 8) {
    throw Error(ErrorCode::InvalidArgument, "specialization index m must be in [0, 8]");
  }
  const IdentityDescriptor& d = find_identity(id);
  SpecializationCheck out;
  out.pinned_slot = specialization_slot(id);
  out.m = m;
  out.pinned = pin_at_integer(id, m, free);
  out.check = evaluate_identity(d, out.pinned, cfg);
  const EvalResult& lhs_series = out.check.lhs_side.series.front();
  out.lhs_backward_terms = lhs_series.n_backward;
  out.lhs_backward_terminated = lhs_series.backward_terminated;
  out.termination_as_predicted = lhs_series.backward_terminated && lhs_series.n_backward == m;
  return out;
}

// ---------------------------------------------------------------------------
// Cross-checks
// ---------------------------------------------------------------------------

/// Jouhet's slots from the three-term 8psi8 slots:
/// (a, b, c, d, e, f, g) -> (a, b, d := f, e := g, f := c, g := d, h := e),
/// under which lambda = mu and lambda c/a = aq/fg.
inline ParamAssignment jouhet_slots_from_thm3(const ParamAssignment& p) {
  const auto [q, a, b, c, d, e, f, g] = detail::thm3_params(p);
  return {{"q", q}, {"a", a}, {"b", b}, {"d", f}, {"e", g}, {"f", c}, {"g", d}, {"h", e}};
}

struct EquivalenceCheck {
  IdentityCheck check_a;  // three-term 8psi8 transformation
  IdentityCheck check_b;  // Jouhet's identity
  /// Relative difference of the two left sides.
  double lhs_match = 0.0;
};

inline EquivalenceCheck cross_check_equivalence(const ParamAssignment& thm3_params,
                                                const EvalConfig& cfg = {}) {
  const IdentityDescriptor& thm3 = find_identity("thm3_8psi8_three_term");
  const IdentityDescriptor& jouhet = find_identity("jouhet_eq3");
  const ParamAssignment jp = jouhet_slots_from_thm3(thm3_params);
  require_domain(jouhet, jp);
  require_domain(thm3, thm3_params);
  EquivalenceCheck out;
  out.check_a = evaluate_identity(thm3, thm3_params, cfg);
  out.check_b = evaluate_identity(jouhet, jp, cfg);
  const double scale =
      std::max({std::abs(out.check_a.lhs), std::abs(out.check_b.lhs), 1e-300});
  out.lhs_match = std::abs(out.check_a.lhs - out.check_b.lhs) / scale;
  return out;
}

/// Entry 16 against the three-term transformation with e pinned to aq/d.
struct ReductionCoherence {
  IdentityCheck reduced;  // thm3_reduction_aq_de evaluated directly
  IdentityCheck pinned;   // thm3_8psi8_three_term at e = aq/d
  double lhs_rel_diff = 0.0;
  /// |first right-hand term of the pinned form| / |reduced rhs| (it must vanish).
  double first_term_rel = 0.0;
  double second_term_rel_diff = 0.0;
};

/// `p` holds slots q, a, b, c, d, f, g.
inline ReductionCoherence reduction_coherence(const ParamAssignment& p,
                                              const EvalConfig& cfg = {}) {
  const auto [q, a, b, c, d, f, g] = p.get("q", "a", "b", "c", "d", "f", "g");
  const ParamAssignment reduced{{"q", q}, {"a", a}, {"b", b}, {"c", c}, {"f", f}, {"g", g}};
  const ParamAssignment full{{"q", q}, {"a", a}, {"b", b}, {"c", c}, {"d", d},
                             {"e", a * q / d}, {"f", f}, {"g", g}};
  ReductionCoherence out;
  out.reduced = evaluate_identity("thm3_reduction_aq_de", reduced, cfg);
  out.pinned = evaluate_identity("thm3_8psi8_three_term", full, cfg);
  auto rel = [](Complex x, Complex y) {
    return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300});
  };
  out.lhs_rel_diff = rel(out.reduced.lhs, out.pinned.lhs);
  const double scale = std::max(std::abs(out.reduced.rhs), 1e-300);
  out.first_term_rel = std::abs(out.pinned.rhs_side.terms.at(0)) / scale;
  out.second_term_rel_diff = rel(out.reduced.rhs, out.pinned.rhs_side.terms.at(1));
  return out;
}

/// Summing the reduced right side's 6phi5 by Rogers' formula must give
/// Bailey's 6psi6 product.
struct ReductionChain {
  Complex composed{0.0};      // prefactor * Rogers product
  Complex bailey_product{0.0};
  double rel_diff = 0.0;
};

/// `p` holds slots q, a, b, c, f, g.
inline ReductionChain compose_reduction_chain(const ParamAssignment& p,
                                              const EvalConfig& cfg = {}) {
  const auto [q, a, b, c, f, g] = p.get("q", "a", "b", "c", "f", "g");
  require_domain(find_identity("thm3_reduction_aq_de"), p);
  const QBase base(q);
  ProductConfig pc;
  pc.tol = cfg.tol * 1e-2;
  pc.pole_guard = cfg.pole_guard;
  const Complex aq = a * q;
  const std::array<Complex, 9> pre_num{q,          aq,        q / a,     aq / (b * c), aq / (b * f),
                                       aq / (b * g), b * q / c, b * q / f, b * q / g};
  const std::array<Complex, 9> pre_den{q / b,  q / c,  q / f,  q / g,        aq / b,
                                       aq / c, aq / f, aq / g, b * b * q / a};
  const Complex prefactor = poch_multi(pre_num, base, kInfinity, pc).value /
                            poch_multi(pre_den, base, kInfinity, pc).value;
  const ParamAssignment rogers{{"q", q},
                               {"a", b * b / a},
                               {"b", b * c / a},
                               {"c", b * f / a},
                               {"d", b * g / a}};
  const IdentityDescriptor& r = find_identity("rogers_6phi5");
  require_domain(r, rogers);
  const SideValue summed = detail::tagged(r.rhs, "rhs", r.id, rogers, cfg);
  const ParamAssignment bailey{{"q", q}, {"a", a}, {"b", b}, {"c", c}, {"d", f}, {"e", g}};
  const IdentityDescriptor& bl = find_identity("bailey_6psi6");
  const SideValue product = detail::tagged(bl.rhs, "rhs", bl.id, bailey, cfg);
  ReductionChain out;
  out.composed = prefactor * summed.value;
  out.bailey_product = product.value;
  out.rel_diff = std::abs(out.composed - out.bailey_product) /
                 std::max({std::abs(out.composed), std::abs(out.bailey_product), 1e-300});
  return out;
}

}  // namespace qseries
