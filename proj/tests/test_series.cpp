#include <gtest/gtest.h>

#include <functional>
#include <vector>

#include "qseries/qpochhammer.hpp"
#include "qseries/series.hpp"
#include "test_support.hpp"

using namespace qseries;
using qseries::testing::random_complex;
using qseries::testing::rel_diff;

namespace {

// mpmath, 30 digits, direct summation
const Complex k2psi2{0.88983175133385342955, 1.2076415469567309865};
const Complex kPairPsi{0.58007543489825961636, 1.4919205364114788018};
constexpr double kOnePhiZero = 2.2009408835257384049;  // (0.15;0.4)_inf / (0.5;0.4)_inf
constexpr double kTerminating = -191.59482171246877129;

/// t_k of the defining sum from q-shifted factorials, any integer k.
/// Negative k goes through (x;p)_{-n} = (-p/x)^n p^{n(n-1)/2} / (p/x;p)_n so
/// that the large factors of numerator and denominator meet before they are
/// raised to the n-th power.
Complex brute_term(const SeriesSpec& s, int k) {
  const QBase& q = s.q();
  const QBase q2 = q.squared();
  const int e = s.sign_exponent();
  if (k >= 0) {
    Complex t = 1.0;
    for (Complex a : s.numerator().plain) t *= poch_finite(a, q, k);
    for (Complex w : s.numerator().squared_pairs) t *= poch_pair_sq(w, q, k).value;
    for (Complex b : s.denominator().plain) t /= poch_finite(b, q, k);
    for (Complex w : s.denominator().squared_pairs) t /= poch_pair_sq(w, q, k).value;
    if (s.kind() == SeriesKind::Unilateral) t /= poch_finite(q.value(), q, k);
    if (e > 0) {
      const Complex gauss = std::pow(q.value(), static_cast<double>(k) * (k - 1) / 2.0);
      t *= std::pow((k % 2 == 0 ? 1.0 : -1.0) * gauss, e);
    }
    return t * std::pow(s.z(), k);
  }
  if (s.kind() == SeriesKind::Unilateral) return 0.0;
  const int n = -k;
  const double tri = static_cast<double>(n) * (n - 1) / 2.0;
  Complex t = 1.0;
  Complex base = 1.0 / s.z();
  double q_exp = 0.0;
  for (Complex a : s.numerator().plain) {
    t /= poch_finite(q.value() / a, q, n);
    base *= -q.value() / a;
    q_exp += tri;
  }
  for (Complex w : s.numerator().squared_pairs) {
    t /= poch_finite(q2.value() / w, q2, n);
    base *= -q2.value() / w;
    q_exp += 2 * tri;
  }
  for (Complex b : s.denominator().plain) {
    t *= poch_finite(q.value() / b, q, n);
    base /= -q.value() / b;
    q_exp -= tri;
  }
  for (Complex w : s.denominator().squared_pairs) {
    t *= poch_finite(q2.value() / w, q2, n);
    base /= -q2.value() / w;
    q_exp -= 2 * tri;
  }
  if (e > 0) {
    base *= std::pow(n % 2 == 0 ? 1.0 : -1.0, e);
    q_exp += e * static_cast<double>(n) * (n + 1) / 2.0;
  }
  return t * std::pow(base, n) * std::pow(q.value(), q_exp);
}

Complex brute_sum(const SeriesSpec& s, int lo, int hi) {
  Complex sum = 0.0;
  for (int k = lo; k <= hi; ++k) sum += brute_term(s, k);
  return sum;
}

/// Sums k = 0, 1, ..., limit (or k = -1, ..., -limit). Stops early once terms
/// fall far below double resolution, before the factorials overflow.
Complex brute_direction(const SeriesSpec& s, int limit, bool backward) {
  Complex sum = 0.0;
  int small = 0;
  for (int j = 0; j < limit; ++j) {
    const Complex t = brute_term(s, backward ? -1 - j : j);
    small = std::abs(t) < 1e-40 * std::abs(sum) ? small + 1 : 0;
    if (small == 5) break;
    sum += t;
  }
  return sum;
}

SeriesSpec random_2psi2(Rng& rng, double q_lo = 0.1, double q_hi = 0.6) {
  for (;;) {
    const QBase q(Complex(rng.uniform(q_lo, q_hi)));
    std::vector<Complex> a{random_complex(rng), random_complex(rng)};
    std::vector<Complex> b{random_complex(rng), random_complex(rng)};
    const Complex z = random_complex(rng, 0.05, 0.85);
    SeriesSpec s = SeriesSpec::bilateral({a, {}}, {b, {}}, q, z);
    const ConvergenceRegion r = convergence_region(s);
    if (r.forward_margin > 0.15 && r.backward_margin > 0.15) return s;
  }
}

EvalStatus status_of(const SeriesSpec& s) { return eval_series(s).status; }

}  // namespace

TEST(SeriesSpec, CountsSignExponent) {
  const QBase q(Complex(0.5));
  EXPECT_EQ(SeriesSpec::unilateral({{0.1, 0.2}, {}}, {{0.3}, {}}, q, 0.5).sign_exponent(), 0);
  EXPECT_EQ(SeriesSpec::unilateral({{}, {}}, {{0.3}, {}}, q, 0.5).sign_exponent(), 2);
  EXPECT_EQ(SeriesSpec::bilateral({{0.1}, {0.4}}, {{0.3}, {0.2}}, q, 0.5).sign_exponent(), 0);
  EXPECT_THROW(SeriesSpec::bilateral({{0.1, 0.2}, {}}, {{0.3}, {}}, q, 0.5), Error);
}

TEST(SeriesSpec, RejectsNonFinite) {
  const QBase q(Complex(0.5));
  EXPECT_THROW(SeriesSpec::unilateral({{std::nan("")}, {}}, {}, q, 0.5), Error);
  EXPECT_THROW(SeriesSpec::unilateral({}, {}, q, Complex(INFINITY)), Error);
}

TEST(TermRatio, OnePsiOneAtZero) {
  const Complex a(0.7, 0.2), b(1.3, -0.4), z(0.3, 0.1);
  const SeriesSpec s = SeriesSpec::bilateral({{a}, {}}, {{b}, {}}, QBase(Complex(0.4)), z);
  EXPECT_LE(rel_diff(term_ratio(s, 0), z * (1.0 - a) / (1.0 - b)), 1e-15);
}

TEST(TermRatio, ZeroArgument) {
  const SeriesSpec s =
      SeriesSpec::unilateral({{0.3, 0.6}, {}}, {{0.2}, {}}, QBase(Complex(0.4)), 0.0);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(term_ratio(s, k), Complex(0.0));
}

TEST(TermRatio, MatchesDirectTermQuotient) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const SeriesSpec s = random_2psi2(rng);
    for (int k = -5; k <= 5; ++k) {
      const Complex direct = brute_term(s, k + 1) / brute_term(s, k);
      EXPECT_LE(rel_diff(term_ratio(s, k), direct), 1e-12) << "k = " << k;
    }
  }
}

TEST(TermRatio, MatchesDirectQuotientWithPairsAndSign) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const QBase q(Complex(rng.uniform(0.2, 0.6)));
    const SeriesSpec s = SeriesSpec::bilateral(
        {{random_complex(rng)}, {random_complex(rng)}},
        {{random_complex(rng), random_complex(rng)}, {random_complex(rng)}}, q,
        random_complex(rng));
    ASSERT_EQ(s.sign_exponent(), 1);
    for (int k = -5; k <= 5; ++k) {
      const Complex direct = brute_term(s, k + 1) / brute_term(s, k);
      EXPECT_LE(rel_diff(term_ratio(s, k), direct), 1e-12) << "k = " << k;
    }
  }
}

TEST(TermRatio, PoleIsReported) {
  const QBase q(Complex(0.5));
  const SeriesSpec s = SeriesSpec::unilateral({{0.3}, {}}, {{4.0}, {}}, q, 0.5);
  EXPECT_THROW(term_ratio(s, 2), Error);
}

TEST(EvalPhi, ZeroArgument) {
  const SeriesSpec s =
      SeriesSpec::unilateral({{0.3, 2.0}, {}}, {{0.7}, {}}, QBase(Complex(0.4)), 0.0);
  const EvalResult r = eval_phi(s);
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.value, Complex(1.0));
}

TEST(EvalPhi, QBinomialTheorem) {
  const QBase q(Complex(0.4));
  const SeriesSpec s = SeriesSpec::unilateral({{0.3}, {}}, {}, q, 0.5);
  const EvalResult r = eval_phi(s);
  ASSERT_TRUE(r.converged()) << r.detail;
  ProductConfig pc;
  pc.tol = 1e-16;
  const Complex oracle =
      poch_infinite(Complex(0.15), q, pc).value / poch_infinite(Complex(0.5), q, pc).value;
  EXPECT_LE(rel_diff(r.value, oracle), 1e-10);
  EXPECT_LE(rel_diff(r.value, Complex(kOnePhiZero)), 1e-14);
}

TEST(EvalPhi, TerminatingSeries) {
  // 2phi1(q^-3, 0.7; 0.3; q, 2.5) at q = 1/2: four terms, |z| > 1 is fine.
  const QBase q(Complex(0.5));
  const SeriesSpec s = SeriesSpec::unilateral({{q.pow(-3), 0.7}, {}}, {{0.3}, {}}, q, 2.5);
  const EvalResult r = eval_phi(s);
  ASSERT_TRUE(r.converged()) << r.detail;
  EXPECT_TRUE(r.forward_terminated);
  EXPECT_EQ(r.n_forward, 4);
  EXPECT_LE(rel_diff(r.value, brute_sum(s, 0, 3)), 1e-14);
  EXPECT_LE(rel_diff(r.value, Complex(kTerminating)), 1e-14);
}

TEST(EvalPhi, PositiveSignExponent) {
  Rng rng(40);
  for (int trial = 0; trial < 30; ++trial) {
    const QBase q(Complex(rng.uniform(0.2, 0.6)));
    const SeriesSpec s =
        SeriesSpec::unilateral({{}, {}}, {{random_complex(rng)}, {}}, q, random_complex(rng, 0.5, 20));
    const EvalResult r = eval_phi(s);
    ASSERT_TRUE(r.converged()) << r.detail;
    EXPECT_LE(rel_diff(r.value, brute_sum(s, 0, 80)), 1e-12);
  }
}

TEST(EvalPhi, DivergentRegion) {
  const SeriesSpec s =
      SeriesSpec::unilateral({{0.3, 0.6}, {}}, {{0.2}, {}}, QBase(Complex(0.4)), 1.2);
  EXPECT_EQ(status_of(s), EvalStatus::DivergentRegion);
}

TEST(EvalPhi, DenominatorPole) {
  const QBase q(Complex(0.5));
  const SeriesSpec s = SeriesSpec::unilateral({{0.3}, {}}, {{q.pow(-2)}, {}}, q, 0.5);
  EXPECT_EQ(status_of(s), EvalStatus::PoleHit);
}

TEST(EvalPhi, NumeratorZeroBeforePole) {
  const QBase q(Complex(0.5));
  const SeriesSpec s = SeriesSpec::unilateral({{q.pow(-1)}, {}}, {{q.pow(-3)}, {}}, q, 0.5);
  const EvalResult r = eval_phi(s);
  ASSERT_TRUE(r.converged()) << r.detail;
  EXPECT_LE(rel_diff(r.value, brute_sum(s, 0, 1)), 1e-15);
}

TEST(EvalPhi, IndeterminateIsPoleHit) {
  const QBase q(Complex(0.5));
  const SeriesSpec s = SeriesSpec::unilateral({{q.pow(-1)}, {}}, {{q.pow(-1)}, {}}, q, 0.5);
  const EvalResult r = eval_phi(s);
  EXPECT_EQ(r.status, EvalStatus::PoleHit);
  EXPECT_NE(r.detail.find("Indeterminate"), std::string::npos) << r.detail;
}

TEST(EvalPhi, BudgetWhenTermsRunOut) {
  const SeriesSpec s = SeriesSpec::unilateral({{0.3}, {}}, {}, QBase(Complex(0.4)), 0.999);
  EvalConfig cfg;
  cfg.max_terms = 8;
  EXPECT_EQ(eval_phi(s, cfg).status, EvalStatus::Budget);
}

TEST(EvalPhi, RejectsBilateralSpecAndBadConfig) {
  const QBase q(Complex(0.4));
  EXPECT_THROW(eval_phi(SeriesSpec::bilateral({{0.3}, {}}, {{0.2}, {}}, q, 0.5)), Error);
  EXPECT_THROW(eval_psi(SeriesSpec::unilateral({{0.3}, {}}, {}, q, 0.5)), Error);
  EvalConfig cfg;
  cfg.tol = 0.0;
  EXPECT_THROW(eval_phi(SeriesSpec::unilateral({{0.3}, {}}, {}, q, 0.5), cfg), Error);
  cfg = {};
  cfg.max_terms = 7;
  EXPECT_THROW(eval_phi(SeriesSpec::unilateral({{0.3}, {}}, {}, q, 0.5), cfg), Error);
}

TEST(EvalPsi, FrozenOracles) {
  const QBase q(Complex(0.35));
  const Complex z(0.4, 0.2);
  const SeriesSpec plain = SeriesSpec::bilateral(
      {{Complex(1.8, 0.3), Complex(1.5, -0.2)}, {}}, {{Complex(0.6, 0.1), Complex(0.7, 0.5)}, {}},
      q, z);
  EXPECT_LE(rel_diff(eval_psi(plain).value, k2psi2), 1e-13);
  const SeriesSpec pairs = SeriesSpec::bilateral({{Complex(1.8, 0.3)}, {Complex(2.1, 0.4)}},
                                                 {{Complex(0.7, 0.5)}, {Complex(0.5, -0.2)}}, q, z);
  EXPECT_LE(rel_diff(eval_psi(pairs).value, kPairPsi), 1e-13);
}

TEST(EvalPsi, RamanujanProductSide) {
  const QBase q(Complex(0.3));
  const Complex a = 2.0, b = 0.4, z = 0.45;
  const EvalResult r = eval_psi(SeriesSpec::bilateral({{a}, {}}, {{b}, {}}, q, z));
  ASSERT_TRUE(r.converged()) << r.detail;
  const std::vector<Complex> num{q.value(), b / a, a * z, q.value() / (a * z)};
  const std::vector<Complex> den{b, q.value() / a, z, b / (a * z)};
  ProductConfig pc;
  pc.tol = 1e-13;
  pc.allow_zero = true;
  const Complex product = poch_multi(num, q, kInfinity, pc).value /
                          poch_multi(den, q, kInfinity, pc).value;
  EXPECT_LE(rel_diff(r.value, product), 1e-10);
}

TEST(EvalPsi, RamanujanAtVanishingProduct) {
  // az = 1: the product side is exactly zero and the sum cancels to rounding level.
  const EvalResult r =
      eval_psi(SeriesSpec::bilateral({{2.0}, {}}, {{0.4}, {}}, QBase(Complex(0.3)), 0.5));
  ASSERT_TRUE(r.converged()) << r.detail;
  EXPECT_LE(std::abs(r.value), 1e-10);
}

TEST(EvalPsi, BackwardDivergence) {
  // |z| = 0.1 < |b/a| = 0.2
  const SeriesSpec s =
      SeriesSpec::bilateral({{2.0}, {}}, {{0.4}, {}}, QBase(Complex(0.3)), 0.1);
  EXPECT_EQ(status_of(s), EvalStatus::DivergentRegion);
}

TEST(EvalPsi, ZeroArgumentDivergesBackward) {
  const SeriesSpec s =
      SeriesSpec::bilateral({{2.0}, {}}, {{0.4}, {}}, QBase(Complex(0.3)), 0.0);
  EXPECT_EQ(status_of(s), EvalStatus::DivergentRegion);
}

TEST(EvalPsi, DirectionSplitMatchesBruteForce) {
  Rng rng(41);
  EvalConfig cfg;
  cfg.max_terms = 400;
  for (int trial = 0; trial < 40; ++trial) {
    const SeriesSpec s = random_2psi2(rng, 0.3, 0.6);
    const EvalResult r = eval_psi(s, cfg);
    ASSERT_TRUE(r.converged()) << r.detail;
    const Complex forward = brute_direction(s, 2 * cfg.max_terms, false);
    const Complex backward = brute_direction(s, 2 * cfg.max_terms, true);
    EXPECT_LE(rel_diff(r.value, forward + backward), 1e-11);
  }
}

TEST(EvalPsi, ShiftConsistency) {
  // sum t_k = t_1 * (same series with every parameter multiplied by q)
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const SeriesSpec s = random_2psi2(rng);
    const Complex q = s.q().value();
    std::vector<Complex> a, b;
    for (Complex x : s.numerator().plain) a.push_back(x * q);
    for (Complex x : s.denominator().plain) b.push_back(x * q);
    const SeriesSpec shifted = SeriesSpec::bilateral({a, {}}, {b, {}}, s.q(), s.z());
    const Complex t1 = term_ratio(s, 0);
    EXPECT_LE(rel_diff(eval_psi(s).value, t1 * eval_psi(shifted).value), 1e-11);
  }
}

TEST(EvalPsi, PermutationIsBitIdentical) {
  const QBase q(Complex(0.35));
  const Complex z(0.4, 0.2);
  const Complex a1(1.8, 0.3), a2(1.5, -0.2), b1(0.6, 0.1), b2(0.7, 0.5);
  const Complex w1(2.1, 0.4), w2(-0.9, 1.1), v1(0.5, -0.2), v2(0.3, 0.6);
  const EvalResult x =
      eval_psi(SeriesSpec::bilateral({{a1, a2}, {w1, w2}}, {{b1, b2}, {v1, v2}}, q, z));
  const EvalResult y =
      eval_psi(SeriesSpec::bilateral({{a2, a1}, {w2, w1}}, {{b2, b1}, {v2, v1}}, q, z));
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.err, y.err);
}

TEST(EvalPsi, ReducesToPhiWhenDenominatorHoldsQ) {
  // Every bilateral shape used by the catalog, with one denominator entry
  // replaced by q.
  Rng rng(43);
  using Builder = std::function<SeriesSpec(Rng&, const QBase&, Complex)>;
  auto r = [](Rng& g) { return random_complex(g); };
  const std::vector<Builder> shapes{
      [&](Rng& g, const QBase& q, Complex z) {  // 1psi1
        return SeriesSpec::bilateral({{r(g)}, {}}, {{q.value()}, {}}, q, z);
      },
      [&](Rng& g, const QBase& q, Complex z) {  // 2psi2
        return SeriesSpec::bilateral({{r(g), r(g)}, {}}, {{q.value(), r(g)}, {}}, q, z);
      },
      [&](Rng& g, const QBase& q, Complex z) {  // well-poised 4psi4
        const Complex a = r(g);
        return SeriesSpec::bilateral({{r(g), r(g)}, {q.value() * q.value() * a}},
                                     {{q.value(), r(g)}, {a}}, q, z);
      },
      [&](Rng& g, const QBase& q, Complex z) {  // very-well-poised 6psi6
        const Complex a = r(g);
        return SeriesSpec::bilateral({{r(g), r(g), r(g), r(g)}, {q.value() * q.value() * a}},
                                     {{q.value(), r(g), r(g), r(g)}, {a}}, q, z);
      },
      [&](Rng& g, const QBase& q, Complex z) {  // very-well-poised 8psi8
        const Complex a = r(g);
        return SeriesSpec::bilateral(
            {{r(g), r(g), r(g), r(g), r(g), r(g)}, {q.value() * q.value() * a}},
            {{q.value(), r(g), r(g), r(g), r(g), r(g)}, {a}}, q, z);
      },
      [&](Rng& g, const QBase& q, Complex z) {  // 8psi8 with three pairs
        return SeriesSpec::bilateral({{r(g), r(g)}, {r(g), r(g), r(g)}},
                                     {{q.value(), r(g)}, {r(g), r(g), r(g)}}, q, z);
      },
  };
  for (std::size_t shape = 0; shape < shapes.size(); ++shape) {
    for (int trial = 0; trial < 20; ++trial) {
      const QBase q(Complex(rng.uniform(0.1, 0.6)));
      const SeriesSpec bil = shapes[shape](rng, q, random_complex(rng, 0.05, 0.85));
      ParamList den = bil.denominator();
      den.plain.erase(std::find(den.plain.begin(), den.plain.end(), q.value()));
      const SeriesSpec uni = SeriesSpec::unilateral(bil.numerator(), den, q, bil.z());
      const EvalResult x = eval_psi(bil);
      const EvalResult y = eval_phi(uni);
      if (y.status == EvalStatus::PoleHit) continue;
      ASSERT_TRUE(x.converged()) << "shape " << shape << ": " << x.detail;
      ASSERT_TRUE(y.converged()) << "shape " << shape << ": " << y.detail;
      EXPECT_EQ(x.n_backward, 0);
      EXPECT_TRUE(x.backward_terminated);
      EXPECT_LE(rel_diff(x.value, y.value), 1e-12) << "shape " << shape;
    }
  }
}

TEST(EvalPsi, ErrorHonestyUnderHalvedTolerance) {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const SeriesSpec s = random_2psi2(rng);
    for (double tol : {1e-6, 1e-9, 1e-12}) {
      EvalConfig cfg;
      cfg.tol = tol;
      const EvalResult coarse = eval_psi(s, cfg);
      cfg.tol = tol / 2;
      const EvalResult fine = eval_psi(s, cfg);
      ASSERT_TRUE(coarse.converged() && fine.converged());
      EXPECT_LE(std::abs(fine.value - coarse.value), coarse.err) << "tol " << tol;
      EXPECT_TRUE(coarse.err <= 10 * tol * std::abs(coarse.value) ||
                  std::abs(coarse.value) < tol);
    }
  }
}

TEST(ConvergenceRegion, RamanujanMargins) {
  const SeriesSpec s =
      SeriesSpec::bilateral({{2.0}, {}}, {{0.4}, {}}, QBase(Complex(0.3)), 0.5);
  const ConvergenceRegion r = convergence_region(s);
  EXPECT_TRUE(r.forward_ok);
  EXPECT_TRUE(r.backward_ok);
  EXPECT_NEAR(r.backward_margin, std::log(2.5), 1e-15);
  EXPECT_NEAR(r.forward_margin, std::log(2.0), 1e-15);
}

TEST(ConvergenceRegion, ForwardOutside) {
  const SeriesSpec s =
      SeriesSpec::unilateral({{0.3, 0.5}, {}}, {{0.2}, {}}, QBase(Complex(0.3)), Complex(0.0, 1.2));
  EXPECT_FALSE(convergence_region(s).forward_ok);
}

TEST(ConvergenceRegion, BaileyCondition) {
  Rng rng(45);
  for (int trial = 0; trial < 200; ++trial) {
    const QBase q(Complex(rng.uniform(0.1, 0.6)));
    const Complex a = random_complex(rng), b = random_complex(rng), c = random_complex(rng),
                  d = random_complex(rng), e = random_complex(rng);
    const Complex qv = q.value();
    const Complex z = a * a * qv / (b * c * d * e);
    const SeriesSpec s = SeriesSpec::bilateral(
        {{b, c, d, e}, {qv * qv * a}}, {{a * qv / b, a * qv / c, a * qv / d, a * qv / e}, {a}},
        q, z);
    const ConvergenceRegion r = convergence_region(s);
    EXPECT_EQ(r.backward_ok, std::abs(z) < 1.0);
    EXPECT_NEAR(r.backward_margin, -std::log(std::abs(z)), 1e-12);
  }
}
