// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "qseries/harness.hpp"
#include "qseries/identities.hpp"
#include "qseries/qpochhammer.hpp"
#include "qseries/series.hpp"
#include "test_support.hpp"

using namespace qseries;
using qseries::testing::random_complex;
using qseries::testing::random_q;
using qseries::testing::rel_diff;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SampleSpec spec_for(const std::string& id, int count, std::uint64_t seed = 42) {
  SampleSpec s;
  s.identity_id = id;
  s.count = count;
  s.seed = seed;
  return s;
}

struct Line {
  bool ok = true;
  std::string text;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      text += " [" + what + "]";
    }
  }
  void note(const std::string& s) { text += " " + s; }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

/// Runs verification for each id; all must have failed = 0 and max <= bound.
void suite(Line& line, const std::vector<std::string>& ids, double bound) {
  for (const std::string& id : ids) {
    const VerificationReport r = run_verification(spec_for(id, 100));
    line.note(id + " max=" + sci(r.max_rel_residual));
    line.require(r.failed == 0, id + " failed=" + std::to_string(r.failed));
    line.require(r.max_rel_residual <= bound, id + " above " + sci(bound));
  }
}

Line criterion1() {
  Line l;
  const auto t0 = Clock::now();
  suite(l, {"ramanujan_1psi1", "bailey_6psi6"}, 1e-9);
  const double t = seconds_since(t0);
  l.note("time=" + sci(t) + "s");
  l.require(t <= 10.0, "over 10 s");
  return l;
}

Line criterion2() {
  Line l;
  const auto t0 = Clock::now();
  suite(l, {"thm1_2psi2_to_8psi8", "thm2_4psi4_to_8psi8", "thm3_8psi8_three_term"}, 1e-8);
  const double t = seconds_since(t0);
  l.note("time=" + sci(t) + "s");
  l.require(t <= 60.0, "over 60 s");
  return l;
}

Line criterion3() {
  Line l;
  suite(l, {"cor4", "cor5"}, 1e-8);
  // cor4 as the two-term transformation with x = 1/c, per side.
  Sampler sampler(spec_for("cor4", 100));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ParamAssignment p = sampler.next();
    const auto [q, a, b, c] = p.get("q", "a", "b", "c");
    const IdentityCheck direct = evaluate_identity("cor4", p);
    const IdentityCheck pinned = evaluate_identity(
        "thm1_2psi2_to_8psi8", {{"q", q}, {"a", a}, {"b", b}, {"c", c}, {"x", 1.0 / c}});
    worst = std::max({worst, rel_diff(direct.lhs, pinned.lhs), rel_diff(direct.rhs, pinned.rhs)});
  }
  l.note("pinned_x=1/c max=" + sci(worst));
  l.require(worst <= 1e-10, "pinned comparison above 1e-10");
  return l;
}

Line criterion4() {
  Line l;
  std::uint64_t seed = 100;
  double worst = 0.0;
  for (const char* id : {"thm1_2psi2_to_8psi8", "thm2_4psi4_to_8psi8", "thm3_8psi8_three_term"}) {
    for (int m = 0; m <= 3; ++m) {
      const BatchSummary b = run_specialization(spec_for(id, 100, seed++), m);
      worst = std::max(worst, b.max_rel_residual);
      l.require(b.passed(), b.label + " " + b.first_failure);
    }
  }
  l.note("12 batches x 100 max=" + sci(worst));
  l.require(worst <= 1e-9, "above 1e-9");
  return l;
}

Line criterion5() {
  Line l;
  suite(l, {"thm3_reduction_aq_de"}, 1e-9);
  Sampler sampler(spec_for("thm3_reduction_aq_de", 100));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    worst = std::max(worst, compose_reduction_chain(sampler.next()).rel_diff);
  }
  l.note("chain max=" + sci(worst));
  l.require(worst <= 1e-9, "chain above 1e-9");
  return l;
}

Line criterion6() {
  Line l;
  const BatchSummary b = run_equivalence(spec_for("", 25));
  l.note("samples=25 failed=" + std::to_string(b.failed) + " max=" + sci(b.max_rel_residual));
  l.require(b.passed(), b.first_failure);
  return l;
}

Line criterion7() {
  Line l;
  Rng rng(2024);
  double shift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const QBase q = random_q(rng, trial % 2 == 1);
    const Complex a = random_complex(rng);
    const Complex b = random_complex(rng);
    const int s = static_cast<int>(rng.uniform() * 13) - 6;
    const int t = static_cast<int>(rng.uniform() * 13) - 6;
    const Complex lhs = poch_finite(a, q, s + t) / poch_finite(b, q, s + t);
    const Complex rhs = poch_finite(a, q, s) * poch_finite(a * q.pow(s), q, t) /
                        (poch_finite(b, q, s) * poch_finite(b * q.pow(s), q, t));
    shift = std::max(shift, rel_diff(lhs, rhs));
  }
  double pair = 0.0, inversion = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const QBase q = random_q(rng, trial % 2 == 0);
    const Complex x = random_complex(rng);
    const int n = trial % 13;
    pair = std::max(pair, rel_diff(poch_pair_sq(x * x, q, n).value,
                                   poch_finite(x, q, n) * poch_finite(-x, q, n)));
    const int m = 1 + trial % 12;
    inversion = std::max(
        inversion, std::abs(poch_finite(x, q, -m) * poch_finite(x * q.pow(-m), q, m) - 1.0));
  }
  l.note("shift max=" + sci(shift) + " pair max=" + sci(pair) + " inversion max=" +
         sci(inversion));
  l.require(shift <= 1e-12, "shift above 1e-12");
  l.require(pair <= 1e-13, "pair above 1e-13");
  l.require(inversion <= 1e-13, "inversion above 1e-13");
  return l;
}

Line criterion8() {
  Line l;
  suite(l, {"three_term_S"}, 1e-10);
  return l;
}

Line criterion9() {
  Line l;
  const auto t0 = Clock::now();
  const std::vector<CheckAllLine> a = check_all(100, 42);
  const std::vector<CheckAllLine> b = check_all(100, 42);
  bool same = a.size() == b.size();
  bool all_pass = true;
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    same = a[i].text == b[i].text;
    all_pass = all_pass && a[i].passed;
  }
  l.note("check_all lines=" + std::to_string(a.size()) + " time=" + sci(seconds_since(t0)) + "s");
  l.require(same, "check_all output differs between runs");
  l.require(all_pass && a.size() == 29, "check_all has failures");

  // Halving tolerances: products, series, identity sides.
  int moves = 0, compared = 0;
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const QBase q = random_q(rng, trial % 2 == 0);
    const Complex x = random_complex(rng);
    for (double tol : {1e-8, 1e-12, 1e-15}) {
      ProductConfig pc;
      pc.tol = tol;
      const ProductValue coarse = poch_infinite(x, q, pc);
      pc.tol = tol / 2;
      const ProductValue fine = poch_infinite(x, q, pc);
      ++compared;
      moves += std::abs(fine.value - coarse.value) > coarse.err;
    }
  }
  for (const IdentityDescriptor& d : catalog()) {
    Sampler sampler(spec_for(d.id, 1, 7));
    for (int i = 0; i < 10; ++i) {
      const ParamAssignment p = sampler.next();
      for (double tol : {1e-9, 1e-15}) {
        EvalConfig cfg;
        cfg.tol = tol;
        const IdentityCheck coarse = evaluate_identity(d, p, cfg);
        cfg.tol = tol / 2;
        const IdentityCheck fine = evaluate_identity(d, p, cfg);
        for (const auto& [c, f] : {std::pair{&coarse.lhs_side, &fine.lhs_side},
                                   std::pair{&coarse.rhs_side, &fine.rhs_side}}) {
          ++compared;
          moves += std::abs(f->value - c->value) > c->err;
          for (std::size_t k = 0; k < c->series.size(); ++k) {
            const EvalResult& cs = c->series[k];
            const EvalResult& fs = f->series[k];
            if (!cs.converged() || !fs.converged()) continue;
            ++compared;
            moves += std::abs(fs.value - cs.value) > cs.err;
          }
        }
      }
    }
  }
  l.note("honesty compared=" + std::to_string(compared) + " moved=" + std::to_string(moves));
  l.require(moves == 0, "a value moved beyond its err");
  return l;
}

}  // namespace

int main() {
  using Fn = Line (*)();
  const std::vector<std::pair<const char*, Fn>> criteria{
      {"summation formulas", criterion1},   {"new transformations", criterion2},
      {"corollaries", criterion3},          {"integer specialization", criterion4},
      {"reduction chain", criterion5},      {"equivalence", criterion6},
      {"exact algebra", criterion7},        {"theta relation", criterion8},
      {"determinism and error honesty", criterion9},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Line l;
    try {
      l = criteria[i].second();
    } catch (const std::exception& e) {
      l.ok = false;
      l.text = std::string(" exception: ") + e.what();
    }
    failures += !l.ok;
    std::printf("%s %zu %s:%s\n", l.ok ? "PASS" : "FAIL", i + 1, criteria[i].first,
                l.text.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
