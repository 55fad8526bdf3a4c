#pragma once

// Domain-respecting parameter sampling and batch verification.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qseries/core.hpp"
#include "qseries/identities.hpp"
#include "qseries/series.hpp"

namespace qseries {

inline constexpr int kMaxRejections = 10000;

struct SampleSpec {
  std::string identity_id;
  int count = 100;
  std::uint64_t seed = 42;
  std::array<double, 2> q_range{0.1, 0.6};
  std::array<double, 2> modulus_range{0.3, 3.0};
  bool complex_phases = true;
  /// Minimum log-modulus distance from every constraint boundary.
  double margin = 0.15;
  double pole_guard = kDefaultPoleGuard;
  /// Conditioning screen: a draw is rejected when evaluating it throws or its
  /// propagated error bound, relative to max(|lhs|, |rhs|), exceeds this.
  /// Zero disables the screen.
  double max_error_bound = 1e-9;

  void validate() const {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
    if (!(q_range[0] > 0.0) || !(q_range[0] <= q_range[1]) || !(q_range[1] < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "q range must satisfy 0 < lo <= hi < 1");
    }
    if (!(modulus_range[0] > 0.0) || !(modulus_range[0] <= modulus_range[1]) ||
        !std::isfinite(modulus_range[1])) {
      throw Error(ErrorCode::InvalidArgument, "modulus range must satisfy 0 < lo <= hi");
    }
    if (!(margin > 0.0) || !std::isfinite(margin)) {
      throw Error(ErrorCode::InvalidArgument, "margin must be positive");
    }
    if (!(pole_guard > 0.0)) throw Error(ErrorCode::InvalidArgument, "pole_guard must be positive");
    if (!(max_error_bound >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "max_error_bound must be non-negative");
    }
  }
};

/// mt19937_64 with a fixed bits-to-double map, so streams are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// True when `p` evaluates cleanly and its relative error bound is within
/// spec.max_error_bound.
inline bool well_conditioned(const IdentityDescriptor& d, const ParamAssignment& p,
                             const SampleSpec& spec) {
  if (spec.max_error_bound == 0.0) return true;
  EvalConfig cfg;
  cfg.pole_guard = spec.pole_guard;
  try {
    const IdentityCheck c = evaluate_identity(d, p, cfg);
    const double scale = std::max({std::abs(c.lhs), std::abs(c.rhs), 1e-300});
    return c.combined_err <= spec.max_error_bound * scale;
  } catch (const Error&) {
    return false;
  }
}

/// Draws in-domain assignments for one identity. `pin` (optional) rewrites
/// each raw draw before the constraint test, e.g. to place a slot on the
/// q-lattice; slots listed in `pinned_slots` are not drawn. `extra` adds an
/// acceptance test on top of the identity's constraint.
class Sampler {
 public:
  using Pin = std::function<ParamAssignment(const ParamAssignment&)>;
  using Accept = std::function<bool(const ParamAssignment&)>;

  Sampler(const SampleSpec& spec, std::vector<std::string> pinned_slots = {}, Pin pin = {},
          Accept extra = {})
      : spec_(spec),
        identity_(&find_identity(spec.identity_id)),
        rng_(spec.seed),
        pinned_(std::move(pinned_slots)),
        pin_(std::move(pin)),
        extra_(std::move(extra)) {
    spec_.validate();
  }

  /// Throws Exhausted after kMaxRejections consecutive rejections.
  ParamAssignment next() {
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      ParamAssignment p = draw();
      if (pin_) p = pin_(p);
      if (!accept(p)) {
        ++rejected_;
      } else if (!well_conditioned(*identity_, p, spec_)) {
        ++screened_;
      } else {
        return p;
      }
    }
    throw Error(ErrorCode::Exhausted, spec_.identity_id + ": no in-domain sample after " +
                                          std::to_string(kMaxRejections) + " rejections");
  }

  /// Draws outside the domain or its margin.
  int rejected() const noexcept { return rejected_; }
  /// In-domain draws removed by the conditioning screen.
  int screened() const noexcept { return screened_; }
  const IdentityDescriptor& identity() const noexcept { return *identity_; }

 private:
  ParamAssignment draw() {
    ParamAssignment p;
    for (const std::string& slot : identity_->slots) {
      if (slot == "q") {
        p.set(slot, Complex(rng_.uniform(spec_.q_range[0], spec_.q_range[1]), 0.0));
        continue;
      }
      const double lo = std::log(spec_.modulus_range[0]);
      const double hi = std::log(spec_.modulus_range[1]);
      const double r = std::exp(rng_.uniform(lo, hi));
      const double phase =
          spec_.complex_phases ? rng_.uniform(-std::numbers::pi, std::numbers::pi) : 0.0;
      if (std::find(pinned_.begin(), pinned_.end(), slot) != pinned_.end()) continue;
      p.set(slot, std::polar(r, phase));
    }
    return p;
  }

  bool accept(const ParamAssignment& p) const {
    for (const auto& c : identity_->constraint(p)) {
      if (!c.holds() || !(c.margin() >= spec_.margin)) return false;
    }
    return !extra_ || extra_(p);
  }

  SampleSpec spec_;
  const IdentityDescriptor* identity_;
  Rng rng_;
  std::vector<std::string> pinned_;
  Pin pin_;
  Accept extra_;
  int rejected_ = 0;
  int screened_ = 0;
};

/// The first assignment of the deterministic stream for `spec.seed`.
inline ParamAssignment sample_params(const SampleSpec& spec) { return Sampler(spec).next(); }

/// Worker count: hardware concurrency capped by QSERIES_THREADS.
inline int thread_count(int jobs) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("QSERIES_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = std::min<long>(n, v);
  }
  return std::max(1, std::min(n, jobs));
}

/// Runs fn(i) for i in [0, jobs) on up to thread_count(jobs) threads.
template <class Fn>
void parallel_for(int jobs, Fn&& fn) {
  const int workers = thread_count(jobs);
  if (workers <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < jobs; i = next++) fn(i);
    });
  }
}

struct SampleRecord {
  int index = 0;
  ParamAssignment params;
  Complex lhs{0.0};
  Complex rhs{0.0};
  std::optional<double> rel_residual;
  double tol_check = 0.0;
  double combined_err = 0.0;
  /// "ok", "residual", or the ErrorCode name that stopped evaluation.
  std::string status;
  std::string detail;

  bool passed() const { return status == "ok"; }
};

namespace detail {

inline SampleRecord evaluate_sample(const IdentityDescriptor& d, int index,
                                    const ParamAssignment& p, const EvalConfig& cfg) {
  SampleRecord r;
  r.index = index;
  r.params = p;
  try {
    const IdentityCheck c = evaluate_identity(d, p, cfg);
    r.lhs = c.lhs;
    r.rhs = c.rhs;
    r.rel_residual = c.rel_residual;
    r.tol_check = c.tol_check;
    r.combined_err = c.combined_err;
    r.status = c.passed ? "ok" : "residual";
  } catch (const Error& e) {
    r.status = std::string(to_string(e.code()));
    r.detail = e.detail();
  }
  return r;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

struct VerificationReport {
  std::string identity_id;
  std::uint64_t seed = 0;
  SampleSpec spec;
  EvalConfig config;
  std::vector<SampleRecord> samples;
  int accepted = 0;
  int rejected_domain = 0;
  int rejected_conditioning = 0;
  int failed = 0;
  double max_rel_residual = 0.0;
  double median_rel_residual = 0.0;
  std::int64_t wall_time_ms = 0;
};

inline void summarize(VerificationReport& r) {
  std::vector<double> residuals;
  r.accepted = r.failed = 0;
  for (const SampleRecord& s : r.samples) {
    (s.passed() ? r.accepted : r.failed) += 1;
    if (s.rel_residual) residuals.push_back(*s.rel_residual);
  }
  r.max_rel_residual =
      residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
  r.median_rel_residual = detail::median(std::move(residuals));
}

/// Samples sequentially, evaluates in parallel, reports in sample order.
/// A sample fails when its residual exceeds tol_check or evaluation throws.
inline VerificationReport run_verification(const SampleSpec& spec, const EvalConfig& cfg = {}) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  Sampler sampler(spec);
  std::vector<ParamAssignment> params;
  params.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) params.push_back(sampler.next());

  VerificationReport r;
  r.identity_id = spec.identity_id;
  r.seed = spec.seed;
  r.spec = spec;
  r.config = cfg;
  r.rejected_domain = sampler.rejected();
  r.rejected_conditioning = sampler.screened();
  r.samples.resize(params.size());
  EvalConfig eval_cfg = cfg;
  eval_cfg.pole_guard = spec.pole_guard;
  parallel_for(spec.count, [&](int i) {
    r.samples[i] = detail::evaluate_sample(sampler.identity(), i, params[i], eval_cfg);
  });
  summarize(r);
  r.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return r;
}

// ---------------------------------------------------------------------------
// Specialization and cross-check batches
// ---------------------------------------------------------------------------

/// Specialization checks tolerate this relative residual.
inline constexpr double kSpecializationTolerance = 1e-9;
/// Equivalence checks: residual bound on both identities, and left-side match.
inline constexpr double kEquivalenceTolerance = 1e-8;
inline constexpr double kLhsMatchTolerance = 1e-12;

struct BatchSummary {
  std::string label;
  int count = 0;
  int failed = 0;
  double max_rel_residual = 0.0;
  /// Detail of the first failing sample.
  std::string first_failure;

  bool passed() const noexcept { return failed == 0; }
};

/// Free-slot assignments for specialize_at_integer(id, m, ...): the pinned
/// slot is set to a q^-m before the constraint test.
inline std::vector<ParamAssignment> sample_specialization(SampleSpec spec, int m) {
  const std::string slot = specialization_slot(spec.identity_id);
  const std::string id = spec.identity_id;
  Sampler sampler(spec, {slot}, [id, m](const ParamAssignment& p) {
    return pin_at_integer(id, m, p);
  });
  std::vector<ParamAssignment> out;
  for (int i = 0; i < spec.count; ++i) {
    ParamAssignment p = sampler.next();
    ParamAssignment free;
    for (const auto& [k, v] : p.entries()) {
      if (k != slot) free.set(k, v);
    }
    out.push_back(std::move(free));
  }
  return out;
}

namespace detail {

struct BatchOutcome {
  bool ok = false;
  double residual = 0.0;
  std::string detail;
};

template <class Fn>
BatchSummary run_batch(std::string label, int count, Fn&& check) {
  std::vector<BatchOutcome> outcomes(count);
  parallel_for(count, [&](int i) {
    try {
      outcomes[i] = check(i);
    } catch (const Error& e) {
      outcomes[i] = {false, 0.0, e.what()};
    }
  });
  BatchSummary s;
  s.label = std::move(label);
  s.count = count;
  for (int i = 0; i < count; ++i) {
    const BatchOutcome& o = outcomes[i];
    s.max_rel_residual = std::max(s.max_rel_residual, o.residual);
    if (!o.ok) {
      if (s.failed == 0) s.first_failure = "sample " + std::to_string(i) + ": " + o.detail;
      ++s.failed;
    }
  }
  return s;
}

}  // namespace detail

/// specialize_at_integer over `spec.count` sampled free assignments. A sample
/// passes when the residual is within kSpecializationTolerance and the left
/// series terminates after exactly m backward terms.
inline BatchSummary run_specialization(const SampleSpec& spec, int m, const EvalConfig& cfg = {}) {
  const std::vector<ParamAssignment> free = sample_specialization(spec, m);
  return detail::run_batch(
      "specialize " + spec.identity_id + " m=" + std::to_string(m), spec.count, [&](int i) {
        const SpecializationCheck c = specialize_at_integer(spec.identity_id, m, free[i], cfg);
        detail::BatchOutcome o{c.check.rel_residual <= kSpecializationTolerance &&
                                   c.termination_as_predicted,
                               c.check.rel_residual, {}};
        if (!o.ok) {
          o.detail = "rel_residual " + format_double(c.check.rel_residual) +
                     ", backward terms " + std::to_string(c.lhs_backward_terms) +
                     (c.lhs_backward_terminated ? " (terminated)" : " (not terminated)");
        }
        return o;
      });
}

/// cross_check_equivalence over assignments sampled for both identities'
/// constraints at once.
inline std::vector<ParamAssignment> sample_equivalence(SampleSpec spec) {
  spec.identity_id = "thm3_8psi8_three_term";
  const IdentityDescriptor& jouhet = find_identity("jouhet_eq3");
  Sampler sampler(spec, {}, {}, [&jouhet, spec](const ParamAssignment& p) {
    const ParamAssignment jp = jouhet_slots_from_thm3(p);
    const auto cs = jouhet.constraint(jp);
    return std::all_of(cs.begin(), cs.end(),
                       [&](const Condition& c) { return c.holds() && c.margin() >= spec.margin; }) &&
           well_conditioned(jouhet, jp, spec);
  });
  std::vector<ParamAssignment> out;
  for (int i = 0; i < spec.count; ++i) out.push_back(sampler.next());
  return out;
}

inline BatchSummary run_equivalence(const SampleSpec& spec, const EvalConfig& cfg = {}) {
  const std::vector<ParamAssignment> params = sample_equivalence(spec);
  return detail::run_batch("equivalence thm3_8psi8_three_term jouhet_eq3", spec.count,
                           [&](int i) {
                             const EquivalenceCheck c = cross_check_equivalence(params[i], cfg);
                             const double worst =
                                 std::max(c.check_a.rel_residual, c.check_b.rel_residual);
                             detail::BatchOutcome o{worst <= kEquivalenceTolerance &&
                                                        c.lhs_match <= kLhsMatchTolerance,
                                                    worst, {}};
                             if (!o.ok) {
                               o.detail = "residuals " + format_double(c.check_a.rel_residual) +
                                          ", " + format_double(c.check_b.rel_residual) +
                                          ", lhs_match " + format_double(c.lhs_match);
                             }
                             return o;
                           });
}

/// One line per catalog entry, per specialization (three theorems, m = 0..3)
/// and for the equivalence check: 16 + 12 + 1 lines. Deterministic output.
struct CheckAllLine {
  std::string text;
  bool passed = false;
};

inline CheckAllLine batch_line(const BatchSummary& b) {
  std::string text = std::string(b.passed() ? "PASS" : "FAIL") + " " + b.label +
                     " samples=" + std::to_string(b.count) + " failed=" +
                     std::to_string(b.failed) + " max_rel=" + format_double(b.max_rel_residual);
  if (!b.passed()) text += " first_failure=" + b.first_failure;
  return {std::move(text), b.passed()};
}

inline std::vector<CheckAllLine> check_all(int samples, std::uint64_t seed,
                                           const EvalConfig& cfg = {}) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  std::vector<CheckAllLine> lines;
  auto verdict = [](bool ok) { return ok ? std::string("PASS") : std::string("FAIL"); };
  for (const IdentityDescriptor& d : catalog()) {
    SampleSpec spec;
    spec.identity_id = d.id;
    spec.count = samples;
    spec.seed = seed;
    const VerificationReport r = run_verification(spec, cfg);
    std::string text = verdict(r.failed == 0) + " identity " + d.id + " samples=" +
                       std::to_string(samples) + " failed=" + std::to_string(r.failed) +
                       " max_rel=" + format_double(r.max_rel_residual) +
                       " median_rel=" + format_double(r.median_rel_residual);
    for (const SampleRecord& s : r.samples) {
      if (!s.passed()) {
        text += " first_failure=" + std::to_string(s.index) + ":" + s.status;
        break;
      }
    }
    lines.push_back({std::move(text), r.failed == 0});
  }
  std::uint64_t offset = 1;
  for (const char* id : {"thm1_2psi2_to_8psi8", "thm2_4psi4_to_8psi8", "thm3_8psi8_three_term"}) {
    for (int m = 0; m <= 3; ++m) {
      SampleSpec spec;
      spec.identity_id = id;
      spec.count = samples;
      spec.seed = seed + offset++;
      lines.push_back(batch_line(run_specialization(spec, m, cfg)));
    }
  }
  SampleSpec spec;
  spec.count = samples;
  spec.seed = seed + offset;
  lines.push_back(batch_line(run_equivalence(spec, cfg)));
  return lines;
}

}  // namespace qseries
