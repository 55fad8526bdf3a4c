#pragma once

// JSON serialization of verification reports and catalog listings.
// Layout is documented in docs/report_schema.md.

#include <string>

#include <json.hpp>

#include "qseries/harness.hpp"
#include "qseries/identities.hpp"

namespace qseries {

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json to_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline nlohmann::json to_json(const ParamAssignment& p) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : p.entries()) out[k] = to_json(v);
  return out;
}

inline nlohmann::json to_json(const SampleRecord& s) {
  nlohmann::json out{{"index", s.index},
                     {"params", to_json(s.params)},
                     {"lhs", to_json(s.lhs)},
                     {"rhs", to_json(s.rhs)},
                     {"rel_residual", nullptr},
                     {"tol_check", s.tol_check},
                     {"combined_err", s.combined_err},
                     {"status", s.status}};
  if (s.rel_residual) out["rel_residual"] = *s.rel_residual;
  if (!s.detail.empty()) out["detail"] = s.detail;
  return out;
}

/// `include_timing` = false drops summary.wall_time_ms, leaving a document
/// that is byte-identical across runs with the same inputs.
inline nlohmann::json to_json(const VerificationReport& r, bool include_timing = true) {
  nlohmann::json config{
      {"schema_version", kReportSchemaVersion},
      {"count", r.spec.count},
      {"q_range", {r.spec.q_range[0], r.spec.q_range[1]}},
      {"modulus_range", {r.spec.modulus_range[0], r.spec.modulus_range[1]}},
      {"complex_phases", r.spec.complex_phases},
      {"margin", r.spec.margin},
      {"pole_guard", r.spec.pole_guard},
      {"max_error_bound", r.spec.max_error_bound},
      {"tol", r.config.tol},
      {"max_terms", r.config.max_terms},
      {"check_tolerance_floor", kCheckToleranceFloor},
      {"check_error_factor", kCheckErrorFactor}};
  nlohmann::json summary{{"evaluated", r.samples.size()},
                         {"accepted", r.accepted},
                         {"failed", r.failed},
                         {"rejected_domain", r.rejected_domain},
                         {"rejected_conditioning", r.rejected_conditioning},
                         {"max_rel_residual", r.max_rel_residual},
                         {"median_rel_residual", r.median_rel_residual}};
  if (include_timing) summary["wall_time_ms"] = r.wall_time_ms;
  nlohmann::json samples = nlohmann::json::array();
  for (const SampleRecord& s : r.samples) samples.push_back(to_json(s));
  return nlohmann::json{{"identity_id", r.identity_id},
                        {"seed", r.seed},
                        {"config", std::move(config)},
                        {"summary", std::move(summary)},
                        {"samples", std::move(samples)}};
}

inline nlohmann::json to_json(const IdentityDescriptor& d) {
  return nlohmann::json{{"id", d.id},
                        {"name", d.name},
                        {"slots", d.slots},
                        {"constraint", d.constraint_text},
                        {"citation", d.citation}};
}

inline nlohmann::json catalog_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const IdentityDescriptor& d : catalog()) out.push_back(to_json(d));
  return out;
}

}  // namespace qseries
