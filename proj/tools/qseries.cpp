// Command-line front end: list, verify, eval, check-all.
//
// Exit codes:
//   0  success
//   1  residual failures (verify, check-all) or an unexpected error
//   2  usage, parse or domain error; unknown identity
//   3  sampler exhausted
//   4  eval: divergent region
//   5  eval: pole hit or budget exhausted

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qseries/harness.hpp"
#include "qseries/identities.hpp"
#include "qseries/report_json.hpp"
#include "qseries/series.hpp"

namespace {

using namespace qseries;

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;
constexpr int kExitExhausted = 3;
constexpr int kExitDivergent = 4;
constexpr int kExitPole = 5;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Exhausted: return kExitExhausted;
    case ErrorCode::DivergentRegion: return kExitDivergent;
    case ErrorCode::PoleHit:
    case ErrorCode::Budget: return kExitPole;
    case ErrorCode::DomainViolation:
    case ErrorCode::InvalidArgument: return kExitUsage;
  }
  return kExitFailures;
}

std::vector<Complex> parse_list(const std::string& text) {
  std::vector<Complex> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.find_first_not_of(" \t") != std::string::npos) {
      out.push_back(parse_complex(item));
    } else if (comma != std::string::npos || !out.empty()) {
      throw Error(ErrorCode::InvalidArgument, "empty entry in list '" + text + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct ListOptions {
  bool json = false;
};

int run_list(const ListOptions& o) {
  if (o.json) {
    std::cout << catalog_json().dump(2) << '\n';
    return kExitOk;
  }
  for (const IdentityDescriptor& d : catalog()) {
    std::string slots;
    for (const std::string& s : d.slots) slots += (slots.empty() ? "" : ",") + s;
    std::cout << d.id << '\t' << d.name << '\t' << slots << '\t' << d.constraint_text << '\t'
              << d.citation << '\n';
  }
  return kExitOk;
}

struct VerifyOptions {
  std::string identity;
  int samples = 100;
  std::uint64_t seed = 42;
  double tol = EvalConfig{}.tol;
  double q_min = 0.1;
  double q_max = 0.6;
  double margin = 0.15;
  double max_error_bound = SampleSpec{}.max_error_bound;
  std::string json_path;
};

int run_verify(const VerifyOptions& o) {
  find_identity(o.identity);
  SampleSpec spec;
  spec.identity_id = o.identity;
  spec.count = o.samples;
  spec.seed = o.seed;
  spec.q_range = {o.q_min, o.q_max};
  spec.margin = o.margin;
  spec.max_error_bound = o.max_error_bound;
  EvalConfig cfg;
  cfg.tol = o.tol;
  const VerificationReport r = run_verification(spec, cfg);

  const bool json_stdout = o.json_path == "-";
  if (!o.json_path.empty()) {
    const std::string doc = to_json(r).dump(2);
    if (json_stdout) {
      std::cout << doc << '\n';
    } else {
      std::ofstream out(o.json_path);
      if (!(out << doc << '\n')) {
        std::cerr << "error: cannot write " << o.json_path << '\n';
        return kExitFailures;
      }
    }
  }
  if (!json_stdout) {
    std::cout << "identity " << r.identity_id << " seed " << r.seed << '\n'
              << "evaluated " << r.samples.size() << " accepted " << r.accepted << " failed "
              << r.failed << '\n'
              << "rejected_domain " << r.rejected_domain << " rejected_conditioning "
              << r.rejected_conditioning << '\n'
              << "max_rel_residual " << format_double(r.max_rel_residual) << '\n'
              << "median_rel_residual " << format_double(r.median_rel_residual) << '\n'
              << "wall_time_ms " << r.wall_time_ms << '\n';
    for (const SampleRecord& s : r.samples) {
      if (s.passed()) continue;
      std::cout << "FAIL sample " << s.index << ' ' << s.status;
      if (s.rel_residual) std::cout << " rel_residual " << format_double(*s.rel_residual);
      if (!s.detail.empty()) std::cout << ' ' << s.detail;
      std::cout << '\n';
    }
  }
  return r.failed == 0 ? kExitOk : kExitFailures;
}

struct EvalOptions {
  std::string kind;
  std::string num;
  std::string den;
  std::string num_pairs;
  std::string den_pairs;
  std::string q;
  std::string z;
  double tol = EvalConfig{}.tol;
  int max_terms = EvalConfig{}.max_terms;
  bool json = false;
};

int run_eval(const EvalOptions& o) {
  const QBase q(parse_complex(o.q));
  ParamList num{parse_list(o.num), parse_list(o.num_pairs)};
  ParamList den{parse_list(o.den), parse_list(o.den_pairs)};
  const SeriesKind kind = o.kind == "psi" ? SeriesKind::Bilateral : SeriesKind::Unilateral;
  const SeriesSpec spec(kind, std::move(num), std::move(den), q, parse_complex(o.z));
  EvalConfig cfg;
  cfg.tol = o.tol;
  cfg.max_terms = o.max_terms;
  const EvalResult r = eval_series(spec, cfg);
  if (o.json) {
    nlohmann::json out{{"value", to_json(r.value)},
                       {"err", r.err},
                       {"rounding_err", r.rounding_err},
                       {"n_forward", r.n_forward},
                       {"n_backward", r.n_backward},
                       {"status", std::string(to_string(r.status))},
                       {"forward_terminated", r.forward_terminated},
                       {"backward_terminated", r.backward_terminated},
                       {"detail", r.detail}};
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "value " << format_complex(r.value) << '\n'
              << "err " << format_double(r.err) << '\n'
              << "rounding_err " << format_double(r.rounding_err) << '\n'
              << "n_forward " << r.n_forward << '\n'
              << "n_backward " << r.n_backward << '\n'
              << "status " << to_string(r.status) << '\n';
    if (!r.detail.empty()) std::cout << "detail " << r.detail << '\n';
  }
  switch (r.status) {
    case EvalStatus::Converged: return kExitOk;
    case EvalStatus::DivergentRegion: return kExitDivergent;
    case EvalStatus::PoleHit:
    case EvalStatus::Budget: return kExitPole;
  }
  return kExitFailures;
}

struct CheckAllOptions {
  int samples = 100;
  std::uint64_t seed = 42;
};

int run_check_all(const CheckAllOptions& o) {
  bool ok = true;
  for (const CheckAllLine& line : check_all(o.samples, o.seed)) {
    std::cout << line.text << '\n';
    ok = ok && line.passed;
  }
  return ok ? kExitOk : kExitFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-series evaluation and identity verification"};
  app.require_subcommand(1);

  ListOptions list_opts;
  auto* list = app.add_subcommand("list", "List catalog entries");
  list->add_flag("--json", list_opts.json, "Emit a JSON array");

  VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "Check one identity on sampled parameters");
  verify->add_option("--identity", verify_opts.identity, "Catalog id")->required();
  verify->add_option("--samples", verify_opts.samples, "Sample count")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_opts.seed, "Sampler seed");
  verify->add_option("--tol", verify_opts.tol, "Series tolerance");
  verify->add_option("--q-min", verify_opts.q_min, "Lower bound of sampled q");
  verify->add_option("--q-max", verify_opts.q_max, "Upper bound of sampled q");
  verify->add_option("--margin", verify_opts.margin, "Log-modulus margin from constraints");
  verify->add_option("--max-error-bound", verify_opts.max_error_bound,
                     "Conditioning screen on the relative error bound (0 disables)");
  verify->add_option("--json", verify_opts.json_path, "Write the JSON report here ('-' = stdout)");

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate one series");
  eval->add_option("--kind", eval_opts.kind, "phi (unilateral) or psi (bilateral)")
      ->required()
      ->check(CLI::IsMember({"phi", "psi"}));
  eval->add_option("--num", eval_opts.num, "Numerator parameters, comma separated");
  eval->add_option("--den", eval_opts.den,
                   "Denominator parameters, comma separated (phi: q is implicit)");
  eval->add_option("--num-pairs", eval_opts.num_pairs,
                   "Squared +-pairs w standing for (w^1/2, -w^1/2) in the numerator");
  eval->add_option("--den-pairs", eval_opts.den_pairs, "Squared +-pairs in the denominator");
  eval->add_option("--q", eval_opts.q, "Base q, 0 < |q| < 1")->required();
  eval->add_option("--z", eval_opts.z, "Argument z")->required();
  eval->add_option("--tol", eval_opts.tol, "Series tolerance");
  eval->add_option("--max-terms", eval_opts.max_terms, "Terms per direction");
  eval->add_flag("--json", eval_opts.json, "Emit a JSON object");

  CheckAllOptions check_opts;
  auto* check = app.add_subcommand("check-all",
                                   "Verify every entry, the specializations and the equivalence");
  check->add_option("--samples", check_opts.samples, "Samples per check")
      ->check(CLI::PositiveNumber);
  check->add_option("--seed", check_opts.seed, "Base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*list) return run_list(list_opts);
    if (*verify) return run_verify(verify_opts);
    if (*eval) return run_eval(eval_opts);
    if (*check) return run_check_all(check_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return kExitUsage;
}
