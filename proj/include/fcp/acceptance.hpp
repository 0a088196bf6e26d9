#pragma once

// The acceptance suite: one pass/fail verdict per headline criterion with
// pinned tolerances. Shared by the acceptance binary and `fcp_lab verify`.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fcp {

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  std::string measured;  // what was observed, against the pinned tolerance
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  unsigned workers = 0;
  std::vector<std::string> only;  // criterion ids; empty runs all
};

// Runs the criteria in order, reporting each as soon as it is decided.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS A01 <title> | <measured> (<seconds>s)"
std::string format_line(const CriterionResult& r);

nlohmann::json to_json(const CriterionResult& r);

}  // namespace fcp
