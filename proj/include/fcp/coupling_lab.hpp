#pragma once

// Quantile coupling of two FCP models on Z>=0 driven by shared uniforms,
// executable checks of the coupling properties and of the block argument
// behind the strict speed-up.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcp/ordering_lab.hpp"
#include "fcp/point_process.hpp"

namespace fcp {

// tau_t(u_1..u_k): start at t, then repeatedly add G_{current}(u_i).
double tau(const HittingFunction& h, double t, std::span<const double> us);
double tau(const ProcessSpec& spec, double t, std::span<const double> us);

struct CouplingRun {
  std::vector<double> uniforms;    // U_1..U_n
  std::vector<double> tau_strong;  // T_t(0..n)
  std::vector<double> tau_weak;    // T'_t(0..n)
  bool dominated = true;           // T_t(k) <= T'_t(k) for every k
  std::optional<std::size_t> first_violation;
};

// Shared uniforms are drawn from `seed`. A domination violation is
// recorded, not thrown.
CouplingRun coupled_run(const HittingFunction& strong, const HittingFunction& weak, double t,
                        std::size_t n, std::uint64_t seed);
CouplingRun coupled_run(const ProcessSpec& strong, const ProcessSpec& weak, double t, std::size_t n,
                        std::uint64_t seed);

struct LemmaOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 7;
  // Per-draw slack for inequalities that hold with equality in exact
  // arithmetic but are evaluated through different summation orders.
  double rel_slack = 1e-12;
  double continuity_tol = 1e-6;  // item 6, at the finest step 2^-30
};

struct LemmaItem {
  int item = 0;
  std::string name;
  enum class Status { kPass, kFail, kPrecondition } status = Status::kPass;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string detail;
};

struct LemmaReport {
  ProcessSpec strong;
  ProcessSpec weak;
  std::vector<LemmaItem> items;
  bool all_pass() const;
};

// Items (1)-(6) on randomized inputs. Single-process items are evaluated
// on both specs; (2) compares the pair. Precondition failures are reported
// per item.
LemmaReport check_lemma_properties(const ProcessSpec& strong, const ProcessSpec& weak,
                                   const LemmaOptions& opts = {});

struct BlockOptions {
  std::size_t replicas = 1000;
  std::uint64_t seed = 11;
  std::size_t claim1_trials = 1000;
  std::size_t frequency_replicas = 100000;
  double frequency_floor = 1e-6;  // below this the A_z frequency is not sampled
  std::vector<std::size_t> claim3_z = {1, 2, 4, 8, 16};
  std::size_t claim3_replicas = 200;
  std::string reproducer_path;  // written on a Claim-2 failure when set
  unsigned workers = 0;
};

struct BlockReport {
  SpeedupCertificate certificate;
  double a_o = 0.0;
  // Claim 1 on random (t_o, u) draws satisfying its hypothesis.
  std::size_t claim1_checked = 0;
  std::size_t claim1_hypothesis_failed = 0;
  std::size_t claim1_violations = 0;
  // Claim 2 on conditioned blocks.
  std::size_t claim2_replicas = 0;
  std::size_t claim2_violations = 0;
  double claim2_min_gain = 0.0;
  // Unconditioned frequency of A_0.
  bool frequency_checked = false;
  double frequency = 0.0;
  double frequency_std_error = 0.0;
  bool frequency_within_3se = true;
  // Claim 3: z -> P(T'(m^2 z) - T(m^2 z) <= delta m^2 z).
  double delta = 0.0;
  std::vector<std::pair<std::size_t, double>> claim3_curve;
};

// Throws PreconditionError for certificates with margin <= 0 and
// PropertyViolation (after writing the reproducer) on a Claim-2 failure.
BlockReport speedup_block_check(const ProcessSpec& strong, const ProcessSpec& weak,
                                const SpeedupCertificate& cert, const BlockOptions& opts = {});

// m_lower = min{k : tau'_0(u', ..., u' k times) >= 2}; PreconditionError
// when the weak process never gets there within `cap` steps.
std::size_t minimal_steps(const HittingFunction& weak, double u_weak, std::size_t cap = 1'000'000);

// a_o < a with P(X'([a_o, b]) > 0) = 2u' + eps, by bisection.
double find_a_o(const HittingFunction& weak, const SpeedupCertificate& cert);

nlohmann::json to_json(const CouplingRun& run);
nlohmann::json to_json(const LemmaReport& r);
nlohmann::json to_json(const BlockReport& r);

}  // namespace fcp
