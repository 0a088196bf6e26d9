#pragma once

// Monte Carlo time constants on Z>=0, the waiting-time integral M and a
// subadditive upper estimate.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcp/process_spec.hpp"

namespace fcp {

enum class Regime { kFinite, kZero, kInfiniteStall };
std::string to_string(Regime r);

struct TimeConstantOptions {
  std::size_t n_vertices = 10000;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  // Reject specs that are not Z-stationary. Off for processes such as the
  // inhomogeneous Poisson example whose limit exists without stationarity.
  bool require_stationary = true;
  double z = 1.959963984540054;  // two-sided 95% normal quantile
};

struct TimeConstantEstimate {
  ProcessSpec spec;
  std::size_t n_vertices = 0;
  std::size_t replicas = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  Regime regime = Regime::kFinite;
  std::vector<double> samples;  // T(n)/n per replica (finite regime)
  // Number of infected vertices beyond the origin in every stalled replica.
  std::vector<std::size_t> stall_distances;
};

// Replicated T(n)/n on the half-line {0..n} with a normal-approximation
// CI. Regimes: zero when the spec carries an atom of mass one (decided
// from the spec), infinite-stall as soon as any replica stalls.
// Throws StationarityError (non-Z-stationary spec while
// require_stationary) and PreconditionError (n_vertices < 100 or no
// replicas).
TimeConstantEstimate estimate_time_constant(const ProcessSpec& spec, const TimeConstantOptions& opts);

struct WaitingBoundOptions {
  double integration_cap = 256.0;  // upper end of explicit quadrature
  double tolerance = 1e-10;        // absolute, per unit block
};

struct WaitingBound {
  enum class Status { kFinite, kInfinite, kIndeterminate };
  Status status = Status::kFinite;
  double value = 0.0;        // quadrature up to `cut`, infinity when kInfinite
  double error_bound = 0.0;  // quadrature error plus tail bound
  double cut = 0.0;          // where explicit integration stopped
  bool analytic = true;      // void probabilities were closed form
};

// M = int_0^inf P(X([0, s]) = 0) ds, integrated unit block by unit block
// with Gauss-Kronrod. The tail beyond the cut is bounded geometrically by
// submultiplicativity of void probabilities over unit blocks for
// Z-stationary kinds with independent cells; positive empty probability
// means M = inf.
WaitingBound waiting_bound_M(const ProcessSpec& spec, const WaitingBoundOptions& opts = {});

struct SubadditiveEstimate {
  double value = 0.0;  // min over the grid of mean T(t)/t
  double lo = 0.0;
  double hi = 0.0;
  std::size_t t_at_min = 0;
};

// min_t E[T(t)]/t over an integer grid, each mean from `replicas` runs.
SubadditiveEstimate subadditive_upper(const ProcessSpec& spec, const std::vector<std::size_t>& t_grid,
                                      std::size_t replicas, std::uint64_t seed, unsigned workers = 0);

nlohmann::json to_json(const TimeConstantEstimate& e);
nlohmann::json to_json(const WaitingBound& m);

// CSV: spec_json,n,replicas,mean,lo,hi,regime
void write_estimate_header(std::ostream& os);
void write_estimate_row(std::ostream& os, const TimeConstantEstimate& e);

}  // namespace fcp
