#pragma once

// Sampling of point patterns and analytic or empirical hitting, void and
// quantile functions for ProcessSpec.
//
// Sampling is a pure function of (spec, seed, edge, window). Stationary
// base kinds are generated unit cell by unit cell from a counter-based
// generator keyed by (seed, edge, cell), so patterns of adjacent windows
// concatenate exactly to the pattern of their union.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "fcp/process_spec.hpp"

namespace fcp {

using EdgeKey = std::uint64_t;

// Half-open time window [lo, hi).
struct Window {
  double lo;
  double hi;
};

struct PointPattern {
  Window window;
  std::vector<double> times;  // strictly increasing, inside window
};

// Throws InvalidWindowError for non-finite bounds or lo >= hi.
PointPattern sample_pattern(const ProcessSpec& spec, std::uint64_t seed, EdgeKey edge, Window window);

// True when the edge's realization is empty on the whole line, as decided
// at sampling time (EmptyMixture draw, zero keep probability).
bool edge_is_empty(const ProcessSpec& spec, std::uint64_t seed, EdgeKey edge);

enum class NextStatus { kFound, kEmpty, kBeyondLimit };

struct NextMeeting {
  NextStatus status;
  double time;  // valid when status == kFound
};

// Smallest realized meeting time >= from. Scanning stops at `limit`
// (exclusive); kEmpty is returned for decidably empty edges.
NextMeeting next_meeting(const ProcessSpec& spec, std::uint64_t seed, EdgeKey edge, double from,
                         double limit);

// Closed interval [lo, hi]; lo == hi denotes a single point.
struct ClosedInterval {
  double lo;
  double hi;
};

// Probability generating function E[s^{X(B)}] of the number of points in
// the union B of closed intervals, in closed form. nullopt when no closed
// form is implemented for the spec (Thinned/EmptyMixture over Shifted with
// s != 0).
std::optional<double> count_pgf(const ProcessSpec& spec, std::span<const ClosedInterval> set,
                                double s);

// Closed-form P(X(B) = 0), or nullopt.
std::optional<double> analytic_void(const ProcessSpec& spec, std::span<const ClosedInterval> set);

struct ProbabilityEstimate {
  double value;
  double std_error;  // zero for analytic values
  bool analytic;
};

struct EmpiricalOptions {
  std::size_t replicas = 100000;
  double resolution = 1e-3;
  std::uint64_t seed = 0x5eed;
};

// P(X([a, a + t]) > 0). Closed form where available, Monte Carlo otherwise.
// Throws DomainError for t < 0.
ProbabilityEstimate hitting_prob(const ProcessSpec& spec, double a, double t,
                                 const EmpiricalOptions& opts = {});

// P(X([lo, hi]) = 0) = 1 - hitting_prob. Throws DomainError for an
// unbounded or reversed interval.
ProbabilityEstimate void_prob(const ProcessSpec& spec, ClosedInterval interval,
                              const EmpiricalOptions& opts = {});

// FPP transmission-time CDF mu([0, s]) = P(X([0, s]) > 0) of an
// R-stationary spec. Throws StationarityError otherwise.
double fpp_transmission_cdf(const ProcessSpec& spec, double s);

// lim_{t -> inf} F_a(t); identical for all a for the shipped kinds.
double limiting_hit_prob(const ProcessSpec& spec);

// P(X = empty set).
double empty_probability(const ProcessSpec& spec);

// Candidate atom locations reduced into [0, 1). Kinds without atoms
// return an empty list.
std::vector<double> atom_candidates(const ProcessSpec& spec);

// sup_x P(x in X), evaluated on the atom candidates.
double max_atom_mass(const ProcessSpec& spec);
inline bool is_atomless(const ProcessSpec& spec) { return max_atom_mass(spec) == 0.0; }

// Generalized inverse G_a(u) = inf{t >= 0 : u <= F_a(t)}. Closed form
// for L, SL, Poisson and Scaled of these; bisection on the analytic F
// otherwise. Throws DomainError for u outside [0, 1] and
// UnreachableQuantileError when u exceeds sup_t F_a(t).
double quantile(const ProcessSpec& spec, double a, double u);

// Hitting function F_a(t) together with its quantile G_a(u), either from
// closed forms or from an empirical grid of first-hit distances.
class HittingFunction {
 public:
  enum class Form { kAnalytic, kEmpirical };

  // Analytic when the spec admits a closed-form void probability.
  explicit HittingFunction(ProcessSpec spec, EmpiricalOptions opts = {});
  // Forces the empirical form (used to cross-check analytic forms).
  static HittingFunction empirical(ProcessSpec spec, EmpiricalOptions opts = {});

  HittingFunction(const HittingFunction&) = delete;
  HittingFunction& operator=(const HittingFunction&) = delete;

  const ProcessSpec& spec() const noexcept { return spec_; }
  Form form() const noexcept { return form_; }

  double F(double a, double t) const;
  // Standard error of F; zero for the analytic form.
  double F_stderr(double a, double t) const;
  double G(double a, double u) const;
  // a + G_a(u) evaluated in absolute time, so that arrivals on lattice
  // points land on them exactly.
  double arrival(double a, double u) const;

 private:
  HittingFunction(ProcessSpec spec, EmpiricalOptions opts, Form form);

  // Sorted first-hit distances from a (infinity when no point up to the
  // scan horizon).
  const std::vector<double>& distances(double a) const;

  ProcessSpec spec_;
  EmpiricalOptions opts_;
  Form form_;
  double scan_horizon_ = 64.0;
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, std::vector<double>> tables_;
};

}  // namespace fcp
