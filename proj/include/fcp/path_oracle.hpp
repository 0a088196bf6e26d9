#pragma once

// Brute-force enumeration of permitted paths on small instances, used as
// an independent oracle for the spread engine, together with the
// discretized min-sum representation of the path count.

#include <cstdint>
#include <vector>

#include "fcp/fcp_engine.hpp"

namespace fcp {

struct EnumerationLimits {
  std::size_t max_path_len = 12;         // edges per spatial path
  std::size_t max_points_per_edge = 16;  // realized points on [start, t)
  std::uint64_t max_assignments = 100'000'000;  // product cap per spatial path
};

struct PathCount {
  std::uint64_t count = 0;
  std::vector<SpaceTimePath> witnesses;  // filled on request
};

// N_t(x, y): number of permitted paths from x to y whose meeting times lie
// in [start, t). By convention x == y counts the empty path once.
// Throws BudgetError (carrying the partial count) when a limit is hit.
PathCount count_paths(const EdgeEnvironment& env, const Vertex& x, const Vertex& y, double t,
                      const EnumerationLimits& limits = {}, bool want_witnesses = false,
                      double start = 0.0);

// Sum over spatial paths of length k <= n of
//   sum_{(B_1..B_k) in J_k(n)} min_j X_{e_j}(B_j),
// with cells B = [(i-1) t/n, i t/n), i = 1..n, and J_k(n) the
// non-decreasing k-tuples of cells. Paths longer than n contribute 0.
std::uint64_t count_paths_discretized(const EdgeEnvironment& env, const Vertex& x, const Vertex& y,
                                      double t, std::size_t n, const EnumerationLimits& limits = {});

// Smallest gap between distinct realized meeting times on [0, t), taken
// over the edges of each enumerated spatial path x -> y. Infinity when no
// path carries two distinct times.
double minimal_gap(const EdgeEnvironment& env, const Vertex& x, const Vertex& y, double t,
                   const EnumerationLimits& limits = {});

// N_t(x, y) >= 1, stopping at the first witness.
bool reach_indicator(const EdgeEnvironment& env, const Vertex& x, const Vertex& y, double t,
                     const EnumerationLimits& limits = {}, double start = 0.0);

}  // namespace fcp
