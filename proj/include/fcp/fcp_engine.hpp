#pragma once

// Event-driven first contact percolation on finite regions of Z^d.
//
// An infection present at the origin at start_time crosses edge {x, y}
// at any realized meeting time of that edge that is not earlier than the
// time x got infected. Coincident meeting times on consecutive edges
// transmit instantaneously.

#include <iosfwd>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fcp/lattice.hpp"
#include "fcp/point_process.hpp"
#include "fcp/process_spec.hpp"

namespace fcp {

// Independent meeting-time patterns on every edge of a region, generated
// lazily and deterministically from (seed, edge key).
class EdgeEnvironment {
 public:
  EdgeEnvironment(ProcessSpec spec, Region region, std::uint64_t seed);

  const ProcessSpec& spec() const noexcept { return spec_; }
  const Region& region() const noexcept { return region_; }
  std::uint64_t seed() const noexcept { return seed_; }

  PointPattern pattern(EdgeKey edge, Window window) const;
  NextMeeting next_meeting(EdgeKey edge, double from, double limit) const;

  // Superposes extra meeting times onto an edge.
  void add_points(EdgeKey edge, std::vector<double> times);

 private:
  ProcessSpec spec_;
  Region region_;
  std::uint64_t seed_;
  std::unordered_map<EdgeKey, std::vector<double>> extra_;
};

struct Horizon {
  double time = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> vertex_budget;  // counts the origin
};

struct InfectionEvent {
  double time;
  std::size_t vertex;  // region index
};

// Nearest-neighbour self-avoiding spatial path x_0..x_{n+1} with meeting
// times t_0 <= ... <= t_n, t_i on edge {x_i, x_{i+1}}.
struct SpaceTimePath {
  std::vector<Vertex> vertices;
  std::vector<double> times;
};

// Checks every defining property of a permitted path against the
// environment: self-avoidance, nearest-neighbour steps, realized meeting
// times, monotone times, t_0 >= start and t_n < horizon.
bool is_permitted(const SpaceTimePath& path, const EdgeEnvironment& env, double start,
                  double horizon);

class SpreadResult {
 public:
  static constexpr double kUnreached = std::numeric_limits<double>::infinity();

  const Region& region() const noexcept { return region_; }
  double start_time() const noexcept { return start_time_; }
  bool stalled() const noexcept { return stalled_; }
  std::size_t infected_count() const noexcept { return trace_.size(); }
  const std::vector<InfectionEvent>& trace() const noexcept { return trace_; }

  // Hitting time by region index; kUnreached for vertices not reached.
  double time_at(std::size_t idx) const { return hitting_[idx]; }
  std::optional<double> hitting_time(const Vertex& v) const;
  // Witness permitted path from the origin, if v was reached.
  std::optional<SpaceTimePath> witness(const Vertex& v) const;
  // {v : T(v) < t} together with the origin.
  std::vector<Vertex> infected_at(double t) const;

 private:
  friend SpreadResult run_spread(const EdgeEnvironment&, double, Horizon);

  explicit SpreadResult(Region region) : region_(std::move(region)) {}

  Region region_;
  double start_time_ = 0.0;
  std::vector<double> hitting_;
  std::vector<std::size_t> parent_;
  std::vector<InfectionEvent> trace_;
  bool stalled_ = false;
};

// Earliest permitted-path arrival times from the origin (all-zero vertex).
// The origin is always infected at start_time; later arrivals are recorded
// while strictly before horizon.time and until the vertex budget is
// exhausted. Throws ConfigError when the origin is outside the region.
SpreadResult run_spread(const EdgeEnvironment& env, double start_time, Horizon horizon = {});

// First infection time of v, or nullopt if v is never reached.
std::optional<double> hitting_time(const EdgeEnvironment& env, const Vertex& v, double start_time);

std::vector<Vertex> infected_set(const EdgeEnvironment& env, double t, double start_time = 0.0);

// CSV export of the infection log: replica,x0[,x1..],time,event where
// event is "infect" or, for a final marker row after a stall, "stalled".
void write_trace_header(std::ostream& os, int dim);
void write_trace_rows(std::ostream& os, std::size_t replica, const SpreadResult& result);

// Pattern rug: one row per meeting time on [window.lo, window.hi) for every
// edge of the region, as replica,a0[,a1..],b0[,b1..],time with a < b in
// region index order. Edges in index order, times increasing.
void write_pattern_header(std::ostream& os, int dim);
void write_pattern_rows(std::ostream& os, std::size_t replica, const EdgeEnvironment& env, Window window);

}  // namespace fcp
