#include "fcp/fcp_engine.hpp"

#include <algorithm>
#include <functional>
#include <ostream>
#include <queue>
#include <set>

#include "fcp/errors.hpp"

namespace fcp {

namespace {
constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);
}

EdgeEnvironment::EdgeEnvironment(ProcessSpec spec, Region region, std::uint64_t seed)
    : spec_(std::move(spec)), region_(std::move(region)), seed_(seed) {}

PointPattern EdgeEnvironment::pattern(EdgeKey edge, Window window) const {
  auto p = sample_pattern(spec_, seed_, edge, window);
  if (auto it = extra_.find(edge); it != extra_.end()) {
    for (double x : it->second)
      if (x >= window.lo && x < window.hi) p.times.push_back(x);
    std::sort(p.times.begin(), p.times.end());
    p.times.erase(std::unique(p.times.begin(), p.times.end()), p.times.end());
  }
  return p;
}

NextMeeting EdgeEnvironment::next_meeting(EdgeKey edge, double from, double limit) const {
  auto base = fcp::next_meeting(spec_, seed_, edge, from, limit);
  auto it = extra_.find(edge);
  if (it == extra_.end()) return base;
  auto x = std::lower_bound(it->second.begin(), it->second.end(), from);
  if (x == it->second.end() || *x >= limit) return base;
  if (base.status == NextStatus::kFound && base.time <= *x) return base;
  return {NextStatus::kFound, *x};
}

void EdgeEnvironment::add_points(EdgeKey edge, std::vector<double> times) {
  auto& v = extra_[edge];
  v.insert(v.end(), times.begin(), times.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

bool is_permitted(const SpaceTimePath& path, const EdgeEnvironment& env, double start,
                  double horizon) {
  const auto& vs = path.vertices;
  if (vs.size() < 2 || path.times.size() + 1 != vs.size()) return false;
  std::set<Vertex> seen(vs.begin(), vs.end());
  if (seen.size() != vs.size()) return false;
  double prev = start;
  for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
    const auto& a = vs[i];
    const auto& b = vs[i + 1];
    if (!env.region().contains(a) || !env.region().contains(b)) return false;
    std::int64_t dist = 0;
    for (std::size_t k = 0; k < a.size(); ++k) dist += std::abs(a[k] - b[k]);
    if (dist != 1) return false;
    const double t = path.times[i];
    if (t < prev) return false;
    auto pat = env.pattern(Region::edge_key(a, b), {t, std::nextafter(t, SpreadResult::kUnreached)});
    if (pat.times.empty() || pat.times.front() != t) return false;
    prev = t;
  }
  return prev < horizon;
}

std::optional<double> SpreadResult::hitting_time(const Vertex& v) const {
  const double t = hitting_[region_.index(v)];
  if (t == kUnreached) return std::nullopt;
  return t;
}

std::optional<SpaceTimePath> SpreadResult::witness(const Vertex& v) const {
  std::size_t idx = region_.index(v);
  if (hitting_[idx] == kUnreached) return std::nullopt;
  std::vector<std::size_t> chain;
  for (; idx != kNoParent; idx = parent_[idx]) chain.push_back(idx);
  std::reverse(chain.begin(), chain.end());
  SpaceTimePath path;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    path.vertices.push_back(region_.vertex(chain[i]));
    if (i > 0) path.times.push_back(hitting_[chain[i]]);
  }
  return path;
}

std::vector<Vertex> SpreadResult::infected_at(double t) const {
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < trace_.size(); ++i)
    if (i == 0 || trace_[i].time < t) out.push_back(region_.vertex(trace_[i].vertex));
  return out;
}

SpreadResult run_spread(const EdgeEnvironment& env, double start_time, Horizon horizon) {
  const Region& region = env.region();
  const Vertex origin(region.dim(), 0);
  if (!region.contains(origin)) throw ConfigError("origin lies outside region " + region.describe());
  if (!std::isfinite(start_time)) throw ConfigError("start time must be finite");
  if (horizon.vertex_budget && *horizon.vertex_budget == 0)
    throw ConfigError("vertex budget must be positive");

  SpreadResult res(region);
  res.start_time_ = start_time;
  res.hitting_.assign(region.size(), SpreadResult::kUnreached);
  res.parent_.assign(region.size(), kNoParent);
  std::vector<char> done(region.size(), 0);

  using Event = std::pair<double, std::size_t>;  // (time, vertex index)
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  const std::size_t o = region.index(origin);
  res.hitting_[o] = start_time;
  queue.emplace(start_time, o);

  std::vector<std::pair<std::size_t, EdgeKey>> nbrs;
  bool cut_by_horizon = false;
  bool exhausted = true;
  while (!queue.empty()) {
    const auto [t, v] = queue.top();
    queue.pop();
    if (done[v] || t > res.hitting_[v]) continue;
    if (v != o && t >= horizon.time) {
      cut_by_horizon = true;
      exhausted = false;
      break;
    }
    done[v] = 1;
    res.trace_.push_back({t, v});
    if (horizon.vertex_budget && res.trace_.size() >= *horizon.vertex_budget) {
      exhausted = false;
      break;
    }
    nbrs.clear();
    region.neighbors(v, nbrs);
    for (const auto& [w, edge] : nbrs) {
      if (done[w]) continue;
      const double limit = std::min(res.hitting_[w], horizon.time);
      const auto next = env.next_meeting(edge, t, limit);
      if (next.status == NextStatus::kFound) {
        if (next.time < res.hitting_[w]) {
          res.hitting_[w] = next.time;
          res.parent_[w] = v;
          queue.emplace(next.time, w);
        }
      } else if (next.status == NextStatus::kBeyondLimit && limit == horizon.time &&
                 res.hitting_[w] == SpreadResult::kUnreached) {
        cut_by_horizon = true;
      }
    }
  }
  // Vertices whose only candidate times lie at or past the horizon are
  // not reported as reached.
  for (std::size_t i = 0; i < region.size(); ++i)
    if (!done[i]) {
      res.hitting_[i] = SpreadResult::kUnreached;
      res.parent_[i] = kNoParent;
    }
  res.stalled_ = exhausted && !cut_by_horizon && res.trace_.size() < region.size();
  return res;
}

std::optional<double> hitting_time(const EdgeEnvironment& env, const Vertex& v, double start_time) {
  env.region().index(v);  // domain check
  return run_spread(env, start_time).hitting_time(v);
}

std::vector<Vertex> infected_set(const EdgeEnvironment& env, double t, double start_time) {
  if (t < start_time) throw DomainError("infected_set: t precedes the start time");
  return run_spread(env, start_time, Horizon{t, std::nullopt}).infected_at(t);
}

void write_trace_header(std::ostream& os, int dim) {
  os << "replica";
  for (int i = 0; i < dim; ++i) os << ",x" << i;
  os << ",time,event\n";
}

void write_trace_rows(std::ostream& os, std::size_t replica, const SpreadResult& result) {
  auto row = [&](const InfectionEvent& e, const char* kind) {
    os << replica;
    for (auto c : result.region().vertex(e.vertex)) os << ',' << c;
    os << ',' << e.time << ',' << kind << '\n';
  };
  const auto prec = os.precision(17);
  for (const auto& e : result.trace()) row(e, "infect");
  if (result.stalled() && !result.trace().empty()) row(result.trace().back(), "stalled");
  os.precision(prec);
}

void write_pattern_header(std::ostream& os, int dim) {
  os << "replica";
  for (int i = 0; i < dim; ++i) os << ",a" << i;
  for (int i = 0; i < dim; ++i) os << ",b" << i;
  os << ",time\n";
}

void write_pattern_rows(std::ostream& os, std::size_t replica, const EdgeEnvironment& env, Window window) {
  const auto& region = env.region();
  const auto prec = os.precision(17);
  std::vector<std::pair<std::size_t, EdgeKey>> nbrs;
  for (std::size_t i = 0; i < region.size(); ++i) {
    nbrs.clear();
    region.neighbors(i, nbrs);
    std::sort(nbrs.begin(), nbrs.end());
    const auto a = region.vertex(i);
    for (const auto& [j, key] : nbrs) {
      if (j < i) continue;
      const auto b = region.vertex(j);
      for (double t : env.pattern(key, window).times) {
        os << replica;
        for (auto c : a) os << ',' << c;
        for (auto c : b) os << ',' << c;
        os << ',' << t << '\n';
      }
    }
  }
  os.precision(prec);
}

}  // namespace fcp
