#include "fcp/path_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SpatialPath {
  std::vector<std::size_t> vertices;  // region indices
  std::vector<EdgeKey> edges;
};

// Calls visit(path) for every self-avoiding path x -> y with at most
// max_len edges. visit returns false to stop the enumeration.
void for_each_spatial_path(const Region& region, std::size_t x, std::size_t y, std::size_t max_len,
                           const std::function<bool(const SpatialPath&)>& visit) {
  SpatialPath path;
  path.vertices.push_back(x);
  std::vector<char> on_path(region.size(), 0);
  on_path[x] = 1;
  bool stop = false;
  std::function<void(std::size_t)> dfs = [&](std::size_t v) {
    if (stop) return;
    if (v == y) {
      if (!visit(path)) stop = true;
      return;
    }
    if (path.edges.size() == max_len) return;
    std::vector<std::pair<std::size_t, EdgeKey>> nbrs;
    region.neighbors(v, nbrs);
    for (const auto& [w, e] : nbrs) {
      if (on_path[w]) continue;
      on_path[w] = 1;
      path.vertices.push_back(w);
      path.edges.push_back(e);
      dfs(w);
      path.edges.pop_back();
      path.vertices.pop_back();
      on_path[w] = 0;
      if (stop) return;
    }
  };
  dfs(x);
}

std::vector<std::vector<double>> edge_points(const EdgeEnvironment& env, const SpatialPath& p,
                                             double start, double t) {
  std::vector<std::vector<double>> pts;
  pts.reserve(p.edges.size());
  for (EdgeKey e : p.edges)
    pts.push_back(t > start ? env.pattern(e, {start, t}).times : std::vector<double>{});
  return pts;
}

std::size_t cell_of(double x, double t, std::size_t n) {
  // Boundaries are evaluated as i * t / n.
  const double dn = static_cast<double>(n);
  auto bound = [&](std::size_t i) { return static_cast<double>(i) * t / dn; };
  auto i = static_cast<std::size_t>(std::floor(x * dn / t));
  while (i + 1 < n && bound(i + 1) <= x) ++i;
  while (i > 0 && bound(i) > x) --i;
  return std::min(i, n - 1);
}

}  // namespace

PathCount count_paths(const EdgeEnvironment& env, const Vertex& x, const Vertex& y, double t,
                      const EnumerationLimits& limits, bool want_witnesses, double start) {
  const Region& region = env.region();
  const std::size_t xi = region.index(x), yi = region.index(y);
  PathCount result;
  if (xi == yi) {
    result.count = 1;
    if (want_witnesses) result.witnesses.push_back({{x}, {}});
    return result;
  }

  for_each_spatial_path(region, xi, yi, limits.max_path_len, [&](const SpatialPath& p) {
    const auto pts = edge_points(env, p, start, t);
    double product = 1.0;
    for (const auto& v : pts) {
      if (v.size() > limits.max_points_per_edge)
        throw BudgetError("count_paths: more than " + std::to_string(limits.max_points_per_edge) +
                              " meeting times on one edge",
                          result.count);
      product *= static_cast<double>(v.size());
    }
    if (product > static_cast<double>(limits.max_assignments))
      throw BudgetError("count_paths: time-assignment budget exceeded", result.count);
    if (product == 0.0) return true;

    // Enumerate t_0 <= t_1 <= ... <= t_n with t_i on edge i.
    std::vector<double> chosen(pts.size());
    std::function<void(std::size_t, double)> assign = [&](std::size_t i, double prev) {
      if (i == pts.size()) {
        ++result.count;
        if (want_witnesses) {
          SpaceTimePath w;
          for (auto v : p.vertices) w.vertices.push_back(region.vertex(v));
          w.times = chosen;
          result.witnesses.push_back(std::move(w));
        }
        return;
      }
      for (auto it = std::lower_bound(pts[i].begin(), pts[i].end(), prev); it != pts[i].end(); ++it) {
        chosen[i] = *it;
        assign(i + 1, *it);
      }
    };
    assign(0, start);
    return true;
  });
  return result;
}

std::uint64_t count_paths_discretized(const EdgeEnvironment& env, const Vertex& x, const Vertex& y,
                                      double t, std::size_t n, const EnumerationLimits& limits) {
  const Region& region = env.region();
  const std::size_t xi = region.index(x), yi = region.index(y);
  if (xi == yi) return 1;
  if (n == 0 || !(t > 0.0)) return 0;

  std::uint64_t total = 0;
  for_each_spatial_path(region, xi, yi, limits.max_path_len, [&](const SpatialPath& p) {
    const std::size_t k = p.edges.size();
    if (k > n) return true;
    // Nonempty cells per edge as (cell index, count), ascending.
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> cells(k);
    const auto pts = edge_points(env, p, 0.0, t);
    for (std::size_t j = 0; j < k; ++j)
      for (double s : pts[j]) {
        const auto c = cell_of(s, t, n);
        if (!cells[j].empty() && cells[j].back().first == c)
          ++cells[j].back().second;
        else
          cells[j].emplace_back(c, 1);
      }
    // Cells with no points contribute min = 0, so only nonempty cells are
    // walked.
    std::function<void(std::size_t, std::size_t, std::uint64_t)> walk =
        [&](std::size_t j, std::size_t min_cell, std::uint64_t current_min) {
          if (j == k) {
            total += current_min;
            return;
          }
          auto it = std::lower_bound(cells[j].begin(), cells[j].end(),
                                     std::pair<std::size_t, std::uint64_t>{min_cell, 0});
          for (; it != cells[j].end(); ++it) walk(j + 1, it->first, std::min(current_min, it->second));
        };
    walk(0, 0, std::numeric_limits<std::uint64_t>::max());
    return true;
  });
  return total;
}

double minimal_gap(const EdgeEnvironment& env, const Vertex& x, const Vertex& y, double t,
                   const EnumerationLimits& limits) {
  const Region& region = env.region();
  double gap = kInf;
  for_each_spatial_path(region, region.index(x), region.index(y), limits.max_path_len,
                        [&](const SpatialPath& p) {
                          std::vector<double> all;
                          for (const auto& v : edge_points(env, p, 0.0, t))
                            all.insert(all.end(), v.begin(), v.end());
                          std::sort(all.begin(), all.end());
                          all.erase(std::unique(all.begin(), all.end()), all.end());
                          for (std::size_t i = 1; i < all.size(); ++i)
                            gap = std::min(gap, all[i] - all[i - 1]);
                          return true;
                        });
  return gap;
}

bool reach_indicator(const EdgeEnvironment& env, const Vertex& x, const Vertex& y, double t,
                     const EnumerationLimits& limits, double start) {
  const Region& region = env.region();
  const std::size_t xi = region.index(x), yi = region.index(y);
  if (xi == yi) return true;
  bool found = false;
  for_each_spatial_path(region, xi, yi, limits.max_path_len, [&](const SpatialPath& p) {
    // Greedy earliest crossing decides existence of a monotone assignment.
    double now = start;
    for (EdgeKey e : p.edges) {
      auto next = env.next_meeting(e, now, t);
      if (next.status != NextStatus::kFound) return true;
      now = next.time;
    }
    found = true;
    return false;
  });
  return found;
}

}  // namespace fcp
