#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fcp/point_process.hpp"

namespace fcp {

using Vertex = std::vector<std::int64_t>;

// Finite region of Z^d with nearest-neighbour edges: either the half-line
// {0, ..., n} or an axis-aligned box. Vertices are addressed by a dense
// index for the engine and by coordinates at the API boundary.
class Region {
 public:
  static Region half_line(std::int64_t last_vertex);
  // Centered box [-radius, radius]^dim.
  static Region box(int dim, std::int64_t radius);
  // Box with inclusive corners lo and hi.
  static Region box(Vertex lo, Vertex hi);

  int dim() const noexcept { return static_cast<int>(lo_.size()); }
  bool is_half_line() const noexcept { return half_line_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t num_edges() const noexcept;
  const Vertex& lo() const noexcept { return lo_; }
  const Vertex& hi() const noexcept { return hi_; }

  bool contains(const Vertex& v) const noexcept;
  // Throws DomainError for vertices outside the region.
  std::size_t index(const Vertex& v) const;
  Vertex vertex(std::size_t idx) const;

  // Appends (neighbour index, edge key) pairs of idx.
  void neighbors(std::size_t idx, std::vector<std::pair<std::size_t, EdgeKey>>& out) const;

  // Key of the undirected edge {a, b}; identical for both orientations.
  static EdgeKey edge_key(const Vertex& a, const Vertex& b);

  std::string describe() const;

 private:
  Region(Vertex lo, Vertex hi, bool half_line);

  Vertex lo_, hi_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  bool half_line_ = false;
};

}  // namespace fcp
