#include "fcp/lattice.hpp"

#include <algorithm>

#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

Region::Region(Vertex lo, Vertex hi, bool half_line)
    : lo_(std::move(lo)), hi_(std::move(hi)), half_line_(half_line) {
  if (lo_.empty() || lo_.size() != hi_.size()) throw ConfigError("region corners must share a dimension >= 1");
  size_ = 1;
  stride_.resize(lo_.size());
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (hi_[i] < lo_[i]) throw ConfigError("region corner hi must dominate lo");
    stride_[i] = size_;
    size_ *= static_cast<std::size_t>(hi_[i] - lo_[i] + 1);
  }
}

Region Region::half_line(std::int64_t last_vertex) {
  if (last_vertex < 0) throw ConfigError("half-line needs a non-negative last vertex");
  return Region({0}, {last_vertex}, true);
}

Region Region::box(int dim, std::int64_t radius) {
  if (dim < 1) throw ConfigError("box dimension must be >= 1");
  if (radius < 0) throw ConfigError("box radius must be >= 0");
  return Region(Vertex(dim, -radius), Vertex(dim, radius), false);
}

Region Region::box(Vertex lo, Vertex hi) { return Region(std::move(lo), std::move(hi), false); }

std::size_t Region::num_edges() const noexcept {
  std::size_t n = 0;
  for (std::size_t axis = 0; axis < lo_.size(); ++axis) {
    const auto len = static_cast<std::size_t>(hi_[axis] - lo_[axis] + 1);
    n += size_ / len * (len - 1);
  }
  return n;
}

bool Region::contains(const Vertex& v) const noexcept {
  if (v.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] < lo_[i] || v[i] > hi_[i]) return false;
  return true;
}

std::size_t Region::index(const Vertex& v) const {
  if (!contains(v)) throw DomainError("vertex outside region " + describe());
  std::size_t idx = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    idx += static_cast<std::size_t>(v[i] - lo_[i]) * stride_[i];
  return idx;
}

Vertex Region::vertex(std::size_t idx) const {
  Vertex v(lo_.size());
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    const auto len = static_cast<std::size_t>(hi_[i] - lo_[i] + 1);
    v[i] = lo_[i] + static_cast<std::int64_t>((idx / stride_[i]) % len);
  }
  return v;
}

void Region::neighbors(std::size_t idx, std::vector<std::pair<std::size_t, EdgeKey>>& out) const {
  const Vertex v = vertex(idx);
  Vertex w = v;
  for (std::size_t axis = 0; axis < v.size(); ++axis) {
    if (v[axis] > lo_[axis]) {
      w[axis] = v[axis] - 1;
      out.emplace_back(idx - stride_[axis], edge_key(v, w));
    }
    if (v[axis] < hi_[axis]) {
      w[axis] = v[axis] + 1;
      out.emplace_back(idx + stride_[axis], edge_key(v, w));
    }
    w[axis] = v[axis];
  }
}

EdgeKey Region::edge_key(const Vertex& a, const Vertex& b) {
  // Lower endpoint coordinates followed by the axis of the edge.
  const Vertex& low = std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()) ? a : b;
  std::uint64_t axis = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) axis = i;
  std::uint64_t h = hash_words({static_cast<std::uint64_t>(a.size()), axis});
  for (auto c : low) h = hash_words({h, signed_bits(c)});
  return h;
}

std::string Region::describe() const {
  if (half_line_) return "{0.." + std::to_string(hi_[0]) + "}";
  std::string s = "box[";
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(lo_[i]) + ".." + std::to_string(hi_[i]);
  }
  return s + "]";
}

}  // namespace fcp
