#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <ostream>

namespace hcfd {

using Index3 = std::array<int, 3>;

/// Half-open integer box [lo, hi) in cell indices.
struct IndexBox {
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};

  int extent(int a) const { return std::max(0, hi[a] - lo[a]); }
  Index3 extents() const { return {extent(0), extent(1), extent(2)}; }
  std::int64_t cells() const {
    return static_cast<std::int64_t>(extent(0)) * extent(1) * extent(2);
  }
  bool empty() const { return cells() == 0; }
  bool contains(const Index3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < lo[a] || p[a] >= hi[a]) return false;
    return true;
  }
  IndexBox shifted(const Index3& d) const {
    return {{lo[0] + d[0], lo[1] + d[1], lo[2] + d[2]}, {hi[0] + d[0], hi[1] + d[1], hi[2] + d[2]}};
  }
  IndexBox grown(int w) const {
    return {{lo[0] - w, lo[1] - w, lo[2] - w}, {hi[0] + w, hi[1] + w, hi[2] + w}};
  }

  friend bool operator==(const IndexBox&, const IndexBox&) = default;
};

inline IndexBox intersect(const IndexBox& a, const IndexBox& b) {
  IndexBox r;
  for (int d = 0; d < 3; ++d) {
    r.lo[d] = std::max(a.lo[d], b.lo[d]);
    r.hi[d] = std::max(r.lo[d], std::min(a.hi[d], b.hi[d]));
  }
  return r;
}

inline std::ostream& operator<<(std::ostream& os, const IndexBox& b) {
  return os << "[" << b.lo[0] << "," << b.hi[0] << ")x[" << b.lo[1] << "," << b.hi[1] << ")x["
            << b.lo[2] << "," << b.hi[2] << ")";
}

}  // namespace hcfd
