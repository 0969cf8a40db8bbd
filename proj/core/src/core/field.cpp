#include "hcfd/core/field.hpp"

#include <algorithm>

namespace hcfd {

double BlockGeometry::minSpacing() const {
  return std::min({spacing[0], spacing[1], spacing[2]});
}

BlockField::BlockField(int id, Index3 extent, int halo, BlockGeometry geometry)
    : id_(id), extent_(extent), halo_(halo), geometry_(geometry) {
  const std::ptrdiff_t nx = extent[0] + 2 * halo;
  const std::ptrdiff_t ny = extent[1] + 2 * halo;
  const std::ptrdiff_t nz = extent[2] + 2 * halo;
  strides_ = {1, nx, nx * ny};
  points_ = static_cast<std::size_t>(nx * ny * nz);
  data_.assign(points_ * kNumVars, 0.0);
}

Vec5 BlockField::get(int i, int j, int k) const {
  const auto o = static_cast<std::size_t>(offset(i, j, k));
  Vec5 q;
  for (int c = 0; c < kNumVars; ++c) q[c] = data_[static_cast<std::size_t>(c) * points_ + o];
  return q;
}

void BlockField::set(int i, int j, int k, const Vec5& q) {
  const auto o = static_cast<std::size_t>(offset(i, j, k));
  for (int c = 0; c < kNumVars; ++c) data_[static_cast<std::size_t>(c) * points_ + o] = q[c];
}

void BlockField::fill(const Vec5& q) {
  for (int c = 0; c < kNumVars; ++c) {
    auto comp = component(c);
    std::fill(comp.begin(), comp.end(), q[c]);
  }
}

InteriorArray::InteriorArray(Index3 extent)
    : extent_(extent),
      points_(static_cast<std::size_t>(extent[0]) * static_cast<std::size_t>(extent[1]) *
              static_cast<std::size_t>(extent[2])),
      data_(points_ * kNumVars, 0.0) {}

void InteriorArray::zero() { std::fill(data_.begin(), data_.end(), 0.0); }

}  // namespace hcfd
