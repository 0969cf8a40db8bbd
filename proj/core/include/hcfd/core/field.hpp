#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hcfd/core/box.hpp"
#include "hcfd/core/state.hpp"

namespace hcfd {

/// Uniform Cartesian mapping of a block: cell (i,j,k) has its center at
/// lower + (origin + i + 0.5) * spacing along each axis.
struct BlockGeometry {
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<double, 3> lower{0.0, 0.0, 0.0};
  Index3 origin{0, 0, 0};

  double center(int axis, int localIndex) const {
    return lower[axis] + (origin[axis] + localIndex + 0.5) * spacing[axis];
  }
  double minSpacing() const;
};

/// Five-component state of one block stored as structure-of-arrays, each
/// component a contiguous x-fastest array that includes `halo` ghost layers.
/// Local interior indices run over [0, n); ghosts over [-halo, 0) and [n, n+halo).
class BlockField {
 public:
  BlockField() = default;
  BlockField(int id, Index3 extent, int halo, BlockGeometry geometry = {});

  int id() const { return id_; }
  const Index3& extent() const { return extent_; }
  int extent(Axis a) const { return extent_[index(a)]; }
  int halo() const { return halo_; }
  const BlockGeometry& geometry() const { return geometry_; }

  IndexBox interior() const { return {{0, 0, 0}, extent_}; }
  IndexBox allocated() const { return interior().grown(halo_); }
  std::int64_t interiorCells() const { return interior().cells(); }

  std::size_t pointsPerComponent() const { return points_; }
  std::ptrdiff_t stride(Axis a) const { return strides_[index(a)]; }

  std::ptrdiff_t offset(int i, int j, int k) const {
    return (i + halo_) + (j + halo_) * strides_[1] + (k + halo_) * strides_[2];
  }

  std::span<double> component(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * points_, points_};
  }
  std::span<const double> component(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * points_, points_};
  }

  double& at(int c, int i, int j, int k) {
    return data_[static_cast<std::size_t>(c) * points_ + static_cast<std::size_t>(offset(i, j, k))];
  }
  double at(int c, int i, int j, int k) const {
    return data_[static_cast<std::size_t>(c) * points_ + static_cast<std::size_t>(offset(i, j, k))];
  }

  Vec5 get(int i, int j, int k) const;
  void set(int i, int j, int k, const Vec5& q);
  ConservedState state(int i, int j, int k) const { return ConservedState::fromVec(get(i, j, k)); }

  /// Sets every point, ghosts included.
  void fill(const Vec5& q);

  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

 private:
  int id_ = -1;
  Index3 extent_{0, 0, 0};
  int halo_ = 0;
  BlockGeometry geometry_;
  std::array<std::ptrdiff_t, 3> strides_{1, 0, 0};
  std::size_t points_ = 0;
  std::vector<double> data_;
};

/// Interior-only five-component array, same layout rules as BlockField without ghosts.
class InteriorArray {
 public:
  InteriorArray() = default;
  explicit InteriorArray(Index3 extent);

  const Index3& extent() const { return extent_; }
  std::size_t size() const { return points_; }
  std::size_t offset(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(extent_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(extent_[1]) * static_cast<std::size_t>(k));
  }
  std::span<double> component(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * points_, points_};
  }
  std::span<const double> component(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * points_, points_};
  }
  double& at(int c, int i, int j, int k) { return data_[static_cast<std::size_t>(c) * points_ + offset(i, j, k)]; }
  double at(int c, int i, int j, int k) const {
    return data_[static_cast<std::size_t>(c) * points_ + offset(i, j, k)];
  }
  void zero();
  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

 private:
  Index3 extent_{0, 0, 0};
  std::size_t points_ = 0;
  std::vector<double> data_;
};

}  // namespace hcfd
