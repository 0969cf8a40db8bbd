#pragma once

#include <array>
#include <string>
#include <vector>

#include "hcfd/core/field.hpp"

namespace hcfd::scheme {

enum class FluxKind { Inviscid, Viscous };

/// One of the six independent directional phases of a residual evaluation.
struct DirectionalTask {
  Axis axis = Axis::X;
  FluxKind kind = FluxKind::Inviscid;

  /// invFlux_X .. visFlux_Z
  std::string name() const;
  int slot() const { return (kind == FluxKind::Inviscid ? 0 : 3) + index(axis); }
};

inline constexpr std::array<DirectionalTask, 6> kDirectionalTasks{{
    {Axis::X, FluxKind::Inviscid},
    {Axis::Y, FluxKind::Inviscid},
    {Axis::Z, FluxKind::Inviscid},
    {Axis::X, FluxKind::Viscous},
    {Axis::Y, FluxKind::Viscous},
    {Axis::Z, FluxKind::Viscous},
}};

/// u, v, w and T = p/rho over the allocated box of a block, same layout as
/// BlockField. Filled once per residual evaluation before the viscous sweeps.
/// With a region (local coordinates, ghosts allowed) only those points are
/// refreshed; the rest keep their previous values.
class PrimitiveCache {
 public:
  void compute(const BlockField& q, const GasModel& gas, const IndexBox* region = nullptr);

  std::span<const double> component(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * points_, points_};
  }

 private:
  std::size_t points_ = 0;
  std::vector<double> data_;
};

/// Splits `region` into tiles spanning the whole region along `axis` with at
/// most tileSize x tileSize lines across it.
std::vector<IndexBox> sweepTiles(const IndexBox& region, Axis axis, int tileSize);

/// Writes the directional contribution for every cell of `tile` into `out`:
/// -dF/dxi for inviscid sweeps, +dFv/dxi for viscous sweeps. Each cell is
/// computed from its own stencil only, so the result does not depend on how
/// the region is tiled. Viscous sweeps need `prims`. With `accumulate` the
/// contribution is added to what `out` holds instead.
void sweepTile(const BlockField& q, const GasModel& gas, Axis axis, FluxKind kind,
               const IndexBox& tile, InteriorArray& out, const PrimitiveCache* prims = nullptr,
               bool accumulate = false);

/// All tiles of `region` (the whole interior when null) in order.
void blockResidualDirection(const BlockField& q, const GasModel& gas, Axis axis, FluxKind kind,
                            InteriorArray& out, int tileSize = 16,
                            const IndexBox* region = nullptr,
                            const PrimitiveCache* prims = nullptr);

}  // namespace hcfd::scheme
