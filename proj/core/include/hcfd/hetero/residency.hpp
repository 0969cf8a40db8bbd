#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <vector>

#include "hcfd/core/state.hpp"

namespace hcfd::hetero {

/// A device buffer: one component of one slice of one block.
struct BufferKey {
  int block = 0;
  int component = 0;  ///< 0..4 state, kGeometry, kPrimitives
  int slice = 0;      ///< caller-defined slice id (a ghost direction, a face...)

  static constexpr int kGeometry = 100;
  static constexpr int kPrimitives = 101;

  friend auto operator<=>(const BufferKey&, const BufferKey&) = default;
};

struct ResidencyCounters {
  std::int64_t hits = 0;
  std::int64_t misses = 0;
  std::int64_t recomputed = 0;
  std::uint64_t bytesTransferred = 0;
  std::uint64_t bytesSaved = 0;  ///< bytes a hit or a recompute did not move
};

/// Generation tracking of device copies. Every write bumps the buffer's host
/// generation; a device copy is current when its generation equals it.
class ResidencyCache {
 public:
  explicit ResidencyCache(int devices = 0) : resident_(static_cast<std::size_t>(devices)) {}

  int devices() const { return static_cast<int>(resident_.size()); }

  std::uint64_t hostGeneration(const BufferKey& k) const;
  /// Generation held by `device`, 0 when absent.
  std::uint64_t deviceGeneration(int device, const BufferKey& k) const;
  bool current(int device, const BufferKey& k) const;

  /// The host (or another device) produced a new version.
  void hostWrite(const BufferKey& k);
  /// `device` produced a new version; its copy is current, others go stale.
  void deviceWrite(int device, const BufferKey& k);

  /// Makes the device copy current. Returns true on a hit (nothing moved);
  /// on a miss `bytes` are counted as transferred.
  bool acquire(int device, const BufferKey& k, std::uint64_t bytes);
  /// Makes the device copy current without a transfer by recomputing it.
  void recompute(int device, const BufferKey& k, std::uint64_t bytesAvoided);

  const ResidencyCounters& counters() const { return counters_; }
  void resetCounters() { counters_ = {}; }

 private:
  std::map<BufferKey, std::uint64_t> host_;
  std::vector<std::map<BufferKey, std::uint64_t>> resident_;
  ResidencyCounters counters_;
};

/// Induced (derivable) data is recomputed on the device when that is cheaper
/// than moving it.
inline bool shouldRecompute(double recomputeSeconds, double transferSeconds) {
  return recomputeSeconds < transferSeconds;
}

class DeviceBudgetError : public Error {
 public:
  DeviceBudgetError(int device, std::uint64_t required, std::uint64_t available);
  int device() const { return device_; }
  std::uint64_t required() const { return required_; }
  std::uint64_t available() const { return available_; }

 private:
  int device_;
  std::uint64_t required_;
  std::uint64_t available_;
};

/// Persistent device buffers, allocated once during warm-up.
class DeviceMemory {
 public:
  DeviceMemory(int device, std::uint64_t budget) : device_(device), budget_(budget) {}
  /// Throws DeviceBudgetError when the total would exceed the budget.
  void reserve(std::uint64_t bytes);
  std::uint64_t used() const { return used_; }
  std::uint64_t budget() const { return budget_; }
  int allocations() const { return allocations_; }

 private:
  int device_;
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
  int allocations_ = 0;
};

}  // namespace hcfd::hetero
