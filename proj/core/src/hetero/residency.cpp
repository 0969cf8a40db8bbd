#include "hcfd/hetero/residency.hpp"

#include <string>

namespace hcfd::hetero {

std::uint64_t ResidencyCache::hostGeneration(const BufferKey& k) const {
  const auto it = host_.find(k);
  return it == host_.end() ? 0 : it->second;
}

std::uint64_t ResidencyCache::deviceGeneration(int device, const BufferKey& k) const {
  const auto& m = resident_.at(static_cast<std::size_t>(device));
  const auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

bool ResidencyCache::current(int device, const BufferKey& k) const {
  const auto& m = resident_.at(static_cast<std::size_t>(device));
  const auto it = m.find(k);
  return it != m.end() && it->second == hostGeneration(k);
}

void ResidencyCache::hostWrite(const BufferKey& k) { ++host_[k]; }

void ResidencyCache::deviceWrite(int device, const BufferKey& k) {
  const std::uint64_t g = ++host_[k];
  resident_.at(static_cast<std::size_t>(device))[k] = g;
}

bool ResidencyCache::acquire(int device, const BufferKey& k, std::uint64_t bytes) {
  if (current(device, k)) {
    ++counters_.hits;
    counters_.bytesSaved += bytes;
    return true;
  }
  ++counters_.misses;
  counters_.bytesTransferred += bytes;
  resident_.at(static_cast<std::size_t>(device))[k] = hostGeneration(k);
  return false;
}

void ResidencyCache::recompute(int device, const BufferKey& k, std::uint64_t bytesAvoided) {
  ++counters_.recomputed;
  counters_.bytesSaved += bytesAvoided;
  resident_.at(static_cast<std::size_t>(device))[k] = hostGeneration(k);
}

DeviceBudgetError::DeviceBudgetError(int device, std::uint64_t required, std::uint64_t available)
    : Error("device " + std::to_string(device) + " buffer budget exceeded: " + std::to_string(required) +
            " bytes required, " + std::to_string(available) + " available"),
      device_(device),
      required_(required),
      available_(available) {}

void DeviceMemory::reserve(std::uint64_t bytes) {
  if (used_ + bytes > budget_) throw DeviceBudgetError(device_, used_ + bytes, budget_);
  used_ += bytes;
  ++allocations_;
}

}  // namespace hcfd::hetero
