#pragma once

#include <cstdint>
#include <vector>

#include "terasim/config.hpp"

namespace terasim {

// Bijective bit permutation over the main-memory address space.
//
// The native channel-select field sits at bits [o+c, o+2c) with
// o = log2(burst_bytes) and c = log2(channels), so an unscrambled stream
// stays on one channel for channels*burst_bytes consecutive bytes.
// Scrambling swaps that field with the burst-index low bits [o, o+c):
// consecutive bursts then rotate across all channels while any
// burst-aligned range still lands in exactly one channel.
class ScrambleMap {
public:
  ScrambleMap(const HbmConfig& hbm);

  uint64_t apply(uint64_t addr) const;
  uint64_t inverse(uint64_t addr) const;

  // Channel serving a (post-scramble) physical address.
  uint32_t channel_of_physical(uint64_t phys) const;
  // Channel serving a logical address, honoring the enable flag.
  uint32_t channel_of(uint64_t addr) const {
    return channel_of_physical(enabled_ ? apply(addr) : addr);
  }

  bool enabled() const { return enabled_; }
  uint32_t offset_bits() const { return offset_bits_; }
  uint32_t channel_bits() const { return channel_bits_; }
  uint64_t interleave_period() const {
    return uint64_t(1) << (offset_bits_ + 2 * channel_bits_);
  }

private:
  uint64_t permute(uint64_t addr, const std::vector<uint8_t>& perm) const;

  uint32_t offset_bits_;
  uint32_t channel_bits_;
  uint64_t capacity_;
  bool enabled_;
  // out bit i takes in bit perm_[i]; involution here, but kept general.
  std::vector<uint8_t> fwd_;
  std::vector<uint8_t> inv_;
};

}  // namespace terasim
