#include "terasim/scramble.hpp"

#include <bit>
#include <stdexcept>

namespace terasim {

ScrambleMap::ScrambleMap(const HbmConfig& hbm)
    : offset_bits_(std::countr_zero(uint64_t(hbm.burst_bytes))),
      channel_bits_(std::countr_zero(uint64_t(hbm.channels))),
      capacity_(hbm.capacity),
      enabled_(hbm.scramble) {
  const uint32_t addr_bits = 64 - std::countl_zero(capacity_ - 1);
  fwd_.resize(addr_bits);
  for (uint32_t i = 0; i < addr_bits; ++i) fwd_[i] = uint8_t(i);
  for (uint32_t i = 0; i < channel_bits_; ++i)
    std::swap(fwd_[offset_bits_ + i], fwd_[offset_bits_ + channel_bits_ + i]);
  inv_.resize(addr_bits);
  for (uint32_t i = 0; i < addr_bits; ++i) inv_[fwd_[i]] = uint8_t(i);
}

uint64_t ScrambleMap::permute(uint64_t addr, const std::vector<uint8_t>& perm) const {
  if (addr >= capacity_) throw std::out_of_range("scramble: address beyond capacity");
  uint64_t out = 0;
  for (size_t i = 0; i < perm.size(); ++i)
    out |= ((addr >> perm[i]) & 1u) << i;
  return out;
}

uint64_t ScrambleMap::apply(uint64_t addr) const { return permute(addr, fwd_); }
uint64_t ScrambleMap::inverse(uint64_t addr) const { return permute(addr, inv_); }

uint32_t ScrambleMap::channel_of_physical(uint64_t phys) const {
  return uint32_t((phys >> (offset_bits_ + channel_bits_)) &
                  ((uint64_t(1) << channel_bits_) - 1));
}

}  // namespace terasim
