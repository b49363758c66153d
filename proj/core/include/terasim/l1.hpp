#pragma once

#include <cstdint>
#include <vector>

#include "terasim/config.hpp"

namespace terasim {

// Multi-banked word-addressable L1 scratchpad. Never-written words read 0.
class L1Store {
public:
  explicit L1Store(const ClusterConfig& cfg)
      : cfg_(&cfg), words_(cfg.l1_bytes() / 4, 0) {}

  uint32_t read_word(uint64_t addr) const { return words_[index(addr)]; }
  void write_word(uint64_t addr, uint32_t value) { words_[index(addr)] = value; }

  // amo-add: returns the old value.
  uint32_t amo_add(uint64_t addr, uint32_t operand) {
    uint32_t& w = words_[index(addr)];
    const uint32_t old = w;
    w += operand;
    return old;
  }

  uint64_t capacity() const { return uint64_t(words_.size()) * 4; }

private:
  uint64_t index(uint64_t addr) const {
    if (addr % 4 != 0 || addr >= capacity())
      throw std::out_of_range("L1 access out of range or unaligned");
    return addr / 4;
  }

  const ClusterConfig* cfg_;
  std::vector<uint32_t> words_;
};

// Flat byte-addressable main memory, allocated sparsely in 1 MiB pages.
class MainMemory {
public:
  explicit MainMemory(uint64_t capacity) : capacity_(capacity) {}

  uint32_t read_word(uint64_t addr) const;
  void write_word(uint64_t addr, uint32_t value);
  void write_bytes(uint64_t addr, const uint8_t* data, uint64_t n);
  void read_bytes(uint64_t addr, uint8_t* out, uint64_t n) const;
  uint64_t capacity() const { return capacity_; }

private:
  static constexpr uint64_t kPageBytes = 1ull << 20;
  uint8_t* page_for(uint64_t addr, bool create);
  const uint8_t* page_for(uint64_t addr) const;

  uint64_t capacity_;
  mutable std::vector<std::vector<uint8_t>> pages_;
};

}  // namespace terasim
