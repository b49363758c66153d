#include "terasim/l1.hpp"

#include <cstring>
#include <stdexcept>

namespace terasim {

uint8_t* MainMemory::page_for(uint64_t addr, bool create) {
  if (addr >= capacity_) throw std::out_of_range("main memory access beyond capacity");
  const uint64_t pi = addr / kPageBytes;
  if (pages_.size() <= pi) pages_.resize(pi + 1);
  if (pages_[pi].empty()) {
    if (!create) return nullptr;
    pages_[pi].assign(kPageBytes, 0);
  }
  return pages_[pi].data();
}

const uint8_t* MainMemory::page_for(uint64_t addr) const {
  if (addr >= capacity_) throw std::out_of_range("main memory access beyond capacity");
  const uint64_t pi = addr / kPageBytes;
  if (pages_.size() <= pi || pages_[pi].empty()) return nullptr;
  return pages_[pi].data();
}

uint32_t MainMemory::read_word(uint64_t addr) const {
  uint32_t v = 0;
  read_bytes(addr, reinterpret_cast<uint8_t*>(&v), 4);
  return v;
}

void MainMemory::write_word(uint64_t addr, uint32_t value) {
  write_bytes(addr, reinterpret_cast<const uint8_t*>(&value), 4);
}

void MainMemory::write_bytes(uint64_t addr, const uint8_t* data, uint64_t n) {
  while (n > 0) {
    const uint64_t in_page = addr % kPageBytes;
    const uint64_t chunk = std::min(n, kPageBytes - in_page);
    std::memcpy(page_for(addr, true) + in_page, data, chunk);
    addr += chunk;
    data += chunk;
    n -= chunk;
  }
}

void MainMemory::read_bytes(uint64_t addr, uint8_t* out, uint64_t n) const {
  while (n > 0) {
    const uint64_t in_page = addr % kPageBytes;
    const uint64_t chunk = std::min(n, kPageBytes - in_page);
    const uint8_t* p = page_for(addr);
    if (p)
      std::memcpy(out, p + in_page, chunk);
    else
      std::memset(out, 0, chunk);
    addr += chunk;
    out += chunk;
    n -= chunk;
  }
}

}  // namespace terasim
