#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "terasim/l1.hpp"

namespace terasim {

// Raw little-endian tensor container: magic "TSR1", u32 format tag
// (1 = packed complex Q1.15 words, 2 = f64, 3 = complex f64 pairs),
// u32 ndims, u64 dims[], payload.
struct Tensor {
  uint32_t format = 1;
  std::vector<uint64_t> dims;
  std::vector<uint8_t> data;

  uint64_t elements() const;
};

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

Tensor tensor_from_cq15(const std::vector<uint32_t>& words,
                        std::vector<uint64_t> dims);
Tensor tensor_from_cf64(const std::vector<std::complex<double>>& v,
                        std::vector<uint64_t> dims);

// Main-memory initial contents: flat binary blob loaded/stored at an offset.
void load_memory_image(MainMemory& mem, const std::string& path, uint64_t offset);
void store_memory_image(const MainMemory& mem, const std::string& path,
                        uint64_t offset, uint64_t length);

// Debugging hexdump (offset: 16 bytes per line).
std::string hexdump(const MainMemory& mem, uint64_t offset, uint64_t length);

}  // namespace terasim
