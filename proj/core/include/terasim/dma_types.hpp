#pragma once

#include <cstdint>

namespace terasim {

struct DmaDescriptor {
  uint64_t src = 0;
  uint64_t dst = 0;
  uint32_t bytes_per_row = 0;
  uint32_t rows = 0;
  uint64_t src_stride = 0;
  uint64_t dst_stride = 0;
  bool hbm_to_l1 = true;
};

struct Burst {
  uint64_t src;
  uint64_t dst;
  uint32_t bytes;
  uint32_t channel;
  uint32_t desc_id;
};

struct DmaStatus {
  uint32_t desc_id = 0;
  uint32_t bursts_total = 0;
  uint32_t bursts_done = 0;
  bool busy = false;
  uint64_t completion_cycle = 0;
};

}  // namespace terasim
