#pragma once

#include <cstdint>
#include <vector>

#include "terasim/kernels/common.hpp"

namespace terasim::kernels {

// Channel estimation from beamformed DMRS: h[b][t][sc] = bf[b][sc] *
// conj(pilot[t][sc]); one CMULC per entry (single rounding, error <= 2^-16
// per entry for unit-magnitude pilots). Subcarriers are block-split over the
// workers.
struct ChestPlan {
  uint32_t beams = 0;
  uint32_t tx = 0;
  uint32_t sc_count = 0;
  uint32_t workers = 0;
  uint64_t bf_base = 0;     // beams x sc_count, row stride sc_count
  uint64_t pilot_base = 0;  // tx x sc_count, row stride sc_count
  uint64_t h_base = 0;      // (beams*tx) rows x sc_count, row (b*tx + t)
};

struct ChestEmitInfo {
  uint64_t op_total = 0;
};

uint64_t chest_op_total(uint32_t beams, uint32_t tx, uint32_t sc_count);

ChestEmitInfo emit_chest(RunInput& run, const ClusterConfig& cfg, const ChestPlan& plan);

// Standalone kernel; bf is beams x sc_count, pilot is tx x sc_count.
KernelArtifacts build_chest(const ClusterConfig& cfg, uint32_t beams, uint32_t tx,
                            uint32_t sc_count, const std::vector<cpx>& bf,
                            const std::vector<cpx>& pilot, uint32_t workers = 0);

}  // namespace terasim::kernels
