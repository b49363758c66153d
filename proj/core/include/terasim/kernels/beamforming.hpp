#pragma once

#include <cstdint>
#include <vector>

#include "terasim/kernels/common.hpp"

namespace terasim::kernels {

// Beamforming: out[b][sc] = sum_a w[b][a] * y[a][sc], accumulated exactly in
// Q2.30 and rounded once by the final PACK (single-rounding contract, error
// <= 2^-16 per entry when |sum| <= 1; the caller scales w accordingly).
// Worker assignment: worker = chunk * beams + beam; each (beam, chunk) pair
// owns one subcarrier block, processed in a beam-staggered order so same-
// cycle loads from the shared y rows hit distinct words.
struct BfPlan {
  uint32_t beams = 0;
  uint32_t antennas = 0;
  uint32_t sc_count = 0;
  uint32_t workers = 0;   // only floor(workers/beams)*beams cores get work
  uint64_t y_base = 0;    // antenna rows
  uint32_t y_stride = 0;  // words between antenna rows
  uint32_t y_offset = 0;  // word offset of subcarrier 0 within a row
  uint64_t w_base = 0;    // per-tile replicated weight region
  uint64_t out_base = 0;  // beams x sc_count words, row stride sc_count
};

struct BfEmitInfo {
  uint64_t op_total = 0;
};

// Weight region: one replica per tile inside the tile's own stripe.
uint64_t bf_weight_region_words(const ClusterConfig& cfg, uint32_t beams, uint32_t antennas);
uint64_t bf_weight_addr(const ClusterConfig& cfg, uint64_t w_base, uint32_t tile, uint32_t m);
// Image for tiles [0, tiles); weights_q is beams*antennas quantized words.
WordImage bf_weight_image(const ClusterConfig& cfg, uint64_t w_base,
                          const std::vector<uint32_t>& weights_q, uint32_t tiles);

uint64_t bf_op_total(uint32_t beams, uint32_t antennas, uint32_t sc_count);

BfEmitInfo emit_bf(RunInput& run, const ClusterConfig& cfg, const BfPlan& plan);

// Standalone kernel; weights is beams x antennas, y is antennas x sc_count.
KernelArtifacts build_bf(const ClusterConfig& cfg, uint32_t beams, uint32_t antennas,
                         uint32_t sc_count, const std::vector<cpx>& weights,
                         const std::vector<cpx>& y, uint32_t workers = 0);

}  // namespace terasim::kernels
