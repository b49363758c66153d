#pragma once

#include <cstdint>
#include <vector>

#include "terasim/kernels/common.hpp"

namespace terasim::kernels {

// Per-subcarrier MMSE equalization, split into two straight-line phases:
//
//  factor: A = H^H H + sigma2*I (exact Q2.30 accumulation, rescaled to
//  Q8.24), Cholesky A = L L^H with reciprocal diagonals r_j = 1/l_jj
//  (SQRTQ/DIVQ), persisted per subcarrier so data-symbol solves contain no
//  divides. A non-positive pivot cannot trap (SQRTQ/DIVQ saturate); it is
//  counted into the per-subcarrier status word instead.
//
//  solve: x = A^-1 H^H y via forward/backward substitution against the
//  stored factors, packed back to Q1.15.
//
// Factor record layout per subcarrier (32-bit Q8.24 words):
//   [0, tx)                       r_j = 1/l_jj
//   [tx, tx + tx*(tx-1))          l_ij re, im for i > j, index (i*(i-1)/2 + j)
//   [tx + tx*(tx-1)]              status: number of non-positive pivots
struct MmsePlan {
  uint32_t beams = 0;
  uint32_t tx = 0;
  uint32_t sc_count = 0;
  uint32_t workers = 0;
  uint64_t h_base = 0;    // (beams*tx) rows x sc_count, row (b*tx + t)
  uint64_t y_base = 0;    // beams rows x sc_count (solve only)
  uint64_t lf_base = 0;   // sc_count factor records
  uint64_t out_base = 0;  // tx rows x sc_count (solve only)
  int32_t sigma2_q24 = 0;
  TileScratch scratch;    // mmse_scratch_rows(tx) words per core (factor only)
};

struct MmseEmitInfo {
  uint64_t op_total = 0;
};

uint32_t mmse_lf_record_words(uint32_t tx);
uint64_t mmse_scratch_rows(uint32_t tx);
uint64_t mmse_lf_status_addr(const MmsePlan& plan, uint32_t sc);

MmseEmitInfo emit_mmse_factor(RunInput& run, const ClusterConfig& cfg, const MmsePlan& plan);
MmseEmitInfo emit_mmse_solve(RunInput& run, const ClusterConfig& cfg, const MmsePlan& plan);

// Standalone kernel: factor followed by solve in one program (each worker
// factors and solves its own subcarriers). h is beams x tx per subcarrier,
// laid out h[(b*tx + t)*sc_count + sc]; y is y[b*sc_count + sc].
KernelArtifacts build_mmse(const ClusterConfig& cfg, uint32_t beams, uint32_t tx,
                           uint32_t sc_count, const std::vector<cpx>& h,
                           const std::vector<cpx>& y, double sigma2,
                           uint32_t workers = 0);

}  // namespace terasim::kernels
