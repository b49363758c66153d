#pragma once

#include <cstdint>
#include <vector>

#include "terasim/kernels/common.hpp"

namespace terasim::kernels {

// Stockham autosort radix-4 decimation-in-time FFT (one radix-2 final stage
// when log2(n) is odd), out-of-place ping-pong between buf_x and buf_y.
// Twiddles are applied to the butterfly inputs; every stage applies a 1-bit
// arithmetic right shift, so the result is DFT(x) / 2^stages.
//
// Butterfly i of a radix-R stage writes words {i, i+n/R, ..., i+(R-1)n/R} of
// the destination buffer, and reads R consecutive-window words that are
// pairwise distinct across the stage, so a block split of [0, n/R) over the
// workers gives same-cycle accesses to pairwise-distinct words. Twiddles are
// streamed from a per-worker private bank (BankStream). With one butterfly
// per worker and n <= total_banks the distinct words also sit in distinct
// banks, making the lockstep schedule statically conflict-free; larger n or
// fewer workers still run correctly but may pay bank-arbitration cycles.
struct FftPlan {
  uint32_t n = 0;         // transform length, power of two >= 4
  uint32_t antennas = 1;  // independent rows, antenna-major (row stride n words)
  uint32_t workers = 0;   // participating cores 0..workers-1
  uint64_t buf_x = 0;     // byte base of the input / ping buffer
  uint64_t buf_y = 0;     // byte base of the pong buffer
  BankStream twiddles;    // per-worker private twiddle stream
};

struct FftEmitInfo {
  uint32_t stages = 0;
  bool output_in_x = false;  // result buffer after the final ping-pong
  uint64_t op_total = 0;
  uint32_t barriers = 0;
};

uint32_t fft_stage_count(uint32_t n);
// Twiddle stream rows needed per worker (BankStream row count).
uint64_t fft_twiddle_rows(const FftPlan& plan);
uint64_t fft_op_total(uint32_t n, uint32_t antennas);

// Appends the stage programs (one barrier after each stage) to `run` and
// returns the twiddle ROM image via `twiddle_image`.
FftEmitInfo emit_fft(RunInput& run, const ClusterConfig& cfg, const FftPlan& plan,
                     BuildContext& ctx, WordImage& twiddle_image);

// Host-side fixed-point reference for one row, bit-exact with the emitted
// programs. Returns the n output words.
std::vector<uint32_t> fft_fixed_reference(const std::vector<uint32_t>& row);

// Standalone kernel: quantizes `input` (antennas rows of n samples), builds
// programs, images and the float-DFT oracle (scaled by 2^-stages,
// tolerance 2^-7 relative to the output peak).
KernelArtifacts build_fft(const ClusterConfig& cfg, uint32_t n, uint32_t antennas,
                          const std::vector<cpx>& input, uint32_t workers = 0);

}  // namespace terasim::kernels
