#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "terasim/kernels/common.hpp"

namespace terasim::kernels {

// Full PUSCH receive chain on one Simulator: one DMRS symbol followed by
// n_symbols data symbols, each running FFT -> beamforming -> (channel
// estimation + MMSE factor on the DMRS | MMSE solve on data) as separate
// metric segments, with DMA staging of inputs/coefficients and write-back
// of the equalized outputs.
enum class ChainMode {
  DoubleBuffer,  // prefetch symbol s+1 during symbol s compute
  SingleBuffer,  // input transfer fully exposed before each FFT
  ComputeOnly,   // host-staged memory, no DMA at all (latency-hiding baseline)
};

struct ChainOptions {
  ChainMode mode = ChainMode::DoubleBuffer;
  uint64_t seed = 1;
  double tolerance = 1.0 / 16;  // composed-oracle bound, rel-to-max per symbol
};

struct ChainResult {
  bool pass = false;
  double error = 0.0;  // worst data symbol
  std::vector<double> symbol_errors;
  uint64_t total_cycles = 0;
  uint64_t failed_subcarriers = 0;  // non-positive-definite pivots flagged
};

// Runs the chain on a fresh-phase basis; metrics accumulate in sim.report()
// under labels fft / beamforming / channel-est / mmse / staging.
ChainResult run_chain(Simulator& sim, const WorkloadConfig& wl, const ChainOptions& opt);

}  // namespace terasim::kernels
