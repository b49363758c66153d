#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "terasim/config.hpp"
#include "terasim/program.hpp"
#include "terasim/sim.hpp"

namespace terasim::kernels {

using cpx = std::complex<double>;

// Pack a unit-range complex sample into a Q1.15 word (round to nearest,
// saturating).
uint32_t cq15(cpx v);
cpx cq15_to_cpx(uint32_t w);

// Evaluate one COMPUTE opcode on literal operands; mirrors the simulated
// core ALU exactly (used by host-side fixed-point reference models).
uint32_t eval1(Opcode op, uint32_t a, int32_t imm = 0);
uint32_t eval2(Opcode op, uint32_t a, uint32_t b, int32_t imm = 0);
uint32_t eval3(Opcode op, uint32_t a, uint32_t b, uint32_t c, int32_t imm = 0);

// Word image fragments applied before a run.
using WordImage = std::vector<std::pair<uint64_t, uint32_t>>;

enum class ErrorNorm { MaxRelToMax, MaxAbsPerEntry };

struct KernelArtifacts {
  RunInput run;
  WordImage l1_init;
  WordImage mem_init;
  std::vector<uint64_t> output_addrs;  // L1 word addresses, oracle order
  std::vector<cpx> oracle;             // float reference per output word
  uint64_t op_total = 0;               // analytic operation count
  double tolerance = 0.0;
  ErrorNorm norm = ErrorNorm::MaxAbsPerEntry;
  std::string name;
};

struct KernelResult {
  KernelMetrics metrics;
  double error = 0.0;
  bool pass = false;
  std::vector<uint32_t> output_words;
};

// Applies the images, runs the programs to completion, drains, extracts the
// outputs and scores them against the float oracle.
KernelResult run_artifacts(Simulator& sim, const KernelArtifacts& art);

double score_error(const std::vector<uint32_t>& words, const std::vector<cpx>& oracle,
                   ErrorNorm norm);

// Simple bump allocator over the L1 word-interleaved address space.
class L1Alloc {
public:
  explicit L1Alloc(const ClusterConfig& cfg) : cfg_(&cfg) {}
  // Returns the base byte address of `words` contiguous words.
  uint64_t alloc_words(uint64_t words, uint64_t align_words = 1);
  uint64_t used_bytes() const { return next_ * 4; }

private:
  const ClusterConfig* cfg_;
  uint64_t next_ = 0;
};

// Per-worker, bank-homed scratch/stream addressing: word j of worker w sits
// at base + 4*(w + j*total_banks), i.e. all of a worker's words live in one
// bank and workers occupy distinct banks (requires workers <= total_banks).
struct BankStream {
  uint64_t base = 0;
  uint32_t total_banks = 0;
  uint64_t addr(uint32_t worker, uint64_t j) const {
    return base + 4 * (uint64_t(worker) + j * total_banks);
  }
};

// Allocates a bank stream of `rows` words per worker.
BankStream alloc_bank_stream(L1Alloc& alloc, const ClusterConfig& cfg, uint64_t rows);

// Per-core scratch held in the core's own tile stripe (latency-1 access):
// core with in-tile index ci owns banks_per_tile/cores_per_tile bank columns,
// so distinct cores never contend for a scratch bank.
struct TileScratch {
  uint64_t base = 0;
  uint32_t banks_per_tile = 0;
  uint32_t cores_per_tile = 0;
  uint32_t total_banks = 0;
  uint64_t addr(uint32_t core, uint64_t j) const {
    const uint32_t cols = banks_per_tile / cores_per_tile;
    const uint64_t tile = core / cores_per_tile;
    const uint64_t col = (core % cores_per_tile) * cols + j % cols;
    return base + 4 * (tile * banks_per_tile + col + (j / cols) * total_banks);
  }
};

// Allocates `rows` scratch words per core.
TileScratch alloc_tile_scratch(L1Alloc& alloc, const ClusterConfig& cfg, uint64_t rows);

// Shared counters threaded through the emitters of one run.
struct BuildContext {
  int next_barrier = 0;
  int barrier() { return next_barrier++; }
};

// Emits a barrier on every listed worker.
void emit_barrier_all(RunInput& run, const std::vector<uint32_t>& workers, int id);

// The first `n` cores of the cluster.
std::vector<uint32_t> default_workers(const ClusterConfig& cfg, uint32_t n = 0);

}  // namespace terasim::kernels
