#include "terasim/kernels/common.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terasim::kernels {

namespace {
int16_t q15(double v) {
  double s = std::nearbyint(v * 32768.0);
  s = std::clamp(s, -32768.0, 32767.0);
  return static_cast<int16_t>(s);
}
}  // namespace

uint32_t cq15(cpx v) {
  uint16_t re = static_cast<uint16_t>(q15(v.real()));
  uint16_t im = static_cast<uint16_t>(q15(v.imag()));
  return (uint32_t(im) << 16) | re;
}

cpx cq15_to_cpx(uint32_t w) {
  int16_t re = static_cast<int16_t>(w & 0xffffu);
  int16_t im = static_cast<int16_t>(w >> 16);
  return cpx(re / 32768.0, im / 32768.0);
}

uint32_t eval1(Opcode op, uint32_t a, int32_t imm) {
  uint32_t regs[kNumRegs] = {a};
  Instr in = Instr::compute(op, 1, {0}, imm, 1, 1);
  return alu_eval(in, regs);
}

uint32_t eval2(Opcode op, uint32_t a, uint32_t b, int32_t imm) {
  uint32_t regs[kNumRegs] = {a, b};
  Instr in = Instr::compute(op, 2, {0, 1}, imm, 1, 1);
  return alu_eval(in, regs);
}

uint32_t eval3(Opcode op, uint32_t a, uint32_t b, uint32_t c, int32_t imm) {
  uint32_t regs[kNumRegs] = {a, b, c};
  Instr in = Instr::compute(op, 3, {0, 1, 2}, imm, 1, 1);
  return alu_eval(in, regs);
}

double score_error(const std::vector<uint32_t>& words, const std::vector<cpx>& oracle,
                   ErrorNorm norm) {
  if (words.size() != oracle.size())
    throw std::invalid_argument("score_error: size mismatch");
  double max_ref = 0.0;
  double max_err = 0.0;
  for (size_t i = 0; i < words.size(); ++i) {
    cpx got = cq15_to_cpx(words[i]);
    max_err = std::max(max_err, std::abs(got - oracle[i]));
    max_ref = std::max(max_ref, std::abs(oracle[i]));
  }
  if (norm == ErrorNorm::MaxRelToMax) {
    return max_ref > 0.0 ? max_err / max_ref : max_err;
  }
  return max_err;
}

KernelResult run_artifacts(Simulator& sim, const KernelArtifacts& art) {
  for (auto [addr, word] : art.l1_init) sim.l1().write_word(addr, word);
  for (auto [addr, word] : art.mem_init) sim.main_memory().write_word(addr, word);
  KernelResult res;
  res.metrics = sim.run(art.run, art.name);
  sim.drain();
  res.output_words.reserve(art.output_addrs.size());
  for (uint64_t addr : art.output_addrs)
    res.output_words.push_back(sim.l1().read_word(addr));
  res.error = score_error(res.output_words, art.oracle, art.norm);
  res.pass = res.error <= art.tolerance;
  return res;
}

uint64_t L1Alloc::alloc_words(uint64_t words, uint64_t align_words) {
  if (align_words == 0) align_words = 1;
  next_ = (next_ + align_words - 1) / align_words * align_words;
  uint64_t base = next_;
  next_ += words;
  if (next_ * 4 > cfg_->l1_bytes())
    throw std::runtime_error("L1Alloc: layout exceeds L1 capacity");
  return base * 4;
}

BankStream alloc_bank_stream(L1Alloc& alloc, const ClusterConfig& cfg, uint64_t rows) {
  BankStream s;
  s.total_banks = cfg.total_banks();
  s.base = alloc.alloc_words(rows * s.total_banks, s.total_banks);
  return s;
}

TileScratch alloc_tile_scratch(L1Alloc& alloc, const ClusterConfig& cfg, uint64_t rows) {
  TileScratch s;
  s.banks_per_tile = cfg.banks_per_tile;
  s.cores_per_tile = cfg.cores_per_tile;
  s.total_banks = cfg.total_banks();
  const uint64_t cols = s.banks_per_tile / s.cores_per_tile;
  if (cols == 0) throw std::runtime_error("tile scratch needs banks_per_tile >= cores_per_tile");
  const uint64_t row_blocks = (rows + cols - 1) / cols;
  s.base = alloc.alloc_words(row_blocks * s.total_banks, s.total_banks);
  return s;
}

void emit_barrier_all(RunInput& run, const std::vector<uint32_t>& workers, int id) {
  for (uint32_t w : workers) run.programs[w].code.push_back(Instr::barrier(id));
}

std::vector<uint32_t> default_workers(const ClusterConfig& cfg, uint32_t n) {
  if (n == 0) n = cfg.total_cores();
  std::vector<uint32_t> w(n);
  for (uint32_t i = 0; i < n; ++i) w[i] = i;
  return w;
}

}  // namespace terasim::kernels
