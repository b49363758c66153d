#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "terasim/dma_types.hpp"

namespace terasim {

enum class InstrKind : uint8_t {
  Load,
  Store,
  AmoAdd,
  Compute,
  Barrier,
  DmaStart,
  DmaWait,
  Halt,
};

// COMPUTE opcodes. Packed complex operands hold Q1.15 re in the low and im
// in the high halfword; scalar ops are plain 32-bit two's complement.
enum class Opcode : uint8_t {
  Movi,     // dst = imm
  Add,      // dst = s0 + s1
  Sub,      // dst = s0 - s1
  Mul,      // dst = s0 * s1 (low 32)
  MulQ,     // dst = rnd((s0 * s1) >> imm)       Q-scaled multiply
  Shra,     // dst = rnd(s0 >> imm)
  DivQ,     // dst = rnd((s0 << imm) / s1)       Q-scaled divide
  SqrtQ,    // dst = isqrt(s0 << imm)            Q-scaled square root
  CAdd,     // dst = sat((s0 + s1) >> imm)       per complex component
  CSub,     // dst = sat((s0 - s1) >> imm)
  CAddJ,    // dst = sat((s0 + j*s1) >> imm)
  CSubJ,    // dst = sat((s0 - j*s1) >> imm)
  CMul,     // dst = sat(rnd15(s0 * s1) >> imm)  complex Q15 product
  CMulC,    // dst = sat(rnd15(s0 * conj(s1)) >> imm)
  CMulRe,   // dst = re(s0 * s1)                 exact Q30
  CMulIm,   // dst = im(s0 * s1)
  CMacRe,   // dst = s0 + re(s1 * s2)            exact Q30 accumulate
  CMacIm,   // dst = s0 + im(s1 * s2)
  CMacReC,  // dst = s0 + re(conj(s1) * s2)
  CMacImC,  // dst = s0 + im(conj(s1) * s2)
  CNormAcc, // dst = s0 + re(s1)^2 + im(s1)^2
  Pack,     // dst = pack(sat(rnd(s0 >> imm)), sat(rnd(s1 >> imm)))
  UnpackRe, // dst = sext16(re(s0)) << imm
  UnpackIm, // dst = sext16(im(s0)) << imm
};

struct Instr {
  InstrKind kind;
  Opcode op = Opcode::Movi;
  uint8_t dst = 0;
  uint8_t nsrc = 0;
  uint8_t src[3] = {0, 0, 0};
  int32_t imm = 0;       // shift amount / immediate / barrier id / descriptor idx
  uint64_t addr = 0;     // loads, stores, amo
  uint16_t op_count = 1; // real operations counted toward throughput
  uint8_t latency = 1;   // result-ready distance in cycles

  static Instr load(uint8_t reg, uint64_t a);
  static Instr store(uint64_t a, uint8_t reg);
  static Instr amo_add(uint8_t dst, uint64_t a, uint8_t src_reg);
  static Instr compute(Opcode op, uint8_t dst, std::initializer_list<uint8_t> srcs,
                       int32_t imm, uint16_t op_count, uint8_t latency = 1);
  static Instr movi(uint8_t dst, int32_t value);
  static Instr barrier(int32_t id);
  static Instr dma_start(int32_t desc_idx);
  static Instr dma_wait();
  static Instr halt();
};

constexpr uint32_t kNumRegs = 32;

struct Program {
  std::vector<Instr> code;
  bool empty() const { return code.empty(); }
};

// Everything one run() needs: one program per core plus the descriptor
// table DMA_START indexes into.
struct RunInput {
  std::vector<Program> programs;
  std::vector<DmaDescriptor> descriptors;
};

// Exact fixed-point semantics of COMPUTE. Throws on malformed instructions
// (decode fault); numeric faults saturate (DivQ by zero) or zero (SqrtQ of
// a negative) so straight-line programs can flag them as data.
uint32_t alu_eval(const Instr& in, const uint32_t regs[kNumRegs]);

// Q1.15 helpers shared by the ALU and the kernel builders.
int32_t q15_sat(int64_t v);
uint32_t cpx_pack(int32_t re, int32_t im);
int32_t cpx_re(uint32_t w);
int32_t cpx_im(uint32_t w);
int64_t rnd_shr(int64_t v, uint32_t sh);
int16_t q15_from_double(double v);
double q15_to_double(int32_t v);

// Line-oriented program text format: one instruction per line, name = expr
// constant definitions, `core <a>[..<b>]` section headers and $CID
// substitution inside address expressions.
RunInput parse_program_text(const std::string& text, uint32_t total_cores);
std::string format_program(const Program& p);

}  // namespace terasim
