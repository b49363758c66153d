#include "terasim/kernels/mmse.hpp"

#include "terasim/kernels/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terasim::kernels {

namespace {

// Upper-triangular pair index for A (i <= j) and strict-lower for L (i > j).
uint32_t pair_u(uint32_t i, uint32_t j) { return j * (j + 1) / 2 + i; }
uint32_t pair_l(uint32_t i, uint32_t j) { return i * (i - 1) / 2 + j; }

// Register map shared by both phases.
constexpr uint8_t kAccRe = 1, kAccIm = 2;
constexpr uint8_t kHi = 3;   // 4-slot window (3..6)
constexpr uint8_t kHj = 7;   // 4-slot window (7..10)
constexpr uint8_t kT = 11, kLre = 12, kLim = 13, kL2re = 14, kL2im = 15;
constexpr uint8_t kRjj = 16, kLjj = 17, kPk = 18;
constexpr uint8_t kZ = 1;    // solve: z/x regs 1..8 (re 1+2i, im 2+2i)
constexpr uint8_t kHw = 9;   // solve h window (9..12)
constexpr uint8_t kYw = 13;  // solve y window (13..16)
constexpr uint8_t kT2 = 17, kL1 = 18, kL2 = 19, kRr = 20, kPk2 = 21;
constexpr uint8_t kZero = 28, kOne = 29, kSig = 30, kStat = 31;

struct Emitter {
  Program* p;
  uint64_t ops = 0;
  void raw(const Instr& in) {
    if (in.kind == InstrKind::Compute) ops += in.op_count;
    p->code.push_back(in);
  }
  void ld(uint8_t r, uint64_t a) { raw(Instr::load(r, a)); }
  void st(uint64_t a, uint8_t r) { raw(Instr::store(a, r)); }
  void c(Opcode op, uint8_t dst, std::initializer_list<uint8_t> srcs, int32_t imm,
         uint16_t ops_n, uint8_t lat = 1) {
    raw(Instr::compute(op, dst, srcs, imm, ops_n, lat));
  }
};

struct Layout {
  const MmsePlan& plan;
  uint64_t h(uint32_t b, uint32_t t, uint64_t sc) const {
    return plan.h_base + 4 * ((uint64_t(b) * plan.tx + t) * plan.sc_count + sc);
  }
  uint64_t y(uint32_t b, uint64_t sc) const {
    return plan.y_base + 4 * (uint64_t(b) * plan.sc_count + sc);
  }
  uint64_t lf(uint64_t sc, uint32_t idx) const {
    return plan.lf_base + 4 * (sc * mmse_lf_record_words(plan.tx) + idx);
  }
  uint64_t lf_r(uint64_t sc, uint32_t j) const { return lf(sc, j); }
  uint64_t lf_l(uint64_t sc, uint32_t i, uint32_t j, bool im) const {
    return lf(sc, plan.tx + 2 * pair_l(i, j) + (im ? 1 : 0));
  }
  uint64_t lf_status(uint64_t sc) const {
    return lf(sc, plan.tx + plan.tx * (plan.tx - 1));
  }
  uint64_t out(uint32_t i, uint64_t sc) const {
    return plan.out_base + 4 * (uint64_t(i) * plan.sc_count + sc);
  }
  uint64_t a_slot(uint32_t core, uint32_t i, uint32_t j, bool im) const {
    return plan.scratch.addr(core, 2 * pair_u(i, j) + (im ? 1 : 0));
  }
};

std::pair<uint64_t, uint64_t> sc_range(const MmsePlan& plan, uint32_t w) {
  return {uint64_t(plan.sc_count) * w / plan.workers,
          uint64_t(plan.sc_count) * (w + 1) / plan.workers};
}

}  // namespace

uint32_t mmse_lf_record_words(uint32_t tx) { return tx + tx * (tx - 1) + 1; }
uint64_t mmse_scratch_rows(uint32_t tx) { return uint64_t(tx) * (tx + 1); }

uint64_t mmse_lf_status_addr(const MmsePlan& plan, uint32_t sc) {
  return Layout{plan}.lf_status(sc);
}

MmseEmitInfo emit_mmse_factor(RunInput& run, const ClusterConfig& cfg, const MmsePlan& plan) {
  if (plan.tx == 0 || plan.beams == 0 || plan.workers == 0)
    throw std::invalid_argument("mmse: empty plan");
  if (run.programs.size() < cfg.total_cores()) run.programs.resize(cfg.total_cores());
  const Layout L{plan};
  MmseEmitInfo info;

  for (uint32_t w = 0; w < plan.workers; ++w) {
    auto [lo, hi] = sc_range(plan, w);
    if (lo == hi) continue;
    Emitter e{&run.programs[w]};
    e.raw(Instr::movi(kZero, 0));
    e.raw(Instr::movi(kOne, 1 << 24));
    e.raw(Instr::movi(kSig, plan.sigma2_q24));

    for (uint64_t sc = lo; sc < hi; ++sc) {
      // --- A = H^H H + sigma2 I, exact Q2.30 then >>6 to Q8.24 ---
      for (uint32_t j = 0; j < plan.tx; ++j) {
        for (uint32_t i = 0; i <= j; ++i) {
          const uint32_t pre = std::min<uint32_t>(plan.beams, 4);
          if (i == j) {
            for (uint32_t b = 0; b < pre; ++b) e.ld(kHj + b, L.h(b, j, sc));
            for (uint32_t b = 0; b < plan.beams; ++b) {
              const uint8_t hs = kHj + b % 4;
              e.c(Opcode::CNormAcc, kAccRe, {uint8_t(b == 0 ? kZero : kAccRe), hs}, 0, 4);
              if (b + 4 < plan.beams) e.ld(hs, L.h(b + 4, j, sc));
            }
            e.c(Opcode::Shra, kAccRe, {kAccRe}, 6, 1);
            e.c(Opcode::Add, kAccRe, {kAccRe, kSig}, 0, 1);
            e.st(L.a_slot(w, i, j, false), kAccRe);
          } else {
            for (uint32_t b = 0; b < pre; ++b) {
              e.ld(kHi + b, L.h(b, i, sc));
              e.ld(kHj + b, L.h(b, j, sc));
            }
            for (uint32_t b = 0; b < plan.beams; ++b) {
              const uint8_t hi_s = kHi + b % 4, hj_s = kHj + b % 4;
              e.c(Opcode::CMacReC, kAccRe, {uint8_t(b == 0 ? kZero : kAccRe), hi_s, hj_s}, 0, 4);
              e.c(Opcode::CMacImC, kAccIm, {uint8_t(b == 0 ? kZero : kAccIm), hi_s, hj_s}, 0, 4);
              if (b + 4 < plan.beams) {
                e.ld(hi_s, L.h(b + 4, i, sc));
                e.ld(hj_s, L.h(b + 4, j, sc));
              }
            }
            e.c(Opcode::Shra, kAccRe, {kAccRe}, 6, 1);
            e.c(Opcode::Shra, kAccIm, {kAccIm}, 6, 1);
            e.st(L.a_slot(w, i, j, false), kAccRe);
            e.st(L.a_slot(w, i, j, true), kAccIm);
          }
        }
      }

      // --- Cholesky with reciprocal diagonals ---
      e.raw(Instr::movi(kStat, 0));
      for (uint32_t j = 0; j < plan.tx; ++j) {
        e.ld(kAccRe, L.a_slot(w, j, j, false));
        for (uint32_t k = 0; k < j; ++k) {
          e.ld(kLre, L.lf_l(sc, j, k, false));
          e.ld(kLim, L.lf_l(sc, j, k, true));
          e.c(Opcode::MulQ, kT, {kLre, kLre}, 24, 1);
          e.c(Opcode::Sub, kAccRe, {kAccRe, kT}, 0, 1);
          e.c(Opcode::MulQ, kT, {kLim, kLim}, 24, 1);
          e.c(Opcode::Sub, kAccRe, {kAccRe, kT}, 0, 1);
        }
        e.c(Opcode::Shra, kT, {kAccRe}, 31, 1);       // -1 iff pivot <= 0 (or 0)
        e.c(Opcode::Sub, kStat, {kStat, kT}, 0, 1);   // count failing pivots
        e.c(Opcode::SqrtQ, kLjj, {kAccRe}, 24, 1, 8);
        e.c(Opcode::DivQ, kRjj, {kOne, kLjj}, 24, 1, 8);
        e.st(L.lf_r(sc, j), kRjj);
        for (uint32_t i = j + 1; i < plan.tx; ++i) {
          // A[i][j] = conj(A[j][i]) from the stored upper triangle.
          e.ld(kAccRe, L.a_slot(w, j, i, false));
          e.ld(kT, L.a_slot(w, j, i, true));
          e.c(Opcode::Sub, kAccIm, {kZero, kT}, 0, 1);
          for (uint32_t k = 0; k < j; ++k) {
            e.ld(kLre, L.lf_l(sc, i, k, false));
            e.ld(kLim, L.lf_l(sc, i, k, true));
            e.ld(kL2re, L.lf_l(sc, j, k, false));
            e.ld(kL2im, L.lf_l(sc, j, k, true));
            // acc -= l_ik * conj(l_jk)
            e.c(Opcode::MulQ, kT, {kLre, kL2re}, 24, 1);
            e.c(Opcode::Sub, kAccRe, {kAccRe, kT}, 0, 1);
            e.c(Opcode::MulQ, kT, {kLim, kL2im}, 24, 1);
            e.c(Opcode::Sub, kAccRe, {kAccRe, kT}, 0, 1);
            e.c(Opcode::MulQ, kT, {kLim, kL2re}, 24, 1);
            e.c(Opcode::Sub, kAccIm, {kAccIm, kT}, 0, 1);
            e.c(Opcode::MulQ, kT, {kLre, kL2im}, 24, 1);
            e.c(Opcode::Add, kAccIm, {kAccIm, kT}, 0, 1);
          }
          e.c(Opcode::MulQ, kLre, {kAccRe, kRjj}, 24, 1);
          e.c(Opcode::MulQ, kLim, {kAccIm, kRjj}, 24, 1);
          e.st(L.lf_l(sc, i, j, false), kLre);
          e.st(L.lf_l(sc, i, j, true), kLim);
        }
      }
      e.st(L.lf_status(sc), kStat);
    }
    info.op_total += e.ops;
  }
  return info;
}

MmseEmitInfo emit_mmse_solve(RunInput& run, const ClusterConfig& cfg, const MmsePlan& plan) {
  if (plan.tx == 0 || plan.beams == 0 || plan.workers == 0)
    throw std::invalid_argument("mmse: empty plan");
  if (plan.tx > 4) throw std::invalid_argument("mmse: solve supports tx <= 4");
  if (run.programs.size() < cfg.total_cores()) run.programs.resize(cfg.total_cores());
  const Layout L{plan};
  MmseEmitInfo info;

  const auto zr = [](uint32_t i) { return uint8_t(kZ + 2 * i); };
  const auto zi = [](uint32_t i) { return uint8_t(kZ + 2 * i + 1); };

  for (uint32_t w = 0; w < plan.workers; ++w) {
    auto [lo, hi] = sc_range(plan, w);
    if (lo == hi) continue;
    Emitter e{&run.programs[w]};
    e.raw(Instr::movi(kZero, 0));

    for (uint64_t sc = lo; sc < hi; ++sc) {
      // rhs_i = sum_b conj(h_bi) y_b, rescaled to Q8.24
      for (uint32_t i = 0; i < plan.tx; ++i) {
        const uint32_t pre = std::min<uint32_t>(plan.beams, 4);
        for (uint32_t b = 0; b < pre; ++b) {
          e.ld(kHw + b, L.h(b, i, sc));
          e.ld(kYw + b, L.y(b, sc));
        }
        for (uint32_t b = 0; b < plan.beams; ++b) {
          const uint8_t hs = kHw + b % 4, ys = kYw + b % 4;
          e.c(Opcode::CMacReC, zr(i), {uint8_t(b == 0 ? kZero : zr(i)), hs, ys}, 0, 4);
          e.c(Opcode::CMacImC, zi(i), {uint8_t(b == 0 ? kZero : zi(i)), hs, ys}, 0, 4);
          if (b + 4 < plan.beams) {
            e.ld(hs, L.h(b + 4, i, sc));
            e.ld(ys, L.y(b + 4, sc));
          }
        }
        e.c(Opcode::Shra, zr(i), {zr(i)}, 6, 1);
        e.c(Opcode::Shra, zi(i), {zi(i)}, 6, 1);
      }
      // Forward substitution: z = L^-1 rhs (divides replaced by r_j).
      for (uint32_t i = 0; i < plan.tx; ++i) {
        for (uint32_t k = 0; k < i; ++k) {
          e.ld(kL1, L.lf_l(sc, i, k, false));
          e.ld(kL2, L.lf_l(sc, i, k, true));
          e.c(Opcode::MulQ, kT2, {kL1, zr(k)}, 24, 1);
          e.c(Opcode::Sub, zr(i), {zr(i), kT2}, 0, 1);
          e.c(Opcode::MulQ, kT2, {kL2, zi(k)}, 24, 1);
          e.c(Opcode::Add, zr(i), {zr(i), kT2}, 0, 1);
          e.c(Opcode::MulQ, kT2, {kL1, zi(k)}, 24, 1);
          e.c(Opcode::Sub, zi(i), {zi(i), kT2}, 0, 1);
          e.c(Opcode::MulQ, kT2, {kL2, zr(k)}, 24, 1);
          e.c(Opcode::Sub, zi(i), {zi(i), kT2}, 0, 1);
        }
        e.ld(kRr, L.lf_r(sc, i));
        e.c(Opcode::MulQ, zr(i), {zr(i), kRr}, 24, 1);
        e.c(Opcode::MulQ, zi(i), {zi(i), kRr}, 24, 1);
      }
      // Backward substitution: x = L^-H z, packed to Q1.15.
      for (uint32_t ii = plan.tx; ii-- > 0;) {
        for (uint32_t k = ii + 1; k < plan.tx; ++k) {
          e.ld(kL1, L.lf_l(sc, k, ii, false));
          e.ld(kL2, L.lf_l(sc, k, ii, true));
          // conj(l_ki) * x_k
          e.c(Opcode::MulQ, kT2, {kL1, zr(k)}, 24, 1);
          e.c(Opcode::Sub, zr(ii), {zr(ii), kT2}, 0, 1);
          e.c(Opcode::MulQ, kT2, {kL2, zi(k)}, 24, 1);
          e.c(Opcode::Sub, zr(ii), {zr(ii), kT2}, 0, 1);
          e.c(Opcode::MulQ, kT2, {kL1, zi(k)}, 24, 1);
          e.c(Opcode::Sub, zi(ii), {zi(ii), kT2}, 0, 1);
          e.c(Opcode::MulQ, kT2, {kL2, zr(k)}, 24, 1);
          e.c(Opcode::Add, zi(ii), {zi(ii), kT2}, 0, 1);
        }
        e.ld(kRr, L.lf_r(sc, ii));
        e.c(Opcode::MulQ, zr(ii), {zr(ii), kRr}, 24, 1);
        e.c(Opcode::MulQ, zi(ii), {zi(ii), kRr}, 24, 1);
        e.c(Opcode::Pack, kPk2, {zr(ii), zi(ii)}, 9, 2);
        e.st(L.out(ii, sc), kPk2);
      }
    }
    info.op_total += e.ops;
  }
  return info;
}

KernelArtifacts build_mmse(const ClusterConfig& cfg, uint32_t beams, uint32_t tx,
                           uint32_t sc_count, const std::vector<cpx>& h,
                           const std::vector<cpx>& y, double sigma2, uint32_t workers) {
  if (h.size() != size_t(beams) * tx * sc_count)
    throw std::invalid_argument("build_mmse: h size mismatch");
  if (y.size() != size_t(beams) * sc_count)
    throw std::invalid_argument("build_mmse: y size mismatch");
  if (workers == 0) workers = std::min<uint32_t>(cfg.total_cores(), sc_count);

  KernelArtifacts art;
  art.name = "mmse";
  art.run.programs.resize(cfg.total_cores());

  L1Alloc alloc(cfg);
  MmsePlan plan;
  plan.beams = beams;
  plan.tx = tx;
  plan.sc_count = sc_count;
  plan.workers = workers;
  plan.h_base = alloc.alloc_words(h.size());
  plan.y_base = alloc.alloc_words(y.size());
  plan.lf_base = alloc.alloc_words(uint64_t(sc_count) * mmse_lf_record_words(tx));
  plan.out_base = alloc.alloc_words(uint64_t(tx) * sc_count);
  plan.sigma2_q24 = int32_t(std::lround(sigma2 * double(1 << 24)));
  plan.scratch = alloc_tile_scratch(alloc, cfg, mmse_scratch_rows(tx));

  MmseEmitInfo fi = emit_mmse_factor(art.run, cfg, plan);
  MmseEmitInfo si = emit_mmse_solve(art.run, cfg, plan);
  for (auto& p : art.run.programs)
    if (!p.empty()) p.code.push_back(Instr::halt());

  std::vector<cpx> hf(h.size()), yf(y.size());
  for (size_t i = 0; i < h.size(); ++i) {
    const uint32_t q = cq15(h[i]);
    hf[i] = cq15_to_cpx(q);
    art.l1_init.push_back({plan.h_base + 4 * i, q});
  }
  for (size_t i = 0; i < y.size(); ++i) {
    const uint32_t q = cq15(y[i]);
    yf[i] = cq15_to_cpx(q);
    art.l1_init.push_back({plan.y_base + 4 * i, q});
  }

  art.oracle.resize(size_t(tx) * sc_count);
  for (uint32_t sc = 0; sc < sc_count; ++sc) {
    std::vector<cpx> hsc(size_t(beams) * tx), ysc(beams);
    for (uint32_t b = 0; b < beams; ++b) {
      ysc[b] = yf[size_t(b) * sc_count + sc];
      for (uint32_t t = 0; t < tx; ++t)
        hsc[size_t(b) * tx + t] = hf[(size_t(b) * tx + t) * sc_count + sc];
    }
    auto x = mmse_solve_float(hsc, beams, tx, ysc, sigma2);
    for (uint32_t t = 0; t < tx; ++t) art.oracle[size_t(t) * sc_count + sc] = x[t];
  }
  art.output_addrs.reserve(art.oracle.size());
  for (uint64_t i = 0; i < art.oracle.size(); ++i)
    art.output_addrs.push_back(plan.out_base + 4 * i);
  art.op_total = fi.op_total + si.op_total;
  art.tolerance = std::ldexp(1.0, -6);
  art.norm = ErrorNorm::MaxRelToMax;
  return art;
}

}  // namespace terasim::kernels
