#include "terasim/kernels/chest.hpp"

#include "terasim/kernels/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terasim::kernels {

namespace {
constexpr uint8_t kBfBase = 1;  // 4-slot rotating window
constexpr uint8_t kPilot = 5, kH = 6;
}  // namespace

uint64_t chest_op_total(uint32_t beams, uint32_t tx, uint32_t sc_count) {
  return 6ull * beams * tx * sc_count;  // one CMULC per h entry
}

ChestEmitInfo emit_chest(RunInput& run, const ClusterConfig& cfg, const ChestPlan& plan) {
  if (plan.beams == 0 || plan.tx == 0 || plan.sc_count == 0 || plan.workers == 0)
    throw std::invalid_argument("chest: empty plan");
  if (run.programs.size() < cfg.total_cores()) run.programs.resize(cfg.total_cores());

  for (uint32_t w = 0; w < plan.workers; ++w) {
    const uint64_t lo = uint64_t(plan.sc_count) * w / plan.workers;
    const uint64_t hi = uint64_t(plan.sc_count) * (w + 1) / plan.workers;
    Program& p = run.programs[w];
    for (uint64_t sc = lo; sc < hi; ++sc) {
      const auto bf_addr = [&](uint32_t b) {
        return plan.bf_base + 4 * (uint64_t(b) * plan.sc_count + sc);
      };
      for (uint32_t t = 0; t < plan.tx; ++t) {
        p.code.push_back(
            Instr::load(kPilot, plan.pilot_base + 4 * (uint64_t(t) * plan.sc_count + sc)));
        const uint32_t pre = std::min<uint32_t>(plan.beams, 4);
        for (uint32_t b = 0; b < pre; ++b)
          p.code.push_back(Instr::load(kBfBase + b, bf_addr(b)));
        for (uint32_t b = 0; b < plan.beams; ++b) {
          const uint8_t bs = kBfBase + b % 4;
          p.code.push_back(Instr::compute(Opcode::CMulC, kH, {bs, kPilot}, 0, 6));
          p.code.push_back(Instr::store(
              plan.h_base + 4 * ((uint64_t(b) * plan.tx + t) * plan.sc_count + sc), kH));
          if (b + 4 < plan.beams) p.code.push_back(Instr::load(bs, bf_addr(b + 4)));
        }
      }
    }
  }
  return {chest_op_total(plan.beams, plan.tx, plan.sc_count)};
}

KernelArtifacts build_chest(const ClusterConfig& cfg, uint32_t beams, uint32_t tx,
                            uint32_t sc_count, const std::vector<cpx>& bf,
                            const std::vector<cpx>& pilot, uint32_t workers) {
  if (bf.size() != size_t(beams) * sc_count)
    throw std::invalid_argument("build_chest: bf size mismatch");
  if (pilot.size() != size_t(tx) * sc_count)
    throw std::invalid_argument("build_chest: pilot size mismatch");
  if (workers == 0) workers = std::min<uint32_t>(cfg.total_cores(), sc_count);

  KernelArtifacts art;
  art.name = "channel-est";
  art.run.programs.resize(cfg.total_cores());

  L1Alloc alloc(cfg);
  ChestPlan plan;
  plan.beams = beams;
  plan.tx = tx;
  plan.sc_count = sc_count;
  plan.workers = workers;
  plan.bf_base = alloc.alloc_words(bf.size());
  plan.pilot_base = alloc.alloc_words(pilot.size());
  plan.h_base = alloc.alloc_words(size_t(beams) * tx * sc_count);

  ChestEmitInfo info = emit_chest(art.run, cfg, plan);
  for (auto& p : art.run.programs)
    if (!p.empty()) p.code.push_back(Instr::halt());

  std::vector<cpx> bff(bf.size()), pf(pilot.size());
  for (size_t i = 0; i < bf.size(); ++i) {
    const uint32_t q = cq15(bf[i]);
    bff[i] = cq15_to_cpx(q);
    art.l1_init.push_back({plan.bf_base + 4 * i, q});
  }
  for (size_t i = 0; i < pilot.size(); ++i) {
    const uint32_t q = cq15(pilot[i]);
    pf[i] = cq15_to_cpx(q);
    art.l1_init.push_back({plan.pilot_base + 4 * i, q});
  }

  art.oracle = chest_float(bff, beams, pf, tx, sc_count);
  art.output_addrs.reserve(art.oracle.size());
  for (uint64_t i = 0; i < art.oracle.size(); ++i)
    art.output_addrs.push_back(plan.h_base + 4 * i);
  art.op_total = info.op_total;
  art.tolerance = std::ldexp(1.0, -14);
  art.norm = ErrorNorm::MaxAbsPerEntry;
  return art;
}

}  // namespace terasim::kernels
