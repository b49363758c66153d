#include "terasim/kernels/beamforming.hpp"

#include "terasim/kernels/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terasim::kernels {

namespace {
// Rotating 4-slot windows for the streamed w/y operand pairs.
constexpr uint8_t kYBase = 1, kWBase = 5;
constexpr uint8_t kAccRe = 9, kAccIm = 10, kPk = 11;
}  // namespace

uint64_t bf_weight_region_words(const ClusterConfig& cfg, uint32_t beams, uint32_t antennas) {
  const uint64_t rows =
      (uint64_t(beams) * antennas + cfg.banks_per_tile - 1) / cfg.banks_per_tile;
  return rows * cfg.total_banks();
}

uint64_t bf_weight_addr(const ClusterConfig& cfg, uint64_t w_base, uint32_t tile, uint32_t m) {
  const uint32_t bpt = cfg.banks_per_tile;
  return w_base + 4 * (uint64_t(tile) * bpt + m % bpt + uint64_t(m / bpt) * cfg.total_banks());
}

WordImage bf_weight_image(const ClusterConfig& cfg, uint64_t w_base,
                          const std::vector<uint32_t>& weights_q, uint32_t tiles) {
  WordImage img;
  img.reserve(size_t(tiles) * weights_q.size());
  for (uint32_t t = 0; t < tiles; ++t)
    for (uint32_t m = 0; m < weights_q.size(); ++m)
      img.push_back({bf_weight_addr(cfg, w_base, t, m), weights_q[m]});
  return img;
}

uint64_t bf_op_total(uint32_t beams, uint32_t antennas, uint32_t sc_count) {
  // CMulRe+CMulIm (6) + (antennas-1) MAC pairs (8 each) + PACK (2) = 8*antennas.
  return 8ull * antennas * beams * sc_count;
}

BfEmitInfo emit_bf(RunInput& run, const ClusterConfig& cfg, const BfPlan& plan) {
  if (plan.beams == 0 || plan.antennas == 0 || plan.sc_count == 0)
    throw std::invalid_argument("bf: empty plan");
  const uint32_t chunks = plan.workers / plan.beams;
  if (chunks == 0) throw std::invalid_argument("bf: need at least `beams` workers");
  if (run.programs.size() < cfg.total_cores()) run.programs.resize(cfg.total_cores());

  for (uint32_t w = 0; w < chunks * plan.beams; ++w) {
    const uint32_t beam = w % plan.beams;
    const uint32_t chunk = w / plan.beams;
    const uint64_t lo = uint64_t(plan.sc_count) * chunk / chunks;
    const uint64_t hi = uint64_t(plan.sc_count) * (chunk + 1) / chunks;
    const uint64_t len = hi - lo;
    if (len == 0) continue;
    Program& p = run.programs[w];
    const uint32_t tile = cfg.tile_of_core(w);
    const uint64_t rot = uint64_t(beam) * len / plan.beams;  // de-correlates beams

    const auto y_addr = [&](uint32_t a, uint64_t sc) {
      return plan.y_base + 4 * (uint64_t(a) * plan.y_stride + plan.y_offset + sc);
    };
    const auto w_addr = [&](uint32_t a) {
      return bf_weight_addr(cfg, plan.w_base, tile, beam * plan.antennas + a);
    };

    for (uint64_t j = 0; j < len; ++j) {
      const uint64_t sc = lo + (j + rot) % len;
      const uint32_t pre = std::min<uint32_t>(plan.antennas, 4);
      for (uint32_t a = 0; a < pre; ++a) {
        p.code.push_back(Instr::load(kWBase + a, w_addr(a)));
        p.code.push_back(Instr::load(kYBase + a, y_addr(a, sc)));
      }
      for (uint32_t a = 0; a < plan.antennas; ++a) {
        const uint8_t ws = kWBase + a % 4, ys = kYBase + a % 4;
        if (a == 0) {
          p.code.push_back(Instr::compute(Opcode::CMulRe, kAccRe, {ws, ys}, 0, 3));
          p.code.push_back(Instr::compute(Opcode::CMulIm, kAccIm, {ws, ys}, 0, 3));
        } else {
          p.code.push_back(Instr::compute(Opcode::CMacRe, kAccRe, {kAccRe, ws, ys}, 0, 4));
          p.code.push_back(Instr::compute(Opcode::CMacIm, kAccIm, {kAccIm, ws, ys}, 0, 4));
        }
        if (a + 4 < plan.antennas) {
          p.code.push_back(Instr::load(ws, w_addr(a + 4)));
          p.code.push_back(Instr::load(ys, y_addr(a + 4, sc)));
        }
      }
      p.code.push_back(Instr::compute(Opcode::Pack, kPk, {kAccRe, kAccIm}, 15, 2));
      p.code.push_back(Instr::store(plan.out_base + 4 * (uint64_t(beam) * plan.sc_count + sc),
                                    kPk));
    }
  }
  return {bf_op_total(plan.beams, plan.antennas, plan.sc_count)};
}

KernelArtifacts build_bf(const ClusterConfig& cfg, uint32_t beams, uint32_t antennas,
                         uint32_t sc_count, const std::vector<cpx>& weights,
                         const std::vector<cpx>& y, uint32_t workers) {
  if (weights.size() != size_t(beams) * antennas)
    throw std::invalid_argument("build_bf: weight size mismatch");
  if (y.size() != size_t(antennas) * sc_count)
    throw std::invalid_argument("build_bf: y size mismatch");
  if (workers == 0)
    workers = std::min<uint32_t>(cfg.total_cores(),
                                 std::max<uint32_t>(beams, beams * ((sc_count + 3) / 4)));
  workers = std::max(beams, workers / beams * beams);

  KernelArtifacts art;
  art.name = "beamforming";
  art.run.programs.resize(cfg.total_cores());

  L1Alloc alloc(cfg);
  BfPlan plan;
  plan.beams = beams;
  plan.antennas = antennas;
  plan.sc_count = sc_count;
  plan.workers = workers;
  plan.y_base = alloc.alloc_words(uint64_t(antennas) * sc_count);
  plan.y_stride = sc_count;
  plan.y_offset = 0;
  plan.w_base = alloc.alloc_words(bf_weight_region_words(cfg, beams, antennas),
                                  cfg.total_banks());
  plan.out_base = alloc.alloc_words(uint64_t(beams) * sc_count);

  BfEmitInfo info = emit_bf(art.run, cfg, plan);
  for (auto& p : art.run.programs)
    if (!p.empty()) p.code.push_back(Instr::halt());

  std::vector<uint32_t> wq(weights.size());
  std::vector<cpx> wf(weights.size()), yf(y.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    wq[i] = cq15(weights[i]);
    wf[i] = cq15_to_cpx(wq[i]);
  }
  for (size_t i = 0; i < y.size(); ++i) {
    const uint32_t q = cq15(y[i]);
    yf[i] = cq15_to_cpx(q);
    art.l1_init.push_back({plan.y_base + 4 * i, q});
  }
  const uint32_t tiles = (workers + cfg.cores_per_tile - 1) / cfg.cores_per_tile;
  auto wimg = bf_weight_image(cfg, plan.w_base, wq, tiles);
  art.l1_init.insert(art.l1_init.end(), wimg.begin(), wimg.end());

  art.oracle = beamform_float(wf, beams, antennas, yf, sc_count, sc_count);
  art.output_addrs.reserve(art.oracle.size());
  for (uint64_t i = 0; i < art.oracle.size(); ++i)
    art.output_addrs.push_back(plan.out_base + 4 * i);
  art.op_total = info.op_total;
  art.tolerance = std::ldexp(1.0, -14);
  art.norm = ErrorNorm::MaxAbsPerEntry;
  return art;
}

}  // namespace terasim::kernels
