#include "terasim/kernels/fft.hpp"

#include "terasim/kernels/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace terasim::kernels {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// One decimation-in-time stage. Butterfly (p, q), p in [0, m), q in [0, s),
// m = n_cur/radix, reads source words q + s*(radix*p + r), scales input r by
// W_{n_cur}^{r*p}, combines, and writes q + s*(p + k*m) = i + k*(n/radix)
// where i = p*s + q. The invariant n_cur * s == n holds for every stage.
struct Stage {
  uint32_t n_cur;
  uint32_t s;
  uint32_t radix;  // 4, or 2 for the final stage of odd log2(n)
};

std::vector<Stage> stage_plan(uint32_t n) {
  if (n < 4 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: n must be a power of two >= 4");
  uint32_t log2n = 0;
  while ((1u << log2n) < n) ++log2n;
  // Build the factor list innermost-first, then reverse so the stage order
  // is decimation in time with the odd radix-2 factor last.
  std::vector<Stage> st;
  uint32_t n_cur = n, s = 1;
  const bool odd = (log2n % 2) == 1;
  while (n_cur > 1) {
    const uint32_t radix = (odd && n_cur == n) ? 2u : 4u;
    st.push_back({n_cur, s, radix});
    n_cur /= radix;
    s *= radix;
  }
  std::reverse(st.begin(), st.end());
  return st;
}

uint32_t twiddle_word(uint32_t n_cur, uint32_t p, uint32_t r) {
  return cq15(std::polar(1.0, -kTau * double(r) * double(p) / double(n_cur)));
}

// Butterfly job split: worker w of `workers` owns indices [lo, hi).
std::pair<uint64_t, uint64_t> job_range(uint64_t total, uint32_t workers, uint32_t w) {
  return {total * w / workers, total * (w + 1) / workers};
}

// Register file layout for the software-pipelined butterfly loop.
constexpr uint8_t kSet0 = 1;  // a b c d w1 w2 w3
constexpr uint8_t kSet1 = 8;
constexpr uint8_t kApc = 15, kAmc = 16, kBpd = 17, kBmd = 18, kY = 19;

struct ButterflyJob {
  uint64_t src[4];
  uint64_t dst[4];
  uint32_t tw[3];  // quantized W^{p}, W^{2p}, W^{3p} (radix 2 uses tw[0])
  uint64_t tw_addr[3];
  uint32_t radix;
};

// Loads for one job into register set `base`, in use order.
std::vector<Instr> job_loads(const ButterflyJob& j, uint8_t base) {
  std::vector<Instr> v;
  if (j.radix == 4) {
    v.push_back(Instr::load(base + 1, j.src[1]));  // b
    v.push_back(Instr::load(base + 4, j.tw_addr[0]));
    v.push_back(Instr::load(base + 2, j.src[2]));  // c
    v.push_back(Instr::load(base + 5, j.tw_addr[1]));
    v.push_back(Instr::load(base + 3, j.src[3]));  // d
    v.push_back(Instr::load(base + 6, j.tw_addr[2]));
    v.push_back(Instr::load(base + 0, j.src[0]));  // a
  } else {
    v.push_back(Instr::load(base + 1, j.src[1]));
    v.push_back(Instr::load(base + 4, j.tw_addr[0]));
    v.push_back(Instr::load(base + 0, j.src[0]));
  }
  return v;
}

std::vector<Instr> job_body(const ButterflyJob& j, uint8_t base) {
  std::vector<Instr> v;
  const uint8_t a = base, b = base + 1, c = base + 2, d = base + 3;
  const uint8_t w1 = base + 4, w2 = base + 5, w3 = base + 6;
  if (j.radix == 4) {
    v.push_back(Instr::compute(Opcode::CMul, b, {b, w1}, 0, 6));
    v.push_back(Instr::compute(Opcode::CMul, c, {c, w2}, 0, 6));
    v.push_back(Instr::compute(Opcode::CMul, d, {d, w3}, 0, 6));
    v.push_back(Instr::compute(Opcode::CAdd, kApc, {a, c}, 1, 2));
    v.push_back(Instr::compute(Opcode::CSub, kAmc, {a, c}, 1, 2));
    v.push_back(Instr::compute(Opcode::CAdd, kBpd, {b, d}, 1, 2));
    v.push_back(Instr::compute(Opcode::CSub, kBmd, {b, d}, 1, 2));
    v.push_back(Instr::compute(Opcode::CAdd, kY, {kApc, kBpd}, 0, 2));
    v.push_back(Instr::store(j.dst[0], kY));
    v.push_back(Instr::compute(Opcode::CSubJ, kY, {kAmc, kBmd}, 0, 2));
    v.push_back(Instr::store(j.dst[1], kY));
    v.push_back(Instr::compute(Opcode::CSub, kY, {kApc, kBpd}, 0, 2));
    v.push_back(Instr::store(j.dst[2], kY));
    v.push_back(Instr::compute(Opcode::CAddJ, kY, {kAmc, kBmd}, 0, 2));
    v.push_back(Instr::store(j.dst[3], kY));
  } else {
    v.push_back(Instr::compute(Opcode::CMul, b, {b, w1}, 0, 6));
    v.push_back(Instr::compute(Opcode::CAdd, kY, {a, b}, 1, 2));
    v.push_back(Instr::store(j.dst[0], kY));
    v.push_back(Instr::compute(Opcode::CSub, kY, {a, b}, 1, 2));
    v.push_back(Instr::store(j.dst[1], kY));
  }
  return v;
}

void append_interleaved(Program& p, const std::vector<Instr>& body,
                        const std::vector<Instr>& next_loads) {
  size_t bi = 0, li = 0;
  while (bi < body.size() || li < next_loads.size()) {
    if (bi < body.size()) p.code.push_back(body[bi++]);
    if (li < next_loads.size()) p.code.push_back(next_loads[li++]);
  }
}

uint32_t tw_per_bfly(uint32_t radix) { return radix == 4 ? 3u : 1u; }

}  // namespace

uint32_t fft_stage_count(uint32_t n) { return uint32_t(stage_plan(n).size()); }

// Twiddles depend only on the stage and butterfly index, so all antennas
// replay the same per-worker stream.
uint64_t fft_twiddle_rows(const FftPlan& plan) {
  uint64_t rows = 0;
  for (const Stage& st : stage_plan(plan.n)) {
    const uint64_t bflys = uint64_t(plan.n) / st.radix;
    const uint64_t per_worker = (bflys + plan.workers - 1) / plan.workers;
    rows += uint64_t(tw_per_bfly(st.radix)) * per_worker;
  }
  return rows;
}

uint64_t fft_op_total(uint32_t n, uint32_t antennas) {
  uint64_t total = 0;
  for (const Stage& st : stage_plan(n))
    total += (st.radix == 4) ? uint64_t(n) / 4 * 34 : uint64_t(n) / 2 * 10;
  return total * antennas;
}

FftEmitInfo emit_fft(RunInput& run, const ClusterConfig& cfg, const FftPlan& plan,
                     BuildContext& ctx, WordImage& twiddle_image) {
  if (plan.workers == 0 || plan.workers > cfg.total_cores())
    throw std::invalid_argument("fft: bad worker count");
  if (plan.workers > cfg.total_banks())
    throw std::invalid_argument("fft: workers must not exceed bank count");
  if (run.programs.size() < cfg.total_cores()) run.programs.resize(cfg.total_cores());

  const auto stages = stage_plan(plan.n);
  FftEmitInfo info;
  info.stages = uint32_t(stages.size());
  info.output_in_x = (info.stages % 2 == 0);
  info.op_total = fft_op_total(plan.n, plan.antennas);

  std::vector<uint64_t> tw_next(plan.workers, 0);  // stream cursor per worker

  uint64_t src = plan.buf_x, dst = plan.buf_y;
  for (const Stage& st : stages) {
    const uint64_t bflys = uint64_t(plan.n) / st.radix;
    for (uint32_t w = 0; w < plan.workers; ++w) {
      Program& p = run.programs[w];
      auto [lo, hi] = job_range(bflys, plan.workers, w);
      const uint64_t stage_tw_base = tw_next[w];
      const uint32_t tpb = tw_per_bfly(st.radix);

      // Flattened job list: all antennas, this worker's butterfly block.
      // Twiddles are antenna-independent, so every antenna replays the same
      // stream slots.
      std::vector<ButterflyJob> jobs;
      jobs.reserve(size_t(hi - lo) * plan.antennas);
      for (uint32_t ant = 0; ant < plan.antennas; ++ant) {
        const uint64_t row = uint64_t(ant) * plan.n;
        for (uint64_t i = lo; i < hi; ++i) {
          ButterflyJob j{};
          j.radix = st.radix;
          const uint64_t pp = i / st.s, q = i % st.s;
          for (uint32_t k = 0; k < st.radix; ++k) {
            j.src[k] = src + 4 * (row + q + uint64_t(st.s) * (st.radix * pp + k));
            j.dst[k] = dst + 4 * (row + i + k * bflys);
          }
          for (uint32_t r = 0; r < tpb; ++r) {
            j.tw[r] = twiddle_word(st.n_cur, uint32_t(pp), r + 1);
            j.tw_addr[r] = plan.twiddles.addr(w, stage_tw_base + tpb * (i - lo) + r);
            if (ant == 0) twiddle_image.push_back({j.tw_addr[r], j.tw[r]});
          }
          jobs.push_back(j);
        }
      }
      tw_next[w] = stage_tw_base + tpb * (hi - lo);

      for (size_t k = 0; k < jobs.size(); ++k) {
        const uint8_t cur = (k % 2 == 0) ? kSet0 : kSet1;
        const uint8_t nxt = (k % 2 == 0) ? kSet1 : kSet0;
        if (k == 0)
          for (const Instr& in : job_loads(jobs[0], cur)) p.code.push_back(in);
        std::vector<Instr> next_loads;
        if (k + 1 < jobs.size()) next_loads = job_loads(jobs[k + 1], nxt);
        append_interleaved(p, job_body(jobs[k], cur), next_loads);
      }
    }
    const int bid = ctx.barrier();
    for (uint32_t w = 0; w < plan.workers; ++w)
      run.programs[w].code.push_back(Instr::barrier(bid));
    ++info.barriers;
    std::swap(src, dst);
  }
  return info;
}

std::vector<uint32_t> fft_fixed_reference(const std::vector<uint32_t>& row) {
  const uint32_t n = uint32_t(row.size());
  std::vector<uint32_t> x = row, y(n);
  for (const Stage& st : stage_plan(n)) {
    const uint64_t bflys = uint64_t(n) / st.radix;
    for (uint64_t i = 0; i < bflys; ++i) {
      const uint64_t pp = i / st.s, q = i % st.s;
      const auto src_at = [&](uint32_t k) {
        return x[q + uint64_t(st.s) * (st.radix * pp + k)];
      };
      if (st.radix == 4) {
        const uint32_t a = src_at(0);
        const uint32_t b = eval2(Opcode::CMul, src_at(1), twiddle_word(st.n_cur, uint32_t(pp), 1), 0);
        const uint32_t c = eval2(Opcode::CMul, src_at(2), twiddle_word(st.n_cur, uint32_t(pp), 2), 0);
        const uint32_t d = eval2(Opcode::CMul, src_at(3), twiddle_word(st.n_cur, uint32_t(pp), 3), 0);
        const uint32_t apc = eval2(Opcode::CAdd, a, c, 1);
        const uint32_t amc = eval2(Opcode::CSub, a, c, 1);
        const uint32_t bpd = eval2(Opcode::CAdd, b, d, 1);
        const uint32_t bmd = eval2(Opcode::CSub, b, d, 1);
        y[i + 0 * bflys] = eval2(Opcode::CAdd, apc, bpd, 0);
        y[i + 1 * bflys] = eval2(Opcode::CSubJ, amc, bmd, 0);
        y[i + 2 * bflys] = eval2(Opcode::CSub, apc, bpd, 0);
        y[i + 3 * bflys] = eval2(Opcode::CAddJ, amc, bmd, 0);
      } else {
        const uint32_t a = src_at(0);
        const uint32_t b = eval2(Opcode::CMul, src_at(1), twiddle_word(st.n_cur, uint32_t(pp), 1), 0);
        y[i + 0 * bflys] = eval2(Opcode::CAdd, a, b, 1);
        y[i + 1 * bflys] = eval2(Opcode::CSub, a, b, 1);
      }
    }
    std::swap(x, y);
  }
  return x;
}

KernelArtifacts build_fft(const ClusterConfig& cfg, uint32_t n, uint32_t antennas,
                          const std::vector<cpx>& input, uint32_t workers) {
  if (input.size() != size_t(n) * antennas)
    throw std::invalid_argument("build_fft: input size mismatch");
  if (workers == 0)
    workers = std::min({cfg.total_cores(), cfg.total_banks(), n / 4});

  KernelArtifacts art;
  art.name = "fft";
  art.run.programs.resize(cfg.total_cores());

  L1Alloc alloc(cfg);
  FftPlan plan;
  plan.n = n;
  plan.antennas = antennas;
  plan.workers = workers;
  plan.buf_x = alloc.alloc_words(uint64_t(antennas) * n);
  plan.buf_y = alloc.alloc_words(uint64_t(antennas) * n);
  plan.twiddles = alloc_bank_stream(alloc, cfg, fft_twiddle_rows(plan));

  BuildContext ctx;
  WordImage twiddle_image;
  FftEmitInfo info = emit_fft(art.run, cfg, plan, ctx, twiddle_image);
  for (uint32_t w = 0; w < workers; ++w)
    art.run.programs[w].code.push_back(Instr::halt());

  for (uint64_t i = 0; i < input.size(); ++i)
    art.l1_init.push_back({plan.buf_x + 4 * i, cq15(input[i])});
  art.l1_init.insert(art.l1_init.end(), twiddle_image.begin(), twiddle_image.end());

  const uint64_t out = info.output_in_x ? plan.buf_x : plan.buf_y;
  const double scale = std::ldexp(1.0, -int(info.stages));
  for (uint32_t ant = 0; ant < antennas; ++ant) {
    std::vector<cpx> row(input.begin() + size_t(ant) * n,
                         input.begin() + size_t(ant + 1) * n);
    for (auto& v : row) v = cq15_to_cpx(cq15(v));  // oracle sees the quantized input
    auto spec = fft_float(row);
    for (uint32_t k = 0; k < n; ++k) {
      art.output_addrs.push_back(out + 4 * (uint64_t(ant) * n + k));
      art.oracle.push_back(spec[k] * scale);
    }
  }
  art.op_total = info.op_total;
  art.tolerance = std::ldexp(1.0, -7);
  art.norm = ErrorNorm::MaxRelToMax;
  return art;
}

}  // namespace terasim::kernels
