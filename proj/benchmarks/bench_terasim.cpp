#include <benchmark/benchmark.h>

#include <terasim/config.hpp>
#include <terasim/dma.hpp>
#include <terasim/interconnect.hpp>
#include <terasim/kernels/fft.hpp>
#include <terasim/scramble.hpp>
#include <terasim/sim.hpp>

#include <random>

using namespace terasim;
using namespace terasim::kernels;

namespace {

void BM_ScrambleApply(benchmark::State& state) {
  const ScrambleMap map(preset("desk-256").cluster.hbm);
  uint64_t a = 0x1234;
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.apply(a));
    a += 257;
  }
}
BENCHMARK(BM_ScrambleApply);

void BM_InterconnectTick(benchmark::State& state) {
  const ClusterConfig cfg = preset("desk-256").cluster;
  L1Store l1(cfg);
  Interconnect icn(cfg, l1);
  const uint32_t cores = uint32_t(state.range(0));
  uint64_t t = 0, req = 1;
  for (auto _ : state) {
    for (uint32_t c = 0; c < cores; ++c)
      icn.submit(t, MemRequest{req++, c, MemOp::Read, (t * 4 + c * 4) % cfg.l1_bytes(),
                               0, t});
    icn.tick(t);
    benchmark::DoNotOptimize(icn.deliver(t + 1));
    ++t;
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * cores);
}
BENCHMARK(BM_InterconnectTick)->Arg(32)->Arg(256);

void BM_DmaSplit(benchmark::State& state) {
  const ClusterConfig cfg = preset("desk-256").cluster;
  const ScrambleMap map(cfg.hbm);
  DmaDescriptor d;
  d.src = 100;
  d.dst = 36;
  d.bytes_per_row = uint32_t(state.range(0));
  d.rows = 4;
  d.src_stride = d.bytes_per_row + 64;
  d.dst_stride = d.bytes_per_row + 128;
  d.hbm_to_l1 = true;
  for (auto _ : state) benchmark::DoNotOptimize(split(d, map, cfg));
  state.SetBytesProcessed(int64_t(state.iterations()) * d.bytes_per_row * d.rows);
}
BENCHMARK(BM_DmaSplit)->Arg(1024)->Arg(65536);

void BM_FftRun(benchmark::State& state) {
  const uint32_t n = uint32_t(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  std::vector<cpx> x(n);
  for (auto& v : x) v = cpx{u(rng), u(rng)};
  const ClusterConfig cfg = preset("desk-256").cluster;
  const KernelArtifacts art = build_fft(cfg, n, 1, x);
  for (auto _ : state) {
    Simulator sim(cfg, 1);
    benchmark::DoNotOptimize(run_artifacts(sim, art));
  }
}
BENCHMARK(BM_FftRun)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
