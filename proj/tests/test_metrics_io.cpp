#include <doctest.h>

#include <terasim/config.hpp>
#include <terasim/metrics.hpp>
#include <terasim/program.hpp>
#include <terasim/sim.hpp>

#include <algorithm>

#include "test_util.hpp"

using namespace terasim;

namespace {

MetricsReport sample_report() {
  MetricsReport r;
  r.seed = 1234;
  r.config_echo = config_to_json(preset("desk-256").cluster);
  KernelMetrics& k = r.kernel("fft");
  k.cycles = 1000;
  k.retired = 900;
  k.stalls[0] = 80;
  k.stalls[2] = 20;
  k.active_cycles = 1000;
  k.ops = 2500;
  k.exposed_transfer_cycles = 15;
  KernelMetrics& k2 = r.kernel("mmse");
  k2.cycles = 400;
  k2.retired = 350;
  k2.active_cycles = 420;
  k2.ops = 700;
  return r;
}

}  // namespace

TEST_CASE("derived rates follow their definitions") {
  const MetricsReport r = sample_report();
  const KernelMetrics& k = *r.find("fft");
  CHECK(k.ipc() == doctest::Approx(0.9));
  CHECK(k.ops_per_cycle() == doctest::Approx(2.5));
  CHECK(k.overhead() == doctest::Approx(0.015));
  CHECK(k.stall_total() == 100);
  CHECK(k.retired + k.stall_total() == k.active_cycles);
}

TEST_CASE("totals accumulate every kernel") {
  const MetricsReport r = sample_report();
  const KernelMetrics t = r.totals();
  CHECK(t.cycles == 1400);
  CHECK(t.retired == 1250);
  CHECK(t.ops == 3200);
  CHECK(t.stall_total() == 100);
}

TEST_CASE("JSON emit/parse round-trips every field") {
  const MetricsReport r = sample_report();
  const std::string js = emit_json(r);
  CHECK(js.find("terasim-metrics-v1") != std::string::npos);
  const MetricsReport back = parse_json(js);
  CHECK(back.seed == r.seed);
  REQUIRE(back.kernels.size() == r.kernels.size());
  for (size_t i = 0; i < r.kernels.size(); ++i) {
    const KernelMetrics &a = r.kernels[i], &b = back.kernels[i];
    CHECK(a.name == b.name);
    CHECK(a.cycles == b.cycles);
    CHECK(a.retired == b.retired);
    CHECK(a.active_cycles == b.active_cycles);
    CHECK(a.ops == b.ops);
    CHECK(a.exposed_transfer_cycles == b.exposed_transfer_cycles);
    for (int s = 0; s < kNumStallCauses; ++s) CHECK(a.stalls[s] == b.stalls[s]);
  }
}

TEST_CASE("empty report serializes and parses") {
  MetricsReport r;
  const MetricsReport back = parse_json(emit_json(r));
  CHECK(back.kernels.empty());
  CHECK(back.totals().cycles == 0);
}

TEST_CASE("CSV has one row per kernel") {
  const std::string csv = emit_csv(sample_report());
  CHECK(csv.find("fft,") != std::string::npos);
  CHECK(csv.find("mmse,") != std::string::npos);
  // header + 2 kernels
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("metric_value resolves paths and rejects junk") {
  const MetricsReport r = sample_report();
  CHECK(metric_value(r, "fft.ipc") == doctest::Approx(0.9));
  CHECK(metric_value(r, "mmse.cycles") == doctest::Approx(400));
  CHECK(metric_value(r, "chain.retired") == doctest::Approx(1250));  // totals
  CHECK_THROWS(metric_value(r, "nosuch.ipc"));
  CHECK_THROWS(metric_value(r, "fft.bogus"));
  CHECK_THROWS(metric_value(r, "fft"));
}

TEST_CASE("simulator-produced report survives a JSON round trip") {
  ClusterConfig cfg = preset("desk-256").cluster;
  Simulator sim(cfg, 5);
  RunInput r;
  r.programs.resize(cfg.total_cores());
  for (uint32_t c = 0; c < 16; ++c) {
    auto& code = r.programs[c].code;
    code.push_back(Instr::movi(1, 3));
    for (int i = 0; i < 12; ++i)
      code.push_back(Instr::compute(Opcode::Add, 2, {1, 1}, 0, 2));
    code.push_back(Instr::halt());
  }
  sim.run(r, "warm");
  const MetricsReport before = sim.report();
  const MetricsReport after = parse_json(emit_json(before));
  CHECK(metric_value(after, "warm.ipc") == doctest::Approx(1.0));
  CHECK(metric_value(after, "warm.ops") == doctest::Approx(16 * (12 * 2 + 1)));  // movi counts once
}
