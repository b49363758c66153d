#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "terasim/config.hpp"

namespace terasim {

enum class StallCause : uint8_t { RawWait = 0, LsuFull = 1, BarrierWait = 2, DmaWait = 3 };
constexpr int kNumStallCauses = 4;
const char* stall_cause_name(StallCause c);

// One kernel's (or run segment's) aggregate counters. Accounting identity:
// retired + sum(stalls) == active_cycles, summed over cores.
struct KernelMetrics {
  std::string name;
  uint64_t cycles = 0;            // wall cycles of the segment(s)
  uint64_t retired = 0;           // instructions, all cores
  uint64_t stalls[kNumStallCauses] = {0, 0, 0, 0};
  uint64_t active_cycles = 0;     // sum over cores of cycles-until-halt
  uint64_t ops = 0;               // real operations (COMPUTE op_count sums)
  uint64_t exposed_transfer_cycles = 0;  // DMA busy while no core issued

  uint64_t stall_total() const {
    return stalls[0] + stalls[1] + stalls[2] + stalls[3];
  }
  double ipc() const { return active_cycles ? double(retired) / double(active_cycles) : 0.0; }
  double ops_per_cycle() const { return cycles ? double(ops) / double(cycles) : 0.0; }
  double overhead() const {
    return cycles ? double(exposed_transfer_cycles) / double(cycles) : 0.0;
  }
  void accumulate(const KernelMetrics& o);
};

struct MetricsReport {
  uint64_t seed = 0;
  std::string config_echo;  // JSON snippet of the cluster config
  std::vector<KernelMetrics> kernels;

  KernelMetrics& kernel(const std::string& name);        // insert if missing
  const KernelMetrics* find(const std::string& name) const;
  KernelMetrics totals() const;
};

// Named metric lookup for `check` expectations, e.g. "fft.ipc",
// "chain.overhead", "mmse.cycles".
double metric_value(const MetricsReport& r, const std::string& path);

double ipc(const MetricsReport& r, const std::string& kernel);
double transfer_overhead(const MetricsReport& r, const std::string& kernel);

// Versioned, stable-field-order serialization. emit/parse round-trip.
std::string emit_json(const MetricsReport& r);
std::string emit_csv(const MetricsReport& r);
MetricsReport parse_json(const std::string& text);

std::string config_to_json(const ClusterConfig& cfg);

}  // namespace terasim
