#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "terasim/config.hpp"
#include "terasim/dma.hpp"
#include "terasim/hbm.hpp"
#include "terasim/interconnect.hpp"
#include "terasim/l1.hpp"
#include "terasim/metrics.hpp"
#include "terasim/program.hpp"
#include "terasim/scramble.hpp"

namespace terasim {

class SimError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CoreState {
  uint32_t pc = 0;
  uint32_t regs[kNumRegs] = {0};
  uint64_t ready_cycle[kNumRegs] = {0};  // operand usable when cycle >= this
  uint32_t pending_loads = 0;
  uint64_t retired = 0;
  uint64_t stalls[kNumStallCauses] = {0, 0, 0, 0};
  bool halted = true;
  uint64_t halt_cycle = 0;     // absolute cycle of HALT issue
  uint64_t resume_at = 0;      // barrier release gate
  int32_t waiting_barrier = -1;
  const Program* prog = nullptr;
};

// Lock-step cycle driver owning the whole cluster state. Survives across
// run() calls so a kernel chain can keep L1/HBM contents and in-flight DMA
// between phases; the clock is global and monotone.
class Simulator {
public:
  Simulator(const ClusterConfig& cfg, uint64_t seed);

  // Executes one phase: loads programs, advances until every active core
  // has halted. Returns this segment's metrics (also accumulated into
  // report() under `label`).
  KernelMetrics run(const RunInput& input, const std::string& label);

  // Ticks until the interconnect and DMA are fully drained.
  void drain();

  uint64_t now() const { return cycle_; }
  uint64_t seed() const { return seed_; }

  L1Store& l1() { return l1_; }
  MainMemory& main_memory() { return mem_; }
  HbmModel& hbm() { return hbm_; }
  DmaEngine& dma() { return dma_; }
  Interconnect& interconnect() { return icn_; }
  const ScrambleMap& scramble_map() const { return map_; }
  const ClusterConfig& config() const { return cfg_; }

  MetricsReport& report() { return report_; }

  void set_trace(std::ostream* os) { icn_.set_trace(os); }

private:
  struct BarrierState {
    uint32_t arrived = 0;
    std::vector<uint32_t> waiting;
  };

  // Returns true if the core issued an instruction this cycle.
  bool step_core(uint32_t core_id);

  ClusterConfig cfg_;
  uint64_t seed_;
  L1Store l1_;
  MainMemory mem_;
  ScrambleMap map_;
  HbmModel hbm_;
  Interconnect icn_;
  DmaEngine dma_;

  std::vector<CoreState> cores_;
  uint64_t cycle_ = 0;
  uint64_t next_req_id_ = 1;
  std::unordered_map<uint64_t, std::pair<uint32_t, uint8_t>> load_dest_;  // req -> core,reg

  int32_t open_barrier_ = -1;
  BarrierState barrier_;
  uint32_t active_core_count_ = 0;
  const std::vector<DmaDescriptor>* descriptors_ = nullptr;

  MetricsReport report_;
};

uint32_t ceil_log2(uint64_t v);

}  // namespace terasim
