#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <queue>
#include <vector>

#include "terasim/config.hpp"
#include "terasim/l1.hpp"

namespace terasim {

enum class MemOp : uint8_t { Read, Write, AmoAdd };

struct MemRequest {
  uint64_t req_id;
  uint32_t core_id;
  MemOp op;
  uint64_t addr;
  uint32_t wdata = 0;
  uint64_t issue_cycle = 0;
};

struct MemResponse {
  uint64_t req_id;
  uint32_t core_id;
  uint32_t rdata;
  uint64_t deliver_cycle;
};

// Word-granular DMA operation stealing an idle bank slot. Cores win ties.
// Writes honor the byte mask (read-modify-write in the bank's service slot).
struct DmaBankOp {
  bool write;
  uint64_t addr;  // word-aligned
  uint32_t wdata = 0;
  uint32_t wmask = 0xffffffffu;  // expanded byte mask
  uint64_t token = 0;            // opaque client handle (burst id)
};

class DmaBankClient {
public:
  virtual ~DmaBankClient() = default;
  virtual void dma_word_done(uint64_t token, uint64_t addr, uint32_t rdata) = 0;
};

// 3-level fully-connected crossbar hierarchy. Links are contention-free;
// queueing happens only at the bank service point (one access per bank per
// cycle, rotating round-robin arbitration keyed by core id). The quoted
// per-level latency is the full round trip: a request serviced at cycle s
// delivers at s + access_latency(core, addr).
class Interconnect {
public:
  Interconnect(const ClusterConfig& cfg, L1Store& l1);

  // At most one request per core per cycle (asserted). Always accepted.
  bool submit(uint64_t cycle, const MemRequest& req);

  // DMA port, one queue per bank; serviced only when no core request
  // contends for the bank that cycle.
  void dma_submit(const DmaBankOp& op);
  void set_dma_client(DmaBankClient* client) { dma_client_ = client; }

  // Responses due at `cycle`; call before cores step so loaded data is
  // usable exactly at its deliver cycle.
  std::vector<MemResponse> deliver(uint64_t cycle);

  // Arbitrates banks and applies bank state changes in service order; call
  // after cores have submitted this cycle's requests.
  void tick(uint64_t cycle);

  bool idle() const { return in_flight_ == 0 && dma_pending_ == 0; }
  uint64_t in_flight() const { return in_flight_; }
  // Core requests that lost a bank arbitration round, one count per cycle
  // deferred. Zero over a run means the schedule was bank-conflict-free.
  uint64_t core_conflicts() const { return core_conflicts_; }
  void set_trace(std::ostream* os) { trace_ = os; }

private:
  struct Waiting {
    MemRequest req;
  };
  struct Bank {
    std::vector<MemRequest> waiting;  // core requests, arrival order
    std::deque<DmaBankOp> dma_ops;
    uint32_t rr_pointer = 0;  // next core id to favor
  };
  struct PendingResp {
    MemResponse resp;
    bool operator>(const PendingResp& o) const {
      if (resp.deliver_cycle != o.resp.deliver_cycle)
        return resp.deliver_cycle > o.resp.deliver_cycle;
      return resp.req_id > o.resp.req_id;
    }
  };

  uint32_t bank_of(uint64_t addr) const;
  void mark_active(uint32_t bank);

  const ClusterConfig& cfg_;
  L1Store& l1_;
  std::vector<Bank> banks_;
  std::vector<uint32_t> active_banks_;
  std::vector<uint8_t> bank_active_flag_;
  std::priority_queue<PendingResp, std::vector<PendingResp>, std::greater<>> resp_heap_;
  std::vector<uint64_t> last_submit_cycle_;  // per core, +1 biased
  uint64_t in_flight_ = 0;
  uint64_t dma_pending_ = 0;
  uint64_t core_conflicts_ = 0;
  DmaBankClient* dma_client_ = nullptr;
  std::ostream* trace_ = nullptr;
};

}  // namespace terasim
