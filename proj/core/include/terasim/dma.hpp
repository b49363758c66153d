#pragma once

#include <cstdint>
#include <deque>
#include <queue>
#include <string>
#include <vector>

#include "terasim/config.hpp"
#include "terasim/dma_types.hpp"
#include "terasim/hbm.hpp"
#include "terasim/interconnect.hpp"
#include "terasim/l1.hpp"
#include "terasim/scramble.hpp"

namespace terasim {

// DMA frontend register block, word offsets.
enum DmaCsr : uint32_t {
  kDmaCsrSrcLo = 0,
  kDmaCsrSrcHi = 1,
  kDmaCsrDstLo = 2,
  kDmaCsrDstHi = 3,
  kDmaCsrBytesPerRow = 4,
  kDmaCsrRows = 5,
  kDmaCsrSrcStride = 6,
  kDmaCsrDstStride = 7,
  kDmaCsrDirection = 8,  // 1 = hbm->l1, 0 = l1->hbm
  kDmaCsrStart = 9,      // write 1 to launch
  kDmaCsrStatus = 10,    // bit0 busy, bit1 incomplete-descriptor, bit2 busy-start
  kDmaCsrBurstsTotal = 11,
  kDmaCsrBurstsDone = 12,
};

constexpr uint32_t kDmaStatusBusy = 1u << 0;
constexpr uint32_t kDmaStatusErrIncomplete = 1u << 1;
constexpr uint32_t kDmaStatusErrBusyStart = 1u << 2;

// Midend: cover the descriptor byte set exactly once with bursts that never
// cross a scrambled channel-interleave boundary on the HBM side nor a tile
// stripe on the L1 side. Row-major, address-ascending.
std::vector<Burst> split(const DmaDescriptor& desc, const ScrambleMap& map,
                         const ClusterConfig& cfg);

// Frontend + midend + per-group backends behind one engine. Single
// outstanding descriptor; software pipelines with start/wait pairs.
class DmaEngine : public DmaBankClient {
public:
  DmaEngine(const ClusterConfig& cfg, const ScrambleMap& map, HbmModel& hbm,
            MainMemory& mem, Interconnect& icn);

  // Frontend CSR access. Unknown register -> throws (bus fault).
  void frontend_write(uint32_t csr_addr, uint32_t value, uint64_t cycle);
  uint32_t frontend_read(uint32_t csr_addr) const;

  // Convenience used by the DMA_START instruction: stages the whole
  // descriptor through the CSRs and launches it.
  bool start_descriptor(const DmaDescriptor& d, uint64_t cycle);

  bool busy() const { return busy_; }
  DmaStatus status() const;

  void tick(uint64_t cycle);

  // DmaBankClient
  void dma_word_done(uint64_t token, uint64_t addr, uint32_t rdata) override;

  // Burst trace: cycle,channel,bytes,direction CSV.
  std::string burst_trace_csv() const;
  void clear_burst_trace() { csv_trace_.clear(); }

private:
  struct InFlight {
    Burst burst;
    uint64_t hbm_service_end = 0;
    uint64_t hbm_completion = 0;
    uint32_t words_pending = 0;
    uint32_t backend = 0;
    bool l1_phase_done = false;
    std::vector<uint8_t> gathered;  // l1->hbm read data, burst byte order
  };
  struct Backend {
    std::deque<uint32_t> queue;  // indices into inflight_
    uint32_t in_service = 0;     // bursts holding a slot (until hbm service end)
  };

  void launch(uint64_t cycle);
  void issue_burst(uint32_t idx, uint64_t cycle);
  void enqueue_l1_writes(uint32_t idx);
  void finish_burst(uint32_t idx, uint64_t cycle);

  const ClusterConfig& cfg_;
  const ScrambleMap& map_;
  HbmModel& hbm_;
  MainMemory& mem_;
  Interconnect& icn_;

  uint32_t csr_[9] = {0};
  uint32_t status_ = 0;
  bool busy_ = false;
  bool current_dir_h2l_ = true;
  uint64_t cur_cycle_ = 0;
  uint32_t desc_counter_ = 0;
  DmaStatus current_;

  std::vector<InFlight> inflight_;
  std::vector<Backend> backends_;
  // (event_cycle, inflight idx): HBM completions to act on.
  std::priority_queue<std::pair<uint64_t, uint32_t>,
                      std::vector<std::pair<uint64_t, uint32_t>>, std::greater<>>
      events_;
  std::vector<std::pair<uint64_t, uint32_t>> service_end_events_;  // backend slots
  std::string csv_trace_;
};

}  // namespace terasim
