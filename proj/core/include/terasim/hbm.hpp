#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "terasim/config.hpp"

namespace terasim {

// One completed (or scheduled) burst on the main-memory link.
struct HbmBurstRecord {
  uint64_t submit_cycle;
  uint64_t service_start;
  uint64_t service_end;    // channel occupied until here
  uint64_t completion;     // data available (service_end + latency +- jitter)
  uint32_t channel;
  uint32_t bytes;
  bool write;
};

// Per-channel bandwidth/latency queue. A channel serves one burst at a time
// at peak/channels bytes per cycle; the transfer latency is pipelined and
// does not occupy the channel.
class HbmModel {
public:
  HbmModel(const HbmConfig& cfg, uint64_t seed);

  // Returns the completion record. completion = max(cycle, busy) +
  // ceil(bytes / per_channel_rate) + avg_latency +- jitter.
  HbmBurstRecord submit(uint64_t cycle, uint32_t channel, uint32_t bytes, bool write);

  uint64_t channel_busy_until(uint32_t ch) const { return busy_until_[ch]; }
  const std::vector<HbmBurstRecord>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }
  const HbmConfig& config() const { return cfg_; }

private:
  HbmConfig cfg_;
  std::vector<uint64_t> busy_until_;
  std::mt19937_64 rng_;
  std::vector<HbmBurstRecord> trace_;
};

// Sustained bandwidth over a trace of completed bursts: total bytes divided
// by the makespan with the first avg_latency warm-up cycles excluded.
double hbm_sustained_bandwidth(const std::vector<HbmBurstRecord>& trace,
                               uint32_t avg_latency);

}  // namespace terasim
