#include "terasim/hbm.hpp"

#include <algorithm>
#include <stdexcept>

namespace terasim {

HbmModel::HbmModel(const HbmConfig& cfg, uint64_t seed)
    : cfg_(cfg), busy_until_(cfg.channels, 0), rng_(seed ^ 0x9e3779b97f4a7c15ull) {}

HbmBurstRecord HbmModel::submit(uint64_t cycle, uint32_t channel, uint32_t bytes,
                                bool write) {
  if (channel >= cfg_.channels) throw std::out_of_range("hbm: bad channel");
  const uint32_t rate = cfg_.per_channel_rate();
  const uint64_t service = (bytes + rate - 1) / rate;

  int64_t jitter = 0;
  if (cfg_.latency_jitter > 0) {
    std::uniform_int_distribution<int64_t> d(-int64_t(cfg_.latency_jitter),
                                             int64_t(cfg_.latency_jitter));
    jitter = d(rng_);
  }

  HbmBurstRecord rec;
  rec.submit_cycle = cycle;
  rec.service_start = std::max(cycle, busy_until_[channel]);
  rec.service_end = rec.service_start + service;
  rec.completion = uint64_t(int64_t(rec.service_end + cfg_.avg_latency) + jitter);
  rec.channel = channel;
  rec.bytes = bytes;
  rec.write = write;
  busy_until_[channel] = rec.service_end;
  trace_.push_back(rec);
  return rec;
}

double hbm_sustained_bandwidth(const std::vector<HbmBurstRecord>& trace,
                               uint32_t avg_latency) {
  if (trace.empty()) throw std::invalid_argument("hbm bandwidth: empty trace");
  uint64_t first_submit = UINT64_MAX, last_completion = 0, bytes = 0;
  for (const auto& r : trace) {
    first_submit = std::min(first_submit, r.submit_cycle);
    last_completion = std::max(last_completion, r.completion);
    bytes += r.bytes;
  }
  const uint64_t span = last_completion - first_submit;
  const uint64_t makespan = span > avg_latency ? span - avg_latency : 1;
  return double(bytes) / double(makespan);
}

}  // namespace terasim
