#include "terasim/dma.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace terasim {

std::vector<Burst> split(const DmaDescriptor& desc, const ScrambleMap& map,
                         const ClusterConfig& cfg) {
  std::vector<Burst> out;
  const uint32_t burst_bytes = cfg.hbm.burst_bytes;
  const uint32_t stripe = cfg.tile_stripe_bytes();
  for (uint32_t r = 0; r < desc.rows; ++r) {
    uint64_t src = desc.src + uint64_t(r) * desc.src_stride;
    uint64_t dst = desc.dst + uint64_t(r) * desc.dst_stride;
    uint64_t left = desc.bytes_per_row;
    while (left > 0) {
      const uint64_t hbm_addr = desc.hbm_to_l1 ? src : dst;
      const uint64_t l1_addr = desc.hbm_to_l1 ? dst : src;
      uint64_t n = left;
      n = std::min<uint64_t>(n, burst_bytes - hbm_addr % burst_bytes);
      n = std::min<uint64_t>(n, stripe - l1_addr % stripe);
      Burst b;
      b.src = src;
      b.dst = dst;
      b.bytes = uint32_t(n);
      b.channel = map.channel_of(hbm_addr);
      b.desc_id = 0;
      out.push_back(b);
      src += n;
      dst += n;
      left -= n;
    }
  }
  return out;
}

DmaEngine::DmaEngine(const ClusterConfig& cfg, const ScrambleMap& map, HbmModel& hbm,
                     MainMemory& mem, Interconnect& icn)
    : cfg_(cfg), map_(map), hbm_(hbm), mem_(mem), icn_(icn),
      backends_(cfg.backend_count()) {
  icn_.set_dma_client(this);
}

void DmaEngine::frontend_write(uint32_t csr_addr, uint32_t value, uint64_t cycle) {
  if (csr_addr <= kDmaCsrDirection) {
    csr_[csr_addr] = value;
    return;
  }
  if (csr_addr == kDmaCsrStart) {
    if (busy_) {
      status_ |= kDmaStatusErrBusyStart;
      return;
    }
    status_ = 0;
    launch(cycle);
    return;
  }
  throw std::out_of_range("dma frontend: write to unknown or read-only register");
}

uint32_t DmaEngine::frontend_read(uint32_t csr_addr) const {
  if (csr_addr <= kDmaCsrDirection) return csr_[csr_addr];
  switch (csr_addr) {
    case kDmaCsrStatus: return status_ | (busy_ ? kDmaStatusBusy : 0);
    case kDmaCsrBurstsTotal: return current_.bursts_total;
    case kDmaCsrBurstsDone: return current_.bursts_done;
    default: throw std::out_of_range("dma frontend: read from unknown register");
  }
}

bool DmaEngine::start_descriptor(const DmaDescriptor& d, uint64_t cycle) {
  frontend_write(kDmaCsrSrcLo, uint32_t(d.src), cycle);
  frontend_write(kDmaCsrSrcHi, uint32_t(d.src >> 32), cycle);
  frontend_write(kDmaCsrDstLo, uint32_t(d.dst), cycle);
  frontend_write(kDmaCsrDstHi, uint32_t(d.dst >> 32), cycle);
  frontend_write(kDmaCsrBytesPerRow, d.bytes_per_row, cycle);
  frontend_write(kDmaCsrRows, d.rows, cycle);
  frontend_write(kDmaCsrSrcStride, uint32_t(d.src_stride), cycle);
  frontend_write(kDmaCsrDstStride, uint32_t(d.dst_stride), cycle);
  frontend_write(kDmaCsrDirection, d.hbm_to_l1 ? 1 : 0, cycle);
  frontend_write(kDmaCsrStart, 1, cycle);
  return (frontend_read(kDmaCsrStatus) &
          (kDmaStatusErrIncomplete | kDmaStatusErrBusyStart)) == 0;
}

void DmaEngine::launch(uint64_t cycle) {
  DmaDescriptor d;
  d.src = (uint64_t(csr_[kDmaCsrSrcHi]) << 32) | csr_[kDmaCsrSrcLo];
  d.dst = (uint64_t(csr_[kDmaCsrDstHi]) << 32) | csr_[kDmaCsrDstLo];
  d.bytes_per_row = csr_[kDmaCsrBytesPerRow];
  d.rows = csr_[kDmaCsrRows];
  d.src_stride = csr_[kDmaCsrSrcStride];
  d.dst_stride = csr_[kDmaCsrDstStride];
  d.hbm_to_l1 = csr_[kDmaCsrDirection] != 0;
  current_dir_h2l_ = d.hbm_to_l1;

  current_ = DmaStatus{};
  current_.desc_id = desc_counter_++;

  if (d.rows == 0 || d.bytes_per_row == 0) {
    current_.completion_cycle = cycle;  // degenerate: done with 0 bursts
    return;
  }
  const uint64_t total = uint64_t(d.bytes_per_row) * d.rows;
  const uint64_t hbm_base = d.hbm_to_l1 ? d.src : d.dst;
  const uint64_t hbm_stride = d.hbm_to_l1 ? d.src_stride : d.dst_stride;
  const uint64_t l1_base = d.hbm_to_l1 ? d.dst : d.src;
  const uint64_t l1_stride = d.hbm_to_l1 ? d.dst_stride : d.src_stride;
  const bool bad =
      (d.rows > 1 && (d.src_stride < d.bytes_per_row || d.dst_stride < d.bytes_per_row)) ||
      hbm_base + (d.rows - 1) * hbm_stride + d.bytes_per_row > hbm_.config().capacity ||
      l1_base + (d.rows - 1) * l1_stride + d.bytes_per_row > cfg_.l1_bytes();
  (void)total;
  if (bad) {
    status_ |= kDmaStatusErrIncomplete;
    return;
  }

  std::vector<Burst> bursts = split(d, map_, cfg_);
  inflight_.clear();
  inflight_.reserve(bursts.size());
  for (auto& b : bursts) {
    b.desc_id = current_.desc_id;
    InFlight f;
    f.burst = b;
    const uint64_t l1_addr = d.hbm_to_l1 ? b.dst : b.src;
    const uint32_t tile = locate(cfg_, (l1_addr / 4) * 4).tile_index;
    f.backend = (tile / cfg_.tiles_per_group()) % backends_.size();
    inflight_.push_back(f);
  }
  for (uint32_t i = 0; i < inflight_.size(); ++i)
    backends_[inflight_[i].backend].queue.push_back(i);
  current_.bursts_total = uint32_t(inflight_.size());
  busy_ = true;
}

DmaStatus DmaEngine::status() const {
  DmaStatus s = current_;
  s.busy = busy_;
  return s;
}

void DmaEngine::issue_burst(uint32_t idx, uint64_t cycle) {
  InFlight& f = inflight_[idx];
  const Burst& b = f.burst;
  if (current_dir_h2l_) {
    const HbmBurstRecord rec = hbm_.submit(cycle, b.channel, b.bytes, false);
    f.hbm_service_end = rec.service_end;
    f.hbm_completion = rec.completion;
    service_end_events_.push_back({rec.service_end, f.backend});
    events_.push({rec.completion, idx});
    std::ostringstream os;
    os << cycle << "," << b.channel << "," << b.bytes << ",h2l\n";
    csv_trace_ += os.str();
  } else {
    // Gather words from L1 first; the HBM write is submitted once all
    // words are read.
    f.gathered.assign(b.bytes, 0);
    const uint64_t lo = (b.src / 4) * 4;
    const uint64_t hi = ((b.src + b.bytes + 3) / 4) * 4;
    f.words_pending = uint32_t((hi - lo) / 4);
    for (uint64_t a = lo; a < hi; a += 4)
      icn_.dma_submit(DmaBankOp{false, a, 0, 0xffffffffu, idx});
  }
  ++backends_[f.backend].in_service;
}

void DmaEngine::enqueue_l1_writes(uint32_t idx) {
  InFlight& f = inflight_[idx];
  const Burst& b = f.burst;
  std::vector<uint8_t> buf(b.bytes);
  mem_.read_bytes(b.src, buf.data(), b.bytes);
  const uint64_t lo = (b.dst / 4) * 4;
  const uint64_t hi = ((b.dst + b.bytes + 3) / 4) * 4;
  f.words_pending = uint32_t((hi - lo) / 4);
  for (uint64_t a = lo; a < hi; a += 4) {
    uint32_t data = 0, mask = 0;
    for (int byte = 0; byte < 4; ++byte) {
      const uint64_t ba = a + byte;
      if (ba >= b.dst && ba < b.dst + b.bytes) {
        data |= uint32_t(buf[ba - b.dst]) << (8 * byte);
        mask |= 0xffu << (8 * byte);
      }
    }
    icn_.dma_submit(DmaBankOp{true, a, data, mask, idx});
  }
}

void DmaEngine::dma_word_done(uint64_t token, uint64_t addr, uint32_t rdata) {
  InFlight& f = inflight_[uint32_t(token)];
  const Burst& b = f.burst;
  if (!current_dir_h2l_) {
    for (int byte = 0; byte < 4; ++byte) {
      const uint64_t ba = addr + byte;
      if (ba >= b.src && ba < b.src + b.bytes)
        f.gathered[ba - b.src] = uint8_t(rdata >> (8 * byte));
    }
  }
  if (--f.words_pending == 0) {
    if (current_dir_h2l_) {
      finish_burst(uint32_t(token), cur_cycle_);
    } else {
      const HbmBurstRecord rec = hbm_.submit(cur_cycle_, b.channel, b.bytes, true);
      f.hbm_service_end = rec.service_end;
      f.hbm_completion = rec.completion;
      service_end_events_.push_back({rec.service_end, f.backend});
      events_.push({rec.completion, uint32_t(token)});
      std::ostringstream os;
      os << cur_cycle_ << "," << b.channel << "," << b.bytes << ",l2h\n";
      csv_trace_ += os.str();
    }
  }
}

void DmaEngine::finish_burst(uint32_t idx, uint64_t cycle) {
  ++current_.bursts_done;
  if (current_.bursts_done == current_.bursts_total) {
    busy_ = false;
    current_.completion_cycle = cycle;
  }
  (void)idx;
}

void DmaEngine::tick(uint64_t cycle) {
  cur_cycle_ = cycle;

  // Release backend slots whose HBM service has finished.
  for (size_t i = 0; i < service_end_events_.size();) {
    if (service_end_events_[i].first <= cycle) {
      --backends_[service_end_events_[i].second].in_service;
      service_end_events_[i] = service_end_events_.back();
      service_end_events_.pop_back();
    } else {
      ++i;
    }
  }

  // HBM completions: land read data in L1 / commit write data to memory.
  while (!events_.empty() && events_.top().first <= cycle) {
    const uint32_t idx = events_.top().second;
    events_.pop();
    InFlight& f = inflight_[idx];
    if (current_dir_h2l_) {
      if (f.burst.bytes == 0) {
        finish_burst(idx, cycle);
      } else {
        enqueue_l1_writes(idx);
      }
    } else {
      mem_.write_bytes(f.burst.dst, f.gathered.data(), f.burst.bytes);
      finish_burst(idx, cycle);
    }
  }

  // Issue queued bursts up to the per-backend in-service limit.
  for (Backend& be : backends_) {
    while (be.in_service < cfg_.dma_outstanding && !be.queue.empty()) {
      const uint32_t idx = be.queue.front();
      be.queue.pop_front();
      issue_burst(idx, cycle);
    }
  }
}

std::string DmaEngine::burst_trace_csv() const {
  return "cycle,channel,bytes,direction\n" + csv_trace_;
}

}  // namespace terasim
