#include "terasim/interconnect.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace terasim {

Interconnect::Interconnect(const ClusterConfig& cfg, L1Store& l1)
    : cfg_(cfg),
      l1_(l1),
      banks_(cfg.total_banks()),
      bank_active_flag_(cfg.total_banks(), 0),
      last_submit_cycle_(cfg.total_cores(), 0) {}

uint32_t Interconnect::bank_of(uint64_t addr) const {
  return uint32_t((addr / 4) % cfg_.total_banks());
}

void Interconnect::mark_active(uint32_t bank) {
  if (!bank_active_flag_[bank]) {
    bank_active_flag_[bank] = 1;
    active_banks_.push_back(bank);
  }
}

bool Interconnect::submit(uint64_t cycle, const MemRequest& req) {
  if (req.addr % 4 != 0) throw std::invalid_argument("interconnect: unaligned address");
  // Contract: one request per core per cycle.
  assert(last_submit_cycle_[req.core_id] != cycle + 1 && "double issue in one cycle");
  last_submit_cycle_[req.core_id] = cycle + 1;
  const uint32_t bank = bank_of(req.addr);
  MemRequest r = req;
  r.issue_cycle = cycle;
  banks_[bank].waiting.push_back(r);
  mark_active(bank);
  ++in_flight_;
  if (trace_)
    *trace_ << "REQ " << cycle << " core=" << req.core_id << " op=" << int(req.op)
            << " addr=0x" << std::hex << req.addr << std::dec << " id=" << req.req_id
            << "\n";
  return true;
}

void Interconnect::dma_submit(const DmaBankOp& op) {
  const uint32_t bank = bank_of(op.addr);
  banks_[bank].dma_ops.push_back(op);
  mark_active(bank);
  ++dma_pending_;
}

std::vector<MemResponse> Interconnect::deliver(uint64_t cycle) {
  std::vector<MemResponse> out;
  while (!resp_heap_.empty() && resp_heap_.top().resp.deliver_cycle <= cycle) {
    out.push_back(resp_heap_.top().resp);
    resp_heap_.pop();
    --in_flight_;
    if (trace_)
      *trace_ << "RSP " << cycle << " core=" << out.back().core_id
              << " id=" << out.back().req_id << "\n";
  }
  return out;
}

void Interconnect::tick(uint64_t cycle) {
  std::vector<uint32_t> still_active;
  still_active.reserve(active_banks_.size());

  for (uint32_t b : active_banks_) {
    Bank& bank = banks_[b];
    if (!bank.waiting.empty()) {
      // Rotating round-robin: first contender at or after the pointer wins;
      // among several waiting requests from one core, the oldest goes first.
      const uint32_t n = cfg_.total_cores();
      size_t win = 0;
      uint32_t best = UINT32_MAX;
      for (size_t i = 0; i < bank.waiting.size(); ++i) {
        const uint32_t dist = (bank.waiting[i].core_id + n - bank.rr_pointer) % n;
        if (dist < best) {
          best = dist;
          win = i;
        }
      }
      MemRequest req = bank.waiting[win];
      bank.waiting.erase(bank.waiting.begin() + win);
      bank.rr_pointer = (req.core_id + 1) % n;
      // Every loser deferred a cycle counts once per cycle lost.
      core_conflicts_ += bank.waiting.size();

      uint32_t rdata = 0;
      switch (req.op) {
        case MemOp::Read: rdata = l1_.read_word(req.addr); break;
        case MemOp::Write: l1_.write_word(req.addr, req.wdata); break;
        case MemOp::AmoAdd: rdata = l1_.amo_add(req.addr, req.wdata); break;
      }
      const uint32_t lat = access_latency(cfg_, req.core_id, req.addr);
      MemResponse resp{req.req_id, req.core_id, rdata, req.issue_cycle + lat};
      // Contention shows up as service delay; delivery is service + latency
      // when the bank was busy at arrival.
      resp.deliver_cycle = std::max<uint64_t>(resp.deliver_cycle, cycle + lat);
      resp_heap_.push(PendingResp{resp});
    } else if (!bank.dma_ops.empty()) {
      DmaBankOp op = bank.dma_ops.front();
      bank.dma_ops.pop_front();
      --dma_pending_;
      uint32_t rdata = 0;
      if (op.write) {
        if (op.wmask == 0xffffffffu) {
          l1_.write_word(op.addr, op.wdata);
        } else {
          const uint32_t old = l1_.read_word(op.addr);
          l1_.write_word(op.addr, (old & ~op.wmask) | (op.wdata & op.wmask));
        }
      } else {
        rdata = l1_.read_word(op.addr);
      }
      if (dma_client_) dma_client_->dma_word_done(op.token, op.addr, rdata);
    }
    if (!bank.waiting.empty() || !bank.dma_ops.empty())
      still_active.push_back(b);
    else
      bank_active_flag_[b] = 0;
  }
  active_banks_ = std::move(still_active);
}

}  // namespace terasim
