#include "terasim/sim.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace terasim {

uint32_t ceil_log2(uint64_t v) {
  uint32_t b = 0;
  while ((uint64_t(1) << b) < v) ++b;
  return b;
}

Simulator::Simulator(const ClusterConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      l1_(cfg_),
      mem_(cfg_.hbm.capacity),
      map_(cfg_.hbm),
      hbm_(cfg_.hbm, seed),
      icn_(cfg_, l1_),
      dma_(cfg_, map_, hbm_, mem_, icn_) {
  validate(cfg_);
  cores_.resize(cfg_.total_cores());
  report_.seed = seed;
  report_.config_echo = config_to_json(cfg_);
}

bool Simulator::step_core(uint32_t core_id) {
  CoreState& c = cores_[core_id];
  const Instr& in = c.prog->code[c.pc];

  const auto stall = [&](StallCause cause) {
    ++c.stalls[int(cause)];
    return false;
  };

  if (cycle_ < c.resume_at) return stall(StallCause::BarrierWait);

  // Source operand readiness (RAW hazard against pending loads / multi-cycle
  // compute results).
  const auto srcs_ready = [&]() {
    for (int i = 0; i < in.nsrc; ++i)
      if (c.ready_cycle[in.src[i]] > cycle_) return false;
    return true;
  };

  switch (in.kind) {
    case InstrKind::Load:
    case InstrKind::AmoAdd: {
      if (!srcs_ready()) return stall(StallCause::RawWait);
      // WAW: the destination must not have a pending producer.
      if (c.ready_cycle[in.dst] > cycle_) return stall(StallCause::RawWait);
      if (c.pending_loads >= cfg_.scoreboard_depth) return stall(StallCause::LsuFull);
      MemRequest req;
      req.req_id = next_req_id_++;
      req.core_id = core_id;
      req.op = in.kind == InstrKind::Load ? MemOp::Read : MemOp::AmoAdd;
      req.addr = in.addr;
      req.wdata = in.kind == InstrKind::AmoAdd ? c.regs[in.src[0]] : 0;
      icn_.submit(cycle_, req);
      load_dest_[req.req_id] = {core_id, in.dst};
      c.ready_cycle[in.dst] = UINT64_MAX;  // pending until response
      ++c.pending_loads;
      break;
    }
    case InstrKind::Store: {
      if (!srcs_ready()) return stall(StallCause::RawWait);
      MemRequest req;
      req.req_id = next_req_id_++;
      req.core_id = core_id;
      req.op = MemOp::Write;
      req.addr = in.addr;
      req.wdata = c.regs[in.src[0]];
      icn_.submit(cycle_, req);
      break;
    }
    case InstrKind::Compute: {
      if (!srcs_ready() || c.ready_cycle[in.dst] > cycle_ + in.latency)
        return stall(StallCause::RawWait);
      c.regs[in.dst] = alu_eval(in, c.regs);
      c.ready_cycle[in.dst] = cycle_ + in.latency;
      break;
    }
    case InstrKind::Barrier: {
      if (open_barrier_ >= 0 && open_barrier_ != in.imm)
        throw SimError("barrier id mismatch: core " + std::to_string(core_id) +
                       " joined " + std::to_string(in.imm) + " while " +
                       std::to_string(open_barrier_) + " is open");
      open_barrier_ = in.imm;
      ++barrier_.arrived;
      barrier_.waiting.push_back(core_id);
      c.resume_at = UINT64_MAX;
      if (barrier_.arrived == active_core_count_) {
        const uint64_t release = cycle_ + ceil_log2(active_core_count_);
        for (uint32_t w : barrier_.waiting)
          cores_[w].resume_at = std::max(release, cycle_ + 1);
        barrier_ = BarrierState{};
        open_barrier_ = -1;
      }
      break;
    }
    case InstrKind::DmaStart: {
      if (dma_.busy()) return stall(StallCause::DmaWait);
      const auto& descs = *descriptors_;
      if (in.imm < 0 || size_t(in.imm) >= descs.size())
        throw SimError("DMA_START: descriptor index out of range");
      if (!dma_.start_descriptor(descs[size_t(in.imm)], cycle_))
        throw SimError("DMA_START: frontend rejected descriptor " +
                       std::to_string(in.imm));
      break;
    }
    case InstrKind::DmaWait: {
      if (dma_.busy()) return stall(StallCause::DmaWait);
      break;
    }
    case InstrKind::Halt: {
      c.halted = true;
      c.halt_cycle = cycle_;
      break;
    }
  }
  ++c.retired;
  ++c.pc;
  return true;
}

KernelMetrics Simulator::run(const RunInput& input, const std::string& label) {
  if (input.programs.size() > cores_.size())
    throw SimError("run: more programs than cores");
  descriptors_ = &input.descriptors;

  const uint64_t start_cycle = cycle_;
  active_core_count_ = 0;
  uint32_t running = 0;
  for (uint32_t i = 0; i < cores_.size(); ++i) {
    CoreState& c = cores_[i];
    c.pc = 0;
    c.retired = 0;
    for (auto& s : c.stalls) s = 0;
    c.resume_at = 0;
    c.waiting_barrier = -1;
    c.prog = i < input.programs.size() ? &input.programs[i] : nullptr;
    c.halted = (c.prog == nullptr || c.prog->empty());
    c.halt_cycle = start_cycle;
    if (!c.halted) {
      ++active_core_count_;
      ++running;
    }
  }
  open_barrier_ = -1;
  barrier_ = BarrierState{};

  KernelMetrics m;
  m.name = label;

  uint64_t last_progress = cycle_;
  while (running > 0) {
    bool progress = false;

    // 1. land memory responses due this cycle so their data is usable now
    for (const MemResponse& r : icn_.deliver(cycle_)) {
      auto it = load_dest_.find(r.req_id);
      if (it == load_dest_.end()) continue;  // store ack
      auto [core_id, reg] = it->second;
      CoreState& c = cores_[core_id];
      c.regs[reg] = r.rdata;
      c.ready_cycle[reg] = r.deliver_cycle;
      --c.pending_loads;
      load_dest_.erase(it);
      progress = true;
    }

    // 2. cores issue in index order
    const bool dma_busy_now = dma_.busy();
    uint32_t issued = 0;
    for (uint32_t i = 0; i < cores_.size(); ++i) {
      CoreState& c = cores_[i];
      if (c.halted || c.prog == nullptr) continue;
      if (step_core(i)) {
        ++issued;
        if (c.halted) --running;
      }
    }
    if (issued) progress = true;

    // 3. DMA engine then the interconnect service this cycle's traffic
    dma_.tick(cycle_);
    icn_.tick(cycle_);

    if (dma_busy_now && issued == 0) ++m.exposed_transfer_cycles;

    if (progress || dma_.busy()) last_progress = cycle_;
    if (cycle_ - last_progress > cfg_.deadlock_window) {
      std::ostringstream os;
      os << "deadlock: no progress for " << cfg_.deadlock_window
         << " cycles at cycle " << cycle_ << "; stalled cores:";
      for (uint32_t i = 0; i < cores_.size(); ++i)
        if (!cores_[i].halted && cores_[i].prog)
          os << " core" << i << "@pc" << cores_[i].pc;
      throw SimError(os.str());
    }
    ++cycle_;
  }

  for (uint32_t i = 0; i < cores_.size(); ++i) {
    const CoreState& c = cores_[i];
    if (c.prog == nullptr || c.prog->empty()) continue;
    m.retired += c.retired;
    for (int s = 0; s < kNumStallCauses; ++s) m.stalls[s] += c.stalls[s];
    m.active_cycles += c.halt_cycle - start_cycle + 1;
    for (const Instr& in : c.prog->code)
      if (in.kind == InstrKind::Compute) m.ops += in.op_count;
  }
  m.cycles = cycle_ - start_cycle;
  if (active_core_count_ == 0) m.cycles = 0;
  report_.kernel(label).accumulate(m);
  return m;
}

void Simulator::drain() {
  while (!icn_.idle() || dma_.busy()) {
    for (const MemResponse& r : icn_.deliver(cycle_)) {
      auto it = load_dest_.find(r.req_id);
      if (it == load_dest_.end()) continue;
      auto [core_id, reg] = it->second;
      cores_[core_id].regs[reg] = r.rdata;
      cores_[core_id].ready_cycle[reg] = r.deliver_cycle;
      --cores_[core_id].pending_loads;
      load_dest_.erase(it);
    }
    dma_.tick(cycle_);
    icn_.tick(cycle_);
    ++cycle_;
  }
}

}  // namespace terasim
