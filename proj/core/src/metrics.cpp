#include "terasim/metrics.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>

namespace terasim {

using json = nlohmann::ordered_json;

const char* stall_cause_name(StallCause c) {
  switch (c) {
    case StallCause::RawWait: return "raw-wait";
    case StallCause::LsuFull: return "lsu-full";
    case StallCause::BarrierWait: return "barrier-wait";
    case StallCause::DmaWait: return "dma-wait";
  }
  return "?";
}

void KernelMetrics::accumulate(const KernelMetrics& o) {
  cycles += o.cycles;
  retired += o.retired;
  for (int i = 0; i < kNumStallCauses; ++i) stalls[i] += o.stalls[i];
  active_cycles += o.active_cycles;
  ops += o.ops;
  exposed_transfer_cycles += o.exposed_transfer_cycles;
}

KernelMetrics& MetricsReport::kernel(const std::string& name) {
  for (auto& k : kernels)
    if (k.name == name) return k;
  kernels.push_back(KernelMetrics{});
  kernels.back().name = name;
  return kernels.back();
}

const KernelMetrics* MetricsReport::find(const std::string& name) const {
  for (auto& k : kernels)
    if (k.name == name) return &k;
  return nullptr;
}

KernelMetrics MetricsReport::totals() const {
  KernelMetrics t;
  t.name = "chain";
  for (const auto& k : kernels) t.accumulate(k);
  return t;
}

double ipc(const MetricsReport& r, const std::string& kernel) {
  const KernelMetrics* k = r.find(kernel);
  if (!k) throw std::invalid_argument("unknown kernel '" + kernel + "'");
  return k->ipc();
}

double transfer_overhead(const MetricsReport& r, const std::string& kernel) {
  const KernelMetrics* k = r.find(kernel);
  if (!k) throw std::invalid_argument("unknown kernel '" + kernel + "'");
  return k->overhead();
}

double metric_value(const MetricsReport& r, const std::string& path) {
  const size_t dot = path.rfind('.');
  if (dot == std::string::npos)
    throw std::invalid_argument("metric path must be <kernel>.<field>: " + path);
  const std::string kname = path.substr(0, dot);
  const std::string field = path.substr(dot + 1);
  KernelMetrics chain = r.totals();
  const KernelMetrics* k = (kname == "chain") ? &chain : r.find(kname);
  if (!k) throw std::invalid_argument("unknown kernel '" + kname + "'");
  if (field == "ipc") return k->ipc();
  if (field == "overhead") return k->overhead();
  if (field == "ops_per_cycle") return k->ops_per_cycle();
  if (field == "cycles") return double(k->cycles);
  if (field == "retired") return double(k->retired);
  if (field == "ops") return double(k->ops);
  if (field == "exposed_transfer_cycles") return double(k->exposed_transfer_cycles);
  if (field == "stalls") return double(k->stall_total());
  throw std::invalid_argument("unknown metric field '" + field + "'");
}

namespace {

json kernel_to_json(const KernelMetrics& k) {
  json j;
  j["name"] = k.name;
  j["cycles"] = k.cycles;
  j["retired"] = k.retired;
  json st;
  for (int i = 0; i < kNumStallCauses; ++i)
    st[stall_cause_name(StallCause(i))] = k.stalls[i];
  j["stalls"] = st;
  j["active_cycles"] = k.active_cycles;
  j["ops"] = k.ops;
  j["exposed_transfer_cycles"] = k.exposed_transfer_cycles;
  j["ipc"] = k.ipc();
  j["ops_per_cycle"] = k.ops_per_cycle();
  j["overhead"] = k.overhead();
  return j;
}

}  // namespace

std::string emit_json(const MetricsReport& r) {
  json j;
  j["schema"] = "terasim-metrics-v1";
  j["seed"] = r.seed;
  j["config"] = r.config_echo.empty() ? json::object() : json::parse(r.config_echo);
  json ks = json::array();
  for (const auto& k : r.kernels) ks.push_back(kernel_to_json(k));
  j["kernels"] = ks;
  return j.dump(2) + "\n";
}

std::string emit_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "kernel,cycles,retired,raw_wait,lsu_full,barrier_wait,dma_wait,"
        "active_cycles,ops,exposed_transfer_cycles,ipc,ops_per_cycle,overhead\n";
  for (const auto& k : r.kernels) {
    os << k.name << "," << k.cycles << "," << k.retired;
    for (int i = 0; i < kNumStallCauses; ++i) os << "," << k.stalls[i];
    os << "," << k.active_cycles << "," << k.ops << "," << k.exposed_transfer_cycles
       << "," << k.ipc() << "," << k.ops_per_cycle() << "," << k.overhead() << "\n";
  }
  return os.str();
}

MetricsReport parse_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("schema", "") != "terasim-metrics-v1")
    throw std::invalid_argument("metrics: unknown schema");
  MetricsReport r;
  r.seed = j["seed"].get<uint64_t>();
  if (j.contains("config") && !j["config"].empty()) r.config_echo = j["config"].dump();
  for (const auto& kj : j["kernels"]) {
    KernelMetrics k;
    k.name = kj["name"].get<std::string>();
    k.cycles = kj["cycles"].get<uint64_t>();
    k.retired = kj["retired"].get<uint64_t>();
    for (int i = 0; i < kNumStallCauses; ++i)
      k.stalls[i] = kj["stalls"][stall_cause_name(StallCause(i))].get<uint64_t>();
    k.active_cycles = kj["active_cycles"].get<uint64_t>();
    k.ops = kj["ops"].get<uint64_t>();
    k.exposed_transfer_cycles = kj["exposed_transfer_cycles"].get<uint64_t>();
    r.kernels.push_back(k);
  }
  return r;
}

std::string config_to_json(const ClusterConfig& c) {
  json j;
  j["cores_per_tile"] = c.cores_per_tile;
  j["tiles_per_subgroup"] = c.tiles_per_subgroup;
  j["subgroups_per_group"] = c.subgroups_per_group;
  j["groups"] = c.groups;
  j["banks_per_tile"] = c.banks_per_tile;
  j["bank_words"] = c.bank_words;
  j["latency_tile"] = c.latency_tile;
  j["latency_subgroup"] = c.latency_subgroup;
  j["latency_group"] = c.latency_group;
  j["latency_remote"] = c.latency_remote;
  j["frequency_hz"] = c.frequency_hz;
  json h;
  h["channels"] = c.hbm.channels;
  h["peak_bytes_per_cycle"] = c.hbm.peak_bytes_per_cycle;
  h["avg_latency"] = c.hbm.avg_latency;
  h["latency_jitter"] = c.hbm.latency_jitter;
  h["burst_bytes"] = c.hbm.burst_bytes;
  h["capacity"] = c.hbm.capacity;
  h["scramble"] = c.hbm.scramble;
  j["hbm"] = h;
  j["scoreboard_depth"] = c.scoreboard_depth;
  j["dma_backends"] = c.dma_backends;
  j["dma_outstanding"] = c.dma_outstanding;
  j["deadlock_window"] = c.deadlock_window;
  return j.dump();
}

}  // namespace terasim
