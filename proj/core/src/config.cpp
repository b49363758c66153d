#include "terasim/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace terasim {

using json = nlohmann::json;

namespace {

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config validation: " + msg);
}

int line_of_offset(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

template <typename T>
void get_key(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& ctx) {
  for (auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) { ok = true; break; }
    if (!ok) throw ConfigError("unknown config key '" + ctx + key + "'");
  }
}

HbmConfig parse_hbm(const json& j) {
  HbmConfig h;
  reject_unknown(j, {"channels", "peak_bytes_per_cycle", "avg_latency",
                     "latency_jitter", "burst_bytes", "capacity", "scramble"},
                 "hbm.");
  get_key(j, "channels", h.channels);
  get_key(j, "peak_bytes_per_cycle", h.peak_bytes_per_cycle);
  get_key(j, "avg_latency", h.avg_latency);
  if (!j.contains("latency_jitter")) h.latency_jitter = 0;  // default when omitted
  get_key(j, "latency_jitter", h.latency_jitter);
  get_key(j, "burst_bytes", h.burst_bytes);
  get_key(j, "capacity", h.capacity);
  get_key(j, "scramble", h.scramble);
  return h;
}

WorkloadConfig parse_workload(const json& j) {
  WorkloadConfig w;
  reject_unknown(j, {"n_antennas", "n_subcarriers", "n_beams", "n_tx",
                     "fft_size", "n_symbols", "noise_variance"},
                 "workload.");
  get_key(j, "n_antennas", w.n_antennas);
  get_key(j, "n_subcarriers", w.n_subcarriers);
  get_key(j, "n_beams", w.n_beams);
  get_key(j, "n_tx", w.n_tx);
  get_key(j, "fft_size", w.fft_size);
  get_key(j, "n_symbols", w.n_symbols);
  get_key(j, "noise_variance", w.noise_variance);
  return w;
}

const char* kPresetDesk256 = R"json({
  "cores_per_tile": 8, "tiles_per_subgroup": 8,
  "subgroups_per_group": 2, "groups": 2,
  "banks_per_tile": 32, "bank_words": 256,
  "latency_tile": 1, "latency_subgroup": 3, "latency_group": 5, "latency_remote": 9,
  "workload": {
    "n_antennas": 16, "n_subcarriers": 408, "n_beams": 8, "n_tx": 2,
    "fft_size": 1024, "n_symbols": 4, "noise_variance": 0.015625
  }
})json";

std::string terapool_preset(uint32_t remote) {
  std::ostringstream os;
  os << R"({
  "cores_per_tile": 8, "tiles_per_subgroup": 8,
  "subgroups_per_group": 4, "groups": 4,
  "banks_per_tile": 32, "bank_words": 256,
  "latency_tile": 1, "latency_subgroup": 3, "latency_group": 5,
  "latency_remote": )"
     << remote << "\n}";
  return os.str();
}

}  // namespace

void validate(const ClusterConfig& cfg) {
  for (auto [v, n] : {std::pair<uint32_t, const char*>{cfg.cores_per_tile, "cores_per_tile"},
                      {cfg.tiles_per_subgroup, "tiles_per_subgroup"},
                      {cfg.subgroups_per_group, "subgroups_per_group"},
                      {cfg.groups, "groups"},
                      {cfg.banks_per_tile, "banks_per_tile"},
                      {cfg.bank_words, "bank_words"}}) {
    require(v >= 1, std::string(n) + " must be >= 1");
    require(is_pow2(v), std::string(n) + " is not a power of two");
  }
  require(cfg.latency_tile < cfg.latency_subgroup &&
              cfg.latency_subgroup < cfg.latency_group &&
              cfg.latency_group < cfg.latency_remote,
          "latencies must be strictly increasing with hierarchy distance");
  require(cfg.scoreboard_depth >= 1, "scoreboard_depth must be >= 1");
  require(cfg.dma_outstanding >= 1, "dma_outstanding must be >= 1");

  const HbmConfig& h = cfg.hbm;
  require(h.channels >= 1 && is_pow2(h.channels), "hbm.channels is not a power of two");
  require(h.peak_bytes_per_cycle % h.channels == 0,
          "hbm.peak_bytes_per_cycle not divisible by channels");
  require(is_pow2(h.burst_bytes), "hbm.burst_bytes is not a power of two");
  require(is_pow2(h.capacity), "hbm.capacity is not a power of two");
  require(h.capacity >= uint64_t(h.burst_bytes) * h.channels * h.channels,
          "hbm.capacity smaller than one channel-interleave period");
}

void validate(const WorkloadConfig& w) {
  require(is_pow2(w.fft_size), "fft_size is not a power of two");
  require(w.fft_size >= w.n_subcarriers, "fft_size smaller than n_subcarriers");
  require(w.n_tx <= w.n_beams, "n_tx exceeds n_beams");
  require(w.n_beams <= w.n_antennas, "n_beams exceeds n_antennas");
  require(w.noise_variance >= 0.0, "noise_variance must be >= 0");
}

Preset parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at line " +
                      std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  Preset p;
  ClusterConfig& c = p.cluster;
  reject_unknown(j,
                 {"cores_per_tile", "tiles_per_subgroup", "subgroups_per_group",
                  "groups", "banks_per_tile", "bank_words", "latency_tile",
                  "latency_subgroup", "latency_group", "latency_remote",
                  "frequency_hz", "hbm", "scoreboard_depth", "dma_backends",
                  "dma_outstanding", "deadlock_window", "workload"},
                 "");
  get_key(j, "cores_per_tile", c.cores_per_tile);
  get_key(j, "tiles_per_subgroup", c.tiles_per_subgroup);
  get_key(j, "subgroups_per_group", c.subgroups_per_group);
  get_key(j, "groups", c.groups);
  get_key(j, "banks_per_tile", c.banks_per_tile);
  get_key(j, "bank_words", c.bank_words);
  get_key(j, "latency_tile", c.latency_tile);
  get_key(j, "latency_subgroup", c.latency_subgroup);
  get_key(j, "latency_group", c.latency_group);
  get_key(j, "latency_remote", c.latency_remote);
  get_key(j, "frequency_hz", c.frequency_hz);
  get_key(j, "scoreboard_depth", c.scoreboard_depth);
  get_key(j, "dma_backends", c.dma_backends);
  get_key(j, "dma_outstanding", c.dma_outstanding);
  get_key(j, "deadlock_window", c.deadlock_window);
  if (j.contains("hbm")) c.hbm = parse_hbm(j["hbm"]);
  if (j.contains("workload")) p.workload = parse_workload(j["workload"]);
  validate(c);
  validate(p.workload);
  return p;
}

Preset preset(const std::string& name) {
  if (name == "desk-256") return parse_config(kPresetDesk256);
  if (name == "terapool-1-3-5-7") return parse_config(terapool_preset(7));
  if (name == "terapool-1-3-5-9") return parse_config(terapool_preset(9));
  if (name == "terapool-1-3-5-11") return parse_config(terapool_preset(11));
  if (const char* dir = std::getenv("TERASIM_PRESET_DIR")) {
    std::ifstream in(std::string(dir) + "/" + name + ".json");
    if (in) {
      std::stringstream ss;
      ss << in.rdbuf();
      return parse_config(ss.str());
    }
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"terapool-1-3-5-7", "terapool-1-3-5-9", "terapool-1-3-5-11", "desk-256"};
}

BankLocation locate(const ClusterConfig& cfg, uint64_t addr) {
  if (addr % 4 != 0)
    throw std::out_of_range("locate: address not word-aligned");
  if (addr >= cfg.l1_bytes())
    throw std::out_of_range("locate: address beyond L1 capacity");
  const uint64_t word = addr / 4;
  const uint32_t bank = uint32_t(word % cfg.total_banks());
  return BankLocation{bank / cfg.banks_per_tile, bank % cfg.banks_per_tile,
                      uint32_t(word / cfg.total_banks())};
}

uint64_t locate_inverse(const ClusterConfig& cfg, const BankLocation& loc) {
  const uint64_t bank = uint64_t(loc.tile_index) * cfg.banks_per_tile + loc.bank_in_tile;
  return (uint64_t(loc.word_offset) * cfg.total_banks() + bank) * 4;
}

uint32_t access_latency(const ClusterConfig& cfg, uint32_t core_id, uint64_t addr) {
  if (core_id >= cfg.total_cores())
    throw std::out_of_range("access_latency: bad core id");
  const BankLocation loc = locate(cfg, addr);
  const uint32_t core_tile = cfg.tile_of_core(core_id);
  if (loc.tile_index == core_tile) return cfg.latency_tile;
  const uint32_t bank_sg = loc.tile_index / cfg.tiles_per_subgroup;
  if (bank_sg == cfg.subgroup_of_core(core_id)) return cfg.latency_subgroup;
  if (bank_sg / cfg.subgroups_per_group == cfg.group_of_core(core_id))
    return cfg.latency_group;
  return cfg.latency_remote;
}

}  // namespace terasim
