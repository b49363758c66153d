#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace terasim {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Main-memory model parameters. Bandwidth is expressed in bytes per cluster
// cycle; channels share the aggregate peak evenly.
struct HbmConfig {
  uint32_t channels = 16;
  uint32_t peak_bytes_per_cycle = 1024;
  uint32_t avg_latency = 130;
  uint32_t latency_jitter = 20;  // uniform half-width, cycles
  uint32_t burst_bytes = 256;
  uint64_t capacity = 2ull * 16ull * (1ull << 30);  // two 16 GiB stacks
  bool scramble = true;

  uint32_t per_channel_rate() const { return peak_bytes_per_cycle / channels; }
};

struct ClusterConfig {
  // Hierarchy: groups > subgroups > tiles > cores.
  uint32_t cores_per_tile = 8;
  uint32_t tiles_per_subgroup = 8;
  uint32_t subgroups_per_group = 4;
  uint32_t groups = 4;

  uint32_t banks_per_tile = 32;
  uint32_t bank_words = 256;  // 32-bit words per bank

  // Zero-contention round-trip load-to-use latency per hierarchy level.
  uint32_t latency_tile = 1;
  uint32_t latency_subgroup = 3;
  uint32_t latency_group = 5;
  uint32_t latency_remote = 9;

  // Reporting only; at 888.67 MHz the default HBM peak of 1024 B/cycle
  // corresponds to 910 GB/s.
  double frequency_hz = 888.67e6;

  HbmConfig hbm;

  // Execution-model knobs.
  uint32_t scoreboard_depth = 8;    // outstanding loads per core
  uint32_t dma_backends = 0;        // 0 = one per group
  uint32_t dma_outstanding = 16;    // in-service burst limit per backend
  uint64_t deadlock_window = 1000000;

  uint32_t tiles_per_group() const { return tiles_per_subgroup * subgroups_per_group; }
  uint32_t total_tiles() const { return tiles_per_group() * groups; }
  uint32_t total_cores() const { return total_tiles() * cores_per_tile; }
  uint32_t total_banks() const { return total_tiles() * banks_per_tile; }
  uint64_t l1_bytes() const { return uint64_t(total_banks()) * bank_words * 4; }
  // Contiguous byte span of one tile inside the word-interleaved map.
  uint32_t tile_stripe_bytes() const { return banks_per_tile * 4; }

  uint32_t tile_of_core(uint32_t core) const { return core / cores_per_tile; }
  uint32_t subgroup_of_core(uint32_t core) const {
    return tile_of_core(core) / tiles_per_subgroup;
  }
  uint32_t group_of_core(uint32_t core) const {
    return subgroup_of_core(core) / subgroups_per_group;
  }
  uint32_t backend_count() const { return dma_backends ? dma_backends : groups; }
};

struct BankLocation {
  uint32_t tile_index;
  uint32_t bank_in_tile;
  uint32_t word_offset;
};

// Workload shape for the PUSCH kernel chain.
struct WorkloadConfig {
  uint32_t n_antennas = 64;
  uint32_t n_subcarriers = 3276;
  uint32_t n_beams = 32;
  uint32_t n_tx = 4;
  uint32_t fft_size = 4096;
  uint32_t n_symbols = 4;  // data symbols; one DMRS symbol precedes them
  double noise_variance = 1.0 / 64.0;
};

struct Preset {
  ClusterConfig cluster;
  WorkloadConfig workload;
};

// Throws ConfigError naming the violated invariant.
void validate(const ClusterConfig& cfg);
void validate(const WorkloadConfig& w);

// Parses a JSON config document. Unknown keys are rejected; parse errors
// carry the offending line.
Preset parse_config(const std::string& text);

// Built-in presets: "terapool-1-3-5-7", "terapool-1-3-5-9",
// "terapool-1-3-5-11", "desk-256". Falls back to $TERASIM_PRESET_DIR/<name>.json.
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

// Word-interleaved L1 address map: consecutive words hit consecutive banks
// across the whole cluster. Bijective over L1 capacity.
BankLocation locate(const ClusterConfig& cfg, uint64_t addr);
uint64_t locate_inverse(const ClusterConfig& cfg, const BankLocation& loc);

// Zero-contention round-trip latency from a core to the bank holding addr.
uint32_t access_latency(const ClusterConfig& cfg, uint32_t core_id, uint64_t addr);

}  // namespace terasim
