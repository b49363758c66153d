#pragma once

#include <terasim/config.hpp>
#include <terasim/kernels/common.hpp>
#include <terasim/sim.hpp>

#include <random>
#include <vector>

namespace test_util {

using terasim::kernels::cpx;

inline std::vector<cpx> random_cpx(size_t n, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<cpx> v(n);
  for (auto& x : v) x = {u(rng), u(rng)};
  return v;
}

// y = H x + noise with |x| bounded, so the MMSE solution stays inside Q1.15.
struct MmseStimulus {
  std::vector<cpx> h;  // beams x tx per subcarrier
  std::vector<cpx> y;  // beams per subcarrier
  std::vector<cpx> x_true;
};

inline MmseStimulus mmse_stimulus(uint32_t beams, uint32_t tx, uint32_t sc_count,
                                  std::mt19937_64& rng) {
  MmseStimulus s;
  s.h = random_cpx(size_t(beams) * tx * sc_count, 0.3, rng);
  s.x_true = random_cpx(size_t(tx) * sc_count, 0.25, rng);
  auto noise = random_cpx(size_t(beams) * sc_count, 0.02, rng);
  s.y.resize(size_t(beams) * sc_count);
  for (uint32_t b = 0; b < beams; ++b)
    for (uint32_t sc = 0; sc < sc_count; ++sc) {
      cpx acc = noise[size_t(b) * sc_count + sc];
      for (uint32_t t = 0; t < tx; ++t)
        acc += s.h[(size_t(b) * tx + t) * sc_count + sc] *
               s.x_true[size_t(t) * sc_count + sc];
      s.y[size_t(b) * sc_count + sc] = acc;
    }
  return s;
}

// A tiny 8-core, 32-bank, single-tile cluster for hand-traceable tests.
inline terasim::ClusterConfig tiny_config() {
  terasim::ClusterConfig cfg;
  cfg.cores_per_tile = 8;
  cfg.tiles_per_subgroup = 1;
  cfg.subgroups_per_group = 1;
  cfg.groups = 1;
  cfg.banks_per_tile = 32;
  cfg.bank_words = 256;
  return cfg;
}

// Two tiles per subgroup, two subgroups, two groups: all four latency
// classes reachable.
inline terasim::ClusterConfig small_hierarchy() {
  terasim::ClusterConfig cfg;
  cfg.cores_per_tile = 2;
  cfg.tiles_per_subgroup = 2;
  cfg.subgroups_per_group = 2;
  cfg.groups = 2;
  cfg.banks_per_tile = 4;
  cfg.bank_words = 64;
  return cfg;
}

}  // namespace test_util
