#include <doctest.h>

#include <terasim/config.hpp>
#include <terasim/hbm.hpp>
#include <terasim/io.hpp>
#include <terasim/l1.hpp>
#include <terasim/scramble.hpp>

#include <cstdio>
#include <map>
#include <random>

using namespace terasim;

TEST_CASE("L1 reads of never-written words return 0") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  L1Store l1(cfg);
  CHECK(l1.read_word(0) == 0);
  CHECK(l1.read_word(cfg.l1_bytes() - 4) == 0);
  l1.write_word(128, 7);
  CHECK(l1.read_word(128) == 7);
  CHECK_THROWS_AS(l1.read_word(cfg.l1_bytes()), std::out_of_range);
  CHECK_THROWS_AS(l1.read_word(2), std::out_of_range);
}

TEST_CASE("scramble: identity on burst offsets, channel 0 at address 0") {
  HbmConfig hbm;
  const ScrambleMap map(hbm);
  CHECK(map.channel_of(0) == 0);
  for (uint64_t off = 0; off < hbm.burst_bytes; ++off)
    CHECK(map.apply(off) == off);  // low bits preserved
}

TEST_CASE("scramble: consecutive bursts rotate across all channels") {
  HbmConfig hbm;
  const ScrambleMap map(hbm);
  const uint64_t period = map.interleave_period();
  // Exhaustive over one interleave period: each channel serves an equal
  // share, each aligned burst maps into exactly one channel.
  std::map<uint32_t, uint64_t> count;
  for (uint64_t a = 0; a < period; a += hbm.burst_bytes) {
    const uint32_t ch = map.channel_of(a);
    CHECK(map.channel_of(a + hbm.burst_bytes - 1) == ch);
    ++count[ch];
  }
  REQUIRE(count.size() == hbm.channels);
  for (const auto& [ch, n] : count) CHECK(n == period / hbm.burst_bytes / hbm.channels);
  // Consecutive bursts hit distinct channels.
  for (uint64_t a = 0; a + hbm.burst_bytes < period; a += hbm.burst_bytes)
    CHECK(map.channel_of(a) != map.channel_of(a + hbm.burst_bytes));
}

TEST_CASE("scramble is invertible on random addresses") {
  HbmConfig hbm;
  const ScrambleMap map(hbm);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<uint64_t> dist(0, hbm.capacity - 1);
  for (int i = 0; i < 1000000; ++i) {
    const uint64_t a = dist(rng);
    REQUIRE(map.inverse(map.apply(a)) == a);
  }
  CHECK_THROWS_AS(map.apply(hbm.capacity), std::out_of_range);
}

TEST_CASE("scramble bijectivity over one interleave period (exhaustive)") {
  HbmConfig hbm;
  const ScrambleMap map(hbm);
  const uint64_t period = map.interleave_period();
  std::vector<bool> hit(period, false);
  for (uint64_t a = 0; a < period; ++a) {
    const uint64_t p = map.apply(a);
    REQUIRE(p < period);  // permutation is closed over the period
    REQUIRE(!hit[p]);
    hit[p] = true;
  }
}

TEST_CASE("hbm: single burst timing with zero jitter") {
  HbmConfig hbm;
  hbm.latency_jitter = 0;
  HbmModel model(hbm, 1);
  const auto rec = model.submit(10, 0, 256, false);
  CHECK(rec.service_end == 10 + 256 / hbm.per_channel_rate());
  CHECK(rec.completion == rec.service_end + hbm.avg_latency);
}

TEST_CASE("hbm: back-to-back bursts pipeline on one channel") {
  HbmConfig hbm;
  hbm.latency_jitter = 0;
  HbmModel model(hbm, 1);
  const uint32_t service = 256 / hbm.per_channel_rate();
  const auto r1 = model.submit(0, 3, 256, false);
  const auto r2 = model.submit(0, 3, 256, false);
  CHECK(r1.completion == service + hbm.avg_latency);
  CHECK(r2.completion == r1.completion + service);  // latency paid once each, pipelined
}

TEST_CASE("hbm: zero-byte burst completes after the latency alone") {
  HbmConfig hbm;
  hbm.latency_jitter = 0;
  HbmModel model(hbm, 1);
  const auto rec = model.submit(7, 0, 0, false);
  CHECK(rec.completion == 7 + hbm.avg_latency);
}

TEST_CASE("hbm: jitter is bounded and deterministic per seed") {
  HbmConfig hbm;
  HbmModel a(hbm, 5), b(hbm, 5), c(hbm, 6);
  bool differs = false;
  for (int i = 0; i < 64; ++i) {
    const auto ra = a.submit(0, 0, 256, false);
    const auto rb = b.submit(0, 0, 256, false);
    const auto rc = c.submit(0, 0, 256, false);
    CHECK(ra.completion == rb.completion);
    differs = differs || ra.completion != rc.completion;
    const int64_t jit = int64_t(ra.completion) - int64_t(ra.service_end) -
                        int64_t(hbm.avg_latency);
    CHECK(jit >= -int64_t(hbm.latency_jitter));
    CHECK(jit <= int64_t(hbm.latency_jitter));
  }
  CHECK(differs);  // different seed, different jitter sequence
}

TEST_CASE("hbm: per-channel bandwidth conservation") {
  HbmConfig hbm;
  hbm.latency_jitter = 0;
  HbmModel model(hbm, 1);
  std::mt19937_64 rng(3);
  // Random submissions; then check that no channel's service intervals
  // overlap and each carries at most the per-channel rate.
  for (int i = 0; i < 500; ++i)
    model.submit(rng() % 64, rng() % hbm.channels, 64 + rng() % 192, rng() & 1);
  std::map<uint32_t, uint64_t> busy_until;
  for (const auto& r : model.trace()) {
    CHECK(r.service_start >= busy_until[r.channel]);
    CHECK(r.service_end - r.service_start >=
          (r.bytes + hbm.per_channel_rate() - 1) / hbm.per_channel_rate());
    busy_until[r.channel] = r.service_end;
  }
}

TEST_CASE("sustained bandwidth: single burst equals bytes/service") {
  HbmConfig hbm;
  hbm.latency_jitter = 0;
  HbmModel model(hbm, 1);
  model.submit(0, 0, 256, false);
  const double bw = hbm_sustained_bandwidth(model.trace(), hbm.avg_latency);
  CHECK(bw == doctest::Approx(256.0 / (256 / hbm.per_channel_rate())));
  CHECK_THROWS_AS(hbm_sustained_bandwidth({}, hbm.avg_latency), std::invalid_argument);
}

TEST_CASE("tensor files round-trip") {
  Tensor t = tensor_from_cq15({0x12345678u, 0x9abcdef0u}, {2});
  const std::string path = "/tmp/terasim_test_tensor.bin";
  write_tensor(path, t);
  const Tensor back = read_tensor(path);
  CHECK(back.format == t.format);
  CHECK(back.dims == t.dims);
  CHECK(back.data == t.data);
  CHECK(back.elements() == 2);
  std::remove(path.c_str());
}

TEST_CASE("memory images round-trip and hexdump shows contents") {
  HbmConfig hbm;
  MainMemory mem(hbm.capacity);
  std::vector<uint8_t> img(256);
  for (size_t i = 0; i < img.size(); ++i) img[i] = uint8_t(i * 7);
  mem.write_bytes(4096, img.data(), img.size());
  const std::string path = "/tmp/terasim_test_image.bin";
  store_memory_image(mem, path, 4096, img.size());

  MainMemory mem2(hbm.capacity);
  load_memory_image(mem2, path, 4096);
  std::vector<uint8_t> back(img.size());
  mem2.read_bytes(4096, back.data(), back.size());
  CHECK(back == img);

  const std::string dump = hexdump(mem2, 4096, 32);
  CHECK(dump.find("00001000") != std::string::npos);
  CHECK(dump.find("00 07 0e") != std::string::npos);
  std::remove(path.c_str());
}
