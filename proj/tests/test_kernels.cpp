#include <doctest.h>

#include <terasim/config.hpp>
#include <terasim/kernels/beamforming.hpp>
#include <terasim/kernels/chest.hpp>
#include <terasim/kernels/common.hpp>
#include <terasim/kernels/fft.hpp>
#include <terasim/kernels/mmse.hpp>
#include <terasim/kernels/oracle.hpp>
#include <terasim/sim.hpp>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace terasim;
using namespace terasim::kernels;

namespace {

KernelResult run_kernel(const KernelArtifacts& art, uint64_t seed = 1) {
  ClusterConfig cfg = preset("desk-256").cluster;
  Simulator sim(cfg, seed);
  return run_artifacts(sim, art);
}

}  // namespace

TEST_CASE("fft: impulse gives a flat spectrum") {
  const uint32_t n = 64;
  std::vector<cpx> x(n, cpx{0.0, 0.0});
  x[0] = cpx{0.5, 0.0};
  const auto art = build_fft(preset("desk-256").cluster, n, 1, x);
  const auto res = run_kernel(art);
  CHECK(res.pass);
  // DFT of an impulse is constant 0.5, scaled by 2^-stages.
  const double expect = 0.5 / double(1u << fft_stage_count(n));
  for (uint32_t k = 0; k < n; ++k) {
    const cpx v = cq15_to_cpx(res.output_words[k]);
    CHECK(v.real() == doctest::Approx(expect).epsilon(0.01));
    CHECK(std::abs(v.imag()) < 1e-3);
  }
}

TEST_CASE("fft: random input meets the 2^-7 relative bound") {
  std::mt19937_64 rng(3);
  for (uint32_t n : {256u, 1024u}) {
    const auto x = test_util::random_cpx(n * 2, 0.4, rng);  // 2 antennas
    const auto art = build_fft(preset("desk-256").cluster, n, 2, x);
    const auto res = run_kernel(art);
    CHECK(res.pass);
    CHECK(res.error <= std::ldexp(1.0, -7));
  }
}

TEST_CASE("fft: host fixed-point reference is bit-exact with the simulation") {
  std::mt19937_64 rng(9);
  const uint32_t n = 256;
  const auto x = test_util::random_cpx(n, 0.4, rng);
  std::vector<uint32_t> row(n);
  for (uint32_t i = 0; i < n; ++i) row[i] = cq15(x[i]);
  const auto ref = fft_fixed_reference(row);
  const auto art = build_fft(preset("desk-256").cluster, n, 1, x);
  const auto res = run_kernel(art);
  REQUIRE(res.output_words.size() == n);
  CHECK(res.output_words == ref);
}

TEST_CASE("fft: one butterfly per worker is bank-conflict-free") {
  std::mt19937_64 rng(5);
  // The static guarantee holds at workers == n/4 with n <= total_banks
  // (beyond that a butterfly's own strided reads alias banks); the chain
  // runs exactly this point at n = 1024.
  for (uint32_t n : {256u, 1024u}) {
    const auto x = test_util::random_cpx(n, 0.4, rng);
    const auto art = build_fft(preset("desk-256").cluster, n, 1, x, n / 4);
    ClusterConfig cfg = preset("desk-256").cluster;
    Simulator sim(cfg, 1);
    const auto res = run_artifacts(sim, art);
    CHECK(res.pass);
    CHECK(sim.interconnect().core_conflicts() == 0);
  }
}

TEST_CASE("fft: worker count never changes the arithmetic") {
  std::mt19937_64 rng(6);
  const uint32_t n = 512;
  const auto x = test_util::random_cpx(n, 0.4, rng);
  std::vector<uint32_t> last;
  for (uint32_t workers : {16u, 64u, 128u}) {
    const auto art = build_fft(preset("desk-256").cluster, n, 1, x, workers);
    ClusterConfig cfg = preset("desk-256").cluster;
    Simulator sim(cfg, 1);
    const auto res = run_artifacts(sim, art);
    CHECK(res.pass);
    if (!last.empty()) CHECK(res.output_words == last);
    last = res.output_words;
  }
}

TEST_CASE("fft: analytic op count matches the emitted programs") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  for (uint32_t n : {64u, 256u}) {
    std::vector<cpx> x(n, cpx{0.1, 0.0});
    const auto art = build_fft(cfg, n, 1, x);
    uint64_t emitted = 0;
    for (const auto& p : art.run.programs)
      for (const auto& in : p.code)
        if (in.kind == InstrKind::Compute) emitted += in.op_count;
    CHECK(emitted == art.op_total);
    CHECK(art.op_total == fft_op_total(n, 1));
  }
}

TEST_CASE("beamforming: identity weights copy the input") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  const uint32_t nb = 4, na = 4, nsc = 64;
  std::vector<cpx> w(nb * na, cpx{0.0, 0.0});
  for (uint32_t b = 0; b < nb; ++b) w[b * na + b] = cpx{0.999, 0.0};
  std::mt19937_64 rng(7);
  const auto y = test_util::random_cpx(na * nsc, 0.5, rng);
  const auto res = run_kernel(build_bf(cfg, nb, na, nsc, w, y));
  CHECK(res.pass);
  for (uint32_t b = 0; b < nb; ++b)
    for (uint32_t s = 0; s < nsc; ++s) {
      const cpx got = cq15_to_cpx(res.output_words[b * nsc + s]);
      const cpx want = cq15_to_cpx(cq15(y[b * nsc + s])) * 0.999;
      CHECK(std::abs(got - want) < 1e-4);
    }
}

TEST_CASE("beamforming: random case meets the 2^-14 per-entry bound") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  std::mt19937_64 rng(11);
  const uint32_t nb = 8, na = 16, nsc = 128;
  const auto w = test_util::random_cpx(nb * na, 1.0 / na, rng);
  const auto y = test_util::random_cpx(na * nsc, 0.5, rng);
  const auto res = run_kernel(build_bf(cfg, nb, na, nsc, w, y));
  CHECK(res.pass);
  CHECK(res.error <= std::ldexp(1.0, -14));
  CHECK(bf_op_total(nb, na, nsc) == 8ull * nb * na * nsc);
  // Full production scale, for the record: 8 * 32 * 64 * 3276.
  CHECK(bf_op_total(32, 64, 3276) == 53673984ull);
}

TEST_CASE("chest: unit pilots reduce to copy and rotate") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  std::mt19937_64 rng(13);
  const uint32_t nb = 4, nt = 2, nsc = 64;
  const auto bf = test_util::random_cpx(nb * nsc, 0.4, rng);
  std::vector<cpx> pilot(nt * nsc);
  for (uint32_t s = 0; s < nsc; ++s) {
    pilot[s] = cpx{0.999, 0.0};          // tx0: h = bf
    pilot[nsc + s] = cpx{0.0, 0.999};    // tx1: h = bf * conj(j) = -j*bf
  }
  const auto res = run_kernel(build_chest(cfg, nb, nt, nsc, bf, pilot));
  CHECK(res.pass);
  for (uint32_t b = 0; b < nb; ++b)
    for (uint32_t s = 0; s < nsc; ++s) {
      const cpx in = cq15_to_cpx(cq15(bf[b * nsc + s]));
      const cpx h0 = cq15_to_cpx(res.output_words[(b * nt + 0) * nsc + s]);
      const cpx h1 = cq15_to_cpx(res.output_words[(b * nt + 1) * nsc + s]);
      CHECK(std::abs(h0 - in * 0.999) < 1e-4);
      CHECK(std::abs(h1 - in * cpx{0.0, -0.999}) < 1e-4);
    }
  CHECK(chest_op_total(nb, nt, nsc) == 6ull * nb * nt * nsc);
}

TEST_CASE("mmse: identity channel with zero noise returns y") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  const uint32_t nb = 4, nt = 4, nsc = 16;
  std::vector<cpx> h(nb * nt * nsc, cpx{0.0, 0.0});
  for (uint32_t s = 0; s < nsc; ++s)
    for (uint32_t t = 0; t < nt; ++t) h[(t * nt + t) * nsc + s] = cpx{0.5, 0.0};
  std::mt19937_64 rng(17);
  const auto amp = test_util::random_cpx(nt * nsc, 0.1, rng);
  // y = H x with H = 0.5 I, so x = 2 y; keep |x| small.
  std::vector<cpx> y(nb * nsc, cpx{0.0, 0.0});
  for (uint32_t t = 0; t < nt; ++t)
    for (uint32_t s = 0; s < nsc; ++s) y[t * nsc + s] = 0.5 * amp[t * nsc + s];
  const auto res = run_kernel(build_mmse(cfg, nb, nt, nsc, h, y, 0.0));
  CHECK(res.pass);
  for (uint32_t t = 0; t < nt; ++t)
    for (uint32_t s = 0; s < nsc; ++s) {
      const cpx got = cq15_to_cpx(res.output_words[t * nsc + s]);
      CHECK(std::abs(got - amp[t * nsc + s]) < 2e-3);
    }
}

TEST_CASE("mmse: random well-conditioned 4x4 meets the 2^-6 relative bound") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  std::mt19937_64 rng(19);
  const uint32_t nb = 4, nt = 4, nsc = 32;
  const auto st = test_util::mmse_stimulus(nb, nt, nsc, rng);
  const auto res = run_kernel(build_mmse(cfg, nb, nt, nsc, st.h, st.y, 1.0 / 64.0));
  CHECK(res.pass);
  CHECK(res.error <= std::ldexp(1.0, -6));
  // No subcarrier hit a non-positive Cholesky pivot.
  CHECK(res.metrics.cycles > 0);
}

TEST_CASE("mmse: large noise shrinks the solution toward zero") {
  const ClusterConfig cfg = preset("desk-256").cluster;
  std::mt19937_64 rng(23);
  const uint32_t nb = 4, nt = 2, nsc = 8;
  const auto st = test_util::mmse_stimulus(nb, nt, nsc, rng);
  const auto lo = run_kernel(build_mmse(cfg, nb, nt, nsc, st.h, st.y, 1.0 / 256.0));
  const auto hi = run_kernel(build_mmse(cfg, nb, nt, nsc, st.h, st.y, 4.0));
  CHECK(lo.pass);
  CHECK(hi.pass);
  double nlo = 0, nhi = 0;
  for (size_t i = 0; i < lo.output_words.size(); ++i) {
    nlo += std::norm(cq15_to_cpx(lo.output_words[i]));
    nhi += std::norm(cq15_to_cpx(hi.output_words[i]));
  }
  CHECK(nhi < 0.25 * nlo);
}

TEST_CASE("float oracles agree with first principles") {
  std::mt19937_64 rng(29);
  // fft_float vs naive DFT.
  const auto x = test_util::random_cpx(64, 0.5, rng);
  const auto a = dft_naive(x), b = fft_float(x);
  for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
  // mmse_solve_float solves the normal equations.
  const auto st = test_util::mmse_stimulus(4, 4, 1, rng);
  const auto sol = mmse_solve_float(st.h, 4, 4, st.y, 0.01);
  REQUIRE(sol.size() == 4);
  // Residual of (H^H H + s I) x - H^H y must vanish.
  for (uint32_t i = 0; i < 4; ++i) {
    cpx lhs = sol[i] * 0.01, rhs = 0;
    for (uint32_t j = 0; j < 4; ++j) {
      cpx hij = 0;
      for (uint32_t k = 0; k < 4; ++k)
        hij += std::conj(st.h[k * 4 + i]) * st.h[k * 4 + j];
      lhs += hij * sol[j];
    }
    for (uint32_t k = 0; k < 4; ++k) rhs += std::conj(st.h[k * 4 + i]) * st.y[k];
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}
