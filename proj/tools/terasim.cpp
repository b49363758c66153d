// Command-line harness: run kernels or the PUSCH chain on a simulated
// cluster, sweep the remote-latency variants, and check metric reports
// against expectation files. Exit codes: 0 pass, 1 expectation/oracle
// failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <terasim/config.hpp>
#include <terasim/io.hpp>
#include <terasim/kernels/beamforming.hpp>
#include <terasim/kernels/chain.hpp>
#include <terasim/kernels/chest.hpp>
#include <terasim/kernels/fft.hpp>
#include <terasim/kernels/mmse.hpp>
#include <terasim/metrics.hpp>
#include <terasim/sim.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace {

using namespace terasim;
using namespace terasim::kernels;

struct Options {
  std::string preset_name = "desk-256";
  std::string config_path;
  std::string kernel = "chain";
  std::string program_path;
  std::string out_path;
  std::string emit = "json";
  std::string trace_path;
  uint64_t seed = 1;
  uint32_t variant = 0;  // 0 = keep preset value
  bool double_buffer = true;
  bool compute_only = false;
  bool impulse = false;
  // Workload overrides; negative/zero means "keep preset".
  uint32_t fft_size = 0, antennas = 0, subcarriers = 0, beams = 0, tx = 0, symbols = 0;
  double noise_variance = -1.0;
};

Preset load_preset(const Options& o) {
  Preset p;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config '" + o.config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    p = parse_config(ss.str());
  } else {
    p = preset(o.preset_name);
  }
  if (o.variant) p.cluster.latency_remote = o.variant;
  if (o.fft_size) p.workload.fft_size = o.fft_size;
  if (o.antennas) p.workload.n_antennas = o.antennas;
  if (o.subcarriers) p.workload.n_subcarriers = o.subcarriers;
  if (o.beams) p.workload.n_beams = o.beams;
  if (o.tx) p.workload.n_tx = o.tx;
  if (o.symbols) p.workload.n_symbols = o.symbols;
  if (o.noise_variance >= 0.0) p.workload.noise_variance = o.noise_variance;
  validate(p.cluster);
  validate(p.workload);
  return p;
}

std::vector<cpx> random_cpx(size_t n, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<cpx> v(n);
  for (auto& x : v) x = {u(rng), u(rng)};
  return v;
}

KernelArtifacts build_kernel(const std::string& name, const Preset& p, uint64_t seed,
                             bool impulse) {
  const ClusterConfig& cfg = p.cluster;
  const WorkloadConfig& wl = p.workload;
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
  if (name == "fft") {
    std::vector<cpx> in(size_t(wl.n_antennas) * wl.fft_size);
    if (impulse) {
      for (uint32_t a = 0; a < wl.n_antennas; ++a)
        in[size_t(a) * wl.fft_size] = cpx(0.5, 0.0);
    } else {
      in = random_cpx(in.size(), 0.4, rng);
    }
    return build_fft(cfg, wl.fft_size, wl.n_antennas, in);
  }
  if (name == "beamforming") {
    auto w = random_cpx(size_t(wl.n_beams) * wl.n_antennas, 1.0 / wl.n_antennas, rng);
    auto y = random_cpx(size_t(wl.n_antennas) * wl.n_subcarriers, 0.5, rng);
    return build_bf(cfg, wl.n_beams, wl.n_antennas, wl.n_subcarriers, w, y);
  }
  if (name == "chest") {
    auto bf = random_cpx(size_t(wl.n_beams) * wl.n_subcarriers, 0.4, rng);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    std::vector<cpx> pilots(size_t(wl.n_tx) * wl.n_subcarriers);
    for (auto& x : pilots) x = std::polar(0.999, ph(rng));
    return build_chest(cfg, wl.n_beams, wl.n_tx, wl.n_subcarriers, bf, pilots);
  }
  if (name == "mmse") {
    // Synthesize y = H x + n with a bounded true solution so the equalized
    // outputs stay inside Q1.15.
    auto h = random_cpx(size_t(wl.n_beams) * wl.n_tx * wl.n_subcarriers, 0.3, rng);
    auto xt = random_cpx(size_t(wl.n_tx) * wl.n_subcarriers, 0.25, rng);
    auto noise = random_cpx(size_t(wl.n_beams) * wl.n_subcarriers, 0.02, rng);
    std::vector<cpx> y(size_t(wl.n_beams) * wl.n_subcarriers);
    for (uint32_t b = 0; b < wl.n_beams; ++b)
      for (uint32_t sc = 0; sc < wl.n_subcarriers; ++sc) {
        cpx acc = noise[size_t(b) * wl.n_subcarriers + sc];
        for (uint32_t t = 0; t < wl.n_tx; ++t)
          acc += h[(size_t(b) * wl.n_tx + t) * wl.n_subcarriers + sc] *
                 xt[size_t(t) * wl.n_subcarriers + sc];
        y[size_t(b) * wl.n_subcarriers + sc] = acc;
      }
    return build_mmse(cfg, wl.n_beams, wl.n_tx, wl.n_subcarriers, h, y,
                      wl.noise_variance);
  }
  throw ConfigError("unknown kernel '" + name + "'");
}

void write_report(const MetricsReport& r, const Options& o) {
  const std::string doc = (o.emit == "csv") ? emit_csv(r) : emit_json(r);
  if (o.out_path.empty()) {
    std::cout << doc;
  } else {
    std::ofstream out(o.out_path);
    if (!out) throw ConfigError("cannot write '" + o.out_path + "'");
    out << doc;
  }
}

struct RunOutcome {
  bool pass = true;
  MetricsReport report;
};

RunOutcome execute(const Options& o, const Preset& p, std::ostream& log) {
  Simulator sim(p.cluster, o.seed);
  std::ofstream trace;
  if (!o.trace_path.empty()) {
    trace.open(o.trace_path);
    if (!trace) throw ConfigError("cannot write trace '" + o.trace_path + "'");
    sim.set_trace(&trace);
  }
  RunOutcome out;
  if (!o.program_path.empty()) {
    std::ifstream in(o.program_path);
    if (!in) throw ConfigError("cannot open program '" + o.program_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunInput ri = parse_program_text(ss.str(), p.cluster.total_cores());
    auto m = sim.run(ri, "program");
    sim.drain();
    log << "program: " << m.cycles << " cycles, " << m.retired << " retired\n";
  } else if (o.kernel == "chain") {
    ChainOptions copt;
    copt.seed = o.seed;
    copt.mode = o.compute_only ? ChainMode::ComputeOnly
                : o.double_buffer ? ChainMode::DoubleBuffer
                                  : ChainMode::SingleBuffer;
    ChainResult res = run_chain(sim, p.workload, copt);
    out.pass = res.pass;
    const auto totals = sim.report().totals();
    log << "chain: " << (res.pass ? "PASS" : "FAIL") << "  max-error " << res.error
        << "  failed-subcarriers " << res.failed_subcarriers << "  cycles "
        << res.total_cycles << "  overhead " << totals.overhead() << "\n";
    for (const auto& k : sim.report().kernels)
      log << "  " << k.name << ": cycles " << k.cycles << "  ipc " << k.ipc()
          << "  overhead " << k.overhead() << "\n";
  } else {
    KernelArtifacts art = build_kernel(o.kernel, p, o.seed, o.impulse);
    KernelResult res = run_artifacts(sim, art);
    out.pass = res.pass;
    log << art.name << ": " << (res.pass ? "PASS" : "FAIL") << "  error " << res.error
        << " (tolerance " << art.tolerance << ")  cycles " << res.metrics.cycles
        << "  ipc " << res.metrics.ipc() << "  ops " << res.metrics.ops << "\n";
  }
  out.report = sim.report();
  out.report.seed = o.seed;
  out.report.config_echo = config_to_json(p.cluster);
  return out;
}

int cmd_run(const Options& o) {
  const Preset p = load_preset(o);
  RunOutcome out = execute(o, p, std::cout);
  write_report(out.report, o);
  return out.pass ? 0 : 1;
}

int cmd_sweep(const Options& o) {
  bool pass = true;
  std::vector<std::pair<uint32_t, KernelMetrics>> rows;
  for (uint32_t variant : {7u, 9u, 11u}) {
    Options vo = o;
    vo.variant = variant;
    const Preset p = load_preset(vo);
    std::ostringstream discard;
    RunOutcome out = execute(vo, p, discard);
    pass = pass && out.pass;
    rows.push_back({variant, out.report.totals()});
  }
  std::printf("%-8s %-10s %-10s %-8s\n", "variant", "cycles", "retired", "ipc");
  for (const auto& [v, m] : rows)
    std::printf("1-3-5-%-2u %-10llu %-10llu %-8.4f\n", v,
                (unsigned long long)m.cycles, (unsigned long long)m.retired, m.ipc());
  const bool monotone = rows[0].second.cycles <= rows[1].second.cycles &&
                        rows[1].second.cycles <= rows[2].second.cycles;
  std::printf("monotonicity: %s\n", monotone ? "PASS" : "FAIL");
  return (pass && monotone) ? 0 : 1;
}

int cmd_check(const std::string& report_path, const std::string& expect_path) {
  std::ifstream rin(report_path);
  if (!rin) throw ConfigError("cannot open report '" + report_path + "'");
  std::stringstream rss;
  rss << rin.rdbuf();
  const MetricsReport report = parse_json(rss.str());

  std::ifstream ein(expect_path);
  if (!ein) throw ConfigError("cannot open expectations '" + expect_path + "'");
  int failures = 0, checks = 0;
  std::string line;
  while (std::getline(ein, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string metric, op;
    double threshold;
    if (!(ls >> metric >> op >> threshold)) continue;
    const double v = metric_value(report, metric);
    bool ok;
    if (op == "<") ok = v < threshold;
    else if (op == "<=") ok = v <= threshold;
    else if (op == ">") ok = v > threshold;
    else if (op == ">=") ok = v >= threshold;
    else if (op == "==") ok = v == threshold;
    else throw ConfigError("unknown comparator '" + op + "'");
    ++checks;
    failures += !ok;
    std::printf("%-6s %s %s %g  (actual %g)\n", ok ? "PASS" : "FAIL", metric.c_str(),
                op.c_str(), threshold, v);
  }
  std::printf("%d/%d expectations met\n", checks - failures, checks);
  return failures ? 1 : 0;
}

int cmd_hexdump(const std::string& path, uint64_t offset, uint64_t length) {
  HbmConfig hc;
  MainMemory mem(hc.capacity);
  load_memory_image(mem, path, 0);
  std::cout << hexdump(mem, offset, length);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terasim - manycore cluster simulator harness"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--preset", o.preset_name, "Built-in preset name");
    c->add_option("--config", o.config_path, "JSON config file (overrides --preset)");
    c->add_option("--seed", o.seed, "Run seed");
    c->add_option("--kernel", o.kernel, "fft|beamforming|chest|mmse|chain");
    c->add_option("--out", o.out_path, "Report output path (default stdout)");
    c->add_option("--emit", o.emit, "Report format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    c->add_option("--trace", o.trace_path, "Interconnect trace output path");
    c->add_option("--fft-size", o.fft_size, "Workload override");
    c->add_option("--antennas", o.antennas, "Workload override");
    c->add_option("--subcarriers", o.subcarriers, "Workload override");
    c->add_option("--beams", o.beams, "Workload override");
    c->add_option("--tx", o.tx, "Workload override");
    c->add_option("--symbols", o.symbols, "Workload override");
    c->add_option("--noise-variance", o.noise_variance, "Workload override");
  };

  CLI::App* run = app.add_subcommand("run", "Run a kernel or the full chain");
  add_common(run);
  run->add_option("--variant", o.variant, "Remote latency variant: 7|9|11")
      ->check(CLI::IsMember({7, 9, 11}));
  run->add_flag("--double-buffer,!--single-buffer", o.double_buffer,
                "Chain DMA double-buffering (default on)");
  run->add_flag("--compute-only", o.compute_only,
                "Chain without DMA (host-initialized L1)");
  run->add_flag("--impulse", o.impulse, "FFT impulse stimulus (flat spectrum)");
  run->add_option("--program", o.program_path, "Raw program text file to execute");

  CLI::App* sweep = app.add_subcommand("sweep", "Run latency variants 7/9/11");
  add_common(sweep);

  std::string report_path, expect_path;
  CLI::App* check = app.add_subcommand("check", "Check a report against expectations");
  check->add_option("report", report_path, "Metrics report (json)")->required();
  check->add_option("expectations", expect_path,
                    "Expectation lines: <kernel.field> <cmp> <value>")
      ->required();

  std::string dump_path;
  uint64_t dump_offset = 0, dump_length = 256;
  CLI::App* dump = app.add_subcommand("hexdump", "Hexdump a memory image file");
  dump->add_option("file", dump_path, "Binary image")->required();
  dump->add_option("--offset", dump_offset, "Start byte");
  dump->add_option("--length", dump_length, "Byte count");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (check->parsed()) return cmd_check(report_path, expect_path);
    if (dump->parsed()) return cmd_hexdump(dump_path, dump_offset, dump_length);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
