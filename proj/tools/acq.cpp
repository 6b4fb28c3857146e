// acq: command-line driver for the acquisition simulations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpsacq/ca_codes.hpp"
#include "gpsacq/config.hpp"
#include "gpsacq/experiments.hpp"

using namespace gpsacq;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config,-c", opt.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opt.overrides, "override a config key, e.g. --set snr_db=-10");
  cmd->add_flag("--paper-scale", opt.paper_scale, "N = 20 code periods per symbol, 500 Hz Doppler step");
}

SimConfig load(const CommonOptions& opt) {
  SimConfig cfg = opt.config_path.empty() ? SimConfig{} : load_config(opt.config_path);
  if (opt.paper_scale) apply_paper_scale(cfg);
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

json opt_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json record_json(const TrialRecord& r, const SimConfig& cfg) {
  json errs = json::array();
  for (const auto& e : r.errors) {
    errs.push_back({{"prn", e.sat + 1},
                    {"delay_bins", e.delay_bins},
                    {"doppler_bins", e.doppler_bins},
                    {"delay_s", e.delay_s},
                    {"doppler_rads", e.doppler_rads}});
  }
  json ops = json::object();
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const auto stage = static_cast<Stage>(s);
    if (r.ops.get(stage) != 0) ops[std::string(stage_name(stage))] = r.ops.get(stage);
  }
  return {{"receiver", to_string(r.receiver)},
          {"P", r.receiver == Receiver::CS ? json(r.p) : json(nullptr)},
          {"trial_seed", r.seed},
          {"snr_db", opt_number(r.snr_db)},
          {"n_sym", r.n_sym},
          {"dictionary", to_string(cfg.dictionary)},
          {"success", r.success},
          {"partial", r.partial},
          {"identified", r.identified},
          {"active", r.active},
          {"errors", errs},
          {"ops", ops},
          {"ops_total", r.ops.total()},
          {"wall_s", r.wall_s}};
}

int run_simulate(const CommonOptions& opt, const std::string& receiver, std::uint64_t seed, bool seed_set,
                 std::uint64_t trial) {
  SimConfig cfg = load(opt);
  if (seed_set) cfg.seed = seed;
  std::vector<Receiver> which;
  if (receiver == "both") which = {Receiver::MF, Receiver::CS};
  else which = {parse_receiver(receiver)};

  Acquirer acq(cfg);
  if (std::find(which.begin(), which.end(), Receiver::CS) != which.end()) acq.prepare({cfg.p});
  const std::uint64_t ts = trial_seed(cfg.seed, trial);
  const TrialInput input = make_trial_input(cfg, acq.codes(), ts, cfg.n_sym, cfg.snr_db);

  json paths = json::array();
  for (const auto& p : input.channel.paths) {
    paths.push_back({{"prn", p.sat + 1},
                     {"r", p.r},
                     {"gain_abs", std::abs(p.gain)},
                     {"delay_chips", p.delay_chips},
                     {"doppler_hz", p.doppler_hz},
                     {"q", p.q},
                     {"k", p.k}});
  }
  json out = {{"seed", cfg.seed},
              {"trial", trial},
              {"trial_seed", ts},
              {"channel", paths},
              {"noise_variance", input.signal.noise_variance},
              {"signal_power", input.signal.signal_power},
              {"results", json::array()}};
  for (Receiver r : which) {
    const TrialRecord rec = acq.run(input, r, cfg.p);
    const AcquisitionResult res = r == Receiver::MF ? acq.acquire_mf(input.signal)
                                                    : acq.acquire_cs(input.signal, cfg.p,
                                                                     derive_seed(ts, SeedStream::Rembo, 0));
    json det = json::array();
    for (const auto& s : res.satellites) {
      json ps = json::array();
      for (const auto& p : s.paths) ps.push_back({{"k", p.k}, {"q", p.q}, {"value", p.value}});
      det.push_back({{"prn", s.sat + 1}, {"paths", ps}});
    }
    json j = record_json(rec, cfg);
    j["detections"] = det;
    out["results"].push_back(j);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_sweep(const CommonOptions& opt, const std::string& out_path, bool quiet) {
  SimConfig cfg = load(opt);
  if (!out_path.empty()) cfg.output = out_path;
  {
    // Fail on an unwritable path before hours of computation.
    std::ofstream probe(cfg.output, std::ios::app);
    if (!probe) throw std::runtime_error("cannot write '" + cfg.output + "'");
  }
  const auto rows = sweep(cfg, [&](const SweepRow& row) {
    if (!quiet) std::cerr << format_sweep_row(row) << '\n';
  });
  write_sweep_file(cfg, rows);
  if (!quiet) std::cerr << "wrote " << rows.size() << " rows to " << cfg.output << '\n';
  return 0;
}

int run_complexity(const CommonOptions& opt, const std::string& out_path) {
  const SimConfig cfg = load(opt);
  const ComplexityReport rep = complexity_report(cfg);
  if (out_path.empty()) {
    write_complexity_csv(std::cout, rep);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    write_complexity_csv(out, rep);
  }
  return 0;
}

int run_bench(const CommonOptions& opt, const std::string& out_path, bool quiet) {
  const SimConfig cfg = load(opt);
  const auto rows = bench(cfg, [&](const BenchRow& r) {
    if (!quiet) {
      std::cerr << to_string(r.receiver) << " P=" << r.p << " n_sym=" << r.n_sym << " median " << r.median_s
                << " s\n";
    }
  });
  if (out_path.empty()) {
    write_bench_csv(std::cout, cfg, rows);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    write_bench_csv(out, cfg, rows);
  }
  return 0;
}

int run_codes(int prn, int m0, int count, bool csv, int table) {
  if (table > 0) {
    // Max |correlation| over all lags, off-peak for a code with itself, in units of 1/m0.
    std::vector<CaCode> codes;
    for (int p = 1; p <= table; ++p) codes.push_back(generate_ca_code(p, m0));
    std::printf("prn");
    for (int p = 1; p <= table; ++p) std::printf(",%d", p);
    std::printf("\n");
    for (int a = 0; a < table; ++a) {
      std::printf("%d", a + 1);
      for (int b = 0; b < table; ++b) {
        long worst = 0;
        for (long lag = 0; lag < m0; ++lag) {
          if (a == b && lag == 0) continue;
          worst = std::max(worst, std::labs(correlation_sum(codes[a], codes[b], lag)));
        }
        std::printf(",%ld", worst);
      }
      std::printf("\n");
    }
    return 0;
  }
  const CaCode code = generate_ca_code(prn, m0);
  if (count <= 0 || count > code.length()) count = code.length();
  if (csv) {
    std::printf("index,chip\n");
    for (int m = 0; m < count; ++m) std::printf("%d,%d\n", m, code.chips[m]);
    return 0;
  }
  // First ten chips as octal with logic 1 for chip -1, the usual table form.
  unsigned first10 = 0;
  for (int m = 0; m < 10 && m < code.length(); ++m) first10 = (first10 << 1) | (code.chips[m] < 0 ? 1u : 0u);
  std::printf("prn %d  length %d  first-10 octal %04o\n", prn, code.length(), first10);
  for (int m = 0; m < count; ++m) {
    std::printf("%c", code.chips[m] > 0 ? '+' : '-');
    if ((m + 1) % 64 == 0) std::printf("\n");
  }
  if (count % 64 != 0) std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPS C/A acquisition: matched-filter and compressive receivers"};
  app.require_subcommand(1);

  CommonOptions sim_opt, sweep_opt, cx_opt, bench_opt;
  std::string receiver = "both", sweep_out, cx_out, bench_out;
  std::uint64_t seed = 1, trial = 0;
  bool quiet = false;
  int prn = 1, m0 = 1023, count = 0, table = 0;
  bool csv = false;

  auto* sim = app.add_subcommand("simulate", "run one seeded trial and print it as JSON");
  add_common(sim, sim_opt);
  auto* seed_opt = sim->add_option("--seed,-s", seed, "master seed");
  sim->add_option("--trial,-t", trial, "trial index under the master seed (sweeps use 0..trials-1)");
  sim->add_option("--receiver,-r", receiver, "mf, cs or both")->check(CLI::IsMember({"mf", "cs", "both"}));

  auto* sw = app.add_subcommand("sweep", "Monte-Carlo sweep to CSV");
  add_common(sw, sweep_opt);
  sw->add_option("--out,-o", sweep_out, "output CSV (default: config key 'output')");
  sw->add_flag("--quiet,-q", quiet, "no progress on stderr");

  auto* cx = app.add_subcommand("complexity", "per-stage operation counts and the CS/MF ratio");
  add_common(cx, cx_opt);
  cx->add_option("--out,-o", cx_out, "output CSV (default: stdout)");

  auto* bn = app.add_subcommand("bench", "wall-clock runtime versus P");
  add_common(bn, bench_opt);
  bn->add_option("--out,-o", bench_out, "output CSV (default: stdout)");
  bn->add_flag("--quiet,-q", quiet, "no progress on stderr");

  auto* cd = app.add_subcommand("codes", "print a spreading code");
  cd->add_option("--prn,-p", prn, "PRN number");
  cd->add_option("--m0", m0, "code length: 1023, 511, 127 or 31");
  cd->add_option("--count,-n", count, "chips to print (default: all)");
  cd->add_flag("--csv", csv, "index,chip rows instead of the +/- listing");
  cd->add_option("--table", table, "max |correlation| (units of 1/m0) between PRNs 1..N as CSV")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return run_simulate(sim_opt, receiver, seed, seed_opt->count() > 0, trial);
    if (*sw) return run_sweep(sweep_opt, sweep_out, quiet);
    if (*cx) return run_complexity(cx_opt, cx_out);
    if (*bn) return run_bench(bench_opt, bench_out, quiet);
    if (*cd) return run_codes(prn, m0, count, csv, table);
  } catch (const std::exception& e) {
    std::cerr << "acq: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
