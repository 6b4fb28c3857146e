#include "gpsacq/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "gpsacq/sparse_recovery.hpp"

namespace gpsacq {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt("%.9e", *v) : "NA"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t matrix_seed(const SimConfig& cfg) {
  return cfg.matrix_seed != 0 ? cfg.matrix_seed : derive_seed(cfg.seed, SeedStream::Matrix, 0);
}

// Linear-interpolated quantile of sorted values.
double quantile(const std::vector<double>& sorted, double f) {
  if (sorted.empty()) return 0.0;
  const double pos = f * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void write_header(std::ostream& out, const std::string& title, const SimConfig& cfg) {
  out << "# gpsacq " << title << '\n';
  for (const auto& [k, v] : cfg.entries()) out << "# " << k << '=' << v << '\n';
  out << "# effective_matrix_seed=" << matrix_seed(cfg) << '\n'
      << "# effective_sparsity=" << cfg.effective_sparsity() << '\n'
      << "# trial_seed=splitmix64 chain over (seed, stream 1, trial index)\n"
      << "# snr=mean received signal power per complex sample over noise variance\n"
      << "# processing_gain_db=" << fmt("%.3f", 10.0 * std::log10(cfg.grid().samples_per_symbol())) << '\n'
      << "# rembo_validation=restricted least-squares residual <= max(stop_tol*||C||, 1e-8)\n"
      << "# rmse=pooled over (trial, identified satellite), strongest path; NA when no satellite was identified\n";
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t parent, SeedStream stream, std::uint64_t counter) {
  std::uint64_t x = splitmix64(parent);
  x = splitmix64(x ^ static_cast<std::uint64_t>(stream));
  return splitmix64(x ^ counter);
}

TrialInput make_trial_input(const SimConfig& cfg, const CodeFamily& codes, std::uint64_t seed,
                            int n_sym, double snr_db) {
  const GridSpec grid = cfg.grid();
  TrialInput in;
  in.seed = seed;
  in.channel = draw_channel(derive_seed(seed, SeedStream::Channel, 0), cfg.channel(n_sym), grid);
  in.signal = synthesize_received(in.channel, codes, grid, n_sym, snr_db,
                                  derive_seed(seed, SeedStream::Noise, 0));
  return in;
}

void score(const AcquisitionResult& result, const ChannelRealization& channel, const GridSpec& grid,
           TrialRecord& record) {
  const std::vector<int> found = result.detected_sats();
  record.partial = result.partial;
  record.active = static_cast<int>(channel.active.size());
  record.success = !result.partial && found == channel.active;
  record.identified = 0;
  record.errors.clear();
  const double tc = grid.chip_period_s();
  for (const auto& det : result.satellites) {
    if (!std::binary_search(channel.active.begin(), channel.active.end(), det.sat)) continue;
    ++record.identified;
    if (det.paths.empty()) continue;
    const ChannelPath& truth = channel.strongest_path(det.sat);
    const PathEstimate& est = det.paths.front();
    SatelliteError e;
    e.sat = det.sat;
    e.delay_bins = est.q - truth.q;
    e.doppler_bins = est.k - truth.k;
    // Differences in chips and hertz first, so on-grid errors are exactly zero.
    e.delay_s = (est.q * grid.delay_step_chips - truth.delay_chips) * tc;
    e.doppler_rads = 2.0 * std::numbers::pi * (est.k * grid.doppler_step_hz - truth.doppler_hz);
    record.errors.push_back(e);
  }
}

Acquirer::Acquirer(const SimConfig& cfg)
    : cfg_(cfg),
      bank_((cfg.validate(), CodeFamily::build(cfg.i_total, cfg.m0, cfg.n_periods)), cfg.grid()) {}

void Acquirer::prepare(const std::vector<long>& p_values) {
  std::vector<long> missing;
  for (long p : p_values) {
    if (!prepared(p)) missing.push_back(p);
  }
  if (missing.empty()) return;
  const long dims = static_cast<long>(total_bins(grid(), bank_.n_sats()));
  SensingMatrix full;
  if (!cfg_.matrix_file.empty()) {
    std::ifstream in(cfg_.matrix_file);
    if (!in) throw ConfigError("cannot open sensing matrix file '" + cfg_.matrix_file + "'");
    full = read_sensing_matrix_csv(in);
    if (full.cols() != dims) throw ConfigError("sensing matrix file has the wrong number of columns");
    if (full.kind == MatrixKind::UserSupplied) full = user_sensing_matrix(std::move(full.entries));
  } else {
    const long max_p = *std::max_element(missing.begin(), missing.end());
    full = build_sensing_matrix(max_p, dims, cfg_.matrix, matrix_seed(cfg_));
  }
  for (long p : missing) {
    if (p < 1 || p > full.rows()) {
      throw ConfigError("P = " + std::to_string(p) + " is not available from the sensing matrix");
    }
  }
  const CompressiveKernels kernels = build_kernels(full, bank_);
  const Eigen::MatrixXcd dict = recovery_dictionary(cfg_.dictionary, full, kernels, bank_);
  for (long p : missing) {
    CsState st;
    st.b.kind = full.kind;
    st.b.seed = full.seed;
    st.b.entries = full.entries.topRows(p);
    st.kernels.grid = kernels.grid;
    st.kernels.re = kernels.re.topRows(p);
    st.kernels.im = kernels.im.topRows(p);
    st.dict = dict.topRows(p);
    cs_.emplace(p, std::move(st));
  }
}

const Acquirer::CsState& Acquirer::state(long p) const {
  const auto it = cs_.find(p);
  if (it == cs_.end()) throw std::logic_error("compressive receiver for P = " + std::to_string(p) + " not prepared");
  return it->second;
}

AcquisitionResult Acquirer::acquire_mf(const SampledSignal& x, OpCounter* ops) const {
  OpCounter local;
  const CorrelationTensor z = bank_.correlate(x, &local);
  const std::vector<double> stat = accumulate(z, 0, x.n_sym, &local);
  AcquisitionResult result = select_paths(stat, grid(), bank_.n_sats(), cfg_.i_active, cfg_.paths_r, &local);
  result.ops = local;
  if (ops != nullptr) *ops += local;
  return result;
}

AcquisitionResult Acquirer::acquire_cs(const SampledSignal& x, long p, std::uint64_t rembo_seed,
                                       OpCounter* ops) const {
  const CsState& st = state(p);
  OpCounter local;
  const CompressedMeasurements m = compress(x, st.kernels, &local);
  const auto sparsity = static_cast<std::size_t>(cfg_.effective_sparsity());
  MmvProblem problem;
  if (cfg_.ctf) {
    const std::size_t cap = cfg_.ctf_max_rank < 0 ? 0
                            : cfg_.ctf_max_rank == 0 ? sparsity
                                                     : static_cast<std::size_t>(cfg_.ctf_max_rank);
    problem = ctf_reduce(m, cfg_.rank_tol, cap, &local);
  } else {
    problem = raw_problem(m);
  }
  AcquisitionResult result;
  if (problem.empty) {
    result.partial = cfg_.i_active > 0;
  } else {
    SupportEstimate est;
    if (cfg_.solver == Solver::Rembo) {
      est = rembo(st.dict, problem.c, sparsity, static_cast<std::size_t>(cfg_.boosts), rembo_seed,
                  cfg_.stop_tol, &local);
    } else if (problem.c.cols() == 1) {
      est = omp_smv(st.dict, Eigen::VectorXcd(problem.c.col(0)), sparsity, cfg_.stop_tol, &local);
    } else {
      est = omp_mmv(st.dict, problem.c, sparsity, cfg_.stop_tol, &local);
    }
    result = support_to_acquisition(est, grid(), bank_.n_sats(), cfg_.i_active, cfg_.paths_r);
  }
  result.ops = local;
  if (ops != nullptr) *ops += local;
  return result;
}

TrialRecord Acquirer::run(const TrialInput& input, Receiver receiver, long p) const {
  TrialRecord rec;
  rec.seed = input.seed;
  rec.snr_db = input.signal.snr_db;
  rec.receiver = receiver;
  rec.n_sym = input.signal.n_sym;
  rec.p = receiver == Receiver::CS ? p : 0;
  const auto t0 = std::chrono::steady_clock::now();
  const AcquisitionResult result =
      receiver == Receiver::MF
          ? acquire_mf(input.signal, &rec.ops)
          : acquire_cs(input.signal, p, derive_seed(input.seed, SeedStream::Rembo, 0), &rec.ops);
  rec.wall_s = seconds_since(t0);
  score(result, input.channel, grid(), rec);
  return rec;
}

TrialRecord run_trial(const SimConfig& cfg, std::uint64_t seed, Receiver receiver) {
  Acquirer acq(cfg);
  long p = cfg.p;
  if (receiver == Receiver::CS) {
    if (!cfg.matrix_file.empty()) {
      std::ifstream in(cfg.matrix_file);
      if (!in) throw ConfigError("cannot open sensing matrix file '" + cfg.matrix_file + "'");
      p = read_sensing_matrix_csv(in).rows();
    }
    acq.prepare({p});
  }
  const TrialInput input = make_trial_input(cfg, acq.codes(), seed, cfg.n_sym, cfg.snr_db);
  return acq.run(input, receiver, p);
}

Aggregate rmse_aggregate(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("rmse_aggregate needs at least one record");
  Aggregate agg;
  agg.trials = records.size();
  double successes = 0, identified = 0, ops = 0, wall = 0, sq_q = 0, sq_k = 0;
  std::size_t pairs = 0;
  for (const auto& r : records) {
    successes += r.success ? 1.0 : 0.0;
    identified += r.active > 0 ? static_cast<double>(r.identified) / r.active : 1.0;
    ops += static_cast<double>(r.ops.total());
    wall += r.wall_s;
    for (const auto& e : r.errors) {
      sq_q += e.delay_s * e.delay_s;
      sq_k += e.doppler_rads * e.doppler_rads;
      ++pairs;
    }
  }
  const double n = static_cast<double>(records.size());
  agg.success_rate = successes / n;
  agg.identified_fraction = identified / n;
  agg.mean_ops = ops / n;
  agg.mean_wall_s = wall / n;
  if (pairs > 0) {
    agg.rmse_q_s = std::sqrt(sq_q / static_cast<double>(pairs));
    agg.rmse_k_rads = std::sqrt(sq_k / static_cast<double>(pairs));
  }
  return agg;
}

std::vector<SweepRow> sweep(const SimConfig& cfg, const std::function<void(const SweepRow&)>& on_row) {
  Acquirer acq(cfg);
  const GridSpec& grid = acq.grid();
  const bool want_mf = std::find(cfg.receivers.begin(), cfg.receivers.end(), Receiver::MF) != cfg.receivers.end();
  const bool want_cs = std::find(cfg.receivers.begin(), cfg.receivers.end(), Receiver::CS) != cfg.receivers.end();
  std::vector<long> p_values = cfg.p_list;
  if (want_cs && !cfg.matrix_file.empty()) {
    std::ifstream in(cfg.matrix_file);
    if (!in) throw ConfigError("cannot open sensing matrix file '" + cfg.matrix_file + "'");
    p_values = {read_sensing_matrix_csv(in).rows()};
  }
  if (want_cs) acq.prepare(p_values);

  std::vector<SweepRow> rows;
  for (int n_sym : cfg.n_sym_list) {
    // (snr index, receiver, P) -> records
    std::map<std::tuple<std::size_t, int, long>, std::vector<TrialRecord>> records;
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t seed = trial_seed(cfg.seed, static_cast<std::uint64_t>(t));
      TrialInput input;
      input.seed = seed;
      input.channel = draw_channel(derive_seed(seed, SeedStream::Channel, 0), cfg.channel(n_sym), grid);
      const std::vector<cdouble> clean = synthesize_clean(input.channel, acq.codes(), grid, n_sym);
      for (std::size_t s = 0; s < cfg.snr_list.size(); ++s) {
        input.signal = add_awgn(clean, grid, n_sym, cfg.snr_list[s], derive_seed(seed, SeedStream::Noise, 0));
        if (want_mf) records[{s, 0, 0L}].push_back(acq.run(input, Receiver::MF, 0));
        if (want_cs) {
          for (long p : p_values) records[{s, 1, p}].push_back(acq.run(input, Receiver::CS, p));
        }
      }
    }
    for (auto& [key, recs] : records) {
      SweepRow row;
      row.receiver = std::get<1>(key) == 0 ? Receiver::MF : Receiver::CS;
      row.p = std::get<2>(key);
      row.snr_db = cfg.snr_list[std::get<0>(key)];
      row.n_sym = n_sym;
      row.agg = rmse_aggregate(recs);
      if (on_row) on_row(row);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_sweep_row(const SweepRow& row) {
  std::string out = to_string(row.receiver);
  out += ',' + (row.receiver == Receiver::MF ? std::string("NA") : std::to_string(row.p));
  out += ',' + fmt("%.10g", row.snr_db);
  out += ',' + std::to_string(row.n_sym);
  out += ',' + std::to_string(row.agg.trials);
  out += ',' + fmt("%.6f", row.agg.success_rate);
  out += ',' + fmt_opt(row.agg.rmse_q_s);
  out += ',' + fmt_opt(row.agg.rmse_k_rads);
  out += ',' + fmt("%.1f", row.agg.mean_ops);
  out += ',' + fmt("%.6e", row.agg.mean_wall_s);
  out += ',' + fmt("%.6f", row.agg.identified_fraction);
  return out;
}

void write_sweep_csv(std::ostream& out, const SimConfig& cfg, const std::vector<SweepRow>& rows) {
  write_header(out, "sweep", cfg);
  out << kSweepColumns << '\n';
  for (const auto& row : rows) out << format_sweep_row(row) << '\n';
}

void write_sweep_file(const SimConfig& cfg, const std::vector<SweepRow>& rows) {
  std::ofstream out(cfg.output);
  if (!out) throw std::runtime_error("cannot write '" + cfg.output + "'");
  write_sweep_csv(out, cfg, rows);
  if (!out) throw std::runtime_error("failed while writing '" + cfg.output + "'");
}

ComplexityReport complexity_report(const SimConfig& cfg) {
  Acquirer acq(cfg);
  acq.prepare({cfg.p});
  const GridSpec& grid = acq.grid();
  const TrialInput input = make_trial_input(cfg, acq.codes(), trial_seed(cfg.seed, 0), cfg.n_sym, cfg.snr_db);
  OpCounter mf, cs;
  acq.acquire_mf(input.signal, &mf);
  acq.acquire_cs(input.signal, cfg.p, derive_seed(input.seed, SeedStream::Rembo, 0), &cs);

  ComplexityReport rep;
  rep.p = cfg.p;
  rep.n_sym = cfg.n_sym;
  rep.sparsity = cfg.effective_sparsity();
  rep.samples_per_symbol = grid.samples_per_symbol();
  rep.symbol_chips = grid.symbol_chips();
  rep.bins = total_bins(grid, acq.bank().n_sats());
  const auto n = static_cast<std::uint64_t>(cfg.n_sym);
  const auto lm = static_cast<std::uint64_t>(rep.samples_per_symbol);
  const auto bins = static_cast<std::uint64_t>(rep.bins);
  const auto p = static_cast<std::uint64_t>(cfg.p);

  const auto add = [&](Receiver r, Stage s, const OpCounter& c, std::optional<std::uint64_t> pred) {
    rep.entries.push_back({r, s, c.get(s), pred});
  };
  add(Receiver::MF, Stage::MfCorrelation, mf, n * bins * lm);
  add(Receiver::MF, Stage::MfAccumulation, mf, n * bins);
  add(Receiver::MF, Stage::MfPathSelection, mf, std::nullopt);
  add(Receiver::CS, Stage::CsCompression, cs, n * lm * p);
  for (Stage s : {Stage::CsCovariance, Stage::CsEigen, Stage::OmpResidual, Stage::OmpInnerProducts,
                  Stage::OmpMaxSelection, Stage::OmpLeastSquares, Stage::OmpStopping}) {
    add(Receiver::CS, s, cs, std::nullopt);
  }
  rep.mf_total = mf.total();
  rep.cs_total = cs.total();
  rep.measured_ratio = static_cast<double>(rep.cs_total) / static_cast<double>(rep.mf_total);
  rep.predicted_ratio = static_cast<double>(p) / static_cast<double>(bins) +
                        static_cast<double>(p) * rep.sparsity / static_cast<double>(rep.symbol_chips);
  return rep;
}

void write_complexity_csv(std::ostream& out, const ComplexityReport& rep) {
  out << "# gpsacq complexity\n"
      << "# P=" << rep.p << " n_sym=" << rep.n_sym << " sparsity=" << rep.sparsity
      << " samples_per_symbol=" << rep.samples_per_symbol << " symbol_chips=" << rep.symbol_chips
      << " bins=" << rep.bins << '\n'
      << "receiver,stage,measured,predicted,measured_over_predicted\n";
  for (const auto& e : rep.entries) {
    out << to_string(e.receiver) << ',' << stage_name(e.stage) << ',' << e.measured << ',';
    if (e.predicted) {
      out << *e.predicted << ','
          << fmt("%.6f", *e.predicted ? static_cast<double>(e.measured) / static_cast<double>(*e.predicted) : 0.0);
    } else {
      out << "NA,NA";
    }
    out << '\n';
  }
  out << "mf,total," << rep.mf_total << ",NA,NA\n"
      << "cs,total," << rep.cs_total << ",NA,NA\n"
      << "ratio,cs_over_mf," << fmt("%.6f", rep.measured_ratio) << ',' << fmt("%.6f", rep.predicted_ratio)
      << ',' << fmt("%.6f", rep.measured_ratio / rep.predicted_ratio) << '\n';
}

std::vector<BenchRow> bench(const SimConfig& cfg, const std::function<void(const BenchRow&)>& on_row) {
  Acquirer acq(cfg);
  acq.prepare(cfg.bench_p_list);
  std::vector<BenchRow> rows;
  const auto time_it = [&](Receiver r, long p, const SampledSignal& x) {
    const auto once = [&] {
      if (r == Receiver::MF) acq.acquire_mf(x);
      else acq.acquire_cs(x, p, 1);
    };
    once();  // warm-up
    std::vector<double> t(static_cast<std::size_t>(cfg.bench_reps));
    for (auto& v : t) {
      const auto t0 = std::chrono::steady_clock::now();
      once();
      v = seconds_since(t0);
    }
    std::sort(t.begin(), t.end());
    BenchRow row;
    row.receiver = r;
    row.p = p;
    row.n_sym = x.n_sym;
    row.reps = cfg.bench_reps;
    row.median_s = quantile(t, 0.5);
    row.iqr_s = quantile(t, 0.75) - quantile(t, 0.25);
    if (on_row) on_row(row);
    rows.push_back(row);
  };
  for (int n_sym : cfg.n_sym_list) {
    const TrialInput input = make_trial_input(cfg, acq.codes(), trial_seed(cfg.seed, 0), n_sym, cfg.snr_db);
    time_it(Receiver::MF, 0, input.signal);
    for (long p : cfg.bench_p_list) time_it(Receiver::CS, p, input.signal);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const SimConfig& cfg, const std::vector<BenchRow>& rows) {
  write_header(out, "bench", cfg);
  for (const auto& [k, v] : environment_metadata()) out << "# " << k << '=' << v << '\n';
  out << "receiver,P,n_sym,reps,median_s,iqr_s\n";
  for (const auto& r : rows) {
    out << to_string(r.receiver) << ',' << (r.receiver == Receiver::MF ? std::string("NA") : std::to_string(r.p))
        << ',' << r.n_sym << ',' << r.reps << ',' << fmt("%.6e", r.median_s) << ',' << fmt("%.6e", r.iqr_s)
        << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> environment_metadata() {
  std::vector<std::pair<std::string, std::string>> out;
#ifdef __VERSION__
  out.emplace_back("compiler", __VERSION__);
#endif
  out.emplace_back("eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION));
  out.emplace_back("simd", Eigen::SimdInstructionSetsInUse());
  out.emplace_back("hardware_threads", std::to_string(std::thread::hardware_concurrency()));
  std::ifstream cpu("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpu, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) out.emplace_back("cpu", line.substr(colon + 2));
      break;
    }
  }
  return out;
}

}  // namespace gpsacq
