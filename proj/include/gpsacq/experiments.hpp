#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpsacq/ca_codes.hpp"
#include "gpsacq/channel.hpp"
#include "gpsacq/compressive.hpp"
#include "gpsacq/config.hpp"
#include "gpsacq/grid.hpp"
#include "gpsacq/mf_receiver.hpp"
#include "gpsacq/op_count.hpp"

namespace gpsacq {

/// Seed streams. Every random draw of a run is derive_seed(parent, stream, counter).
enum class SeedStream : std::uint64_t { Trial = 1, Channel = 2, Noise = 3, Matrix = 4, Rembo = 5 };

/// splitmix64 over the mixed triple; distinct inputs give unrelated seeds.
std::uint64_t derive_seed(std::uint64_t parent, SeedStream stream, std::uint64_t counter);

/// Seed of trial t under a master seed. Sweeps use trials 0..trials-1.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t t) {
  return derive_seed(master, SeedStream::Trial, t);
}

/// Errors of the strongest path r* = argmax_r |h_r|^2 of one identified satellite.
struct SatelliteError {
  int sat = 0;
  /// Against the nearest grid bin of the true path.
  int delay_bins = 0;
  int doppler_bins = 0;
  /// Against the true (possibly off-grid) delay and Doppler.
  double delay_s = 0.0;
  double doppler_rads = 0.0;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  Receiver receiver = Receiver::MF;
  long p = 0;  // 0 for MF
  int n_sym = 1;
  bool success = false;
  bool partial = false;
  int identified = 0;  // |estimated set ∩ active set|
  int active = 0;
  /// Only satellites in the intersection.
  std::vector<SatelliteError> errors;
  OpCounter ops;
  double wall_s = 0.0;
};

/// Channel and received signal of one trial.
struct TrialInput {
  std::uint64_t seed = 0;
  ChannelRealization channel;
  SampledSignal signal;
};

/// Draws the channel and synthesizes the signal of a trial seed.
TrialInput make_trial_input(const SimConfig& cfg, const CodeFamily& codes, std::uint64_t seed,
                            int n_sym, double snr_db);

/// Fills success, identification and per-satellite errors of a record.
void score(const AcquisitionResult& result, const ChannelRealization& channel, const GridSpec& grid,
           TrialRecord& record);

/// Precomputed receiver state for one configuration.
///
/// B for P rows is the leading P rows of B for the largest P, so kernels and
/// dictionaries are built once for the largest P and sliced.
class Acquirer {
 public:
  explicit Acquirer(const SimConfig& cfg);

  const SimConfig& config() const { return cfg_; }
  const GridSpec& grid() const { return bank_.grid(); }
  const CodeFamily& codes() const { return bank_.codes(); }
  const MatchedFilterBank& bank() const { return bank_; }

  /// Builds the compressive state for each listed P.
  void prepare(const std::vector<long>& p_values);
  bool prepared(long p) const { return cs_.count(p) != 0; }

  const SensingMatrix& sensing(long p) const { return state(p).b; }
  const CompressiveKernels& kernels(long p) const { return state(p).kernels; }
  const Eigen::MatrixXcd& dictionary(long p) const { return state(p).dict; }

  AcquisitionResult acquire_mf(const SampledSignal& x, OpCounter* ops = nullptr) const;
  AcquisitionResult acquire_cs(const SampledSignal& x, long p, std::uint64_t rembo_seed,
                               OpCounter* ops = nullptr) const;

  /// Acquires, times and scores one receiver on a trial.
  TrialRecord run(const TrialInput& input, Receiver receiver, long p) const;

 private:
  struct CsState {
    SensingMatrix b;
    CompressiveKernels kernels;
    Eigen::MatrixXcd dict;
  };
  const CsState& state(long p) const;

  SimConfig cfg_;
  MatchedFilterBank bank_;
  std::map<long, CsState> cs_;
};

/// One seeded trial at cfg.n_sym, cfg.snr_db and (for CS) cfg.p.
TrialRecord run_trial(const SimConfig& cfg, std::uint64_t seed, Receiver receiver);

struct Aggregate {
  std::size_t trials = 0;
  double success_rate = 0.0;
  /// Pooled over every (trial, identified satellite); absent when none.
  std::optional<double> rmse_q_s;
  std::optional<double> rmse_k_rads;
  double identified_fraction = 0.0;
  double mean_ops = 0.0;
  double mean_wall_s = 0.0;
};

/// Throws std::invalid_argument on an empty record set.
Aggregate rmse_aggregate(const std::vector<TrialRecord>& records);

struct SweepRow {
  Receiver receiver = Receiver::MF;
  long p = 0;
  double snr_db = 0.0;
  int n_sym = 1;
  Aggregate agg;
};

/// Monte-Carlo grid over n_sym_list x snr_list x receivers x p_list.
///
/// A trial shares its channel across SNR points and receivers and its noise
/// draw (before scaling) across SNR points.
std::vector<SweepRow> sweep(const SimConfig& cfg,
                            const std::function<void(const SweepRow&)>& on_row = {});

inline constexpr const char* kSweepColumns =
    "receiver,P,snr_db,n_sym,trials,success_rate,rmse_q_s,rmse_k_rads,mean_ops,mean_wall_s,"
    "identified_fraction";

/// Comment header with the full config and conventions, the column line, then rows.
void write_sweep_csv(std::ostream& out, const SimConfig& cfg, const std::vector<SweepRow>& rows);
std::string format_sweep_row(const SweepRow& row);
/// Writes to cfg.output. Throws std::runtime_error when the path is unwritable.
void write_sweep_file(const SimConfig& cfg, const std::vector<SweepRow>& rows);

struct ComplexityEntry {
  Receiver receiver = Receiver::MF;
  Stage stage = Stage::MfCorrelation;
  std::uint64_t measured = 0;
  /// Definitional count where one exists.
  std::optional<std::uint64_t> predicted;
};

struct ComplexityReport {
  long p = 0;
  int n_sym = 1;
  int sparsity = 0;
  long samples_per_symbol = 0;
  long symbol_chips = 0;
  std::size_t bins = 0;
  std::vector<ComplexityEntry> entries;
  std::uint64_t mf_total = 0;
  std::uint64_t cs_total = 0;
  double measured_ratio = 0.0;
  /// P / (I |K| |Q|) + P |S| / M with M in chips.
  double predicted_ratio = 0.0;
};

/// Op counts of one MF and one CS acquisition of trial 0 at cfg.n_sym, cfg.snr_db, cfg.p.
ComplexityReport complexity_report(const SimConfig& cfg);
void write_complexity_csv(std::ostream& out, const ComplexityReport& report);

struct BenchRow {
  Receiver receiver = Receiver::MF;
  long p = 0;
  int n_sym = 1;
  int reps = 0;
  double median_s = 0.0;
  double iqr_s = 0.0;
};

/// Wall-clock time of the acquisition step (signal synthesis and receiver
/// precomputation excluded) for MF and every P in bench_p_list, after one
/// warm-up run, for each n_sym in n_sym_list.
std::vector<BenchRow> bench(const SimConfig& cfg,
                            const std::function<void(const BenchRow&)>& on_row = {});
void write_bench_csv(std::ostream& out, const SimConfig& cfg, const std::vector<BenchRow>& rows);

/// Compiler, CPU and thread information for CSV headers.
std::vector<std::pair<std::string, std::string>> environment_metadata();

}  // namespace gpsacq
