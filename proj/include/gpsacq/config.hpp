#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gpsacq/channel.hpp"
#include "gpsacq/compressive.hpp"
#include "gpsacq/grid.hpp"

namespace gpsacq {

enum class Receiver { MF, CS };
enum class Solver { Omp, Rembo };

std::string to_string(Receiver r);
std::string to_string(Solver s);
Receiver parse_receiver(const std::string& text);
Solver parse_solver(const std::string& text);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a simulation, sweep, complexity report or benchmark needs.
///
/// Read from flat `key = value` text; `#` starts a comment. Lists are
/// comma separated. Unknown keys are rejected.
struct SimConfig {
  // Codes and grid.
  int m0 = 1023;
  int n_periods = 1;
  int oversample = 2;
  double delta_tau_chips = 0.5;
  double doppler_step_hz = 1000.0;
  double tau_max_chips = 20.0;
  double doppler_max_hz = 5000.0;
  PulseKind pulse = PulseKind::Ideal;
  double tg_chips = 8.0;

  // Channel.
  int i_total = 24;
  int i_active = 4;
  int paths_r = 2;
  bool on_grid = true;

  // Single-run settings.
  int n_sym = 1;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  Receiver receiver = Receiver::CS;

  // Compressive receiver.
  long p = 64;
  MatrixKind matrix = MatrixKind::RandomBinary;
  /// Seed of B. 0 derives it from `seed`.
  std::uint64_t matrix_seed = 0;
  /// CSV written by write_sensing_matrix_csv; overrides matrix/p when set.
  std::string matrix_file;
  DictionaryKind dictionary = DictionaryKind::Gram;
  Solver solver = Solver::Omp;
  /// Known sparsity |S|; 0 means i_active * paths_r.
  int sparsity = 0;
  double stop_tol = 0.0;
  bool ctf = true;
  double rank_tol = 1e-6;
  /// Cap on the CTF rank: -1 none, 0 the sparsity, otherwise the value.
  int ctf_max_rank = 0;
  int boosts = 20;

  // Sweeps.
  std::vector<double> snr_list{-30, -25, -20, -15, -10, -5, 0};
  std::vector<long> p_list{80, 120, 240, 360};
  std::vector<int> n_sym_list{1, 50};
  std::vector<Receiver> receivers{Receiver::MF, Receiver::CS};
  int trials = 200;
  std::string output = "sweep.csv";

  // Benchmark.
  std::vector<long> bench_p_list{20, 40, 80, 120, 240, 360, 480};
  int bench_reps = 10;

  /// Sets one key from its text value. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  GridSpec grid() const;
  ChannelParams channel(int n) const;
  int effective_sparsity() const { return sparsity > 0 ? sparsity : i_active * paths_r; }
  /// Throws ConfigError on inconsistent settings, before any computation.
  void validate() const;
};

SimConfig parse_config(std::istream& in);
SimConfig load_config(const std::string& path);

/// Long-symbol dimensions: N = 20 code periods, 500 Hz Doppler step and
/// +/-2.5 kHz Doppler span.
void apply_paper_scale(SimConfig& cfg);

}  // namespace gpsacq
