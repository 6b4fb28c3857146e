#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gpsacq/ca_codes.hpp"
#include "gpsacq/channel.hpp"
#include "gpsacq/grid.hpp"
#include "gpsacq/op_count.hpp"

namespace gpsacq {

/// z_{i,k,q}[n] for every satellite, Doppler bin, delay bin and symbol.
/// Storage is symbol-major; within a symbol the flattened bin order of grid.hpp.
class CorrelationTensor {
 public:
  CorrelationTensor() = default;
  CorrelationTensor(const GridSpec& grid, int n_sats, int n_sym);

  const GridSpec& grid() const { return grid_; }
  int n_sats() const { return n_sats_; }
  int n_sym() const { return n_sym_; }
  std::size_t bins() const { return bins_; }

  cdouble& at(const BinIndex& bin, int n) { return values_[n * bins_ + flatten(grid_, bin)]; }
  cdouble at(const BinIndex& bin, int n) const { return values_[n * bins_ + flatten(grid_, bin)]; }
  std::span<cdouble> symbol(int n) { return {values_.data() + n * bins_, bins_}; }
  std::span<const cdouble> symbol(int n) const { return {values_.data() + n * bins_, bins_}; }

 private:
  GridSpec grid_;
  int n_sats_ = 0;
  int n_sym_ = 0;
  std::size_t bins_ = 0;
  std::vector<cdouble> values_;
};

/// Exhaustive bank of I |K| |Q| correlators.
///
/// Kernel (i, k, q) over one symbol window is the spread waveform of code i
/// cyclically delayed by q delay steps and modulated by exp(i k dw t):
///   phi_{i,k,q}[s] = w_i[(s - q step) mod LM] exp(i 2 pi k j s / LM).
/// The correlator output is the raw sum z = sum_s x[nLM + s] conj(phi[s]),
/// so a noiseless on-grid path yields |z| = LM |a| in ideal-pulse mode.
class MatchedFilterBank {
 public:
  MatchedFilterBank(CodeFamily codes, const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  const CodeFamily& codes() const { return codes_; }
  int n_sats() const { return codes_.size(); }
  const std::vector<double>& waveform(int sat) const { return waveforms_.at(sat); }

  /// Digitized kernel phi_{i,k,q} over one symbol.
  Eigen::VectorXcd kernel(const BinIndex& bin) const;

  /// Correlates every symbol of x against every kernel.
  /// Tallies LM MACs per kernel per symbol under Stage::MfCorrelation.
  CorrelationTensor correlate(const SampledSignal& x, OpCounter* ops = nullptr) const;

  /// Same result by one direct inner product per kernel; used as a cross-check.
  CorrelationTensor correlate_direct(const SampledSignal& x) const;

  /// Delay-shifted waveforms of one satellite as rows, |Q| x LM.
  Eigen::MatrixXd shifted_waveforms(int sat) const;
  /// Row vectors cos / sin of 2 pi k j s / LM.
  void doppler_phase(int k, Eigen::RowVectorXd& cos_row, Eigen::RowVectorXd& sin_row) const;

 private:
  CodeFamily codes_;
  GridSpec grid_;
  std::vector<std::vector<double>> waveforms_;
};

/// One-shot convenience wrapper around MatchedFilterBank.
CorrelationTensor correlate_bank(const SampledSignal& x, const CodeFamily& codes,
                                 const GridSpec& grid, OpCounter* ops = nullptr);

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct GramResult {
  Eigen::MatrixXcd gram;
  /// max |G_ab| / sqrt(G_aa G_bb) over a != b.
  double max_offdiag_ratio = 0.0;
};

inline constexpr std::size_t kMaxGramKernels = 2000;

/// Time-domain Gram matrix <phi_a, phi_b> over one symbol for a subset of kernels.
/// Throws CapacityError above kMaxGramKernels kernels.
GramResult gram_matrix(const MatchedFilterBank& bank, std::span<const BinIndex> subset);

/// Noncoherent statistic sum_{n in [begin, end)} |z_{i,k,q}[n]|^2.
std::vector<double> accumulate(const CorrelationTensor& tensor, int n_begin, int n_end,
                               OpCounter* ops = nullptr);

struct PathEstimate {
  int k = 0;
  int q = 0;
  double value = 0.0;
};

struct SatelliteDetection {
  int sat = 0;  // 0-based
  std::vector<PathEstimate> paths;  // strongest first
  double peak = 0.0;
};

struct AcquisitionResult {
  std::vector<SatelliteDetection> satellites;  // strongest first
  /// Fewer distinct satellites than requested were available.
  bool partial = false;
  OpCounter ops;

  std::vector<int> detected_sats() const;  // ascending
  const SatelliteDetection* find(int sat) const;
};

/// Per satellite the top-R bins of a statistic, satellites ranked by their
/// strongest bin, top detect_count returned. Ties go to the lower satellite,
/// then lower Doppler index, then lower delay index.
AcquisitionResult select_paths(std::span<const double> statistic, const GridSpec& grid, int n_sats,
                               int detect_count, int paths, OpCounter* ops = nullptr);

}  // namespace gpsacq
