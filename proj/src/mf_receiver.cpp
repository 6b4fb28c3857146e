#include "gpsacq/mf_receiver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

namespace gpsacq {
namespace {

// Working-set cap for the Doppler-demodulated symbol block.
constexpr std::size_t kBlockBytes = std::size_t{64} << 20;

long wrap(long index, long period) {
  const long r = index % period;
  return r < 0 ? r + period : r;
}

}  // namespace

CorrelationTensor::CorrelationTensor(const GridSpec& grid, int n_sats, int n_sym)
    : grid_(grid),
      n_sats_(n_sats),
      n_sym_(n_sym),
      bins_(total_bins(grid, n_sats)),
      values_(bins_ * static_cast<std::size_t>(n_sym)) {}

MatchedFilterBank::MatchedFilterBank(CodeFamily codes, const GridSpec& grid)
    : codes_(std::move(codes)), grid_(grid) {
  grid_.validate();
  if (codes_.m0 != grid_.m0 || codes_.n_periods != grid_.n_periods) {
    throw std::invalid_argument("code family does not match the grid code dimensions");
  }
  waveforms_.reserve(static_cast<std::size_t>(codes_.size()));
  for (const auto& code : codes_.codes) waveforms_.push_back(spread_waveform(code, grid_));
}

Eigen::MatrixXd MatchedFilterBank::shifted_waveforms(int sat) const {
  const long lm = grid_.samples_per_symbol();
  const long step = grid_.delay_step_samples();
  const auto& w = waveforms_.at(sat);
  Eigen::MatrixXd out(grid_.n_delays, lm);
  for (int q = 0; q < grid_.n_delays; ++q) {
    const long shift = q * step;
    for (long s = 0; s < lm; ++s) out(q, s) = w[static_cast<std::size_t>(wrap(s - shift, lm))];
  }
  return out;
}

void MatchedFilterBank::doppler_phase(int k, Eigen::RowVectorXd& cos_row,
                                      Eigen::RowVectorXd& sin_row) const {
  const long lm = grid_.samples_per_symbol();
  const long j = grid_.doppler_multiple();
  cos_row.resize(lm);
  sin_row.resize(lm);
  for (long s = 0; s < lm; ++s) {
    const long turns = wrap(static_cast<long>(k) * j * s, lm);
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(turns) / static_cast<double>(lm);
    cos_row(s) = std::cos(theta);
    sin_row(s) = std::sin(theta);
  }
}

Eigen::VectorXcd MatchedFilterBank::kernel(const BinIndex& bin) const {
  const long lm = grid_.samples_per_symbol();
  const long shift = static_cast<long>(bin.q) * grid_.delay_step_samples();
  Eigen::RowVectorXd c, s;
  doppler_phase(bin.k, c, s);
  const auto& w = waveforms_.at(bin.sat);
  Eigen::VectorXcd out(lm);
  for (long t = 0; t < lm; ++t) {
    out(t) = w[static_cast<std::size_t>(wrap(t - shift, lm))] * cdouble{c(t), s(t)};
  }
  return out;
}

CorrelationTensor MatchedFilterBank::correlate(const SampledSignal& x, OpCounter* ops) const {
  const long lm = grid_.samples_per_symbol();
  const int n_k = grid_.n_dopplers();
  const int n_q = grid_.n_delays;
  if (x.n_sym < 1) throw std::invalid_argument("signal holds no symbols");
  if (static_cast<long>(x.samples.size()) < x.n_sym * lm) {
    throw std::invalid_argument("signal is shorter than n_sym symbol windows");
  }
  CorrelationTensor tensor(grid_, n_sats(), x.n_sym);

  std::vector<Eigen::RowVectorXd> cos_rows(n_k), sin_rows(n_k);
  for (int ki = 0; ki < n_k; ++ki) doppler_phase(ki - grid_.doppler_half, cos_rows[ki], sin_rows[ki]);

  const std::size_t per_symbol = static_cast<std::size_t>(lm) * 2 * n_k * sizeof(double);
  const int chunk = static_cast<int>(std::clamp<std::size_t>(kBlockBytes / per_symbol, 1, x.n_sym));

  std::vector<Eigen::MatrixXd> shifted(static_cast<std::size_t>(n_sats()));
  for (int i = 0; i < n_sats(); ++i) shifted[i] = shifted_waveforms(i);

  Eigen::MatrixXd block;
  Eigen::MatrixXd z;
  for (int n0 = 0; n0 < x.n_sym; n0 += chunk) {
    const int nc = std::min(chunk, x.n_sym - n0);
    // Columns (k, n) hold the demodulated symbol as a real/imag pair.
    block.resize(lm, 2L * n_k * nc);
    for (int ki = 0; ki < n_k; ++ki) {
      for (int nl = 0; nl < nc; ++nl) {
        const cdouble* sym = x.symbol(n0 + nl);
        const long col = 2L * (ki * nc + nl);
        for (long s = 0; s < lm; ++s) {
          const double c = cos_rows[ki](s), sn = sin_rows[ki](s);
          block(s, col) = sym[s].real() * c + sym[s].imag() * sn;
          block(s, col + 1) = sym[s].imag() * c - sym[s].real() * sn;
        }
      }
    }
    for (int i = 0; i < n_sats(); ++i) {
      z.noalias() = shifted[i] * block;
      for (int ki = 0; ki < n_k; ++ki) {
        for (int nl = 0; nl < nc; ++nl) {
          const long col = 2L * (ki * nc + nl);
          for (int q = 0; q < n_q; ++q) {
            tensor.at({i, ki - grid_.doppler_half, q}, n0 + nl) = {z(q, col), z(q, col + 1)};
          }
        }
      }
    }
  }
  tally(ops, Stage::MfCorrelation,
        static_cast<std::uint64_t>(x.n_sym) * tensor.bins() * static_cast<std::uint64_t>(lm));
  return tensor;
}

CorrelationTensor MatchedFilterBank::correlate_direct(const SampledSignal& x) const {
  const long lm = grid_.samples_per_symbol();
  if (static_cast<long>(x.samples.size()) < x.n_sym * lm) {
    throw std::invalid_argument("signal is shorter than n_sym symbol windows");
  }
  CorrelationTensor tensor(grid_, n_sats(), x.n_sym);
  for (std::size_t b = 0; b < tensor.bins(); ++b) {
    const BinIndex bin = unflatten(grid_, b);
    const Eigen::VectorXcd phi = kernel(bin);
    for (int n = 0; n < x.n_sym; ++n) {
      Eigen::Map<const Eigen::VectorXcd> win(x.symbol(n), lm);
      // sum_s x[s] conj(phi[s])
      tensor.at(bin, n) = phi.dot(win);
    }
  }
  return tensor;
}

CorrelationTensor correlate_bank(const SampledSignal& x, const CodeFamily& codes,
                                 const GridSpec& grid, OpCounter* ops) {
  return MatchedFilterBank(codes, grid).correlate(x, ops);
}

GramResult gram_matrix(const MatchedFilterBank& bank, std::span<const BinIndex> subset) {
  if (subset.size() > kMaxGramKernels) {
    throw CapacityError("Gram matrix limited to " + std::to_string(kMaxGramKernels) +
                        " kernels; sample kernel pairs instead");
  }
  const long lm = bank.grid().samples_per_symbol();
  const long n = static_cast<long>(subset.size());
  Eigen::MatrixXcd kernels(lm, n);
  for (long a = 0; a < n; ++a) kernels.col(a) = bank.kernel(subset[a]);
  GramResult out;
  out.gram = kernels.adjoint() * kernels;
  for (long a = 0; a < n; ++a) {
    for (long b = 0; b < n; ++b) {
      if (a == b) continue;
      const double denom = std::sqrt(out.gram(a, a).real() * out.gram(b, b).real());
      out.max_offdiag_ratio = std::max(out.max_offdiag_ratio, std::abs(out.gram(a, b)) / denom);
    }
  }
  return out;
}

std::vector<double> accumulate(const CorrelationTensor& tensor, int n_begin, int n_end,
                               OpCounter* ops) {
  if (n_begin < 0 || n_end > tensor.n_sym() || n_begin >= n_end) {
    throw std::invalid_argument("accumulation range is empty or outside the tensor");
  }
  std::vector<double> stat(tensor.bins(), 0.0);
  for (int n = n_begin; n < n_end; ++n) {
    const auto sym = tensor.symbol(n);
    for (std::size_t b = 0; b < stat.size(); ++b) stat[b] += std::norm(sym[b]);
  }
  tally(ops, Stage::MfAccumulation, static_cast<std::uint64_t>(n_end - n_begin) * stat.size());
  return stat;
}

std::vector<int> AcquisitionResult::detected_sats() const {
  std::vector<int> out;
  out.reserve(satellites.size());
  for (const auto& s : satellites) out.push_back(s.sat);
  std::sort(out.begin(), out.end());
  return out;
}

const SatelliteDetection* AcquisitionResult::find(int sat) const {
  for (const auto& s : satellites) {
    if (s.sat == sat) return &s;
  }
  return nullptr;
}

AcquisitionResult select_paths(std::span<const double> statistic, const GridSpec& grid, int n_sats,
                               int detect_count, int paths, OpCounter* ops) {
  const std::size_t per_sat = static_cast<std::size_t>(grid.bins_per_satellite());
  if (n_sats < 1 || statistic.size() != per_sat * n_sats) {
    throw std::invalid_argument("statistic size does not match the grid");
  }
  if (detect_count < 0 || detect_count > n_sats) {
    throw std::invalid_argument("detect_count must lie in 0..I");
  }
  if (paths < 1) throw std::invalid_argument("paths must be >= 1");
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(paths), per_sat);

  std::uint64_t comparisons = 0;
  std::vector<SatelliteDetection> all(static_cast<std::size_t>(n_sats));
  std::vector<std::size_t> order(per_sat);
  for (int i = 0; i < n_sats; ++i) {
    const double* v = statistic.data() + per_sat * i;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        ++comparisons;
                        return v[a] > v[b] || (v[a] == v[b] && a < b);
                      });
    auto& det = all[i];
    det.sat = i;
    for (std::size_t r = 0; r < keep; ++r) {
      const BinIndex bin = unflatten(grid, per_sat * i + order[r]);
      det.paths.push_back({bin.k, bin.q, v[order[r]]});
    }
    det.peak = det.paths.front().value;
  }
  std::stable_sort(all.begin(), all.end(), [&](const SatelliteDetection& a, const SatelliteDetection& b) {
    ++comparisons;
    return a.peak > b.peak;
  });
  AcquisitionResult result;
  result.satellites.assign(all.begin(), all.begin() + detect_count);
  tally(ops, Stage::MfPathSelection, comparisons);
  return result;
}

}  // namespace gpsacq
