#include "gpsacq/compressive.hpp"

#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

namespace gpsacq {

std::string to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::RandomBinary: return "random_binary";
    case MatrixKind::RandomGaussian: return "random_gaussian";
    case MatrixKind::UserSupplied: return "user_supplied";
  }
  return "unknown";
}

MatrixKind parse_matrix_kind(const std::string& text) {
  if (text == "random_binary" || text == "binary") return MatrixKind::RandomBinary;
  if (text == "random_gaussian" || text == "gaussian") return MatrixKind::RandomGaussian;
  if (text == "user_supplied" || text == "user") return MatrixKind::UserSupplied;
  throw std::invalid_argument("unknown sensing matrix kind '" + text + "'");
}

std::string to_string(DictionaryKind kind) {
  return kind == DictionaryKind::Sensing ? "sensing" : "gram";
}

DictionaryKind parse_dictionary_kind(const std::string& text) {
  if (text == "sensing") return DictionaryKind::Sensing;
  if (text == "gram") return DictionaryKind::Gram;
  throw std::invalid_argument("unknown dictionary kind '" + text + "'");
}

SensingMatrix build_sensing_matrix(long p, long dims, MatrixKind kind, std::uint64_t seed) {
  if (p < 1 || dims < 1) throw std::invalid_argument("sensing matrix needs P >= 1 and dims >= 1");
  if (p > dims) {
    throw NoCompressionError("P = " + std::to_string(p) + " exceeds the " + std::to_string(dims) +
                             " bins; no compression");
  }
  if (kind == MatrixKind::UserSupplied) {
    throw std::invalid_argument("user-supplied matrices are loaded, not drawn");
  }
  SensingMatrix b;
  b.kind = kind;
  b.seed = seed;
  b.entries.resize(p, dims);
  std::mt19937_64 rng(seed);
  // Row-major draw order so a prefix of rows does not depend on dims.
  if (kind == MatrixKind::RandomBinary) {
    std::bernoulli_distribution coin(0.5);
    for (long r = 0; r < p; ++r)
      for (long c = 0; c < dims; ++c) b.entries(r, c) = coin(rng) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (long r = 0; r < p; ++r)
      for (long c = 0; c < dims; ++c) b.entries(r, c) = gauss(rng);
  }
  return b;
}

SensingMatrix user_sensing_matrix(Eigen::MatrixXd entries) {
  if (entries.rows() < 1 || entries.cols() < 1) throw std::invalid_argument("empty sensing matrix");
  if (entries.rows() > entries.cols()) {
    throw NoCompressionError("user matrix has more rows than columns; no compression");
  }
  if (!entries.allFinite()) throw std::invalid_argument("sensing matrix has non-finite entries");
  SensingMatrix b;
  b.kind = MatrixKind::UserSupplied;
  b.entries = std::move(entries);
  return b;
}

void write_sensing_matrix_csv(const SensingMatrix& b, std::ostream& out) {
  out << "P,dims,kind,seed\n"
      << b.rows() << ',' << b.cols() << ',' << to_string(b.kind) << ',' << b.seed << '\n';
  out.precision(17);
  for (long r = 0; r < b.rows(); ++r) {
    for (long c = 0; c < b.cols(); ++c) {
      if (c) out << ',';
      out << b.entries(r, c);
    }
    out << '\n';
  }
}

SensingMatrix read_sensing_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("P,dims,kind,seed", 0) != 0) {
    throw std::invalid_argument("sensing matrix CSV lacks the P,dims,kind,seed header");
  }
  if (!std::getline(in, line)) throw std::invalid_argument("sensing matrix CSV truncated");
  std::istringstream meta(line);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(meta, field, ',')) fields.push_back(field);
  if (fields.size() != 4) throw std::invalid_argument("malformed sensing matrix header values");
  const long p = std::stol(fields[0]);
  const long dims = std::stol(fields[1]);
  SensingMatrix b;
  b.kind = parse_matrix_kind(fields[2]);
  b.seed = std::stoull(fields[3]);
  b.entries.resize(p, dims);
  for (long r = 0; r < p; ++r) {
    if (!std::getline(in, line)) throw std::invalid_argument("sensing matrix CSV has too few rows");
    std::istringstream row(line);
    for (long c = 0; c < dims; ++c) {
      if (!std::getline(row, field, ',')) throw std::invalid_argument("sensing matrix row too short");
      b.entries(r, c) = std::stod(field);
    }
  }
  return b;
}

CompressiveKernels build_kernels(const SensingMatrix& b, const MatchedFilterBank& bank) {
  const GridSpec& grid = bank.grid();
  const long lm = grid.samples_per_symbol();
  const int n_q = grid.n_delays;
  const int n_k = grid.n_dopplers();
  const long p = b.rows();
  if (static_cast<std::size_t>(b.cols()) != total_bins(grid, bank.n_sats())) {
    throw std::invalid_argument("sensing matrix columns do not match I |K| |Q|");
  }
  std::vector<Eigen::MatrixXd> shifted(static_cast<std::size_t>(bank.n_sats()));
  for (int i = 0; i < bank.n_sats(); ++i) shifted[i] = bank.shifted_waveforms(i);

  CompressiveKernels out;
  out.grid = grid;
  out.re = Eigen::MatrixXd::Zero(p, lm);
  out.im = Eigen::MatrixXd::Zero(p, lm);
  Eigen::MatrixXd envelope(p, lm);
  Eigen::RowVectorXd c, s;
  for (int ki = 0; ki < n_k; ++ki) {
    // Sum over satellites and delays first; the Doppler carrier is shared.
    envelope.setZero();
    for (int i = 0; i < bank.n_sats(); ++i) {
      const long col = static_cast<long>(flatten(grid, {i, ki - grid.doppler_half, 0}));
      envelope.noalias() += b.entries.middleCols(col, n_q) * shifted[i];
    }
    bank.doppler_phase(ki - grid.doppler_half, c, s);
    out.re += (envelope.array().rowwise() * c.array()).matrix();
    out.im += (envelope.array().rowwise() * s.array()).matrix();
  }
  return out;
}

Eigen::MatrixXcd recovery_dictionary(DictionaryKind kind, const SensingMatrix& b,
                                     const CompressiveKernels& kernels,
                                     const MatchedFilterBank& bank) {
  if (kind == DictionaryKind::Sensing) return b.entries.cast<cdouble>();
  const long lm = kernels.taps();
  const long p = kernels.count();
  if (lm != bank.grid().samples_per_symbol()) {
    throw std::invalid_argument("kernels and matched-filter bank use different grids");
  }
  // Treat each kernel as one symbol of a signal; the bank then yields
  // <psi_p, phi_b> for every bin b, and D is its conjugate.
  SampledSignal probe;
  probe.n_sym = static_cast<int>(p);
  probe.samples_per_symbol = static_cast<int>(lm);
  probe.samples.resize(static_cast<std::size_t>(p * lm));
  for (long r = 0; r < p; ++r) {
    for (long s = 0; s < lm; ++s) probe.samples[static_cast<std::size_t>(r * lm + s)] = {kernels.re(r, s), kernels.im(r, s)};
  }
  const CorrelationTensor z = bank.correlate(probe);
  Eigen::MatrixXcd dict(p, static_cast<long>(z.bins()));
  for (long r = 0; r < p; ++r) {
    const auto row = z.symbol(static_cast<int>(r));
    for (std::size_t col = 0; col < row.size(); ++col) dict(r, static_cast<long>(col)) = std::conj(row[col]);
  }
  return dict;
}

CompressedMeasurements compress(const SampledSignal& x, const CompressiveKernels& kernels,
                                OpCounter* ops) {
  const long lm = kernels.taps();
  if (x.n_sym < 1) throw std::invalid_argument("signal holds no symbols");
  if (x.samples_per_symbol != lm || static_cast<long>(x.samples.size()) < x.n_sym * lm) {
    throw std::invalid_argument("signal length does not match the kernel windows");
  }
  Eigen::MatrixXd xr(lm, x.n_sym), xi(lm, x.n_sym);
  for (int n = 0; n < x.n_sym; ++n) {
    const cdouble* sym = x.symbol(n);
    for (long s = 0; s < lm; ++s) {
      xr(s, n) = sym[s].real();
      xi(s, n) = sym[s].imag();
    }
  }
  // conj(psi) x with psi = A + iB: (A xr + B xi) + i (A xi - B xr)
  CompressedMeasurements out;
  Eigen::MatrixXd re = kernels.re * xr;
  re.noalias() += kernels.im * xi;
  Eigen::MatrixXd im = kernels.re * xi;
  im.noalias() -= kernels.im * xr;
  out.c.resize(kernels.count(), x.n_sym);
  out.c.real() = re;
  out.c.imag() = im;
  tally(ops, Stage::CsCompression,
        static_cast<std::uint64_t>(x.n_sym) * static_cast<std::uint64_t>(lm) *
            static_cast<std::uint64_t>(kernels.count()));
  return out;
}

}  // namespace gpsacq
