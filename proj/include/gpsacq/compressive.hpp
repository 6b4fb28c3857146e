#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "gpsacq/ca_codes.hpp"
#include "gpsacq/channel.hpp"
#include "gpsacq/grid.hpp"
#include "gpsacq/mf_receiver.hpp"
#include "gpsacq/op_count.hpp"

namespace gpsacq {

enum class MatrixKind { RandomBinary, RandomGaussian, UserSupplied };

std::string to_string(MatrixKind kind);
MatrixKind parse_matrix_kind(const std::string& text);

/// P x (I |K| |Q|) combination weights. Column order is the flattened bin
/// order of grid.hpp: satellite-major, then Doppler, then delay.
struct SensingMatrix {
  Eigen::MatrixXd entries;
  MatrixKind kind = MatrixKind::RandomBinary;
  std::uint64_t seed = 0;

  long rows() const { return entries.rows(); }
  long cols() const { return entries.cols(); }
};

/// Raised when P exceeds the number of bins, i.e. nothing is compressed.
class NoCompressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// iid +/-1 (binary) or N(0,1) (gaussian) entries, deterministic in seed.
SensingMatrix build_sensing_matrix(long p, long dims, MatrixKind kind, std::uint64_t seed);
SensingMatrix user_sensing_matrix(Eigen::MatrixXd entries);

/// CSV with a "P,dims,kind,seed" header line, its values, then P rows.
void write_sensing_matrix_csv(const SensingMatrix& b, std::ostream& out);
SensingMatrix read_sensing_matrix_csv(std::istream& in);

/// The P randomized correlators psi_p = sum_{i,k,q} b_{p,(i,k,q)} phi_{i,k,q}
/// digitized over one symbol window, stored as real and imaginary tap matrices.
struct CompressiveKernels {
  Eigen::MatrixXd re;  // P x LM
  Eigen::MatrixXd im;  // P x LM
  GridSpec grid;

  long count() const { return re.rows(); }
  long taps() const { return re.cols(); }
};

/// Precomputes the kernels from B and the matched-filter kernel set.
CompressiveKernels build_kernels(const SensingMatrix& b, const MatchedFilterBank& bank);

/// Dictionary handed to the sparse solvers.
///  - Sensing: B itself, i.e. the model c = B y.
///  - Gram: D = Psi^H Phi, the exact noiseless response of the P correlators
///    to each unit-amplitude MF kernel. Equals B G with G the kernel Gram
///    matrix, so it reduces to LM B when G = LM I.
enum class DictionaryKind { Sensing, Gram };

std::string to_string(DictionaryKind kind);
DictionaryKind parse_dictionary_kind(const std::string& text);

/// P x (I |K| |Q|) complex dictionary. The Gram kind costs P single-symbol
/// matched-filter passes and is meant to be built once per B.
Eigen::MatrixXcd recovery_dictionary(DictionaryKind kind, const SensingMatrix& b,
                                     const CompressiveKernels& kernels,
                                     const MatchedFilterBank& bank);

struct CompressedMeasurements {
  Eigen::MatrixXcd c;  // P x n_sym
};

/// c_p[n] = sum_s x[nLM + s] conj(psi_p[s]); tallies n LM P MACs under
/// Stage::CsCompression.
CompressedMeasurements compress(const SampledSignal& x, const CompressiveKernels& kernels,
                                OpCounter* ops = nullptr);

}  // namespace gpsacq
