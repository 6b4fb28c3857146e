#include "gpsacq/op_count.hpp"

#include <numeric>

namespace gpsacq {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::MfCorrelation: return "mf_correlation";
    case Stage::MfAccumulation: return "mf_accumulation";
    case Stage::MfPathSelection: return "mf_path_selection";
    case Stage::CsCompression: return "cs_compression";
    case Stage::CsCovariance: return "cs_covariance";
    case Stage::CsEigen: return "cs_eigen";
    case Stage::OmpResidual: return "omp1_residual_update";
    case Stage::OmpInnerProducts: return "omp2_inner_products";
    case Stage::OmpMaxSelection: return "omp3_max_selection";
    case Stage::OmpLeastSquares: return "omp4_least_squares";
    case Stage::OmpStopping: return "omp5_stopping";
    case Stage::Count: break;
  }
  return "unknown";
}

std::uint64_t OpCounter::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

OpCounter& OpCounter::operator+=(const OpCounter& other) {
  for (std::size_t i = 0; i < kStageCount; ++i) counts_[i] += other.counts_[i];
  return *this;
}

}  // namespace gpsacq
