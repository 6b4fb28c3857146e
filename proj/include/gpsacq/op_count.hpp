#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace gpsacq {

/// Processing stages that carry an operation tally.
enum class Stage : std::size_t {
  MfCorrelation,
  MfAccumulation,
  MfPathSelection,
  CsCompression,
  CsCovariance,
  CsEigen,
  OmpResidual,       // OMP.1
  OmpInnerProducts,  // OMP.2
  OmpMaxSelection,   // OMP.3
  OmpLeastSquares,   // OMP.4
  OmpStopping,       // OMP.5
  Count
};

inline constexpr std::size_t kStageCount = static_cast<std::size_t>(Stage::Count);

std::string_view stage_name(Stage stage);

/// Per-stage multiply-accumulate / comparison counts.
///
/// Correlation-type stages count complex-by-real or complex-by-complex
/// MACs; selection stages count comparisons actually performed.
class OpCounter {
 public:
  void add(Stage stage, std::uint64_t n) { counts_[static_cast<std::size_t>(stage)] += n; }
  std::uint64_t get(Stage stage) const { return counts_[static_cast<std::size_t>(stage)]; }
  std::uint64_t total() const;
  void reset() { counts_.fill(0); }

  OpCounter& operator+=(const OpCounter& other);

 private:
  std::array<std::uint64_t, kStageCount> counts_{};
};

/// Adds to an optional counter.
inline void tally(OpCounter* ops, Stage stage, std::uint64_t n) {
  if (ops != nullptr) ops->add(stage, n);
}

}  // namespace gpsacq
