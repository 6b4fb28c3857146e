#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gpsacq/compressive.hpp"
#include "gpsacq/grid.hpp"
#include "gpsacq/mf_receiver.hpp"
#include "gpsacq/op_count.hpp"

namespace gpsacq {

/// Measurement frame C of the jointly sparse problem C = B Y.
struct MmvProblem {
  Eigen::MatrixXcd c;  // P x d
  /// Eigenvalues of R_cc kept by the reduction, descending (empty in raw mode).
  std::vector<double> eigenvalues;
  /// All measurements were zero; nothing to recover.
  bool empty = false;
};

/// Passes the P x n_sym measurements through unchanged.
MmvProblem raw_problem(const CompressedMeasurements& m);

/// Continuous-to-finite reduction: R_cc = sum_n c[n] c[n]^H = C C^H with
/// C = eigenvectors scaled by sqrt(eigenvalue), keeping eigenvalues above
/// rank_tol * lambda_max and at most max_rank of them (0 = no cap).
MmvProblem ctf_reduce(const CompressedMeasurements& m, double rank_tol, std::size_t max_rank = 0,
                      OpCounter* ops = nullptr);

struct SupportEstimate {
  /// Flattened bin indices, ascending.
  std::vector<std::size_t> indices;
  /// Least-squares Y restricted to the support, rows aligned with indices.
  Eigen::MatrixXcd coefficients;
  double residual_norm = 0.0;
  /// Atoms in the order they were selected.
  std::vector<std::size_t> selection_order;
  /// Residual norm before the first and after every iteration.
  std::vector<double> residual_history;
  /// Number of single-vector OMP runs (ReMBo boosts, or 1).
  std::size_t smv_solves = 0;
};

/// Ridge factor applied to the normal equations when the selected columns are rank deficient.
inline constexpr double kLeastSquaresRidge = 1e-12;

/// Least squares of C on the given columns of the dictionary D. Uses a
/// rank-revealing QR and falls back to (D_S^H D_S + 1e-12 tr(D_S^H D_S) I)^-1 D_S^H C
/// when D_S is rank deficient.
Eigen::MatrixXcd restricted_least_squares(const Eigen::MatrixXcd& dict,
                                          const std::vector<std::size_t>& columns,
                                          const Eigen::MatrixXcd& c);
Eigen::MatrixXcd restricted_least_squares(const Eigen::MatrixXd& dict,
                                          const std::vector<std::size_t>& columns,
                                          const Eigen::MatrixXcd& c);

// Every solver accepts either the real sensing matrix B or a complex
// dictionary such as recovery_dictionary(); real input is promoted.

/// Single-vector orthogonal matching pursuit.
///
/// Each iteration runs the five steps: residual update (OMP.1), inner
/// products of the residual with every atom (OMP.2), selection of the atom
/// with the largest column-normalized score with ties to the lowest index
/// (OMP.3), least-squares refit on the support (OMP.4), and the stopping
/// test (OMP.5): at most `sparsity` atoms, or residual <= stop_tol * ||c||.
SupportEstimate omp_smv(const Eigen::MatrixXcd& dict, const Eigen::VectorXcd& c,
                        std::size_t sparsity, double stop_tol = 0.0, OpCounter* ops = nullptr);
SupportEstimate omp_smv(const Eigen::MatrixXd& dict, const Eigen::VectorXcd& c,
                        std::size_t sparsity, double stop_tol = 0.0, OpCounter* ops = nullptr);

/// Simultaneous OMP; atom score sum_d |B_j^H R_d|^2 / ||B_j||^2.
SupportEstimate omp_mmv(const Eigen::MatrixXcd& dict, const Eigen::MatrixXcd& c,
                        std::size_t sparsity, double stop_tol = 0.0, OpCounter* ops = nullptr);
SupportEstimate omp_mmv(const Eigen::MatrixXd& dict, const Eigen::MatrixXcd& c,
                        std::size_t sparsity, double stop_tol = 0.0, OpCounter* ops = nullptr);

/// Reduce-MMV-and-boost: OMP on C alpha for standard gaussian alpha, support
/// validated by the least-squares residual of the full C. Stops at the first
/// support with residual <= max(stop_tol ||C||, 1e-8), otherwise returns the
/// support with the smallest residual after `boosts` draws.
SupportEstimate rembo(const Eigen::MatrixXcd& dict, const Eigen::MatrixXcd& c,
                      std::size_t sparsity, std::size_t boosts, std::uint64_t seed,
                      double stop_tol = 0.0, OpCounter* ops = nullptr);
SupportEstimate rembo(const Eigen::MatrixXd& dict, const Eigen::MatrixXcd& c,
                      std::size_t sparsity, std::size_t boosts, std::uint64_t seed,
                      double stop_tol = 0.0, OpCounter* ops = nullptr);

/// Maps a support onto satellites and delay-Doppler bins. Satellites rank by
/// their largest coefficient energy (summed over columns), ties as in select_paths.
AcquisitionResult support_to_acquisition(const SupportEstimate& est, const GridSpec& grid,
                                         int n_sats, int detect_count, int paths);

}  // namespace gpsacq
