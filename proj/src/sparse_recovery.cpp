#include "gpsacq/sparse_recovery.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gpsacq {
namespace {

Eigen::MatrixXcd gather_columns(const Eigen::MatrixXcd& dict, const std::vector<std::size_t>& columns) {
  Eigen::MatrixXcd out(dict.rows(), static_cast<long>(columns.size()));
  for (std::size_t s = 0; s < columns.size(); ++s) out.col(static_cast<long>(s)) = dict.col(static_cast<long>(columns[s]));
  return out;
}

void sort_support(SupportEstimate& est) {
  std::vector<std::size_t> perm(est.indices.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return est.indices[a] < est.indices[b]; });
  std::vector<std::size_t> sorted(perm.size());
  Eigen::MatrixXcd coeffs(est.coefficients.rows(), est.coefficients.cols());
  for (std::size_t r = 0; r < perm.size(); ++r) {
    sorted[r] = est.indices[perm[r]];
    coeffs.row(static_cast<long>(r)) = est.coefficients.row(static_cast<long>(perm[r]));
  }
  est.indices = std::move(sorted);
  est.coefficients = std::move(coeffs);
}

// The OMP loop shared by the single- and multiple-vector solvers.
SupportEstimate omp_core(const Eigen::MatrixXcd& dict, const Eigen::VectorXd& col_norm2,
                         const Eigen::MatrixXcd& c, std::size_t sparsity, double stop_tol,
                         OpCounter* ops) {
  const long p = dict.rows();
  const long n_atoms = dict.cols();
  const long d = c.cols();
  if (c.rows() != p) throw std::invalid_argument("measurement rows do not match the dictionary");
  if (sparsity > static_cast<std::size_t>(p)) {
    throw std::invalid_argument("sparsity exceeds the number of measurements");
  }
  const auto up = [](long v) { return static_cast<std::uint64_t>(v); };

  SupportEstimate est;
  est.smv_solves = 1;
  const double c_norm = c.norm();
  Eigen::MatrixXcd residual = c;
  double r_norm = c_norm;
  est.residual_history.push_back(r_norm);
  std::vector<char> taken(static_cast<std::size_t>(n_atoms), 0);
  Eigen::MatrixXcd g;

  while (true) {
    // OMP.5
    tally(ops, Stage::OmpStopping, up(p * d));
    if (r_norm <= stop_tol * c_norm || est.indices.size() >= sparsity) break;

    // OMP.2
    g.noalias() = dict.adjoint() * residual;
    tally(ops, Stage::OmpInnerProducts, up(n_atoms * p * d));

    // OMP.3
    long best = -1;
    double best_score = 0.0;
    for (long j = 0; j < n_atoms; ++j) {
      if (taken[static_cast<std::size_t>(j)] || col_norm2(j) <= 0.0) continue;
      const double score = g.row(j).squaredNorm() / col_norm2(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    tally(ops, Stage::OmpMaxSelection, up(n_atoms));
    if (best < 0) break;
    taken[static_cast<std::size_t>(best)] = 1;
    est.indices.push_back(static_cast<std::size_t>(best));
    est.selection_order.push_back(static_cast<std::size_t>(best));

    // OMP.4
    const long s = static_cast<long>(est.indices.size());
    est.coefficients = restricted_least_squares(dict, est.indices, c);
    tally(ops, Stage::OmpLeastSquares, up(p * s * s + p * s * d));

    // OMP.1
    residual = c;
    residual.noalias() -= gather_columns(dict, est.indices) * est.coefficients;
    tally(ops, Stage::OmpResidual, up(p * s * d));
    r_norm = residual.norm();
    est.residual_history.push_back(r_norm);
  }
  est.residual_norm = r_norm;
  if (est.indices.empty()) est.coefficients.resize(0, d);
  sort_support(est);
  return est;
}

Eigen::VectorXd column_norms2(const Eigen::MatrixXcd& dict) { return dict.colwise().squaredNorm().transpose(); }

}  // namespace

MmvProblem raw_problem(const CompressedMeasurements& m) {
  MmvProblem out;
  out.c = m.c;
  out.empty = m.c.size() == 0 || m.c.norm() == 0.0;
  return out;
}

MmvProblem ctf_reduce(const CompressedMeasurements& m, double rank_tol, std::size_t max_rank,
                      OpCounter* ops) {
  const long p = m.c.rows();
  const long n = m.c.cols();
  if (n < 1) throw std::invalid_argument("ctf_reduce needs at least one measurement vector");
  if (rank_tol < 0) throw std::invalid_argument("rank_tol must be non-negative");
  MmvProblem out;
  if (m.c.norm() == 0.0) {
    out.empty = true;
    out.c.resize(p, 0);
    return out;
  }
  const auto up = [](long v) { return static_cast<std::uint64_t>(v); };
  // R_cc = c c^H shares its nonzero spectrum with c^H c; use the smaller one.
  const bool thin = n <= p;
  Eigen::MatrixXcd gram = thin ? Eigen::MatrixXcd(m.c.adjoint() * m.c) : Eigen::MatrixXcd(m.c * m.c.adjoint());
  tally(ops, Stage::CsCovariance, thin ? up(n * n * p) : up(n * p * p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  const long dim = gram.rows();
  tally(ops, Stage::CsEigen, up(dim * dim * dim));
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double lambda_max = lambda(dim - 1);
  std::vector<long> keep;
  for (long e = dim - 1; e >= 0; --e) {
    if (lambda(e) <= rank_tol * lambda_max || lambda(e) <= 0.0) break;
    if (max_rank != 0 && keep.size() >= max_rank) break;
    keep.push_back(e);
  }
  out.c.resize(p, static_cast<long>(keep.size()));
  for (std::size_t col = 0; col < keep.size(); ++col) {
    const long e = keep[col];
    out.eigenvalues.push_back(lambda(e));
    if (thin) {
      // u sqrt(lambda) = c v
      out.c.col(static_cast<long>(col)) = m.c * eig.eigenvectors().col(e);
    } else {
      out.c.col(static_cast<long>(col)) = eig.eigenvectors().col(e) * std::sqrt(lambda(e));
    }
  }
  return out;
}

Eigen::MatrixXcd restricted_least_squares(const Eigen::MatrixXcd& dict,
                                          const std::vector<std::size_t>& columns,
                                          const Eigen::MatrixXcd& c) {
  const long s = static_cast<long>(columns.size());
  if (s == 0) return Eigen::MatrixXcd(0, c.cols());
  const Eigen::MatrixXcd sub = gather_columns(dict, columns);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(sub);
  if (qr.rank() == s) return qr.solve(c);
  Eigen::MatrixXcd normal = sub.adjoint() * sub;
  const double ridge = kLeastSquaresRidge * normal.trace().real();
  normal.diagonal().array() += ridge;
  return Eigen::LDLT<Eigen::MatrixXcd>(normal).solve(sub.adjoint() * c);
}

Eigen::MatrixXcd restricted_least_squares(const Eigen::MatrixXd& dict,
                                          const std::vector<std::size_t>& columns,
                                          const Eigen::MatrixXcd& c) {
  return restricted_least_squares(Eigen::MatrixXcd(dict.cast<cdouble>()), columns, c);
}

SupportEstimate omp_smv(const Eigen::MatrixXcd& dict, const Eigen::VectorXcd& c,
                        std::size_t sparsity, double stop_tol, OpCounter* ops) {
  return omp_core(dict, column_norms2(dict), c, sparsity, stop_tol, ops);
}

SupportEstimate omp_mmv(const Eigen::MatrixXcd& dict, const Eigen::MatrixXcd& c,
                        std::size_t sparsity, double stop_tol, OpCounter* ops) {
  return omp_core(dict, column_norms2(dict), c, sparsity, stop_tol, ops);
}

SupportEstimate omp_smv(const Eigen::MatrixXd& dict, const Eigen::VectorXcd& c,
                        std::size_t sparsity, double stop_tol, OpCounter* ops) {
  return omp_smv(Eigen::MatrixXcd(dict.cast<cdouble>()), c, sparsity, stop_tol, ops);
}

SupportEstimate omp_mmv(const Eigen::MatrixXd& dict, const Eigen::MatrixXcd& c,
                        std::size_t sparsity, double stop_tol, OpCounter* ops) {
  return omp_mmv(Eigen::MatrixXcd(dict.cast<cdouble>()), c, sparsity, stop_tol, ops);
}

SupportEstimate rembo(const Eigen::MatrixXd& dict, const Eigen::MatrixXcd& c,
                      std::size_t sparsity, std::size_t boosts, std::uint64_t seed,
                      double stop_tol, OpCounter* ops) {
  return rembo(Eigen::MatrixXcd(dict.cast<cdouble>()), c, sparsity, boosts, seed, stop_tol, ops);
}

SupportEstimate rembo(const Eigen::MatrixXcd& dict, const Eigen::MatrixXcd& c,
                      std::size_t sparsity, std::size_t boosts, std::uint64_t seed,
                      double stop_tol, OpCounter* ops) {
  if (boosts < 1) throw std::invalid_argument("boosts must be >= 1");
  const Eigen::VectorXd norms = column_norms2(dict);
  const double threshold = std::max(stop_tol * c.norm(), 1e-8);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SupportEstimate best;
  bool have_best = false;
  std::size_t solves = 0;
  for (std::size_t b = 0; b < boosts; ++b) {
    Eigen::VectorXd alpha(c.cols());
    for (long t = 0; t < alpha.size(); ++t) alpha(t) = gauss(rng);
    const Eigen::VectorXcd reduced = c * alpha.cast<cdouble>();
    SupportEstimate est = omp_core(dict, norms, reduced, sparsity, stop_tol, ops);
    ++solves;

    // Validate against every measurement column.
    est.coefficients = restricted_least_squares(dict, est.indices, c);
    Eigen::MatrixXcd residual = c;
    if (!est.indices.empty()) residual.noalias() -= gather_columns(dict, est.indices) * est.coefficients;
    const long p = dict.rows(), s = static_cast<long>(est.indices.size());
    tally(ops, Stage::OmpLeastSquares, static_cast<std::uint64_t>(p * s * s + 2 * p * s * c.cols()));
    est.residual_norm = residual.norm();

    const bool accepted = est.residual_norm <= threshold;
    if (accepted || !have_best || est.residual_norm < best.residual_norm) {
      best = std::move(est);
      have_best = true;
    }
    if (accepted) break;
  }
  best.smv_solves = solves;
  return best;
}

AcquisitionResult support_to_acquisition(const SupportEstimate& est, const GridSpec& grid,
                                         int n_sats, int detect_count, int paths) {
  if (detect_count < 0 || detect_count > n_sats) throw std::invalid_argument("detect_count must lie in 0..I");
  if (paths < 1) throw std::invalid_argument("paths must be >= 1");
  const std::size_t bins = total_bins(grid, n_sats);
  std::map<int, std::vector<std::pair<std::size_t, double>>> by_sat;
  for (std::size_t r = 0; r < est.indices.size(); ++r) {
    const std::size_t idx = est.indices[r];
    if (idx >= bins) throw std::invalid_argument("support index outside the grid");
    const double energy = r < static_cast<std::size_t>(est.coefficients.rows())
                              ? est.coefficients.row(static_cast<long>(r)).squaredNorm()
                              : 0.0;
    by_sat[unflatten(grid, idx).sat].push_back({idx, energy});
  }
  std::vector<SatelliteDetection> all;
  for (auto& [sat, entries] : by_sat) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    SatelliteDetection det;
    det.sat = sat;
    for (std::size_t r = 0; r < entries.size() && r < static_cast<std::size_t>(paths); ++r) {
      const BinIndex bin = unflatten(grid, entries[r].first);
      det.paths.push_back({bin.k, bin.q, entries[r].second});
    }
    det.peak = det.paths.front().value;
    all.push_back(std::move(det));
  }
  // by_sat iterates in ascending satellite order, so a stable sort keeps the tie rule.
  std::stable_sort(all.begin(), all.end(),
                   [](const SatelliteDetection& a, const SatelliteDetection& b) { return a.peak > b.peak; });
  AcquisitionResult result;
  result.partial = static_cast<int>(all.size()) < detect_count;
  const std::size_t take = std::min(all.size(), static_cast<std::size_t>(detect_count));
  result.satellites.assign(all.begin(), all.begin() + static_cast<long>(take));
  return result;
}

}  // namespace gpsacq
