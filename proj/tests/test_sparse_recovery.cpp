#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "gpsacq/config.hpp"
#include "gpsacq/experiments.hpp"
#include "gpsacq/sparse_recovery.hpp"

using namespace gpsacq;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd gaussian(long rows, long cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (long c = 0; c < cols; ++c)
    for (long r = 0; r < rows; ++r) m(r, c) = g(rng);
  return m;
}

std::vector<std::size_t> random_support(std::size_t k, std::size_t dims, std::mt19937_64& rng) {
  std::vector<std::size_t> all(dims);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

// Y with rows on the support drawn CN(0,1), d columns.
Eigen::MatrixXcd sparse_rows(const std::vector<std::size_t>& support, long dims, long d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(dims, d);
  for (std::size_t j : support)
    for (long c = 0; c < d; ++c) y(static_cast<long>(j), c) = {g(rng), g(rng)};
  return y;
}

void check_history(const SupportEstimate& est) {
  for (std::size_t i = 1; i < est.residual_history.size(); ++i) {
    CHECK(est.residual_history[i] <= est.residual_history[i - 1] * (1 + 1e-12) + 1e-12);
  }
  const std::set<std::size_t> distinct(est.selection_order.begin(), est.selection_order.end());
  CHECK(distinct.size() == est.selection_order.size());
  CHECK(std::is_sorted(est.indices.begin(), est.indices.end()));
}

GridSpec small_grid() { return GridSpec::from_limits(31, 1, 2, 5.0, 0.0, 0.5, 1.023e6 / 31); }

}  // namespace

TEST_SUITE("sparse_recovery") {

TEST_CASE("CTF reduction") {
  std::mt19937_64 rng(1);
  SUBCASE("one symbol keeps the measurement direction") {
    CompressedMeasurements m;
    m.c = Eigen::MatrixXcd::Random(8, 1);
    const auto prob = ctf_reduce(m, 1e-8);
    REQUIRE(prob.c.cols() == 1);
    const cdouble scale = prob.c.col(0).dot(m.c.col(0)) / prob.c.col(0).squaredNorm();
    CHECK((prob.c.col(0) * scale - m.c.col(0)).norm() < 1e-10 * m.c.norm());
    CHECK(prob.c.col(0).norm() == doctest::Approx(m.c.norm()));
  }
  SUBCASE("scaled copies of one vector are rank one") {
    CompressedMeasurements m;
    const Eigen::VectorXcd v = Eigen::VectorXcd::Random(10);
    m.c.resize(10, 6);
    for (int n = 0; n < 6; ++n) m.c.col(n) = v * cdouble(n - 2.5, 0.3 * n);
    const auto prob = ctf_reduce(m, 1e-8);
    REQUIRE(prob.c.cols() == 1);
    const Eigen::VectorXcd u = prob.c.col(0).normalized();
    CHECK(std::abs(std::abs(u.dot(v.normalized())) - 1.0) < 1e-10);
  }
  SUBCASE("covariance is reproduced and rank follows the support") {
    const Eigen::MatrixXd b = gaussian(30, 120, rng);
    const auto support = random_support(6, 120, rng);
    CompressedMeasurements m;
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(120, 40);
    std::bernoulli_distribution coin;
    std::normal_distribution<double> g;
    for (std::size_t j : support) {
      const cdouble h{g(rng), g(rng)};
      for (int n = 0; n < 40; ++n) y(static_cast<long>(j), n) = coin(rng) ? h : -h;
    }
    m.c = b.cast<cdouble>() * y;
    OpCounter ops;
    const auto prob = ctf_reduce(m, 1e-8, 0, &ops);
    CHECK(prob.c.cols() <= 6);
    CHECK((prob.c * prob.c.adjoint() - m.c * m.c.adjoint()).norm() < 1e-9 * (m.c * m.c.adjoint()).norm());
    CHECK(std::is_sorted(prob.eigenvalues.rbegin(), prob.eigenvalues.rend()));
    CHECK(ops.get(Stage::CsCovariance) > 0);
    CHECK(ctf_reduce(m, 1e-8, 3).c.cols() == 3);
  }
  SUBCASE("all-zero measurements flag an empty problem") {
    CompressedMeasurements m;
    m.c = Eigen::MatrixXcd::Zero(5, 3);
    CHECK(ctf_reduce(m, 1e-8).empty);
    CHECK(raw_problem(m).empty);
  }
}

TEST_CASE("OMP basic cases") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd b = gaussian(20, 60, rng);
  SUBCASE("a single column") {
    const auto est = omp_smv(b, b.col(17).cast<cdouble>(), 1);
    CHECK(est.indices == std::vector<std::size_t>{17});
    CHECK(est.residual_norm < 1e-12);
    CHECK(std::abs(est.coefficients(0, 0) - 1.0) < 1e-12);
  }
  SUBCASE("zero measurements stop immediately") {
    const auto est = omp_smv(b, Eigen::VectorXcd::Zero(20), 4);
    CHECK(est.indices.empty());
    CHECK(est.residual_norm == 0.0);
  }
  SUBCASE("ties go to the lowest index") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 4);
    d(0, 1) = d(0, 3) = 1.0;
    d(1, 0) = 1.0;
    d(2, 2) = 1.0;
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(3);
    c(0) = 2.0;
    CHECK(omp_smv(d, c, 1).indices == std::vector<std::size_t>{1});
  }
  SUBCASE("residual stop") {
    const Eigen::VectorXcd c = (b.col(3) * 5.0 + b.col(40) * 0.01).cast<cdouble>();
    const auto est = omp_smv(b, c, 5, 0.05);
    CHECK(est.indices == std::vector<std::size_t>{3});
  }
  SUBCASE("op tally covers the five steps") {
    OpCounter ops;
    omp_smv(b, (b.col(1) + b.col(2)).cast<cdouble>(), 2, 0.0, &ops);
    for (Stage s : {Stage::OmpResidual, Stage::OmpInnerProducts, Stage::OmpMaxSelection, Stage::OmpLeastSquares,
                    Stage::OmpStopping}) {
      CHECK(ops.get(s) > 0);
    }
  }
}

TEST_CASE("OMP recovers 5-sparse vectors from 40 gaussian measurements") {
  std::mt19937_64 rng(3);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd b = gaussian(40, 200, rng);
    const auto support = random_support(5, 200, rng);
    const Eigen::VectorXcd c = b.cast<cdouble>() * sparse_rows(support, 200, 1, rng).col(0);
    const auto est = omp_smv(b, c, 5);
    check_history(est);
    CHECK(est.indices.size() <= 5);
    exact += est.indices == support;
  }
  MESSAGE("SMV exact recoveries: " << exact << "/100");
  CHECK(exact >= 95);
}

TEST_CASE("simultaneous OMP") {
  std::mt19937_64 rng(4);
  SUBCASE("one column is the single-vector solver") {
    const Eigen::MatrixXd b = gaussian(25, 90, rng);
    const auto support = random_support(4, 90, rng);
    const Eigen::MatrixXcd c = b.cast<cdouble>() * sparse_rows(support, 90, 1, rng);
    const auto a = omp_smv(b, c.col(0), 4);
    const auto m = omp_mmv(b, c, 4);
    CHECK(a.indices == m.indices);
    CHECK(a.selection_order == m.selection_order);
    CHECK((a.coefficients - m.coefficients).norm() < 1e-12);
  }
  SUBCASE("orthogonal columns are found in one pass") {
    const Eigen::MatrixXd q = gaussian(12, 12, rng).householderQr().householderQ();
    Eigen::MatrixXd b = gaussian(12, 30, rng);
    const std::vector<std::size_t> support{2, 9, 21};
    for (std::size_t i = 0; i < 3; ++i) b.col(static_cast<long>(support[i])) = q.col(static_cast<long>(i));
    const Eigen::MatrixXcd c = b.cast<cdouble>() * sparse_rows(support, 30, 3, rng);
    const auto est = omp_mmv(b, c, 3);
    CHECK(est.indices == support);
    CHECK(est.residual_norm < 1e-10);
  }
  SUBCASE("five columns recover at least as often as one") {
    int smv = 0, mmv = 0;
    for (int t = 0; t < 100; ++t) {
      const Eigen::MatrixXd b = gaussian(40, 200, rng);
      const auto support = random_support(5, 200, rng);
      const Eigen::MatrixXcd c = b.cast<cdouble>() * sparse_rows(support, 200, 5, rng);
      smv += omp_smv(b, c.col(0), 5).indices == support;
      const auto est = omp_mmv(b, c, 5);
      check_history(est);
      mmv += est.indices == support;
    }
    MESSAGE("paired runs: SMV " << smv << "/100, MMV " << mmv << "/100");
    CHECK(mmv >= smv);
  }
}

TEST_CASE("ReMBo") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd b = gaussian(40, 200, rng);
  const auto support = random_support(5, 200, rng);
  SUBCASE("rank-one measurements act like single-vector OMP") {
    const Eigen::VectorXcd v = b.cast<cdouble>() * sparse_rows(support, 200, 1, rng).col(0);
    Eigen::MatrixXcd c(40, 3);
    c.col(0) = v;
    c.col(1) = v * cdouble(-2.0, 0.5);
    c.col(2) = v * 0.3;
    const auto est = rembo(b, c, 5, 20, 9);
    CHECK(est.indices == omp_smv(b, v, 5).indices);
  }
  SUBCASE("a solvable instance stops on the first boost") {
    const Eigen::MatrixXcd c = b.cast<cdouble>() * sparse_rows(support, 200, 4, rng);
    const auto est = rembo(b, c, 5, 20, 11);
    CHECK(est.indices == support);
    CHECK(est.smv_solves == 1);
    CHECK(est.residual_norm <= 1e-8 * c.norm());
    const auto again = rembo(b, c, 5, 20, 11);
    CHECK(again.indices == est.indices);
  }
  SUBCASE("one boost is one solve") {
    const Eigen::MatrixXcd c = Eigen::MatrixXcd::Random(40, 3);
    CHECK(rembo(b, c, 5, 1, 1).smv_solves == 1);
    CHECK(rembo(b, c, 5, 4, 1).smv_solves == 4);
  }
}

TEST_CASE("restricted least squares with dependent columns") {
  Eigen::MatrixXd d(4, 3);
  d << 1, 2, 0, 0, 0, 1, 1, 2, 0, 0, 0, 1;
  Eigen::MatrixXcd c(4, 1);
  c << 3, 1, 3, 1;
  const auto y = restricted_least_squares(d, {0, 1, 2}, c);
  CHECK(y.allFinite());
  const Eigen::MatrixXcd fit = d.cast<cdouble>() * y;
  CHECK((fit - c).norm() < 1e-6);

  const auto exact = restricted_least_squares(d, {0, 2}, c);
  CHECK(std::abs(exact(0, 0) - 3.0) < 1e-12);
  CHECK(std::abs(exact(1, 0) - 1.0) < 1e-12);
}

TEST_CASE("support to acquisition") {
  const GridSpec g = small_grid();
  const std::size_t per = g.bins_per_satellite();
  SupportEstimate est;
  est.indices = {per * 1 + 2, per * 1 + 7, per * 3 + 0, per * 5 + 4};
  est.coefficients.resize(4, 2);
  est.coefficients << 1.0, 1.0, 2.0, 0.0, 0.5, 0.5, 3.0, 3.0;

  const auto res = support_to_acquisition(est, g, 8, 3, 2);
  CHECK_FALSE(res.partial);
  CHECK(res.detected_sats() == std::vector<int>{1, 3, 5});
  CHECK(res.satellites[0].sat == 5);
  // Satellite 1: bin 7 carries energy 4, bin 2 carries 2.
  const auto* s1 = res.find(1);
  REQUIRE(s1 != nullptr);
  CHECK(s1->paths[0].q == unflatten(g, per + 7).q);
  CHECK(s1->paths.size() == 2);

  const auto partial = support_to_acquisition(est, g, 8, 4, 2);
  CHECK(partial.partial);

  SupportEstimate one;
  one.indices = {per * 2 + 1, per * 2 + 3};
  one.coefficients = Eigen::MatrixXcd::Ones(2, 1);
  CHECK(support_to_acquisition(one, g, 8, 4, 2).partial);
}

TEST_CASE("support of the true bins gives the true acquisition") {
  const GridSpec g = GridSpec::from_limits(1023, 1, 2, 20.0, 5000.0, 0.5, 1000.0);
  const auto chan = draw_channel(12, ChannelParams{}, g);
  SupportEstimate est;
  std::vector<std::pair<std::size_t, double>> bins;
  for (const auto& p : chan.paths) bins.push_back({flatten(g, {p.sat, p.k, p.q}), std::abs(p.gain)});
  std::sort(bins.begin(), bins.end());
  est.coefficients.resize(static_cast<long>(bins.size()), 1);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    est.indices.push_back(bins[i].first);
    est.coefficients(static_cast<long>(i), 0) = bins[i].second;
  }
  const auto res = support_to_acquisition(est, g, 24, 4, 2);
  CHECK(res.detected_sats() == chan.active);
  for (int sat : chan.active) {
    const auto& best = chan.strongest_path(sat);
    CHECK(res.find(sat)->paths[0].q == best.q);
    CHECK(res.find(sat)->paths[0].k == best.k);
  }
}

TEST_CASE("twice the sparsity gives an identifiable restricted system") {
  std::mt19937_64 rng(6);
  int full_rank = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const Eigen::MatrixXd b = gaussian(16, 400, rng);
    const auto support = random_support(8, 400, rng);
    Eigen::MatrixXd bs(16, 8);
    for (int i = 0; i < 8; ++i) bs.col(i) = b.col(static_cast<long>(support[i]));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bs);
    qr.setThreshold(1e-10);
    full_rank += qr.rank() == 8;
  }
  CHECK(full_rank >= 0.99 * trials);
}

TEST_CASE("noiseless desk-scale runs: CTF support equals raw support") {
  SimConfig cfg;
  cfg.n_sym = 10;
  cfg.p = 120;
  Acquirer acq(cfg);
  acq.prepare({cfg.p});
  const auto& dict = acq.dictionary(cfg.p);
  int agree = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const auto input = make_trial_input(cfg, acq.codes(), trial_seed(11, t), cfg.n_sym, kInf);
    const auto m = compress(input.signal, acq.kernels(cfg.p));
    const std::size_t s = static_cast<std::size_t>(cfg.effective_sparsity());
    const auto raw = omp_mmv(dict, raw_problem(m).c, s);
    const auto ctf = omp_mmv(dict, ctf_reduce(m, cfg.rank_tol, s).c, s);
    agree += raw.indices == ctf.indices;
  }
  MESSAGE("CTF and raw supports agree in " << agree << "/" << trials);
  CHECK(agree >= 0.95 * trials);
}

}  // TEST_SUITE

// Kept in its own suite: at the desk grid this rate is not reached (see the
// README), and a failure here should not mask the rest of the solver tests.
TEST_SUITE("sparse_recovery_end_to_end") {

TEST_CASE("noiseless end-to-end acquisition with P = 4 |S|") {
  SimConfig cfg;
  cfg.p = 4 * cfg.effective_sparsity();
  Acquirer acq(cfg);
  acq.prepare({cfg.p});
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const auto input = make_trial_input(cfg, acq.codes(), trial_seed(21, t), 1, kInf);
    ok += acq.run(input, Receiver::CS, cfg.p).success;
  }
  MESSAGE("P=" << cfg.p << " exact acquisitions: " << ok << "/" << trials);
  CHECK(ok >= 0.95 * trials);
}

}  // TEST_SUITE
