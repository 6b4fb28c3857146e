#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "gpsacq/channel.hpp"
#include "gpsacq/mf_receiver.hpp"

using namespace gpsacq;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridSpec desk_grid() { return GridSpec::from_limits(1023, 1, 2, 20.0, 5000.0, 0.5, 1000.0); }

ChannelRealization one_path(int sat, cdouble h, int q, int k, const GridSpec& grid, int n_sym = 1) {
  ChannelRealization chan;
  ChannelPath p;
  p.sat = sat;
  p.gain = h;
  p.q = q;
  p.k = k;
  p.delay_chips = q * grid.delay_step_chips;
  p.doppler_hz = k * grid.doppler_step_hz;
  chan.paths.push_back(p);
  chan.active = {sat};
  chan.nav_bits[sat] = std::vector<int8_t>(static_cast<std::size_t>(n_sym), 1);
  chan.n_sym = n_sym;
  return chan;
}

// Inner product sum_s x[s] conj(phi[s]) built from the chips, independent of the bank.
cdouble direct_inner(const SampledSignal& x, const CaCode& code, const GridSpec& g, int k, int q, int n) {
  const long lm = g.samples_per_symbol();
  const long step = g.delay_step_samples();
  cdouble acc{};
  for (long s = 0; s < lm; ++s) {
    const long shifted = ((s - q * step) % lm + lm) % lm;
    const double w = code.chip(shifted / g.oversample);
    const double phase = 2 * std::numbers::pi * k * g.doppler_multiple() * static_cast<double>(s) / lm;
    acc += x.samples[n * lm + s] * w * std::polar(1.0, -phase);
  }
  return acc;
}

}  // namespace

TEST_SUITE("mf_receiver") {

TEST_CASE("blocked correlation matches direct inner products") {
  const GridSpec g = GridSpec::from_limits(127, 1, 2, 6.0, 16000.0, 0.5, 1.023e6 / 127);
  const CodeFamily codes = CodeFamily::build(5, 127);
  const MatchedFilterBank bank(codes, g);
  ChannelParams params;
  params.i_total = 5;
  params.i_active = 2;
  params.tau_max_chips = 6.0;
  params.doppler_max_hz = 16000.0;
  params.n_sym = 3;
  params.on_grid = false;
  const auto chan = draw_channel(21, params, g);
  const auto x = synthesize_received(chan, codes, g, 3, 0.0, 8);
  OpCounter ops;
  const auto fast = bank.correlate(x, &ops);
  const auto slow = bank.correlate_direct(x);
  double worst = 0, scale = 0;
  for (int n = 0; n < 3; ++n) {
    for (std::size_t b = 0; b < fast.bins(); ++b) {
      worst = std::max(worst, std::abs(fast.symbol(n)[b] - slow.symbol(n)[b]));
      scale = std::max(scale, std::abs(slow.symbol(n)[b]));
    }
  }
  CHECK(worst <= 1e-9 * scale);
  // Spot-check against the chip-level oracle.
  for (const BinIndex bin : {BinIndex{0, 0, 0}, BinIndex{3, -1, 7}, BinIndex{4, 1, 12}}) {
    const cdouble want = direct_inner(x, codes[bin.sat], g, bin.k, bin.q, 2);
    CHECK(std::abs(fast.at(bin, 2) - want) <= 1e-9 * scale);
  }
  CHECK(ops.get(Stage::MfCorrelation) == 3ull * fast.bins() * 254);
}

TEST_CASE("zero input gives a zero tensor") {
  const GridSpec g = desk_grid();
  const MatchedFilterBank bank(CodeFamily::build(4), g);
  SampledSignal x;
  x.n_sym = 2;
  x.samples_per_symbol = g.samples_per_symbol();
  x.samples.assign(2 * 2046 + 40, cdouble{});
  const auto z = bank.correlate(x);
  for (int n = 0; n < 2; ++n) {
    for (const auto& v : z.symbol(n)) CHECK(v == cdouble{});
  }
  x.samples.resize(2046);
  CHECK_THROWS_AS(bank.correlate(x), std::invalid_argument);
}

TEST_CASE("single on-grid path: peak, code side-lobes and Doppler nulls") {
  const GridSpec g = desk_grid();
  const CodeFamily codes = CodeFamily::build(24);
  const MatchedFilterBank bank(codes, g);
  const cdouble h{0.6, -0.8};
  const int sat = 11, q = 14, k = -2;
  const auto x = synthesize_received(one_path(sat, h, q, k, g), codes, g, 1, kInf, 1);
  const auto z = bank.correlate(x);
  const double peak = std::abs(z.at({sat, k, q}, 0));
  CHECK(peak == doctest::Approx(2046.0 * std::abs(h)).epsilon(1e-12));
  CHECK(std::abs(z.at({sat, k, q - 2}, 0)) <= 65.0 / 1023.0 * peak + 1e-9);
  CHECK(std::abs(z.at({sat, k, q + 2}, 0)) <= 65.0 / 1023.0 * peak + 1e-9);
  CHECK(std::abs(z.at({sat, k + 1, q}, 0)) < 1e-9 * peak);
  CHECK(std::abs(z.at({sat, k - 1, q}, 0)) < 1e-9 * peak);
  // Half-chip neighbours keep half the rectangular chip.
  CHECK(std::abs(z.at({sat, k, q + 1}, 0)) == doctest::Approx(0.5 * peak).epsilon(0.07));
}

TEST_CASE("peak identity over every delay and Doppler of the satellite") {
  const GridSpec g = desk_grid();
  const CodeFamily codes = CodeFamily::build(24);
  const MatchedFilterBank bank(codes, g);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int sat = static_cast<int>(rng() % 24);
    const int q = static_cast<int>(rng() % 41);
    const int k = static_cast<int>(rng() % 11) - 5;
    const auto x = synthesize_received(one_path(sat, {1.0, 0.5}, q, k, g), codes, g, 1, kInf, 1);
    const auto stat = accumulate(bank.correlate(x), 0, 1);
    const auto res = select_paths(stat, g, 24, 1, 1);
    CHECK(res.satellites[0].sat == sat);
    CHECK(res.satellites[0].paths[0].q == q);
    CHECK(res.satellites[0].paths[0].k == k);
  }
}

TEST_CASE("Gram matrix structure") {
  const GridSpec g = desk_grid();
  const MatchedFilterBank bank(CodeFamily::build(24), g);

  SUBCASE("same kernel twice") {
    const std::vector<BinIndex> two{{3, 1, 4}, {3, 1, 4}};
    const auto gr = gram_matrix(bank, two);
    CHECK(gr.max_offdiag_ratio == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gr.gram(0, 0).real() == doctest::Approx(2046.0));
  }
  SUBCASE("equal Doppler, whole-chip delays") {
    std::vector<BinIndex> subset;
    for (int i = 0; i < 24; ++i) {
      for (int q = 0; q < 41; q += 2) subset.push_back({i, 2, q});
    }
    const auto gr = gram_matrix(bank, subset);
    CHECK(gr.max_offdiag_ratio <= 65.0 / 1023.0 + 1e-12);
    CHECK((gr.gram - gr.gram.adjoint()).norm() < 1e-9);
  }
  SUBCASE("kernels differing only in Doppler are orthogonal") {
    for (int i : {0, 7, 23}) {
      for (int q : {0, 13, 40}) {
        std::vector<BinIndex> subset;
        for (int k = -5; k <= 5; ++k) subset.push_back({i, k, q});
        CHECK(gram_matrix(bank, subset).max_offdiag_ratio < 1e-12);
      }
    }
  }
  SUBCASE("whole-chip delays at two code lengths") {
    for (int m0 : {511, 1023}) {
      const GridSpec gm = GridSpec::from_limits(m0, 1, 2, 20.0, 1.023e6 / m0, 0.5, 1.023e6 / m0);
      const MatchedFilterBank bm(CodeFamily::build(12, m0), gm);
      double same_k = 0;
      std::vector<BinIndex> mixed;
      for (int k = -1; k <= 1; ++k) {
        std::vector<BinIndex> subset;
        for (int i = 0; i < 12; ++i) {
          for (int q = 0; q < 41; q += 2) subset.push_back({i, k, q});
          for (int q = 0; q < 41; q += 4) mixed.push_back({i, k, q});
        }
        same_k = std::max(same_k, gram_matrix(bm, subset).max_offdiag_ratio);
      }
      CHECK(same_k <= 0.1);
      // Doppler-offset pairs of different codes are not covered by the
      // three-valued bound; reported only.
      MESSAGE("M0=" << m0 << " equal-Doppler max " << same_k << ", mixed-Doppler max "
                    << gram_matrix(bm, mixed).max_offdiag_ratio);
    }
  }
  SUBCASE("capacity") {
    std::vector<BinIndex> big(kMaxGramKernels + 1, BinIndex{0, 0, 0});
    CHECK_THROWS_AS(gram_matrix(bank, big), CapacityError);
  }
}

TEST_CASE("accumulate") {
  const GridSpec g = GridSpec::from_limits(31, 1, 2, 2.0, 0.0, 0.5, 1.023e6 / 31);
  CorrelationTensor t(g, 3, 4);
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss;
  for (int n = 0; n < 4; ++n) {
    for (auto& v : t.symbol(n)) v = {gauss(rng), gauss(rng)};
  }
  OpCounter ops;
  const auto one = accumulate(t, 2, 3, &ops);
  for (std::size_t b = 0; b < t.bins(); ++b) CHECK(one[b] == std::norm(t.symbol(2)[b]));
  const auto all = accumulate(t, 0, 4, &ops);
  for (std::size_t b = 0; b < t.bins(); ++b) {
    double want = 0;
    for (int n = 0; n < 4; ++n) want += std::norm(t.symbol(n)[b]);
    CHECK(all[b] == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(ops.get(Stage::MfAccumulation) == 5 * t.bins());

  CorrelationTensor c(g, 3, 6);
  for (int n = 0; n < 6; ++n) {
    for (auto& v : c.symbol(n)) v = {1.5, -2.0};
  }
  for (double v : accumulate(c, 0, 6)) CHECK(v == doctest::Approx(6 * 6.25));
  CHECK_THROWS_AS(accumulate(c, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(accumulate(c, 0, 7), std::invalid_argument);
}

TEST_CASE("select_paths ranking and ties") {
  const GridSpec g = GridSpec::from_limits(31, 1, 2, 2.0, 0.0, 0.5, 1.023e6 / 31);
  const std::size_t per = g.bins_per_satellite();
  std::vector<double> stat(per * 8, 0.0);

  SUBCASE("all mass on four satellites") {
    for (int sat : {1, 4, 5, 7}) stat[per * sat + 2] = 10.0 + sat;
    const auto res = select_paths(stat, g, 8, 4, 2);
    CHECK(res.detected_sats() == std::vector<int>{1, 4, 5, 7});
    CHECK(res.satellites[0].sat == 7);
    CHECK(res.satellites[0].paths.size() == 2);
    CHECK(res.satellites[0].paths[0].q == 2);
  }
  SUBCASE("equal peaks go to the lower satellite and bin") {
    stat[per * 6 + 3] = 5.0;
    stat[per * 2 + 4] = 5.0;
    stat[per * 2 + 1] = 5.0;
    const auto res = select_paths(stat, g, 8, 1, 2);
    CHECK(res.satellites[0].sat == 2);
    CHECK(res.satellites[0].paths[0].q == 1);
    CHECK(res.satellites[0].paths[1].q == 4);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(select_paths(stat, g, 8, 9, 1), std::invalid_argument);
    CHECK_THROWS_AS(select_paths(stat, g, 8, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(select_paths(stat, g, 7, 2, 1), std::invalid_argument);
  }
  SUBCASE("comparison tally") {
    OpCounter ops;
    select_paths(stat, g, 8, 4, 2, &ops);
    CHECK(ops.get(Stage::MfPathSelection) > 0);
  }
}

TEST_CASE("noiseless multipath scenes recover a true path per satellite") {
  const GridSpec g = desk_grid();
  const CodeFamily codes = CodeFamily::build(24);
  const MatchedFilterBank bank(codes, g);
  ChannelParams params;
  int checked_strongest = 0, strongest_ok = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto chan = draw_channel(seed, params, g);
    const auto x = synthesize_received(chan, codes, g, 1, kInf, 1);
    const auto stat = accumulate(bank.correlate(x), 0, 1);
    const auto res = select_paths(stat, g, 24, 4, 2);
    for (int sat : chan.active) {
      const auto* det = res.find(sat);
      if (det == nullptr) continue;
      const auto& top = det->paths.front();
      bool on_some_path = false;
      std::vector<double> gains;
      for (const auto& p : chan.paths) {
        if (p.sat != sat) continue;
        on_some_path = on_some_path || (p.q == top.q && p.k == top.k);
        gains.push_back(std::abs(p.gain));
      }
      CHECK(on_some_path);
      const double ratio = std::max(gains[0], gains[1]) / std::min(gains[0], gains[1]);
      if (ratio >= 1.5) {
        ++checked_strongest;
        const auto& best = chan.strongest_path(sat);
        strongest_ok += best.q == top.q && best.k == top.k;
      }
    }
  }
  MESSAGE("strongest path exact in " << strongest_ok << " of " << checked_strongest << " well-separated satellites");
  CHECK(checked_strongest > 20);
  CHECK(strongest_ok == checked_strongest);
}

TEST_CASE("processing gain grows linearly with code length") {
  std::vector<double> log_m, log_ratio;
  for (int m0 : {127, 511, 1023}) {
    const GridSpec g = GridSpec::from_limits(m0, 1, 2, 20.0, 0.0, 0.5, 1.023e6 / m0);
    const CodeFamily codes = CodeFamily::build(4, m0);
    const MatchedFilterBank bank(codes, g);
    const auto chan = one_path(0, 1.0, 6, 0, g, 20);
    double peak = 0, floor = 0;
    long floor_n = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto x = synthesize_received(chan, codes, g, 20, -10.0, seed);
      const auto stat = accumulate(bank.correlate(x), 0, 20);
      peak += stat[flatten(g, {0, 0, 6})];
      const std::size_t per = g.bins_per_satellite();
      for (std::size_t b = per; b < stat.size(); ++b, ++floor_n) floor += stat[b];
    }
    peak /= 5;
    floor /= static_cast<double>(floor_n);
    log_m.push_back(std::log(m0));
    log_ratio.push_back(std::log(peak / floor));
  }
  const double mx = std::accumulate(log_m.begin(), log_m.end(), 0.0) / 3;
  const double my = std::accumulate(log_ratio.begin(), log_ratio.end(), 0.0) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (log_m[i] - mx) * (log_ratio[i] - my);
    sxx += (log_m[i] - mx) * (log_m[i] - mx);
  }
  const double slope = sxy / sxx;
  MESSAGE("log-log slope of peak-to-floor ratio: " << slope);
  CHECK(std::abs(slope - 1.0) <= 0.2);
}

TEST_CASE("kernels match the documented formula") {
  const GridSpec g = desk_grid();
  const CodeFamily codes = CodeFamily::build(3);
  const MatchedFilterBank bank(codes, g);
  const auto phi = bank.kernel({2, 3, 5});
  for (long s : {0L, 4L, 5L, 100L, 2045L}) {
    const long shifted = ((s - 5) % 2046 + 2046) % 2046;
    const cdouble want = static_cast<double>(codes[2].chip(shifted / 2)) *
                         std::polar(1.0, 2 * std::numbers::pi * 3 * s / 2046.0);
    CHECK(std::abs(phi(s) - want) < 1e-12);
  }
}

}  // TEST_SUITE
