#include "gpsacq/ca_codes.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gpsacq {
namespace {

// G2 delay (in chips) of the C/A generator for PRN 1..32.
constexpr std::array<int, 32> kG2Delay = {
    5,   6,   7,   8,   17,  18,  139, 140, 141, 251, 252, 254, 255, 256, 257, 258,
    469, 470, 471, 472, 473, 474, 509, 512, 513, 514, 515, 516, 859, 860, 861, 862};

// Binary m-sequence from the recurrence a[t+n] = sum_{k in taps} a[t+k] (mod 2),
// all-ones initial state. taps holds the lower exponents of the feedback polynomial.
std::vector<int> m_sequence(int degree, std::initializer_list<int> taps) {
  const int period = (1 << degree) - 1;
  std::vector<int> seq(period + degree, 1);
  for (int t = 0; t + degree < static_cast<int>(seq.size()); ++t) {
    int bit = 0;
    for (int k : taps) bit ^= seq[t + k];
    seq[t + degree] = bit;
  }
  seq.resize(period);
  return seq;
}

std::vector<int> gps_g1() { return m_sequence(10, {0, 7}); }
std::vector<int> gps_g2() { return m_sequence(10, {0, 1, 2, 4, 7, 8}); }

struct PreferredPair {
  int degree;
  std::vector<int> u;
  std::vector<int> v;
};

const PreferredPair& preferred_pair(int m0) {
  static const PreferredPair p31{5, m_sequence(5, {0, 2}), m_sequence(5, {0, 2, 3, 4})};
  static const PreferredPair p127{7, m_sequence(7, {0, 3}), m_sequence(7, {0, 1, 2, 3})};
  static const PreferredPair p511{9, m_sequence(9, {0, 4}), m_sequence(9, {0, 3, 4, 6})};
  switch (m0) {
    case 31: return p31;
    case 127: return p127;
    case 511: return p511;
    default: throw std::invalid_argument("no preferred pair for code length " + std::to_string(m0));
  }
}

long wrap(long index, long period) {
  const long r = index % period;
  return r < 0 ? r + period : r;
}

}  // namespace

int CaCode::chip(long m) const { return chips[static_cast<std::size_t>(wrap(m, length()))]; }

bool supported_code_length(int m0) { return m0 == 31 || m0 == 127 || m0 == 511 || m0 == 1023; }

int max_prn(int m0) {
  if (m0 == 1023) return static_cast<int>(kG2Delay.size());
  if (supported_code_length(m0)) return m0;
  throw std::invalid_argument("unsupported code length " + std::to_string(m0) +
                              " (expected 31, 127, 511 or 1023)");
}

CaCode generate_ca_code(int prn, int m0) {
  const int top = max_prn(m0);
  if (prn < 1 || prn > top) {
    throw std::invalid_argument("prn " + std::to_string(prn) + " out of range 1.." +
                                std::to_string(top) + " for code length " + std::to_string(m0));
  }
  CaCode code;
  code.prn = prn;
  code.chips.resize(static_cast<std::size_t>(m0));
  if (m0 == 1023) {
    static const std::vector<int> g1 = gps_g1();
    static const std::vector<int> g2 = gps_g2();
    const int delay = kG2Delay[static_cast<std::size_t>(prn - 1)];
    for (int m = 0; m < m0; ++m) {
      const int bit = g1[m] ^ g2[wrap(m - delay, m0)];
      code.chips[m] = static_cast<int8_t>(1 - 2 * bit);
    }
    return code;
  }
  const PreferredPair& pair = preferred_pair(m0);
  const int shift = prn - 1;
  for (int m = 0; m < m0; ++m) {
    const int bit = pair.u[m] ^ pair.v[(m + shift) % m0];
    code.chips[m] = static_cast<int8_t>(1 - 2 * bit);
  }
  return code;
}

CodeFamily CodeFamily::build(int count, int m0, int n_periods) {
  if (count < 1) throw std::invalid_argument("code family needs at least one satellite");
  if (n_periods < 1) throw std::invalid_argument("n_periods must be >= 1");
  CodeFamily family;
  family.m0 = m0;
  family.n_periods = n_periods;
  family.codes.reserve(static_cast<std::size_t>(count));
  for (int prn = 1; prn <= count; ++prn) family.codes.push_back(generate_ca_code(prn, m0));
  return family;
}

long correlation_sum(const CaCode& a, const CaCode& b, long lag) {
  if (a.length() != b.length()) throw std::invalid_argument("code lengths differ");
  long acc = 0;
  for (long m = 0; m < b.length(); ++m) acc += a.chip(m - lag) * b.chips[m];
  return acc;
}

double cross_correlation(const CaCode& a, const CaCode& b, long lag, int n_periods) {
  // The symbol is n_periods repetitions, so the sum over M chips is
  // n_periods copies of the single-period cyclic sum.
  if (n_periods < 1) throw std::invalid_argument("n_periods must be >= 1");
  const long total = n_periods * correlation_sum(a, b, lag);
  return static_cast<double>(total) / (static_cast<double>(n_periods) * a.length());
}

double cross_spectral_error(const CaCode& a, const CaCode& b, int n_freqs) {
  if (a.length() != b.length()) throw std::invalid_argument("code lengths differ");
  if (n_freqs < 1) throw std::invalid_argument("n_freqs must be >= 1");
  const int m0 = a.length();
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(n_freqs));
  for (int f = 0; f < n_freqs; ++f) {
    twiddle[f] = std::polar(1.0, -2.0 * std::numbers::pi * f / n_freqs);
  }
  const double delta = a.prn == b.prn ? 1.0 : 0.0;
  double sum_sq = 0.0;
  for (int f = 0; f < n_freqs; ++f) {
    std::complex<double> spec_a{}, spec_b{};
    for (int m = 0; m < m0; ++m) {
      const auto& w = twiddle[(static_cast<long>(m) * f) % n_freqs];
      spec_a += static_cast<double>(a.chips[m]) * w;
      spec_b += static_cast<double>(b.chips[m]) * w;
    }
    // DTFT of the aperiodic correlation is conj(A) * B / M.
    const std::complex<double> err = std::conj(spec_a) * spec_b / static_cast<double>(m0) - delta;
    sum_sq += std::norm(err);
  }
  return std::sqrt(sum_sq / n_freqs);
}

}  // namespace gpsacq
