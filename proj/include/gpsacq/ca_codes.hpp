#pragma once

#include <cstdint>
#include <vector>

namespace gpsacq {

/// Satellite-specific +/-1 spreading sequence of one code period.
///
/// Bit b of the underlying Gold generator maps to chip 1 - 2b, so a
/// logic 0 is +1 and a logic 1 is -1.
struct CaCode {
  int prn = 0;
  std::vector<int8_t> chips;

  int length() const { return static_cast<int>(chips.size()); }
  /// Chip at index m of the periodic extension.
  int chip(long m) const;
};

/// The I codes searched by a receiver. A symbol spans n_periods code periods.
struct CodeFamily {
  std::vector<CaCode> codes;
  int m0 = 1023;
  int n_periods = 1;

  int size() const { return static_cast<int>(codes.size()); }
  int symbol_chips() const { return m0 * n_periods; }
  const CaCode& operator[](int index) const { return codes.at(index); }

  /// PRNs 1..count at code length m0.
  static CodeFamily build(int count, int m0 = 1023, int n_periods = 1);
};

/// Highest PRN that generate_ca_code accepts for a code length.
int max_prn(int m0);

/// Code lengths with a generator: 31, 127, 511 (preferred-pair Gold) and 1023 (GPS C/A).
bool supported_code_length(int m0);

/// GPS C/A code for prn 1..32 when m0 = 1023.
///
/// Desk-scale lengths use Gold families built from a preferred pair of
/// m-sequences; PRN p selects the relative shift p - 1 of the second
/// sequence. Feedback polynomials (exponents of x):
///   m0 = 31:  {5, 2, 0} and {5, 4, 3, 2, 0}
///   m0 = 127: {7, 3, 0} and {7, 3, 2, 1, 0}
///   m0 = 511: {9, 4, 0} and {9, 6, 4, 3, 0}
/// Throws std::invalid_argument for an unknown prn or length.
CaCode generate_ca_code(int prn, int m0 = 1023);

/// Normalized cyclic correlation (1/M) sum_m a[m - lag] b[m] over one symbol
/// of M = n_periods * m0 chips. Any lag is accepted and wrapped.
double cross_correlation(const CaCode& a, const CaCode& b, long lag, int n_periods = 1);

/// Raw integer cyclic correlation sum over one code period.
long correlation_sum(const CaCode& a, const CaCode& b, long lag);

/// RMS deviation of the cross spectral density of a and b from the
/// Kronecker delta in the satellite index, sampled at n_freqs uniform
/// frequencies over one 2*pi/T_c period. The spectral density is the DTFT
/// of the (aperiodic) correlation over lags -M+1..M-1, normalized by 1/M.
double cross_spectral_error(const CaCode& a, const CaCode& b, int n_freqs = 4096);

}  // namespace gpsacq
