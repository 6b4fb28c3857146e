#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "gpsacq/ca_codes.hpp"
#include "gpsacq/grid.hpp"

namespace gpsacq {

using cdouble = std::complex<double>;

/// Transmit pulse g(t) in physical units. Ideal mode is the rectangular
/// unit chip on [0, T_c); sinc mode is sqrt(T_c) sinc(t / T_c) truncated to |t| <= T_g.
double pulse_shape(double t_seconds, const PulseConfig& pulse, double chip_period_s);

/// One symbol of sum_m s[m] g(t - m T_c) sampled at oversample / T_c.
///
/// Amplitudes are in chip-normalized units (T_c = 1) so both pulse modes
/// carry unit-amplitude chips. The code is treated as periodic, so sinc
/// tails wrap around the symbol boundary.
std::vector<double> spread_waveform(const CaCode& code, const GridSpec& grid);

struct ChannelParams {
  int i_total = 24;
  int i_active = 4;
  int paths_r = 2;
  double tau_max_chips = 20.0;
  double doppler_max_hz = 5000.0;
  bool on_grid = true;
  int n_sym = 1;
};

struct ChannelPath {
  int sat = 0;  // 0-based satellite index, prn = sat + 1
  int r = 0;
  cdouble gain;
  double delay_chips = 0.0;
  double doppler_hz = 0.0;
  /// Nearest grid bin. Exact when the path is on-grid.
  int q = 0;
  int k = 0;
  bool on_grid = true;
};

struct ChannelRealization {
  std::vector<ChannelPath> paths;
  /// Navigation bits d_i[n], n = 0..n_sym-1, for each active satellite.
  std::map<int, std::vector<int8_t>> nav_bits;
  /// Active satellite indices, ascending.
  std::vector<int> active;
  int n_sym = 1;

  /// d_i[n]; symbols outside 0..n_sym-1 hold the nearest edge bit.
  int bit(int sat, long n) const;
  /// a_{i,r}[n] = h_{i,r} d_i[n].
  cdouble amplitude(const ChannelPath& path, long n) const;
  /// Index of the path with the largest |h|^2 for a satellite (first on ties).
  const ChannelPath& strongest_path(int sat) const;
};

/// Draws a multipath channel: i_active of i_total satellites chosen without
/// replacement, h ~ CN(0,1), delay ~ U(0, tau_max), Doppler ~ U(-f_max, f_max),
/// equiprobable +/-1 bits. On-grid mode snaps delay and Doppler to the grid.
ChannelRealization draw_channel(std::uint64_t seed, const ChannelParams& params,
                                const GridSpec& grid);

struct SampledSignal {
  std::vector<cdouble> samples;
  int n_sym = 0;
  int samples_per_symbol = 0;
  double snr_db = 0.0;
  double signal_power = 0.0;
  double noise_variance = 0.0;

  const cdouble* symbol(int n) const { return samples.data() + static_cast<std::size_t>(n) * samples_per_symbol; }
};

/// Noiseless received samples: n_sym symbols plus a delay-span guard.
std::vector<cdouble> synthesize_clean(const ChannelRealization& channel, const CodeFamily& codes,
                                      const GridSpec& grid, int n_sym);

/// Received samples with complex AWGN. The noise variance makes the mean
/// signal power per sample over noise variance equal snr_db; an infinite
/// snr_db is noiseless and an empty channel yields unit-variance noise.
SampledSignal synthesize_received(const ChannelRealization& channel, const CodeFamily& codes,
                                  const GridSpec& grid, int n_sym, double snr_db,
                                  std::uint64_t seed);

/// The noise step of synthesize_received applied to precomputed clean samples.
SampledSignal add_awgn(std::vector<cdouble> clean, const GridSpec& grid, int n_sym, double snr_db,
                       std::uint64_t seed);

/// Adds CN(0, variance) noise in place, deterministic in seed.
void add_noise(std::vector<cdouble>& samples, double variance, std::uint64_t seed);

}  // namespace gpsacq
