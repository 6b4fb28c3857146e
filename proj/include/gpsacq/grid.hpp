#pragma once

#include <cstddef>

namespace gpsacq {

enum class PulseKind { Ideal, Sinc };

struct PulseConfig {
  PulseKind kind = PulseKind::Ideal;
  /// Truncation half-width of the sinc pulse, in chips.
  double tg_chips = 8.0;
};

/// Binned delay-Doppler search space and the sampling grid it lives on.
///
/// Delay bins are q * delay_step_chips for q = 0..n_delays-1. Doppler bins
/// are k * doppler_step_hz for k = -doppler_half..doppler_half. The
/// Doppler step must be an integer multiple j of 1/T so that kernels that
/// differ only in Doppler are orthogonal over one symbol.
struct GridSpec {
  int m0 = 1023;
  int n_periods = 1;
  int oversample = 2;
  double chip_rate_hz = 1.023e6;
  double delay_step_chips = 0.5;
  double doppler_step_hz = 1000.0;
  int n_delays = 41;
  int doppler_half = 5;
  PulseConfig pulse;

  /// |Q| = ceil(tau_max / delay_step) + 1 and |K| = 2 ceil(f_max / doppler_step) + 1.
  static GridSpec from_limits(int m0, int n_periods, int oversample, double tau_max_chips,
                              double doppler_max_hz, double delay_step_chips,
                              double doppler_step_hz, PulseConfig pulse = {});

  /// Throws std::invalid_argument when the grid is inconsistent.
  void validate() const;

  int symbol_chips() const { return m0 * n_periods; }
  int samples_per_symbol() const { return oversample * symbol_chips(); }
  int delay_step_samples() const;
  int n_dopplers() const { return 2 * doppler_half + 1; }
  int bins_per_satellite() const { return n_dopplers() * n_delays; }
  /// Delay span of the grid in samples, (|Q| - 1) * step.
  int delay_span_samples() const { return (n_delays - 1) * delay_step_samples(); }

  double chip_period_s() const { return 1.0 / chip_rate_hz; }
  double symbol_period_s() const { return symbol_chips() * chip_period_s(); }
  double delta_tau_s() const { return delay_step_chips * chip_period_s(); }
  double delta_omega() const;
  /// j in delta_omega = 2 pi j / T.
  long doppler_multiple() const;

  double tau_max_chips() const { return (n_delays - 1) * delay_step_chips; }
  double doppler_max_hz() const { return doppler_half * doppler_step_hz; }
};

/// One hypothesis of the search space. k is the signed Doppler index.
struct BinIndex {
  int sat = 0;
  int k = 0;
  int q = 0;
  bool operator==(const BinIndex&) const = default;
};

/// Flattened column order shared by every module: satellite-major, then
/// Doppler (ascending k), then delay.
std::size_t flatten(const GridSpec& grid, const BinIndex& bin);
BinIndex unflatten(const GridSpec& grid, std::size_t index);
inline std::size_t total_bins(const GridSpec& grid, int n_sats) {
  return static_cast<std::size_t>(n_sats) * grid.bins_per_satellite();
}

}  // namespace gpsacq
