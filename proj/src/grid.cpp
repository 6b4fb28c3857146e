#include "gpsacq/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gpsacq/ca_codes.hpp"

namespace gpsacq {
namespace {

bool near_integer(double x, long& out) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) return false;
  out = static_cast<long>(r);
  return true;
}

}  // namespace

GridSpec GridSpec::from_limits(int m0, int n_periods, int oversample, double tau_max_chips,
                               double doppler_max_hz, double delay_step_chips,
                               double doppler_step_hz, PulseConfig pulse) {
  if (tau_max_chips < 0 || doppler_max_hz < 0) {
    throw std::invalid_argument("search limits must be non-negative");
  }
  if (delay_step_chips <= 0 || doppler_step_hz <= 0) {
    throw std::invalid_argument("delay and Doppler steps must be positive");
  }
  GridSpec grid;
  grid.m0 = m0;
  grid.n_periods = n_periods;
  grid.oversample = oversample;
  grid.delay_step_chips = delay_step_chips;
  grid.doppler_step_hz = doppler_step_hz;
  // Guard the ceilings against ratios like 20 / 0.5 landing a hair above 40.
  grid.n_delays = static_cast<int>(std::ceil(tau_max_chips / delay_step_chips - 1e-9)) + 1;
  grid.doppler_half = static_cast<int>(std::ceil(doppler_max_hz / doppler_step_hz - 1e-9));
  grid.pulse = pulse;
  grid.validate();
  return grid;
}

void GridSpec::validate() const {
  if (!supported_code_length(m0)) {
    throw std::invalid_argument("unsupported code length " + std::to_string(m0));
  }
  if (n_periods < 1) throw std::invalid_argument("n_periods must be >= 1");
  if (oversample < 1) throw std::invalid_argument("oversample must be >= 1");
  if (chip_rate_hz <= 0) throw std::invalid_argument("chip rate must be positive");
  if (n_delays < 1) throw std::invalid_argument("delay grid is empty");
  if (doppler_half < 0) throw std::invalid_argument("Doppler grid is empty");
  if (pulse.kind == PulseKind::Sinc && pulse.tg_chips <= 0) {
    throw std::invalid_argument("sinc truncation tg_chips must be positive");
  }
  delay_step_samples();
  doppler_multiple();
  if (delay_span_samples() >= samples_per_symbol()) {
    throw std::invalid_argument("delay span must be shorter than one symbol");
  }
}

int GridSpec::delay_step_samples() const {
  long step = 0;
  if (!near_integer(delay_step_chips * oversample, step) || step < 1) {
    throw std::invalid_argument("delay step " + std::to_string(delay_step_chips) +
                                " chips is not a whole number of samples at oversample " +
                                std::to_string(oversample));
  }
  return static_cast<int>(step);
}

long GridSpec::doppler_multiple() const {
  long j = 0;
  if (!near_integer(doppler_step_hz * symbol_period_s(), j) || j < 1) {
    throw std::invalid_argument("Doppler step " + std::to_string(doppler_step_hz) +
                                " Hz is not a positive integer multiple of 1/T = " +
                                std::to_string(1.0 / symbol_period_s()) + " Hz");
  }
  return j;
}

double GridSpec::delta_omega() const { return 2.0 * std::numbers::pi * doppler_step_hz; }

std::size_t flatten(const GridSpec& grid, const BinIndex& bin) {
  const std::size_t k_idx = static_cast<std::size_t>(bin.k + grid.doppler_half);
  return (static_cast<std::size_t>(bin.sat) * grid.n_dopplers() + k_idx) * grid.n_delays +
         static_cast<std::size_t>(bin.q);
}

BinIndex unflatten(const GridSpec& grid, std::size_t index) {
  BinIndex bin;
  bin.q = static_cast<int>(index % grid.n_delays);
  index /= grid.n_delays;
  bin.k = static_cast<int>(index % grid.n_dopplers()) - grid.doppler_half;
  bin.sat = static_cast<int>(index / grid.n_dopplers());
  return bin;
}

}  // namespace gpsacq
