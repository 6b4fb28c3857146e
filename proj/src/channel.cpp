#include "gpsacq/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

namespace gpsacq {
namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long wrap(long index, long period) {
  const long r = index % period;
  return r < 0 ? r + period : r;
}

// Chip-normalized pulse: t in chips, unit amplitude.
double unit_pulse(double t_chips, const PulseConfig& pulse) {
  if (pulse.kind == PulseKind::Ideal) return (t_chips >= 0.0 && t_chips < 1.0) ? 1.0 : 0.0;
  return std::abs(t_chips) <= pulse.tg_chips ? sinc(t_chips) : 0.0;
}

}  // namespace

double pulse_shape(double t_seconds, const PulseConfig& pulse, double chip_period_s) {
  if (chip_period_s <= 0) throw std::invalid_argument("chip period must be positive");
  if (pulse.kind == PulseKind::Sinc && pulse.tg_chips <= 0) {
    throw std::invalid_argument("sinc truncation tg_chips must be positive");
  }
  const double t_chips = t_seconds / chip_period_s;
  if (pulse.kind == PulseKind::Ideal) return unit_pulse(t_chips, pulse);
  return std::sqrt(chip_period_s) * unit_pulse(t_chips, pulse);
}

std::vector<double> spread_waveform(const CaCode& code, const GridSpec& grid) {
  const int l = grid.oversample;
  const int m = grid.symbol_chips();
  std::vector<double> wave(static_cast<std::size_t>(l) * m, 0.0);
  if (grid.pulse.kind == PulseKind::Ideal) {
    for (int c = 0; c < m; ++c) {
      for (int s = 0; s < l; ++s) wave[static_cast<std::size_t>(c) * l + s] = code.chip(c);
    }
    return wave;
  }
  const int reach = static_cast<int>(std::ceil(grid.pulse.tg_chips));
  for (std::size_t s = 0; s < wave.size(); ++s) {
    const double t = static_cast<double>(s) / l;
    const long c0 = static_cast<long>(std::floor(t));
    double acc = 0.0;
    for (long c = c0 - reach; c <= c0 + reach + 1; ++c) {
      acc += code.chip(wrap(c, m)) * unit_pulse(t - static_cast<double>(c), grid.pulse);
    }
    wave[s] = acc;
  }
  return wave;
}

int ChannelRealization::bit(int sat, long n) const {
  const auto it = nav_bits.find(sat);
  if (it == nav_bits.end() || it->second.empty()) return 1;
  const long last = static_cast<long>(it->second.size()) - 1;
  return it->second[static_cast<std::size_t>(std::clamp(n, 0L, last))];
}

cdouble ChannelRealization::amplitude(const ChannelPath& path, long n) const {
  return path.gain * static_cast<double>(bit(path.sat, n));
}

const ChannelPath& ChannelRealization::strongest_path(int sat) const {
  const ChannelPath* best = nullptr;
  for (const auto& p : paths) {
    if (p.sat != sat) continue;
    if (best == nullptr || std::norm(p.gain) > std::norm(best->gain)) best = &p;
  }
  if (best == nullptr) throw std::invalid_argument("satellite has no paths");
  return *best;
}

ChannelRealization draw_channel(std::uint64_t seed, const ChannelParams& params,
                                const GridSpec& grid) {
  if (params.i_total < 1) throw std::invalid_argument("i_total must be >= 1");
  if (params.i_active < 0 || params.i_active > params.i_total) {
    throw std::invalid_argument("i_active must lie in 0..i_total");
  }
  if (params.paths_r < 1) throw std::invalid_argument("paths_r must be >= 1");
  if (params.n_sym < 1) throw std::invalid_argument("n_sym must be >= 1");
  if (params.tau_max_chips < 0 || params.doppler_max_hz < 0) {
    throw std::invalid_argument("tau_max and doppler_max must be non-negative");
  }
  if (params.tau_max_chips > grid.tau_max_chips() + 1e-9) {
    throw std::invalid_argument("tau_max exceeds the delay grid span");
  }
  if (params.doppler_max_hz > grid.doppler_max_hz() + 1e-9) {
    throw std::invalid_argument("doppler_max exceeds the Doppler grid span");
  }

  std::mt19937_64 rng(seed);
  std::vector<int> sats(static_cast<std::size_t>(params.i_total));
  std::iota(sats.begin(), sats.end(), 0);
  std::shuffle(sats.begin(), sats.end(), rng);
  sats.resize(static_cast<std::size_t>(params.i_active));
  std::sort(sats.begin(), sats.end());

  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  ChannelRealization chan;
  chan.active = sats;
  chan.n_sym = params.n_sym;
  for (int sat : sats) {
    for (int r = 0; r < params.paths_r; ++r) {
      ChannelPath path;
      path.sat = sat;
      path.r = r;
      const double re = gauss(rng);
      const double im = gauss(rng);
      path.gain = {re, im};
      const double tau = params.tau_max_chips * unit(rng);
      const double f = params.doppler_max_hz * (2.0 * unit(rng) - 1.0);
      path.q = std::clamp(static_cast<int>(std::lround(tau / grid.delay_step_chips)), 0,
                          grid.n_delays - 1);
      path.k = std::clamp(static_cast<int>(std::lround(f / grid.doppler_step_hz)),
                          -grid.doppler_half, grid.doppler_half);
      path.on_grid = params.on_grid;
      if (params.on_grid) {
        path.delay_chips = path.q * grid.delay_step_chips;
        path.doppler_hz = path.k * grid.doppler_step_hz;
      } else {
        path.delay_chips = tau;
        path.doppler_hz = f;
      }
      chan.paths.push_back(path);
    }
    std::vector<int8_t> bits(static_cast<std::size_t>(params.n_sym));
    for (auto& b : bits) b = coin(rng) ? int8_t{1} : int8_t{-1};
    chan.nav_bits[sat] = std::move(bits);
  }
  return chan;
}

std::vector<cdouble> synthesize_clean(const ChannelRealization& channel, const CodeFamily& codes,
                                      const GridSpec& grid, int n_sym) {
  if (n_sym < 1) throw std::invalid_argument("n_sym must be >= 1");
  const int l = grid.oversample;
  const long lm = grid.samples_per_symbol();
  const long m = grid.symbol_chips();
  const long n_samples = n_sym * lm + grid.delay_span_samples();
  const long j = grid.doppler_multiple();
  std::vector<cdouble> out(static_cast<std::size_t>(n_samples));

  for (const auto& path : channel.paths) {
    if (path.sat < 0 || path.sat >= codes.size()) {
      throw std::invalid_argument("channel references a satellite outside the code family");
    }
    const CaCode& code = codes[path.sat];
    const double delay_samples = path.delay_chips * l;
    const long int_delay = std::lround(delay_samples);
    const bool integer_delay = std::abs(delay_samples - static_cast<double>(int_delay)) < 1e-12;
    const bool grid_doppler = path.on_grid && path.k * grid.doppler_step_hz == path.doppler_hz;
    const double omega_per_sample = 2.0 * std::numbers::pi * path.doppler_hz / (l * grid.chip_rate_hz);
    const int reach = static_cast<int>(std::ceil(grid.pulse.tg_chips));

    for (long s = 0; s < n_samples; ++s) {
      double value = 0.0;
      if (grid.pulse.kind == PulseKind::Ideal) {
        long chip_index;
        if (integer_delay) {
          chip_index = floor_div(s - int_delay, l);
        } else {
          chip_index = static_cast<long>(std::floor((static_cast<double>(s) - delay_samples) / l));
        }
        const long symbol = floor_div(chip_index, m);
        value = channel.bit(path.sat, symbol) * code.chip(chip_index);
      } else {
        const double t = (static_cast<double>(s) - delay_samples) / l;
        const long c0 = static_cast<long>(std::floor(t));
        for (long c = c0 - reach; c <= c0 + reach + 1; ++c) {
          const double g = unit_pulse(t - static_cast<double>(c), grid.pulse);
          if (g == 0.0) continue;
          value += channel.bit(path.sat, floor_div(c, m)) * code.chip(c) * g;
        }
      }
      cdouble rot;
      if (grid_doppler) {
        // Exact phase 2 pi k j s / (L M), periodic in the symbol.
        const long turns = wrap(static_cast<long>(path.k) * j * wrap(s, lm), lm);
        rot = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(turns) / static_cast<double>(lm));
      } else {
        rot = std::polar(1.0, omega_per_sample * static_cast<double>(s));
      }
      out[static_cast<std::size_t>(s)] += path.gain * value * rot;
    }
  }
  return out;
}

void add_noise(std::vector<cdouble>& samples, double variance, std::uint64_t seed) {
  if (variance <= 0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
  for (auto& x : samples) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    x += cdouble{re, im};
  }
}

SampledSignal add_awgn(std::vector<cdouble> clean, const GridSpec& grid, int n_sym, double snr_db,
                       std::uint64_t seed) {
  SampledSignal sig;
  sig.samples = std::move(clean);
  sig.n_sym = n_sym;
  sig.samples_per_symbol = grid.samples_per_symbol();
  sig.snr_db = snr_db;
  const std::size_t body = static_cast<std::size_t>(n_sym) * sig.samples_per_symbol;
  if (sig.samples.size() < body) throw std::invalid_argument("clean signal shorter than n_sym symbols");
  double power = 0.0;
  for (std::size_t s = 0; s < body; ++s) power += std::norm(sig.samples[s]);
  sig.signal_power = power / static_cast<double>(body);
  if (std::isinf(snr_db) && snr_db > 0) {
    sig.noise_variance = 0.0;
    return sig;
  }
  sig.noise_variance = sig.signal_power > 0 ? sig.signal_power / std::pow(10.0, snr_db / 10.0) : 1.0;
  add_noise(sig.samples, sig.noise_variance, seed);
  return sig;
}

SampledSignal synthesize_received(const ChannelRealization& channel, const CodeFamily& codes,
                                  const GridSpec& grid, int n_sym, double snr_db,
                                  std::uint64_t seed) {
  return add_awgn(synthesize_clean(channel, codes, grid, n_sym), grid, n_sym, snr_db, seed);
}

}  // namespace gpsacq
