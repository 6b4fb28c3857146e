#include "gpsacq/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace gpsacq {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an unsigned integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, F conv) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(conv(item));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F conv) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += conv(values[i]);
  }
  return out;
}

}  // namespace

std::string to_string(Receiver r) { return r == Receiver::MF ? "mf" : "cs"; }
std::string to_string(Solver s) { return s == Solver::Omp ? "omp" : "rembo"; }

Receiver parse_receiver(const std::string& text) {
  if (text == "mf" || text == "MF") return Receiver::MF;
  if (text == "cs" || text == "CS") return Receiver::CS;
  throw ConfigError("unknown receiver '" + text + "' (expected mf or cs)");
}

Solver parse_solver(const std::string& text) {
  if (text == "omp") return Solver::Omp;
  if (text == "rembo") return Solver::Rembo;
  throw ConfigError("unknown solver '" + text + "' (expected omp or rembo)");
}

void SimConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> table = {
      {"m0", [&](const std::string& s) { m0 = to_int(key, s); }},
      {"n_periods", [&](const std::string& s) { n_periods = to_int(key, s); }},
      {"oversample", [&](const std::string& s) { oversample = to_int(key, s); }},
      {"delta_tau_chips", [&](const std::string& s) { delta_tau_chips = to_double(key, s); }},
      {"doppler_step_hz", [&](const std::string& s) { doppler_step_hz = to_double(key, s); }},
      {"tau_max_chips", [&](const std::string& s) { tau_max_chips = to_double(key, s); }},
      {"doppler_max_hz", [&](const std::string& s) { doppler_max_hz = to_double(key, s); }},
      {"pulse",
       [&](const std::string& s) {
         if (s == "ideal") pulse = PulseKind::Ideal;
         else if (s == "sinc") pulse = PulseKind::Sinc;
         else throw ConfigError("config key 'pulse': expected ideal or sinc, got '" + s + "'");
       }},
      {"tg_chips", [&](const std::string& s) { tg_chips = to_double(key, s); }},
      {"i_total", [&](const std::string& s) { i_total = to_int(key, s); }},
      {"i_active", [&](const std::string& s) { i_active = to_int(key, s); }},
      {"paths_r", [&](const std::string& s) { paths_r = to_int(key, s); }},
      {"on_grid", [&](const std::string& s) { on_grid = to_bool(key, s); }},
      {"n_sym", [&](const std::string& s) { n_sym = to_int(key, s); }},
      {"snr_db", [&](const std::string& s) { snr_db = to_double(key, s); }},
      {"seed", [&](const std::string& s) { seed = to_u64(key, s); }},
      {"receiver", [&](const std::string& s) { receiver = parse_receiver(s); }},
      {"p", [&](const std::string& s) { p = to_long(key, s); }},
      {"matrix",
       [&](const std::string& s) {
         try {
           matrix = parse_matrix_kind(s);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"matrix_seed", [&](const std::string& s) { matrix_seed = to_u64(key, s); }},
      {"matrix_file", [&](const std::string& s) { matrix_file = s; }},
      {"dictionary",
       [&](const std::string& s) {
         try {
           dictionary = parse_dictionary_kind(s);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"solver", [&](const std::string& s) { solver = parse_solver(s); }},
      {"sparsity", [&](const std::string& s) { sparsity = to_int(key, s); }},
      {"stop_tol", [&](const std::string& s) { stop_tol = to_double(key, s); }},
      {"ctf", [&](const std::string& s) { ctf = to_bool(key, s); }},
      {"rank_tol", [&](const std::string& s) { rank_tol = to_double(key, s); }},
      {"ctf_max_rank", [&](const std::string& s) { ctf_max_rank = to_int(key, s); }},
      {"boosts", [&](const std::string& s) { boosts = to_int(key, s); }},
      {"snr_list",
       [&](const std::string& s) {
         snr_list = to_list<double>(s, [&](const std::string& x) { return to_double(key, x); });
       }},
      {"p_list",
       [&](const std::string& s) {
         p_list = to_list<long>(s, [&](const std::string& x) { return to_long(key, x); });
       }},
      {"n_sym_list",
       [&](const std::string& s) {
         n_sym_list = to_list<int>(s, [&](const std::string& x) { return to_int(key, x); });
       }},
      {"receivers",
       [&](const std::string& s) { receivers = to_list<Receiver>(s, [](const std::string& x) { return parse_receiver(x); }); }},
      {"trials", [&](const std::string& s) { trials = to_int(key, s); }},
      {"output", [&](const std::string& s) { output = s; }},
      {"bench_p_list",
       [&](const std::string& s) {
         bench_p_list = to_list<long>(s, [&](const std::string& x) { return to_long(key, x); });
       }},
      {"bench_reps", [&](const std::string& s) { bench_reps = to_int(key, s); }},
  };
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(v);
}

std::vector<std::pair<std::string, std::string>> SimConfig::entries() const {
  const auto num = [](double v) { return fmt(v); };
  const auto integer = [](auto v) { return std::to_string(v); };
  return {
      {"m0", integer(m0)},
      {"n_periods", integer(n_periods)},
      {"oversample", integer(oversample)},
      {"delta_tau_chips", num(delta_tau_chips)},
      {"doppler_step_hz", num(doppler_step_hz)},
      {"tau_max_chips", num(tau_max_chips)},
      {"doppler_max_hz", num(doppler_max_hz)},
      {"pulse", pulse == PulseKind::Ideal ? "ideal" : "sinc"},
      {"tg_chips", num(tg_chips)},
      {"i_total", integer(i_total)},
      {"i_active", integer(i_active)},
      {"paths_r", integer(paths_r)},
      {"on_grid", on_grid ? "true" : "false"},
      {"n_sym", integer(n_sym)},
      {"snr_db", num(snr_db)},
      {"seed", integer(seed)},
      {"receiver", to_string(receiver)},
      {"p", integer(p)},
      {"matrix", to_string(matrix)},
      {"matrix_seed", integer(matrix_seed)},
      {"matrix_file", matrix_file},
      {"dictionary", to_string(dictionary)},
      {"solver", to_string(solver)},
      {"sparsity", integer(sparsity)},
      {"stop_tol", num(stop_tol)},
      {"ctf", ctf ? "true" : "false"},
      {"rank_tol", num(rank_tol)},
      {"ctf_max_rank", integer(ctf_max_rank)},
      {"boosts", integer(boosts)},
      {"snr_list", join(snr_list, num)},
      {"p_list", join(p_list, integer)},
      {"n_sym_list", join(n_sym_list, integer)},
      {"receivers", join(receivers, [](Receiver r) { return to_string(r); })},
      {"trials", integer(trials)},
      {"output", output},
      {"bench_p_list", join(bench_p_list, integer)},
      {"bench_reps", integer(bench_reps)},
  };
}

GridSpec SimConfig::grid() const {
  try {
    return GridSpec::from_limits(m0, n_periods, oversample, tau_max_chips, doppler_max_hz,
                                 delta_tau_chips, doppler_step_hz, {pulse, tg_chips});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

ChannelParams SimConfig::channel(int n) const {
  ChannelParams params;
  params.i_total = i_total;
  params.i_active = i_active;
  params.paths_r = paths_r;
  params.tau_max_chips = tau_max_chips;
  params.doppler_max_hz = doppler_max_hz;
  params.on_grid = on_grid;
  params.n_sym = n;
  return params;
}

void SimConfig::validate() const {
  grid();
  if (pulse == PulseKind::Sinc && tg_chips <= 0) throw ConfigError("tg_chips must be positive");
  if (i_total < 1 || i_total > max_prn(m0)) {
    throw ConfigError("i_total must lie in 1.." + std::to_string(max_prn(m0)) + " for m0 = " +
                      std::to_string(m0));
  }
  if (i_active < 0 || i_active > i_total) throw ConfigError("i_active must lie in 0..i_total");
  if (paths_r < 1) throw ConfigError("paths_r must be >= 1");
  if (n_sym < 1) throw ConfigError("n_sym must be >= 1");
  if (std::isnan(snr_db)) throw ConfigError("snr_db is NaN");
  const long dims = static_cast<long>(total_bins(grid(), i_total));
  const auto check_p = [&](long value) {
    if (value < 1) throw ConfigError("P must be >= 1");
    if (value > dims) {
      throw ConfigError("P = " + std::to_string(value) + " exceeds the " + std::to_string(dims) +
                        " bins; no compression");
    }
    if (effective_sparsity() > value) throw ConfigError("sparsity exceeds P = " + std::to_string(value));
  };
  if (matrix_file.empty()) {
    if (matrix == MatrixKind::UserSupplied) throw ConfigError("matrix = user_supplied needs matrix_file");
    check_p(p);
    for (long v : p_list) check_p(v);
  }
  if (sparsity < 0) throw ConfigError("sparsity must be >= 0");
  if (stop_tol < 0) throw ConfigError("stop_tol must be >= 0");
  if (rank_tol < 0) throw ConfigError("rank_tol must be >= 0");
  if (ctf_max_rank < -1) throw ConfigError("ctf_max_rank must be -1, 0 or positive");
  if (boosts < 1) throw ConfigError("boosts must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (snr_list.empty()) throw ConfigError("snr_list is empty");
  if (n_sym_list.empty()) throw ConfigError("n_sym_list is empty");
  for (int n : n_sym_list) {
    if (n < 1) throw ConfigError("n_sym_list entries must be >= 1");
  }
  for (double s : snr_list) {
    if (std::isnan(s)) throw ConfigError("snr_list holds NaN");
  }
  if (receivers.empty()) throw ConfigError("receivers is empty");
  const bool wants_cs = std::find(receivers.begin(), receivers.end(), Receiver::CS) != receivers.end();
  if (wants_cs && p_list.empty() && matrix_file.empty()) throw ConfigError("p_list is empty");
  for (long v : bench_p_list) {
    if (v < 1 || v > dims) throw ConfigError("bench_p_list entries must lie in 1..I|K||Q|");
  }
  if (bench_reps < 1) throw ConfigError("bench_reps must be >= 1");
}

SimConfig parse_config(std::istream& in) {
  SimConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void apply_paper_scale(SimConfig& cfg) {
  cfg.n_periods = 20;
  cfg.doppler_step_hz = 500.0;
  cfg.doppler_max_hz = 2500.0;
}

}  // namespace gpsacq
