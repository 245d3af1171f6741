#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace harqsim {

// Raised by config parsing/validation; message lists every violation found.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StrategyKind { kReactive, kFixed, kAdaptive };

struct StrategySpec {
  StrategyKind kind = StrategyKind::kAdaptive;
  std::vector<int> pattern;  // per-cluster redundancy, fixed strategy only
};

enum class ArrivalProcess { kPoisson, kDeterministic };

// Full immutable run configuration. Field defaults are the reference
// factory-floor setup the acceptance studies use.
struct Scenario {
  // radio / PHY
  double fc_ghz = 3.5;
  double bw_hz = 50e6;
  int numerology = 1;
  double ptx_dbm = 8.0;
  int mcs_index = 5;
  int modulation_order = 2;
  double code_rate = 0.3701;
  double beta_eesm = 1.0;
  double sinr_target_db = 17.0;  // decode threshold; see README calibration
  int utx = 16;
  int srx = 4;
  double noise_figure_db = 5.0;
  int n_ofdm = 12;

  // HARQ / MAC timing and budgets
  int k1_slots = 2;
  int l12_slots = 2;
  int r_max_total = 10;  // lifetime transmission budget, initial tx included
  int c_max = 5;         // retransmission-cluster cap for the adaptive mode
  int r_min = 2;
  int r_max_cluster = 5;

  // adaptive controller
  double zeta_o = 0.05;
  double v_param = 60.0;
  int risk_window = 500;
  int risk_min_obs = 30;
  int risk_mc_samples = 2048;
  double risk_prior_mean_linear = 150.0;
  double risk_prior_sigma_linear = 150.0;
  int arrival_window_slots = 200;

  // geometry / channel
  double d0_m = 110.0;
  double velocity_x_mps = 4.0;
  double velocity_y_mps = 4.0;
  double d_clutter_m = 10.0;
  double clutter_density = 0.3;
  double shadowing_sigma_los_db = 4.0;
  double shadowing_sigma_nlos_db = 5.7;
  double decorrelation_dist_m = 10.0;
  bool shadowing_enabled = true;
  bool fading_enabled = true;
  bool los_redraw_per_slot = false;

  // traffic
  double t_on_ms = 2.5;
  double t_off_ms = 2.5;
  double mean_packet_bytes = 50.0;
  double lambda_on = 1.0;  // packets per slot while ON
  ArrivalProcess arrival_process = ArrivalProcess::kPoisson;
  bool traffic_enabled = true;

  // run control
  StrategySpec strategy;
  std::uint64_t seed = 1;
  std::int64_t sim_slots = 20000;
  bool collect_link_trace = false;
  bool collect_controller_trace = true;
};

// ---- numerology helpers ----

inline double scs_khz(int numerology) {
  if (numerology < 0 || numerology > 4)
    throw ScenarioError("numerology must be in [0,4], got " +
                        std::to_string(numerology));
  return 15.0 * static_cast<double>(1 << numerology);
}

inline double slot_duration_ms(int numerology) {
  if (numerology < 0 || numerology > 4)
    throw ScenarioError("numerology must be in [0,4], got " +
                        std::to_string(numerology));
  return 1.0 / static_cast<double>(1 << numerology);
}

// ---- strategy spec formatting ----

inline std::string strategy_to_string(const StrategySpec& s) {
  switch (s.kind) {
    case StrategyKind::kReactive:
      return "reactive";
    case StrategyKind::kAdaptive:
      return "adaptive";
    case StrategyKind::kFixed: {
      std::string out = "fixed(";
      for (std::size_t i = 0; i < s.pattern.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s.pattern[i]);
      }
      return out + ")";
    }
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0") {
    out = false;
    return true;
  }
  return false;
}

inline bool parse_double(const std::string& v, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(v, &pos);
    return pos == v.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_i64(const std::string& v, std::int64_t& out) {
  try {
    std::size_t pos = 0;
    out = std::stoll(v, &pos);
    return pos == v.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_u64(const std::string& v, std::uint64_t& out) {
  try {
    std::size_t pos = 0;
    out = std::stoull(v, &pos);
    return pos == v.size();
  } catch (...) {
    return false;
  }
}

}  // namespace detail

inline bool parse_strategy(const std::string& text, StrategySpec& out,
                           std::string& err) {
  std::string v = detail::trim(text);
  if (v == "reactive") {
    out = {StrategyKind::kReactive, {}};
    return true;
  }
  if (v == "adaptive") {
    out = {StrategyKind::kAdaptive, {}};
    return true;
  }
  if (v.rfind("fixed(", 0) == 0 && v.back() == ')') {
    std::string body = v.substr(6, v.size() - 7);
    StrategySpec s{StrategyKind::kFixed, {}};
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::int64_t r;
      if (!detail::parse_i64(detail::trim(item), r)) {
        err = "bad fixed-pattern entry '" + item + "'";
        return false;
      }
      s.pattern.push_back(static_cast<int>(r));
    }
    if (s.pattern.empty()) {
      err = "fixed pattern must not be empty";
      return false;
    }
    out = s;
    return true;
  }
  err = "unknown strategy '" + v +
        "' (expected reactive, adaptive, or fixed(a,b,...))";
  return false;
}

// Applies one key=value assignment; returns false (with message) for unknown
// keys or malformed values. Unknown keys are hard errors by design.
inline bool apply_scenario_kv(Scenario& sc, const std::string& key,
                              const std::string& val, std::string& err) {
  auto bad = [&](const char* what) {
    err = "key '" + key + "': expected " + what + ", got '" + val + "'";
    return false;
  };
  auto setd = [&](double& f) {
    double d;
    if (!detail::parse_double(val, d)) return bad("a number");
    f = d;
    return true;
  };
  auto seti = [&](int& f) {
    std::int64_t d;
    if (!detail::parse_i64(val, d)) return bad("an integer");
    f = static_cast<int>(d);
    return true;
  };
  auto setb = [&](bool& f) {
    bool b;
    if (!detail::parse_bool(val, b)) return bad("true/false");
    f = b;
    return true;
  };

  if (key == "fc_ghz") return setd(sc.fc_ghz);
  if (key == "bw_hz") return setd(sc.bw_hz);
  if (key == "numerology") return seti(sc.numerology);
  if (key == "ptx_dbm") return setd(sc.ptx_dbm);
  if (key == "mcs_index") return seti(sc.mcs_index);
  if (key == "modulation_order") return seti(sc.modulation_order);
  if (key == "code_rate") return setd(sc.code_rate);
  if (key == "beta_eesm") return setd(sc.beta_eesm);
  if (key == "sinr_target_db") return setd(sc.sinr_target_db);
  if (key == "utx") return seti(sc.utx);
  if (key == "srx") return seti(sc.srx);
  if (key == "noise_figure_db") return setd(sc.noise_figure_db);
  if (key == "n_ofdm") return seti(sc.n_ofdm);
  if (key == "k1_slots") return seti(sc.k1_slots);
  if (key == "l12_slots") return seti(sc.l12_slots);
  if (key == "r_max_total") return seti(sc.r_max_total);
  if (key == "c_max") return seti(sc.c_max);
  if (key == "r_min") return seti(sc.r_min);
  if (key == "r_max_cluster") return seti(sc.r_max_cluster);
  if (key == "zeta_o") return setd(sc.zeta_o);
  if (key == "v_param") return setd(sc.v_param);
  if (key == "risk_window") return seti(sc.risk_window);
  if (key == "risk_min_obs") return seti(sc.risk_min_obs);
  if (key == "risk_mc_samples") return seti(sc.risk_mc_samples);
  if (key == "risk_prior_mean_linear") return setd(sc.risk_prior_mean_linear);
  if (key == "risk_prior_sigma_linear")
    return setd(sc.risk_prior_sigma_linear);
  if (key == "arrival_window_slots") return seti(sc.arrival_window_slots);
  if (key == "d0_m") return setd(sc.d0_m);
  if (key == "velocity_x_mps") return setd(sc.velocity_x_mps);
  if (key == "velocity_y_mps") return setd(sc.velocity_y_mps);
  if (key == "d_clutter_m") return setd(sc.d_clutter_m);
  if (key == "clutter_density") return setd(sc.clutter_density);
  if (key == "shadowing_sigma_los_db")
    return setd(sc.shadowing_sigma_los_db);
  if (key == "shadowing_sigma_nlos_db")
    return setd(sc.shadowing_sigma_nlos_db);
  if (key == "decorrelation_dist_m") return setd(sc.decorrelation_dist_m);
  if (key == "shadowing_enabled") return setb(sc.shadowing_enabled);
  if (key == "fading_enabled") return setb(sc.fading_enabled);
  if (key == "los_redraw_per_slot") return setb(sc.los_redraw_per_slot);
  if (key == "t_on_ms") return setd(sc.t_on_ms);
  if (key == "t_off_ms") return setd(sc.t_off_ms);
  if (key == "mean_packet_bytes") return setd(sc.mean_packet_bytes);
  if (key == "lambda_on") return setd(sc.lambda_on);
  if (key == "arrival_process") {
    if (val == "poisson") {
      sc.arrival_process = ArrivalProcess::kPoisson;
      return true;
    }
    if (val == "deterministic") {
      sc.arrival_process = ArrivalProcess::kDeterministic;
      return true;
    }
    return bad("poisson|deterministic");
  }
  if (key == "traffic_enabled") return setb(sc.traffic_enabled);
  if (key == "strategy") {
    std::string serr;
    if (!parse_strategy(val, sc.strategy, serr)) {
      err = "key 'strategy': " + serr;
      return false;
    }
    return true;
  }
  if (key == "seed") {
    std::uint64_t s;
    if (!detail::parse_u64(val, s)) return bad("an unsigned integer");
    sc.seed = s;
    return true;
  }
  if (key == "sim_slots") {
    std::int64_t s;
    if (!detail::parse_i64(val, s)) return bad("an integer");
    sc.sim_slots = s;
    return true;
  }
  if (key == "collect_link_trace") return setb(sc.collect_link_trace);
  if (key == "collect_controller_trace")
    return setb(sc.collect_controller_trace);

  err = "unknown key '" + key + "'";
  return false;
}

// All validation rules in one place; returns every violation, not just the
// first one.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> v;
  auto req = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  req(sc.fc_ghz > 0, "fc_ghz must be > 0");
  req(sc.bw_hz > 0, "bw_hz must be > 0");
  req(sc.numerology >= 0 && sc.numerology <= 4,
      "numerology must be in [0,4]");
  req(sc.modulation_order >= 1, "modulation_order must be >= 1");
  req(sc.code_rate > 0 && sc.code_rate <= 1, "code_rate must be in (0,1]");
  req(sc.beta_eesm > 0, "beta_eesm must be > 0");
  req(sc.utx >= 1, "utx must be >= 1");
  req(sc.srx >= 1, "srx must be >= 1");
  req(sc.n_ofdm >= 1 && sc.n_ofdm <= 12, "n_ofdm must be in [1,12]");
  req(sc.k1_slots >= 1, "k1_slots must be >= 1");
  req(sc.l12_slots >= 0, "l12_slots must be >= 0");
  req(sc.r_max_total >= 1, "r_max_total must be >= 1");
  req(sc.c_max >= 1, "c_max must be >= 1");
  req(sc.r_min >= 1, "r_min must be >= 1");
  req(sc.r_max_cluster >= sc.r_min, "r_max_cluster must be >= r_min");
  req(sc.zeta_o > 0 && sc.zeta_o <= 1, "zeta_o must be in (0,1]");
  req(sc.v_param >= 0, "v_param must be >= 0");
  req(sc.risk_window >= 1, "risk_window must be >= 1");
  req(sc.risk_min_obs >= 0, "risk_min_obs must be >= 0");
  req(sc.risk_mc_samples >= 1, "risk_mc_samples must be >= 1");
  req(sc.risk_prior_mean_linear > 0, "risk_prior_mean_linear must be > 0");
  req(sc.risk_prior_sigma_linear > 0, "risk_prior_sigma_linear must be > 0");
  req(sc.arrival_window_slots >= 1, "arrival_window_slots must be >= 1");
  req(sc.d0_m > 0, "d0_m must be > 0");
  req(sc.d_clutter_m > 0, "d_clutter_m must be > 0");
  req(sc.clutter_density > 0 && sc.clutter_density < 1,
      "clutter_density must be in (0,1)");
  req(sc.shadowing_sigma_los_db >= 0,
      "shadowing_sigma_los_db must be >= 0");
  req(sc.shadowing_sigma_nlos_db >= 0,
      "shadowing_sigma_nlos_db must be >= 0");
  req(sc.decorrelation_dist_m > 0, "decorrelation_dist_m must be > 0");
  req(sc.t_on_ms > 0, "t_on_ms must be > 0");
  req(sc.t_off_ms > 0, "t_off_ms must be > 0");
  req(sc.mean_packet_bytes >= 1, "mean_packet_bytes must be >= 1");
  req(sc.lambda_on >= 0, "lambda_on must be >= 0");
  req(sc.sim_slots >= 0, "sim_slots must be >= 0");

  if (sc.strategy.kind == StrategyKind::kFixed) {
    const auto& p = sc.strategy.pattern;
    if (p.empty()) {
      v.push_back("fixed pattern must have at least one cluster");
    } else {
      int sum = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        sum += p[i];
        if (p[i] < 1)
          v.push_back("fixed pattern entry " + std::to_string(i) +
                      " must be >= 1");
        bool terminal = (i + 1 == p.size());
        if (p[i] > sc.r_max_cluster)
          v.push_back("fixed pattern entry " + std::to_string(i) + " (" +
                      std::to_string(p[i]) + ") exceeds r_max_cluster");
        if (p[i] < sc.r_min && !terminal)
          v.push_back("fixed pattern entry " + std::to_string(i) + " (" +
                      std::to_string(p[i]) + ") is below r_min");
      }
      if (sum > sc.r_max_total)
        v.push_back("fixed pattern sums to " + std::to_string(sum) +
                    " which exceeds r_max_total=" +
                    std::to_string(sc.r_max_total));
      // a short terminal entry is only allowed when it tops the pattern up
      // to the full transmission budget
      if (!p.empty() && p.back() < sc.r_min && sum != sc.r_max_total)
        v.push_back(
            "fixed pattern terminal entry below r_min is only allowed when "
            "the pattern sums exactly to r_max_total");
    }
  }
  return v;
}

inline void throw_if_invalid(const Scenario& sc) {
  auto errs = validate_scenario(sc);
  if (errs.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& e : errs) msg += "\n  - " + e;
  throw ScenarioError(msg);
}

// Parses the flat key=value format ('#' starts a comment). Later assignments
// override earlier ones; unknown keys and malformed values are collected and
// reported together.
inline Scenario load_scenario(const std::string& text) {
  Scenario sc;
  std::vector<std::string> errs;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back("line " + std::to_string(lineno) +
                     ": expected key=value, got '" + line + "'");
      continue;
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    std::string err;
    if (!apply_scenario_kv(sc, key, val, err))
      errs.push_back("line " + std::to_string(lineno) + ": " + err);
  }
  if (!errs.empty()) {
    std::string msg = "config parse failed:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ScenarioError(msg);
  }
  throw_if_invalid(sc);
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

namespace detail {

inline std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

}  // namespace detail

// Canonical text form; load_scenario(serialize_scenario(sc)) reproduces sc
// field-for-field.
inline std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream o;
  auto kd = [&](const char* k, double v) {
    o << k << " = " << detail::fmt_double(v) << "\n";
  };
  auto ki = [&](const char* k, std::int64_t v) { o << k << " = " << v << "\n"; };
  auto kb = [&](const char* k, bool v) {
    o << k << " = " << (v ? "true" : "false") << "\n";
  };
  kd("fc_ghz", sc.fc_ghz);
  kd("bw_hz", sc.bw_hz);
  ki("numerology", sc.numerology);
  kd("ptx_dbm", sc.ptx_dbm);
  ki("mcs_index", sc.mcs_index);
  ki("modulation_order", sc.modulation_order);
  kd("code_rate", sc.code_rate);
  kd("beta_eesm", sc.beta_eesm);
  kd("sinr_target_db", sc.sinr_target_db);
  ki("utx", sc.utx);
  ki("srx", sc.srx);
  kd("noise_figure_db", sc.noise_figure_db);
  ki("n_ofdm", sc.n_ofdm);
  ki("k1_slots", sc.k1_slots);
  ki("l12_slots", sc.l12_slots);
  ki("r_max_total", sc.r_max_total);
  ki("c_max", sc.c_max);
  ki("r_min", sc.r_min);
  ki("r_max_cluster", sc.r_max_cluster);
  kd("zeta_o", sc.zeta_o);
  kd("v_param", sc.v_param);
  ki("risk_window", sc.risk_window);
  ki("risk_min_obs", sc.risk_min_obs);
  ki("risk_mc_samples", sc.risk_mc_samples);
  kd("risk_prior_mean_linear", sc.risk_prior_mean_linear);
  kd("risk_prior_sigma_linear", sc.risk_prior_sigma_linear);
  ki("arrival_window_slots", sc.arrival_window_slots);
  kd("d0_m", sc.d0_m);
  kd("velocity_x_mps", sc.velocity_x_mps);
  kd("velocity_y_mps", sc.velocity_y_mps);
  kd("d_clutter_m", sc.d_clutter_m);
  kd("clutter_density", sc.clutter_density);
  kd("shadowing_sigma_los_db", sc.shadowing_sigma_los_db);
  kd("shadowing_sigma_nlos_db", sc.shadowing_sigma_nlos_db);
  kd("decorrelation_dist_m", sc.decorrelation_dist_m);
  kb("shadowing_enabled", sc.shadowing_enabled);
  kb("fading_enabled", sc.fading_enabled);
  kb("los_redraw_per_slot", sc.los_redraw_per_slot);
  kd("t_on_ms", sc.t_on_ms);
  kd("t_off_ms", sc.t_off_ms);
  kd("mean_packet_bytes", sc.mean_packet_bytes);
  kd("lambda_on", sc.lambda_on);
  o << "arrival_process = "
    << (sc.arrival_process == ArrivalProcess::kPoisson ? "poisson"
                                                       : "deterministic")
    << "\n";
  kb("traffic_enabled", sc.traffic_enabled);
  o << "strategy = " << strategy_to_string(sc.strategy) << "\n";
  o << "seed = " << sc.seed << "\n";
  ki("sim_slots", sc.sim_slots);
  kb("collect_link_trace", sc.collect_link_trace);
  kb("collect_controller_trace", sc.collect_controller_trace);
  return o.str();
}

// FNV-1a over the canonical serialization; identifies a configuration in run
// metadata and output files.
inline std::uint64_t scenario_hash(const Scenario& sc) {
  std::string s = serialize_scenario(sc);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace harqsim
