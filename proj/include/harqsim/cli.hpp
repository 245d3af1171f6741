#pragma once

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "harqsim/engine.hpp"
#include "harqsim/metrics.hpp"
#include "harqsim/scenario.hpp"

namespace harqsim {

// Splits a comma-separated strategy list, ignoring commas inside fixed(...).
inline std::vector<std::string> split_strategy_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  out.push_back(cur);
  std::vector<std::string> trimmed;
  for (auto& s : out) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    trimmed.push_back(s.substr(a, b - a + 1));
  }
  return trimmed;
}

inline bool parse_double_list(const std::string& text,
                              std::vector<double>& out, std::string& err) {
  out.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(item, &pos);
      while (pos < item.size() &&
             (item[pos] == ' ' || item[pos] == '\t'))
        ++pos;
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      err = "bad number '" + item + "'";
      return false;
    }
  }
  if (out.empty()) {
    err = "empty list";
    return false;
  }
  return true;
}

inline bool parse_seed_list(const std::string& text,
                            std::vector<std::uint64_t>& out,
                            std::string& err) {
  std::vector<double> vals;
  if (!parse_double_list(text, vals, err)) return false;
  out.clear();
  for (double v : vals) {
    if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
      err = "seeds must be non-negative integers";
      return false;
    }
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return true;
}

// Config file (optional) plus key=value overrides, applied in order.
inline Scenario build_scenario(const std::string& config_path,
                               const std::vector<std::string>& sets) {
  Scenario sc =
      config_path.empty() ? Scenario{} : load_scenario_file(config_path);
  std::vector<std::string> errs;
  for (const std::string& s : sets) {
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      errs.push_back("override '" + s + "': expected key=value");
      continue;
    }
    std::string err;
    if (!apply_scenario_kv(sc, s.substr(0, eq), s.substr(eq + 1), err))
      errs.push_back("override '" + s + "': " + err);
  }
  std::vector<std::string> bad = validate_scenario(sc);
  for (const auto& b : bad) errs.push_back(b);
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ScenarioError(msg);
  }
  return sc;
}

inline std::string timestamped_dir_name(const char* prefix) {
  std::time_t now = std::time(nullptr);
  std::tm tmv{};
#if defined(_WIN32)
  localtime_s(&tmv, &now);
#else
  localtime_r(&now, &tmv);
#endif
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tmv);
  std::string base = std::string(prefix) + "-" + buf;
  std::string name = base;
  int suffix = 2;
  while (std::filesystem::exists(name))
    name = base + "-" + std::to_string(suffix++);
  return name;
}

namespace detail_cli {

inline void write_text_file(const std::filesystem::path& p,
                            const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("short write on '" + p.string() + "'");
}

inline std::string sanitize_component(const std::string& s) {
  std::string out;
  for (char c : s) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9') || c == '-' || c == '_')
      out += c;
    else if (c == ',' || c == '(' || c == ')')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? std::string("x") : out;
}

}  // namespace detail_cli

// Writes the full artifact set of one finished run into dir.
inline void write_run_outputs(const RunResult& res,
                              const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  detail_cli::write_text_file(dir / "scenario.cfg",
                              serialize_scenario(res.scenario));
  detail_cli::write_text_file(dir / "summary.txt",
                              canonical_text(res.summary));
  {
    std::ostringstream os;
    export_packets_csv(res.log, os);
    detail_cli::write_text_file(dir / "packets.csv", os.str());
  }
  {
    std::ostringstream os;
    export_tbs_csv(res.log, os);
    detail_cli::write_text_file(dir / "tbs.csv", os.str());
  }
  if (!res.log.controller_trace.empty()) {
    std::ostringstream os;
    export_controller_trace_csv(res.log, os);
    detail_cli::write_text_file(dir / "controller_trace.csv", os.str());
  }
  if (!res.log.link_trace.empty()) {
    std::ostringstream os;
    export_link_trace_csv(res.log, os);
    detail_cli::write_text_file(dir / "link_trace.csv", os.str());
  }
}

struct RunOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;  // empty: timestamped directory under the cwd
};

struct SweepOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<double> values;  // penalty weights to sweep
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir;
  unsigned threads = 0;
};

struct CompareOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir;
  unsigned threads = 0;
};

// exit codes: 0 success, 1 runtime failure, 2 bad configuration/usage
inline int cmd_run(const RunOptions& opt, std::ostream& out,
                   std::ostream& err) {
  namespace fs = std::filesystem;
  fs::path dir;
  try {
    Scenario sc = build_scenario(opt.config_path, opt.sets);
    RunResult res = run_scenario(sc);
    if (!res.ok) {
      err << "run failed: " << res.error << "\n";
      return 1;
    }
    dir = opt.out_dir.empty() ? fs::path(timestamped_dir_name("harqsim-run"))
                              : fs::path(opt.out_dir);
    try {
      write_run_outputs(res, dir);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(dir, ec);  // leave no partial artifact behind
      throw;
    }
    out << "strategy=" << res.summary.strategy << " seed=" << res.summary.seed
        << " f_obj=" << fmt_g17(res.summary.f_obj)
        << " efficiency=" << fmt_g17(res.summary.resource_efficiency)
        << " app_loss=" << fmt_g17(res.summary.app_loss_rate)
        << " digest=" << summary_digest(res.summary) << "\n";
    out << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const ScenarioError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_sweep_v(const SweepOptions& opt, std::ostream& out,
                       std::ostream& err) {
  namespace fs = std::filesystem;
  fs::path dir;
  bool created = false;
  try {
    if (opt.values.empty()) {
      err << "sweep: no penalty values given\n";
      return 2;
    }
    Scenario base = build_scenario(opt.config_path, opt.sets);
    base.strategy = StrategySpec{StrategyKind::kAdaptive, {}};
    std::vector<Scenario> grid;
    for (double v : opt.values)
      for (std::uint64_t seed : opt.seeds) {
        Scenario sc = base;
        sc.v_param = v;
        sc.seed = seed;
        grid.push_back(sc);
      }
    dir = opt.out_dir.empty()
              ? fs::path(timestamped_dir_name("harqsim-sweep"))
              : fs::path(opt.out_dir);
    fs::create_directories(dir);
    created = true;
    std::vector<RunResult> results = run_many(grid, opt.threads);
    for (const auto& r : results)
      if (!r.ok) throw std::runtime_error("sweep run failed: " + r.error);
    std::string csv =
        "v,seed,f_obj,zeta_bar,z_final,z_over_t,time_avg_queue_tbe,"
        "resource_efficiency,ran_p99_ms,digest\n";
    std::size_t i = 0;
    for (double v : opt.values)
      for (std::uint64_t seed : opt.seeds) {
        const RunResult& r = results[i++];
        char sub[64];
        std::snprintf(sub, sizeof sub, "v%s_seed%llu", fmt_g17(v).c_str(),
                      static_cast<unsigned long long>(seed));
        write_run_outputs(r, dir / sub);
        csv += fmt_g17(v) + "," + std::to_string(seed) + "," +
               fmt_g17(r.summary.f_obj) + "," + fmt_g17(r.summary.zeta_bar) +
               "," + fmt_g17(r.summary.z_final) + "," +
               fmt_g17(r.summary.z_over_t) + "," +
               fmt_g17(r.summary.time_avg_queue_tbe) + "," +
               fmt_g17(r.summary.resource_efficiency) + "," +
               fmt_g17(r.summary.ran_latency_ms.p99) + "," +
               summary_digest(r.summary) + "\n";
      }
    detail_cli::write_text_file(dir / "results.csv", csv);
    out << "swept " << opt.values.size() << " penalty values x "
        << opt.seeds.size() << " seeds\n";
    out << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const ScenarioError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    if (created) {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_compare(const CompareOptions& opt, std::ostream& out,
                       std::ostream& err) {
  namespace fs = std::filesystem;
  fs::path dir;
  bool created = false;
  try {
    if (opt.strategies.empty()) {
      err << "compare: no strategies given\n";
      return 2;
    }
    Scenario base = build_scenario(opt.config_path, opt.sets);
    std::vector<Scenario> grid;
    for (const std::string& name : opt.strategies) {
      StrategySpec spec;
      std::string perr;
      if (!parse_strategy(name, spec, perr)) throw ScenarioError(perr);
      for (std::uint64_t seed : opt.seeds) {
        Scenario sc = base;
        sc.strategy = spec;
        sc.seed = seed;
        grid.push_back(sc);
      }
    }
    dir = opt.out_dir.empty()
              ? fs::path(timestamped_dir_name("harqsim-compare"))
              : fs::path(opt.out_dir);
    fs::create_directories(dir);
    created = true;
    std::vector<RunResult> results = run_many(grid, opt.threads);
    for (const auto& r : results)
      if (!r.ok) throw std::runtime_error("compare run failed: " + r.error);
    std::string csv =
        "strategy,seed,f_obj,resource_efficiency,initial_bler,app_loss_rate,"
        "ran_mean_ms,ran_p50_ms,ran_p95_ms,ran_p99_ms,app_p99_ms,"
        "throughput_app_mbps,zeta_bar,digest\n";
    std::size_t i = 0;
    for (const std::string& name : opt.strategies)
      for (std::uint64_t seed : opt.seeds) {
        const RunResult& r = results[i++];
        std::string sub = detail_cli::sanitize_component(name) + "_seed" +
                          std::to_string(seed);
        write_run_outputs(r, dir / sub);
        csv += r.summary.strategy + "," + std::to_string(seed) + "," +
               fmt_g17(r.summary.f_obj) + "," +
               fmt_g17(r.summary.resource_efficiency) + "," +
               fmt_g17(r.summary.initial_bler) + "," +
               fmt_g17(r.summary.app_loss_rate) + "," +
               fmt_g17(r.summary.ran_latency_ms.mean) + "," +
               fmt_g17(r.summary.ran_latency_ms.p50) + "," +
               fmt_g17(r.summary.ran_latency_ms.p95) + "," +
               fmt_g17(r.summary.ran_latency_ms.p99) + "," +
               fmt_g17(r.summary.app_latency_ms.p99) + "," +
               fmt_g17(r.summary.throughput_app_mbps) + "," +
               fmt_g17(r.summary.zeta_bar) + "," + summary_digest(r.summary) +
               "\n";
      }
    detail_cli::write_text_file(dir / "results.csv", csv);
    out << "compared " << opt.strategies.size() << " strategies x "
        << opt.seeds.size() << " seeds\n";
    out << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const ScenarioError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    if (created) {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace harqsim
