#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "harqsim/controller.hpp"
#include "harqsim/harq.hpp"
#include "harqsim/scenario.hpp"

namespace harqsim {

// ---- raw per-run records ----

struct PacketRecord {
  std::int64_t id = 0;
  std::int64_t size_bytes = 0;
  std::int64_t arrival_slot = 0;
  std::int64_t delivered_slot = -1;  // slot of the decode completing the packet
  std::int64_t delivered_bytes = 0;
  bool lost = false;  // a carrying TB was dropped
};

struct TbSummary {
  std::int64_t id = 0;
  std::int64_t payload_bytes = 0;
  std::int64_t built_slot = 0;
  std::int64_t first_tx_slot = 0;
  std::int64_t decode_slot = -1;
  std::int64_t completed_slot = -1;
  bool decoded = false;
  bool counted_in_q2 = false;
  int n_clusters = 0;  // initial transmission included
  std::int64_t allocated_slots = 0;
  std::int64_t needed_slots = 0;
  std::int64_t transmissions = 0;
  double final_risk = 0.0;
};

struct ControllerTraceRow {
  std::int64_t slot = 0;
  std::int64_t tb_id = 0;
  int cluster_index = 0;
  int r = 0;
  double gamma = 0.0;
  double risk = 0.0;
  double z = 0.0;
  double q1_tbe = 0.0;
  std::int64_t q2 = 0;
};

struct LinkTraceRow {
  std::int64_t slot = 0;
  double distance_m = 0.0;
  bool is_los = false;
  double shadowing_db = 0.0;
  double budget_db = 0.0;
};

// Everything the engine measures during one run. Per-slot accumulators are
// kept as running sums; derived statistics live in RunSummary.
struct MetricsLog {
  std::vector<PacketRecord> packets;
  std::vector<TbSummary> tbs;
  std::vector<ControllerTraceRow> controller_trace;
  std::vector<LinkTraceRow> link_trace;

  std::int64_t sim_slots = 0;
  std::int64_t arrived_bytes = 0;
  std::int64_t delivered_payload_bytes = 0;
  std::int64_t dropped_payload_bytes = 0;
  std::int64_t q1_bytes_final = 0;
  std::int64_t in_flight_bytes_final = 0;
  std::int64_t tbs_built = 0;
  std::int64_t tbs_censored = 0;
  std::int64_t tx_slots = 0;

  // per-slot sums (divide by sim_slots for time averages)
  double sum_q1_tbe = 0.0;
  double sum_q2 = 0.0;
  double sum_z = 0.0;
  double sum_a1 = 0.0;
  double sum_a2 = 0.0;
  double sum_b1 = 0.0;
  double sum_b2 = 0.0;
  double sum_a1_sq = 0.0;
  double sum_a2_sq = 0.0;
  double sum_b1_sq = 0.0;
  double sum_b2_sq = 0.0;
  double sum_a1_min_q1_b1 = 0.0;
  double sum_a2_min_q2_b2 = 0.0;
  double sum_zeta_gap = 0.0;

  double zeta_bar_final = 0.0;
  double z_final = 0.0;
  double controller_f_obj = 0.0;
  std::int64_t controller_completed = 0;
};

// All payload bytes that entered the system must end up delivered, dropped,
// still queued, or in the TB that was in flight at the horizon.
inline bool conservation_holds(const MetricsLog& log) {
  return log.arrived_bytes == log.delivered_payload_bytes +
                                  log.dropped_payload_bytes +
                                  log.q1_bytes_final +
                                  log.in_flight_bytes_final;
}

// ---- small statistics helpers ----

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_pop(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  double var = ss / static_cast<double>(v.size());
  return var > 0 ? std::sqrt(var) : 0.0;
}

inline double max_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return *std::max_element(v.begin(), v.end());
}

// Nearest-rank quantile: the ceil(level*n)-th smallest value (1-based).
inline double quantile_nearest_rank(std::vector<double> v, double level) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::int64_t n = static_cast<std::int64_t>(v.size());
  std::int64_t rank = static_cast<std::int64_t>(
      std::ceil(level * static_cast<double>(n)));
  rank = std::clamp<std::int64_t>(rank, 1, n);
  return v[static_cast<std::size_t>(rank - 1)];
}

struct LatencyStats {
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double stddev = 0.0;
  std::int64_t n = 0;
};

inline LatencyStats latency_stats(const std::vector<double>& v) {
  LatencyStats s;
  s.n = static_cast<std::int64_t>(v.size());
  s.mean = mean_of(v);
  s.p50 = quantile_nearest_rank(v, 0.50);
  s.p95 = quantile_nearest_rank(v, 0.95);
  s.p99 = quantile_nearest_rank(v, 0.99);
  s.max = max_of(v);
  s.stddev = stddev_pop(v);
  return s;
}

// Air-time latencies (ms) of decoded transport blocks: first transmission to
// the decoding transmission.
inline std::vector<double> ran_latency_series(const MetricsLog& log,
                                              double slot_ms) {
  std::vector<double> out;
  for (const auto& tb : log.tbs)
    if (tb.decoded)
      out.push_back(static_cast<double>(tb.decode_slot - tb.first_tx_slot) *
                    slot_ms);
  return out;
}

// End-to-end latencies (ms) of fully delivered application packets.
inline std::vector<double> app_latency_series(const MetricsLog& log,
                                              double slot_ms) {
  std::vector<double> out;
  for (const auto& p : log.packets)
    if (p.delivered_slot >= 0)
      out.push_back(static_cast<double>(p.delivered_slot - p.arrival_slot) *
                    slot_ms);
  return out;
}

// Fraction of scheduled transmission slots that were necessary: decoded TBs
// need the slots up to their decode point, dropped TBs are charged their full
// allocation (the MAC sets needed = allocated on a drop).
inline double resource_efficiency(const MetricsLog& log) {
  std::int64_t needed = 0;
  std::int64_t allocated = 0;
  for (const auto& tb : log.tbs) {
    needed += tb.needed_slots;
    allocated += tb.allocated_slots;
  }
  if (allocated == 0) return 1.0;
  return static_cast<double>(needed) / static_cast<double>(allocated);
}

// ---- run summary ----

struct RunSummary {
  std::string strategy;
  std::uint64_t seed = 0;
  std::int64_t sim_slots = 0;
  double slot_ms = 0.0;

  std::int64_t packets_arrived = 0;
  std::int64_t packets_delivered = 0;
  std::int64_t packets_lost = 0;
  std::int64_t packets_censored = 0;
  std::int64_t bytes_arrived = 0;
  std::int64_t payload_delivered_bytes = 0;
  std::int64_t payload_dropped_bytes = 0;

  std::int64_t tbs_built = 0;
  std::int64_t tbs_decoded = 0;
  std::int64_t tbs_dropped = 0;
  std::int64_t tbs_censored = 0;

  double f_obj = 0.0;  // mean transmission slots allocated per finished TB
  double mean_needed_slots = 0.0;
  double mean_cluster_count = 0.0;
  double resource_efficiency = 1.0;
  double initial_bler = 0.0;  // P[not decoded by the initial transmission]
  double tb_drop_rate = 0.0;
  double app_loss_rate = 0.0;

  std::int64_t tx_slots = 0;
  std::int64_t allocated_slots_sum = 0;
  std::int64_t needed_slots_sum = 0;
  double duty_cycle = 0.0;

  LatencyStats ran_latency_ms;
  LatencyStats app_latency_ms;
  double throughput_app_mbps = 0.0;

  double mean_q1_tbe = 0.0;
  double mean_q2 = 0.0;
  double mean_z = 0.0;
  double time_avg_queue_tbe = 0.0;

  double zeta_bar = 0.0;
  double z_final = 0.0;
  double z_over_t = 0.0;
  double controller_f_obj = 0.0;
  std::int64_t controller_completed = 0;

  double slater_b_hat = 0.0;
  double slater_bound = 0.0;
  double slater_epsilon = 0.0;
  bool slater_satisfied = false;

  bool conserved = false;
};

inline RunSummary summarize(const MetricsLog& log, const Scenario& sc) {
  RunSummary s;
  s.strategy = strategy_to_string(sc.strategy);
  s.seed = sc.seed;
  s.sim_slots = log.sim_slots;
  s.slot_ms = slot_duration_ms(sc.numerology);

  s.packets_arrived = static_cast<std::int64_t>(log.packets.size());
  for (const auto& p : log.packets) {
    if (p.delivered_slot >= 0)
      ++s.packets_delivered;
    else if (p.lost)
      ++s.packets_lost;
    else
      ++s.packets_censored;
  }
  s.bytes_arrived = log.arrived_bytes;
  s.payload_delivered_bytes = log.delivered_payload_bytes;
  s.payload_dropped_bytes = log.dropped_payload_bytes;

  s.tbs_built = log.tbs_built;
  s.tbs_censored = log.tbs_censored;
  std::int64_t completed = 0;
  std::int64_t decoded_first_try = 0;
  double sum_clusters = 0.0;
  for (const auto& tb : log.tbs) {
    ++completed;
    if (tb.decoded) {
      ++s.tbs_decoded;
      if (tb.needed_slots == 1) ++decoded_first_try;
    } else {
      ++s.tbs_dropped;
    }
    s.allocated_slots_sum += tb.allocated_slots;
    s.needed_slots_sum += tb.needed_slots;
    sum_clusters += static_cast<double>(tb.n_clusters);
  }
  if (completed > 0) {
    s.f_obj = static_cast<double>(s.allocated_slots_sum) /
              static_cast<double>(completed);
    s.mean_needed_slots = static_cast<double>(s.needed_slots_sum) /
                          static_cast<double>(completed);
    s.mean_cluster_count = sum_clusters / static_cast<double>(completed);
    s.initial_bler = 1.0 - static_cast<double>(decoded_first_try) /
                               static_cast<double>(completed);
    s.tb_drop_rate = static_cast<double>(s.tbs_dropped) /
                     static_cast<double>(completed);
  }
  s.resource_efficiency = resource_efficiency(log);
  std::int64_t resolved = s.packets_delivered + s.packets_lost;
  if (resolved > 0)
    s.app_loss_rate =
        static_cast<double>(s.packets_lost) / static_cast<double>(resolved);

  s.tx_slots = log.tx_slots;
  if (log.sim_slots > 0)
    s.duty_cycle = static_cast<double>(log.tx_slots) /
                   static_cast<double>(log.sim_slots);

  s.ran_latency_ms = latency_stats(ran_latency_series(log, s.slot_ms));
  s.app_latency_ms = latency_stats(app_latency_series(log, s.slot_ms));
  double sim_seconds =
      static_cast<double>(log.sim_slots) * s.slot_ms / 1000.0;
  if (sim_seconds > 0) {
    double delivered_app_bytes = 0;
    for (const auto& p : log.packets)
      if (p.delivered_slot >= 0)
        delivered_app_bytes += static_cast<double>(p.size_bytes);
    s.throughput_app_mbps = delivered_app_bytes * 8.0 / sim_seconds / 1e6;
  }

  double slots = log.sim_slots > 0 ? static_cast<double>(log.sim_slots) : 1.0;
  s.mean_q1_tbe = log.sum_q1_tbe / slots;
  s.mean_q2 = log.sum_q2 / slots;
  s.mean_z = log.sum_z / slots;
  s.time_avg_queue_tbe = s.mean_q1_tbe + s.mean_q2 + s.mean_z;

  s.zeta_bar = log.zeta_bar_final;
  s.z_final = log.z_final;
  s.z_over_t = log.sim_slots > 0 ? log.z_final / slots : 0.0;
  s.controller_f_obj = log.controller_f_obj;
  s.controller_completed = log.controller_completed;

  SlaterInputs in;
  in.time_avg_queue_tbe = s.time_avg_queue_tbe;
  in.mean_a1_sq = log.sum_a1_sq / slots;
  in.mean_a2_sq = log.sum_a2_sq / slots;
  in.mean_b1_sq = log.sum_b1_sq / slots;
  in.mean_b2_sq = log.sum_b2_sq / slots;
  in.mean_a1_min_q1_b1 = log.sum_a1_min_q1_b1 / slots;
  in.mean_a2_min_q2_b2 = log.sum_a2_min_q2_b2 / slots;
  in.mean_zeta_gap = log.sum_zeta_gap / slots;
  in.f_obj_min = 0.0;
  in.f_obj_max = static_cast<double>(sc.r_max_cluster);
  SlaterParams p;
  p.c = 1.0;
  double slack = (log.sum_b1 + log.sum_b2 - log.sum_a1 - log.sum_a2) / slots;
  p.epsilon = std::max(slack, 1e-6);
  p.v = sc.v_param;
  SlaterReport rep = check_slater_bound(in, p);
  s.slater_b_hat = rep.b_hat;
  s.slater_bound = rep.bound;
  s.slater_epsilon = p.epsilon;
  s.slater_satisfied = rep.satisfied;

  s.conserved = conservation_holds(log);
  return s;
}

// ---- canonical text forms ----

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void append_kv(std::string& out, const char* k, const std::string& v) {
  out += k;
  out += '=';
  out += v;
  out += '\n';
}
inline void append_kv(std::string& out, const char* k, double v) {
  append_kv(out, k, fmt_g17(v));
}
inline void append_kv(std::string& out, const char* k, std::int64_t v) {
  append_kv(out, k, std::to_string(v));
}
inline void append_kv(std::string& out, const char* k, std::uint64_t v) {
  append_kv(out, k, std::to_string(v));
}
inline void append_kv(std::string& out, const char* k, bool v) {
  append_kv(out, k, std::string(v ? "1" : "0"));
}

inline void append_latency(std::string& out, const char* prefix,
                           const LatencyStats& l) {
  std::string p(prefix);
  append_kv(out, (p + ".n").c_str(), l.n);
  append_kv(out, (p + ".mean").c_str(), l.mean);
  append_kv(out, (p + ".p50").c_str(), l.p50);
  append_kv(out, (p + ".p95").c_str(), l.p95);
  append_kv(out, (p + ".p99").c_str(), l.p99);
  append_kv(out, (p + ".max").c_str(), l.max);
  append_kv(out, (p + ".stddev").c_str(), l.stddev);
}

// Deterministic key=value rendering; equal summaries produce equal bytes.
inline std::string canonical_text(const RunSummary& s) {
  std::string out;
  append_kv(out, "strategy", s.strategy);
  append_kv(out, "seed", s.seed);
  append_kv(out, "sim_slots", s.sim_slots);
  append_kv(out, "slot_ms", s.slot_ms);
  append_kv(out, "packets_arrived", s.packets_arrived);
  append_kv(out, "packets_delivered", s.packets_delivered);
  append_kv(out, "packets_lost", s.packets_lost);
  append_kv(out, "packets_censored", s.packets_censored);
  append_kv(out, "bytes_arrived", s.bytes_arrived);
  append_kv(out, "payload_delivered_bytes", s.payload_delivered_bytes);
  append_kv(out, "payload_dropped_bytes", s.payload_dropped_bytes);
  append_kv(out, "tbs_built", s.tbs_built);
  append_kv(out, "tbs_decoded", s.tbs_decoded);
  append_kv(out, "tbs_dropped", s.tbs_dropped);
  append_kv(out, "tbs_censored", s.tbs_censored);
  append_kv(out, "f_obj", s.f_obj);
  append_kv(out, "mean_needed_slots", s.mean_needed_slots);
  append_kv(out, "mean_cluster_count", s.mean_cluster_count);
  append_kv(out, "resource_efficiency", s.resource_efficiency);
  append_kv(out, "initial_bler", s.initial_bler);
  append_kv(out, "tb_drop_rate", s.tb_drop_rate);
  append_kv(out, "app_loss_rate", s.app_loss_rate);
  append_kv(out, "tx_slots", s.tx_slots);
  append_kv(out, "allocated_slots_sum", s.allocated_slots_sum);
  append_kv(out, "needed_slots_sum", s.needed_slots_sum);
  append_kv(out, "duty_cycle", s.duty_cycle);
  append_latency(out, "ran_latency_ms", s.ran_latency_ms);
  append_latency(out, "app_latency_ms", s.app_latency_ms);
  append_kv(out, "throughput_app_mbps", s.throughput_app_mbps);
  append_kv(out, "mean_q1_tbe", s.mean_q1_tbe);
  append_kv(out, "mean_q2", s.mean_q2);
  append_kv(out, "mean_z", s.mean_z);
  append_kv(out, "time_avg_queue_tbe", s.time_avg_queue_tbe);
  append_kv(out, "zeta_bar", s.zeta_bar);
  append_kv(out, "z_final", s.z_final);
  append_kv(out, "z_over_t", s.z_over_t);
  append_kv(out, "controller_f_obj", s.controller_f_obj);
  append_kv(out, "controller_completed", s.controller_completed);
  append_kv(out, "slater_b_hat", s.slater_b_hat);
  append_kv(out, "slater_bound", s.slater_bound);
  append_kv(out, "slater_epsilon", s.slater_epsilon);
  append_kv(out, "slater_satisfied", s.slater_satisfied);
  append_kv(out, "conserved", s.conserved);
  return out;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string summary_digest(const RunSummary& s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text(s))));
  return buf;
}

// ---- CSV exports ----

inline void export_packets_csv(const MetricsLog& log, std::ostream& os) {
  os << "id,size_bytes,arrival_slot,delivered_slot,delivered_bytes,lost\n";
  for (const auto& p : log.packets)
    os << p.id << ',' << p.size_bytes << ',' << p.arrival_slot << ','
       << p.delivered_slot << ',' << p.delivered_bytes << ','
       << (p.lost ? 1 : 0) << '\n';
}

inline void export_tbs_csv(const MetricsLog& log, std::ostream& os) {
  os << "id,payload_bytes,built_slot,first_tx_slot,decode_slot,"
        "completed_slot,decoded,n_clusters,allocated_slots,needed_slots,"
        "transmissions,final_risk\n";
  for (const auto& tb : log.tbs)
    os << tb.id << ',' << tb.payload_bytes << ',' << tb.built_slot << ','
       << tb.first_tx_slot << ',' << tb.decode_slot << ','
       << tb.completed_slot << ',' << (tb.decoded ? 1 : 0) << ','
       << tb.n_clusters << ',' << tb.allocated_slots << ','
       << tb.needed_slots << ',' << tb.transmissions << ','
       << fmt_g17(tb.final_risk) << '\n';
}

inline void export_controller_trace_csv(const MetricsLog& log,
                                        std::ostream& os) {
  os << "slot,tb_id,cluster_index,r,gamma,risk,z,q1_tbe,q2\n";
  for (const auto& row : log.controller_trace)
    os << row.slot << ',' << row.tb_id << ',' << row.cluster_index << ','
       << row.r << ',' << fmt_g17(row.gamma) << ',' << fmt_g17(row.risk)
       << ',' << fmt_g17(row.z) << ',' << fmt_g17(row.q1_tbe) << ','
       << row.q2 << '\n';
}

inline void export_link_trace_csv(const MetricsLog& log, std::ostream& os) {
  os << "slot,distance_m,is_los,shadowing_db,budget_db\n";
  for (const auto& row : log.link_trace)
    os << row.slot << ',' << fmt_g17(row.distance_m) << ','
       << (row.is_los ? 1 : 0) << ',' << fmt_g17(row.shadowing_db) << ','
       << fmt_g17(row.budget_db) << '\n';
}

}  // namespace harqsim
