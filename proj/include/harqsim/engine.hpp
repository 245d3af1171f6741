#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "harqsim/channel.hpp"
#include "harqsim/controller.hpp"
#include "harqsim/harq.hpp"
#include "harqsim/metrics.hpp"
#include "harqsim/rng.hpp"
#include "harqsim/scenario.hpp"
#include "harqsim/strategy.hpp"
#include "harqsim/traffic.hpp"

namespace harqsim {

// Slot-stepped downlink simulation of one gNB-UE pair. Per slot, in order:
// feedback processing (reports delivered last slot become actionable),
// TB construction when the radio is free, transmission of the slot reserved
// by the current cluster, application arrivals, estimator/accumulator
// sampling, then mobility. The same seed always reproduces the same run.
class SimEngine {
 public:
  explicit SimEngine(const Scenario& sc)
      : sc_(sc),
        rng_(sc_.seed),
        traffic_(sc_),
        ctl_(sc_.strategy.kind == StrategyKind::kAdaptive
                 ? std::optional<AdaptiveController>(std::in_place, sc_)
                 : std::nullopt),
        strategy_(sc_, ctl_ ? &*ctl_ : nullptr),
        mac_(sc_, strategy_.max_clusters(sc_)),
        link_(initial_link_state(sc_, rng_.los, rng_.shadowing)) {}

  const Scenario& scenario() const { return sc_; }

  MetricsLog run() {
    const std::int64_t tb_size = mac_.tb_size();
    const double slot_ms = slot_duration_ms(sc_.numerology);
    const double slot_s = slot_ms / 1000.0;
    const int n_rb = num_rbs(sc_);

    for (std::int64_t t = 0; t < sc_.sim_slots; ++t) {
      double q1_tbe_start =
          static_cast<double>(mac_.q1_bytes()) / static_cast<double>(tb_size);
      double q2_start = static_cast<double>(mac_.q2_tbs());
      double a1_tbe = 0.0, a2 = 0.0, b1_tbe = 0.0, b2 = 0.0, zeta_gap = 0.0;

      // 1) act on the report delivered in the previous slot
      if (auto ev = mac_.due_feedback(t)) {
        if (!ev->ack && ev->cluster_index == 0) a2 = 1.0;
        FeedbackOutcome outcome = mac_.handle_feedback(*ev, t);
        if (outcome == FeedbackOutcome::kNeedDecision) {
          decide_and_schedule(t);
        } else {
          std::optional<TbRecord> rec = mac_.take_completed();
          mac_check(rec.has_value(), "completion without a record");
          on_complete(*rec, b2, zeta_gap);
        }
      }

      // 2) start a new TB when the radio is free and data is waiting
      if (!mac_.has_active() && mac_.q1_bytes() > 0) {
        TbRecord& tb = mac_.build_tb(t, next_tb_id_++);
        b1_tbe = static_cast<double>(tb.payload_bytes) /
                 static_cast<double>(tb_size);
        log_.tbs_built += 1;
      }

      // 3) transmit the slot reserved by the active cluster
      if (mac_.tx_due(t)) {
        std::vector<double> sinrs = per_rb_sinr(link_, sc_, n_rb, rng_.fading);
        double prior = mac_.active().sinr.accumulated_sinr_linear;
        double acc = eesm_combine(sinrs, prior, sc_.beta_eesm);
        mac_.record_transmission(t, acc);
        if (ctl_) ctl_->on_increment(acc - prior);
        log_.tx_slots += 1;
      }

      // 4) application arrivals enter the new-data queue
      if (sc_.traffic_enabled) {
        std::vector<AppPacket> pkts = traffic_.step(t, rng_.traffic);
        for (const AppPacket& p : pkts) {
          mac_check(p.id == static_cast<std::int64_t>(log_.packets.size()),
                    "packet ids must be dense");
          PacketRecord pr;
          pr.id = p.id;
          pr.size_bytes = p.size_bytes;
          pr.arrival_slot = p.arrival_slot;
          log_.packets.push_back(pr);
          log_.arrived_bytes += p.size_bytes;
          mac_.enqueue(p);
          a1_tbe += static_cast<double>(p.size_bytes);
        }
        a1_tbe /= static_cast<double>(tb_size);
      }

      // 5) estimator windows and time-average accumulators
      if (ctl_) ctl_->on_slot_arrivals(a1_tbe, a2);
      double q1_tbe_now =
          static_cast<double>(mac_.q1_bytes()) / static_cast<double>(tb_size);
      double q2_now = static_cast<double>(mac_.q2_tbs());
      double z_now = ctl_ ? ctl_->z() : 0.0;
      log_.sum_q1_tbe += q1_tbe_now;
      log_.sum_q2 += q2_now;
      log_.sum_z += z_now;
      log_.sum_a1 += a1_tbe;
      log_.sum_a2 += a2;
      log_.sum_b1 += b1_tbe;
      log_.sum_b2 += b2;
      log_.sum_a1_sq += a1_tbe * a1_tbe;
      log_.sum_a2_sq += a2 * a2;
      log_.sum_b1_sq += b1_tbe * b1_tbe;
      log_.sum_b2_sq += b2 * b2;
      log_.sum_a1_min_q1_b1 += a1_tbe * std::min(q1_tbe_start, b1_tbe);
      log_.sum_a2_min_q2_b2 += a2 * std::min(q2_start, b2);
      log_.sum_zeta_gap += zeta_gap;

      // 6) mobility and link evolution
      double nx = link_.pos_x_m + sc_.velocity_x_mps * slot_s;
      double ny = link_.pos_y_m + sc_.velocity_y_mps * slot_s;
      link_ = sample_link_state(link_, nx, ny, sc_, rng_.los, rng_.shadowing);

      // 7) optional traces
      if (sc_.collect_link_trace) {
        LinkTraceRow row;
        row.slot = t;
        row.distance_m = link_.distance_m;
        row.is_los = link_.is_los;
        row.shadowing_db = link_.shadowing_db;
        row.budget_db = link_budget_db(link_, sc_);
        log_.link_trace.push_back(row);
      }
    }

    log_.sim_slots = sc_.sim_slots;
    log_.q1_bytes_final = mac_.q1_bytes();
    if (mac_.has_active()) {
      log_.tbs_censored = 1;
      log_.in_flight_bytes_final = mac_.active().payload_bytes;
    }
    if (ctl_) {
      log_.zeta_bar_final = ctl_->zeta_bar();
      log_.z_final = ctl_->z();
      log_.controller_f_obj = ctl_->f_obj_running();
      log_.controller_completed = ctl_->completed_tbs();
    }
    return std::move(log_);
  }

 private:
  DecisionContext make_ctx(std::int64_t t) const {
    DecisionContext ctx;
    ctx.slot = t;
    ctx.cluster_index = static_cast<int>(mac_.active().clusters.size());
    ctx.rtx_so_far = mac_.active().total_rtx();
    ctx.budget_left = mac_.budget_left();
    ctx.accumulated_sinr_linear = mac_.active().sinr.accumulated_sinr_linear;
    ctx.q1_tbe = static_cast<double>(mac_.q1_bytes()) /
                 static_cast<double>(mac_.tb_size());
    ctx.q2 = static_cast<double>(mac_.q2_tbs());
    ctx.z = ctl_ ? ctl_->z() : 0.0;
    return ctx;
  }

  void decide_and_schedule(std::int64_t t) {
    DecisionContext ctx = make_ctx(t);
    int chosen_r = 0;
    double gamma = 0.0, risk = 0.0;
    if (ctl_) {
      ActionScore s = ctl_->choose_action(ctx);
      chosen_r = s.r;
      gamma = s.gamma;
      risk = s.risk;
    } else {
      chosen_r = strategy_.decide(ctx);
    }
    ClusterDecision d;
    d.cluster_index = ctx.cluster_index;
    d.r = chosen_r;
    d.decided_at_slot = t;
    mac_.schedule_cluster(d, t);
    int actual_r = mac_.active().clusters.back().r;
    if (ctl_) {
      if (actual_r != chosen_r) risk = ctl_->estimate_risk(ctx, actual_r);
      mac_.active_mut().final_cluster_risk = risk;
      if (sc_.collect_controller_trace) {
        ControllerTraceRow row;
        row.slot = t;
        row.tb_id = mac_.active().id;
        row.cluster_index = ctx.cluster_index;
        row.r = actual_r;
        row.gamma = gamma;
        row.risk = risk;
        row.z = ctx.z;
        row.q1_tbe = ctx.q1_tbe;
        row.q2 = static_cast<std::int64_t>(ctx.q2);
        log_.controller_trace.push_back(row);
      }
    }
  }

  void on_complete(const TbRecord& rec, double& b2, double& zeta_gap) {
    if (ctl_) {
      ctl_->on_tb_complete(rec.final_cluster_risk, rec.total_rtx());
      zeta_gap = ctl_->zeta_bar() - sc_.zeta_o;
    }
    if (rec.counted_in_q2) b2 = 1.0;

    TbSummary ts;
    ts.id = rec.id;
    ts.payload_bytes = rec.payload_bytes;
    ts.built_slot = rec.built_slot;
    ts.first_tx_slot = rec.first_tx_slot;
    ts.decode_slot = rec.decode_slot;
    ts.completed_slot = rec.completed_slot;
    ts.decoded = rec.status == TbStatus::kDecoded;
    ts.counted_in_q2 = rec.counted_in_q2;
    ts.n_clusters = static_cast<int>(rec.clusters.size());
    ts.allocated_slots = rec.allocated_slots;
    ts.needed_slots = rec.needed_slots;
    ts.transmissions = rec.transmissions;
    ts.final_risk = rec.final_cluster_risk;
    log_.tbs.push_back(ts);

    if (rec.status == TbStatus::kDecoded) {
      log_.delivered_payload_bytes += rec.payload_bytes;
      for (const Segment& seg : rec.payload) {
        PacketRecord& p = log_.packets[static_cast<std::size_t>(seg.packet_id)];
        p.delivered_bytes += seg.bytes;
        if (!p.lost && p.delivered_bytes == p.size_bytes)
          p.delivered_slot = rec.decode_slot;
      }
    } else {
      log_.dropped_payload_bytes += rec.payload_bytes;
      for (const Segment& seg : rec.payload)
        log_.packets[static_cast<std::size_t>(seg.packet_id)].lost = true;
    }
  }

  Scenario sc_;
  RngStreams rng_;
  TrafficSource traffic_;
  std::optional<AdaptiveController> ctl_;
  Strategy strategy_;
  HarqMac mac_;
  LinkState link_;
  MetricsLog log_;
  std::int64_t next_tb_id_ = 0;
};

// ---- batch driver ----

struct RunResult {
  Scenario scenario;
  MetricsLog log;
  RunSummary summary;
  bool ok = false;
  std::string error;
};

inline RunResult run_scenario(const Scenario& sc) {
  RunResult res;
  res.scenario = sc;
  try {
    std::vector<std::string> errs = validate_scenario(sc);
    if (!errs.empty()) {
      std::string joined;
      for (const auto& e : errs) {
        if (!joined.empty()) joined += "; ";
        joined += e;
      }
      throw ScenarioError(joined);
    }
    SimEngine eng(sc);
    res.log = eng.run();
    res.summary = summarize(res.log, sc);
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

// Runs every scenario, farming them out to a small thread pool. Results are
// returned in input order and each run is independently seeded, so the
// thread count never changes any result.
inline std::vector<RunResult> run_many(const std::vector<Scenario>& scenarios,
                                       unsigned n_threads = 0) {
  std::vector<RunResult> results(scenarios.size());
  if (scenarios.empty()) return results;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (n_threads == 0) n_threads = hw;
  n_threads = std::min<unsigned>(
      n_threads, static_cast<unsigned>(scenarios.size()));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < scenarios.size(); ++i)
      results[i] = run_scenario(scenarios[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) break;
      results[i] = run_scenario(scenarios[i]);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

}  // namespace harqsim
