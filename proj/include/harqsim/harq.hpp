#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "harqsim/channel.hpp"
#include "harqsim/scenario.hpp"
#include "harqsim/traffic.hpp"

namespace harqsim {

inline void mac_check(bool cond, const char* msg) {
  if (!cond) throw std::logic_error(std::string("harq invariant: ") + msg);
}

// Transport-block capacity in bytes before flooring: symbols * subcarriers *
// bits-per-symbol * code rate / 8. The subcarrier count is bw/scs.
inline double tb_size_bytes_raw(const Scenario& sc) {
  double scs_hz = scs_khz(sc.numerology) * 1e3;
  return sc.n_ofdm * sc.bw_hz / (8.0 * scs_hz) *
         static_cast<double>(sc.modulation_order) * sc.code_rate;
}

inline std::int64_t compute_tb_size(const Scenario& sc) {
  double raw = tb_size_bytes_raw(sc);
  std::int64_t b = static_cast<std::int64_t>(std::floor(raw));
  mac_check(b >= 1, "TB size must be at least one byte");
  return b;
}

// ---- queues ----

struct QueueState {
  std::int64_t q1_bytes = 0;  // radio-bearer backlog
  std::int64_t q2_tbs = 0;    // ongoing (not yet decoded) HARQ processes
  double z = 0.0;             // virtual queue of the risk constraint
};

enum class ServeTarget { kQ2, kQ1, kIdle };

// Pending retransmissions preempt new data: alpha=0 (serve Q2) whenever a
// HARQ process is open, alpha=1 only for new-data service.
inline ServeTarget select_queue(const QueueState& q) {
  if (q.q2_tbs > 0) return ServeTarget::kQ2;
  if (q.q1_bytes > 0) return ServeTarget::kQ1;
  return ServeTarget::kIdle;
}

// One decision interval's worth of queue updates (service applied before the
// interval's arrivals are added).
struct FrameUpdate {
  int alpha = 1;                     // 1: serve Q1, 0: serve Q2
  std::int64_t served_tb_bytes = 0;  // TB payload drained from Q1 if alpha=1
  bool q2_service = false;           // a HARQ process finished decoding
  std::int64_t a1_bytes = 0;         // new-data arrivals over the interval
  int a2 = 0;                        // 1 if the initial transmission failed
};

inline QueueState apply_queue_dynamics(const QueueState& q,
                                       const FrameUpdate& f) {
  QueueState out = q;
  std::int64_t served = f.alpha == 1 ? f.served_tb_bytes : 0;
  out.q1_bytes = std::max<std::int64_t>(q.q1_bytes - served, 0) + f.a1_bytes;
  out.q2_tbs =
      std::max<std::int64_t>(q.q2_tbs - (f.q2_service ? 1 : 0), 0) + f.a2;
  return out;
}

// ---- TB lifecycle ----

struct Segment {
  std::int64_t packet_id = 0;
  std::int64_t bytes = 0;
  std::int64_t arrival_slot = 0;
};

// New-data buffer with head-of-line segmentation.
class RlcQueue {
 public:
  void push(const Segment& s) {
    q_.push_back(s);
    bytes_ += s.bytes;
  }

  std::int64_t bytes() const { return bytes_; }
  bool empty() const { return q_.empty(); }

  // Drains up to max_bytes; the head segment is split when it does not fit.
  std::vector<Segment> extract(std::int64_t max_bytes) {
    std::vector<Segment> out;
    std::int64_t left = max_bytes;
    while (left > 0 && !q_.empty()) {
      Segment& head = q_.front();
      if (head.bytes <= left) {
        out.push_back(head);
        left -= head.bytes;
        bytes_ -= head.bytes;
        q_.pop_front();
      } else {
        Segment part = head;
        part.bytes = left;
        out.push_back(part);
        head.bytes -= left;
        bytes_ -= left;
        left = 0;
      }
    }
    return out;
  }

 private:
  std::deque<Segment> q_;
  std::int64_t bytes_ = 0;
};

struct ClusterDecision {
  int cluster_index = 0;  // 0 is the initial transmission
  int r = 1;              // redundancy slots in this cluster
  std::int64_t decided_at_slot = 0;
  std::int64_t start_slot = 0;  // filled in at scheduling
};

struct FeedbackEvent {
  std::int64_t tb_id = 0;
  int cluster_index = 0;
  bool ack = false;
  std::int64_t deliver_at_slot = 0;  // uplink slot carrying the report
};

enum class TbStatus { kInFlight, kDecoded, kDropped };

struct TbRecord {
  std::int64_t id = 0;
  std::int64_t payload_bytes = 0;
  std::int64_t built_slot = 0;
  std::int64_t first_tx_slot = 0;
  TbStatus status = TbStatus::kInFlight;
  std::vector<ClusterDecision> clusters;
  std::vector<Segment> payload;

  TbSinrState sinr;
  std::int64_t allocated_slots = 0;     // scheduled transmission slots
  std::int64_t transmissions = 0;       // slots actually transmitted so far
  std::int64_t needed_slots = 0;        // slots up to (and incl.) decode
  std::int64_t decode_slot = -1;
  std::int64_t completed_slot = -1;     // feedback-processing instant
  bool counted_in_q2 = false;
  double final_cluster_risk = 0.0;      // shortfall estimate at last decision

  std::int64_t total_rtx() const { return allocated_slots; }
};

enum class FeedbackOutcome { kDecoded, kDropped, kNeedDecision };

// gNB-side MAC: owns the new-data queue, the single in-flight TB, cluster
// scheduling with the prep (L12) and feedback (K1) delays, and the lifetime
// transmission budget. One TB occupies the radio at a time; a report
// delivered on uplink slot d is acted upon in slot d+1.
class HarqMac {
 public:
  HarqMac(const Scenario& sc, int max_clusters)
      : sc_(sc),
        tb_size_(compute_tb_size(sc)),
        max_clusters_(std::min(max_clusters, sc.r_max_total)) {}

  std::int64_t tb_size() const { return tb_size_; }
  std::int64_t q1_bytes() const { return q1_.bytes(); }
  std::int64_t q2_tbs() const { return q2_; }
  bool radio_busy() const { return active_.has_value(); }
  const TbRecord& active() const { return *active_; }
  TbRecord& active_mut() { return *active_; }
  bool has_active() const { return active_.has_value(); }

  QueueState queue_state(double z) const {
    return QueueState{q1_.bytes(), q2_, z};
  }

  void enqueue(const AppPacket& p) {
    q1_.push(Segment{p.id, p.size_bytes, p.arrival_slot});
  }

  // Builds a TB from Q1 and schedules its initial transmission after the
  // preparation delay.
  TbRecord& build_tb(std::int64_t slot, std::int64_t next_tb_id) {
    mac_check(!active_, "build_tb with a TB already in flight");
    mac_check(q1_.bytes() > 0, "build_tb on an empty queue");
    TbRecord tb;
    tb.id = next_tb_id;
    tb.built_slot = slot;
    tb.payload = q1_.extract(tb_size_);
    for (const auto& s : tb.payload) tb.payload_bytes += s.bytes;
    ClusterDecision c0{0, 1, slot, slot + sc_.l12_slots};
    tb.clusters.push_back(c0);
    tb.first_tx_slot = c0.start_slot;
    tb.allocated_slots = 1;
    active_ = std::move(tb);
    pending_fb_ = FeedbackEvent{active_->id, 0, false,
                                c0.start_slot + sc_.k1_slots};
    return *active_;
  }

  // Reserves r consecutive slots starting after the preparation delay and
  // arms the grouped feedback report for the cluster.
  FeedbackEvent schedule_cluster(const ClusterDecision& d, std::int64_t now) {
    mac_check(active_.has_value(), "schedule_cluster without an active TB");
    TbRecord& tb = *active_;
    std::int64_t remaining = sc_.r_max_total - tb.total_rtx();
    mac_check(remaining >= 1, "schedule_cluster with no budget left");
    ClusterDecision c = d;
    c.r = static_cast<int>(
        std::min<std::int64_t>(c.r, remaining));  // terminal clipping
    mac_check(c.r >= 1, "cluster size must be >= 1");
    c.decided_at_slot = now;
    c.start_slot = now + sc_.l12_slots;
    mac_check(static_cast<int>(tb.clusters.size()) == c.cluster_index,
              "cluster indices must be consecutive");
    tb.clusters.push_back(c);
    tb.allocated_slots += c.r;
    std::int64_t cluster_end = c.start_slot + c.r - 1;
    pending_fb_ =
        FeedbackEvent{tb.id, c.cluster_index, false, cluster_end + sc_.k1_slots};
    return *pending_fb_;
  }

  // The report delivered on slot (t-1), if any, becomes actionable at t.
  std::optional<FeedbackEvent> due_feedback(std::int64_t slot) {
    if (!pending_fb_ || !active_) return std::nullopt;
    if (pending_fb_->deliver_at_slot + 1 != slot) return std::nullopt;
    FeedbackEvent ev = *pending_fb_;
    ev.ack = active_->status == TbStatus::kDecoded;
    pending_fb_ = std::nullopt;
    return ev;
  }

  // Applies an ACK/NACK for the given cluster. On ACK or drop the finished
  // record is moved to completed() for the caller to collect.
  FeedbackOutcome handle_feedback(const FeedbackEvent& ev, std::int64_t now) {
    mac_check(active_.has_value(), "feedback without an active TB");
    TbRecord& tb = *active_;
    mac_check(ev.tb_id == tb.id, "feedback for a stale TB");
    mac_check(tb.transmissions == tb.allocated_slots,
              "feedback before the cluster finished transmitting");

    if (ev.ack) {
      mac_check(tb.status == TbStatus::kDecoded, "ACK without decode");
      tb.completed_slot = now;
      if (tb.counted_in_q2) {
        q2_ -= 1;
        mac_check(q2_ >= 0, "q2 underflow");
      }
      finish();
      return FeedbackOutcome::kDecoded;
    }

    if (ev.cluster_index == 0) {
      // initial transmission failed: the TB becomes an open HARQ process
      q2_ += 1;
      tb.counted_in_q2 = true;
    }
    std::int64_t remaining = sc_.r_max_total - tb.total_rtx();
    int next_cluster = ev.cluster_index + 1;
    if (remaining <= 0 || next_cluster > max_clusters_) {
      tb.status = TbStatus::kDropped;
      tb.needed_slots = tb.allocated_slots;  // nothing was recoverable
      tb.completed_slot = now;
      q2_ -= 1;
      mac_check(q2_ >= 0, "q2 underflow on drop");
      finish();
      return FeedbackOutcome::kDropped;
    }
    return FeedbackOutcome::kNeedDecision;
  }

  // True when the active TB has a transmission reserved in this slot.
  bool tx_due(std::int64_t slot) const {
    if (!active_) return false;
    const ClusterDecision& c = active_->clusters.back();
    return slot >= c.start_slot && slot < c.start_slot + c.r;
  }

  // Bookkeeping for one transmitted slot: updates the accumulated SINR and
  // latches the decode point the first time the target is crossed.
  bool record_transmission(std::int64_t slot, double new_accumulated) {
    mac_check(active_.has_value(), "transmission without an active TB");
    TbRecord& tb = *active_;
    tb.sinr.accumulated_sinr_linear = new_accumulated;
    tb.sinr.rtx_count += 1;
    tb.transmissions += 1;
    if (tb.status == TbStatus::kInFlight && decode(tb.sinr, sc_.sinr_target_db)) {
      tb.status = TbStatus::kDecoded;
      tb.decode_slot = slot;
      tb.needed_slots = tb.transmissions;
      return true;
    }
    return false;
  }

  std::optional<TbRecord> take_completed() {
    std::optional<TbRecord> out = std::move(completed_);
    completed_ = std::nullopt;
    return out;
  }

  // Remaining lifetime budget of the active TB.
  std::int64_t budget_left() const {
    mac_check(active_.has_value(), "budget_left without an active TB");
    return sc_.r_max_total - active_->total_rtx();
  }

  int max_clusters() const { return max_clusters_; }

 private:
  void finish() {
    completed_ = std::move(active_);
    active_ = std::nullopt;
    pending_fb_ = std::nullopt;
  }

  const Scenario& sc_;
  std::int64_t tb_size_;
  int max_clusters_;
  RlcQueue q1_;
  std::int64_t q2_ = 0;
  std::optional<TbRecord> active_;
  std::optional<TbRecord> completed_;
  std::optional<FeedbackEvent> pending_fb_;
};

}  // namespace harqsim
