#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "harqsim/rng.hpp"
#include "harqsim/scenario.hpp"

namespace harqsim {

struct AppPacket {
  std::int64_t id = 0;
  std::int64_t size_bytes = 0;
  std::int64_t arrival_slot = 0;
};

// Bursty ON/OFF source. Phase durations are exponential with the configured
// means, discretised to whole slots (rounded, floor one slot). While ON the
// slot carries Poisson(lambda_on) packets (or exactly one in deterministic
// mode); packet sizes are exponential, rounded up to >= 1 byte.
class TrafficSource {
 public:
  explicit TrafficSource(const Scenario& sc)
      : sc_(sc),
        slot_ms_(slot_duration_ms(sc.numerology)),
        on_(true),
        slots_left_(0),
        next_id_(0) {}

  bool on() const { return on_; }

  std::vector<AppPacket> step(std::int64_t slot, std::mt19937_64& rng) {
    std::vector<AppPacket> out;
    if (!sc_.traffic_enabled) return out;
    if (slots_left_ == 0) {
      // phase boundary; the first call draws the initial ON phase
      if (started_) on_ = !on_;
      started_ = true;
      double mean_slots = (on_ ? sc_.t_on_ms : sc_.t_off_ms) / slot_ms_;
      slots_left_ = draw_phase_slots(rng, mean_slots);
    }
    if (on_) {
      int n = sc_.arrival_process == ArrivalProcess::kDeterministic
                  ? 1
                  : poisson_draw(rng, sc_.lambda_on);
      for (int i = 0; i < n; ++i) {
        AppPacket p;
        p.id = next_id_++;
        p.size_bytes = draw_packet_bytes(rng);
        p.arrival_slot = slot;
        out.push_back(p);
      }
    }
    --slots_left_;
    return out;
  }

  std::int64_t packets_generated() const { return next_id_; }

  static std::int64_t draw_phase_slots_for_test(std::mt19937_64& rng,
                                                double mean_slots) {
    return draw_phase_slots(rng, mean_slots);
  }

 private:
  static std::int64_t draw_phase_slots(std::mt19937_64& rng,
                                       double mean_slots) {
    double d = exp_draw(rng, mean_slots);
    std::int64_t s = static_cast<std::int64_t>(std::llround(d));
    return s < 1 ? 1 : s;
  }

  std::int64_t draw_packet_bytes(std::mt19937_64& rng) const {
    double b = exp_draw(rng, sc_.mean_packet_bytes);
    std::int64_t n = static_cast<std::int64_t>(std::ceil(b));
    return n < 1 ? 1 : n;
  }

  const Scenario& sc_;
  double slot_ms_;
  bool on_;
  bool started_ = false;
  std::int64_t slots_left_;
  std::int64_t next_id_;
};

}  // namespace harqsim
