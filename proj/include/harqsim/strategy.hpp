#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "harqsim/controller.hpp"
#include "harqsim/scenario.hpp"

namespace harqsim {

// One retransmission per negative feedback.
inline int reactive_decide(const DecisionContext&) { return 1; }

// Pattern entry for the cluster being decided; cluster_index is 1-based
// (index 0 is the initial transmission, which no strategy decides).
inline int fixed_decide(const std::vector<int>& pattern, int cluster_index) {
  if (cluster_index < 1 ||
      cluster_index > static_cast<int>(pattern.size()))
    throw std::out_of_range("fixed_decide: cluster index outside pattern");
  return pattern[static_cast<std::size_t>(cluster_index) - 1];
}

inline int adaptive_decide(const AdaptiveController& ctl,
                           const DecisionContext& ctx) {
  return ctl.choose_action(ctx).r;
}

// Uniform facade over the three policies. The adaptive policy borrows the
// controller owned by the engine; the others ignore it.
class Strategy {
 public:
  Strategy(const Scenario& sc, const AdaptiveController* ctl)
      : spec_(sc.strategy), ctl_(ctl) {
    if (spec_.kind == StrategyKind::kAdaptive && ctl_ == nullptr)
      throw std::invalid_argument("adaptive strategy needs a controller");
  }

  // Hard cap on HARQ clusters after the initial transmission. The MAC
  // additionally enforces the total transmission budget.
  int max_clusters(const Scenario& sc) const {
    switch (spec_.kind) {
      case StrategyKind::kReactive:
        return sc.r_max_total;
      case StrategyKind::kFixed:
        return static_cast<int>(spec_.pattern.size());
      case StrategyKind::kAdaptive:
        return sc.c_max;
    }
    throw std::logic_error("unreachable strategy kind");
  }

  int decide(const DecisionContext& ctx) const {
    switch (spec_.kind) {
      case StrategyKind::kReactive:
        return reactive_decide(ctx);
      case StrategyKind::kFixed:
        return fixed_decide(spec_.pattern, ctx.cluster_index);
      case StrategyKind::kAdaptive:
        return adaptive_decide(*ctl_, ctx);
    }
    throw std::logic_error("unreachable strategy kind");
  }

  StrategyKind kind() const { return spec_.kind; }
  std::string name() const { return strategy_to_string(spec_); }

 private:
  StrategySpec spec_;
  const AdaptiveController* ctl_;
};

}  // namespace harqsim
