#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

#include "harqsim/controller.hpp"
#include "harqsim/scenario.hpp"
#include "harqsim/strategy.hpp"

using namespace harqsim;

TEST_CASE("reactive policy always asks for one slot") {
  DecisionContext ctx;
  ctx.cluster_index = 1;
  CHECK(reactive_decide(ctx) == 1);
  ctx.cluster_index = 9;
  CHECK(reactive_decide(ctx) == 1);
}

TEST_CASE("pattern policy reads the entry for the cluster being decided") {
  std::vector<int> p{3, 3, 3, 1};
  CHECK(fixed_decide(p, 1) == 3);
  CHECK(fixed_decide(p, 2) == 3);
  CHECK(fixed_decide(p, 3) == 3);
  // the terminal pattern entry is well-defined even when the budget
  // normally exhausts before reaching it
  CHECK(fixed_decide(p, 4) == 1);
  CHECK_THROWS_AS(fixed_decide(p, 0), std::out_of_range);
  CHECK_THROWS_AS(fixed_decide(p, 5), std::out_of_range);
}

TEST_CASE("facade dispatches by configured kind") {
  Scenario sc;
  std::string err;

  REQUIRE(apply_scenario_kv(sc, "strategy", "reactive", err));
  Strategy reactive(sc, nullptr);
  CHECK(reactive.max_clusters(sc) == sc.r_max_total);
  DecisionContext ctx;
  ctx.cluster_index = 1;
  ctx.budget_left = 9;
  CHECK(reactive.decide(ctx) == 1);
  CHECK(reactive.name() == "reactive");

  REQUIRE(apply_scenario_kv(sc, "strategy", "fixed(2,2,2,2,2)", err));
  Strategy fixed(sc, nullptr);
  CHECK(fixed.max_clusters(sc) == 5);
  CHECK(fixed.decide(ctx) == 2);
  CHECK(fixed.name() == "fixed(2,2,2,2,2)");

  REQUIRE(apply_scenario_kv(sc, "strategy", "adaptive", err));
  AdaptiveController ctl(sc);
  Strategy adaptive(sc, &ctl);
  CHECK(adaptive.max_clusters(sc) == sc.c_max);
  ctx.accumulated_sinr_linear = 0.0;
  CHECK(adaptive.decide(ctx) == ctl.choose_action(ctx).r);
}

TEST_CASE("adaptive facade requires a controller") {
  Scenario sc;
  std::string err;
  REQUIRE(apply_scenario_kv(sc, "strategy", "adaptive", err));
  CHECK_THROWS_AS(Strategy(sc, nullptr), std::invalid_argument);
}

TEST_CASE("one-slot pattern reproduces the reactive policy") {
  // fixed(1,...,1) is only valid when it exhausts the budget, in which case
  // each decision matches reactive's single-slot request
  std::vector<int> ones(9, 1);
  for (int c = 1; c <= 9; ++c) {
    DecisionContext ctx;
    ctx.cluster_index = c;
    CHECK(fixed_decide(ones, c) == reactive_decide(ctx));
  }
}
