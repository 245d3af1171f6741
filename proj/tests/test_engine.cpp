#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "harqsim/engine.hpp"

using namespace harqsim;

namespace {

Scenario base_scenario(const char* strategy, std::uint64_t seed,
                       std::int64_t slots) {
  Scenario sc;
  std::string err;
  REQUIRE(apply_scenario_kv(sc, "strategy", strategy, err));
  sc.seed = seed;
  sc.sim_slots = slots;
  return sc;
}

}  // namespace

TEST_CASE("same seed, same run; different seed, different run") {
  Scenario sc = base_scenario("adaptive", 42, 4000);
  RunResult a = run_scenario(sc);
  RunResult b = run_scenario(sc);
  REQUIRE(a.ok);
  REQUIRE(b.ok);
  CHECK(canonical_text(a.summary) == canonical_text(b.summary));
  CHECK(a.log.packets.size() == b.log.packets.size());
  CHECK(a.log.tbs.size() == b.log.tbs.size());

  sc.seed = 43;
  RunResult c = run_scenario(sc);
  REQUIRE(c.ok);
  CHECK(canonical_text(a.summary) != canonical_text(c.summary));
}

TEST_CASE("thread count never changes results") {
  Scenario sc = base_scenario("adaptive", 7, 3000);
  std::vector<Scenario> grid;
  for (std::uint64_t s : {1, 2, 3, 4}) {
    Scenario g = sc;
    g.seed = s;
    grid.push_back(g);
  }
  std::vector<RunResult> serial = run_many(grid, 1);
  std::vector<RunResult> pooled = run_many(grid, 4);
  REQUIRE(serial.size() == pooled.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial[i].ok);
    REQUIRE(pooled[i].ok);
    CHECK(canonical_text(serial[i].summary) ==
          canonical_text(pooled[i].summary));
  }
}

TEST_CASE("payload bytes are conserved for every strategy") {
  for (const char* strat :
       {"reactive", "fixed(2,2,2,2,2)", "fixed(3,3,3,1)", "adaptive"}) {
    Scenario sc = base_scenario(strat, 11, 6000);
    RunResult r = run_scenario(sc);
    REQUIRE(r.ok);
    INFO(strat);
    CHECK(r.summary.conserved);
    CHECK(conservation_holds(r.log));
    CHECK(r.summary.packets_arrived > 0);
  }
}

TEST_CASE("forced failure: reactive walks the full budget on a 5-slot rhythm") {
  Scenario sc = base_scenario("reactive", 3, 4000);
  sc.sinr_target_db = 500.0;  // undecodable: every TB exhausts its budget
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  REQUIRE(r.summary.tbs_dropped > 10);
  CHECK(r.summary.tbs_decoded == 0);
  for (const TbSummary& tb : r.log.tbs) {
    CHECK_FALSE(tb.decoded);
    CHECK(tb.allocated_slots == 10);
    CHECK(tb.needed_slots == 10);
    CHECK(tb.n_clusters == 10);
    // initial tx + 9 rounds of 5 slots + feedback (1 + k1) to the drop
    CHECK(tb.completed_slot - tb.first_tx_slot == 48);
  }
  CHECK(r.summary.resource_efficiency == 1.0);
  // all packets that resolved were lost
  CHECK(r.summary.packets_delivered == 0);
}

TEST_CASE("forced failure: front-loaded pattern burns the budget in 4 clusters") {
  Scenario sc = base_scenario("fixed(3,3,3,1)", 3, 4000);
  sc.sinr_target_db = 500.0;
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  REQUIRE(r.summary.tbs_dropped > 10);
  for (const TbSummary& tb : r.log.tbs) {
    CHECK(tb.allocated_slots == 10);  // 1 + 3 + 3 + 3, terminal never reached
    CHECK(tb.n_clusters == 4);
    // c0 tx, 3 clusters of 3, grouped reports: drop acted 24 slots after c0
    CHECK(tb.completed_slot - tb.first_tx_slot == 24);
  }
}

TEST_CASE("forced failure: adaptive respects the cluster cap and the budget") {
  Scenario sc = base_scenario("adaptive", 3, 4000);
  sc.sinr_target_db = 500.0;
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  REQUIRE(r.summary.tbs_dropped > 10);
  for (const TbSummary& tb : r.log.tbs) {
    CHECK(tb.allocated_slots <= 10);
    // initial transmission plus at most c_max clusters
    CHECK(tb.n_clusters <= 1 + sc.c_max);
    CHECK(tb.final_risk > 0.9);  // the model learns the gap is unbridgeable
  }
}

TEST_CASE("clean channel: everything decodes on the initial transmission") {
  Scenario sc = base_scenario("reactive", 5, 4000);
  sc.sinr_target_db = -50.0;  // any transmission decodes
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  CHECK(r.summary.tbs_dropped == 0);
  CHECK(r.summary.initial_bler == 0.0);
  CHECK(r.summary.f_obj == 1.0);
  CHECK(r.summary.resource_efficiency == 1.0);
  CHECK(r.summary.mean_q2 == 0.0);
  for (const TbSummary& tb : r.log.tbs) {
    CHECK(tb.decoded);
    CHECK(tb.decode_slot == tb.first_tx_slot);
    CHECK(tb.n_clusters == 1);
  }
  // packet delivery happens at the decode slot: arrival -> build next slot
  // at the earliest, plus the preparation delay
  for (const PacketRecord& p : r.log.packets)
    if (p.delivered_slot >= 0)
      CHECK(p.delivered_slot - p.arrival_slot >= 1 + sc.l12_slots);
}

TEST_CASE("a TB in flight at the horizon is censored, not completed") {
  // undecodable channel and a horizon that cuts mid-lifecycle
  Scenario sc = base_scenario("reactive", 1, 40);
  sc.sinr_target_db = 500.0;
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  CHECK(r.log.tbs_censored == 1);
  CHECK(r.summary.tbs_built ==
        static_cast<std::int64_t>(r.log.tbs.size()) + r.log.tbs_censored);
  CHECK(r.summary.conserved);  // in-flight bytes are part of the ledger
  // censored packets are neither delivered nor lost
  CHECK(r.summary.packets_censored > 0);
}

TEST_CASE("controller trace rows accompany every adaptive cluster decision") {
  Scenario sc = base_scenario("adaptive", 13, 6000);
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  std::int64_t clustered = 0;
  for (const TbSummary& tb : r.log.tbs)
    clustered += tb.n_clusters - 1;
  REQUIRE(clustered > 0);
  CHECK(static_cast<std::int64_t>(r.log.controller_trace.size()) >= clustered);
  for (const ControllerTraceRow& row : r.log.controller_trace) {
    CHECK(row.r >= 1);
    CHECK(row.r <= sc.r_max_cluster);
    CHECK(row.risk >= 0.0);
    CHECK(row.risk <= 1.0);
    CHECK(row.q2 >= 1);  // the failed TB itself is an open process
  }

  sc.collect_controller_trace = false;
  RunResult quiet = run_scenario(sc);
  REQUIRE(quiet.ok);
  CHECK(quiet.log.controller_trace.empty());
  // tracing must not perturb the simulation itself
  CHECK(quiet.summary.f_obj == r.summary.f_obj);
}

TEST_CASE("link trace follows the configured trajectory") {
  Scenario sc = base_scenario("reactive", 17, 100);
  sc.collect_link_trace = true;
  sc.velocity_x_mps = 3.0;
  sc.velocity_y_mps = 4.0;  // 5 m/s straight line
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  REQUIRE(r.log.link_trace.size() == 100);
  double slot_s = slot_duration_ms(sc.numerology) / 1000.0;
  for (std::size_t i = 0; i < r.log.link_trace.size(); ++i) {
    double t = static_cast<double>(i + 1) * slot_s;  // row is post-move
    double x = sc.d0_m + 3.0 * t;
    double y = 4.0 * t;
    double expect = std::sqrt(x * x + y * y);
    CHECK(r.log.link_trace[i].distance_m == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("objective bookkeeping matches between controller and metrics") {
  Scenario sc = base_scenario("adaptive", 23, 8000);
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  REQUIRE(r.summary.controller_completed ==
          static_cast<std::int64_t>(r.log.tbs.size()));
  CHECK(r.summary.controller_f_obj ==
        Catch::Approx(r.summary.f_obj).epsilon(1e-9));
}

TEST_CASE("invalid scenarios are captured per run, not thrown") {
  Scenario good = base_scenario("reactive", 1, 500);
  Scenario bad = good;
  bad.r_min = 9;
  bad.r_max_cluster = 5;  // violates r_max_cluster >= r_min
  std::vector<RunResult> rs = run_many({good, bad, good}, 2);
  CHECK(rs[0].ok);
  CHECK(rs[2].ok);
  CHECK_FALSE(rs[1].ok);
  CHECK(rs[1].error.find("r_max_cluster") != std::string::npos);
  CHECK(canonical_text(rs[0].summary) == canonical_text(rs[2].summary));
}

TEST_CASE("quiet traffic leaves the radio idle") {
  Scenario sc = base_scenario("adaptive", 29, 2000);
  sc.traffic_enabled = false;
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  CHECK(r.summary.packets_arrived == 0);
  CHECK(r.summary.tbs_built == 0);
  CHECK(r.summary.tx_slots == 0);
  CHECK(r.summary.conserved);
}

TEST_CASE("single-slot feedback and prep delays tighten the loop") {
  Scenario sc = base_scenario("reactive", 31, 3000);
  sc.k1_slots = 1;
  sc.l12_slots = 1;
  sc.sinr_target_db = 500.0;
  RunResult r = run_scenario(sc);
  REQUIRE(r.ok);
  REQUIRE(r.summary.tbs_dropped > 5);
  for (const TbSummary& tb : r.log.tbs)
    // attempts now 1+1+1=3 slots apart: 9 rounds plus the final report
    CHECK(tb.completed_slot - tb.first_tx_slot == 9 * 3 + 2);
}
