// End-to-end acceptance gate. Runs the full comparison grid (4 strategies x
// 5 paired seeds x 20000 slots) plus a penalty sweep, then checks ten
// numbered properties and prints one PASS/FAIL line for each. The exit code
// is the number of failed checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "harqsim/engine.hpp"

using namespace harqsim;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& name,
            const std::string& detail) {
  std::printf("[%2d] %s  %s (%s)\n", id, pass ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

bool rel_ok(double got, double want) {
  return std::fabs(got - want) <= 1e-9 * std::max(1.0, std::fabs(want));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// average ranks, ties shared
std::vector<double> ranks_of(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = shared;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> rx = ranks_of(x), ry = ranks_of(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Scenario grid_scenario(const char* strat, std::uint64_t seed) {
  Scenario sc;
  std::string err;
  if (!apply_scenario_kv(sc, "strategy", strat, err)) {
    std::fprintf(stderr, "bad strategy: %s\n", err.c_str());
    std::exit(99);
  }
  sc.seed = seed;
  sc.sim_slots = 20000;
  return sc;
}

double p90_ran(const RunResult& r) {
  std::vector<double> lat = ran_latency_series(r.log, r.summary.slot_ms);
  return quantile_nearest_rank(lat, 0.90);
}

// ---- check 1: closed-form formula suite ----

void check_formulas() {
  struct Item {
    const char* what;
    double got, want;
  };
  Scenario sc;
  LinkState edge;
  edge.distance_m = 110.0;
  edge.is_los = false;
  edge.shadowing_db = 0.0;
  Scenario noshadow = sc;
  noshadow.shadowing_enabled = false;
  QueueState q{5, 2, 0.0};
  FrameUpdate f;
  f.alpha = 1;
  f.served_tb_bytes = 7;
  f.a1_bytes = 3;
  QueueState q_served = apply_queue_dynamics(q, f);
  FrameUpdate g;
  g.alpha = 0;
  g.q2_service = true;
  g.a2 = 1;
  QueueState q_harq = apply_queue_dynamics(q, g);
  TbSinrState at_target{std::pow(10.0, sc.sinr_target_db / 10.0), 1};
  TbSinrState zeroed{0.0, 1};

  const Item items[] = {
      {"tb size", tb_size_bytes_raw(sc), 1850.5},
      {"pl los 100m", path_loss_los_db(100.0, 3.5), 85.17729284265525},
      {"pl los 1m1ghz", path_loss_los_db(1.0, 1.0), 31.84},
      {"pl nlos 100m", path_loss_nlos_db(100.0, 3.5), 94.88136088700551},
      {"pl nlos 110m", path_loss_nlos_db(110.0, 3.5), 95.93687435854025},
      {"pl nlos 1m1ghz", path_loss_nlos_db(1.0, 1.0), 33.0},
      {"los decay", los_decay_constant(10.0, 0.3), 28.036732520571285},
      {"los at decay", los_probability(28.036732520571285, 10.0, 0.3),
       0.36787944117144233},
      {"los at edge", los_probability(110.0, 10.0, 0.3),
       0.019773267429999984},
      {"array gain", antenna_gain_db(16, 4), 18.06179973983887},
      {"rb bandwidth", rb_bandwidth_hz(sc), 360e3},
      {"rb count", static_cast<double>(num_rbs(sc)), 138.0},
      {"noise per rb", noise_dbm_per_rb(sc), -113.43697499232712},
      {"edge budget", link_budget_db(edge, noshadow), 43.56190037362575},
      {"eesm pair", eesm_combine({1.0, 3.0}, 0.0, 1.0), 1.5662191695169727},
      {"eesm single", eesm_combine({2.5}, 0.0, 1.0), 2.5},
      {"eesm prior", eesm_combine({2.5}, 4.0, 1.0), 6.5},
      {"q1 clamped serve", static_cast<double>(q_served.q1_bytes), 3.0},
      {"q2 drain+arrive", static_cast<double>(q_harq.q2_tbs), 2.0},
      {"backlog potential", lyapunov_value(3, 4, 0), 12.5},
      {"backlog mixed", lyapunov_value(1, 2, 3), 7.0},
      {"virtual step", update_virtual_queue(1.0, 0.25, 0.05), 1.2},
      {"virtual clamp", update_virtual_queue(0.01, 0.01, 0.05), 0.0},
      {"score r2",
       gamma_score_terms(10.0, 2, 0.5, 0.6, 0.05, 0.0, 0.0, 2.0, 0.0, 0.4),
       19.474999999999998},
      {"score r3",
       gamma_score_terms(10.0, 3, 0.5, 0.2, 0.05, 0.0, 0.0, 2.0, 0.0, 0.8),
       28.474999999999998},
  };
  int bad = 0;
  std::string first;
  for (const Item& it : items)
    if (!rel_ok(it.got, it.want)) {
      ++bad;
      if (first.empty())
        first = std::string(it.what) + " got " + fmt(it.got) + " want " +
                fmt(it.want);
    }
  bool decode_edges = decode(at_target, sc.sinr_target_db) &&
                      !decode(zeroed, sc.sinr_target_db);
  if (!decode_edges) {
    ++bad;
    if (first.empty()) first = "decode threshold edges";
  }
  std::string detail =
      std::to_string(std::size(items) + 1 - bad) + "/" +
      std::to_string(std::size(items) + 1) + " closed forms within 1e-9";
  if (bad) detail += "; first miss: " + first;
  report(1, bad == 0, "formula suite", detail);
}

// ---- check 8: controller choice equals a brute-force score minimum ----

void check_controller_argmin() {
  std::mt19937_64 rng(0xACCE97u);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
  };
  int matches = 0;
  const int trials = 100;
  std::string first;
  for (int t = 0; t < trials; ++t) {
    Scenario sc;
    const double v_choices[] = {0.0, 5.0, 10.0, 60.0, 120.0};
    sc.v_param = v_choices[rng() % 5];
    sc.zeta_o = uni(0.01, 0.2);
    sc.r_min = 1 + static_cast<int>(rng() % 2);
    sc.r_max_cluster = 3 + static_cast<int>(rng() % 3);
    AdaptiveController ctl(sc);
    int n_obs = static_cast<int>(rng() % 81);
    double mean = uni(30.0, 300.0);
    for (int i = 0; i < n_obs; ++i)
      ctl.on_increment(exp_draw(rng, mean));
    int n_done = static_cast<int>(rng() % 6);
    for (int i = 0; i < n_done; ++i)
      ctl.on_tb_complete(uni(0.0, 0.6), 1 + static_cast<int>(rng() % 9));
    for (int i = 0; i < 20; ++i)
      ctl.on_slot_arrivals(uni(0.0, 2.0), static_cast<int>(rng() % 2));

    DecisionContext ctx;
    ctx.slot = static_cast<std::int64_t>(rng() % 20000);
    ctx.cluster_index = 1 + static_cast<int>(rng() % 3);
    ctx.rtx_so_far = 1 + static_cast<int>(rng() % 5);
    ctx.budget_left = 1 + static_cast<int>(rng() % 9);
    ctx.accumulated_sinr_linear =
        uni(0.0, 1.2 * std::pow(10.0, sc.sinr_target_db / 10.0));
    ctx.q1_tbe = uni(0.0, 5.0);
    ctx.q2 = 1 + static_cast<std::int64_t>(rng() % 4);
    ctx.z = ctl.z();

    int remaining = static_cast<int>(ctx.budget_left);
    int lo = sc.r_min, hi = std::min(sc.r_max_cluster, remaining);
    if (remaining < sc.r_min) lo = hi = remaining;
    int best_r = -1;
    double best_gamma = 0;
    for (int r = lo; r <= hi; ++r) {
      double risk = ctl.estimate_risk(ctx, r);
      double gamma =
          gamma_score_terms(sc.v_param, r, ctx.z, risk, sc.zeta_o, ctx.q1_tbe,
                            ctl.a1_hat(), static_cast<double>(ctx.q2),
                            ctl.a2_hat(), 1.0 - risk);
      if (best_r < 0 || gamma < best_gamma) {
        best_r = r;
        best_gamma = gamma;
      }
    }
    ActionScore got = ctl.choose_action(ctx);
    if (got.r == best_r && std::fabs(got.gamma - best_gamma) <= 1e-12) {
      ++matches;
    } else if (first.empty()) {
      first = "trial " + std::to_string(t) + ": got r=" +
              std::to_string(got.r) + " want r=" + std::to_string(best_r);
    }
  }
  std::string detail = std::to_string(matches) + "/" +
                       std::to_string(trials) + " exact argmin matches";
  if (!first.empty()) detail += "; " + first;
  report(8, matches == trials, "controller decision vs exhaustive score scan",
         detail);
}

}  // namespace

int main() {
  const char* strats[] = {"reactive", "fixed(2,2,2,2,2)", "fixed(3,3,3,1)",
                          "adaptive"};
  const int kReactive = 0, kFixed2 = 1, kFixed3 = 2, kAdaptive = 3;
  const int n_seeds = 5;

  std::vector<Scenario> grid;
  for (const char* s : strats)
    for (int seed = 1; seed <= n_seeds; ++seed)
      grid.push_back(grid_scenario(s, static_cast<std::uint64_t>(seed)));
  const int v_lo = 0, v_hi = 120, v_step = 10;
  for (int v = v_lo; v <= v_hi; v += v_step)
    for (int seed = 1; seed <= n_seeds; ++seed) {
      Scenario sc = grid_scenario("adaptive", static_cast<std::uint64_t>(seed));
      sc.v_param = v;
      grid.push_back(sc);
    }

  std::vector<RunResult> all = run_many(grid, 0);
  int ok_runs = 0, conserved_runs = 0;
  for (const RunResult& r : all) {
    if (r.ok) ++ok_runs;
    if (r.ok && r.summary.conserved) ++conserved_runs;
  }
  std::printf("grid: %zu runs, %d ok, %d byte-conserved\n", all.size(),
              ok_runs, conserved_runs);
  if (ok_runs != static_cast<int>(all.size()) || conserved_runs != ok_runs) {
    std::printf("grid invariants broken; aborting\n");
    return 10;
  }

  auto at = [&](int strat, int seed1) -> const RunResult& {
    return all[static_cast<std::size_t>(strat) * n_seeds + seed1 - 1];
  };
  auto sweep_at = [&](int vi, int seed1) -> const RunResult& {
    return all[4 * n_seeds + static_cast<std::size_t>(vi) * n_seeds + seed1 -
               1];
  };

  // [1] closed forms
  check_formulas();

  // [2] the one-at-a-time baseline never allocates an unneeded slot
  {
    int exact = 0;
    for (int s = 1; s <= n_seeds; ++s)
      if (at(kReactive, s).summary.resource_efficiency == 1.0) ++exact;
    report(2, exact == n_seeds, "single-shot baseline efficiency anchor",
           "efficiency exactly 1.0 on " + std::to_string(exact) + "/" +
               std::to_string(n_seeds) + " seeds");
  }

  // [3] efficiency ordering across strategies, plus absolute bands
  {
    int ordered = 0;
    double e2 = 0, e3 = 0;
    for (int s = 1; s <= n_seeds; ++s) {
      double er = at(kReactive, s).summary.resource_efficiency;
      double ef2 = at(kFixed2, s).summary.resource_efficiency;
      double ef3 = at(kFixed3, s).summary.resource_efficiency;
      if (er > ef2 && ef2 > ef3) ++ordered;
      e2 += ef2 / n_seeds;
      e3 += ef3 / n_seeds;
    }
    bool bands = e2 >= 0.70 && e2 <= 0.92 && e3 >= 0.55 && e3 <= 0.80;
    report(3, ordered >= 4 && bands, "proactive efficiency cost ordering",
           "ordered on " + std::to_string(ordered) + "/5 seeds; 2-slot mean " +
               fmt(e2) + " in [0.70,0.92], 3-slot mean " + fmt(e3) +
               " in [0.55,0.80]");
  }

  // [4] 90th-percentile delivery latency ordering
  {
    int ordered = 0, adaptive_ok = 0;
    for (int s = 1; s <= n_seeds; ++s) {
      double pr = p90_ran(at(kReactive, s));
      double p2 = p90_ran(at(kFixed2, s));
      double p3 = p90_ran(at(kFixed3, s));
      double pa = p90_ran(at(kAdaptive, s));
      if (pr > p2 && p2 >= p3) ++ordered;
      if (pa <= pr) ++adaptive_ok;
    }
    report(4, ordered >= 4 && adaptive_ok == n_seeds,
           "90th-percentile latency ordering",
           "baseline worst on " + std::to_string(ordered) +
               "/5 seeds; adaptive at or below baseline on " +
               std::to_string(adaptive_ok) + "/5");
  }

  // [5] adaptive keeps efficiency without giving up latency
  {
    double ea = 0, e3 = 0, la = 0, l2 = 0;
    for (int s = 1; s <= n_seeds; ++s) {
      ea += at(kAdaptive, s).summary.resource_efficiency / n_seeds;
      e3 += at(kFixed3, s).summary.resource_efficiency / n_seeds;
      la += at(kAdaptive, s).summary.ran_latency_ms.mean / n_seeds;
      l2 += at(kFixed2, s).summary.ran_latency_ms.mean / n_seeds;
    }
    bool pass = ea >= e3 + 0.05 && la <= l2 + 0.5;
    report(5, pass, "adaptive efficiency/latency trade-off",
           "efficiency " + fmt(ea) + " vs 3-slot+0.05=" + fmt(e3 + 0.05) +
               "; mean latency " + fmt(la) + " ms vs 2-slot+0.5=" +
               fmt(l2 + 0.5) + " ms");
  }

  // [6] penalty sweep: objective dips in the interior, queue grows with V
  {
    const int n_v = (v_hi - v_lo) / v_step + 1;
    std::vector<double> vs(n_v), fobj(n_v), queue(n_v);
    for (int vi = 0; vi < n_v; ++vi) {
      vs[vi] = v_lo + vi * v_step;
      for (int s = 1; s <= n_seeds; ++s) {
        fobj[vi] += sweep_at(vi, s).summary.f_obj / n_seeds;
        queue[vi] += sweep_at(vi, s).summary.time_avg_queue_tbe / n_seeds;
      }
    }
    int arg = 0;
    for (int vi = 1; vi < n_v; ++vi)
      if (fobj[vi] < fobj[arg]) arg = vi;
    bool interior = arg > 0 && arg < n_v - 1 && fobj[arg] < fobj[0] &&
                    fobj[arg] < fobj[n_v - 1];
    double rho = spearman(vs, queue);
    report(6, interior && rho > 0.5, "penalty sweep shape",
           "objective " + fmt(fobj[0]) + " @V=0, min " + fmt(fobj[arg]) +
               " @V=" + fmt(vs[arg]) + ", " + fmt(fobj[n_v - 1]) +
               " @V=120 (interior strict dip: " +
               (interior ? "yes" : "no") + "); queue-vs-V Spearman rho=" +
               fmt(rho));
  }

  // [7] long-run risk constraint holds for the adaptive controller
  {
    double zb = 0, zt = 0, zb_max = 0, zt_max = 0;
    for (int s = 1; s <= n_seeds; ++s) {
      const RunSummary& m = at(kAdaptive, s).summary;
      zb += m.zeta_bar / n_seeds;
      zt += m.z_over_t / n_seeds;
      zb_max = std::max(zb_max, m.zeta_bar);
      zt_max = std::max(zt_max, m.z_over_t);
    }
    double cap = grid[0].zeta_o + 0.02;
    bool pass = zb <= cap && zt < 1e-3;
    report(7, pass, "average risk within threshold",
           "seed-mean risk " + fmt(zb) + " <= " + fmt(cap) +
               ", seed-mean Z/t " + fmt(zt) + " < 1e-3 (per-seed max " +
               fmt(zb_max) + " / " + fmt(zt_max) + ")");
  }

  // [8] controller argmin equivalence
  check_controller_argmin();

  // [9] end-to-end delivery loss stays small for every strategy
  {
    double worst_agg = 0, worst_seed = 0;
    std::string per;
    for (int st = 0; st < 4; ++st) {
      double agg = 0;
      for (int s = 1; s <= n_seeds; ++s) {
        agg += at(st, s).summary.app_loss_rate / n_seeds;
        worst_seed = std::max(worst_seed, at(st, s).summary.app_loss_rate);
      }
      worst_agg = std::max(worst_agg, agg);
      per += (st ? " " : "") + fmt(agg);
    }
    report(9, worst_agg < 0.02, "delivery loss under the budget cap",
           "per-strategy seed-mean loss " + per + " (cap 0.02; worst single"
               " seed " + fmt(worst_seed) + ")");
  }

  // [10] pinned reference digests
  {
    struct Pin {
      int strat;
      int seed;
      const char* digest;
    };
    const Pin pins[] = {
        {kReactive, 1, "a79548d53970c70a"},
        {kFixed3, 2, "c27ade9acea3709e"},
        {kAdaptive, 3, "da5ede907de68e62"},
    };
    int good = 0;
    std::string miss;
    for (const Pin& p : pins) {
      std::string got = summary_digest(at(p.strat, p.seed).summary);
      if (got == p.digest) {
        ++good;
      } else if (miss.empty()) {
        miss = std::string(strats[p.strat]) + " seed " +
               std::to_string(p.seed) + " got " + got + " want " + p.digest;
      }
    }
    std::string detail = std::to_string(good) + "/3 digests stable";
    if (!miss.empty()) detail += "; " + miss;
    report(10, good == 3, "reference digest regression", detail);
  }

  std::printf("%d/10 checks passed\n", 10 - g_failures);
  return g_failures;
}
