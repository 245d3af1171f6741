#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "harqsim/harq.hpp"
#include "harqsim/rng.hpp"
#include "harqsim/scenario.hpp"

namespace harqsim {

// Quadratic backlog potential over (Q1 in TB-equivalents, Q2, Z).
inline double lyapunov_value(double q1_tbe, double q2, double z) {
  return 0.5 * (q1_tbe * q1_tbe + q2 * q2 + z * z);
}

// Virtual-queue step for the long-run risk constraint. The caller refreshes
// the running mean zeta_bar before invoking this.
inline double update_virtual_queue(double z, double zeta_bar, double zeta_o) {
  return std::max(z + zeta_bar - zeta_o, 0.0);
}

// Everything a cluster-size decision can see. Queues are snapshotted at the
// decision instant; accumulated SINR is the decoder state reported in the
// grouped feedback.
struct DecisionContext {
  std::int64_t slot = 0;
  int cluster_index = 1;            // index of the cluster being decided
  std::int64_t rtx_so_far = 0;      // transmissions already spent on the TB
  std::int64_t budget_left = 0;     // transmissions still allowed
  double accumulated_sinr_linear = 0.0;
  double q1_tbe = 0.0;
  double q2 = 0.0;
  double z = 0.0;
};

// Model-free distribution of the per-transmission effective-SINR increment
// (linear domain). Keeps a sliding window of realized increments; below
// min_obs observations a Gaussian stand-in (configured prior, then sample
// moments) is used. The shortfall probability P[sum of r draws < gap] is
// evaluated exactly by enumeration for tiny windows and otherwise by a
// fixed-seed resampling pass whose draws are shared across candidate r, so
// estimates are deterministic and monotone in r by construction.
class IncrementModel {
 public:
  IncrementModel(int window_cap, int min_obs, int mc_samples, int max_r,
                 double prior_mean, double prior_sigma)
      : cap_(window_cap),
        min_obs_(min_obs),
        mc_samples_(mc_samples),
        max_r_(max_r),
        prior_mean_(prior_mean),
        prior_sigma_(prior_sigma) {}

  void add(double increment_linear) {
    if (increment_linear < 0) increment_linear = 0;
    window_.push_back(increment_linear);
    if (static_cast<int>(window_.size()) > cap_) window_.pop_front();
    ++n_total_;
  }

  std::int64_t observations() const { return n_total_; }
  std::size_t window_size() const { return window_.size(); }

  // P[sum of r draws < gap]; zero gap (or negative) means no shortfall.
  double shortfall_probability(int r, double gap) const {
    if (r < 1) throw std::invalid_argument("shortfall_probability: r >= 1");
    if (gap <= 0) return 0.0;
    if (n_total_ < min_obs_ || window_.empty()) return gaussian_tail(r, gap);
    auto profile = shortfall_profile(gap);
    return profile[static_cast<std::size_t>(std::min(r, max_r_)) - 1];
  }

  // Shortfall for every r in [1, max_r] from one shared sampling pass.
  std::vector<double> shortfall_profile(double gap) const {
    std::vector<double> out(static_cast<std::size_t>(max_r_), 0.0);
    if (gap <= 0) return out;
    if (n_total_ < min_obs_ || window_.empty()) {
      for (int r = 1; r <= max_r_; ++r)
        out[static_cast<std::size_t>(r) - 1] = gaussian_tail(r, gap);
      return out;
    }
    const std::size_t w = window_.size();
    double enum_paths = std::pow(static_cast<double>(w),
                                 static_cast<double>(max_r_));
    if (enum_paths <= 4096.0) {
      enumerate_exact(gap, out);
    } else {
      resample(gap, out);
    }
    return out;
  }

 private:
  double gaussian_tail(int r, double gap) const {
    double mu = prior_mean_;
    double sigma = prior_sigma_;
    if (!window_.empty()) {
      double sum = 0.0;
      for (double x : window_) sum += x;
      mu = sum / static_cast<double>(window_.size());
      if (window_.size() >= 2) {
        double ss = 0.0;
        for (double x : window_) ss += (x - mu) * (x - mu);
        double sd = std::sqrt(ss / static_cast<double>(window_.size()));
        if (sd > 0) sigma = sd;
      }
    }
    double rr = static_cast<double>(r);
    double zarg = (gap - rr * mu) / (sigma * std::sqrt(rr));
    return 0.5 * std::erfc(-zarg / std::sqrt(2.0));
  }

  // Walks every length-max_r tuple of window values once; prefix sums give
  // the shortfall counts for all r simultaneously.
  void enumerate_exact(double gap, std::vector<double>& out) const {
    const std::size_t w = window_.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(max_r_), 0);
    std::vector<double> prefix(static_cast<std::size_t>(max_r_) + 1, 0.0);
    std::vector<std::int64_t> hits(static_cast<std::size_t>(max_r_), 0);
    std::int64_t paths = 0;
    for (;;) {
      for (int d = 0; d < max_r_; ++d) {
        std::size_t di = static_cast<std::size_t>(d);
        prefix[di + 1] = prefix[di] + window_[idx[di]];
        if (prefix[di + 1] < gap) hits[di] += 1;
      }
      ++paths;
      int d = max_r_ - 1;
      while (d >= 0) {
        std::size_t di = static_cast<std::size_t>(d);
        if (++idx[di] < w) break;
        idx[di] = 0;
        --d;
      }
      if (d < 0) break;
    }
    for (int r = 1; r <= max_r_; ++r)
      out[static_cast<std::size_t>(r) - 1] =
          static_cast<double>(hits[static_cast<std::size_t>(r) - 1]) /
          static_cast<double>(paths);
  }

  void resample(double gap, std::vector<double>& out) const {
    const std::size_t w = window_.size();
    std::vector<std::int64_t> hits(static_cast<std::size_t>(max_r_), 0);
    // fixed seed: estimates depend only on the window contents and gap
    std::mt19937_64 g(0x5ca1ab1e0ddba11ULL);
    for (int i = 0; i < mc_samples_; ++i) {
      double sum = 0.0;
      for (int d = 0; d < max_r_; ++d) {
        sum += window_[static_cast<std::size_t>(g() % w)];
        if (sum < gap) hits[static_cast<std::size_t>(d)] += 1;
      }
    }
    for (int r = 1; r <= max_r_; ++r)
      out[static_cast<std::size_t>(r) - 1] =
          static_cast<double>(hits[static_cast<std::size_t>(r) - 1]) /
          static_cast<double>(mc_samples_);
  }

  std::deque<double> window_;
  int cap_;
  int min_obs_;
  int mc_samples_;
  int max_r_;
  double prior_mean_;
  double prior_sigma_;
  std::int64_t n_total_ = 0;
};

struct ActionScore {
  int r = 0;
  double gamma = 0.0;
  double risk = 0.0;              // shortfall estimate for this r
  double expected_service = 0.0;  // decode probability, TB-equivalents
};

// Penalty-plus-drift score of allocating r slots to the next cluster. The
// service estimate of the open HARQ process is the decode-probability
// complement of the shortfall; new-data service is zero because a cluster
// decision always serves the retransmission queue.
inline double gamma_score_terms(double v, int r, double z, double zeta_hat,
                                double zeta_o, double q1_tbe, double a1_hat,
                                double q2, double a2_hat, double b2_hat) {
  return v * static_cast<double>(r) + z * (zeta_hat - zeta_o) +
         q1_tbe * (a1_hat - 0.0) + q2 * (a2_hat - b2_hat);
}

// Drift-plus-penalty cluster-size controller with its virtual risk queue,
// long-run risk average, and arrival-rate estimators.
class AdaptiveController {
 public:
  explicit AdaptiveController(const Scenario& sc)
      : sc_(sc),
        increments_(sc.risk_window, sc.risk_min_obs, sc.risk_mc_samples,
                    sc.r_max_cluster, sc.risk_prior_mean_linear,
                    sc.risk_prior_sigma_linear) {}

  double z() const { return z_; }
  double zeta_bar() const { return zeta_bar_; }
  double f_obj_running() const {
    return tb_count_ == 0 ? 0.0 : f_obj_sum_ / static_cast<double>(tb_count_);
  }
  std::int64_t completed_tbs() const { return tb_count_; }
  const IncrementModel& increments() const { return increments_; }
  IncrementModel& increments_mut() { return increments_; }

  double target_linear() const {
    return std::pow(10.0, sc_.sinr_target_db / 10.0);
  }

  double estimate_risk(const DecisionContext& ctx, int r) const {
    double gap = target_linear() - ctx.accumulated_sinr_linear;
    return increments_.shortfall_probability(r, gap);
  }

  ActionScore gamma_score(const DecisionContext& ctx, int r) const {
    double zeta_hat = estimate_risk(ctx, r);
    return score_from_risk(ctx, r, zeta_hat);
  }

  // Exhaustive argmin over the feasible cluster sizes; ties prefer the
  // smallest r. The budget can force a terminal cluster below r_min.
  ActionScore choose_action(const DecisionContext& ctx) const {
    std::vector<ActionScore> scores = score_candidates(ctx);
    const ActionScore* best = &scores.front();
    for (const auto& s : scores)
      if (s.gamma < best->gamma) best = &s;
    return *best;
  }

  // Scores for every feasible r, ascending in r.
  std::vector<ActionScore> score_candidates(const DecisionContext& ctx) const {
    std::int64_t remaining = ctx.budget_left;
    if (remaining < 1)
      throw std::invalid_argument("choose_action: no budget left");
    int lo = sc_.r_min;
    int hi = static_cast<int>(
        std::min<std::int64_t>(sc_.r_max_cluster, remaining));
    if (remaining < sc_.r_min) lo = hi = static_cast<int>(remaining);
    double gap = target_linear() - ctx.accumulated_sinr_linear;
    std::vector<double> profile = increments_.shortfall_profile(gap);
    std::vector<ActionScore> out;
    for (int r = lo; r <= hi; ++r) {
      double zeta_hat =
          profile[static_cast<std::size_t>(
                      std::min(r, sc_.r_max_cluster)) - 1];
      out.push_back(score_from_risk(ctx, r, zeta_hat));
    }
    return out;
  }

  // ---- state updates driven by the engine ----

  void on_increment(double increment_linear) {
    increments_.add(increment_linear);
  }

  // Per-slot arrival samples for the sliding-rate estimators: new-data
  // arrivals in TB-equivalents and HARQ-process arrivals (failed initials).
  void on_slot_arrivals(double a1_tbe, double a2) {
    push_window(a1_window_, a1_sum_, a1_tbe);
    push_window(a2_window_, a2_sum_, a2);
  }

  // Completion hook: folds the realized risk of the TB's final cluster into
  // the long-run average, then steps the virtual queue.
  void on_tb_complete(double zeta_realized, std::int64_t total_rtx) {
    ++tb_count_;
    zeta_bar_ += (zeta_realized - zeta_bar_) / static_cast<double>(tb_count_);
    z_ = update_virtual_queue(z_, zeta_bar_, sc_.zeta_o);
    f_obj_sum_ += static_cast<double>(total_rtx);
  }

  double a1_hat() const {
    return a1_window_.empty()
               ? 0.0
               : a1_sum_ / static_cast<double>(a1_window_.size());
  }
  double a2_hat() const {
    return a2_window_.empty()
               ? 0.0
               : a2_sum_ / static_cast<double>(a2_window_.size());
  }

 private:
  ActionScore score_from_risk(const DecisionContext& ctx, int r,
                              double zeta_hat) const {
    ActionScore s;
    s.r = r;
    s.risk = zeta_hat;
    s.expected_service = 1.0 - zeta_hat;
    s.gamma = gamma_score_terms(sc_.v_param, r, ctx.z, zeta_hat, sc_.zeta_o,
                                ctx.q1_tbe, a1_hat(), ctx.q2, a2_hat(),
                                s.expected_service);
    return s;
  }

  void push_window(std::deque<double>& w, double& sum, double v) {
    w.push_back(v);
    sum += v;
    if (static_cast<int>(w.size()) > sc_.arrival_window_slots) {
      sum -= w.front();
      w.pop_front();
    }
  }

  const Scenario& sc_;
  IncrementModel increments_;
  std::deque<double> a1_window_;
  std::deque<double> a2_window_;
  double a1_sum_ = 0.0;
  double a2_sum_ = 0.0;
  double z_ = 0.0;
  double zeta_bar_ = 0.0;
  double f_obj_sum_ = 0.0;
  std::int64_t tb_count_ = 0;
};

// ---- stability diagnostic ----

// Moments accumulated over a run, needed to evaluate the backlog bound.
struct SlaterInputs {
  double time_avg_queue_tbe = 0.0;
  double mean_a1_sq = 0.0;
  double mean_a2_sq = 0.0;
  double mean_b1_sq = 0.0;
  double mean_b2_sq = 0.0;
  double mean_a1_min_q1_b1 = 0.0;
  double mean_a2_min_q2_b2 = 0.0;
  double mean_zeta_gap = 0.0;  // average of (zeta_bar - zeta_o) steps
  double f_obj_min = 0.0;
  double f_obj_max = 0.0;
};

struct SlaterParams {
  double c = 1.0;        // slack constant
  double epsilon = 0.1;  // Slater margin
  double v = 0.0;
};

struct SlaterReport {
  double b_hat = 0.0;
  double bound = 0.0;
  double time_avg_queue_tbe = 0.0;
  bool satisfied = false;
};

// Evaluates the drift-bound constant from measured moments and compares the
// realized time-average backlog against (B + C + V*(f_max-f_min))/epsilon.
// Diagnostic only: a generous epsilon or C can always be supplied.
inline SlaterReport check_slater_bound(const SlaterInputs& in,
                                       const SlaterParams& p) {
  if (p.epsilon <= 0)
    throw std::invalid_argument("check_slater_bound: epsilon must be > 0");
  SlaterReport r;
  r.b_hat = 0.5 * (in.mean_a1_sq + in.mean_a2_sq - in.mean_b1_sq -
                   in.mean_b2_sq) +
            0.5 * in.mean_zeta_gap -
            (in.mean_a1_min_q1_b1 + in.mean_a2_min_q2_b2);
  r.bound = (r.b_hat + p.c + p.v * (in.f_obj_max - in.f_obj_min)) / p.epsilon;
  r.time_avg_queue_tbe = in.time_avg_queue_tbe;
  r.satisfied = in.time_avg_queue_tbe <= r.bound;
  return r;
}

}  // namespace harqsim
