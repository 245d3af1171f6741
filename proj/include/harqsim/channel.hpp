#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "harqsim/rng.hpp"
#include "harqsim/scenario.hpp"

namespace harqsim {

// Indoor factory, sparse clutter. Distances in metres, carrier in GHz,
// results in dB.
inline double path_loss_los_db(double d_m, double fc_ghz) {
  if (d_m <= 0 || fc_ghz <= 0)
    throw std::invalid_argument("path_loss_los_db: d and fc must be > 0");
  return 31.84 + 21.50 * std::log10(d_m) + 19.00 * std::log10(fc_ghz);
}

inline double path_loss_nlos_db(double d_m, double fc_ghz) {
  if (d_m <= 0 || fc_ghz <= 0)
    throw std::invalid_argument("path_loss_nlos_db: d and fc must be > 0");
  return 33.0 + 25.50 * std::log10(d_m) + 20.00 * std::log10(fc_ghz);
}

// Decay constant of the exponential LOS-probability curve, fixed by the
// clutter size and density: k = -d_clutter / ln(1 - density).
inline double los_decay_constant(double d_clutter_m, double clutter_density) {
  if (clutter_density <= 0 || clutter_density >= 1)
    throw std::invalid_argument("clutter_density must be in (0,1)");
  return -d_clutter_m / std::log(1.0 - clutter_density);
}

inline double los_probability(double d_m, double d_clutter_m,
                              double clutter_density) {
  if (d_m < 0) throw std::invalid_argument("los_probability: d must be >= 0");
  return std::exp(-d_m / los_decay_constant(d_clutter_m, clutter_density));
}

// Receiver-side channel state. The shadowing process is kept as a unit
// normal AR(1) sample and scaled by the sigma of the current LOS/NLOS leg,
// which keeps the marginal variance exact across LOS flips.
struct LinkState {
  double pos_x_m = 0.0;
  double pos_y_m = 0.0;
  double distance_m = 0.0;
  bool is_los = false;
  double shadow_normal = 0.0;      // N(0,1) marginal
  double shadowing_db = 0.0;       // shadow_normal * sigma(is_los)
  double dist_since_los_draw = 0.0;
};

inline double shadow_sigma_db(const Scenario& sc, bool is_los) {
  if (!sc.shadowing_enabled) return 0.0;
  return is_los ? sc.shadowing_sigma_los_db : sc.shadowing_sigma_nlos_db;
}

inline LinkState initial_link_state(const Scenario& sc,
                                    std::mt19937_64& los_rng,
                                    std::mt19937_64& shadow_rng) {
  LinkState ls;
  ls.pos_x_m = sc.d0_m;
  ls.pos_y_m = 0.0;
  ls.distance_m = sc.d0_m;
  double p = los_probability(sc.d0_m, sc.d_clutter_m, sc.clutter_density);
  ls.is_los = uniform01(los_rng) < p;
  ls.shadow_normal = normal_draw(shadow_rng);
  ls.shadowing_db = ls.shadow_normal * shadow_sigma_db(sc, ls.is_los);
  ls.dist_since_los_draw = 0.0;
  return ls;
}

// Advances the link to a new position: shadowing decorrelates with the
// distance moved (rho = exp(-dd/decorr)); the LOS state is redrawn once the
// cumulative movement since the last draw exceeds the decorrelation distance
// (or every slot when configured so).
inline LinkState sample_link_state(const LinkState& prev, double new_x,
                                   double new_y, const Scenario& sc,
                                   std::mt19937_64& los_rng,
                                   std::mt19937_64& shadow_rng) {
  LinkState ls = prev;
  double dx = new_x - prev.pos_x_m;
  double dy = new_y - prev.pos_y_m;
  double dd = std::sqrt(dx * dx + dy * dy);
  ls.pos_x_m = new_x;
  ls.pos_y_m = new_y;
  ls.distance_m = std::sqrt(new_x * new_x + new_y * new_y);

  if (dd > 0.0) {
    double rho = std::exp(-dd / sc.decorrelation_dist_m);
    ls.shadow_normal = rho * prev.shadow_normal +
                       std::sqrt(1.0 - rho * rho) * normal_draw(shadow_rng);
  }
  ls.dist_since_los_draw = prev.dist_since_los_draw + dd;
  if (sc.los_redraw_per_slot ||
      ls.dist_since_los_draw >= sc.decorrelation_dist_m) {
    double p =
        los_probability(ls.distance_m, sc.d_clutter_m, sc.clutter_density);
    ls.is_los = uniform01(los_rng) < p;
    ls.dist_since_los_draw = 0.0;
  }
  ls.shadowing_db = ls.shadow_normal * shadow_sigma_db(sc, ls.is_los);
  return ls;
}

// ---- link budget ----

inline double antenna_gain_db(int utx, int srx) {
  return 10.0 * std::log10(static_cast<double>(utx) *
                           static_cast<double>(srx));
}

inline double rb_bandwidth_hz(const Scenario& sc) {
  return 12.0 * scs_khz(sc.numerology) * 1e3;
}

inline int num_rbs(const Scenario& sc) {
  int n = static_cast<int>(sc.bw_hz / rb_bandwidth_hz(sc));
  return std::max(n, 1);
}

inline double noise_dbm_per_rb(const Scenario& sc) {
  return -174.0 + 10.0 * std::log10(rb_bandwidth_hz(sc)) +
         sc.noise_figure_db;
}

// Deterministic part of the per-RB SINR (everything except fast fading).
inline double link_budget_db(const LinkState& ls, const Scenario& sc) {
  double pl = ls.is_los ? path_loss_los_db(ls.distance_m, sc.fc_ghz)
                        : path_loss_nlos_db(ls.distance_m, sc.fc_ghz);
  return sc.ptx_dbm - pl - ls.shadowing_db +
         antenna_gain_db(sc.utx, sc.srx) - noise_dbm_per_rb(sc);
}

// Per-RB linear SINRs for one transmission slot. Fast fading is i.i.d.
// unit-mean Rayleigh power per RB; with fading disabled all RBs carry the
// bare budget.
inline std::vector<double> per_rb_sinr(const LinkState& ls,
                                       const Scenario& sc, int n_rb,
                                       std::mt19937_64& fading_rng) {
  if (n_rb < 1) throw std::invalid_argument("per_rb_sinr: n_rb must be >= 1");
  double budget_lin = std::pow(10.0, link_budget_db(ls, sc) / 10.0);
  std::vector<double> out(static_cast<std::size_t>(n_rb));
  if (!sc.fading_enabled) {
    std::fill(out.begin(), out.end(), budget_lin);
    return out;
  }
  for (auto& s : out) s = budget_lin * exp_draw(fading_rng, 1.0);
  return out;
}

// Accumulated decoder state of one transport block.
struct TbSinrState {
  double accumulated_sinr_linear = 0.0;
  int rtx_count = 0;  // transmissions performed so far
};

// Exponential effective-SINR combining of one slot's RBs on top of the
// already-accumulated value (redundancy adds up in the effective domain).
// Implemented as a shifted log-sum-exp so huge linear SINRs cannot underflow
// the exponentials into -inf results.
inline double eesm_combine(const std::vector<double>& rb_sinrs_linear,
                           double prior_linear, double beta) {
  if (rb_sinrs_linear.empty())
    throw std::invalid_argument("eesm_combine: need at least one RB");
  if (beta <= 0) throw std::invalid_argument("eesm_combine: beta must be > 0");
  double m = *std::min_element(rb_sinrs_linear.begin(),
                               rb_sinrs_linear.end());
  double acc = 0.0;
  for (double s : rb_sinrs_linear) acc += std::exp(-(s - m) / beta);
  acc /= static_cast<double>(rb_sinrs_linear.size());
  // slot effective SINR = m - beta*ln(mean exp(-(s-m)/beta)) >= m > 0
  double slot_eff = m - beta * std::log(acc);
  return prior_linear + slot_eff;
}

// Decode check: accumulated effective SINR (in dB) meets the target.
inline bool decode(const TbSinrState& st, double target_db) {
  if (st.accumulated_sinr_linear <= 0.0) return false;
  return 10.0 * std::log10(st.accumulated_sinr_linear) >= target_db;
}

}  // namespace harqsim
