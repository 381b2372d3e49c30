#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "qrepeater/params.hpp"

namespace qrepeater {

// --- Source preparation -----------------------------------------------------

// Mean time to load all four ensembles of one pair source when each write
// attempt succeeds with probability q at repetition rate r.  The four
// memories charge in parallel and a success is only accepted when its
// heralding photon is actually detected, so the per-attempt probability seen
// by the slowest-of-four statistics is q; the 25/12 factor is the exact mean
// of the maximum of four independent geometric variables in the small-q
// limit (1/q times H-like alternating sum -> 25/12).
inline double charging_time_ideal(double p, double r_hz) {
  if (p <= 0.0 || p > 1.0) throw std::domain_error("write probability must lie in (0, 1]");
  if (r_hz <= 0.0) throw std::domain_error("repetition rate must be positive");
  return 25.0 / (12.0 * r_hz * p);
}

// Same, with the heralding detector efficiency folded into the per-attempt
// success probability.
inline double charging_time(double p, double r_hz, double eta_d) {
  if (eta_d <= 0.0 || eta_d > 1.0) throw std::domain_error("eta_d must lie in (0, 1]");
  return charging_time_ideal(p * eta_d, r_hz);
}

// Success probability of one post-selected source preparation round with
// ideal readout and detection.
inline double p_source_ideal(double alpha2) {
  if (alpha2 <= 0.0 || alpha2 >= 1.0) throw std::domain_error("alpha2 must lie in (0, 1)");
  const double beta2 = 1.0 - alpha2;
  return 2.0 * alpha2 * alpha2 * beta2 * beta2;
}

// Success probability of one source preparation round with combined readout
// detection efficiency eta = eta_m * eta_d.
inline double p_source_detected(double alpha2, double eta) {
  if (alpha2 <= 0.0 || alpha2 >= 1.0) throw std::domain_error("alpha2 must lie in (0, 1)");
  if (eta <= 0.0 || eta > 1.0) throw std::domain_error("eta must lie in (0, 1)");
  const double d = 1.0 - alpha2 * eta;
  return 2.0 * eta * eta * alpha2 * alpha2 * d * d;
}

// Mean wall-clock time of one successful source preparation, including the
// 3/2 penalty for the two sources of a link having to restart together.
inline double source_prep_time(double alpha2, double eta, double p, double r_hz,
                               double eta_d) {
  return 1.5 * charging_time(p, r_hz, eta_d) / p_source_detected(alpha2, eta);
}

inline double source_prep_time(const RepeaterParams& p) {
  return source_prep_time(p.alpha2, p.eta(), p.p, p.r_hz, p.eta_d);
}

// --- State weights ----------------------------------------------------------

// Weight decomposition of the state a source emits once readout loss
// (1 - eta) has acted on both photons, conditioned on nothing yet: c2 for
// the entangled two-photon part, c1 for each of the four one-photon terms,
// c0 for vacuum.
inline StateWeights source_weights(double alpha2, double eta) {
  if (alpha2 <= 0.0 || alpha2 >= 1.0) throw std::domain_error("alpha2 must lie in (0, 1)");
  if (eta <= 0.0 || eta > 1.0) throw std::domain_error("eta must lie in (0, 1)");
  const double beta2 = 1.0 - alpha2;
  const double d = 1.0 - alpha2 * eta;
  StateWeights w;
  w.c2 = beta2 * beta2 / (d * d);
  w.c1 = alpha2 * beta2 * (1.0 - eta) / (2.0 * d * d);
  w.c0 = alpha2 * alpha2 * (1.0 - eta) * (1.0 - eta) / (d * d);
  w.source_derived = true;
  return w;
}

inline StateWeights source_weights(const RepeaterParams& p) {
  return source_weights(p.alpha2, p.eta());
}

// Weights after one entanglement swap of two links that both carry w.
// The map renormalizes by construction and its output always satisfies the
// stationarity identity c0' c2' = 4 c1'^2, so source-derived weights are a
// fixed point.
inline StateWeights swap_map(const StateWeights& w) {
  const double s = w.c2 + 2.0 * w.c1;
  if (!(s > 0.0)) throw std::domain_error("swap of weights with c2 + 2 c1 = 0 never heralds");
  StateWeights out;
  out.c2 = (w.c2 * w.c2) / (s * s);
  out.c1 = (w.c1 * w.c2) / (s * s);
  out.c0 = (4.0 * w.c1 * w.c1) / (s * s);
  out.source_derived = true;
  return out;
}

// --- Per-stage success probabilities ----------------------------------------

// Heralding probability of one elementary-link generation attempt, given the
// source weights, combined readout detection efficiency eta and fiber
// amplitude transmission eta_t from a source to the central station.
inline double p_link(const StateWeights& w, double eta, double eta_t) {
  const double h = 0.5 * w.c2 + w.c1;
  return 2.0 * eta * eta * eta_t * eta_t * h * h;
}

// Heralding probability of one entanglement swap between two links carrying
// w; the readout photons do not travel, so no fiber factor appears.
inline double p_swap(const StateWeights& w, double eta) {
  const double h = 0.5 * w.c2 + w.c1;
  return 2.0 * eta * eta * h * h;
}

// Probability that the final post-selection keeps the distributed pair.
inline double p_postselect(const StateWeights& w, double eta) {
  return w.c2 * eta * eta;
}

// --- Total time -------------------------------------------------------------

// Mean entanglement distribution time as the explicit product over the
// generation stage, the n swap levels and the final post-selection.  Each
// stage multiplies the time by 3/2 (two subordinate successes needed, the
// earlier one waiting for the later) and divides by its success probability.
// The base cycle is the heralding time of one elementary link, plus the
// source preparation time when include_source_prep is set.
inline double total_time_product(const RepeaterParams& p, bool include_source_prep = false) {
  validate(p);
  const StateWeights w = source_weights(p);
  const double cycle = p.herald_s() + (include_source_prep ? source_prep_time(p) : 0.0);
  double t = cycle / p_link(w, p.eta(), p.eta_t());
  StateWeights lvl = w;
  for (int k = 0; k < p.n; ++k) {
    t *= 1.5 / p_swap(lvl, p.eta());
    lvl = swap_map(lvl);
  }
  return t / p_postselect(lvl, p.eta());
}

// Same quantity in closed form; the stationarity of the weights collapses
// the product into a single power law.
inline double total_time_closed(const RepeaterParams& p, bool include_source_prep = false) {
  validate(p);
  const double eta = p.eta();
  const double beta2 = 1.0 - p.alpha2;
  const double d = 1.0 - p.alpha2 * eta;
  const double cycle = p.herald_s() + (include_source_prep ? source_prep_time(p) : 0.0);
  const double e = 2.0 * (p.n + 2);
  return 2.0 * std::pow(3.0, p.n) * cycle * std::pow(d, e) /
         (p.eta_t() * p.eta_t() * std::pow(eta, e) * std::pow(beta2, e));
}

// Mean time to send one photon directly through fiber and have it arrive,
// at the given source rate and attenuation.
inline double direct_transmission_time(double L_km, double rate_hz = 10.0e9,
                                       double loss_db_per_km = 0.2) {
  if (L_km <= 0.0) throw std::domain_error("distance must be positive");
  if (rate_hz <= 0.0) throw std::domain_error("rate must be positive");
  return 1.0 / (rate_hz * std::pow(10.0, -loss_db_per_km * L_km / 10.0));
}

// --- Fidelity ---------------------------------------------------------------

// First-order estimate of the final-state fidelity for a 16-link chain
// (n = 4).  The polynomial coefficients come from propagating the dominant
// multi-photon error terms through four swap levels and are specific to that
// depth, so other n are rejected.
inline double final_fidelity(double alpha2, double p, double eta, double eta_d) {
  const double penalty =
      ((418.0 - 260.0 * eta) + (47.0 - 205.0 * eta) * alpha2) * (1.0 - eta_d) * p;
  return 1.0 - penalty;
}

inline double final_fidelity(const RepeaterParams& p) {
  if (p.n != 4) throw std::domain_error("fidelity estimate is calibrated for n = 4 only");
  return final_fidelity(p.alpha2, p.p, p.eta(), p.eta_d);
}

// --- Assembled report -------------------------------------------------------

struct RateBreakdown {
  double t_charge_s = 0.0;       // mean four-memory charging time
  double t_source_s = 0.0;       // mean successful source preparation time
  double p_source_ideal = 0.0;   // source success probability, lossless readout
  double p_source = 0.0;         // source success probability with losses
  StateWeights weights;          // emitted-state decomposition
  double eta_t = 0.0;            // half-link fiber transmission
  double p_link = 0.0;           // elementary link heralding probability
  double p_swap = 0.0;           // swap heralding probability (stationary)
  double p_postselect = 0.0;     // final post-selection probability
  double t_total_s = 0.0;        // mean distribution time, stage product
  double t_total_closed_s = 0.0; // mean distribution time, closed form
  std::optional<double> fidelity;  // only for n = 4
  bool fidelity_clamped = false;   // set when the estimate fell below zero
  bool include_source_prep = false;
};

inline RateBreakdown breakdown(const RepeaterParams& p, bool include_source_prep = false) {
  validate(p);
  RateBreakdown b;
  b.t_charge_s = charging_time(p.p, p.r_hz, p.eta_d);
  b.t_source_s = source_prep_time(p);
  b.p_source_ideal = qrepeater::p_source_ideal(p.alpha2);
  b.p_source = p_source_detected(p.alpha2, p.eta());
  b.weights = source_weights(p);
  b.eta_t = p.eta_t();
  b.p_link = qrepeater::p_link(b.weights, p.eta(), p.eta_t());
  b.p_swap = qrepeater::p_swap(b.weights, p.eta());
  b.p_postselect = qrepeater::p_postselect(b.weights, p.eta());
  b.t_total_s = total_time_product(p, include_source_prep);
  b.t_total_closed_s = total_time_closed(p, include_source_prep);
  b.include_source_prep = include_source_prep;
  if (p.n == 4) {
    double f = final_fidelity(p);
    if (f < 0.0) {
      f = 0.0;
      b.fidelity_clamped = true;
    }
    b.fidelity = f;
  }
  return b;
}

// --- Working-point optimization ----------------------------------------------

struct OptimizeResult {
  double alpha2 = 0.0;
  RateBreakdown report;
};

// Finds the alpha2 minimizing the mean distribution time on a deterministic
// grid (coarse step 1e-2, refined to 1e-4 around the coarse minimum).  When
// f_min > 0 only points with fidelity >= f_min qualify, which restricts the
// search to n = 4 where the estimate exists.
inline OptimizeResult optimize_alpha(RepeaterParams p, double f_min = 0.0,
                                     bool include_source_prep = false) {
  if (f_min > 0.0 && p.n != 4)
    throw std::domain_error("fidelity constraint requires n = 4");
  if (f_min >= 1.0) throw std::domain_error("f_min must be below 1");

  auto feasible = [&](double a2) {
    if (a2 <= 0.0 || a2 >= 1.0) return false;
    if (a2 * p.eta() > 0.99) return false;
    if (f_min > 0.0) {
      RepeaterParams q = p;
      q.alpha2 = a2;
      if (final_fidelity(q) < f_min) return false;
    }
    return true;
  };
  auto objective = [&](double a2) {
    RepeaterParams q = p;
    q.alpha2 = a2;
    return total_time_product(q, include_source_prep);
  };

  double best_a2 = 0.0;
  double best_t = 0.0;
  bool found = false;
  auto scan = [&](double lo, double hi, double step) {
    // Integer stepping keeps the grid reproducible across platforms.
    const long k_lo = std::lround(lo / step);
    const long k_hi = std::lround(hi / step);
    for (long k = k_lo; k <= k_hi; ++k) {
      const double a2 = k * step;
      if (!feasible(a2)) continue;
      const double t = objective(a2);
      if (!found || t < best_t) {
        found = true;
        best_t = t;
        best_a2 = a2;
      }
    }
  };
  scan(0.01, 0.99, 1e-2);
  if (!found) throw std::domain_error("no feasible alpha2 satisfies the constraints");
  scan(std::max(best_a2 - 1e-2, 1e-4), std::min(best_a2 + 1e-2, 1.0 - 1e-4), 1e-4);

  p.alpha2 = best_a2;
  OptimizeResult r;
  r.alpha2 = best_a2;
  r.report = breakdown(p, include_source_prep);
  return r;
}

}  // namespace qrepeater
