#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrepeater {

// Parameters of one repeater configuration.
// Distances in km, times in seconds, rates in Hz.
//
// alpha2 is the squared amplitude of the single-photon component written
// into each source ensemble; the two-photon weight beta^2 = 1 - alpha^2 is
// always derived, never stored.  eta_m is the spin-wave readout (memory)
// efficiency, eta_d the photon detector efficiency; the combined readout
// detection efficiency is eta = eta_m * eta_d.  p is the success
// probability of one write attempt into an ensemble and r_hz the repetition
// rate of those attempts.  The chain spans L_km split into 2^n elementary
// links.
struct RepeaterParams {
  double alpha2 = 0.2;
  double eta_m = 0.9;
  double eta_d = 0.9;
  double p = 6.0e-3;
  double r_hz = 60.0e6;
  double L_km = 1000.0;
  int n = 4;
  double L_att_km = 22.0;
  double c_fiber_mps = 2.0e8;

  double beta2() const { return 1.0 - alpha2; }
  double eta() const { return eta_m * eta_d; }
  int link_count() const { return 1 << n; }

  // Elementary link length; ldexp keeps the halvings exact in binary.
  double link_km() const { return std::ldexp(L_km, -n); }

  // Fiber amplitude transmission of half an elementary link (source to the
  // central station of the link).
  double eta_t() const { return std::exp(-link_km() / (2.0 * L_att_km)); }

  // One-way signalling time across an elementary link.
  double herald_s() const { return link_km() * 1e3 / c_fiber_mps; }
};

// Validates every field and the cross-field constraints; returns the params
// unchanged on success and throws std::invalid_argument naming the first
// offending field otherwise.
inline RepeaterParams validate(const RepeaterParams& p) {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid parameter: " + what);
  };
  auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) fail(std::string(name) + " must be finite");
  };
  finite(p.alpha2, "alpha2");
  finite(p.eta_m, "eta_m");
  finite(p.eta_d, "eta_d");
  finite(p.p, "p");
  finite(p.r_hz, "r_hz");
  finite(p.L_km, "L_km");
  finite(p.L_att_km, "L_att_km");
  finite(p.c_fiber_mps, "c_fiber_mps");
  if (p.alpha2 <= 0.0 || p.alpha2 >= 1.0) fail("alpha2 must lie in (0, 1)");
  if (p.eta_m < 0.0 || p.eta_m > 1.0) fail("eta_m must lie in [0, 1]");
  if (p.eta_d < 0.0 || p.eta_d > 1.0) fail("eta_d must lie in [0, 1]");
  if (p.p <= 0.0 || p.p >= 1.0) fail("p must lie in (0, 1)");
  if (p.r_hz <= 0.0) fail("r_hz must be positive");
  if (p.L_km <= 0.0) fail("L_km must be positive");
  if (p.n < 0 || p.n > 30) fail("n must lie in [0, 30]");
  if (p.L_att_km <= 0.0) fail("L_att_km must be positive");
  if (p.c_fiber_mps <= 0.0) fail("c_fiber_mps must be positive");
  // Keep 1 - alpha^2 eta bounded away from zero: every closed form divides
  // by powers of it.
  if (p.alpha2 * p.eta() > 0.99) fail("alpha2 * eta_m * eta_d must not exceed 0.99");
  if (!(p.link_km() > 0.0)) fail("link length L_km / 2^n underflows to zero");
  return p;
}

// Weight decomposition of one entangled-pair source state after readout and
// losses, in the form  c2 * (two-photon pair part) + c1 * (each of the four
// single-photon terms) + c0 * (vacuum).  Normalization is c2 + 4 c1 + c0 = 1.
struct StateWeights {
  double c2 = 1.0;
  double c1 = 0.0;
  double c0 = 0.0;
  // Set when produced by source_weights(); such weights additionally satisfy
  // the stationarity identity c0 c2 = 4 c1^2 that makes them a fixed point
  // of entanglement swapping.
  bool source_derived = false;

  double sum() const { return c2 + 4.0 * c1 + c0; }
  double normalization_error() const { return std::abs(sum() - 1.0); }
  double stationarity_error() const { return std::abs(c0 * c2 - 4.0 * c1 * c1); }

  // Builds normalized weights from non-negative raw values.
  static StateWeights normalized(double c2, double c1, double c0) {
    if (c2 < 0.0 || c1 < 0.0 || c0 < 0.0)
      throw std::invalid_argument("state weights must be non-negative");
    const double s = c2 + 4.0 * c1 + c0;
    if (!(s > 0.0)) throw std::invalid_argument("state weights must not all vanish");
    return StateWeights{c2 / s, c1 / s, c0 / s, false};
  }
};

// Throws unless w is a valid normalized decomposition; source-derived
// weights must additionally be stationary.
inline void check(const StateWeights& w, double tol = 1e-12) {
  if (w.c2 < 0.0 || w.c1 < 0.0 || w.c0 < 0.0)
    throw std::invalid_argument("state weights must be non-negative");
  if (w.normalization_error() > tol)
    throw std::invalid_argument("state weights must satisfy c2 + 4 c1 + c0 = 1");
  if (w.source_derived && w.stationarity_error() > tol)
    throw std::invalid_argument("source-derived weights must satisfy c0 c2 = 4 c1^2");
}

}  // namespace qrepeater
