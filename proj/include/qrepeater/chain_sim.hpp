#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qrepeater/analytic.hpp"
#include "qrepeater/params.hpp"

// Discrete-event Monte Carlo of the repeater chain.  Every trial runs on
// its own counter-derived RNG substream, so results are bit-identical for a
// given seed no matter how many worker threads execute the trials or in
// which order they finish.

namespace qrepeater::sim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(splitmix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// Uniform draw from (0, 1]; never returns 0, so logs are safe.
inline double uniform01(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

// Number of Bernoulli(p) attempts up to and including the first success,
// by inversion.  Returned as double: for tiny p the count can exceed the
// integer range long before it stops being an adequate time estimate.
inline double sample_geometric(Engine& rng, double p) {
  if (p <= 0.0 || p > 1.0) throw std::domain_error("geometric probability must lie in (0, 1]");
  if (p == 1.0) return 1.0;
  return std::max(1.0, std::ceil(std::log(uniform01(rng)) / std::log1p(-p)));
}

// --- Source charging ---------------------------------------------------------

// Time until all four memories of one source hold an excitation: the max of
// four geometric attempt counts at per-attempt success p * eta_d and
// repetition rate r.
inline double sample_charging_time(double p, double r_hz, double eta_d, Engine& rng) {
  const double q = p * eta_d;
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, sample_geometric(rng, q));
  return worst / r_hz;
}

inline double sample_charging_time(const RepeaterParams& p, Engine& rng) {
  return sample_charging_time(p.p, p.r_hz, p.eta_d, rng);
}

// Exact mean of the maximum of four independent geometric counts with
// success probability q, in units of attempts: by inclusion-exclusion over
// P(max > j) with s = 1 - q,
//   E = 4/(1-s) - 6/(1-s^2) + 4/(1-s^3) - 1/(1-s^4).
// For q -> 0 this approaches (25/12)/q, the closed-form charging constant.
inline double charging_mean_exact(double q, double r_hz) {
  if (q <= 0.0 || q > 1.0) throw std::domain_error("success probability must lie in (0, 1]");
  const double s = 1.0 - q;
  const double e = 4.0 / (1.0 - s) - 6.0 / (1.0 - s * s) + 4.0 / (1.0 - s * s * s) -
                   1.0 / (1.0 - s * s * s * s);
  return e / r_hz;
}

// --- Source preparation ------------------------------------------------------

// How the time spent re-preparing sources is modelled.
enum class RestartPolicy {
  // Recharge all four memories from scratch after every failed
  // post-selection round and count the sampled charging times.
  full_restart,
  // Draw the number of rounds and charge the closed-form mean time per
  // round, including the 3/2 two-source rendezvous factor; reproduces the
  // closed-form source preparation time in expectation.
  paper_factor,
};

// Preparation time of a single source under the honest model: repeat
// (charge four memories, attempt the post-selected readout) until success.
inline double sample_source_time(const RepeaterParams& p, Engine& rng) {
  const double p_s = p_source_detected(p.alpha2, p.eta());
  double t = 0.0;
  for (;;) {
    t += sample_charging_time(p, rng);
    if (uniform01(rng) <= p_s) return t;
  }
}

// Time until both sources of one elementary link are ready.  Under
// full_restart the two sources run independently and the link waits for the
// slower one; under paper_factor the rendezvous is already folded into the
// closed-form factor.
inline double sample_link_prep_time(const RepeaterParams& p, Engine& rng,
                                    RestartPolicy policy) {
  if (policy == RestartPolicy::full_restart)
    return std::max(sample_source_time(p, rng), sample_source_time(p, rng));
  const double p_s = p_source_detected(p.alpha2, p.eta());
  const double rounds = sample_geometric(rng, p_s);
  return rounds * 1.5 * charging_time(p.p, p.r_hz, p.eta_d);
}

// --- Chain simulation --------------------------------------------------------

// Per-stage success probabilities driving the chain; normally derived from
// the closed forms, but callers may override them to probe scaling regimes.
struct StageProbs {
  double p_link = 0.0;
  double p_swap = 0.0;
  double p_postselect = 0.0;
};

inline StageProbs stage_probs(const RepeaterParams& p) {
  const StateWeights w = source_weights(p);
  return StageProbs{p_link(w, p.eta(), p.eta_t()), p_swap(w, p.eta()),
                    p_postselect(w, p.eta())};
}

inline void check(const StageProbs& s) {
  for (double p : {s.p_link, s.p_swap, s.p_postselect})
    if (!(p > 0.0) || p > 1.0)
      throw std::domain_error("stage probabilities must lie in (0, 1]");
}

// Stage-product mean time for a chain of depth n with the given cycle time:
// each swap level costs a factor 3/2 for the rendezvous of its two halves
// and one factor 1/p per heralded stage.
inline double product_time(double cycle_s, int depth, const StageProbs& s) {
  check(s);
  if (depth < 0) throw std::domain_error("depth must be non-negative");
  return std::pow(1.5, depth) * cycle_s /
         (s.p_link * std::pow(s.p_swap, depth) * s.p_postselect);
}

struct SimConfig {
  RepeaterParams params;
  int depth = -1;  // nesting depth to simulate; -1 means params.n
  std::uint64_t trials = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  bool include_source_prep = false;
  RestartPolicy policy = RestartPolicy::full_restart;
  std::optional<StageProbs> probs;  // override; defaults to stage_probs(params)
};

struct SimStats {
  double mean_s = 0.0;
  double stderr_s = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t trials = 0;
};

namespace detail {

struct TrialContext {
  const RepeaterParams& params;
  const StageProbs& probs;
  double herald_s;
  bool include_source_prep;
  RestartPolicy policy;
};

// Time to generate one elementary link.  Without source preparation every
// attempt costs the same herald time, so the geometric attempt count is
// enough; with it, each attempt additionally waits for both sources.
inline double link_time(const TrialContext& c, Engine& rng) {
  const double attempts = sample_geometric(rng, c.probs.p_link);
  if (!c.include_source_prep) return attempts * c.herald_s;
  double t = 0.0;
  for (double i = 0; i < attempts; ++i)
    t += c.herald_s + sample_link_prep_time(c.params, rng, c.policy);
  return t;
}

// Time to establish entanglement at nesting level k: both halves are built
// (the earlier waits for the later) and a failure discards both halves.
// The swap itself is local (no transmission loss); each attempt is clocked
// at one elementary heralding interval, with no level-dependent
// communication delay, so with unit probabilities a depth-n chain finishes
// in exactly (n + 1) heralding intervals.
inline double node_time(const TrialContext& c, int k, Engine& rng) {
  if (k == 0) return link_time(c, rng);
  double t = 0.0;
  for (;;) {
    t += std::max(node_time(c, k - 1, rng), node_time(c, k - 1, rng)) + c.herald_s;
    if (uniform01(rng) <= c.probs.p_swap) return t;
  }
}

// One full distribution: build the chain, then post-select; a post-selection
// failure costs the whole chain.
inline double trial_time(const TrialContext& c, int depth, Engine& rng) {
  double t = 0.0;
  for (;;) {
    t += node_time(c, depth, rng);
    if (uniform01(rng) <= c.probs.p_postselect) return t;
  }
}

}  // namespace detail

inline SimStats simulate_chain(const SimConfig& cfg) {
  validate(cfg.params);
  if (cfg.trials == 0) throw std::invalid_argument("trials must be positive");
  if (cfg.workers < 1) throw std::invalid_argument("workers must be positive");
  const int depth = cfg.depth < 0 ? cfg.params.n : cfg.depth;
  if (depth < 0 || depth > cfg.params.n)
    throw std::invalid_argument("depth must lie in [0, n]");
  const StageProbs probs = cfg.probs ? *cfg.probs : stage_probs(cfg.params);
  check(probs);

  const detail::TrialContext ctx{cfg.params, probs, cfg.params.herald_s(),
                                 cfg.include_source_prep, cfg.policy};
  std::vector<double> results(cfg.trials);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Engine rng = make_engine(cfg.seed, i);
      results[i] = detail::trial_time(ctx, depth, rng);
    }
  };
  const std::uint64_t workers =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(cfg.workers), cfg.trials);
  if (workers <= 1) {
    run_range(0, cfg.trials);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (cfg.trials + workers - 1) / workers;
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t begin = w * chunk;
      const std::uint64_t end = std::min(cfg.trials, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Sequential reduction in trial order keeps the statistics bit-identical
  // across worker counts.
  SimStats st;
  st.trials = cfg.trials;
  double sum = 0.0;
  for (double x : results) sum += x;
  st.mean_s = sum / static_cast<double>(cfg.trials);
  if (cfg.trials > 1) {
    double ss = 0.0;
    for (double x : results) ss += (x - st.mean_s) * (x - st.mean_s);
    st.stderr_s = std::sqrt(ss / (static_cast<double>(cfg.trials) - 1.0) /
                            static_cast<double>(cfg.trials));
  }
  return st;
}

}  // namespace qrepeater::sim
