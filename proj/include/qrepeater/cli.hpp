#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qrepeater/analytic.hpp"
#include "qrepeater/chain_sim.hpp"
#include "qrepeater/circuits.hpp"
#include "qrepeater/config.hpp"
#include "qrepeater/format.hpp"

namespace qrepeater::cli {

enum class Format { human, csv };

inline Format parse_format(const std::string& v) {
  if (v == "human") return Format::human;
  if (v == "csv") return Format::csv;
  throw std::invalid_argument("format must be human or csv, got '" + v + "'");
}

// Exit codes shared with the test suite.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitMismatch = 2;

// Reference direct-transmission link for the sweep: a 10 GHz single-photon
// source through standard 0.2 dB/km fiber.
inline constexpr double kDirectRateHz = 10.0e9;
inline constexpr double kDirectLossDbKm = 0.2;

// Agreement demanded between the brute-force circuits and the closed forms.
inline constexpr double kVerifyTol = 1e-9;

namespace detail {

inline std::string human_row(const std::string& name, const std::string& value) {
  std::string out = name;
  if (out.size() < 20) out.resize(20, ' ');
  return out + " " + value + "\n";
}

struct RowSink {
  Format format;
  std::ostream& out;
  void header(const std::string& csv_header) {
    if (format == Format::csv) out << csv_header << "\n";
  }
  void quantity(const std::string& name, double value) {
    if (format == Format::csv)
      out << name << "," << csv_number(value) << "\n";
    else
      out << human_row(name, human_number(value));
  }
};

}  // namespace detail

// --- rates -------------------------------------------------------------------

inline int cmd_rates(const Settings& s, Format format, std::ostream& out) {
  const RateBreakdown b = breakdown(validate(s.params), s.include_source_prep);
  detail::RowSink sink{format, out};
  sink.header("quantity,value");
  sink.quantity("t_charge_s", b.t_charge_s);
  sink.quantity("t_source_s", b.t_source_s);
  sink.quantity("p_source_ideal", b.p_source_ideal);
  sink.quantity("p_source", b.p_source);
  sink.quantity("c2", b.weights.c2);
  sink.quantity("c1", b.weights.c1);
  sink.quantity("c0", b.weights.c0);
  sink.quantity("eta_t", b.eta_t);
  sink.quantity("p_link", b.p_link);
  sink.quantity("p_swap", b.p_swap);
  sink.quantity("p_postselect", b.p_postselect);
  sink.quantity("t_total_s", b.t_total_s);
  sink.quantity("t_total_closed_s", b.t_total_closed_s);
  if (b.fidelity) {
    sink.quantity("fidelity", *b.fidelity);
    if (b.fidelity_clamped) sink.quantity("fidelity_clamped", 1.0);
  }
  return kExitOk;
}

// --- sweep -------------------------------------------------------------------

// Smallest mean distribution time over admissible nesting depths at total
// distance L, along with the chosen link count.
inline std::pair<double, int> best_repeater_time(const Settings& s, double L_km) {
  double best_t = 0.0;
  int best_links = 0;
  for (int n = 0; n <= 30 && (1LL << n) <= s.max_links; ++n) {
    RepeaterParams q = s.params;
    q.L_km = L_km;
    q.n = n;
    const double t = total_time_product(q, s.include_source_prep);
    if (best_links == 0 || t < best_t) {
      best_t = t;
      best_links = 1 << n;
    }
  }
  return {best_t, best_links};
}

inline int cmd_sweep(const Settings& s, double lmin_km, double lmax_km, double step_km,
                     Format format, std::ostream& out) {
  if (lmin_km <= 0.0) throw std::invalid_argument("lmin must be positive");
  if (lmax_km < lmin_km) throw std::invalid_argument("lmax must be at least lmin");
  if (step_km <= 0.0) throw std::invalid_argument("step must be positive");
  const long steps = std::lround(std::floor((lmax_km - lmin_km) / step_km + 1e-9));

  if (format == Format::csv) out << "distance_km,protocol,links,time_s\n";
  for (long k = 0; k <= steps; ++k) {
    const double L = lmin_km + static_cast<double>(k) * step_km;
    const double t_direct = direct_transmission_time(L, kDirectRateHz, kDirectLossDbKm);
    const auto [t_rep, links] = best_repeater_time(s, L);
    if (format == Format::csv) {
      out << csv_number(L) << ",direct,1," << csv_number(t_direct) << "\n";
      out << csv_number(L) << ",partial-readout," << links << "," << csv_number(t_rep)
          << "\n";
    } else {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%10s km  %-16s %5d links  %s s\n",
                    human_number(L).c_str(), "direct", 1, human_number(t_direct).c_str());
      out << buf;
      std::snprintf(buf, sizeof buf, "%10s km  %-16s %5d links  %s s\n",
                    human_number(L).c_str(), "partial-readout", links,
                    human_number(t_rep).c_str());
      out << buf;
    }
  }
  return kExitOk;
}

// --- verify ------------------------------------------------------------------

struct GridPoint {
  double alpha2 = 0.0;
  double eta = 0.0;
};

inline std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> g;
  for (double a2 : {0.1, 0.2, 0.5})
    for (double eta : {0.7, 0.9, 1.0}) g.push_back({a2, eta});
  return g;
}

// Grid file: one "alpha2 eta" pair per line, '#' starts a comment.
inline std::vector<GridPoint> load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open grid file: " + path);
  std::vector<GridPoint> g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double a2 = 0.0, eta = 0.0;
    if (!(row >> a2)) continue;  // blank or comment-only line
    std::string extra;
    if (!(row >> eta) || (row >> extra))
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'alpha2 eta'");
    if (a2 <= 0.0 || a2 >= 1.0 || eta <= 0.0 || eta > 1.0)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": alpha2 must lie in (0,1) and eta in (0,1]");
    g.push_back({a2, eta});
  }
  if (g.empty()) throw std::invalid_argument("grid file holds no points: " + path);
  return g;
}

// Compares the brute-force circuits against every closed form at each grid
// point.  The fiber transmission for the link-generation check is held at a
// fixed representative value; it only scales the photon loss, so one value
// exercises the formula.
inline int cmd_verify(const Settings& s, const std::vector<GridPoint>& grid, bool corrupt,
                      Format format, std::ostream& out) {
  const double eta_t = s.params.eta_t();

  if (format == Format::csv)
    out << "alpha2,eta,dev_weights,dev_p_source,dev_p_gen,dev_p_swap,dev_swap_weights,"
           "residual,status\n";
  bool all_pass = true;
  bool first = true;
  for (const GridPoint& g : grid) {
    const StateWeights w = source_weights(g.alpha2, g.eta);

    fock::CircuitResult src = fock::source_circuit(g.alpha2, g.eta);
    if (corrupt && first) src.weights.c2 += 1e-6;  // forced discrepancy, for testing
    first = false;
    const double dev_weights =
        std::max({std::abs(src.weights.c2 - w.c2), std::abs(src.weights.c1 - w.c1),
                  std::abs(src.weights.c0 - w.c0), src.weights.c1_spread});
    const double dev_p_source =
        std::abs(src.p_success - p_source_detected(g.alpha2, g.eta));

    const fock::CircuitResult gen = fock::swap_circuit(w, g.eta, eta_t);
    const double dev_p_gen = std::abs(gen.p_success - p_link(w, g.eta, eta_t));

    const fock::CircuitResult swp = fock::swap_circuit(w, g.eta, 1.0);
    const double dev_p_swap = std::abs(swp.p_success - p_swap(w, g.eta));
    const StateWeights wm = swap_map(w);
    const double dev_swap_weights =
        std::max({std::abs(swp.weights.c2 - wm.c2), std::abs(swp.weights.c1 - wm.c1),
                  std::abs(swp.weights.c0 - wm.c0), swp.weights.c1_spread});

    const double residual = std::max(src.weights.residual, swp.weights.residual);
    const bool pass = dev_weights <= kVerifyTol && dev_p_source <= kVerifyTol &&
                      dev_p_gen <= kVerifyTol && dev_p_swap <= kVerifyTol &&
                      dev_swap_weights <= kVerifyTol && std::abs(residual) <= kVerifyTol;
    all_pass = all_pass && pass;

    if (format == Format::csv) {
      out << csv_number(g.alpha2) << "," << csv_number(g.eta) << ","
          << csv_number(dev_weights) << "," << csv_number(dev_p_source) << ","
          << csv_number(dev_p_gen) << "," << csv_number(dev_p_swap) << ","
          << csv_number(dev_swap_weights) << "," << csv_number(residual) << ","
          << (pass ? "pass" : "fail") << "\n";
    } else {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "alpha2 %-4s eta %-4s  dev %.2e %.2e %.2e %.2e %.2e  res %.2e  %s\n",
                    human_number(g.alpha2).c_str(), human_number(g.eta).c_str(),
                    dev_weights, dev_p_source, dev_p_gen, dev_p_swap, dev_swap_weights,
                    residual, pass ? "pass" : "FAIL");
      out << buf;
    }
  }
  if (format == Format::human)
    out << (all_pass ? "verification passed\n" : "verification FAILED\n");
  return all_pass ? kExitOk : kExitMismatch;
}

// --- simulate ----------------------------------------------------------------

inline int cmd_simulate(const Settings& s, int workers, Format format, std::ostream& out) {
  const RepeaterParams params = validate(s.params);
  const sim::StageProbs probs = sim::stage_probs(params);
  const double cycle =
      params.herald_s() + (s.include_source_prep ? source_prep_time(params) : 0.0);

  if (format == Format::csv)
    out << "n,mean_s,stderr_s,eq3_s,ratio\n";
  else
    out << "  n          mean_s        stderr_s           eq3_s     ratio\n";
  for (int m = 0; m <= params.n; ++m) {
    sim::SimConfig cfg;
    cfg.params = params;
    cfg.depth = m;
    cfg.trials = s.trials;
    cfg.seed = s.seed;
    cfg.workers = workers;
    cfg.include_source_prep = s.include_source_prep;
    cfg.policy = s.policy;
    const sim::SimStats st = sim::simulate_chain(cfg);
    const double eq3 = sim::product_time(cycle, m, probs);
    const double ratio = st.mean_s / eq3;
    const std::string err =
        st.trials > 1 ? csv_number(st.stderr_s) : std::string("na");
    if (format == Format::csv) {
      out << m << "," << csv_number(st.mean_s) << "," << err << "," << csv_number(eq3)
          << "," << csv_number(ratio) << "\n";
    } else {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%3d %15s %15s %15s %9s\n", m,
                    human_number(st.mean_s).c_str(),
                    st.trials > 1 ? human_number(st.stderr_s).c_str() : "na",
                    human_number(eq3).c_str(), human_number(ratio).c_str());
      out << buf;
    }
  }
  return kExitOk;
}

// --- optimize ----------------------------------------------------------------

inline int cmd_optimize(const Settings& s, double f_min, Format format, std::ostream& out) {
  validate(s.params);
  const OptimizeResult r = optimize_alpha(s.params, f_min, s.include_source_prep);
  detail::RowSink sink{format, out};
  sink.header("quantity,value");
  sink.quantity("alpha2_opt", r.alpha2);
  sink.quantity("t_total_s", r.report.t_total_s);
  sink.quantity("p_link", r.report.p_link);
  sink.quantity("p_swap", r.report.p_swap);
  sink.quantity("p_postselect", r.report.p_postselect);
  if (r.report.fidelity) sink.quantity("fidelity", *r.report.fidelity);
  return kExitOk;
}

}  // namespace qrepeater::cli
