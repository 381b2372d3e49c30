#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Small brute-force Fock-space simulator for passive linear optics plus
// loss, used as an independent oracle for the closed-form state weights and
// heralding probabilities.  States are sparse maps from per-mode occupation
// vectors to complex amplitudes; mixedness from photon loss is tracked as an
// ensemble of pure branches labelled by how many photons each lossy channel
// swallowed (branches with different loss records are orthogonal once the
// environment is traced out, while terms inside one branch stay coherent).

namespace qrepeater::fock {

using Occupation = std::vector<int>;
using Amplitude = std::complex<double>;

inline constexpr int kMaxOccupation = 8;
inline constexpr double kAmpEps = 1e-15;

namespace detail {

inline double factorial(int n) {
  static const std::array<double, kMaxOccupation + 1> table = [] {
    std::array<double, kMaxOccupation + 1> t{};
    t[0] = 1.0;
    for (int i = 1; i <= kMaxOccupation; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  if (n < 0 || n > kMaxOccupation)
    throw std::overflow_error("occupation " + std::to_string(n) + " exceeds cutoff");
  return table[static_cast<size_t>(n)];
}

inline double binom(int n, int k) {
  return factorial(n) / (factorial(k) * factorial(n - k));
}

}  // namespace detail

struct FockState {
  std::map<Occupation, Amplitude> amps;
};

inline FockState basis_state(const Occupation& occ) {
  FockState s;
  s.amps[occ] = 1.0;
  return s;
}

inline double norm2(const FockState& s) {
  double n = 0.0;
  for (const auto& [occ, a] : s.amps) n += std::norm(a);
  return n;
}

inline void prune(FockState& s, double eps = kAmpEps) {
  for (auto it = s.amps.begin(); it != s.amps.end();) {
    if (std::abs(it->second) < eps)
      it = s.amps.erase(it);
    else
      ++it;
  }
}

inline void scale(FockState& s, double f) {
  for (auto& [occ, a] : s.amps) a *= f;
}

inline Amplitude amplitude(const FockState& s, const Occupation& occ) {
  auto it = s.amps.find(occ);
  return it == s.amps.end() ? Amplitude{0.0} : it->second;
}

// In-place linear map on the creation operators of two modes:
//   old_m1^dag -> U[0][0] new_m1^dag + U[1][0] new_m2^dag
//   old_m2^dag -> U[0][1] new_m1^dag + U[1][1] new_m2^dag
// (columns of U are the old operators expressed in the new modes, which
// must be the columns of a real orthogonal matrix for a physical element).
inline void apply_pair_map(FockState& s, int m1, int m2,
                           const std::array<std::array<double, 2>, 2>& U) {
  std::map<Occupation, Amplitude> out;
  for (const auto& [occ, a] : s.amps) {
    const int n1 = occ[static_cast<size_t>(m1)];
    const int n2 = occ[static_cast<size_t>(m2)];
    for (int j = 0; j <= n1; ++j) {
      for (int k = 0; k <= n2; ++k) {
        const int p = j + k;
        const int q = n1 + n2 - p;
        const double coeff = detail::binom(n1, j) * detail::binom(n2, k) *
                             std::pow(U[0][0], j) * std::pow(U[1][0], n1 - j) *
                             std::pow(U[0][1], k) * std::pow(U[1][1], n2 - k) *
                             std::sqrt(detail::factorial(p) * detail::factorial(q) /
                                       (detail::factorial(n1) * detail::factorial(n2)));
        if (coeff == 0.0) continue;
        Occupation o = occ;
        o[static_cast<size_t>(m1)] = p;
        o[static_cast<size_t>(m2)] = q;
        out[o] += a * coeff;
      }
    }
  }
  s.amps = std::move(out);
  prune(s);
}

struct Branch {
  double weight = 0.0;  // probability weight; branch state is normalized
  FockState psi;
};

using Ensemble = std::vector<Branch>;

inline Ensemble pure_ensemble(FockState psi) {
  const double n2 = norm2(psi);
  if (!(n2 > 0.0)) throw std::invalid_argument("cannot form ensemble from null state");
  scale(psi, 1.0 / std::sqrt(n2));
  return {Branch{1.0, std::move(psi)}};
}

inline double total_weight(const Ensemble& e) {
  double w = 0.0;
  for (const auto& b : e) w += b.weight;
  return w;
}

// Photon loss with transmission eta on one mode of one pure branch.  The
// output branches are labelled by the number k of photons handed to the
// environment; terms of equal k stay coherent.
inline std::vector<Branch> loss_branches(const Branch& in, int mode, double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::domain_error("loss transmission must lie in [0, 1]");
  int n_max = 0;
  for (const auto& [occ, a] : in.psi.amps)
    n_max = std::max(n_max, occ[static_cast<size_t>(mode)]);
  std::vector<Branch> out;
  for (int k = 0; k <= n_max; ++k) {
    FockState psi_k;
    for (const auto& [occ, a] : in.psi.amps) {
      const int n = occ[static_cast<size_t>(mode)];
      if (n < k) continue;
      const double f = std::sqrt(detail::binom(n, k) * std::pow(eta, n - k) *
                                 std::pow(1.0 - eta, k));
      if (f == 0.0) continue;
      Occupation o = occ;
      o[static_cast<size_t>(mode)] = n - k;
      psi_k.amps[o] += a * f;
    }
    prune(psi_k);
    const double w = norm2(psi_k);
    if (w < kAmpEps) continue;
    scale(psi_k, 1.0 / std::sqrt(w));
    out.push_back(Branch{in.weight * w, std::move(psi_k)});
  }
  return out;
}

inline void apply_loss(Ensemble& e, int mode, double eta) {
  Ensemble out;
  for (const auto& b : e) {
    auto split = loss_branches(b, mode, eta);
    out.insert(out.end(), std::make_move_iterator(split.begin()),
               std::make_move_iterator(split.end()));
  }
  e = std::move(out);
}

inline void apply_pair_map(Ensemble& e, int m1, int m2,
                           const std::array<std::array<double, 2>, 2>& U) {
  for (auto& b : e) apply_pair_map(b.psi, m1, m2, U);
}

// (-1)^n phase on one mode, the Pauli-Z analogue for a dual-rail spin pair.
inline void apply_phase_flip(Ensemble& e, int mode) {
  for (auto& b : e)
    for (auto& [occ, a] : b.psi.amps)
      if (occ[static_cast<size_t>(mode)] % 2 != 0) a = -a;
}

// Exchanges the occupations of two modes, the Pauli-X analogue for a
// dual-rail spin pair.
inline void swap_mode_occupations(Ensemble& e, int m1, int m2) {
  for (auto& b : e) {
    std::map<Occupation, Amplitude> out;
    for (const auto& [occ, a] : b.psi.amps) {
      Occupation o = occ;
      std::swap(o[static_cast<size_t>(m1)], o[static_cast<size_t>(m2)]);
      out[o] += a;
    }
    b.psi.amps = std::move(out);
  }
}

struct Detection {
  double probability = 0.0;
  Ensemble post;  // conditioned state; measured modes are left at zero occupation
};

// Projects every branch onto exact photon counts on the given modes (an
// ideal number-resolving detection) and conditions the ensemble on that
// outcome.  The measured modes are reset to zero in the survivors.
inline Detection detect_exact(const Ensemble& e,
                              const std::vector<std::pair<int, int>>& mode_counts) {
  Detection d;
  for (const auto& b : e) {
    FockState kept;
    for (const auto& [occ, a] : b.psi.amps) {
      bool match = true;
      for (const auto& [m, c] : mode_counts) {
        if (occ[static_cast<size_t>(m)] != c) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      Occupation o = occ;
      for (const auto& [m, c] : mode_counts) o[static_cast<size_t>(m)] = 0;
      kept.amps[o] += a;
    }
    prune(kept);
    const double w = norm2(kept);
    if (w < kAmpEps) continue;
    scale(kept, 1.0 / std::sqrt(w));
    d.post.push_back(Branch{b.weight * w, std::move(kept)});
    d.probability += b.weight * w;
  }
  if (d.probability > 0.0)
    for (auto& b : d.post) b.weight /= d.probability;
  return d;
}

// Decomposition of a conditioned ensemble over four retained modes
// (h1, v1, h2, v2) into the entangled two-photon component
// phi = (|1,0,1,0> + |0,1,0,1>)/sqrt(2), the four single-photon terms and
// vacuum.  c1 is the mean of the four single weights and c1_spread their
// largest deviation from it; residual is whatever probability the five
// projectors miss.  All other modes must be empty.
struct ExtractedWeights {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
  double residual = 0.0;
  double c1_spread = 0.0;
};

inline ExtractedWeights extract_weights(const Ensemble& e, int num_modes,
                                        const std::array<int, 4>& kept_modes) {
  auto full_occ = [&](const std::array<int, 4>& counts) {
    Occupation o(static_cast<size_t>(num_modes), 0);
    for (int i = 0; i < 4; ++i) o[static_cast<size_t>(kept_modes[static_cast<size_t>(i)])] = counts[static_cast<size_t>(i)];
    return o;
  };
  const Occupation occ_hh = full_occ({1, 0, 1, 0});
  const Occupation occ_vv = full_occ({0, 1, 0, 1});
  const std::array<Occupation, 4> singles = {full_occ({1, 0, 0, 0}), full_occ({0, 1, 0, 0}),
                                             full_occ({0, 0, 1, 0}), full_occ({0, 0, 0, 1})};
  const Occupation vac(static_cast<size_t>(num_modes), 0);

  ExtractedWeights w;
  std::array<double, 4> q{};
  double total = 0.0;
  for (const auto& b : e) {
    total += b.weight;
    const Amplitude phi =
        (amplitude(b.psi, occ_hh) + amplitude(b.psi, occ_vv)) / std::sqrt(2.0);
    w.c2 += b.weight * std::norm(phi);
    for (int i = 0; i < 4; ++i)
      q[static_cast<size_t>(i)] += b.weight * std::norm(amplitude(b.psi, singles[static_cast<size_t>(i)]));
    w.c0 += b.weight * std::norm(amplitude(b.psi, vac));
  }
  w.c1 = (q[0] + q[1] + q[2] + q[3]) / 4.0;
  for (double qi : q) w.c1_spread = std::max(w.c1_spread, std::abs(qi - w.c1));
  w.residual = total - w.c2 - (q[0] + q[1] + q[2] + q[3]) - w.c0;
  return w;
}

}  // namespace qrepeater::fock
