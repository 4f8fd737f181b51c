#pragma once
// Independent reference computations for the tests. Nothing here calls the
// library's energy, sampling or roofline code; only model accessors are used.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mc2a/model.hpp"

namespace oracle {

// Row-major offset with the first scope variable most significant, computed
// from dims alone.
inline std::size_t table_index(const mc2a::Factor& f, const std::vector<std::int32_t>& x) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < f.scope.size(); ++k) {
    idx = idx * static_cast<std::size_t>(f.dims[k]) + static_cast<std::size_t>(x[f.scope[k]]);
  }
  return idx;
}

inline double energy(const mc2a::GraphModel& m, const std::vector<std::int32_t>& x) {
  double e = 0.0;
  for (const auto& f : m.factors()) e += f.table[table_index(f, x)];
  return e;
}

// Calls fn(x) for every joint assignment (last RV fastest).
template <typename Fn>
void for_each_state(const mc2a::GraphModel& m, Fn&& fn) {
  const std::size_t n = m.num_rvs();
  std::vector<std::int32_t> x(n, 0);
  while (true) {
    fn(x);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++x[i] < m.cardinality(static_cast<mc2a::RvId>(i))) break;
      x[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

// Exact marginals of P(x) proportional to exp(-beta E(x)) by enumeration.
inline std::vector<std::vector<double>> marginals(const mc2a::GraphModel& m, double beta = 1.0) {
  std::vector<std::vector<double>> out;
  for (mc2a::RvId i = 0; i < m.num_rvs(); ++i) out.emplace_back(m.cardinality(i), 0.0);
  double emin = INFINITY;
  for_each_state(m, [&](const auto& x) { emin = std::min(emin, energy(m, x)); });
  double z = 0.0;
  for_each_state(m, [&](const auto& x) {
    const double w = std::exp(-beta * (energy(m, x) - emin));
    z += w;
    for (std::size_t i = 0; i < x.size(); ++i) out[i][static_cast<std::size_t>(x[i])] += w;
  });
  for (auto& row : out) {
    for (auto& v : row) v /= z;
  }
  return out;
}

inline double min_energy(const mc2a::GraphModel& m) {
  double best = INFINITY;
  for_each_state(m, [&](const auto& x) { best = std::min(best, energy(m, x)); });
  return best;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(logits[i] - top);
  for (auto& v : p) v /= z;
  return p;
}

inline double tv(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline double mean_marginal_tv(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += tv(a[i], b[i]);
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

inline double max_marginal_tv(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, tv(a[i], b[i]));
  return s;
}

// Cut value of a 0/1 partition.
inline double cut_value(const std::vector<mc2a::WeightedEdge>& edges, const std::vector<std::int32_t>& x) {
  double c = 0.0;
  for (const auto& e : edges) {
    if (x[e.u] != x[e.v]) c += e.w;
  }
  return c;
}

// Exhaustive maximum cut (n <= 24).
inline double max_cut_exhaustive(std::size_t n, const std::vector<mc2a::WeightedEdge>& edges) {
  double best = -INFINITY;
  std::vector<std::int32_t> x(n);
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::int32_t>((s >> i) & 1);
    best = std::max(best, cut_value(edges, x));
  }
  return best;
}

// Multi-start steepest-ascent 1-flip local search; a lower bound on the
// maximum cut. Starting points come from a splitmix64 sequence.
inline double max_cut_local_search(std::size_t n, const std::vector<mc2a::WeightedEdge>& edges, int restarts,
                                   std::uint64_t seed) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : edges) {
    adj[e.u].push_back({e.v, e.w});
    adj[e.v].push_back({e.u, e.w});
  }
  auto next = [&seed] {
    std::uint64_t z = (seed += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  double best = -INFINITY;
  std::vector<std::int32_t> x(n);
  for (int r = 0; r < restarts; ++r) {
    for (auto& v : x) v = static_cast<std::int32_t>(next() & 1);
    while (true) {
      std::size_t pick = n;
      double gain = 1e-12;
      for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        for (auto [j, w] : adj[i]) g += x[i] == x[j] ? w : -w;
        if (g > gain) {
          gain = g;
          pick = i;
        }
      }
      if (pick == n) break;
      x[pick] ^= 1;
    }
    best = std::max(best, cut_value(edges, x));
  }
  return best;
}

}  // namespace oracle
