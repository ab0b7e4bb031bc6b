#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/detail/blossom.hpp"
#include "seqbal/detail/hungarian.hpp"
#include "seqbal/error.hpp"

namespace seqbal {

/// A perfect matching and its total L2 cost. For bipartite results each pair
/// is (control index, treated index); for general pairings each pair is
/// (i, j) with i < j. `exact` is false only for the greedy fallback.
struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
  bool exact = true;
};

enum class Solver {
  automatic,  // coincident-point reduction, sorted path in 1-D, otherwise Hungarian
  hungarian,  // dense Hungarian on the full cost matrix, no reductions
};

namespace detail {

inline void check_groups(std::span<const Subject> control, std::span<const Subject> treated) {
  if (control.size() != treated.size()) {
    throw Error(ErrorCode::size_mismatch, "groups have " + std::to_string(control.size()) + " and " +
                                              std::to_string(treated.size()) + " subjects");
  }
  if (control.empty()) throw Error(ErrorCode::empty_group, "groups are empty");
  const auto& ref = control.front();
  auto same = [&](const Subject& s) { return s.p() == ref.p() && s.q() == ref.q(); };
  if (!std::all_of(control.begin(), control.end(), same) || !std::all_of(treated.begin(), treated.end(), same)) {
    throw Error(ErrorCode::space_mismatch, "subjects live in different spaces");
  }
}

inline double bipartite_cost(std::span<const Subject> a, std::span<const Subject> b,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double s = 0.0;
  for (auto [i, j] : pairs) s += std::sqrt(squared_distance(a[i], b[j]));
  return s;
}

inline Matching hungarian_on(std::span<const Subject> control, std::span<const Subject> treated,
                             std::span<const std::size_t> ci, std::span<const std::size_t> ti) {
  const std::size_t n = ci.size();
  Matching m;
  if (n == 0) return m;
  std::vector<double> cost(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      cost[r * n + c] = std::sqrt(squared_distance(control[ci[r]], treated[ti[c]]));
    }
  }
  const auto col = solve_assignment(cost, n);
  m.pairs.reserve(n);
  for (std::size_t r = 0; r < n; ++r) m.pairs.emplace_back(ci[r], ti[col[r]]);
  return m;
}

}  // namespace detail

/// Minimum-cost perfect bipartite matching between two equally sized groups.
inline Matching discrepancy(std::span<const Subject> control, std::span<const Subject> treated,
                            Solver solver = Solver::automatic) {
  detail::check_groups(control, treated);
  const std::size_t n = control.size();
  std::vector<std::size_t> ci(n), ti(n);
  std::iota(ci.begin(), ci.end(), 0);
  std::iota(ti.begin(), ti.end(), 0);

  Matching result;
  if (solver == Solver::hungarian) {
    result = detail::hungarian_on(control, treated, ci, ti);
    result.cost = detail::bipartite_cost(control, treated, result.pairs);
    return result;
  }

  auto by_coords = [](std::span<const Subject> g) {
    return [g](std::size_t x, std::size_t y) { return g[x] < g[y]; };
  };
  std::sort(ci.begin(), ci.end(), by_coords(control));
  std::sort(ti.begin(), ti.end(), by_coords(treated));

  if (control.front().dim() == 1) {
    for (std::size_t k = 0; k < n; ++k) result.pairs.emplace_back(ci[k], ti[k]);
    result.cost = detail::bipartite_cost(control, treated, result.pairs);
    return result;
  }

  // Coincident control/treated points can always be paired with each other in
  // some optimal matching (triangle inequality), so they are removed first.
  std::vector<std::size_t> rest_c, rest_t;
  std::size_t a = 0, b = 0;
  while (a < n && b < n) {
    const Subject& x = control[ci[a]];
    const Subject& y = treated[ti[b]];
    if (x == y) {
      result.pairs.emplace_back(ci[a++], ti[b++]);
    } else if (x < y) {
      rest_c.push_back(ci[a++]);
    } else {
      rest_t.push_back(ti[b++]);
    }
  }
  rest_c.insert(rest_c.end(), ci.begin() + static_cast<std::ptrdiff_t>(a), ci.end());
  rest_t.insert(rest_t.end(), ti.begin() + static_cast<std::ptrdiff_t>(b), ti.end());

  auto rest = detail::hungarian_on(control, treated, rest_c, rest_t);
  result.pairs.insert(result.pairs.end(), rest.pairs.begin(), rest.pairs.end());
  std::sort(result.pairs.begin(), result.pairs.end());
  result.cost = detail::bipartite_cost(control, treated, result.pairs);
  return result;
}

inline Matching discrepancy(const std::vector<Subject>& control, const std::vector<Subject>& treated,
                            Solver solver = Solver::automatic) {
  return discrepancy(std::span<const Subject>(control), std::span<const Subject>(treated), solver);
}

/// Exhaustive search over all n! bijections, n <= 8.
inline Matching discrepancy_bruteforce(std::span<const Subject> control, std::span<const Subject> treated) {
  detail::check_groups(control, treated);
  const std::size_t n = control.size();
  if (n > 8) throw Error(ErrorCode::too_large, "brute force is limited to 8 subjects per group");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_perm;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::sqrt(squared_distance(control[i], treated[perm[i]]));
    if (s < best) {
      best = s;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  Matching m;
  for (std::size_t i = 0; i < n; ++i) m.pairs.emplace_back(i, best_perm[i]);
  m.cost = best;
  return m;
}

inline Matching discrepancy_bruteforce(const std::vector<Subject>& control, const std::vector<Subject>& treated) {
  return discrepancy_bruteforce(std::span<const Subject>(control), std::span<const Subject>(treated));
}

struct PairingOptions {
  std::size_t max_nodes = 5000;
  bool greedy_fallback = false;  // above max_nodes, return an approximate greedy pairing instead of throwing
  std::size_t neighbours = 16;   // initial candidate edges per vertex
};

namespace detail {

inline double pairing_cost(std::span<const Subject> s, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double c = 0.0;
  for (auto [i, j] : pairs) c += std::sqrt(squared_distance(s[i], s[j]));
  return c;
}

inline void check_pairing_input(std::span<const Subject> s) {
  if (s.empty() || s.size() % 2 != 0) {
    throw Error(ErrorCode::odd_count, "pairing needs an even, nonzero number of subjects, got " +
                                          std::to_string(s.size()));
  }
  const auto& ref = s.front();
  for (const auto& x : s) {
    if (x.p() != ref.p() || x.q() != ref.q()) throw Error(ErrorCode::space_mismatch, "subjects live in different spaces");
  }
}

// Repeatedly joins the closest remaining pair. O(n^2 log n).
inline Matching greedy_pairing(std::span<const Subject> s) {
  const std::size_t n = s.size();
  std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) all.push_back({squared_distance(s[i], s[j]), {i, j}});
  }
  std::sort(all.begin(), all.end());
  std::vector<char> used(n, 0);
  Matching m;
  for (const auto& [d, e] : all) {
    if (!used[e.first] && !used[e.second]) {
      used[e.first] = used[e.second] = 1;
      m.pairs.push_back(e);
    }
  }
  m.cost = pairing_cost(s, m.pairs);
  m.exact = false;
  return m;
}

class PairingSolver {
 public:
  PairingSolver(std::span<const Subject> s, std::size_t neighbours) : s_(s), n_(s.size()) {
    const double diam = std::sqrt(static_cast<double>(s.front().dim()));
    scale_ = std::ldexp(1.0, 40) / std::max(diam, 1.0);
    big_ = static_cast<std::int64_t>(std::ceil(diam * scale_)) + 2;
    if (n_ <= 2 * neighbours + 2) {
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) add(i, j);
      }
    } else {
      seed_neighbours(neighbours);
    }
  }

  Matching solve() {
    while (true) {
      std::vector<WeightedEdge> edges;
      edges.reserve(cand_.size());
      for (auto [i, j] : cand_) edges.push_back({static_cast<int>(i), static_cast<int>(j), weight(i, j)});
      BlossomMatcher bm(static_cast<int>(n_), std::move(edges), true);
      const auto mate = bm.solve();

      bool perfect = true;
      for (std::size_t v = 0; v < n_; ++v) {
        if (mate[v] < 0) {
          perfect = false;
          for (std::size_t u = 0; u < n_; ++u) {
            if (u != v) add(u, v);
          }
        }
      }
      if (!perfect) continue;
      if (add_violations(bm)) continue;

      Matching m;
      for (std::size_t v = 0; v < n_; ++v) {
        if (static_cast<std::size_t>(mate[v]) > v) m.pairs.emplace_back(v, static_cast<std::size_t>(mate[v]));
      }
      m.cost = pairing_cost(s_, m.pairs);
      return m;
    }
  }

 private:
  std::span<const Subject> s_;
  std::size_t n_;
  double scale_ = 1.0;
  std::int64_t big_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> cand_;
  std::vector<std::uint64_t> seen_;

  // Even integer weights keep every dual update integral.
  std::int64_t weight(std::size_t i, std::size_t j) const {
    const auto d = static_cast<std::int64_t>(std::llround(std::sqrt(squared_distance(s_[i], s_[j])) * scale_));
    return 2 * (big_ - d);
  }

  void add(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    const std::size_t bit = i * n_ + j;
    if (seen_.empty()) seen_.assign((n_ * n_ + 63) / 64, 0);
    if (seen_[bit / 64] >> (bit % 64) & 1) return;
    seen_[bit / 64] |= std::uint64_t{1} << (bit % 64);
    cand_.emplace_back(i, j);
  }

  void seed_neighbours(std::size_t k) {
    std::vector<std::pair<double, std::size_t>> row(n_ - 1);
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (j != i) row[c++] = {squared_distance(s_[i], s_[j]), j};
      }
      std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
      for (std::size_t t = 0; t < k; ++t) add(i, row[t].second);
    }
  }

  // Adds every edge of the complete graph whose reduced cost is negative under
  // the current dual solution. Returns whether any was found.
  bool add_violations(const BlossomMatcher& bm) {
    const auto& dual = bm.duals();
    const auto& parent = bm.blossom_parent();
    // Blossom dual mass accumulated from each blossom up to its root.
    std::vector<std::int64_t> above(2 * n_, -1);
    auto mass = [&](auto&& self, int b) -> std::int64_t {
      if (b == -1) return 0;
      if (above[b] >= 0) return above[b];
      const std::int64_t own = b >= static_cast<int>(n_) ? dual[b] : 0;
      return above[b] = own + self(self, parent[b]);
    };
    auto depth = [&](int v) {
      int d = 0;
      while (parent[v] != -1) {
        v = parent[v];
        ++d;
      }
      return d;
    };
    std::vector<int> top(n_), dep(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      int b = static_cast<int>(v);
      while (parent[b] != -1) b = parent[b];
      top[v] = b;
      dep[v] = depth(static_cast<int>(v));
    }
    bool any = false;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        std::int64_t sl = dual[i] + dual[j] - 2 * weight(i, j);
        if (sl >= 0) continue;
        if (top[i] == top[j] && top[i] >= static_cast<int>(n_)) {
          int a = static_cast<int>(i), b = static_cast<int>(j);
          int da = dep[i], db = dep[j];
          while (da > db) { a = parent[a]; --da; }
          while (db > da) { b = parent[b]; --db; }
          while (a != b) { a = parent[a]; b = parent[b]; }
          sl += 2 * mass(mass, a);
        }
        if (sl < 0) {
          add(i, j);
          any = true;
        }
      }
    }
    return any;
  }
};

}  // namespace detail

/// Minimum-weight perfect matching on the complete graph over `subjects`.
/// Solved exactly by the blossom method on a sparse candidate graph, which is
/// grown until the dual solution certifies optimality on every edge.
inline Matching min_weight_pairing(std::span<const Subject> subjects, const PairingOptions& opt = {}) {
  detail::check_pairing_input(subjects);
  const std::size_t n = subjects.size();
  if (n > opt.max_nodes) {
    if (opt.greedy_fallback) return detail::greedy_pairing(subjects);
    throw Error(ErrorCode::too_large, std::to_string(n) + " subjects exceed the exact pairing limit of " +
                                          std::to_string(opt.max_nodes));
  }
  if (n == 2) {
    Matching m;
    m.pairs.emplace_back(0, 1);
    m.cost = detail::pairing_cost(subjects, m.pairs);
    return m;
  }
  detail::PairingSolver solver(subjects, opt.neighbours);
  return solver.solve();
}

inline Matching min_weight_pairing(const std::vector<Subject>& subjects, const PairingOptions& opt = {}) {
  return min_weight_pairing(std::span<const Subject>(subjects), opt);
}

/// Exhaustive search over all (n-1)!! pairings, n <= 10.
inline Matching pairing_bruteforce(std::span<const Subject> subjects) {
  detail::check_pairing_input(subjects);
  const std::size_t n = subjects.size();
  if (n > 10) throw Error(ErrorCode::too_large, "brute force pairing is limited to 10 subjects");
  std::vector<std::pair<std::size_t, std::size_t>> cur, best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<char> used(n, 0);
  auto rec = [&](auto&& self, double acc) -> void {
    std::size_t i = 0;
    while (i < n && used[i]) ++i;
    if (i == n) {
      if (acc < best_cost) {
        best_cost = acc;
        best = cur;
      }
      return;
    }
    used[i] = 1;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      cur.emplace_back(i, j);
      self(self, acc + std::sqrt(squared_distance(subjects[i], subjects[j])));
      cur.pop_back();
      used[j] = 0;
    }
    used[i] = 0;
  };
  rec(rec, 0.0);
  Matching m;
  m.pairs = best;
  m.cost = best_cost;
  return m;
}

inline Matching pairing_bruteforce(const std::vector<Subject>& subjects) {
  return pairing_bruteforce(std::span<const Subject>(subjects));
}

}  // namespace seqbal
