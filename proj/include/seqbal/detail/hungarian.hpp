#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace seqbal::detail {

// Dense assignment with row/column potentials (shortest augmenting paths).
// `cost` is row-major n x n. Returns col_of_row.
inline std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<double> u(n, 0.0), v(n, inf), dist(n);
  std::vector<std::size_t> row_of(n, none), col_of(n, none), pred(n), finalized;
  std::vector<char> done(n);

  // Column then row reduction give feasible potentials; tight edges to free
  // columns seed the matching so only the remaining rows need a search.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[j] = std::min(v[j], cost[i * n + j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = cost.data() + i * n;
    double best = inf;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = row[j] - v[j];
      if (r < best || (r == best && row_of[j] == none)) {
        best = r;
        arg = j;
      }
    }
    u[i] = best;
    if (row_of[arg] == none) {
      row_of[arg] = i;
      col_of[i] = arg;
    }
  }

  for (std::size_t s = 0; s < n; ++s) {
    if (col_of[s] != none) continue;
    // Dijkstra over columns; potentials are settled once a free column is hit.
    const double* row = cost.data() + s * n;
    std::size_t next = none;
    double best = inf;
    for (std::size_t j = 0; j < n; ++j) {
      done[j] = 0;
      pred[j] = s;
      dist[j] = row[j] - u[s] - v[j];
      if (dist[j] < best) {
        best = dist[j];
        next = j;
      }
    }
    finalized.clear();
    std::size_t free_col;
    for (;;) {
      const std::size_t j0 = next;
      done[j0] = 1;
      finalized.push_back(j0);
      if (row_of[j0] == none) {
        free_col = j0;
        break;
      }
      const std::size_t i = row_of[j0];
      const double* ri = cost.data() + i * n;
      const double base = dist[j0] - u[i];
      best = inf;
      for (std::size_t j = 0; j < n; ++j) {
        if (done[j]) continue;
        const double d = base + ri[j] - v[j];
        if (d < dist[j]) {
          dist[j] = d;
          pred[j] = i;
        }
        if (dist[j] < best) {
          best = dist[j];
          next = j;
        }
      }
    }
    const double D = dist[free_col];
    for (auto j : finalized) v[j] += dist[j] - D;
    for (std::size_t j = free_col;;) {
      const std::size_t i = pred[j];
      const std::size_t prev = col_of[i];
      row_of[j] = i;
      col_of[i] = j;
      if (i == s) break;
      j = prev;
    }
    for (auto j : finalized) {
      const std::size_t i = row_of[j];
      u[i] = cost[i * n + j] - v[j];
    }
  }
  return col_of;
}

}  // namespace seqbal::detail
