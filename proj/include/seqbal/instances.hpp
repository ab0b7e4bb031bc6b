#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/error.hpp"
#include "seqbal/rng.hpp"

namespace seqbal {

namespace detail {
inline void require_even(std::size_t T) {
  if (T < 2 || T % 2 != 0) throw Error(ErrorCode::odd_horizon, "T=" + std::to_string(T) + " must be even and >= 2");
}
}  // namespace detail

/// T/2 zeros followed by T/2 ones.
inline ArrivalSequence gen_halfzero_halfone(std::size_t T) {
  detail::require_even(T);
  ArrivalSequence seq{CovariateSpace::continuous(1), {}};
  seq.subjects.reserve(T);
  for (std::size_t t = 0; t < T; ++t) seq.subjects.push_back(Subject::scalar(t < T / 2 ? 0.0 : 1.0));
  return seq;
}

/// Integer k with k^p == T, if any.
inline std::optional<std::size_t> integer_root(std::size_t T, std::size_t p) {
  if (p == 0) return std::nullopt;
  const auto guess = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(T), 1.0 / static_cast<double>(p))));
  for (std::size_t k = guess > 0 ? guess - 1 : 0; k <= guess + 1; ++k) {
    unsigned __int128 v = 1;
    for (std::size_t i = 0; i < p && v <= T; ++i) v *= k;
    if (v == T) return k;
  }
  return std::nullopt;
}

/// One subject at the center of each of the T = k^p equal subcubes,
/// lexicographic order unless a shuffle seed is given.
inline ArrivalSequence gen_grid(std::size_t T, std::size_t p, std::optional<std::uint64_t> shuffle_seed = std::nullopt) {
  const auto k = integer_root(T, p);
  if (!k || *k == 0) {
    throw Error(ErrorCode::not_a_power, "T=" + std::to_string(T) + " is not a perfect " + std::to_string(p) + "-th power");
  }
  ArrivalSequence seq{CovariateSpace::continuous(p), {}};
  seq.subjects.reserve(T);
  std::vector<std::size_t> digit(p, 0);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> c(p);
    for (std::size_t i = 0; i < p; ++i) c[i] = (static_cast<double>(digit[i]) + 0.5) / static_cast<double>(*k);
    seq.subjects.emplace_back(std::move(c));
    for (std::size_t i = p; i-- > 0;) {
      if (++digit[i] < *k) break;
      digit[i] = 0;
    }
  }
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    for (std::size_t i = T; i > 1; --i) std::swap(seq.subjects[i - 1], seq.subjects[rng.below(i)]);
  }
  return seq;
}

inline constexpr double right_end_epsilon = 1e-9;

/// K equal cells of [0,1], each receiving T/K subjects that alternate between
/// the cell's left end and just below its right end; cells are visited in
/// round-robin order.
inline ArrivalSequence gen_alternating_lb(std::size_t T, std::size_t K) {
  detail::require_even(T);
  if (K == 0 || T % (2 * K) != 0) {
    throw Error(ErrorCode::indivisible, "T=" + std::to_string(T) + " is not divisible by 2K=" + std::to_string(2 * K));
  }
  ArrivalSequence seq{CovariateSpace::continuous(1), {}};
  seq.subjects.reserve(T);
  const double Kd = static_cast<double>(K);
  for (std::size_t round = 0; round < T / K; ++round) {
    for (std::size_t k = 0; k < K; ++k) {
      const double x = round % 2 == 0 ? static_cast<double>(k) / Kd
                                      : static_cast<double>(k + 1) / Kd - right_end_epsilon;
      seq.subjects.push_back(Subject::scalar(x));
    }
  }
  return seq;
}

/// Centers v_1..v_N in [0,1]^p; each cluster is the L-infinity box of
/// diameter T^-gamma around its center.
struct ClusterSpec {
  std::vector<std::vector<double>> centers;
  double gamma = 1.0;

  std::size_t p() const { return centers.empty() ? 0 : centers.front().size(); }
};

inline void validate_cluster_spec(const ClusterSpec& spec) {
  if (spec.centers.empty()) throw Error(ErrorCode::bad_config, "cluster spec needs at least one center");
  if (!(spec.gamma > 0.0)) throw Error(ErrorCode::bad_gamma, "cluster gamma must be positive");
  const std::size_t p = spec.p();
  if (p == 0) throw Error(ErrorCode::invalid_space, "cluster centers need at least one coordinate");
  for (const auto& v : spec.centers) {
    if (v.size() != p) throw Error(ErrorCode::space_mismatch, "cluster centers differ in dimension");
    for (double c : v) {
      if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::out_of_range, "cluster center outside [0,1]");
    }
  }
}

/// N centers drawn uniformly from [0,1]^p.
inline ClusterSpec random_cluster_spec(std::size_t N, std::size_t p, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  ClusterSpec spec;
  spec.gamma = gamma;
  spec.centers.assign(N, std::vector<double>(p));
  for (auto& v : spec.centers) {
    for (auto& c : v) c = rng.uniform();
  }
  validate_cluster_spec(spec);
  return spec;
}

/// Each subject picks a cluster uniformly, then a uniform point of its box
/// clipped to [0,1]^p.
inline ArrivalSequence gen_clustered(std::size_t T, const ClusterSpec& spec, std::uint64_t seed) {
  detail::require_even(T);
  validate_cluster_spec(spec);
  const std::size_t p = spec.p();
  const double diam = std::pow(static_cast<double>(T), -spec.gamma);
  Rng rng(seed);
  ArrivalSequence seq{CovariateSpace::continuous(p), {}};
  seq.subjects.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& v = spec.centers[rng.below(spec.centers.size())];
    std::vector<double> c(p);
    for (std::size_t i = 0; i < p; ++i) c[i] = std::clamp(v[i] + (rng.uniform() - 0.5) * diam, 0.0, 1.0);
    seq.subjects.emplace_back(std::move(c));
  }
  return seq;
}

/// i.i.d. subjects: continuous coordinates uniform on [0,1], discrete
/// coordinates uniform over their supports.
inline ArrivalSequence gen_discrete_uniform(std::size_t T, const CovariateSpace& space, std::uint64_t seed) {
  detail::require_even(T);
  Rng rng(seed);
  ArrivalSequence seq{space, {}};
  seq.subjects.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> c(space.p()), d(space.q());
    for (auto& x : c) x = rng.uniform();
    for (std::size_t i = 0; i < space.q(); ++i) d[i] = space.support(i)[rng.below(space.support(i).size())];
    seq.subjects.emplace_back(std::move(c), d);
  }
  return seq;
}

inline ArrivalSequence gen_uniform(std::size_t T, std::size_t p, std::uint64_t seed) {
  return gen_discrete_uniform(T, CovariateSpace::continuous(p), seed);
}

}  // namespace seqbal
