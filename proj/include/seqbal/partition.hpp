#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/error.hpp"

namespace seqbal {

enum class PartitionKind { uniform_1d, grid, natural_discrete, mixed, clustered, single };

inline std::string_view to_string(PartitionKind k) {
  switch (k) {
    case PartitionKind::uniform_1d: return "uniform1d";
    case PartitionKind::grid: return "grid";
    case PartitionKind::natural_discrete: return "natural";
    case PartitionKind::mixed: return "mixed";
    case PartitionKind::clustered: return "clustered";
    case PartitionKind::single: return "single";
  }
  return "unknown";
}

/// Discrete support indices first, then per-dimension interval indices.
using CellKey = std::vector<std::int64_t>;

/// ceil(target), except that values within 1e-12 (relative) of an integer are
/// taken as that integer so exact powers such as 10^0.5 * 10^0.5 are not
/// pushed up by rounding noise.
inline std::int64_t cell_count(double target) {
  const double r = std::round(target);
  if (std::abs(target - r) <= 1e-12 * std::max(1.0, std::abs(target))) return std::max<std::int64_t>(1, static_cast<std::int64_t>(r));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(target)));
}

/// Index of the half-open cell [j/K, (j+1)/K) holding x, the last cell closed at 1.
inline std::int64_t interval_index(double x, std::int64_t K) {
  const double Kd = static_cast<double>(K);
  auto j = static_cast<std::int64_t>(std::floor(x * Kd));
  j = std::clamp<std::int64_t>(j, 0, K - 1);
  if (j > 0 && x < static_cast<double>(j) / Kd) --j;
  if (j < K - 1 && x >= static_cast<double>(j + 1) / Kd) ++j;
  return j;
}

/// A pigeonhole partition of a covariate space: the product of the natural
/// discrete supports with K equal intervals on every continuous dimension.
class Partition {
 public:
  Partition(PartitionKind kind, CovariateSpace space, std::int64_t intervals)
      : kind_(kind), space_(std::move(space)), K_(intervals) {
    if (kind_ == PartitionKind::single) return;
    for (const auto& s : space_.supports()) radix_.push_back(static_cast<std::uint64_t>(s.size()));
    for (std::size_t i = 0; i < space_.p(); ++i) radix_.push_back(static_cast<std::uint64_t>(K_));
    long double total = 1;
    for (auto r : radix_) total *= static_cast<long double>(r);
    if (total > 1e18L) throw Error(ErrorCode::too_large, "partition has more than 1e18 cells");
  }

  PartitionKind kind() const noexcept { return kind_; }
  const CovariateSpace& space() const noexcept { return space_; }
  /// Intervals per continuous dimension (1 when there is none).
  std::int64_t intervals() const noexcept { return K_; }
  double width() const noexcept { return 1.0 / static_cast<double>(K_); }

  std::uint64_t cells() const noexcept {
    std::uint64_t total = 1;
    for (auto r : radix_) total *= r;
    return total;
  }

  CellKey key(const Subject& x) const {
    check(x);
    CellKey key;
    key.reserve(radix_.size());
    if (kind_ == PartitionKind::single) return key;
    const auto d = x.discrete();
    for (std::size_t i = 0; i < d.size(); ++i) key.push_back(space_.support_index(i, d[i]));
    for (double c : x.continuous()) key.push_back(interval_index(c, K_));
    return key;
  }

  /// Mixed-radix flattening of key(x); unique per cell.
  std::uint64_t index(const Subject& x) const {
    check(x);
    if (kind_ == PartitionKind::single) return 0;
    std::uint64_t idx = 0;
    std::size_t r = 0;
    const auto d = x.discrete();
    for (std::size_t i = 0; i < d.size(); ++i, ++r) {
      idx = idx * radix_[r] + static_cast<std::uint64_t>(space_.support_index(i, d[i]));
    }
    for (double c : x.continuous()) {
      idx = idx * radix_[r++] + static_cast<std::uint64_t>(interval_index(c, K_));
    }
    return idx;
  }

 private:
  PartitionKind kind_;
  CovariateSpace space_;
  std::int64_t K_;
  std::vector<std::uint64_t> radix_;

  void check(const Subject& x) const {
    if (x.p() != space_.p() || x.q() != space_.q()) {
      throw Error(ErrorCode::space_mismatch, "subject does not belong to the partitioned space");
    }
    const auto d = x.discrete();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (space_.support_index(i, d[i]) < 0) throw Error(ErrorCode::unknown_support, "discrete value not in support");
    }
  }
};

namespace detail {

inline void check_horizon(std::size_t T) {
  if (T < 2 || T % 2 != 0) throw Error(ErrorCode::odd_horizon, "T=" + std::to_string(T) + " must be even and >= 2");
}

inline std::int64_t grid_intervals(std::size_t T, std::size_t p, double phi, double c) {
  if (p == 0) throw Error(ErrorCode::invalid_space, "grid needs at least one continuous dimension");
  if (!(phi > 0.0 && phi <= 1.0)) throw Error(ErrorCode::bad_phi, "phi must lie in (0,1]");
  if (!(c > 1.0) || !std::isfinite(c)) throw Error(ErrorCode::bad_c, "c must exceed 1");
  return cell_count(std::pow(static_cast<double>(T), phi) / std::pow(c, 1.0 / static_cast<double>(p)));
}

}  // namespace detail

/// K = ceil(T^eta) equal cells on [0,1].
inline Partition build_uniform_1d(std::size_t T, double eta) {
  detail::check_horizon(T);
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::bad_eta, "eta must lie in (0,1)");
  return Partition(PartitionKind::uniform_1d, CovariateSpace::continuous(1),
                   cell_count(std::pow(static_cast<double>(T), eta)));
}

/// K = ceil(T^phi / c^(1/p)) equal cells per dimension of [0,1]^p.
inline Partition build_grid(std::size_t T, std::size_t p, std::optional<double> phi = std::nullopt, double c = 2.0) {
  detail::check_horizon(T);
  const double f = phi.value_or(1.0 / static_cast<double>(p == 0 ? 1 : p));
  return Partition(PartitionKind::grid, CovariateSpace::continuous(p), detail::grid_intervals(T, p, f, c));
}

/// One cell per discrete support tuple.
inline Partition build_natural_discrete(const CovariateSpace& space) {
  if (space.p() > 0) throw Error(ErrorCode::has_continuous, "natural pigeonholes need an all-discrete space");
  return Partition(PartitionKind::natural_discrete, space, 1);
}

/// Discrete supports times a grid on the continuous part. With a single
/// continuous dimension the grid is the uniform T^(1/2) split and phi, c are
/// not used; with no discrete dimension this is build_grid.
inline Partition build_mixed(const CovariateSpace& space, std::size_t T, std::optional<double> phi = std::nullopt,
                             double c = 2.0) {
  detail::check_horizon(T);
  if (space.p() == 0) return build_natural_discrete(space);
  if (space.q() == 0) return build_grid(T, space.p(), phi, c);
  std::int64_t K;
  if (space.p() == 1) {
    K = cell_count(std::sqrt(static_cast<double>(T)));
  } else {
    K = detail::grid_intervals(T, space.p(), phi.value_or(1.0 / static_cast<double>(space.p())), c);
  }
  return Partition(PartitionKind::mixed, space, K);
}

/// Grid of width c^zeta T^-zeta with zeta = 1/p + (p-1) gamma_lb / p.
inline Partition build_clustered(std::size_t T, std::size_t p, double gamma_lb, double c = 2.0) {
  detail::check_horizon(T);
  if (p == 0) throw Error(ErrorCode::invalid_space, "clustered grid needs at least one continuous dimension");
  if (!(gamma_lb > 0.0) || !std::isfinite(gamma_lb)) throw Error(ErrorCode::bad_gamma, "gamma_lb must be positive");
  if (!(c > 1.0) || !std::isfinite(c)) throw Error(ErrorCode::bad_c, "c must exceed 1");
  const double pd = static_cast<double>(p);
  const double zeta = 1.0 / pd + (pd - 1.0) * gamma_lb / pd;
  return Partition(PartitionKind::clustered, CovariateSpace::continuous(p),
                   cell_count(std::pow(static_cast<double>(T) / c, zeta)));
}

/// The trivial partition with one cell covering the whole space.
inline Partition build_single(const CovariateSpace& space) { return Partition(PartitionKind::single, space, 1); }

}  // namespace seqbal
