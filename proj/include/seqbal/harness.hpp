#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/designs.hpp"
#include "seqbal/instances.hpp"
#include "seqbal/matching.hpp"
#include "seqbal/parallel.hpp"
#include "seqbal/partition.hpp"
#include "seqbal/rng.hpp"
#include "seqbal/stats.hpp"

namespace seqbal {

enum class DesignKind { crd, pigeonhole, single, matched_pair };

inline std::string_view to_string(DesignKind d) {
  switch (d) {
    case DesignKind::crd: return "crd";
    case DesignKind::pigeonhole: return "pigeonhole";
    case DesignKind::single: return "single";
    case DesignKind::matched_pair: return "matchedpair";
  }
  return "unknown";
}

struct DesignSpec {
  DesignKind kind = DesignKind::crd;
  PartitionKind partition = PartitionKind::uniform_1d;  // pigeonhole only
  double eta = 0.5;
  std::optional<double> phi;  // default 1/p
  double c = 2.0;
  double gamma_lb = 0.5;
};

enum class InstanceKind { halfzero, grid, alternating, clustered, discrete_uniform, uniform, fixed };

inline std::string_view to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::halfzero: return "halfzero";
    case InstanceKind::grid: return "grid";
    case InstanceKind::alternating: return "alternating";
    case InstanceKind::clustered: return "clustered";
    case InstanceKind::discrete_uniform: return "discrete";
    case InstanceKind::uniform: return "uniform";
    case InstanceKind::fixed: return "fixed";
  }
  return "unknown";
}

struct InstanceSpec {
  InstanceKind kind = InstanceKind::halfzero;
  std::size_t p = 1;                // grid, clustered, uniform
  std::size_t q = 0;                // discrete: number of binary covariates
  std::optional<std::size_t> K;     // alternating: cells, default ceil(sqrt(T))
  std::size_t clusters = 5;         // clustered: N
  double gamma = 0.8;               // clustered: diameter T^-gamma
  std::optional<ArrivalSequence> sequence;  // fixed: used for every T (T must match)

  bool random() const {
    return kind == InstanceKind::clustered || kind == InstanceKind::discrete_uniform || kind == InstanceKind::uniform;
  }
};

/// Materializes one instance of length T. `seed` matters only for random kinds.
inline ArrivalSequence make_instance(const InstanceSpec& spec, std::size_t T, std::uint64_t seed) {
  switch (spec.kind) {
    case InstanceKind::halfzero: return gen_halfzero_halfone(T);
    case InstanceKind::grid: return gen_grid(T, spec.p);
    case InstanceKind::alternating:
      return gen_alternating_lb(T, spec.K.value_or(static_cast<std::size_t>(cell_count(std::sqrt(static_cast<double>(T))))));
    case InstanceKind::clustered:
      return gen_clustered(T, random_cluster_spec(spec.clusters, spec.p, spec.gamma, derive_seed(seed, 0, 3)),
                           derive_seed(seed, 1, 3));
    case InstanceKind::discrete_uniform: return gen_discrete_uniform(T, CovariateSpace::binary(spec.q), seed);
    case InstanceKind::uniform: return gen_uniform(T, spec.p, seed);
    case InstanceKind::fixed:
      if (!spec.sequence) throw Error(ErrorCode::bad_config, "fixed instance without a sequence");
      if (spec.sequence->size() != T) {
        throw Error(ErrorCode::bad_config, "fixed instance has T=" + std::to_string(spec.sequence->size()) +
                                               ", requested " + std::to_string(T));
      }
      return *spec.sequence;
  }
  throw Error(ErrorCode::bad_config, "unknown instance kind");
}

inline Partition make_partition(const DesignSpec& d, const CovariateSpace& space, std::size_t T) {
  if (d.kind == DesignKind::single) return build_single(space);
  switch (d.partition) {
    case PartitionKind::uniform_1d:
      if (space.p() != 1 || space.q() != 0) throw Error(ErrorCode::space_mismatch, "uniform1d needs a p=1, q=0 space");
      return build_uniform_1d(T, d.eta);
    case PartitionKind::grid:
      if (space.q() != 0) throw Error(ErrorCode::space_mismatch, "grid needs a continuous space");
      return build_grid(T, space.p(), d.phi, d.c);
    case PartitionKind::natural_discrete: return build_natural_discrete(space);
    case PartitionKind::mixed: return build_mixed(space, T, d.phi, d.c);
    case PartitionKind::clustered:
      if (space.q() != 0) throw Error(ErrorCode::space_mismatch, "clustered grid needs a continuous space");
      return build_clustered(T, space.p(), d.gamma_lb, d.c);
    case PartitionKind::single: return build_single(space);
  }
  throw Error(ErrorCode::bad_config, "unknown partition kind");
}

struct RunResult {
  AssignmentTrace trace;
  double discrepancy = 0.0;
};

/// One design run on one sequence, scored by d_{A,B}.
inline RunResult run_design(const DesignSpec& d, const ArrivalSequence& seq, std::uint64_t seed) {
  RunResult r;
  switch (d.kind) {
    case DesignKind::crd: r.trace = crd_assign(seq, seed); break;
    case DesignKind::pigeonhole:
    case DesignKind::single: r.trace = pigeonhole_assign(seq, make_partition(d, seq.space, seq.size()), seed); break;
    case DesignKind::matched_pair: {
      auto mp = matched_pair_assign(seq, seed);
      r.trace = std::move(mp.trace);
      // With p >= 2 the pairing is a globally optimal pairing, and any split
      // along an optimal pairing has d_{A,B} equal to the pairing cost.
      if (seq.space.p() >= 2 && mp.pairing.exact) {
        r.discrepancy = mp.pairing.cost;
        return r;
      }
      break;
    }
  }
  r.discrepancy = trace_discrepancy(seq, r.trace);
  return r;
}

struct McRow {
  std::string design;
  std::string instance;
  std::size_t T = 0;
  std::size_t R = 0;
  double mean = 0.0;
  double std = 0.0;
  double ci = 0.0;
  double mean_tau = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> samples;
};

struct McReport {
  std::vector<McRow> rows;
};

inline std::uint64_t instance_seed(std::uint64_t seed, std::size_t T, std::size_t rep) {
  return derive_seed(derive_seed(seed, T, 0x7), rep, 0);
}
inline std::uint64_t design_seed(std::uint64_t seed, std::size_t T, std::size_t rep) {
  return derive_seed(derive_seed(seed, T, 0x7), rep, 1);
}

/// Monte Carlo over replications for each T. Deterministic in `seed` for any `jobs`.
inline McReport run_mc(const DesignSpec& design, const InstanceSpec& instance, const std::vector<std::size_t>& Ts,
                       std::size_t R, std::uint64_t seed, std::size_t jobs = 1) {
  if (R == 0) throw Error(ErrorCode::bad_config, "R must be at least 1");
  McReport report;
  for (std::size_t T : Ts) {
    std::optional<ArrivalSequence> fixed;
    if (!instance.random()) fixed = make_instance(instance, T, 0);
    std::vector<double> disc(R), tau(R);
    parallel_for(R, jobs, [&](std::size_t rep) {
      const ArrivalSequence local = fixed ? ArrivalSequence{} : make_instance(instance, T, instance_seed(seed, T, rep));
      const ArrivalSequence& seq = fixed ? *fixed : local;
      const auto run = run_design(design, seq, design_seed(seed, T, rep));
      disc[rep] = run.discrepancy;
      tau[rep] = static_cast<double>(run.trace.tau);
    });
    const auto s = summarize(disc);
    McRow row;
    row.design = std::string(to_string(design.kind));
    row.instance = std::string(to_string(instance.kind));
    row.T = T;
    row.R = R;
    row.mean = s.mean;
    row.std = s.std;
    row.ci = s.ci;
    row.mean_tau = summarize(tau).mean;
    row.seed = seed;
    row.samples = std::move(disc);
    report.rows.push_back(std::move(row));
  }
  return report;
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// OLS of ln(mean) on ln(T).
inline RateFit fit_rate(const std::vector<double>& Ts, const std::vector<double>& means) {
  std::vector<double> sorted = Ts;
  std::sort(sorted.begin(), sorted.end());
  if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 4) {
    throw Error(ErrorCode::degenerate_input, "rate fit needs at least 4 distinct T values");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < Ts.size(); ++i) {
    if (!(means[i] > 0.0) || !(Ts[i] > 0.0)) throw Error(ErrorCode::degenerate_input, "rate fit needs positive means");
    x.push_back(std::log(Ts[i]));
    y.push_back(std::log(means[i]));
  }
  const auto f = ols(x, y);
  return {f.slope, f.intercept, f.r2};
}

inline RateFit fit_rate(const McReport& report) {
  std::vector<double> Ts, means;
  for (const auto& r : report.rows) {
    Ts.push_back(static_cast<double>(r.T));
    means.push_back(r.mean);
  }
  return fit_rate(Ts, means);
}

/// Exact E|X - n prob| for X ~ Binomial(n, prob), by summing the pmf.
inline double binomial_mad(std::size_t n, double prob) {
  if (n == 0 || !(prob > 0.0 && prob < 1.0)) throw Error(ErrorCode::bad_config, "binomial_mad needs n >= 1, prob in (0,1)");
  const double nd = static_cast<double>(n);
  const double lg = std::lgamma(nd + 1.0);
  KahanSum s;
  for (std::size_t k = 0; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    const double logp = lg - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + kd * std::log(prob) +
                        (nd - kd) * std::log1p(-prob);
    s.add(std::abs(kd - nd * prob) * std::exp(logp));
  }
  return s.value();
}

/// Exact expected CRD discrepancy on the half-zeros/half-ones sequence. The
/// number H of zeros in the control set is hypergeometric and the discrepancy
/// is |2H - T/2|.
inline double crd_halfzero_expected(std::size_t T) {
  detail::require_even(T);
  const std::size_t h = T / 2;
  const double lnorm = std::lgamma(static_cast<double>(T) + 1) - 2 * std::lgamma(static_cast<double>(h) + 1);
  auto lchoose = [](double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); };
  KahanSum s;
  for (std::size_t k = 0; k <= h; ++k) {
    const double kd = static_cast<double>(k), hd = static_cast<double>(h);
    const double logp = lchoose(hd, kd) + lchoose(hd, hd - kd) - lnorm;
    s.add(std::abs(2.0 * kd - hd) * std::exp(logp));
  }
  return s.value();
}

/// The same quantity when H is modelled as Binomial(T/2, 1/2).
inline double crd_halfzero_binomial_model(std::size_t T) { return 2.0 * binomial_mad(T / 2, 0.5); }

/// Large-T form of the binomial model, sqrt(T / pi).
inline double crd_halfzero_asymptote(std::size_t T) { return std::sqrt(static_cast<double>(T) / std::numbers::pi); }

namespace detail {

inline double split_cost(const ArrivalSequence& seq, const std::vector<Label>& w) {
  std::vector<Subject> a, b;
  for (std::size_t t = 0; t < w.size(); ++t) (w[t] == Label::control ? a : b).push_back(seq.subjects[t]);
  return discrepancy_bruteforce(a, b).cost;
}

// Walks every coin outcome of the pigeonhole rule with its own bookkeeping.
inline void pigeonhole_tree(const ArrivalSequence& seq, const Partition& part, std::size_t t,
                            std::map<std::uint64_t, std::pair<int, int>>& cells, int n0, int n1,
                            std::vector<Label>& w, double prob, KahanSum& acc) {
  const int half = static_cast<int>(seq.size() / 2);
  if (t == seq.size()) {
    acc.add(prob * split_cost(seq, w));
    return;
  }
  auto& cell = cells[part.index(seq.subjects[t])];
  auto go = [&](Label l, double pr) {
    w.push_back(l);
    (l == Label::control ? cell.first : cell.second) += 1;
    pigeonhole_tree(seq, part, t + 1, cells, n0 + (l == Label::control), n1 + (l == Label::treated), w, pr, acc);
    (l == Label::control ? cell.first : cell.second) -= 1;
    w.pop_back();
  };
  if (n0 == half) {
    go(Label::treated, prob);
  } else if (n1 == half) {
    go(Label::control, prob);
  } else if (cell.first != cell.second) {
    go(cell.first < cell.second ? Label::control : Label::treated, prob);
  } else {
    go(Label::control, prob / 2);
    go(Label::treated, prob / 2);
  }
}

}  // namespace detail

/// Expected d_{A,B} by full enumeration of the design's randomness.
/// Limits: T <= 8 for CRD, T <= 12 for the pigeonhole and matched-pair designs.
inline double exact_expected_discrepancy(const DesignSpec& d, const ArrivalSequence& seq) {
  ensure_valid(seq);
  const std::size_t T = seq.size();
  switch (d.kind) {
    case DesignKind::crd: {
      if (T > 8) throw Error(ErrorCode::too_large, "CRD enumeration is limited to T <= 8");
      KahanSum acc;
      std::size_t count = 0;
      for (std::uint32_t mask = 0; mask < (1u << T); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != T / 2) continue;
        std::vector<Label> w(T);
        for (std::size_t t = 0; t < T; ++t) w[t] = (mask >> t & 1) ? Label::control : Label::treated;
        acc.add(detail::split_cost(seq, w));
        ++count;
      }
      return acc.value() / static_cast<double>(count);
    }
    case DesignKind::pigeonhole:
    case DesignKind::single: {
      if (T > 12) throw Error(ErrorCode::too_large, "pigeonhole enumeration is limited to T <= 12");
      const auto part = make_partition(d, seq.space, T);
      std::map<std::uint64_t, std::pair<int, int>> cells;
      std::vector<Label> w;
      KahanSum acc;
      detail::pigeonhole_tree(seq, part, 0, cells, 0, 0, w, 1.0, acc);
      return acc.value();
    }
    case DesignKind::matched_pair: {
      if (T > 12) throw Error(ErrorCode::too_large, "matched-pair enumeration is limited to T <= 12");
      const auto pairing = pairing_bruteforce(seq.subjects);
      const std::size_t m = pairing.pairs.size();
      KahanSum acc;
      for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        std::vector<Label> w(T);
        for (std::size_t k = 0; k < m; ++k) {
          const bool flip = mask >> k & 1;
          w[pairing.pairs[k].first] = flip ? Label::treated : Label::control;
          w[pairing.pairs[k].second] = flip ? Label::control : Label::treated;
        }
        acc.add(detail::split_cost(seq, w));
      }
      return acc.value() / static_cast<double>(1u << m);
    }
  }
  throw Error(ErrorCode::bad_config, "unknown design");
}

}  // namespace seqbal
