#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/matching.hpp"
#include "seqbal/partition.hpp"
#include "seqbal/rng.hpp"

namespace seqbal {

/// Sequential decision rule: sees one subject at a time and commits to a
/// label before the next arrives.
class OnlineDesign {
 public:
  virtual ~OnlineDesign() = default;
  virtual Label assign(const Subject& x) = 0;
  virtual std::size_t processed() const = 0;
};

/// Completely randomized design: the control set is a uniform T/2-subset
/// drawn up front, so the covariates are never looked at.
class CrdDesign final : public OnlineDesign {
 public:
  CrdDesign(std::size_t T, std::uint64_t seed) : labels_(T, Label::treated) {
    if (T < 2 || T % 2 != 0) throw Error(ErrorCode::odd_horizon, "T must be even and >= 2");
    Rng rng(seed);
    std::vector<std::size_t> idx(T);
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first T/2 slots are a uniform subset.
    for (std::size_t i = 0; i < T / 2; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(T - i));
      std::swap(idx[i], idx[j]);
      labels_[idx[i]] = Label::control;
    }
  }

  Label assign(const Subject&) override {
    if (t_ >= labels_.size()) throw Error(ErrorCode::invariant_violation, "more arrivals than the horizon");
    return labels_[t_++];
  }
  std::size_t processed() const override { return t_; }

 private:
  std::vector<Label> labels_;
  std::size_t t_ = 0;
};

struct CellCounts {
  std::size_t control = 0;
  std::size_t treated = 0;
};

/// Online pigeonhole design. Step 1: once a group holds T/2 subjects every
/// later arrival goes to the other group. Step 2: otherwise the arrival joins
/// whichever group is smaller inside its cell, with a fair coin on ties.
class PigeonholeState final : public OnlineDesign {
 public:
  PigeonholeState(Partition partition, std::size_t T, std::uint64_t seed)
      : partition_(std::move(partition)), T_(T), rng_(seed) {
    if (T < 2 || T % 2 != 0) throw Error(ErrorCode::odd_horizon, "T must be even and >= 2");
  }

  Label assign(const Subject& x) override {
    if (processed() >= T_) throw Error(ErrorCode::invariant_violation, "more arrivals than the horizon");
    const std::size_t half = T_ / 2;
    auto& cell = counts_[partition_.index(x)];
    Label w;
    if (total_.control == half) {
      w = Label::treated;
    } else if (total_.treated == half) {
      w = Label::control;
    } else if (cell.control < cell.treated) {
      w = Label::control;
    } else if (cell.treated < cell.control) {
      w = Label::treated;
    } else {
      w = rng_.coin() ? Label::treated : Label::control;
    }
    const bool balancing = std::max(total_.control, total_.treated) >= half;
    (w == Label::control ? cell.control : cell.treated) += 1;
    (w == Label::control ? total_.control : total_.treated) += 1;
    if (!balancing) {
      const auto gap = cell.control > cell.treated ? cell.control - cell.treated : cell.treated - cell.control;
      if (gap > 1) throw Error(ErrorCode::invariant_violation, "cell imbalance above 1 before the stopping time");
    }
    if (tau_ == 0 && (total_.control == half || total_.treated == half)) tau_ = processed();
    return w;
  }

  std::size_t processed() const override { return total_.control + total_.treated; }
  std::size_t horizon() const noexcept { return T_; }
  /// 1-based stopping time, 0 while neither group is full.
  std::size_t tau() const noexcept { return tau_; }
  const CellCounts& totals() const noexcept { return total_; }
  CellCounts cell(const Subject& x) const {
    auto it = counts_.find(partition_.index(x));
    return it == counts_.end() ? CellCounts{} : it->second;
  }
  const Partition& partition() const noexcept { return partition_; }

  /// Largest |n0 - n1| over all cells.
  std::size_t max_cell_gap() const {
    std::size_t g = 0;
    for (const auto& [k, c] : counts_) {
      g = std::max(g, c.control > c.treated ? c.control - c.treated : c.treated - c.control);
    }
    return g;
  }

 private:
  Partition partition_;
  std::size_t T_;
  Rng rng_;
  std::unordered_map<std::uint64_t, CellCounts> counts_;
  CellCounts total_;
  std::size_t tau_ = 0;
};

inline AssignmentTrace run_online(OnlineDesign& design, const ArrivalSequence& seq) {
  std::vector<Label> w;
  w.reserve(seq.size());
  for (const auto& x : seq.subjects) w.push_back(design.assign(x));
  return make_trace(std::move(w));
}

inline AssignmentTrace crd_assign(const ArrivalSequence& seq, std::uint64_t seed) {
  ensure_valid(seq);
  CrdDesign d(seq.size(), seed);
  return run_online(d, seq);
}

inline AssignmentTrace pigeonhole_assign(const ArrivalSequence& seq, const Partition& partition, std::uint64_t seed) {
  ensure_valid(seq);
  PigeonholeState d(partition, seq.size(), seed);
  return run_online(d, seq);
}

inline AssignmentTrace single_pigeonhole_assign(const ArrivalSequence& seq, std::uint64_t seed) {
  return pigeonhole_assign(seq, build_single(seq.space), seed);
}

struct MatchedPairResult {
  AssignmentTrace trace;
  Matching pairing;  // general pairs (i, j), i < j, with the pairing cost
};

/// The optimal offline pairing behind the matched-pair design. With at most
/// one continuous dimension, subjects sharing a discrete tuple are sorted and
/// paired neighbour to neighbour; the at most one leftover per tuple is then
/// paired optimally across tuples. Otherwise a general minimum-weight
/// pairing is solved.
inline Matching matched_pairing(const ArrivalSequence& seq, const PairingOptions& opt = {}) {
  ensure_valid(seq);
  const auto& subjects = seq.subjects;
  if (seq.space.p() >= 2) return min_weight_pairing(subjects, opt);

  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t t = 0; t < subjects.size(); ++t) {
    const auto d = subjects[t].discrete();
    groups[std::vector<double>(d.begin(), d.end())].push_back(t);
  }
  Matching m;
  std::vector<std::size_t> leftover;
  for (auto& [tuple, idx] : groups) {
    if (seq.space.p() == 1) {
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return subjects[a][0] < subjects[b][0]; });
    }
    std::size_t k = 0;
    for (; k + 1 < idx.size(); k += 2) m.pairs.emplace_back(std::min(idx[k], idx[k + 1]), std::max(idx[k], idx[k + 1]));
    if (k < idx.size()) leftover.push_back(idx[k]);
  }
  if (!leftover.empty()) {
    std::vector<Subject> rest;
    for (auto t : leftover) rest.push_back(subjects[t]);
    const auto sub = min_weight_pairing(rest, opt);
    for (auto [a, b] : sub.pairs) {
      m.pairs.emplace_back(std::min(leftover[a], leftover[b]), std::max(leftover[a], leftover[b]));
    }
    m.exact = sub.exact;
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  m.cost = detail::pairing_cost(subjects, m.pairs);
  return m;
}

/// Assigns by a fair coin inside each pair of `pairing` (pairs sorted by first index).
inline AssignmentTrace randomize_pairs(const Matching& pairing, std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Label> w(T, Label::control);
  for (auto [i, j] : pairing.pairs) {
    const bool flip = rng.coin();
    w[i] = flip ? Label::treated : Label::control;
    w[j] = opposite(w[i]);
  }
  return make_trace(std::move(w));
}

inline MatchedPairResult matched_pair_assign(const ArrivalSequence& seq, std::uint64_t seed,
                                             const PairingOptions& opt = {}) {
  MatchedPairResult r;
  r.pairing = matched_pairing(seq, opt);
  r.trace = randomize_pairs(r.pairing, seq.size(), seed);
  return r;
}

/// Splits a sequence into its control and treated subjects.
inline std::pair<std::vector<Subject>, std::vector<Subject>> split_groups(const ArrivalSequence& seq,
                                                                          const AssignmentTrace& trace) {
  if (trace.size() != seq.size()) throw Error(ErrorCode::length_mismatch, "trace and sequence lengths differ");
  std::pair<std::vector<Subject>, std::vector<Subject>> g;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    (trace.w[t] == Label::control ? g.first : g.second).push_back(seq.subjects[t]);
  }
  return g;
}

/// d_{A,B} of a realized assignment.
inline double trace_discrepancy(const ArrivalSequence& seq, const AssignmentTrace& trace,
                                Solver solver = Solver::automatic) {
  auto [a, b] = split_groups(seq, trace);
  return discrepancy(a, b, solver).cost;
}

}  // namespace seqbal
