#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "seqbal/designs.hpp"
#include "seqbal/instances.hpp"

using namespace seqbal;

namespace {
const ArrivalSequence example1 = scalar_sequence({0.1, 0.7, 0.4, 0.9});

std::vector<int> as_ints(const AssignmentTrace& t) {
  std::vector<int> v;
  for (auto w : t.w) v.push_back(as_int(w));
  return v;
}
}  // namespace

TEST(Crd, HalfHalfAndIgnoresCovariates) {
  const auto seq = gen_uniform(20, 2, 1);
  auto other = seq;
  for (auto& s : other.subjects) s = Subject({0.5, 0.5});
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto t = crd_assign(seq, seed);
    EXPECT_TRUE(is_half_half(t));
    EXPECT_EQ(t.tau, stopping_time(t.w));
    EXPECT_EQ(t, crd_assign(other, seed));
  }
}

TEST(Crd, UniformOverSubsets) {
  std::map<std::vector<int>, int> freq;
  const int n = 100000;
  for (int s = 0; s < n; ++s) freq[as_ints(crd_assign(example1, derive_seed(42, s)))]++;
  ASSERT_EQ(freq.size(), 6u);
  for (const auto& [k, c] : freq) EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 6, 0.02);
}

TEST(Crd, ExampleOneMonteCarlo) {
  double s = 0;
  const int n = 100000;
  for (int r = 0; r < n; ++r) s += trace_discrepancy(example1, crd_assign(example1, derive_seed(7, r)));
  EXPECT_NEAR(s / n, 0.7, 0.01);
}

TEST(Pigeonhole, ExampleTwoTrajectory) {
  // The run with coins (treated, control) must reproduce w = (T, C, C, T).
  const auto part = build_uniform_1d(4, 0.5);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    const auto t = pigeonhole_assign(example1, part, seed);
    if (t.w[0] == Label::treated && t.w[1] == Label::control) {
      found = true;
      EXPECT_EQ(as_ints(t), (std::vector<int>{1, 0, 0, 1}));
      EXPECT_EQ(t.tau, 3u);
      EXPECT_NEAR(trace_discrepancy(example1, t), 0.5, 1e-9);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Pigeonhole, ExampleTwoEveryOutcomeCostsHalf) {
  const auto part = build_uniform_1d(4, 0.5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EXPECT_NEAR(trace_discrepancy(example1, pigeonhole_assign(example1, part, seed)), 0.5, 1e-9);
  }
}

TEST(Pigeonhole, StateMachineSteps) {
  PigeonholeState st(build_uniform_1d(4, 0.5), 4, 1);
  const auto w1 = st.assign(Subject::scalar(0.1));
  EXPECT_EQ(st.cell(Subject::scalar(0.2)).control + st.cell(Subject::scalar(0.2)).treated, 1u);
  const auto w3 = st.assign(Subject::scalar(0.4));
  EXPECT_EQ(w3, opposite(w1));  // same cell, fewer-count group wins
  EXPECT_EQ(st.tau(), 0u);
  st.assign(Subject::scalar(0.7));
  EXPECT_EQ(st.tau(), 3u);
  st.assign(Subject::scalar(0.9));
  EXPECT_EQ(st.totals().control, 2u);
  EXPECT_EQ(st.totals().treated, 2u);
  EXPECT_THROW(st.assign(Subject::scalar(0.5)), Error);
}

TEST(Pigeonhole, BalancingPeriodForcesOtherGroup) {
  // Single cell, T=6. After 0..5 arrivals the counts never differ by more than one.
  const auto seq = scalar_sequence({0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = single_pigeonhole_assign(seq, seed);
    EXPECT_TRUE(is_half_half(t));
    for (std::size_t m = 1; 2 * m <= t.size() && 2 * m - 1 < t.tau; ++m) {
      EXPECT_EQ(t.w[2 * m - 1], opposite(t.w[2 * m - 2]));
    }
    EXPECT_GE(t.tau, t.size() - 1);
  }
}

TEST(Pigeonhole, CellBalanceBeforeTau) {
  const auto space = CovariateSpace::binary(3);
  const auto part = build_natural_discrete(space);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto seq = gen_discrete_uniform(40, space, seed);
    PigeonholeState st(part, seq.size(), derive_seed(seed, 1));
    for (const auto& x : seq.subjects) {
      const bool before = st.tau() == 0;
      st.assign(x);
      if (before) {
        EXPECT_LE(st.max_cell_gap(), 1u);
      }
    }
    EXPECT_EQ(st.totals().control, 20u);
  }
}

TEST(Pigeonhole, HalfHalfOnManyInstances) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto seq = gen_uniform(2 * (1 + seed % 50), 1, seed);
    const auto t = pigeonhole_assign(seq, build_uniform_1d(seq.size(), 0.5), seed);
    ASSERT_TRUE(is_half_half(t));
    ASSERT_EQ(t.tau, stopping_time(t.w));
  }
}

TEST(Pigeonhole, DeterministicPerSeed) {
  const auto seq = gen_uniform(200, 2, 3);
  const auto part = build_grid(200, 2);
  EXPECT_EQ(pigeonhole_assign(seq, part, 9), pigeonhole_assign(seq, part, 9));
  EXPECT_NE(pigeonhole_assign(seq, part, 9), pigeonhole_assign(seq, part, 10));
}

TEST(MatchedPair, ExampleOne) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = matched_pair_assign(example1, seed);
    EXPECT_NEAR(r.pairing.cost, 0.5, 1e-9);
    EXPECT_EQ(r.pairing.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {1, 3}}));
    EXPECT_TRUE(is_half_half(r.trace));
    EXPECT_NE(r.trace.w[0], r.trace.w[2]);
    EXPECT_NEAR(trace_discrepancy(example1, r.trace), 0.5, 1e-9);
  }
}

TEST(MatchedPair, GridFour) {
  const auto seq = gen_grid(4, 2);
  const auto r = matched_pair_assign(seq, 1);
  EXPECT_NEAR(r.pairing.cost, 1.0, 1e-9);
  EXPECT_NEAR(trace_discrepancy(seq, r.trace), 1.0, 1e-9);
}

TEST(MatchedPair, LemmaOneBound) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto seq = gen_uniform(2 * (1 + seed % 200), 1, seed);
    const auto r = matched_pair_assign(seq, seed);
    EXPECT_LE(r.pairing.cost, 1.0 + 1e-12);
    EXPECT_NEAR(trace_discrepancy(seq, r.trace), r.pairing.cost, 1e-9);
  }
}

TEST(MatchedPair, CoinsArePerPair) {
  int first_treated = 0;
  const int n = 4000;
  for (int s = 0; s < n; ++s) first_treated += matched_pair_assign(example1, s).trace.w[0] == Label::treated;
  EXPECT_NEAR(first_treated / static_cast<double>(n), 0.5, 4 * std::sqrt(0.25 / n));
}

TEST(MatchedPair, MixedSpacePairsWithinSupports) {
  const CovariateSpace space(1, {{0.0, 1.0}});
  ArrivalSequence seq{space,
                      {Subject({0.1}, {0.0}), Subject({0.9}, {1.0}), Subject({0.2}, {0.0}), Subject({0.8}, {1.0}),
                       Subject({0.5}, {0.0}), Subject({0.5}, {1.0})}};
  const auto m = matched_pairing(seq);
  // Support 0 sorts to (0.1, 0.2, 0.5), support 1 to (0.5, 0.8, 0.9); the
  // leftovers 0.5 and 0.9 are paired across supports.
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {1, 4}, {3, 5}}));
  EXPECT_NEAR(m.cost, 0.1 + 0.3 + std::sqrt(0.16 + 1.0), 1e-12);
}

TEST(MatchedPair, DiscreteOnlyLeftoversArePairedOptimally) {
  const auto space = CovariateSpace::binary(4);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto seq = gen_discrete_uniform(64, space, seed);
    const auto r = matched_pair_assign(seq, seed);
    EXPECT_LE(r.pairing.cost, 8.0);
    EXPECT_NEAR(trace_discrepancy(seq, r.trace), r.pairing.cost, 1e-9);
  }
}

TEST(MatchedPair, GeneralDimensionUsesOptimalPairing) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto seq = gen_uniform(10, 3, seed);
    EXPECT_NEAR(matched_pairing(seq).cost, pairing_bruteforce(seq.subjects).cost, 1e-9);
  }
}

TEST(LabelSymmetry, MarginalsAreHalf) {
  const auto seq = gen_uniform(30, 1, 5);
  const auto part = build_uniform_1d(30, 0.5);
  const int R = 10000;
  std::vector<int> ph(30, 0), crd(30, 0);
  for (int r = 0; r < R; ++r) {
    const auto a = pigeonhole_assign(seq, part, derive_seed(1, r));
    const auto b = crd_assign(seq, derive_seed(2, r));
    for (std::size_t t = 0; t < 30; ++t) {
      ph[t] += a.w[t] == Label::treated;
      crd[t] += b.w[t] == Label::treated;
    }
  }
  const double tol = 3 * std::sqrt(0.25 / R) * R;
  for (std::size_t t = 0; t < 30; ++t) {
    EXPECT_NEAR(ph[t], R / 2.0, tol + 0.5 * tol) << t;  // 30 indices: widen to keep the family-wise rate low
    EXPECT_NEAR(crd[t], R / 2.0, tol + 0.5 * tol) << t;
  }
}

TEST(Groups, SplitChecksLength) {
  EXPECT_THROW(split_groups(example1, make_trace({Label::control, Label::treated})), Error);
}
