// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "seqbal/seqbal.hpp"

using namespace seqbal;

namespace {

// Pinned tolerances and study sizes.
constexpr double golden_tol = 1e-9;
constexpr double golden_runtime_s = 1.0;
constexpr double oracle_tol = 1e-9;
constexpr double oracle_runtime_s = 30.0;
constexpr double lemma1_bound = 1.0;
constexpr double crd_slope_lo = 0.45, crd_slope_hi = 0.55, crd_r2_min = 0.99;
constexpr double crd_runtime_s = 300.0;
constexpr double ph1_slope_lo = 0.18, ph1_slope_hi = 0.40, ph1_gap_min = 0.1;
constexpr double ph1_runtime_s = 600.0;
constexpr double discrete_ph_lo = -0.05, discrete_ph_hi = 0.10;
constexpr double discrete_mp_bound = 8.0;
constexpr double grid_mp_lo = 0.45, grid_mp_hi = 0.60, grid_ph_lo = 0.45, grid_ph_hi = 0.65;
constexpr double grid_runtime_s = 600.0;
constexpr double cluster_ratio = 0.5;
constexpr double sigmas = 3.0;
constexpr double ate_runtime_s = 600.0;
constexpr double exact_tol = 1e-12;
constexpr std::uint64_t seed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DesignSpec design(DesignKind k, PartitionKind p = PartitionKind::uniform_1d) {
  DesignSpec d;
  d.kind = k;
  d.partition = p;
  return d;
}

std::vector<std::size_t> powers_of_two(int lo, int hi, int step = 1) {
  std::vector<std::size_t> out;
  for (int e = lo; e <= hi; e += step) out.push_back(std::size_t{1} << e);
  return out;
}

std::vector<Subject> random_points(Rng& rng, std::size_t n, std::size_t p) {
  std::vector<Subject> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> c(p);
    for (auto& x : c) x = rng.uniform();
    out.emplace_back(std::move(c));
  }
  return out;
}

// ---- 1 -------------------------------------------------------------------

Outcome golden_values() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ex1 = scalar_sequence({0.1, 0.7, 0.4, 0.9});
  Outcome o;
  auto expect = [&](const std::string& name, double got, double want) {
    const bool ok = std::abs(got - want) <= golden_tol;
    o.pass = o.pass && ok;
    o.detail += name + "=" + fmt(got, 12) + (ok ? "" : " (want " + fmt(want, 12) + ")") + " ";
  };
  expect("d", discrepancy(parse_inline_points("0.1;0.4"), parse_inline_points("0.7;0.9")).cost, 1.1);
  expect("mp", trace_discrepancy(ex1, matched_pair_assign(ex1, seed).trace), 0.5);
  expect("E[mp]", exact_expected_discrepancy(design(DesignKind::matched_pair), ex1), 0.5);
  expect("E[crd]", exact_expected_discrepancy(design(DesignKind::crd), ex1), 0.7);
  expect("E[ph]", exact_expected_discrepancy(design(DesignKind::pigeonhole), ex1), 0.5);
  const double dt = seconds_since(t0);
  o.pass = o.pass && dt < golden_runtime_s;
  o.detail += "in " + fmt(dt, 3) + "s";
  return o;
}

// ---- 2 -------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(seed, 2));
  std::size_t bip = 0, gen = 0;
  for (int k = 0; k < 1200; ++k) {
    const std::size_t n = k < 1000 ? 4 : 6;
    const std::size_t p = 1 + rng.below(3);
    const auto a = random_points(rng, n, p), b = random_points(rng, n, p);
    if (std::abs(discrepancy(a, b).cost - discrepancy_bruteforce(a, b).cost) > oracle_tol) ++bip;
  }
  for (int k = 0; k < 200; ++k) {
    const auto pts = random_points(rng, 8, 1 + rng.below(3));
    if (std::abs(min_weight_pairing(pts).cost - pairing_bruteforce(pts).cost) > oracle_tol) ++gen;
  }
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = bip == 0 && gen == 0 && dt < oracle_runtime_s;
  o.detail = "bipartite mismatches " + std::to_string(bip) + "/1200, pairing mismatches " + std::to_string(gen) +
             "/200, in " + fmt(dt, 3) + "s";
  return o;
}

// ---- 3 -------------------------------------------------------------------

Outcome lemma1_bound_check() {
  std::size_t violations = 0, runs = 0;
  double worst = 0;
  for (std::size_t T : {10, 100, 1000}) {
    for (std::size_t r = 0; r < 10000; ++r) {
      const auto seq = gen_uniform(T, 1, derive_seed(seed, T, r));
      const double d = run_design(design(DesignKind::matched_pair), seq, derive_seed(seed, T, r + 1000000)).discrepancy;
      worst = std::max(worst, d);
      if (d > lemma1_bound + exact_tol) ++violations;
      ++runs;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(runs) +
                               " sequences, max " + fmt(worst, 6)};
}

// ---- 4 -------------------------------------------------------------------

Outcome crd_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  InstanceSpec inst;  // halfzero
  const auto rep = run_mc(design(DesignKind::crd), inst, powers_of_two(6, 14), 500, derive_seed(seed, 4), 0);
  const auto fit = fit_rate(rep);
  const auto small = run_mc(design(DesignKind::crd), inst, {4}, 500, derive_seed(seed, 40), 0).rows[0];
  const double exact4 = crd_halfzero_expected(4);
  const bool t4 = std::abs(small.mean - exact4) <= small.ci;
  const double dt = seconds_since(t0);
  // Constant of the fit, for reference only: hypergeometric sqrt(1/(2 pi)) vs
  // the binomial-model 1/sqrt(pi).
  const double constant = std::exp(fit.intercept);
  Outcome o;
  o.pass = fit.slope >= crd_slope_lo && fit.slope <= crd_slope_hi && fit.r2 > crd_r2_min && t4 && dt < crd_runtime_s;
  o.detail = "slope " + fmt(fit.slope) + " r2 " + fmt(fit.r2) + "; T=4 mean " + fmt(small.mean) + " +- " +
             fmt(small.ci) + " vs exact " + fmt(exact4) + "; fitted constant " + fmt(constant) +
             " (hypergeometric " + fmt(1 / std::sqrt(2 * std::numbers::pi)) + ", binomial model " +
             fmt(1 / std::sqrt(std::numbers::pi)) + "); in " + fmt(dt, 3) + "s";
  return o;
}

// ---- 5 -------------------------------------------------------------------

Outcome pigeonhole_p1_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  InstanceSpec inst;
  inst.kind = InstanceKind::alternating;  // K = ceil(sqrt(T)), needs 2K | T
  const auto Ts = powers_of_two(8, 16, 2);
  DesignSpec ph = design(DesignKind::pigeonhole);
  ph.eta = 0.5;
  const auto fph = fit_rate(run_mc(ph, inst, Ts, 200, derive_seed(seed, 5), 0));
  const auto fcrd = fit_rate(run_mc(design(DesignKind::crd), inst, Ts, 200, derive_seed(seed, 50), 0));
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = fph.slope >= ph1_slope_lo && fph.slope <= ph1_slope_hi && fcrd.slope - fph.slope >= ph1_gap_min &&
           dt < ph1_runtime_s;
  o.detail = "pigeonhole slope " + fmt(fph.slope) + ", CRD slope " + fmt(fcrd.slope) + ", gap " +
             fmt(fcrd.slope - fph.slope) + "; T in {2^8,2^10,...,2^16}; in " + fmt(dt, 3) + "s";
  return o;
}

// ---- 6 -------------------------------------------------------------------

Outcome all_discrete() {
  InstanceSpec inst;
  inst.kind = InstanceKind::discrete_uniform;
  inst.q = 4;
  const auto Ts = powers_of_two(8, 14);
  const auto fph = fit_rate(run_mc(design(DesignKind::pigeonhole, PartitionKind::natural_discrete), inst, Ts, 200,
                                   derive_seed(seed, 6), 0));
  const auto fcrd = fit_rate(run_mc(design(DesignKind::crd), inst, Ts, 200, derive_seed(seed, 60), 0));
  const auto mp = run_mc(design(DesignKind::matched_pair), inst, Ts, 200, derive_seed(seed, 61), 0);
  double worst = 0;
  for (const auto& row : mp.rows) worst = std::max(worst, *std::max_element(row.samples.begin(), row.samples.end()));
  Outcome o;
  o.pass = fph.slope >= discrete_ph_lo && fph.slope <= discrete_ph_hi && fcrd.slope >= crd_slope_lo &&
           fcrd.slope <= crd_slope_hi && worst <= discrete_mp_bound + exact_tol;
  o.detail = "pigeonhole slope " + fmt(fph.slope) + ", CRD slope " + fmt(fcrd.slope) + ", matched-pair max " +
             fmt(worst, 6) + " (bound " + fmt(discrete_mp_bound) + ")";
  return o;
}

// ---- 7 -------------------------------------------------------------------

Outcome grid_p2() {
  const auto t0 = std::chrono::steady_clock::now();
  InstanceSpec inst;
  inst.kind = InstanceKind::grid;
  inst.p = 2;
  const std::vector<std::size_t> Ts{16, 64, 256, 1024, 4096};
  // The grid is fixed and the optimal pairing cost does not depend on the
  // coins, so a few replications pin the matched-pair mean.
  const auto mp = run_mc(design(DesignKind::matched_pair), inst, Ts, 3, derive_seed(seed, 7), 0);
  std::size_t below = 0;
  double max_excess = 0;
  for (const auto& row : mp.rows) {
    const double lb = static_cast<double>(row.T) / 2 / std::sqrt(static_cast<double>(row.T));
    for (double d : row.samples) {
      if (d < lb - golden_tol) ++below;
      max_excess = std::max(max_excess, d - lb);
    }
  }
  const auto fmp = fit_rate(mp);
  DesignSpec ph = design(DesignKind::pigeonhole, PartitionKind::grid);
  ph.phi = 0.5;
  ph.c = 2.0;
  const auto fph = fit_rate(run_mc(ph, inst, Ts, 30, derive_seed(seed, 70), 0));
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = below == 0 && fmp.slope >= grid_mp_lo && fmp.slope <= grid_mp_hi && fph.slope >= grid_ph_lo &&
           fph.slope <= grid_ph_hi && dt < grid_runtime_s;
  o.detail = "matched-pair below (T/2)T^-1/2: " + std::to_string(below) + " (max excess " + fmt(max_excess, 3) +
             "), slope " + fmt(fmp.slope) + "; pigeonhole slope " + fmt(fph.slope) + "; in " + fmt(dt, 3) + "s";
  return o;
}

// ---- 8 -------------------------------------------------------------------

Outcome clustered_benefit() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t T = 4096, R = 200;
  InstanceSpec inst;
  inst.kind = InstanceKind::clustered;
  inst.p = 2;
  inst.clusters = 5;
  inst.gamma = 0.8;
  DesignSpec ph = design(DesignKind::pigeonhole, PartitionKind::clustered);
  ph.gamma_lb = 0.8;
  const auto rph = run_mc(ph, inst, {T}, R, derive_seed(seed, 8), 0).rows[0];
  const auto rcrd = run_mc(design(DesignKind::crd), inst, {T}, R, derive_seed(seed, 8), 0).rows[0];
  const double Rd = static_cast<double>(R);
  const double margin = cluster_ratio * rcrd.mean - rph.mean;
  const double se = std::sqrt(cluster_ratio * cluster_ratio * rcrd.std * rcrd.std / Rd + rph.std * rph.std / Rd);
  Outcome o;
  o.pass = margin > sigmas * se;
  o.detail = "pigeonhole " + fmt(rph.mean) + " vs CRD " + fmt(rcrd.mean) + " (ratio " + fmt(rph.mean / rcrd.mean) +
             "), 0.5*CRD - pigeonhole = " + fmt(margin) + " = " + fmt(margin / se, 3) + " sigma; in " +
             fmt(seconds_since(t0), 3) + "s";
  return o;
}

// ---- 9 -------------------------------------------------------------------

Outcome ate() {
  const auto t0 = std::chrono::steady_clock::now();
  DgpConfig cfg;
  cfg.T = 10000;
  cfg.d = 16;
  cfg.boost_top_k = 5;
  cfg.marginals.assign(cfg.d, 0.1);
  cfg.seed = derive_seed(seed, 9);
  const std::size_t R = 2000;
  const auto rep = ate_study(cfg, {AteDesign::crd, AteDesign::pigeonhole}, R, derive_seed(seed, 90), 0);
  Outcome o;
  for (const auto& a : rep.arms) {
    const double z = (a.mean - rep.tau) / std::sqrt(a.var / static_cast<double>(R));
    o.pass = o.pass && std::abs(z) < sigmas;
    o.detail += a.design + " bias " + fmt(z, 3) + " sigma; ";
  }
  const double dt = seconds_since(t0);
  o.pass = o.pass && rep.reduction && *rep.reduction > sigmas * *rep.reduction_se && dt < ate_runtime_s;
  o.detail += "tau " + fmt(rep.tau) + ", variance reduction " + fmt(*rep.reduction) + " +- " + fmt(*rep.reduction_se) +
              "; in " + fmt(dt, 3) + "s";
  return o;
}

// ---- 10 ------------------------------------------------------------------

/// Enumerates every coin path of the pigeonhole design and checks the
/// invariants along the way. Returns P(W_t = treated) per position.
struct TreeCheck {
  std::vector<double> p_treated;
  std::size_t leaves = 0, not_half = 0, gap_breaks = 0;
};

void walk(const ArrivalSequence& seq, const Partition& part, std::size_t t, std::map<std::uint64_t, std::pair<int, int>>& cells,
          int n0, int n1, bool stopped, double prob, TreeCheck& out) {
  const int T = static_cast<int>(seq.size());
  if (t == seq.size()) {
    ++out.leaves;
    if (n0 != T / 2 || n1 != T / 2) ++out.not_half;
    return;
  }
  auto& c = cells[part.index(seq.subjects[t])];
  auto go = [&](bool treated, double pr) {
    (treated ? c.second : c.first) += 1;
    const int a = n0 + !treated, b = n1 + treated;
    if (!stopped && std::abs(c.first - c.second) > 1) ++out.gap_breaks;
    if (treated) out.p_treated[t] += prob * pr;
    walk(seq, part, t + 1, cells, a, b, stopped || a == T / 2 || b == T / 2, prob * pr, out);
    (treated ? c.second : c.first) -= 1;
  };
  if (n0 == T / 2) go(true, 1.0);
  else if (n1 == T / 2) go(false, 1.0);
  else if (c.first < c.second) go(false, 1.0);
  else if (c.second < c.first) go(true, 1.0);
  else {
    go(false, 0.5);
    go(true, 0.5);
  }
}

Outcome invariants() {
  Outcome o;
  std::vector<std::string> notes;
  Rng rng(derive_seed(seed, 10));

  // Half-half and pre-stopping cell balance: exhaustive for pigeonhole on
  // small instances, plus every design on random larger instances.
  bool half_ok = true, gap_ok = true, exact_marginal_ok = true;
  std::size_t trees = 0;
  for (std::size_t T = 2; T <= 10; T += 2) {
    for (int k = 0; k < 20; ++k) {
      const auto seq = gen_uniform(T, 1, rng.next());
      for (DesignKind dk : {DesignKind::pigeonhole, DesignKind::single}) {
        const auto part = make_partition(design(dk), seq.space, T);
        TreeCheck tc;
        tc.p_treated.assign(T, 0.0);
        std::map<std::uint64_t, std::pair<int, int>> cells;
        walk(seq, part, 0, cells, 0, 0, false, 1.0, tc);
        half_ok = half_ok && tc.not_half == 0;
        gap_ok = gap_ok && tc.gap_breaks == 0;
        for (double p : tc.p_treated) exact_marginal_ok = exact_marginal_ok && std::abs(p - 0.5) <= exact_tol;
        ++trees;
      }
    }
  }
  std::size_t runs = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t T = 2 * (1 + rng.below(100));
    const auto seq = gen_uniform(T, 2, rng.next());
    for (DesignKind dk : {DesignKind::crd, DesignKind::pigeonhole, DesignKind::single, DesignKind::matched_pair}) {
      const auto run = run_design(design(dk, PartitionKind::grid), seq, rng.next());
      half_ok = half_ok && is_half_half(run.trace);
      ++runs;
    }
    PigeonholeState st(build_grid(T, 2), T, rng.next());
    for (const auto& x : seq.subjects) {
      st.assign(x);
      if (st.tau() == 0 || st.tau() == st.processed()) gap_ok = gap_ok && st.max_cell_gap() <= 1;
    }
  }
  notes.push_back(std::string("half-half ") + (half_ok ? "ok" : "BROKEN") + " (" + std::to_string(trees) +
                  " enumerated trees, " + std::to_string(runs) + " runs)");
  notes.push_back(std::string("pre-tau cell gap <= 1 ") + (gap_ok ? "ok" : "BROKEN"));

  // Marginals: exact for pigeonhole by enumeration (above), Monte Carlo at 3 sigma for all designs.
  bool mc_marginal_ok = true;
  double worst_z = 0;
  {
    const std::size_t T = 8, R = 20000;
    const auto seq = gen_uniform(T, 1, derive_seed(seed, 101));
    for (DesignKind dk : {DesignKind::crd, DesignKind::pigeonhole, DesignKind::single, DesignKind::matched_pair}) {
      std::vector<double> hits(T, 0.0);
      for (std::size_t r = 0; r < R; ++r) {
        const auto run = run_design(design(dk), seq, derive_seed(seed, 102 + static_cast<int>(dk), r));
        for (std::size_t t = 0; t < T; ++t) hits[t] += as_int(run.trace.w[t]);
      }
      const double sigma = std::sqrt(0.25 / static_cast<double>(R));
      for (double h : hits) {
        const double z = std::abs(h / static_cast<double>(R) - 0.5) / sigma;
        worst_z = std::max(worst_z, z);
        mc_marginal_ok = mc_marginal_ok && z <= sigmas;
      }
    }
  }
  notes.push_back(std::string("marginals ") + (exact_marginal_ok && mc_marginal_ok ? "ok" : "BROKEN") +
                  " (exact enumeration; Monte Carlo worst " + fmt(worst_z, 3) + " sigma)");

  // Permutation invariance of the exact CRD expectation.
  bool perm_ok = true;
  for (std::size_t T : {4, 6}) {
    for (int k = 0; k < 10; ++k) {
      std::vector<double> xs(T);
      for (auto& x : xs) x = k < 5 ? rng.uniform() : static_cast<double>(rng.below(2));
      const double base = exact_expected_discrepancy(design(DesignKind::crd), scalar_sequence(xs));
      std::sort(xs.begin(), xs.end());
      do {
        perm_ok = perm_ok &&
                  std::abs(exact_expected_discrepancy(design(DesignKind::crd), scalar_sequence(xs)) - base) <= exact_tol;
      } while (std::next_permutation(xs.begin(), xs.end()));
    }
  }
  notes.push_back(std::string("CRD permutation invariance at T=4,6 ") + (perm_ok ? "ok" : "BROKEN"));

  // Worst-case maximality of half zeros / half ones among all 0/1 sequences.
  bool max_ok = true;
  for (std::size_t T : {4, 6}) {
    const double half = exact_expected_discrepancy(design(DesignKind::crd), gen_halfzero_halfone(T));
    double best = -1;
    std::vector<double> arg;
    for (unsigned mask = 0; mask < (1u << T); ++mask) {
      std::vector<double> xs(T);
      for (std::size_t t = 0; t < T; ++t) xs[t] = mask >> t & 1;
      const double e = exact_expected_discrepancy(design(DesignKind::crd), scalar_sequence(xs));
      if (e > best + exact_tol) {
        best = e;
        arg = xs;
      }
    }
    const bool ok = best <= half + exact_tol;
    max_ok = max_ok && ok;
    std::string seq_str;
    for (double x : arg) seq_str += std::to_string(static_cast<int>(x));
    notes.push_back("T=" + std::to_string(T) + " half-zero " + fmt(half) + ", max over 0/1 sequences " + fmt(best) +
                    " at " + seq_str + (ok ? " ok" : " EXCEEDS"));
  }

  o.pass = half_ok && gap_ok && exact_marginal_ok && mc_marginal_ok && perm_ok && max_ok;
  for (std::size_t i = 0; i < notes.size(); ++i) o.detail += (i ? "; " : "") + notes[i];
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"golden values", golden_values},
      {"oracle equivalence", oracle_equivalence},
      {"matched-pair p=1 bound", lemma1_bound_check},
      {"CRD rate on half zeros", crd_rate},
      {"pigeonhole p=1 rate", pigeonhole_p1_rate},
      {"all-discrete covariates", all_discrete},
      {"p=2 grid", grid_p2},
      {"clustered benefit", clustered_benefit},
      {"ATE study", ate},
      {"invariant suite", invariants},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
