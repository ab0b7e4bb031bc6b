#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/designs.hpp"
#include "seqbal/parallel.hpp"
#include "seqbal/partition.hpp"
#include "seqbal/rng.hpp"
#include "seqbal/stats.hpp"

namespace seqbal {

/// Synthetic click-through population: d binary covariates, a linear model
/// for the control probability, and a nonnegative uniform uplift under
/// treatment.
struct DgpConfig {
  std::size_t T = 10000;
  std::size_t d = 16;
  std::vector<double> marginals;             // Bernoulli rate per covariate; empty = 0.5 each
  std::optional<std::vector<double>> coefficients;  // default: i.i.d. N(0,1) * coef_scale
  double coef_scale = 1.0;
  double intercept = 0.05;
  std::size_t boost_top_k = 5;   // largest |coefficients| multiplied by boost_factor
  double boost_factor = 3.0;
  std::optional<double> noise_upper;  // default: realized mean control probability
  std::uint64_t seed = 1;
};

struct Population {
  ArrivalSequence seq;
  std::vector<double> coefficients;  // after boosting
  std::vector<double> p0, p1;        // trimmed probabilities
  std::vector<double> y0, y1;        // realized potential outcomes
  double noise_upper = 0.0;
  double tau = 0.0;                  // mean(y1) - mean(y0)
};

inline double trim_probability(double v) { return std::clamp(v, 0.0, 1.0); }

inline void validate_dgp(const DgpConfig& cfg) {
  if (cfg.T < 2 || cfg.T % 2 != 0) throw Error(ErrorCode::bad_config, "T must be even and >= 2");
  if (cfg.d == 0) throw Error(ErrorCode::bad_config, "need at least one covariate");
  if (!cfg.marginals.empty() && cfg.marginals.size() != cfg.d) {
    throw Error(ErrorCode::bad_config, "marginals must list one rate per covariate");
  }
  for (double m : cfg.marginals) {
    if (!(m >= 0.0 && m <= 1.0)) throw Error(ErrorCode::bad_config, "marginal outside [0,1]");
  }
  if (cfg.coefficients && cfg.coefficients->size() != cfg.d) {
    throw Error(ErrorCode::bad_config, "coefficients must list one value per covariate");
  }
  if (cfg.boost_top_k > cfg.d) throw Error(ErrorCode::bad_config, "boost_top_k exceeds the covariate count");
  if (!std::isfinite(cfg.boost_factor) || !std::isfinite(cfg.coef_scale) || !std::isfinite(cfg.intercept)) {
    throw Error(ErrorCode::bad_config, "model parameters must be finite");
  }
  if (cfg.noise_upper && !(*cfg.noise_upper >= 0.0)) throw Error(ErrorCode::bad_config, "noise_upper must be >= 0");
}

/// Draws one fixed population from cfg.seed.
inline Population generate_population(const DgpConfig& cfg) {
  validate_dgp(cfg);
  Rng rng(cfg.seed);
  Population pop;

  if (cfg.coefficients) {
    pop.coefficients = *cfg.coefficients;
  } else {
    pop.coefficients.resize(cfg.d);
    for (auto& b : pop.coefficients) b = rng.normal() * cfg.coef_scale;
  }
  std::vector<std::size_t> order(cfg.d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(pop.coefficients[a]) > std::abs(pop.coefficients[b]);
  });
  for (std::size_t k = 0; k < cfg.boost_top_k; ++k) pop.coefficients[order[k]] *= cfg.boost_factor;

  pop.seq.space = CovariateSpace::binary(cfg.d);
  pop.seq.subjects.reserve(cfg.T);
  pop.p0.resize(cfg.T);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    std::vector<double> x(cfg.d);
    double eta = cfg.intercept;
    for (std::size_t j = 0; j < cfg.d; ++j) {
      const double m = cfg.marginals.empty() ? 0.5 : cfg.marginals[j];
      x[j] = rng.bernoulli(m) ? 1.0 : 0.0;
      eta += pop.coefficients[j] * x[j];
    }
    pop.p0[t] = trim_probability(eta);
    pop.seq.subjects.emplace_back(std::vector<double>{}, x);
  }
  KahanSum mean0;
  for (double v : pop.p0) mean0.add(v);
  pop.noise_upper = cfg.noise_upper.value_or(mean0.value() / static_cast<double>(cfg.T));

  pop.p1.resize(cfg.T);
  pop.y0.resize(cfg.T);
  pop.y1.resize(cfg.T);
  KahanSum diff;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    pop.p1[t] = trim_probability(pop.p0[t] + rng.uniform(0.0, pop.noise_upper));
    pop.y0[t] = rng.bernoulli(pop.p0[t]) ? 1.0 : 0.0;
    pop.y1[t] = rng.bernoulli(pop.p1[t]) ? 1.0 : 0.0;
    diff.add(pop.y1[t] - pop.y0[t]);
  }
  pop.tau = diff.value() / static_cast<double>(cfg.T);
  return pop;
}

/// (2/T) sum of treated Y(1) minus (2/T) sum of control Y(0).
inline double diff_in_means(const AssignmentTrace& trace, const std::vector<double>& y0, const std::vector<double>& y1) {
  const std::size_t T = trace.size();
  if (y0.size() != T || y1.size() != T) throw Error(ErrorCode::length_mismatch, "trace and outcome table lengths differ");
  if (T == 0) throw Error(ErrorCode::length_mismatch, "empty trace");
  KahanSum s;
  for (std::size_t t = 0; t < T; ++t) s.add(trace.w[t] == Label::treated ? y1[t] : -y0[t]);
  return 2.0 * s.value() / static_cast<double>(T);
}

inline double diff_in_means(const AssignmentTrace& trace, const Population& pop) {
  return diff_in_means(trace, pop.y0, pop.y1);
}

enum class AteDesign { crd, pigeonhole };

inline std::string_view to_string(AteDesign d) { return d == AteDesign::crd ? "crd" : "pigeonhole"; }

struct AteArm {
  std::string design;
  std::size_t R = 0;
  double mean = 0.0;
  double var = 0.0;
  double var_se = 0.0;  // standard error of the sample variance
  std::vector<double> samples;
};

struct AteReport {
  double tau = 0.0;
  double noise_upper = 0.0;
  std::vector<AteArm> arms;
  std::optional<double> reduction;     // 1 - var(pigeonhole) / var(crd)
  std::optional<double> reduction_se;  // delta method

  const AteArm* arm(std::string_view name) const {
    for (const auto& a : arms) {
      if (a.design == name) return &a;
    }
    return nullptr;
  }
};

/// Standard error of the sample variance from the sample fourth moment.
inline double variance_se(std::span<const double> xs) {
  const auto s = summarize(xs);
  const double n = static_cast<double>(xs.size());
  if (n < 4) return 0.0;
  KahanSum m4;
  for (double x : xs) m4.add(std::pow(x - s.mean, 4));
  const double mu4 = m4.value() / n;
  const double v = s.var();
  const double var_of_var = (mu4 - v * v * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(0.0, var_of_var));
}

/// R assignment replications of one design on a fixed population, optionally
/// restricted to its first `prefix` subjects.
inline std::vector<double> ate_replications(const Population& pop, AteDesign design, std::size_t R, std::uint64_t seed,
                                            std::size_t jobs = 1, std::optional<std::size_t> prefix = std::nullopt) {
  const std::size_t T = prefix.value_or(pop.seq.size());
  if (T < 2 || T % 2 != 0 || T > pop.seq.size()) throw Error(ErrorCode::bad_config, "prefix must be even and within T");
  std::vector<double> y0(pop.y0.begin(), pop.y0.begin() + static_cast<std::ptrdiff_t>(T));
  std::vector<double> y1(pop.y1.begin(), pop.y1.begin() + static_cast<std::ptrdiff_t>(T));
  ArrivalSequence seq{pop.seq.space, {}};
  seq.subjects.assign(pop.seq.subjects.begin(), pop.seq.subjects.begin() + static_cast<std::ptrdiff_t>(T));
  const auto partition = build_natural_discrete(seq.space);
  std::vector<double> out(R);
  parallel_for(R, jobs, [&](std::size_t rep) {
    const auto s = derive_seed(seed, rep, design == AteDesign::crd ? 11 : 12);
    const auto trace = design == AteDesign::crd ? crd_assign(seq, s) : pigeonhole_assign(seq, partition, s);
    out[rep] = diff_in_means(trace, y0, y1);
  });
  return out;
}

inline AteReport ate_study(const DgpConfig& cfg, const std::vector<AteDesign>& designs, std::size_t R,
                           std::uint64_t seed, std::size_t jobs = 1) {
  if (R < 100) throw Error(ErrorCode::bad_config, "ATE study needs R >= 100");
  const auto pop = generate_population(cfg);
  AteReport rep;
  rep.tau = pop.tau;
  rep.noise_upper = pop.noise_upper;
  for (auto d : designs) {
    AteArm arm;
    arm.design = std::string(to_string(d));
    arm.R = R;
    arm.samples = ate_replications(pop, d, R, seed, jobs);
    const auto s = summarize(arm.samples);
    arm.mean = s.mean;
    arm.var = s.var();
    arm.var_se = variance_se(arm.samples);
    rep.arms.push_back(std::move(arm));
  }
  const auto* crd = rep.arm("crd");
  const auto* ph = rep.arm("pigeonhole");
  if (crd && ph && crd->var > 0.0) {
    const double ratio = ph->var / crd->var;
    rep.reduction = 1.0 - ratio;
    const double rel = std::hypot(ph->var > 0 ? ph->var_se / ph->var : 0.0, crd->var_se / crd->var);
    rep.reduction_se = ratio * rel;
  }
  return rep;
}

struct SweepPoint {
  std::size_t T = 0;
  double var = 0.0;
};

struct SweepResult {
  double crd_var = 0.0;              // CRD variance at the full T
  std::vector<SweepPoint> points;    // pigeonhole variance at each T'
  std::optional<double> crossing;    // smallest T' (interpolated) with variance below crd_var
};

/// Reruns the pigeonhole design on prefixes T' = f T of the population and
/// locates where its variance first falls below the CRD variance at T.
inline SweepResult sample_size_sweep(const DgpConfig& cfg, std::size_t R, std::uint64_t seed,
                                     const std::vector<double>& fractions = {0.8, 0.85, 0.9, 0.95, 1.0},
                                     std::size_t jobs = 1) {
  const auto pop = generate_population(cfg);
  SweepResult res;
  res.crd_var = summarize(ate_replications(pop, AteDesign::crd, R, seed, jobs)).var();
  for (double f : fractions) {
    auto Tp = static_cast<std::size_t>(std::llround(f * static_cast<double>(cfg.T)));
    Tp -= Tp % 2;
    if (Tp < 2) continue;
    const double v = summarize(ate_replications(pop, AteDesign::pigeonhole, R, derive_seed(seed, Tp, 5), jobs, Tp)).var();
    res.points.push_back({Tp, v});
  }
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const auto& b = res.points[i];
    if (b.var > res.crd_var) continue;
    if (i == 0) {
      res.crossing = static_cast<double>(b.T);
    } else {
      const auto& a = res.points[i - 1];
      const double frac = (a.var - res.crd_var) / (a.var - b.var);
      res.crossing = static_cast<double>(a.T) + frac * (static_cast<double>(b.T) - static_cast<double>(a.T));
    }
    break;
  }
  return res;
}

}  // namespace seqbal
