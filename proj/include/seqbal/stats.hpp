#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "seqbal/error.hpp"

namespace seqbal {

/// Compensated (Kahan-Babuska) running sum.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1 denominator)
  double ci = 0.0;   // 1.96 * std / sqrt(n)

  double var() const noexcept { return std * std; }
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  KahanSum sum;
  for (double x : xs) sum.add(x);
  s.mean = sum.value() / static_cast<double>(s.n);
  if (s.n > 1) {
    KahanSum sq;
    for (double x : xs) sq.add((x - s.mean) * (x - s.mean));
    s.std = std::sqrt(sq.value() / static_cast<double>(s.n - 1));
  }
  s.ci = 1.96 * s.std / std::sqrt(static_cast<double>(s.n));
  return s;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::degenerate_input, "OLS needs at least two points");
  const double n = static_cast<double>(x.size());
  KahanSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  KahanSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  if (!(sxx.value() > 0.0)) throw Error(ErrorCode::degenerate_input, "all x values coincide");
  LinearFit f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  f.r2 = syy.value() > 0.0 ? (sxy.value() * sxy.value()) / (sxx.value() * syy.value()) : 1.0;
  return f;
}

}  // namespace seqbal
