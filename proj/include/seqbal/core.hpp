#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqbal/error.hpp"

namespace seqbal {

/// Covariate space [0,1]^(p+q): `p` continuous dimensions followed by `q`
/// discrete dimensions, each discrete dimension with a finite support.
class CovariateSpace {
 public:
  CovariateSpace() = default;

  CovariateSpace(std::size_t p, std::vector<std::vector<double>> discrete_supports)
      : p_(p), supports_(std::move(discrete_supports)) {
    if (p_ + supports_.size() == 0) {
      throw Error(ErrorCode::invalid_space, "space needs at least one dimension");
    }
    for (std::size_t i = 0; i < supports_.size(); ++i) {
      const auto& s = supports_[i];
      if (s.empty()) {
        throw Error(ErrorCode::invalid_space, "discrete dimension " + std::to_string(i + 1) + " has empty support");
      }
      for (double v : s) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw Error(ErrorCode::invalid_space, "support value outside [0,1] in dimension " + std::to_string(i + 1));
        }
      }
      auto sorted = s;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorCode::invalid_space, "duplicate support value in dimension " + std::to_string(i + 1));
      }
    }
  }

  static CovariateSpace continuous(std::size_t p) { return CovariateSpace(p, {}); }

  static CovariateSpace binary(std::size_t q) {
    return CovariateSpace(0, std::vector<std::vector<double>>(q, std::vector<double>{0.0, 1.0}));
  }

  std::size_t p() const noexcept { return p_; }
  std::size_t q() const noexcept { return supports_.size(); }
  std::size_t dim() const noexcept { return p_ + supports_.size(); }
  const std::vector<std::vector<double>>& supports() const noexcept { return supports_; }
  const std::vector<double>& support(std::size_t i) const { return supports_.at(i); }

  /// Position of `value` in S_i by exact equality, or -1.
  std::ptrdiff_t support_index(std::size_t i, double value) const {
    const auto& s = supports_[i];
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] == value) return static_cast<std::ptrdiff_t>(k);
    }
    return -1;
  }

  /// Product of the support sizes m_i (1 when q = 0).
  std::size_t support_product() const noexcept {
    std::size_t prod = 1;
    for (const auto& s : supports_) prod *= s.size();
    return prod;
  }

  friend bool operator==(const CovariateSpace&, const CovariateSpace&) = default;

 private:
  std::size_t p_ = 1;
  std::vector<std::vector<double>> supports_;
};

/// One experimental subject. Coordinates are stored flat: the p continuous
/// values first, then the q discrete values.
class Subject {
 public:
  Subject() = default;
  explicit Subject(std::vector<double> continuous, const std::vector<double>& discrete = {})
      : coords_(std::move(continuous)), p_(coords_.size()) {
    coords_.insert(coords_.end(), discrete.begin(), discrete.end());
  }

  /// From a flat coordinate vector whose first `p` entries are continuous.
  static Subject flat(std::vector<double> coords, std::size_t p) {
    Subject s;
    s.coords_ = std::move(coords);
    s.p_ = p;
    return s;
  }

  /// Convenience for one-dimensional continuous spaces.
  static Subject scalar(double x) { return Subject(std::vector<double>{x}); }

  std::span<const double> coords() const noexcept { return coords_; }
  std::span<const double> continuous() const noexcept { return {coords_.data(), p_}; }
  std::span<const double> discrete() const noexcept {
    return {coords_.data() + p_, coords_.size() - p_};
  }
  std::size_t p() const noexcept { return p_; }
  std::size_t q() const noexcept { return coords_.size() - p_; }
  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const Subject&, const Subject&) = default;
  friend auto operator<=>(const Subject& a, const Subject& b) { return a.coords_ <=> b.coords_; }

 private:
  std::vector<double> coords_;
  std::size_t p_ = 0;
};

struct ArrivalSequence {
  CovariateSpace space;
  std::vector<Subject> subjects;

  std::size_t size() const noexcept { return subjects.size(); }
};

enum class Label : unsigned char { control = 0, treated = 1 };

constexpr Label opposite(Label w) noexcept {
  return w == Label::control ? Label::treated : Label::control;
}

constexpr int as_int(Label w) noexcept { return static_cast<int>(w); }

/// Realized assignment of a design. `tau` is 1-based: the first period after
/// which one group holds T/2 subjects.
struct AssignmentTrace {
  std::vector<Label> w;
  std::size_t tau = 0;

  std::size_t size() const noexcept { return w.size(); }
  friend bool operator==(const AssignmentTrace&, const AssignmentTrace&) = default;
};

/// Stopping time of a label sequence; w.size() if no group reaches half.
inline std::size_t stopping_time(std::span<const Label> w) {
  const std::size_t half = w.size() / 2;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    (w[t] == Label::control ? n0 : n1) += 1;
    if (n0 == half || n1 == half) return t + 1;
  }
  return w.size();
}

inline AssignmentTrace make_trace(std::vector<Label> w) {
  AssignmentTrace trace;
  trace.tau = stopping_time(w);
  trace.w = std::move(w);
  return trace;
}

/// True iff exactly half of the labels are control.
inline bool is_half_half(const AssignmentTrace& trace) {
  const auto controls = std::count(trace.w.begin(), trace.w.end(), Label::control);
  return trace.w.size() % 2 == 0 && static_cast<std::size_t>(controls) * 2 == trace.w.size();
}

struct Validation {
  bool ok = true;
  ErrorCode code = ErrorCode::invariant_violation;
  std::size_t index = 0;
  std::string message;

  explicit operator bool() const noexcept { return ok; }
};

inline Validation validate_subject(const CovariateSpace& space, const Subject& x, std::size_t index = 0) {
  if (x.p() != space.p() || x.q() != space.q()) {
    return {false, ErrorCode::space_mismatch, index,
            "subject " + std::to_string(index) + " has " + std::to_string(x.p()) + "+" + std::to_string(x.q()) +
                " coordinates, space expects " + std::to_string(space.p()) + "+" + std::to_string(space.q())};
  }
  const auto c = x.continuous();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] >= 0.0 && c[i] <= 1.0)) {
      return {false, ErrorCode::out_of_range, index,
              "subject " + std::to_string(index) + " continuous coordinate " + std::to_string(i + 1) +
                  " outside [0,1]"};
    }
  }
  const auto d = x.discrete();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] >= 0.0 && d[i] <= 1.0)) {
      return {false, ErrorCode::out_of_range, index,
              "subject " + std::to_string(index) + " discrete coordinate " + std::to_string(i + 1) +
                  " outside [0,1]"};
    }
    if (space.support_index(i, d[i]) < 0) {
      return {false, ErrorCode::unknown_support, index,
              "subject " + std::to_string(index) + " discrete coordinate " + std::to_string(i + 1) +
                  " is not a declared support value"};
    }
  }
  return {};
}

/// Checks every ArrivalSequence invariant; reports the first violation.
/// The even-horizon check comes first, then subjects in arrival order.
inline Validation validate_sequence(const ArrivalSequence& seq) {
  const std::size_t T = seq.subjects.size();
  if (T < 2 || T % 2 != 0) {
    return {false, ErrorCode::odd_horizon, T, "horizon T=" + std::to_string(T) + " must be even and at least 2"};
  }
  for (std::size_t t = 0; t < T; ++t) {
    auto v = validate_subject(seq.space, seq.subjects[t], t);
    if (!v) return v;
  }
  return {};
}

inline void ensure_valid(const ArrivalSequence& seq) {
  if (auto v = validate_sequence(seq); !v) throw Error(v.code, v.message);
}

inline double squared_distance(const Subject& a, const Subject& b) noexcept {
  const auto ca = a.coords();
  const auto cb = b.coords();
  double s = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const double d = ca[i] - cb[i];
    s += d * d;
  }
  return s;
}

inline double l2_distance(const Subject& a, const Subject& b) {
  if (a.p() != b.p() || a.q() != b.q()) {
    throw Error(ErrorCode::space_mismatch, "subjects live in different spaces");
  }
  return std::sqrt(squared_distance(a, b));
}

/// Builds a p=1, q=0 sequence from scalars.
inline ArrivalSequence scalar_sequence(std::span<const double> xs) {
  ArrivalSequence seq{CovariateSpace::continuous(1), {}};
  seq.subjects.reserve(xs.size());
  for (double x : xs) seq.subjects.push_back(Subject::scalar(x));
  return seq;
}

inline ArrivalSequence scalar_sequence(std::initializer_list<double> xs) {
  return scalar_sequence(std::span<const double>(xs.begin(), xs.size()));
}

}  // namespace seqbal
