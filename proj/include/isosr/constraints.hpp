#pragma once

// Thermodynamic admissibility checks for isotherm candidates:
//   C1  f(p) -> 0 as p -> 0+
//   C2  f'(p) -> c as p -> 0+, with 0 < c < inf
//   C3  f is non-decreasing on (start, stop)

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>

#include "isosr/expr.hpp"

namespace isosr {

class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  static Deadline never() { return Deadline(Clock::time_point::max()); }
  static Deadline after(Clock::duration budget) { return Deadline(Clock::now() + budget); }
  bool expired() const { return end_ != Clock::time_point::max() && Clock::now() >= end_; }

 private:
  explicit Deadline(Clock::time_point end) : end_(end) {}
  Clock::time_point end_;
};

struct LimitValue {
  enum class Kind { Finite, PlusInfinity, MinusInfinity, Undefined };
  enum class Method { Exact, Series, Numeric };

  Kind kind = Kind::Undefined;
  double value = 0.0;
  Method method = Method::Numeric;
  bool timed_out = false;

  static LimitValue finite(double v, Method m) { return {Kind::Finite, v, m, false}; }
  static LimitValue infinite(bool positive, Method m) {
    return {positive ? Kind::PlusInfinity : Kind::MinusInfinity, 0.0, m, false};
  }
  static LimitValue undefined(Method m) { return {Kind::Undefined, 0.0, m, false}; }
  bool is_finite() const { return kind == Kind::Finite; }
};

std::string to_string(const LimitValue& v);

/// One-sided limit p -> 0+ with parameter values substituted. Rational
/// expressions are decided exactly from the lowest-order terms; others use
/// a truncated generalized power series, falling back to numeric
/// extrapolation when the series is inconclusive.
LimitValue limit_at_zero_plus(const Expr& e, std::span<const double> params,
                              const Deadline& deadline = Deadline::never());

/// Numeric extrapolation only: samples at p = 1e-4, 1e-6, 1e-8, 1e-10 and
/// classifies the trend (Aitken extrapolation when converging).
LimitValue numeric_limit_at_zero_plus(const Expr& e, std::span<const double> params);

struct MonotonicityOptions {
  double start = 1e-8;
  double stop = 1e3;
  int scan_points = 512;
  /// Allowed drop below the running maximum, relative to 1+|max|.
  double tolerance = 1e-12;
};

struct CheckOutcome {
  bool pass = false;
  bool timed_out = false;
  LimitValue limit;
};

CheckOutcome check_constraint1(const Expr& e, std::span<const double> params,
                               const Deadline& deadline = Deadline::never());
CheckOutcome check_constraint2(const Expr& e, std::span<const double> params,
                               const Deadline& deadline = Deadline::never());
CheckOutcome check_constraint3(const Expr& e, std::span<const double> params, const MonotonicityOptions& opts,
                               const Deadline& deadline = Deadline::never());

bool constraint1(const Expr& e, std::span<const double> params);
bool constraint2(const Expr& e, std::span<const double> params);
bool constraint3(const Expr& e, std::span<const double> params, double start, double stop);

enum CheckMask : unsigned { kCheckC1 = 1u, kCheckC2 = 2u, kCheckC3 = 4u, kCheckAll = 7u };

struct ConstraintVerdict {
  bool c1_pass = false;
  bool c2_pass = false;
  bool c3_pass = false;
  std::array<bool, 3> checked{};
  std::array<bool, 3> timed_out{};
  std::array<std::chrono::microseconds, 3> elapsed{};
  LimitValue value_limit;  // limit of f
  LimitValue slope_limit;  // limit of f'

  bool pass(int i) const { return i == 0 ? c1_pass : i == 1 ? c2_pass : c3_pass; }
  bool operator==(const ConstraintVerdict& o) const {
    return c1_pass == o.c1_pass && c2_pass == o.c2_pass && c3_pass == o.c3_pass && checked == o.checked &&
           timed_out == o.timed_out;
  }
};

/// Runs the selected checks, each under its own time budget.
ConstraintVerdict check_all(const Expr& e, std::span<const double> params, std::chrono::microseconds budget,
                            const MonotonicityOptions& range, unsigned mask = kCheckAll);

struct CheckerConfig {
  std::chrono::microseconds budget{100'000};
  MonotonicityOptions range;
  /// Maximum memo entries; the cache is cleared when full. 0 disables memoization.
  std::size_t memo_capacity = default_memo_capacity();

  /// ISOSR_MEMO_CAP from the environment, else 200000.
  static std::size_t default_memo_capacity();
};

/// Memoizing front-end to check_all. Keys are the rendered expression plus
/// the parameters rounded to 6 significant digits; checks run on the rounded
/// values so cached and fresh verdicts coincide. Safe for concurrent use.
class ConstraintChecker {
 public:
  explicit ConstraintChecker(CheckerConfig config = {});

  /// `range` overrides the configured monotonicity range (e.g. scaled to a dataset).
  ConstraintVerdict check(const Expr& e, std::span<const double> params, unsigned mask = kCheckAll,
                          const MonotonicityOptions* range = nullptr);

  const CheckerConfig& config() const { return config_; }
  /// Number of check() calls, cached or not.
  std::uint64_t invocations() const { return invocations_.load(); }
  std::uint64_t cache_hits() const { return hits_.load(); }
  void clear();

 private:
  CheckerConfig config_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, ConstraintVerdict> memo_;
  std::atomic<std::uint64_t> invocations_{0};
  std::atomic<std::uint64_t> hits_{0};
};

/// Parameters rounded to `digits` significant digits.
std::vector<double> round_significant(std::span<const double> params, int digits = 6);

}  // namespace isosr
