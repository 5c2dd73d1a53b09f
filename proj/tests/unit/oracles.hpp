#pragma once

// Reference evaluators written independently of the library's evaluator,
// usable at any floating-point precision.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "isosr/expr.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_100;

template <typename T>
std::optional<T> eval(const isosr::Expr& e, std::span<const T> params, const T& p);

template <typename T>
std::optional<T> eval_node(const isosr::Expr& e, std::span<const T> params, const T& p) {
  using isosr::OpKind;
  using std::sqrt;
  using boost::multiprecision::sqrt;
  switch (e.kind()) {
    case isosr::NodeKind::Variable:
      return p;
    case isosr::NodeKind::Parameter:
      return params[static_cast<std::size_t>(e.param_index() - 1)];
    case isosr::NodeKind::Integer:
      return T(e.integer_value());
    case isosr::NodeKind::Operator:
      break;
  }
  auto a = eval<T>(e.child(0), params, p);
  if (!a) return std::nullopt;
  switch (e.op()) {
    case OpKind::Sqrt:
      if (*a < 0) return std::nullopt;
      return T(sqrt(*a));
    case OpKind::Square:
      return T(*a * *a);
    case OpKind::Cube:
      return T(*a * *a * *a);
    default:
      break;
  }
  auto b = eval<T>(e.child(1), params, p);
  if (!b) return std::nullopt;
  switch (e.op()) {
    case OpKind::Add:
      return T(*a + *b);
    case OpKind::Sub:
      return T(*a - *b);
    case OpKind::Mul:
      return T(*a * *b);
    case OpKind::Div:
      if (*b == 0) return std::nullopt;
      return T(*a / *b);
    case OpKind::Pow: {
      if (*a < 0 && e.child(1).is_integer()) {
        T r = 1;
        for (long long k = 0; k < std::llabs(e.child(1).integer_value()); ++k) r *= *a;
        if (e.child(1).integer_value() < 0) {
          if (r == 0) return std::nullopt;
          r = 1 / r;
        }
        return r;
      }
      if (*a < 0 || (*a == 0 && *b <= 0)) return std::nullopt;
      using std::pow;
      using boost::multiprecision::pow;
      return T(pow(*a, *b));
    }
    default:
      return std::nullopt;
  }
}

// Any non-finite intermediate makes the whole value undefined.
template <typename T>
std::optional<T> eval(const isosr::Expr& e, std::span<const T> params, const T& p) {
  auto v = eval_node<T>(e, params, p);
  if (v) {
    using std::isfinite;
    using boost::multiprecision::isfinite;
    if (!isfinite(*v)) return std::nullopt;
  }
  return v;
}

inline std::vector<Big> to_big(std::span<const double> v) { return {v.begin(), v.end()}; }

// lim f(p) = 0 as p -> 0+, judged from f at p = 1e-200 and 1e-300: small,
// and still shrinking (a tiny nonzero constant does not count).
inline bool vanishes_at_zero(const isosr::Expr& f, std::span<const double> params) {
  const auto big = to_big(params);
  auto a = eval<Big>(f, big, Big("1e-200"));
  auto b = eval<Big>(f, big, Big("1e-300"));
  if (!a || !b) return false;
  return abs(*b) <= Big("1e-10") && abs(*b) <= Big("1e-3") * abs(*a);
}

// 0 < lim f'(p) < inf as p -> 0+, from forward differences at two scales.
inline bool positive_finite_slope(const isosr::Expr& f, std::span<const double> params) {
  const auto big = to_big(params);
  auto slope = [&](const Big& h) -> std::optional<Big> {
    auto a = eval<Big>(f, big, h);
    auto b = eval<Big>(f, big, 2 * h);
    if (!a || !b) return std::nullopt;
    return Big((*b - *a) / h);
  };
  auto s1 = slope(Big("1e-40"));
  auto s2 = slope(Big("1e-60"));
  if (!s1 || !s2) return false;
  if (*s2 <= Big("1e-20")) return false;
  return abs(*s1 - *s2) <= Big("1e-6") * abs(*s2);
}

// Non-decreasing over n log-spaced points: no value falls below the running
// maximum by more than tol * (1 + |max|). Undefined values fail.
inline bool monotone_scan(const isosr::Expr& f, std::span<const double> params, double start, double stop,
                          int n = 10000, double tol = 1e-12) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double p = i == 0 ? start : i == n - 1 ? stop : std::exp(std::log(start) + (std::log(stop) - std::log(start)) * i / (n - 1));
    auto v = eval<double>(f, params, p);
    if (!v || !std::isfinite(*v)) return false;
    if (*v < best - tol * (1 + std::abs(best))) return false;
    best = std::max(best, *v);
  }
  return true;
}

}  // namespace oracle
