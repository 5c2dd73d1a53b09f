#pragma once

// Truncated generalized power series in p around 0+, used for limits of
// expressions that are not rational (sqrt, non-integer powers). Each series
// is sum c_i p^e_i + O(p^order) with real exponents in increasing order.

#include <limits>
#include <span>
#include <vector>

#include "isosr/expr.hpp"

namespace isosr::detail {

struct SeriesTerm {
  double exponent;
  double coef;
};

struct Series {
  enum class State { Ok, Unknown, Undefined };

  State state = State::Ok;
  std::vector<SeriesTerm> terms;
  double order = std::numeric_limits<double>::infinity();

  static Series unknown() { return {State::Unknown, {}, 0.0}; }
  static Series undefined() { return {State::Undefined, {}, 0.0}; }
  bool ok() const { return state == State::Ok; }
};

/// Expand `e` at p -> 0+ with numeric parameter values.
Series expand_series(const Expr& e, std::span<const double> params);

}  // namespace isosr::detail
