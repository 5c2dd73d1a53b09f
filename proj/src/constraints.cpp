#include "isosr/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include "isosr/algebra.hpp"
#include "isosr/polynomial.hpp"
#include "series.hpp"

namespace isosr {
namespace {

using Method = LimitValue::Method;

constexpr double kNumericZero = 1e-10;
constexpr double kBlowUp = 1e8;

bool is_rational_tree(const Expr& e) {
  if (e.is_leaf()) return true;
  if (e.op() == OpKind::Sqrt) return false;
  if (e.op() == OpKind::Pow && !e.child(1).is_integer()) return false;
  for (int i = 0; i < e.child_count(); ++i)
    if (!is_rational_tree(e.child(i))) return false;
  return true;
}

int sign_of(const Rational& q) { return sgn(q); }

LimitValue exact_rational_limit(const URational& r) {
  if (r.num.is_zero()) return LimitValue::finite(0.0, Method::Exact);
  const int on = r.num.order();
  const int od = r.den.order();
  Rational ratio = r.num.coeff(on) / r.den.coeff(od);
  if (on > od) return LimitValue::finite(0.0, Method::Exact);
  if (on == od) return LimitValue::finite(ratio.get_d(), Method::Exact);
  return LimitValue::infinite(sign_of(ratio) > 0, Method::Exact);
}

LimitValue series_limit(const detail::Series& s) {
  if (s.terms.empty()) {
    if (s.order > 0) return LimitValue::finite(0.0, Method::Series);
    return LimitValue::undefined(Method::Series);
  }
  const auto& t = s.terms.front();
  if (t.exponent < -1e-12) return LimitValue::infinite(t.coef > 0, Method::Series);
  if (t.exponent <= 1e-12) return LimitValue::finite(t.coef, Method::Series);
  return LimitValue::finite(0.0, Method::Series);
}

// Classify the trend of g at p = 1e-4, 1e-6, 1e-8, 1e-10.
LimitValue numeric_limit(const std::function<double(double)>& g) {
  const double ps[4] = {1e-4, 1e-6, 1e-8, 1e-10};
  double v[4];
  for (int i = 0; i < 4; ++i) {
    v[i] = g(ps[i]);
    if (!std::isfinite(v[i])) return LimitValue::undefined(Method::Numeric);
  }
  const double d1 = v[1] - v[2];
  const double d2 = v[2] - v[3];
  const double a3 = std::abs(v[3]);
  if (a3 > kBlowUp && a3 > 10 * std::abs(v[2]) && std::abs(v[2]) > 10 * std::abs(v[1]))
    return LimitValue::infinite(v[3] > 0, Method::Numeric);
  if (d2 == 0.0) return LimitValue::finite(v[3], Method::Numeric);
  if (d1 != 0.0 && (d1 > 0) == (d2 > 0) && std::abs(d2) < std::abs(d1))
    return LimitValue::finite(v[3] - d2 * d2 / (d1 - d2), Method::Numeric);
  // Differences too small to resolve a trend: the samples have settled.
  if (std::abs(d2) <= 1e-13 * (1.0 + a3) && std::abs(d1) <= 1e-13 * (1.0 + a3))
    return LimitValue::finite(v[3], Method::Numeric);
  if (a3 > kBlowUp && (d1 > 0) == (d2 > 0) && std::abs(d2) > std::abs(d1))
    return LimitValue::infinite(v[3] > 0, Method::Numeric);
  return LimitValue::undefined(Method::Numeric);
}

// lim f'(0+) read off the expansion of f itself: the first term with a
// nonzero exponent decides it. Undefined when the expansion is too short.
LimitValue series_slope(const detail::Series& s) {
  for (const auto& t : s.terms) {
    if (std::abs(t.exponent) <= 1e-12) continue;
    if (t.exponent < 1 - 1e-12) return LimitValue::infinite((t.coef > 0) == (t.exponent > 0), Method::Series);
    if (t.exponent <= 1 + 1e-12) return LimitValue::finite(t.coef, Method::Series);
    return LimitValue::finite(0.0, Method::Series);
  }
  if (s.order > 1 + 1e-12) return LimitValue::finite(0.0, Method::Series);
  return LimitValue::undefined(Method::Series);
}

LimitValue timed_out_limit() {
  LimitValue v = LimitValue::undefined(Method::Numeric);
  v.timed_out = true;
  return v;
}

}  // namespace

std::string to_string(const LimitValue& v) {
  std::string s;
  switch (v.kind) {
    case LimitValue::Kind::Finite:
      s = fmt::format("{:.12g}", v.value);
      break;
    case LimitValue::Kind::PlusInfinity:
      s = "+inf";
      break;
    case LimitValue::Kind::MinusInfinity:
      s = "-inf";
      break;
    case LimitValue::Kind::Undefined:
      s = "undefined";
      break;
  }
  if (v.timed_out) s += " (timed out)";
  return s;
}

LimitValue numeric_limit_at_zero_plus(const Expr& e, std::span<const double> params) {
  CompiledExpr f(e);
  return numeric_limit([&](double p) { return f(params, p); });
}

LimitValue limit_at_zero_plus(const Expr& e, std::span<const double> params, const Deadline& deadline) {
  if (static_cast<std::size_t>(e.max_param_index()) > params.size())
    throw std::invalid_argument("limit_at_zero_plus: not enough parameter values");
  for (int k = 0; k < e.max_param_index(); ++k)
    if (!std::isfinite(params[k])) return LimitValue::undefined(Method::Exact);

  if (!e.contains_variable()) {
    auto v = evaluate(e, params, 1.0);
    return v ? LimitValue::finite(*v, Method::Exact) : LimitValue::undefined(Method::Exact);
  }
  if (is_rational_tree(e)) {
    std::vector<Rational> exact;
    exact.reserve(params.size());
    for (double x : params) exact.emplace_back(x);
    auto r = to_univariate(e, exact);
    if (deadline.expired()) return timed_out_limit();
    if (r.status == RationalStatus::Ok) return exact_rational_limit(r.value);
    if (r.status == RationalStatus::Undefined) return LimitValue::undefined(Method::Exact);
  }
  auto s = detail::expand_series(e, params);
  if (deadline.expired()) return timed_out_limit();
  if (s.state == detail::Series::State::Undefined) return LimitValue::undefined(Method::Series);
  if (s.ok()) {
    LimitValue v = series_limit(s);
    if (v.kind != LimitValue::Kind::Undefined) return v;
  }
  return numeric_limit_at_zero_plus(e, params);
}

CheckOutcome check_constraint1(const Expr& e, std::span<const double> params, const Deadline& deadline) {
  CheckOutcome out;
  out.limit = limit_at_zero_plus(e, params, deadline);
  if (out.limit.timed_out || deadline.expired()) {
    out.timed_out = true;
    return out;
  }
  if (!out.limit.is_finite()) return out;
  out.pass = out.limit.method == Method::Numeric ? std::abs(out.limit.value) <= kNumericZero
                                                 : out.limit.value == 0.0;
  return out;
}

CheckOutcome check_constraint2(const Expr& e, std::span<const double> params, const Deadline& deadline) {
  CheckOutcome out;
  if (static_cast<std::size_t>(e.max_param_index()) > params.size())
    throw std::invalid_argument("check_constraint2: not enough parameter values");
  bool decided = false;
  if (e.contains_variable() && !is_rational_tree(e)) {
    const auto s = detail::expand_series(e, params);
    if (s.ok()) {
      out.limit = series_slope(s);
      decided = out.limit.kind != LimitValue::Kind::Undefined;
    }
  }
  try {
    if (!decided) out.limit = limit_at_zero_plus(differentiate(e), params, deadline);
  } catch (const std::domain_error&) {
    // Exponent depends on p: use central differences of f itself.
    CompiledExpr f(e);
    out.limit = numeric_limit([&](double p) {
      const double h = 1e-4 * p;
      return (f(params, p + h) - f(params, p - h)) / (2 * h);
    });
  }
  if (out.limit.timed_out || deadline.expired()) {
    out.timed_out = true;
    return out;
  }
  if (!out.limit.is_finite()) return out;
  out.pass = out.limit.method == Method::Numeric ? out.limit.value > kNumericZero : out.limit.value > 0.0;
  return out;
}

CheckOutcome check_constraint3(const Expr& e, std::span<const double> params, const MonotonicityOptions& opts,
                               const Deadline& deadline) {
  CheckOutcome out;
  if (static_cast<std::size_t>(e.max_param_index()) > params.size())
    throw std::invalid_argument("check_constraint3: not enough parameter values");
  CompiledExpr f(e);
  if (!e.contains_variable()) {
    out.pass = std::isfinite(f(params, 1.0));
    return out;
  }
  std::optional<CompiledExpr> df;
  try {
    df.emplace(differentiate(e));
  } catch (const std::domain_error&) {
  }

  const int n = std::max(opts.scan_points, 2);
  const double l0 = std::log(opts.start);
  const double l1 = std::log(opts.stop);
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) grid[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  grid.front() = opts.start;
  grid.back() = opts.stop;

  std::vector<double> points = grid;
  if (df) {
    std::vector<double> dv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) dv[i] = (*df)(params, grid[i]);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      if (!(dv[i] * dv[i + 1] < 0)) continue;
      if ((i & 31u) == 0 && deadline.expired()) {
        out.timed_out = true;
        return out;
      }
      try {
        std::uintmax_t iters = 60;
        auto g = [&](double x) { return (*df)(params, x); };
        auto root = boost::math::tools::toms748_solve(g, grid[i], grid[i + 1], dv[i], dv[i + 1],
                                                      boost::math::tools::eps_tolerance<double>(40), iters);
        points.push_back(0.5 * (root.first + root.second));
      } catch (const std::exception&) {
        // NaN inside the bracket; the scan points still catch a decrease.
      }
    }
    std::sort(points.begin(), points.end());
  }

  // Compare against the running maximum so slow drifts downward are caught
  // no matter how finely the range is sampled.
  double best = f(params, points.front());
  if (!std::isfinite(best)) return out;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if ((i & 63u) == 0 && deadline.expired()) {
      out.timed_out = true;
      return out;
    }
    const double cur = f(params, points[i]);
    if (!std::isfinite(cur)) return out;
    if (cur < best - opts.tolerance * (1.0 + std::abs(best))) return out;
    best = std::max(best, cur);
  }
  if (deadline.expired()) {
    out.timed_out = true;
    return out;
  }
  out.pass = true;
  return out;
}

bool constraint1(const Expr& e, std::span<const double> params) { return check_constraint1(e, params).pass; }
bool constraint2(const Expr& e, std::span<const double> params) { return check_constraint2(e, params).pass; }
bool constraint3(const Expr& e, std::span<const double> params, double start, double stop) {
  MonotonicityOptions opts;
  opts.start = start;
  opts.stop = stop;
  return check_constraint3(e, params, opts).pass;
}

ConstraintVerdict check_all(const Expr& e, std::span<const double> params, std::chrono::microseconds budget,
                            const MonotonicityOptions& range, unsigned mask) {
  using Clock = std::chrono::steady_clock;
  ConstraintVerdict v;
  for (int i = 0; i < 3; ++i) {
    if (!(mask & (1u << i))) continue;
    const auto t0 = Clock::now();
    const Deadline deadline = Deadline::after(budget);
    CheckOutcome o;
    switch (i) {
      case 0:
        o = check_constraint1(e, params, deadline);
        v.value_limit = o.limit;
        break;
      case 1:
        o = check_constraint2(e, params, deadline);
        v.slope_limit = o.limit;
        break;
      default:
        o = check_constraint3(e, params, range, deadline);
        break;
    }
    v.checked[i] = true;
    v.timed_out[i] = o.timed_out;
    v.elapsed[i] = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0);
    const bool pass = o.pass && !o.timed_out;
    (i == 0 ? v.c1_pass : i == 1 ? v.c2_pass : v.c3_pass) = pass;
  }
  return v;
}

std::size_t CheckerConfig::default_memo_capacity() {
  if (const char* env = std::getenv("ISOSR_MEMO_CAP")) {
    char* end = nullptr;
    const unsigned long long n = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return static_cast<std::size_t>(n);
  }
  return 200'000;
}

std::vector<double> round_significant(std::span<const double> params, int digits) {
  std::vector<double> out;
  out.reserve(params.size());
  for (double x : params) {
    if (!std::isfinite(x) || x == 0.0) {
      out.push_back(x);
      continue;
    }
    out.push_back(std::strtod(fmt::format("{:.{}g}", x, digits).c_str(), nullptr));
  }
  return out;
}

ConstraintChecker::ConstraintChecker(CheckerConfig config) : config_(config) {}

void ConstraintChecker::clear() {
  std::unique_lock lock(mutex_);
  memo_.clear();
}

ConstraintVerdict ConstraintChecker::check(const Expr& e, std::span<const double> params, unsigned mask,
                                           const MonotonicityOptions* range) {
  ++invocations_;
  const MonotonicityOptions& r = range ? *range : config_.range;
  const auto used = params.first(std::min<std::size_t>(params.size(), e.max_param_index()));
  const auto rounded = round_significant(used);
  if (config_.memo_capacity == 0) return check_all(e, rounded, config_.budget, r, mask);

  std::string key = render(e);
  key += fmt::format("|{}|{:.6g}|{:.6g}", mask, r.start, r.stop);
  for (double x : rounded) key += fmt::format("|{:.6g}", x);
  {
    std::shared_lock lock(mutex_);
    auto it = memo_.find(key);
    if (it != memo_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ConstraintVerdict v = check_all(e, rounded, config_.budget, r, mask);
  // Timeouts depend on machine load, so they are never memoized.
  if (v.timed_out[0] || v.timed_out[1] || v.timed_out[2]) return v;
  std::unique_lock lock(mutex_);
  if (memo_.size() >= config_.memo_capacity) memo_.clear();
  memo_.emplace(std::move(key), v);
  return v;
}

}  // namespace isosr
