#include "series.hpp"

#include <algorithm>
#include <cmath>

namespace isosr::detail {
namespace {

constexpr int kMaxTerms = 10;
constexpr double kExpEps = 1e-9;
constexpr double kCancel = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double lead(const Series& s) { return s.terms.empty() ? s.order : s.terms.front().exponent; }

void normalize(Series& s) {
  std::sort(s.terms.begin(), s.terms.end(),
            [](const SeriesTerm& a, const SeriesTerm& b) { return a.exponent < b.exponent; });
  std::vector<SeriesTerm> out;
  std::vector<double> scale;  // largest magnitude merged into each slot
  for (const auto& t : s.terms) {
    if (!out.empty() && std::abs(out.back().exponent - t.exponent) <= kExpEps) {
      out.back().coef += t.coef;
      scale.back() = std::max(scale.back(), std::abs(t.coef));
    } else {
      out.push_back(t);
      scale.push_back(std::abs(t.coef));
    }
  }
  std::vector<SeriesTerm> kept;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].exponent >= s.order - kExpEps) break;
    if (std::abs(out[i].coef) <= kCancel * scale[i] || out[i].coef == 0.0) continue;
    if (static_cast<int>(kept.size()) == kMaxTerms) {
      s.order = out[i].exponent;
      break;
    }
    kept.push_back(out[i]);
  }
  s.terms = std::move(kept);
  for (const auto& t : s.terms) {
    if (!std::isfinite(t.coef)) {
      s = Series::unknown();
      return;
    }
  }
}

Series propagate(const Series& a, const Series& b) {
  if (a.state == Series::State::Undefined || b.state == Series::State::Undefined) return Series::undefined();
  return Series::unknown();
}

Series constant(double c) {
  Series s;
  if (c != 0.0) s.terms.push_back({0.0, c});
  return s;
}

Series add(const Series& a, const Series& b, double sign) {
  if (!a.ok() || !b.ok()) return propagate(a, b);
  Series r;
  r.order = std::min(a.order, b.order);
  r.terms = a.terms;
  for (auto t : b.terms) r.terms.push_back({t.exponent, sign * t.coef});
  normalize(r);
  return r;
}

Series mul(const Series& a, const Series& b) {
  if (!a.ok() || !b.ok()) return propagate(a, b);
  Series r;
  r.order = std::min(lead(a) + b.order, lead(b) + a.order);
  if (std::isnan(r.order)) r.order = kInf;
  for (const auto& x : a.terms)
    for (const auto& y : b.terms) r.terms.push_back({x.exponent + y.exponent, x.coef * y.coef});
  normalize(r);
  return r;
}

Series truncated(Series s, double horizon) {
  s.order = std::min(s.order, horizon);
  normalize(s);
  return s;
}

// c0^r p^(e0 r) (1 + u)^r by the binomial series.
Series power_real(const Series& b, double r) {
  if (!b.ok()) return b;
  if (b.terms.empty()) {
    if (b.order == kInf) return r > 0 ? constant(0.0) : Series::undefined();
    return Series::unknown();
  }
  const double c0 = b.terms.front().coef;
  const double e0 = b.terms.front().exponent;
  const bool integral = r == std::round(r);
  if (c0 < 0 && !integral) return Series::undefined();

  Series u;
  u.order = b.order - e0;
  for (std::size_t i = 1; i < b.terms.size(); ++i)
    u.terms.push_back({b.terms[i].exponent - e0, b.terms[i].coef / c0});
  normalize(u);

  Series sum = constant(1.0);
  const double ulead = lead(u);
  if (ulead < kInf) {
    const double horizon = std::min(u.order, ulead * kMaxTerms);
    sum.order = horizon;
    Series power = constant(1.0);
    double binom = 1.0;
    for (int n = 1; n * ulead < horizon + kExpEps && n <= 4 * kMaxTerms; ++n) {
      binom *= (r - (n - 1)) / n;
      power = truncated(mul(power, u), horizon);
      if (!power.ok()) return power;
      if (binom == 0.0) break;
      for (auto t : power.terms) sum.terms.push_back({t.exponent, binom * t.coef});
    }
    normalize(sum);
  } else {
    sum.order = u.order;
  }

  const double scale = std::pow(c0, r);
  Series res;
  res.order = sum.order + e0 * r;
  for (auto t : sum.terms) res.terms.push_back({t.exponent + e0 * r, scale * t.coef});
  normalize(res);
  return res;
}

Series power_int(const Series& b, long n) {
  if (n < 0) return power_real(power_int(b, -n), -1.0);
  Series r = constant(1.0);
  for (long i = 0; i < n; ++i) {
    r = mul(r, b);
    if (!r.ok()) return r;
  }
  return r;
}

Series expand(const Expr& e, std::span<const double> params) {
  switch (e.kind()) {
    case NodeKind::Variable: {
      Series s;
      s.terms.push_back({1.0, 1.0});
      return s;
    }
    case NodeKind::Parameter:
      return constant(params[static_cast<std::size_t>(e.param_index() - 1)]);
    case NodeKind::Integer:
      return constant(static_cast<double>(e.integer_value()));
    case NodeKind::Operator:
      break;
  }
  const OpKind op = e.op();
  if (op == OpKind::Pow) {
    const Expr ex = e.child(1);
    if (ex.contains_variable()) return Series::unknown();
    auto r = evaluate(ex, params, 1.0);
    if (!r) return Series::undefined();
    Series base = expand(e.child(0), params);
    if (*r == std::round(*r) && std::abs(*r) <= 16) return power_int(base, std::lround(*r));
    return power_real(base, *r);
  }
  Series a = expand(e.child(0), params);
  switch (op) {
    case OpKind::Sqrt:
      return power_real(a, 0.5);
    case OpKind::Square:
      return mul(a, a);
    case OpKind::Cube:
      return mul(mul(a, a), a);
    default:
      break;
  }
  Series b = expand(e.child(1), params);
  switch (op) {
    case OpKind::Add:
      return add(a, b, 1.0);
    case OpKind::Sub:
      return add(a, b, -1.0);
    case OpKind::Mul:
      return mul(a, b);
    case OpKind::Div:
      if (!a.ok() || !b.ok()) return propagate(a, b);
      if (b.terms.empty() && b.order == kInf) return Series::undefined();
      return mul(a, power_real(b, -1.0));
    default:
      return Series::unknown();
  }
}

}  // namespace

Series expand_series(const Expr& e, std::span<const double> params) {
  if (static_cast<std::size_t>(e.max_param_index()) > params.size())
    throw std::invalid_argument("expand_series: not enough parameter values");
  return expand(e, params);
}

}  // namespace isosr::detail
