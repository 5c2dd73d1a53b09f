#include "isosr/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isosr/polynomial.hpp"

namespace isosr {

namespace {

Expr lit(std::int64_t v) { return Expr::integer(v); }

// True when the subtree can never be undefined (no division, sqrt or power).
bool is_total(const Expr& e) {
  if (e.is_leaf()) return true;
  OpKind op = e.op();
  if (op == OpKind::Div || op == OpKind::Sqrt || op == OpKind::Pow) return false;
  for (int i = 0; i < e.child_count(); ++i)
    if (!is_total(e.child(i))) return false;
  return true;
}

std::optional<std::int64_t> fold_binary(OpKind op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  switch (op) {
    case OpKind::Add:
      if (__builtin_add_overflow(a, b, &r)) return std::nullopt;
      return r;
    case OpKind::Sub:
      if (__builtin_sub_overflow(a, b, &r)) return std::nullopt;
      return r;
    case OpKind::Mul:
      if (__builtin_mul_overflow(a, b, &r)) return std::nullopt;
      return r;
    case OpKind::Div:
      if (b == 0 || a % b != 0) return std::nullopt;
      return a / b;
    case OpKind::Pow: {
      if (b < 0 || b > 62) return std::nullopt;
      r = 1;
      for (std::int64_t i = 0; i < b; ++i)
        if (__builtin_mul_overflow(r, a, &r)) return std::nullopt;
      return r;
    }
    default: return std::nullopt;
  }
}

std::optional<std::int64_t> fold_unary(OpKind op, std::int64_t a) {
  switch (op) {
    case OpKind::Square: return fold_binary(OpKind::Mul, a, a);
    case OpKind::Cube: {
      auto sq = fold_binary(OpKind::Mul, a, a);
      if (!sq) return sq;
      return fold_binary(OpKind::Mul, *sq, a);
    }
    case OpKind::Sqrt: {
      if (a < 0) return std::nullopt;
      auto s = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(a))));
      if (s * s == a) return s;
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

Expr simplify_unary(OpKind op, const Expr& a) {
  if (a.is_integer())
    if (auto v = fold_unary(op, a.integer_value())) return lit(*v);
  return Expr::unary(op, a);
}

Expr simplify_binary(OpKind op, const Expr& a, const Expr& b) {
  if (a.is_integer() && b.is_integer())
    if (auto v = fold_binary(op, a.integer_value(), b.integer_value())) return lit(*v);
  switch (op) {
    case OpKind::Add:
      if (a.is_integer(0)) return b;
      if (b.is_integer(0)) return a;
      if (a == b) return simplify_binary(OpKind::Mul, lit(2), a);
      break;
    case OpKind::Sub:
      if (b.is_integer(0)) return a;
      if (a == b && is_total(a)) return lit(0);
      break;
    case OpKind::Mul:
      if ((a.is_integer(0) && is_total(b)) || (b.is_integer(0) && is_total(a))) return lit(0);
      if (a.is_integer(1)) return b;
      if (b.is_integer(1)) return a;
      if (a.is_integer() && !b.is_leaf() && b.op() == OpKind::Mul && b.child(0).is_integer())
        if (auto v = fold_binary(OpKind::Mul, a.integer_value(), b.child(0).integer_value()))
          return simplify_binary(OpKind::Mul, lit(*v), b.child(1));
      break;
    case OpKind::Div:
      if (b.is_integer(0)) break;
      if (b.is_integer(1)) return a;
      if (a.is_integer(0) && is_total(b)) return lit(0);
      if (a == b && is_total(a)) return lit(1);
      break;
    case OpKind::Pow:
      if (b.is_integer(1)) return a;
      if (b.is_integer(0) && is_total(a)) return lit(1);
      break;
    default: break;
  }
  return Expr::binary(op, a, b);
}

Expr simplify_rec(const Expr& e) {
  if (e.is_leaf()) return e;
  if (e.child_count() == 1) {
    Expr a = simplify_rec(e.child(0));
    Expr r = simplify_unary(e.op(), a);
    return r == e ? e : r;
  }
  Expr a = simplify_rec(e.child(0));
  Expr b = simplify_rec(e.child(1));
  Expr r = simplify_binary(e.op(), a, b);
  return r == e ? e : r;
}

Expr d(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Variable: return lit(1);
    case NodeKind::Parameter:
    case NodeKind::Integer: return lit(0);
    case NodeKind::Operator: break;
  }
  if (!e.contains_variable()) return lit(0);
  const Expr a = e.child(0);
  switch (e.op()) {
    case OpKind::Add: return d(a) + d(e.child(1));
    case OpKind::Sub: return d(a) - d(e.child(1));
    case OpKind::Mul: {
      const Expr b = e.child(1);
      return d(a) * b + a * d(b);
    }
    case OpKind::Div: {
      const Expr b = e.child(1);
      return (d(a) * b - a * d(b)) / square(b);
    }
    case OpKind::Sqrt: return d(a) / (lit(2) * sqrt(a));
    case OpKind::Square: return lit(2) * a * d(a);
    case OpKind::Cube: return lit(3) * square(a) * d(a);
    case OpKind::Pow: {
      const Expr g = e.child(1);
      if (g.contains_variable()) throw std::domain_error("cannot differentiate a power with a p-dependent exponent");
      return g * pow(a, g - lit(1)) * d(a);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Expr differentiate(const Expr& e) { return simplify(d(e)); }

Expr simplify(const Expr& e) {
  Expr cur = e;
  for (int pass = 0; pass < 8; ++pass) {
    Expr next = simplify_rec(cur);
    if (next == cur) return next;
    cur = next;
  }
  return cur;
}

Expr together(const Expr& e) {
  auto r = to_multivariate(e);
  if (!r) return e;
  Expr num = to_expr(r->num);
  if (r->den.is_constant()) return num;
  return num / to_expr(r->den);
}

std::vector<std::int64_t> prime_sequence(int count, int offset) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(count));
  int seen = 0;
  for (std::int64_t n = 2; static_cast<int>(out.size()) < count; ++n) {
    bool prime = true;
    for (std::int64_t f = 2; f * f <= n; ++f)
      if (n % f == 0) {
        prime = false;
        break;
      }
    if (!prime) continue;
    if (seen++ >= offset) out.push_back(n);
  }
  return out;
}

namespace {

Expr substitute_values(const Expr& e, const std::vector<std::int64_t>& values) {
  if (e.is_parameter()) return lit(values[static_cast<std::size_t>(e.param_index() - 1)]);
  if (e.is_leaf()) return e;
  if (e.child_count() == 1) return Expr::unary(e.op(), substitute_values(e.child(0), values));
  return Expr::binary(e.op(), substitute_values(e.child(0), values), substitute_values(e.child(1), values));
}

}  // namespace

PrimeSubstitution substitute_primes(const Expr& e, int offset) {
  int k = e.max_param_index();
  std::vector<std::int64_t> primes = prime_sequence(k, offset);
  PrimeSubstitution out{substitute_values(e, primes), {}};
  std::vector<bool> used(static_cast<std::size_t>(k) + 1, false);
  for (const Expr& n : preorder(e))
    if (n.is_parameter()) used[static_cast<std::size_t>(n.param_index())] = true;
  for (int i = 1; i <= k; ++i)
    if (used[static_cast<std::size_t>(i)]) out.mapping.emplace_back(i, primes[static_cast<std::size_t>(i - 1)]);
  return out;
}

// ---------------------------------------------------------------------------
// canonical form

namespace {

enum class SlotKind { Param, PlusOne, MinusOne };

SlotKind slot_kind(const Rational& c) {
  if (c == 1) return SlotKind::PlusOne;
  if (c == -1) return SlotKind::MinusOne;
  return SlotKind::Param;
}

struct Built {
  Expr tree;
  std::vector<Rational> slot_values;  // value of provisional parameter k at k-1
};

Expr power_of_p(int degree) {
  if (degree == 1) return Expr::variable();
  return pow(Expr::variable(), lit(degree));
}

Expr build_polynomial(const UPoly& poly, std::vector<Rational>& slots) {
  struct Term {
    int degree;
    SlotKind kind;
    Rational value;
  };
  std::vector<Term> terms;
  for (int k = 0; k <= poly.degree(); ++k) {
    const Rational c = poly.coeff(k);
    if (sgn(c) != 0) terms.push_back({k, slot_kind(c), c});
  }
  auto positive = [](const Term& t) { return t.kind != SlotKind::MinusOne; };
  auto emit = [&slots](const Term& t) {
    Expr power = t.degree == 0 ? lit(1) : power_of_p(t.degree);
    if (t.kind != SlotKind::Param) return power;
    slots.push_back(t.value);
    Expr c = Expr::parameter(static_cast<int>(slots.size()));
    return t.degree == 0 ? c : c * power;
  };

  auto first = std::find_if(terms.begin(), terms.end(), positive);
  if (first == terms.end()) {
    // every coefficient is -1
    std::optional<Expr> sum;
    for (const Term& t : terms) sum = sum ? *sum + emit(t) : emit(t);
    return lit(-1) * *sum;
  }
  Expr sum = emit(*first);
  for (auto it = terms.begin(); it != terms.end(); ++it) {
    if (it == first) continue;
    sum = it->kind == SlotKind::MinusOne ? sum - emit(*it) : sum + emit(*it);
  }
  return sum;
}

Built build_rational(const URational& r) {
  Built out;
  if (r.num.is_zero()) {
    out.tree = lit(0);
    return out;
  }
  Expr num = build_polynomial(r.num, out.slot_values);
  if (r.den.degree() == 0) {
    out.tree = num;
  } else {
    out.tree = num / build_polynomial(r.den, out.slot_values);
  }
  return out;
}

std::vector<int> signature(const URational& r) {
  std::vector<int> sig;
  for (const UPoly* poly : {&r.num, &r.den}) {
    for (int k = 0; k <= poly->degree(); ++k) {
      const Rational c = poly->coeff(k);
      if (sgn(c) == 0) continue;
      sig.push_back(k * 3 + static_cast<int>(slot_kind(c)));
    }
    sig.push_back(-1);
  }
  return sig;
}

std::vector<Rational> exact_values(std::span<const double> v) {
  std::vector<Rational> out;
  out.reserve(v.size());
  for (double x : v) out.emplace_back(x);
  return out;
}

std::vector<Rational> prime_values(int count, int offset) {
  std::vector<Rational> out;
  for (std::int64_t p : prime_sequence(count, offset)) out.emplace_back(static_cast<long>(p));
  return out;
}

CanonicalForm finish(Built built, bool rational, bool unreliable) {
  CanonicalForm cf;
  std::vector<int> old_of;
  cf.tree = renumber_parameters(built.tree, &old_of);
  for (int old : old_of) {
    const Rational& q = built.slot_values[static_cast<std::size_t>(old - 1)];
    cf.coefficients.push_back(q.get_d());
    if (rational) cf.exact_coefficients.push_back(to_string(q));
  }
  cf.text = render(cf.tree);
  cf.parameter_count = static_cast<int>(old_of.size());
  cf.complexity = complexity(cf.tree);
  cf.rational = rational;
  cf.unreliable = unreliable;
  return cf;
}

CanonicalForm non_rational(const Expr& e, const std::vector<Rational>& values) {
  Built built;
  built.tree = simplify(e);
  built.slot_values = values;
  return finish(std::move(built), false, false);
}

}  // namespace

CanonicalForm canonical_form(const Expr& e, std::optional<std::span<const double>> fitted) {
  const int k = e.max_param_index();
  if (fitted && static_cast<int>(fitted->size()) < k)
    throw std::invalid_argument("canonical_form: fewer fitted values than parameters");

  if (fitted) {
    std::vector<Rational> values = exact_values(*fitted);
    UnivariateResult r = to_univariate(e, values);
    if (r.status != RationalStatus::Ok) return non_rational(e, values);
    return finish(build_rational(normalize_monic(r.value)), true, false);
  }

  constexpr int kSequences = 6;
  const int stride = std::max(k, 1);
  auto at_offset = [](CanonicalForm cf, int offset) {
    cf.prime_offset = offset;
    return cf;
  };
  std::vector<URational> normalized;
  std::vector<std::vector<int>> sigs;
  for (int s = 0; s < kSequences; ++s) {
    std::vector<Rational> values = prime_values(k, s * stride);
    UnivariateResult r = to_univariate(e, values);
    if (r.status != RationalStatus::Ok) return at_offset(non_rational(e, prime_values(k, 0)), 0);
    normalized.push_back(normalize_monic(r.value));
    sigs.push_back(signature(normalized.back()));
    if (k == 0) return at_offset(finish(build_rational(normalized.back()), true, false), 0);
    if (s > 0 && sigs[static_cast<std::size_t>(s)] == sigs[static_cast<std::size_t>(s - 1)])
      return at_offset(finish(build_rational(normalized[static_cast<std::size_t>(s - 1)]), true, false),
                       (s - 1) * stride);
  }
  return at_offset(finish(build_rational(normalized.front()), true, true), 0);
}

bool equivalent_numeric(const Expr& a, const Expr& b, std::span<const double> params_a,
                        std::span<const double> params_b) {
  constexpr int kPoints = 50;
  const double lo = std::log10(1e-6), hi = std::log10(1e3);
  for (int i = 0; i < kPoints; ++i) {
    double p = std::pow(10.0, lo + (hi - lo) * i / (kPoints - 1));
    auto va = evaluate(a, params_a, p);
    auto vb = evaluate(b, params_b, p);
    if (!va && !vb) continue;
    if (!va || !vb) return false;
    if (std::abs(*va - *vb) > 1e-9 * (1.0 + std::abs(*va))) return false;
  }
  return true;
}

}  // namespace isosr
