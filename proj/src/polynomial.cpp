#include "isosr/polynomial.hpp"

#include <algorithm>
#include <stdexcept>

namespace isosr {

// ---------------------------------------------------------------------------
// UPoly

UPoly::UPoly(std::vector<Rational> ascending) : c_(std::move(ascending)) { trim(); }

UPoly UPoly::constant(const Rational& c) { return UPoly({c}); }

UPoly UPoly::monomial(const Rational& c, int degree) {
  std::vector<Rational> v(static_cast<std::size_t>(degree) + 1);
  v.back() = c;
  return UPoly(std::move(v));
}

void UPoly::trim() {
  while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
}

int UPoly::order() const {
  for (std::size_t k = 0; k < c_.size(); ++k)
    if (sgn(c_[k]) != 0) return static_cast<int>(k);
  return -1;
}

Rational UPoly::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(c_.size())) return 0;
  return c_[static_cast<std::size_t>(k)];
}

UPoly UPoly::operator+(const UPoly& o) const {
  std::vector<Rational> v(std::max(c_.size(), o.c_.size()));
  for (std::size_t k = 0; k < c_.size(); ++k) v[k] = c_[k];
  for (std::size_t k = 0; k < o.c_.size(); ++k) v[k] += o.c_[k];
  return UPoly(std::move(v));
}

UPoly UPoly::operator-(const UPoly& o) const {
  std::vector<Rational> v(std::max(c_.size(), o.c_.size()));
  for (std::size_t k = 0; k < c_.size(); ++k) v[k] = c_[k];
  for (std::size_t k = 0; k < o.c_.size(); ++k) v[k] -= o.c_[k];
  return UPoly(std::move(v));
}

UPoly UPoly::operator*(const UPoly& o) const {
  if (is_zero() || o.is_zero()) return {};
  std::vector<Rational> v(c_.size() + o.c_.size() - 1);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (sgn(c_[i]) == 0) continue;
    for (std::size_t j = 0; j < o.c_.size(); ++j) v[i + j] += c_[i] * o.c_[j];
  }
  return UPoly(std::move(v));
}

UPoly UPoly::operator*(const Rational& s) const {
  std::vector<Rational> v(c_);
  for (auto& x : v) x *= s;
  return UPoly(std::move(v));
}

UPoly UPoly::operator/(const Rational& s) const {
  if (sgn(s) == 0) throw std::domain_error("polynomial division by zero scalar");
  std::vector<Rational> v(c_);
  for (auto& x : v) x /= s;
  return UPoly(std::move(v));
}

UPoly UPoly::pow(int n) const {
  if (n < 0) throw std::domain_error("negative polynomial power");
  UPoly result = constant(1);
  UPoly base = *this;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

UPoly UPoly::derivative() const {
  if (c_.size() <= 1) return {};
  std::vector<Rational> v(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) v[k - 1] = c_[k] * static_cast<long>(k);
  return UPoly(std::move(v));
}

void UPoly::divmod(const UPoly& d, UPoly& q, UPoly& r) const {
  if (d.is_zero()) throw std::domain_error("polynomial division by zero");
  std::vector<Rational> rem(c_);
  int dd = d.degree();
  int qd = degree() - dd;
  std::vector<Rational> quot(static_cast<std::size_t>(std::max(qd + 1, 0)));
  for (int k = qd; k >= 0; --k) {
    Rational f = rem[static_cast<std::size_t>(k + dd)] / d.leading();
    quot[static_cast<std::size_t>(k)] = f;
    if (sgn(f) == 0) continue;
    for (int j = 0; j <= dd; ++j) rem[static_cast<std::size_t>(k + j)] -= f * d.c_[static_cast<std::size_t>(j)];
  }
  q = UPoly(std::move(quot));
  r = UPoly(std::move(rem));
}

UPoly UPoly::monic() const {
  if (is_zero()) return {};
  return *this / leading();
}

double UPoly::evaluate(double p) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * p + it->get_d();
  return acc;
}

UPoly gcd(UPoly a, UPoly b) {
  while (!b.is_zero()) {
    UPoly q, r;
    a.divmod(b, q, r);
    a = std::move(b);
    b = std::move(r);
  }
  return a.monic();
}

// ---------------------------------------------------------------------------
// univariate reduction

namespace {

using Status = RationalStatus;

UnivariateResult ok(UPoly num, UPoly den) {
  UnivariateResult r;
  r.status = Status::Ok;
  r.value = {std::move(num), std::move(den)};
  return r;
}

UnivariateResult with_status(Status s) {
  UnivariateResult r;
  r.status = s;
  return r;
}

UnivariateResult power(const URational& x, std::int64_t n) {
  if (n >= 0) return ok(x.num.pow(static_cast<int>(n)), x.den.pow(static_cast<int>(n)));
  if (x.num.is_zero()) return with_status(Status::Undefined);
  return ok(x.den.pow(static_cast<int>(-n)), x.num.pow(static_cast<int>(-n)));
}

UnivariateResult reduce(const Expr& e, std::span<const Rational> values) {
  switch (e.kind()) {
    case NodeKind::Variable: return ok(UPoly::monomial(1, 1), UPoly::constant(1));
    case NodeKind::Parameter: {
      auto k = static_cast<std::size_t>(e.param_index() - 1);
      if (k >= values.size()) throw std::invalid_argument("missing parameter value");
      return ok(UPoly::constant(values[k]), UPoly::constant(1));
    }
    case NodeKind::Integer: return ok(UPoly::constant(Rational(static_cast<long>(e.integer_value()))), UPoly::constant(1));
    case NodeKind::Operator: break;
  }
  if (e.op() == OpKind::Sqrt) return with_status(Status::NotRational);
  if (e.op() == OpKind::Pow && !e.child(1).is_integer()) return with_status(Status::NotRational);

  UnivariateResult a = reduce(e.child(0), values);
  if (a.status != Status::Ok) return a;
  const URational& x = a.value;
  switch (e.op()) {
    case OpKind::Square: return power(x, 2);
    case OpKind::Cube: return power(x, 3);
    case OpKind::Pow: {
      std::int64_t n = e.child(1).integer_value();
      if (n > 64 || n < -64) return with_status(Status::NotRational);
      return power(x, n);
    }
    default: break;
  }
  UnivariateResult b = reduce(e.child(1), values);
  if (b.status != Status::Ok) return b;
  const URational& y = b.value;
  switch (e.op()) {
    case OpKind::Add:
      if (x.den == y.den) return ok(x.num + y.num, x.den);
      return ok(x.num * y.den + y.num * x.den, x.den * y.den);
    case OpKind::Sub:
      if (x.den == y.den) return ok(x.num - y.num, x.den);
      return ok(x.num * y.den - y.num * x.den, x.den * y.den);
    case OpKind::Mul: return ok(x.num * y.num, x.den * y.den);
    case OpKind::Div:
      if (y.num.is_zero()) return with_status(Status::Undefined);
      return ok(x.num * y.den, x.den * y.num);
    default: return with_status(Status::NotRational);
  }
}

}  // namespace

UnivariateResult to_univariate(const Expr& e, std::span<const Rational> values) { return reduce(e, values); }

URational normalize_monic(const URational& r) {
  if (r.den.is_zero()) throw std::domain_error("zero denominator");
  if (r.num.is_zero()) return {UPoly(), UPoly::constant(1)};
  UPoly g = gcd(r.num, r.den);
  UPoly num, den, rem;
  r.num.divmod(g, num, rem);
  r.den.divmod(g, den, rem);
  Rational lc = den.leading();
  return {num / lc, den / lc};
}

// ---------------------------------------------------------------------------
// MPoly

MPoly MPoly::constant(const Rational& c) {
  MPoly m;
  if (sgn(c) != 0) m.terms_[Monomial{}] = c;
  return m;
}

MPoly MPoly::variable(int var) {
  MPoly m;
  Monomial mono(static_cast<std::size_t>(var) + 1, 0);
  mono.back() = 1;
  m.terms_[mono] = 1;
  return m;
}

bool MPoly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

void MPoly::add_term(const Monomial& m, const Rational& c) {
  Monomial key = m;
  while (!key.empty() && key.back() == 0) key.pop_back();
  auto [it, inserted] = terms_.emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0) terms_.erase(it);
  } else if (sgn(c) == 0) {
    terms_.erase(it);
  }
}

MPoly MPoly::operator+(const MPoly& o) const {
  MPoly r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

MPoly MPoly::operator-(const MPoly& o) const {
  MPoly r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
  return r;
}

MPoly MPoly::operator*(const MPoly& o) const {
  MPoly r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m(std::max(ma.size(), mb.size()), 0);
      for (std::size_t i = 0; i < ma.size(); ++i) m[i] += ma[i];
      for (std::size_t i = 0; i < mb.size(); ++i) m[i] += mb[i];
      r.add_term(m, ca * cb);
    }
  }
  return r;
}

MPoly MPoly::pow(int n) const {
  if (n < 0) throw std::domain_error("negative polynomial power");
  MPoly r = constant(1);
  for (int i = 0; i < n; ++i) r = r * *this;
  return r;
}

MPoly MPoly::scaled(const Rational& s) const {
  MPoly r;
  for (const auto& [m, c] : terms_) r.add_term(m, c * s);
  return r;
}

MPoly::Monomial MPoly::common_monomial() const {
  if (terms_.empty()) return {};
  Monomial common = terms_.begin()->first;
  for (const auto& [m, c] : terms_) {
    common.resize(std::min(common.size(), m.size()));
    for (std::size_t i = 0; i < common.size(); ++i) common[i] = std::min(common[i], m[i]);
  }
  while (!common.empty() && common.back() == 0) common.pop_back();
  return common;
}

MPoly MPoly::divided_by_monomial(const Monomial& d) const {
  MPoly r;
  for (const auto& [m, c] : terms_) {
    Monomial q = m;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i >= q.size() || q[i] < d[i]) throw std::domain_error("monomial does not divide polynomial");
      q[i] -= d[i];
    }
    r.add_term(q, c);
  }
  return r;
}

namespace {

std::optional<MRational> mpower(const MRational& x, std::int64_t n) {
  if (n >= 0) return MRational{x.num.pow(static_cast<int>(n)), x.den.pow(static_cast<int>(n))};
  if (x.num.is_zero()) return std::nullopt;
  return MRational{x.den.pow(static_cast<int>(-n)), x.num.pow(static_cast<int>(-n))};
}

std::optional<MRational> mreduce(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Variable: return MRational{MPoly::variable(0), MPoly::constant(1)};
    case NodeKind::Parameter: return MRational{MPoly::variable(e.param_index()), MPoly::constant(1)};
    case NodeKind::Integer: return MRational{MPoly::constant(Rational(static_cast<long>(e.integer_value()))), MPoly::constant(1)};
    case NodeKind::Operator: break;
  }
  if (e.op() == OpKind::Sqrt) return std::nullopt;
  if (e.op() == OpKind::Pow && !e.child(1).is_integer()) return std::nullopt;
  auto a = mreduce(e.child(0));
  if (!a) return a;
  switch (e.op()) {
    case OpKind::Square: return mpower(*a, 2);
    case OpKind::Cube: return mpower(*a, 3);
    case OpKind::Pow: {
      std::int64_t n = e.child(1).integer_value();
      if (n > 16 || n < -16) return std::nullopt;
      return mpower(*a, n);
    }
    default: break;
  }
  auto b = mreduce(e.child(1));
  if (!b) return b;
  const MRational& x = *a;
  const MRational& y = *b;
  bool same_den = (x.den - y.den).is_zero();
  switch (e.op()) {
    case OpKind::Add:
      if (same_den) return MRational{x.num + y.num, x.den};
      return MRational{x.num * y.den + y.num * x.den, x.den * y.den};
    case OpKind::Sub:
      if (same_den) return MRational{x.num - y.num, x.den};
      return MRational{x.num * y.den - y.num * x.den, x.den * y.den};
    case OpKind::Mul: return MRational{x.num * y.num, x.den * y.den};
    case OpKind::Div:
      if (y.num.is_zero()) return std::nullopt;
      return MRational{x.num * y.den, x.den * y.num};
    default: return std::nullopt;
  }
}

Expr power_of(const Expr& base, int e) {
  if (e == 1) return base;
  return pow(base, Expr::integer(e));
}

Expr rational_literal(const Rational& q) {
  Expr n = Expr::integer(q.get_num().get_si());
  if (q.get_den() == 1) return n;
  return n / Expr::integer(q.get_den().get_si());
}

}  // namespace

std::optional<MRational> to_multivariate(const Expr& e) {
  auto r = mreduce(e);
  if (!r) return r;
  if (r->num.is_zero()) return MRational{MPoly(), MPoly::constant(1)};
  auto common_num = r->num.common_monomial();
  auto common_den = r->den.common_monomial();
  MPoly::Monomial shared(std::min(common_num.size(), common_den.size()));
  for (std::size_t i = 0; i < shared.size(); ++i) shared[i] = std::min(common_num[i], common_den[i]);
  if (std::any_of(shared.begin(), shared.end(), [](int x) { return x > 0; })) {
    r->num = r->num.divided_by_monomial(shared);
    r->den = r->den.divided_by_monomial(shared);
  }
  if (r->den.is_constant()) {
    Rational c = r->den.terms().begin()->second;
    r->num = r->num.scaled(1 / c);
    r->den = MPoly::constant(1);
  }
  return r;
}

Expr to_expr(const MPoly& poly) {
  if (poly.is_zero()) return Expr::integer(0);
  // highest p-degree first, then by parameter monomial
  std::vector<std::pair<MPoly::Monomial, Rational>> terms(poly.terms().begin(), poly.terms().end());
  std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    int da = a.first.empty() ? 0 : a.first[0];
    int db = b.first.empty() ? 0 : b.first[0];
    return da > db;
  });
  std::optional<Expr> sum;
  for (const auto& [mono, coef] : terms) {
    std::optional<Expr> factor;
    auto times = [&factor](const Expr& f) { factor = factor ? *factor * f : f; };
    for (std::size_t v = 1; v < mono.size(); ++v)
      if (mono[v] > 0) times(power_of(Expr::parameter(static_cast<int>(v)), mono[v]));
    if (!mono.empty() && mono[0] > 0) times(power_of(Expr::variable(), mono[0]));
    Rational mag = abs(coef);
    bool negative = sgn(coef) < 0;
    Expr term = !factor ? rational_literal(mag) : (mag == 1 ? *factor : rational_literal(mag) * *factor);
    if (!sum) {
      sum = negative ? Expr::integer(0) - term : term;
    } else {
      sum = negative ? *sum - term : *sum + term;
    }
  }
  return *sum;
}

std::string to_string(const Rational& q) { return q.get_str(); }

}  // namespace isosr
