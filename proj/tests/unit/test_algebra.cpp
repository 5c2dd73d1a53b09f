#include <doctest.h>

#include <cmath>

#include "isosr/algebra.hpp"
#include "isosr/polynomial.hpp"
#include "oracles.hpp"

using namespace isosr;
using oracle::Big;

namespace {

std::vector<double> positive_params(int k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.2, 5.0);
  std::vector<double> v(static_cast<std::size_t>(k));
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> as_double(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

// Random tree over {+, -, *, /}. Nested square/cube expand to polynomials of
// degree 30+ whose double evaluation is too ill-conditioned for 1e-9 checks.
Expr random_rational_tree(Rng& rng, int target) {
  RandomTreeConfig cfg;
  cfg.target_size = target;
  cfg.max_size = 15;
  return random_tree(cfg, OpSet::genetic(), rng);
}

}  // namespace

TEST_CASE("derivative examples") {
  CHECK(render(differentiate(parse("c1*p"))) == "c1");
  CHECK(render(differentiate(parse("c1"))) == "0");

  const Expr lang = differentiate(parse("c1*p/(c2+p)"));
  const Expr expected = parse("c1*c2/(c2+p)^2");
  const double params[] = {5, 2};
  CHECK(equivalent_numeric(lang, expected, params, params));

  const Expr root = differentiate(parse("sqrt(p)"));
  CHECK(equivalent_numeric(root, parse("1/(2*sqrt(p))"), {}, {}));
  CHECK_THROWS_AS(differentiate(parse("p^p")), std::domain_error);
}

TEST_CASE("derivative agrees with high-precision central differences") {
  Rng rng(11);
  RandomTreeConfig cfg;
  int compared = 0;
  for (int i = 0; i < 1000; ++i) {
    const Expr f = random_tree(cfg, OpSet::bayesian(), rng);
    const auto params = positive_params(f.max_param_index(), rng);
    const auto big = oracle::to_big(params);
    const Expr df = differentiate(f);
    for (double p : {0.1, 1.0, 10.0}) {
      const Big h = Big(p) * Big("1e-6");
      auto hi = oracle::eval<Big>(f, big, Big(p) + h);
      auto lo = oracle::eval<Big>(f, big, Big(p) - h);
      auto sym = evaluate(df, params, p);
      if (!hi || !lo || !sym || !oracle::eval<Big>(f, big, Big(p))) continue;
      const double fd = static_cast<double>((*hi - *lo) / (2 * h));
      if (!std::isfinite(fd) || std::abs(fd) > 1e12) continue;
      CHECK_MESSAGE(std::abs(*sym - fd) <= 1e-5 * std::max(std::abs(fd), 1.0), render(f), " at p=", p);
      ++compared;
    }
  }
  CHECK(compared > 2000);
}

TEST_CASE("simplify examples") {
  CHECK(render(simplify(parse("(c1*p + 0)/(1*(c2+p))"))) == "(c1 * p) / (c2 + p)");
  CHECK(render(simplify(parse("p/p"))) == "1");
  CHECK(render(simplify(parse("p - p + c1"))) == "c1");
  CHECK(render(simplify(parse("(2 + 3) * p"))) == "5 * p");
  // x/x only folds when x can never be undefined
  CHECK(simplify(parse("(1/p)/(1/p)")) == parse("(1/p)/(1/p)"));
}

TEST_CASE("common denominator") {
  const Expr e = parse("c1/(p+c2) + c3");
  const Expr t = together(e);
  REQUIRE_FALSE(t.is_leaf());
  CHECK(t.op() == OpKind::Div);
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.01, 100);
  const double params[] = {1.5, 0.7, 2.25};
  for (int i = 0; i < 20; ++i) {
    const double p = u(rng);
    CHECK(*evaluate(t, params, p) == doctest::Approx(*evaluate(e, params, p)).epsilon(1e-12));
  }
}

TEST_CASE("simplification is sound and never grows trees") {
  Rng rng(12);
  RandomTreeConfig cfg;
  for (int i = 0; i < 3000; ++i) {
    const Expr t = random_tree(cfg, OpSet::bayesian().united(OpSet{OpKind::Pow}), rng);
    const auto params = positive_params(t.max_param_index(), rng);
    const Expr s = simplify(t);
    CHECK(s.size() <= t.size());
    CHECK_MESSAGE(equivalent_numeric(t, s, params, params), render(t), " -> ", render(s));
    CHECK(simplify(s) == s);
  }
}

TEST_CASE("prime substitution") {
  CHECK(prime_sequence(6) == std::vector<std::int64_t>{2, 3, 5, 7, 11, 13});
  CHECK(prime_sequence(2, 3) == std::vector<std::int64_t>{7, 11});

  const auto s = substitute_primes(parse("c1 + c2"));
  CHECK(render(s.expr) == "2 + 3");
  CHECK(s.mapping == std::vector<std::pair<int, std::int64_t>>{{1, 2}, {2, 3}});

  const auto four = substitute_primes(parse("c1*p/(c2*p^2 + c3*p + c4)"));
  CHECK(four.mapping.size() == 4);
  CHECK(render(four.expr) == "(2 * p) / (((3 * (p ^ 2)) + (5 * p)) + 7)");
}

TEST_CASE("repeated parameters are not relabeled") {
  const CanonicalForm cf = canonical_form(parse("c1 + c1"));
  CHECK(cf.parameter_count == 1);
  CHECK(cf.text == "c1");
  CHECK_FALSE(cf.unreliable);

  const CanonicalForm scaled = canonical_form(parse("(c1 + c1) * p"));
  CHECK(scaled.text == "c1 * p");
}

TEST_CASE("canonical examples") {
  const CanonicalForm reduced = canonical_form(parse("c1*p/(c2*p^2 + c3*p + c4)"));
  CHECK(reduced.parameter_count == 3);
  CHECK(reduced.text == "(c1 * p) / ((c2 + (c3 * p)) + (p ^ 2))");
  CHECK(reduced.rational);

  const CanonicalForm si = canonical_form(parse("2*p/(3*p^2 + 4*p + 5)"));
  CHECK(si.text == "(c1 * p) / ((c2 + (c3 * p)) + (p ^ 2))");
  CHECK(si.exact_coefficients == std::vector<std::string>{"2/3", "5/3", "4/3"});
  CHECK(si.coefficients[0] == 2.0 / 3.0);

  const CanonicalForm lang = canonical_form(parse("c1*p/(c2+p)"));
  CHECK(lang.text == "(c1 * p) / (c2 + p)");
  CHECK(lang.complexity == 7);
  CHECK(canonical_form(lang.tree).text == lang.text);

  CHECK(canonical_form(parse("(c1*p + 0)/(c2 + p)")).text == "(c1 * p) / (c2 + p)");
  CHECK(canonical_form(parse("c1*p")).text == canonical_form(parse("c2*p")).text);
  CHECK(canonical_form(parse("p/(c1+p)*c2")).text == lang.text);

  const CanonicalForm root = canonical_form(parse("c1*sqrt(p + 0)"));
  CHECK_FALSE(root.rational);
  CHECK(root.text == "c1 * sqrt(p)");

  const double fitted[] = {4, 2};
  const CanonicalForm with_fit = canonical_form(parse("c1*p/(c2+p)"), std::span<const double>(fitted));
  CHECK(with_fit.coefficients == std::vector<double>{4, 2});
  CHECK(with_fit.prime_offset == -1);
}

TEST_CASE("equivalent_numeric examples") {
  const double lp[] = {5, 2};
  CHECK(equivalent_numeric(parse("c1*p/(c2+p)"), parse("c1/(c2/p + 1)"), lp, lp));
  const double one[] = {1};
  CHECK_FALSE(equivalent_numeric(parse("c1*p"), parse("c1*p^2"), one, one));
}

TEST_CASE("canonical forms are sound, idempotent and monic") {
  Rng rng(13);
  int rational = 0, flagged = 0;
  for (int i = 0; i < 500; ++i) {
    const Expr t = random_rational_tree(rng, 9);
    const CanonicalForm cf = canonical_form(t);
    if (cf.unreliable) {
      ++flagged;
      continue;
    }
    REQUIRE(cf.prime_offset >= 0);
    const auto primes = as_double(prime_sequence(t.max_param_index(), cf.prime_offset));
    CHECK_MESSAGE(equivalent_numeric(t, cf.tree, primes, cf.coefficients), render(t), " -> ", cf.text);

    const CanonicalForm again = canonical_form(cf.tree);
    CHECK_MESSAGE(again.text == cf.text, render(t));
    CHECK(again.parameter_count == cf.parameter_count);

    if (!cf.rational) continue;
    ++rational;
    std::vector<Rational> exact;
    for (const auto& s : cf.exact_coefficients) exact.emplace_back(s);
    const Expr den = cf.tree.is_leaf() || cf.tree.op() != OpKind::Div ? Expr::integer(1) : cf.tree.child(1);
    const auto u = to_univariate(den, exact);
    REQUIRE(u.status == RationalStatus::Ok);
    CHECK(u.value.den.degree() == 0);
    CHECK(u.value.num.leading() / u.value.den.leading() == 1);
  }
  // the rest divide by an identically zero polynomial
  CHECK(rational >= 480);
  CHECK(flagged <= 5);
}

TEST_CASE("polynomial arithmetic") {
  const UPoly a({Rational(1), Rational(2), Rational(1)});  // (1+p)^2
  const UPoly b({Rational(1), Rational(1)});
  UPoly q, r;
  a.divmod(b, q, r);
  CHECK(q == b);
  CHECK(r.is_zero());
  CHECK(gcd(a, b * UPoly({Rational(3), Rational(0), Rational(1)})) == b);
  CHECK(a.derivative() == UPoly({Rational(2), Rational(2)}));
  CHECK(a.evaluate(2.0) == 9.0);

  const URational n = normalize_monic({b * UPoly::constant(Rational(2)), a * UPoly::constant(Rational(4))});
  CHECK(n.den == b);
  CHECK(n.num == UPoly::constant(Rational(1, 2)));
}
