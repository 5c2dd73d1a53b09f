#include <doctest.h>

#include <cmath>

#include "isosr/expr.hpp"

using namespace isosr;

namespace {

bool uses_only(const Expr& e, const OpSet& ops) {
  if (e.is_leaf()) return true;
  if (!ops.contains(e.op())) return false;
  for (int i = 0; i < e.child_count(); ++i)
    if (!uses_only(e.child(i), ops)) return false;
  return true;
}

// Independent node count.
int count_nodes(const Expr& e) {
  int n = 1;
  for (int i = 0; i < e.child_count(); ++i) n += count_nodes(e.child(i));
  return n;
}

}  // namespace

TEST_CASE("evaluate") {
  const Expr lang = parse("c1*p/(c2+p)");
  const double params[] = {5, 2};
  CHECK(*evaluate(lang, params, 2.0) == doctest::Approx(2.5).epsilon(1e-15));

  const double one[] = {1};
  CHECK_FALSE(evaluate(parse("c1/p"), one, 0.0).has_value());
  CHECK(*evaluate(parse("sqrt(p)"), {}, 4.0) == 2.0);
  CHECK_FALSE(evaluate(parse("sqrt(p - 2)"), {}, 1.0).has_value());
  CHECK_THROWS_AS(evaluate(lang, one, 1.0), std::invalid_argument);
}

TEST_CASE("complexity of catalog-shaped forms") {
  CHECK(complexity(parse("c1*p/(c2+p)")) == 7);
  CHECK(complexity(parse("c1*p/(c2+p) + c3*p/(c4+p)")) == 15);
  CHECK(complexity(parse("c1")) == 1);
  CHECK(complexity(parse("c1*p/(p^2 + c2*p + c3)")) == 13);
  CHECK(operator_count(parse("c1*p/(c2+p)")) == 3);
  CHECK(parameter_count(parse("c1*p + c1")) == 1);
}

TEST_CASE("render and parse") {
  CHECK(render(parse("c1*p/(c2+p)")) == "(c1 * p) / (c2 + p)");
  CHECK(complexity(parse("(c1 * p) / (c2 + p)")) == 7);
  CHECK(render(parse("square(p) - cube(c1) + sqrt(p)")) == "(square(p) - cube(c1)) + sqrt(p)");
  CHECK(parse("p**2") == parse("p^2"));
  CHECK(parse("c1 - c2 - p") == parse("(c1 - c2) - p"));
  CHECK(parse("c1 / c2 * p") == parse("(c1 / c2) * p"));

  try {
    parse("c1 +");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.token() == 3);
  }
  CHECK_THROWS_AS(parse("c0 * p"), ParseError);
  CHECK_THROWS_AS(parse("(p"), ParseError);
  CHECK_THROWS_AS(parse("x + 1"), ParseError);
}

TEST_CASE("round trip and additive complexity over random trees") {
  Rng rng(1);
  RandomTreeConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    const Expr t = random_tree(cfg, OpSet::bayesian(), rng);
    const Expr back = parse(render(t));
    REQUIRE(back == t);
    CHECK(complexity(back) == complexity(t));
    CHECK(complexity(t) == count_nodes(t));
    if (!t.is_leaf()) {
      int sum = 1;
      for (int c = 0; c < t.child_count(); ++c) sum += complexity(t.child(c));
      CHECK(complexity(t) == sum);
    }
  }
}

TEST_CASE("random trees respect bounds and operator set") {
  Rng rng(2);
  RandomTreeConfig leaf_only;
  leaf_only.max_depth = 1;
  for (int i = 0; i < 200; ++i) CHECK(random_tree(leaf_only, OpSet::genetic(), rng).is_leaf());

  RandomTreeConfig cfg;
  cfg.target_size = 7;
  double total = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Expr t = random_tree(cfg, OpSet::genetic(), rng);
    CHECK(uses_only(t, OpSet::genetic()));
    CHECK(t.size() <= cfg.max_size);
    CHECK(t.depth() <= cfg.max_depth);
    total += t.size();
  }
  const double mean = total / n;
  CHECK(mean >= 0.8 * cfg.target_size);
  CHECK(mean <= 1.2 * cfg.target_size);
}

TEST_CASE("evaluation never throws for positive p") {
  Rng rng(3);
  RandomTreeConfig cfg;
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 2000; ++i) {
    const Expr t = random_tree(cfg, OpSet::bayesian(), rng);
    std::vector<double> params(static_cast<std::size_t>(t.max_param_index()));
    for (auto& x : params) x = u(rng);
    for (double p : {1e-12, 1e-3, 1.0, 1e3, 1e12}) {
      auto v = evaluate(t, params, p);
      if (v) CHECK(std::isfinite(*v));
    }
  }
}

TEST_CASE("compiled evaluation matches the tree walker") {
  Rng rng(4);
  RandomTreeConfig cfg;
  std::uniform_real_distribution<double> u(-3, 3);
  const std::vector<double> ps{1e-6, 0.01, 0.5, 1, 2, 30, 1e4};
  for (int i = 0; i < 2000; ++i) {
    const Expr t = random_tree(cfg, OpSet::bayesian().united(OpSet{OpKind::Pow}), rng);
    std::vector<double> params(static_cast<std::size_t>(t.max_param_index()));
    for (auto& x : params) x = u(rng);
    CompiledExpr f(t);
    std::vector<double> many(ps.size());
    f.evaluate_many(params, ps, many);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto v = evaluate(t, params, ps[k]);
      const double c = f(params, ps[k]);
      if (!v) {
        CHECK(std::isnan(c));
        CHECK(std::isnan(many[k]));
      } else {
        CHECK(c == *v);
        CHECK(many[k] == *v);
      }
    }
  }
}

TEST_CASE("parameter numbering") {
  std::vector<int> old;
  const Expr e = renumber_parameters(parse("c3*p + c1*c3"), &old);
  CHECK(render(e) == "(c1 * p) + (c2 * c1)");
  CHECK(old == std::vector<int>{3, 1});
  CHECK(render(distinct_parameters(parse("c1*p + c1"))) == "(c1 * p) + c2");
}

TEST_CASE("preorder and replacement") {
  const Expr e = parse("c1*p/(c2+p)");
  const auto nodes = preorder(e);
  REQUIRE(nodes.size() == 7);
  CHECK(render(nodes[4]) == "c2 + p");
  CHECK(render(replace_at(e, 4, Expr::parameter(2))) == "(c1 * p) / c2");
  CHECK(replace_at(e, 0, Expr::variable()) == Expr::variable());
}
