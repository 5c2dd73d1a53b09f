#include <doctest.h>

#include <chrono>

#include "isosr/constraints.hpp"
#include "isosr/dataset.hpp"
#include "isosr/fit.hpp"
#include "oracles.hpp"

using namespace isosr;
using namespace std::chrono_literals;

namespace {

std::vector<double> positive_params(int k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<double> v(static_cast<std::size_t>(k));
  for (auto& x : v) x = u(rng);
  return v;
}

Expr random_small_tree(Rng& rng) {
  RandomTreeConfig cfg;
  cfg.max_size = 15;
  return random_tree(cfg, OpSet::bayesian(), rng);
}

}  // namespace

TEST_CASE("limits at zero") {
  const double lang[] = {5, 2};
  const LimitValue a = limit_at_zero_plus(parse("c1*p/(c2+p)"), lang);
  CHECK(a.kind == LimitValue::Kind::Finite);
  CHECK(a.value == 0.0);
  CHECK(a.method == LimitValue::Method::Exact);

  const double offset[] = {5, 1, 2};
  const LimitValue b = limit_at_zero_plus(parse("(c1*p + c2)/(c3 + p)"), offset);
  CHECK(b.kind == LimitValue::Kind::Finite);
  CHECK(b.value == 0.5);

  const double one[] = {1};
  CHECK(limit_at_zero_plus(parse("c1/p"), one).kind == LimitValue::Kind::PlusInfinity);
  CHECK(limit_at_zero_plus(parse("-1/sqrt(p)"), {}).kind == LimitValue::Kind::MinusInfinity);
  CHECK(limit_at_zero_plus(parse("sqrt(p - 1)"), {}).kind == LimitValue::Kind::Undefined);

  const LimitValue n = numeric_limit_at_zero_plus(parse("(c1*p + c2)/(c3 + p)"), offset);
  CHECK(n.kind == LimitValue::Kind::Finite);
  CHECK(n.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(numeric_limit_at_zero_plus(parse("1/p"), {}).kind == LimitValue::Kind::PlusInfinity);
}

TEST_CASE("constraint 1 examples") {
  const double lang[] = {5, 2};
  CHECK(constraint1(parse("c1*p/(c2+p)"), lang));
  const double lin[] = {1, 0.3};
  CHECK_FALSE(constraint1(parse("c1*p + c2"), lin));
  const double four[] = {4};
  CHECK_FALSE(constraint1(parse("c1"), four));
  CHECK(constraint1(parse("sqrt(p)"), {}));
}

TEST_CASE("constraint 2 examples") {
  const double lang[] = {5, 2};
  const CheckOutcome c = check_constraint2(parse("c1*p/(c2+p)"), lang);
  CHECK(c.pass);
  CHECK(c.limit.value == 2.5);
  const double one[] = {1};
  const CheckOutcome root = check_constraint2(parse("c1*sqrt(p)"), one);
  CHECK_FALSE(root.pass);
  CHECK(root.limit.kind == LimitValue::Kind::PlusInfinity);
  CHECK_FALSE(constraint2(parse("c1*p^2"), one));
  CHECK_FALSE(constraint2(parse("c1*square(p)"), one));
  const double neg[] = {-5, 2};
  CHECK_FALSE(constraint2(parse("c1*p/(c2+p)"), neg));
  // exponent depends on p
  CHECK_FALSE(constraint2(parse("p^p"), {}));
}

TEST_CASE("constraint 3 examples") {
  const double lang[] = {5, 2};
  CHECK(constraint3(parse("c1*p/(c2+p)"), lang, 1e-8, 1e3));
  const double one[] = {1};
  CHECK(constraint3(parse("c1*cube(p)"), one, 1e-8, 1e3));
  CHECK(constraint3(parse("cube(p - 1)"), {}, 1e-8, 1e3));
  const double neg[] = {-5, 2};
  CHECK_FALSE(constraint3(parse("c1*p/(c2+p)"), neg, 1e-8, 1e3));
  CHECK(constraint3(parse("c1"), one, 1e-8, 1e3));
  // local maximum at p = 2.5
  CHECK_FALSE(constraint3(parse("cube(p - 3) - (p - 3)/4"), {}, 1e-8, 1e3));
  CHECK_FALSE(constraint3(parse("sqrt(2 - p)"), {}, 1e-8, 1e3));
}

TEST_CASE("check_all examples") {
  const MonotonicityOptions range{1e-8, 100};
  const double lang[] = {5, 2};
  auto v = check_all(parse("c1*p/(c2+p)"), lang, 10s, range);
  CHECK((v.c1_pass && v.c2_pass && v.c3_pass));

  const double offset[] = {5, 1, 2};
  v = check_all(parse("(c1*p + c2)/(c3 + p)"), offset, 10s, range);
  CHECK_FALSE(v.c1_pass);
  CHECK(v.c2_pass);
  CHECK(v.c3_pass);

  const double one[] = {1};
  v = check_all(parse("c1*sqrt(p)"), one, 10s, range);
  CHECK(v.c1_pass);
  CHECK_FALSE(v.c2_pass);
  CHECK(v.c3_pass);

  // same verdicts from the independent oracles
  CHECK(oracle::vanishes_at_zero(parse("c1*p/(c2+p)"), lang));
  CHECK(oracle::positive_finite_slope(parse("c1*p/(c2+p)"), lang));
  CHECK(oracle::monotone_scan(parse("c1*p/(c2+p)"), lang, 1e-8, 100));
  CHECK_FALSE(oracle::vanishes_at_zero(parse("(c1*p + c2)/(c3 + p)"), offset));
  CHECK(oracle::positive_finite_slope(parse("(c1*p + c2)/(c3 + p)"), offset));
  CHECK_FALSE(oracle::positive_finite_slope(parse("c1*sqrt(p)"), one));

  v = check_all(parse("c1*p/(c2+p)"), lang, 10s, range, kCheckC1 | kCheckC2);
  CHECK(v.checked == std::array<bool, 3>{true, true, false});
  CHECK_FALSE(v.c3_pass);
}

TEST_CASE("a check that runs out of time fails") {
  const double lang[] = {5, 2};
  const auto v = check_all(parse("c1*p/(c2+p)"), lang, 0us, MonotonicityOptions{});
  CHECK(v.timed_out == std::array<bool, 3>{true, true, true});
  CHECK_FALSE(v.c1_pass);
  CHECK_FALSE(v.c2_pass);
  CHECK_FALSE(v.c3_pass);
}

TEST_CASE("ground-truth forms") {
  const MonotonicityOptions range{1e-8, 1000};
  const double lang[] = {5, 2};
  const double dual[] = {3, 0.05, 8, 40};
  for (const auto& [name, params] :
       {std::pair{"langmuir", std::span<const double>(lang)}, std::pair{"dual-site", std::span<const double>(dual)}}) {
    const auto v = check_all(catalog_model(name).sr_form, params, 10s, range);
    CHECK_MESSAGE((v.c1_pass && v.c2_pass && v.c3_pass), name);
  }

  // BET fitted below saturation, checked across its asymptote
  Rng rng(9);
  const auto bet = bet_parameters(2.0, 50.0);
  const Dataset d = synthesize(catalog_model("bet"), bet, GridSpec{0.05, 0.35, 20, false}, 0.0, rng);
  const FitResult fit = refine_constants(catalog_model("bet").sr_form, d, bet);
  REQUIRE(fit.loss < 1e-12);
  CHECK_FALSE(constraint3(catalog_model("bet").sr_form, fit.params, 1e-8, 10 * d.max_pressure()));
}

TEST_CASE("memoized verdicts equal fresh ones") {
  CheckerConfig cfg;
  cfg.budget = 10s;
  ConstraintChecker memo(cfg);
  cfg.memo_capacity = 0;
  ConstraintChecker fresh(cfg);
  Rng rng(21);
  std::vector<std::pair<Expr, std::vector<double>>> cases;
  for (int i = 0; i < 100; ++i) {
    Expr t = random_small_tree(rng);
    cases.emplace_back(t, positive_params(t.max_param_index(), rng));
  }
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& [t, params] : cases) CHECK(memo.check(t, params) == fresh.check(t, params));
  CHECK(memo.invocations() == 200);
  CHECK(memo.cache_hits() >= 100);
  CHECK(fresh.cache_hits() == 0);

  // params equal to 6 significant digits share an entry
  const double a[] = {5, 2};
  const double b[] = {5.0000001, 2};
  memo.clear();
  const auto hits = memo.cache_hits();
  memo.check(parse("c1*p/(c2+p)"), a);
  memo.check(parse("c1*p/(c2+p)"), b);
  CHECK(memo.cache_hits() == hits + 1);
}

TEST_CASE("rounding to significant digits") {
  const double v[] = {123456789.0, 0.000123456789, 0.0, -2.5};
  CHECK(round_significant(v) == std::vector<double>{123457000.0, 0.000123457, 0.0, -2.5});
}

TEST_CASE("constraint 3 agrees with a dense scan") {
  Rng rng(31);
  int disagreements = 0;
  for (int i = 0; i < 300; ++i) {
    const Expr t = random_small_tree(rng);
    const auto params = positive_params(t.max_param_index(), rng);
    MonotonicityOptions opts;
    const CheckOutcome c = check_constraint3(t, params, opts);
    const bool scan = oracle::monotone_scan(t, params, opts.start, opts.stop);
    if (c.pass != scan) {
      ++disagreements;
      MESSAGE(render(t), " checker ", c.pass, " scan ", scan);
    }
  }
  CHECK(disagreements == 0);
}

TEST_CASE("limits agree with high-precision extrapolation") {
  Rng rng(41);
  int c1_bad = 0, c2_bad = 0;
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    const Expr t = random_small_tree(rng);
    const auto params = positive_params(t.max_param_index(), rng);
    if (check_constraint1(t, params).pass != oracle::vanishes_at_zero(t, params)) ++c1_bad;
    if (check_constraint2(t, params).pass != oracle::positive_finite_slope(t, params)) ++c2_bad;
  }
  CHECK(c1_bad <= n / 100);
  CHECK(c2_bad <= n / 100);
}
