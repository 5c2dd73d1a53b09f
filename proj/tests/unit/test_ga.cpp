#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "isosr/ga.hpp"

using namespace isosr;

namespace {

Dataset langmuir(double sigma = 0.0) {
  Rng rng(7);
  const double params[] = {5, 2};
  return synthesize(catalog_model("langmuir"), params, GridSpec{0.01, 100, 20, true}, sigma, rng);
}

bool uses_only(const Expr& e, const OpSet& ops) {
  if (e.is_leaf()) return true;
  if (!ops.contains(e.op())) return false;
  for (int i = 0; i < e.child_count(); ++i)
    if (!uses_only(e.child(i), ops)) return false;
  return true;
}

OpSet ops_of(const Expr& e) {
  OpSet s;
  for (const Expr& n : preorder(e))
    if (!n.is_leaf()) s = s.united(OpSet{n.op()});
  return s;
}

GaConfig small_config() {
  GaConfig cfg;
  cfg.population = 16;
  cfg.islands = 2;
  cfg.generations = 10;
  cfg.fit.restarts = 2;
  cfg.fit.max_iterations = 300;
  return cfg;
}

}  // namespace

TEST_CASE("score algebra") {
  ConstraintVerdict all_pass;
  all_pass.c1_pass = all_pass.c2_pass = all_pass.c3_pass = true;
  all_pass.checked = {true, true, true};
  const std::array<double, 3> g{1.3, 1.3, 1.3};
  CHECK(apply_penalties(0.2694, all_pass, g) == 0.2694);

  ConstraintVerdict c1_fails = all_pass;
  c1_fails.c1_pass = false;
  CHECK(apply_penalties(0.2694, c1_fails, g) == 0.35022);

  ConstraintVerdict all_fail;
  all_fail.checked = {true, true, true};
  CHECK(apply_penalties(1.0, all_fail, g) == 1.3 * 1.3 * 1.3);
  CHECK(apply_penalties(1.0, all_fail, {1.0, 1.0, 1.0}) == 1.0);
  // an unchecked constraint is never penalized
  ConstraintVerdict unchecked;
  CHECK(apply_penalties(0.2694, unchecked, g) == 0.2694);

  CHECK(member_score(0.5, 7, 0.01) == 0.5 + 7 * 0.01);
  CHECK(member_score(0.5, 7, 0.01) == doctest::Approx(0.57).epsilon(1e-15));
}

TEST_CASE("check mask follows the penalties") {
  GaConfig cfg;
  CHECK_FALSE(cfg.constraints_active());
  CHECK(cfg.check_mask() == 0u);
  cfg.penalties = {1.3, 1.0, 1.3};
  CHECK(cfg.constraints_active());
  CHECK(cfg.check_mask() == (kCheckC1 | kCheckC3));
}

TEST_CASE("evaluated members satisfy the score equations") {
  const Dataset d = langmuir();
  GaConfig on = small_config();
  on.penalties = {1.3, 1.3, 1.3};
  GaConfig off = small_config();
  ConstraintChecker checker;
  GaEvaluator eval_on(d, on, checker);
  GaEvaluator eval_off(d, off, checker);
  Rng rng(3);
  int failing = 0;
  for (int i = 0; i < 200; ++i) {
    const Expr e = distinct_parameters(random_tree(on.init, on.ops, rng));
    Rng r1(i), r2(i);
    const Member a = eval_on.evaluate(e, r1);
    const Member b = eval_off.evaluate(e, r2);
    CHECK(a.score == member_score(a.loss, complexity(e), on.parsimony));
    // exact up to rounding of the sum (the loss may be the 1e12 sentinel)
    CHECK(std::abs((a.score - a.loss) - complexity(e) * on.parsimony) <=
          4 * std::numeric_limits<double>::epsilon() * std::max(1.0, a.score));
    CHECK(a.raw_loss == b.raw_loss);
    REQUIRE(a.verdict);
    CHECK_FALSE(b.verdict);
    CHECK(a.loss == apply_penalties(a.raw_loss, *a.verdict, on.penalties));
    const bool passes = a.verdict->c1_pass && a.verdict->c2_pass && a.verdict->c3_pass;
    if (passes) {
      CHECK(a.score == b.score);
    } else {
      ++failing;
      // a tiny raw loss can vanish against the parsimony term
      CHECK(a.score >= b.score);
      if (a.raw_loss > 0) CHECK(a.loss > a.raw_loss);
    }
  }
  CHECK(failing > 0);
}

TEST_CASE("operator mutation stays in the alphabet") {
  GaConfig cfg;
  Rng rng(4);
  const Expr e = parse("c1 + p");
  for (int i = 0; i < 200; ++i) {
    auto m = mutate_structure(e, MutationKind::Operator, cfg, rng);
    REQUIRE(m);
    REQUIRE_FALSE(m->is_leaf());
    CHECK(m->op() != OpKind::Add);
    CHECK(cfg.ops.contains(m->op()));
  }
  CHECK_FALSE(mutate_structure(parse("p"), MutationKind::Operator, cfg, rng));
}

TEST_CASE("deletion shrinks the tree") {
  GaConfig cfg;
  Rng rng(5);
  const Expr e = parse("c1*p/(c2+p)");
  for (int i = 0; i < 200; ++i) {
    auto m = mutate_structure(e, MutationKind::Delete, cfg, rng);
    REQUIRE(m);
    CHECK(m->size() < 7);
  }
}

TEST_CASE("every mutation yields a valid tree") {
  GaConfig cfg;
  cfg.max_size = 15;
  Rng rng(6);
  std::uniform_int_distribution<int> kind(0, kMutationKinds - 1);
  std::uniform_real_distribution<double> u(0.1, 5);
  Expr e = parse("c1*p/(c2+p)");
  int applied = 0;
  for (int i = 0; i < 100000; ++i) {
    auto m = mutate_structure(e, static_cast<MutationKind>(kind(rng)), cfg, rng);
    if (!m) continue;
    ++applied;
    REQUIRE(parse(render(*m)) == *m);
    CHECK(m->size() <= cfg.max_size);
    CHECK(uses_only(*m, cfg.ops));
    std::vector<double> params(static_cast<std::size_t>(m->max_param_index()));
    for (auto& x : params) x = u(rng);
    CHECK_NOTHROW(evaluate(*m, params, 1.5));
    e = m->size() > 12 ? parse("c1*p/(c2+p)") : *m;
  }
  CHECK(applied > 50000);
}

TEST_CASE("mutate scores its result") {
  const Dataset d = langmuir();
  GaConfig cfg = small_config();
  ConstraintChecker checker;
  GaEvaluator eval(d, cfg, checker);
  Rng rng(7);
  const Member m = eval.evaluate(parse("c1*p/(c2+p)"), rng);
  for (int i = 0; i < 50; ++i) {
    MutationKind kind;
    const Member child = mutate(m, cfg, eval, rng, &kind);
    CHECK(child.score == member_score(child.loss, complexity(child.expr), cfg.parsimony));
    if (kind == MutationKind::Constant) CHECK(child.fit.loss <= m.fit.loss);
  }
}

TEST_CASE("crossover") {
  Rng rng(8);
  const Expr leaf = parse("p");
  for (int i = 0; i < 10; ++i) CHECK(*crossover(leaf, leaf, 25, rng) == leaf);

  const Expr t = parse("c1*p/(c2+p)");
  bool saw_self = false;
  for (int i = 0; i < 200; ++i)
    if (*crossover(t, t, 25, rng) == t) saw_self = true;
  CHECK(saw_self);

  RandomTreeConfig tree_cfg;
  const OpSet left{OpKind::Add, OpKind::Sqrt}, right{OpKind::Mul, OpKind::Cube};
  for (int i = 0; i < 2000; ++i) {
    const Expr a = random_tree(tree_cfg, left, rng);
    const Expr b = random_tree(tree_cfg, right, rng);
    if (auto c = crossover(a, b, 15, rng)) {
      CHECK(c->size() <= 15);
      CHECK(uses_only(*c, ops_of(a).united(ops_of(b))));
    }
  }
  for (int i = 0; i < 50; ++i)
    if (auto c = crossover(parse("c1*p/(c2+p)"), parse("c1*p/(c2+p)"), 1, rng)) CHECK(c->is_leaf());
}

TEST_CASE("penalties of 1 never consult the checker") {
  const Dataset d = langmuir(0.02);
  GaConfig cfg = small_config();
  ConstraintChecker checker;
  Rng rng(9);
  const RunRecord rec = run_ga(d, cfg, checker, rng);
  CHECK(rec.checker_invocations == 0);
  CHECK(checker.invocations() == 0);

  cfg.penalties = {1.3, 1.3, 1.3};
  Rng again(9);
  CHECK(run_ga(d, cfg, checker, again).checker_invocations > 0);
}

TEST_CASE("zero generations keep the initial front") {
  const Dataset d = langmuir(0.02);
  GaConfig cfg = small_config();
  cfg.generations = 0;
  ConstraintChecker checker;
  Rng rng(10);
  const RunRecord rec = run_ga(d, cfg, checker, rng);
  CHECK(rec.samples.size() == 32);
  REQUIRE(rec.history.size() == 1);
  // brute-force front of (raw complexity, loss) over the initial population
  std::vector<std::pair<int, double>> expected;
  for (const auto& s : rec.samples) {
    const int c = complexity(s.expr);
    bool dominated = false;
    for (const auto& o : rec.samples) {
      const int oc = complexity(o.expr);
      if ((oc < c && o.loss <= s.loss) || (oc == c && o.loss < s.loss)) dominated = true;
    }
    if (!dominated && std::find(expected.begin(), expected.end(), std::pair{c, s.loss}) == expected.end())
      expected.emplace_back(c, s.loss);
  }
  std::sort(expected.begin(), expected.end());
  auto got = rec.history[0].points;
  std::sort(got.begin(), got.end());
  CHECK(got == expected);
}

TEST_CASE("hall of fame over generations") {
  const Dataset d = langmuir(0.02);
  GaConfig cfg = small_config();
  cfg.generations = 30;
  cfg.penalties = {1.3, 1.3, 1.3};
  ConstraintChecker checker;
  Rng rng(11);
  const RunRecord rec = run_ga(d, cfg, checker, rng);
  REQUIRE(rec.history.size() == 31);

  auto best_upto = [](const FrontSnapshot& s, int c) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [pc, l] : s.points)
      if (pc <= c) best = std::min(best, l);
    return best;
  };
  for (std::size_t g = 0; g < rec.history.size(); ++g) {
    const auto& pts = rec.history[g].points;
    for (const auto& a : pts)
      for (const auto& b : pts) CHECK_FALSE((a.first < b.first && a.second <= b.second));
    if (g == 0) continue;
    for (int c = 1; c <= cfg.max_size; ++c) CHECK(best_upto(rec.history[g], c) <= best_upto(rec.history[g - 1], c));
  }

  CHECK_FALSE(rec.front.empty());
  CHECK(rec.samples.size() == 32 + 30 * 2 * 3);
}

TEST_CASE("single-threaded runs are reproducible") {
  const Dataset d = langmuir(0.02);
  GaConfig cfg = small_config();
  ConstraintChecker c1, c2;
  Rng a(12), b(12);
  const RunRecord x = run_ga(d, cfg, c1, a);
  const RunRecord y = run_ga(d, cfg, c2, b);
  CHECK(x.front == y.front);
  CHECK(x.samples.size() == y.samples.size());
}
