#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "isosr/pareto.hpp"

using namespace isosr;

namespace {

ScoredModel model(int complexity, double loss, std::string text = "") {
  ScoredModel m;
  m.complexity = complexity;
  m.raw_complexity = complexity;
  m.loss = loss;
  m.canonical = text.empty() ? "c" + std::to_string(complexity) : text;
  return m;
}

// No entry is beaten by a simpler entry with loss at least as good.
bool dominance_free(const ParetoFront& f) {
  for (const auto& [ca, a] : f.entries())
    for (const auto& [cb, b] : f.entries())
      if (ca < cb && a.loss <= b.loss) return false;
  return true;
}

ParetoFront random_front(Rng& rng, int n) {
  std::uniform_int_distribution<int> c(1, 20);
  std::uniform_real_distribution<double> l(0, 1);
  ParetoFront f;
  for (int i = 0; i < n; ++i) {
    f.update(model(c(rng), l(rng)));
    REQUIRE(dominance_free(f));
  }
  return f;
}

Sample sample(const char* text, std::vector<double> params, double loss) { return {parse(text), std::move(params), loss}; }

}  // namespace

TEST_CASE("front updates") {
  ParetoFront f;
  CHECK(f.update(model(7, 0.2694)));
  CHECK(f.at(7) != nullptr);
  CHECK_FALSE(f.update(model(9, 0.30)));
  CHECK(f.at(9) == nullptr);
  CHECK(f.update(model(9, 0.20)));
  CHECK(f.at(7)->loss == 0.2694);
  CHECK(f.at(9)->loss == 0.20);

  // a simpler, better entry evicts both
  CHECK(f.update(model(5, 0.1)));
  CHECK(f.size() == 1);
  CHECK_FALSE(f.update(model(5, 0.1, "zzz")));
  CHECK(f.update(model(5, 0.1, "aaa")));
  CHECK(f.at(5)->canonical == "aaa");
}

TEST_CASE("fronts stay dominance free") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) random_front(rng, 200);
}

TEST_CASE("merging") {
  Rng rng(2);
  std::vector<ParetoFront> fronts;
  for (int i = 0; i < 8; ++i) fronts.push_back(random_front(rng, 30));

  const ParetoFront self[] = {fronts[0], fronts[0]};
  CHECK(merge_fronts(self) == fronts[0]);

  const ParetoFront merged = merge_fronts(fronts);
  CHECK(dominance_free(merged));
  for (const auto& f : fronts)
    for (const auto& [c, m] : f.entries()) {
      CHECK(merged.dominated(m));
      if (const ScoredModel* e = merged.at(c)) CHECK(e->loss <= m.loss);
    }

  for (int k = 0; k < 20; ++k) {
    std::shuffle(fronts.begin(), fronts.end(), rng);
    CHECK(merge_fronts(fronts) == merged);
  }
  const ParetoFront pair_ab[] = {fronts[0], fronts[1]};
  const ParetoFront pair_ba[] = {fronts[1], fronts[0]};
  CHECK(merge_fronts(pair_ab) == merge_fronts(pair_ba));
}

TEST_CASE("front csv round trip") {
  CanonicalCache cache;
  ParetoFront f;
  ScoredModel a = make_scored(sample("c1*p/(c2+p)", {5, 2}, 0.01), cache);
  ConstraintVerdict v;
  v.c1_pass = true;
  v.c2_pass = true;
  v.c3_pass = false;
  a.verdict = v;
  f.update(a);
  f.update(make_scored(sample("c1", {3}, 0.5), cache));
  std::stringstream io;
  write_front_csv(f, io);
  CHECK(io.str().rfind("complexity,loss,canonical_form,c1_pass,c2_pass,c3_pass,params\n", 0) == 0);
  CHECK(io.str().find("7,0.01,(c1 * p) / (c2 + p),1,1,0,5;2\n") != std::string::npos);
  CHECK(io.str().find("1,0.5,c1,-1,-1,-1,3\n") != std::string::npos);
  const ParetoFront back = read_front_csv(io);
  CHECK(back == f);

  std::istringstream bad("complexity,loss\n");
  CHECK_THROWS(read_front_csv(bad));
}

TEST_CASE("scored models use canonical complexity") {
  CanonicalCache cache;
  const ScoredModel m = make_scored(sample("(c1*p + 0)/(1*(c2 + p))", {5, 2}, 0.1), cache);
  CHECK(m.raw_complexity == 11);
  CHECK(m.complexity == 7);
  CHECK(m.canonical == "(c1 * p) / (c2 + p)");
  // p/(c1+p)*c2 canonicalizes with the constants' roles swapped
  const ScoredModel s = make_scored(sample("p/(c1+p)*c2", {2, 5}, 0.1), cache);
  CHECK(s.canonical == m.canonical);
  CHECK(s.canonical_params == std::vector<double>{5, 2});
}

TEST_CASE("pass rates") {
  ConstraintChecker checker;
  CanonicalCache cache;
  const std::vector<Sample> lang(5, sample("c1*p/(c2+p)", {5, 2}, 0.1));
  PassRates r = pass_rate_table(lang, checker, cache);
  CHECK(r.expressions == 1);
  CHECK(r.c1_fraction() == 1.0);
  CHECK(r.c2_fraction() == 1.0);
  CHECK(r.c3_fraction() == 1.0);

  const std::vector<Sample> half{sample("c1*p/(c2+p)", {5, 2}, 0.1), sample("c1*p + c2", {1, 1}, 0.2)};
  r = pass_rate_table(half, checker, cache);
  CHECK(r.expressions == 2);
  CHECK(r.c1_fraction() == 0.5);

  // duplicating any sample changes nothing
  for (std::size_t i = 0; i < half.size(); ++i) {
    std::vector<Sample> dup = half;
    dup.push_back(half[i]);
    const PassRates d = pass_rate_table(dup, checker, cache);
    CHECK(d.expressions == r.expressions);
    CHECK(d.c1 == r.c1);
    CHECK(d.c2 == r.c2);
    CHECK(d.c3 == r.c3);
  }

  // value-equivalent surface forms count once
  const std::vector<Sample> same{sample("c1*p/(c2+p)", {5, 2}, 0.1), sample("c1/(c2/p + 1)", {5, 2}, 0.1),
                                 sample("p*c1/(p+c2)", {5, 2}, 0.1)};
  const double params[] = {5, 2};
  CHECK(equivalent_numeric(same[0].expr, same[1].expr, params, params));
  CHECK(pass_rate_table(same, checker, cache).expressions == 1);

  const std::vector<Sample> none;
  CHECK_THROWS_AS(pass_rate_table(none, checker, cache), std::invalid_argument);
}

TEST_CASE("deduplication keeps the most accurate sample") {
  CanonicalCache cache;
  const std::vector<Sample> s{sample("c1*p/(c2+p)", {5, 2}, 0.3), sample("p*c1/(p+c2)", {4, 2}, 0.1),
                              sample("c1*p/(c2+p)", {6, 2}, 0.2)};
  const auto d = deduplicate(s, cache);
  REQUIRE(d.size() == 1);
  CHECK(d[0].loss == 0.1);
  CHECK(d[0].params == std::vector<double>{4, 2});
}

TEST_CASE("pass rate csv") {
  PassRates r;
  r.dataset = "nitrogen-like";
  r.engine = "bsr";
  r.constraints_active = true;
  r.expressions = 4;
  r.c1 = 3;
  r.c2 = 2;
  r.c3 = 1;
  std::ostringstream out;
  write_pass_rates_csv(std::span<const PassRates>(&r, 1), out);
  CHECK(out.str().find("nitrogen-like") != std::string::npos);
  CHECK(out.str().find("0.75") != std::string::npos);
}

TEST_CASE("log area under the front") {
  ParetoFront f;
  f.update(model(1, 1.0));
  f.update(model(3, 0.01));
  // log10 loss: 0 over [1, 3), -2 over [3, 5)
  CHECK(log_area_under_front(f, 5) == -4.0);
}
