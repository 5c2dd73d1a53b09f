#include "isosr/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "isosr/algebra.hpp"

namespace isosr {
namespace {

constexpr int kLeafParamIndex = 1000;  // placeholder before renumbering

Expr fresh_leaf(const GaConfig& cfg, Rng& rng) { return random_leaf(cfg.init.variable_leaf_prob, kLeafParamIndex, rng); }

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<int> positions(const Expr& e, bool internal) {
  std::vector<int> out;
  const auto nodes = preorder(e);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].is_leaf() != internal) out.push_back(i);
  return out;
}

Expr with_op(const Expr& node, OpKind op) {
  if (arity(op) == 1) return Expr::unary(op, node.child(0));
  return Expr::binary(op, node.child(0), node.child(1));
}

Expr new_node(OpKind op, const Expr& keep, const GaConfig& cfg, Rng& rng) {
  if (arity(op) == 1) return Expr::unary(op, keep);
  if (std::bernoulli_distribution(0.5)(rng)) return Expr::binary(op, keep, fresh_leaf(cfg, rng));
  return Expr::binary(op, fresh_leaf(cfg, rng), keep);
}

const Member& tournament(const std::vector<Member>& pop, int size, Rng& rng) {
  const Member* best = nullptr;
  for (int i = 0; i < std::max(size, 1); ++i) {
    const Member& m = pick(pop, rng);
    if (!best || m.score < best->score) best = &m;
  }
  return *best;
}

struct HofKey {
  int complexity;
  double loss;
  std::string text;
  bool operator<(const HofKey& o) const {
    if (complexity != o.complexity) return complexity < o.complexity;
    if (loss != o.loss) return loss < o.loss;
    return text < o.text;
  }
};

// Keep members not dominated on (raw complexity, penalized loss).
void prune_hof(std::vector<Member>& hof) {
  std::vector<std::pair<HofKey, std::size_t>> keyed;
  for (std::size_t i = 0; i < hof.size(); ++i)
    keyed.push_back({{complexity(hof[i].expr), hof[i].loss, render(hof[i].expr)}, i});
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Member> kept;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [key, i] : keyed) {
    if (key.loss < best) {
      best = key.loss;
      kept.push_back(hof[i]);
    }
  }
  hof = std::move(kept);
}

std::vector<const Member*> best_by_score(const std::vector<Member>& pop, int n) {
  std::vector<const Member*> out;
  for (const auto& m : pop) out.push_back(&m);
  std::stable_sort(out.begin(), out.end(), [](const Member* a, const Member* b) { return a->score < b->score; });
  if (static_cast<int>(out.size()) > n) out.resize(static_cast<std::size_t>(n));
  return out;
}

std::size_t oldest(const std::vector<Member>& pop) {
  std::size_t at = 0;
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (pop[i].age < pop[at].age) at = i;
  return at;
}

}  // namespace

unsigned GaConfig::check_mask() const {
  unsigned mask = 0;
  for (int i = 0; i < 3; ++i)
    if (penalties[i] > 1.0) mask |= 1u << i;
  return mask;
}

double apply_penalties(double loss, const ConstraintVerdict& v, const std::array<double, 3>& penalties) {
  for (int i = 0; i < 3; ++i)
    if (v.checked[i] && penalties[i] > 1.0 && !v.pass(i)) loss *= penalties[i];
  return loss;
}

double member_score(double loss, int nodes, double parsimony) { return loss + nodes * parsimony; }

GaEvaluator::GaEvaluator(const Dataset& d, const GaConfig& cfg, ConstraintChecker& checker)
    : data_(d), cfg_(cfg), checker_(checker), range_(checker.config().range) {
  range_.stop = 10.0 * d.max_pressure();
}

Member GaEvaluator::rescore(const Expr& e, FitResult fit) {
  Member m;
  m.expr = e;
  m.fit = std::move(fit);
  m.raw_loss = m.fit.loss;
  m.loss = m.raw_loss;
  if (cfg_.constraints_active()) {
    m.verdict = checker_.check(e, m.fit.params, cfg_.check_mask(), &range_);
    m.loss = apply_penalties(m.raw_loss, *m.verdict, cfg_.penalties);
  }
  m.score = member_score(m.loss, complexity(e), cfg_.parsimony);
  return m;
}

Member GaEvaluator::evaluate(const Expr& e, Rng& rng) {
  const std::string key = render(e);
  auto it = fit_memo_.find(key);
  if (it == fit_memo_.end()) {
    ++fits_;
    it = fit_memo_.emplace(key, fit_constants(e, data_, rng, cfg_.fit)).first;
  }
  return rescore(e, it->second);
}

std::optional<Member> GaEvaluator::perturb_constant(const Member& m, Rng& rng) {
  const auto k = m.fit.params.size();
  if (k == 0) return std::nullopt;
  std::vector<double> x = m.fit.params;
  const auto i = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
  x[i] *= std::exp(0.5 * std::normal_distribution<double>(0.0, 1.0)(rng));
  if (std::bernoulli_distribution(0.1)(rng)) x[i] = -x[i];
  FitResult refined = refine_constants(m.expr, data_, x, cfg_.fit);
  FitResult& memo = fit_memo_[render(m.expr)];
  if (memo.params.empty() || refined.loss < memo.loss) memo = refined;
  return rescore(m.expr, refined.loss < m.fit.loss ? refined : m.fit);
}

std::optional<Expr> mutate_structure(const Expr& e, MutationKind kind, const GaConfig& cfg, Rng& rng) {
  std::optional<Expr> out;
  switch (kind) {
    case MutationKind::Constant:
      return std::nullopt;
    case MutationKind::Operator: {
      const auto internal = positions(e, true);
      if (internal.empty()) return std::nullopt;
      const int at = pick(internal, rng);
      const Expr node = preorder(e)[static_cast<std::size_t>(at)];
      std::vector<OpKind> alts;
      for (OpKind op : cfg.ops.with_arity(arity(node.op())))
        if (op != node.op()) alts.push_back(op);
      if (alts.empty()) return std::nullopt;
      out = replace_at(e, at, with_op(node, pick(alts, rng)));
      break;
    }
    case MutationKind::Append: {
      const auto leaves = positions(e, false);
      const OpKind op = pick(cfg.ops.members(), rng);
      Expr grown = arity(op) == 1 ? Expr::unary(op, fresh_leaf(cfg, rng))
                                  : Expr::binary(op, fresh_leaf(cfg, rng), fresh_leaf(cfg, rng));
      out = replace_at(e, pick(leaves, rng), grown);
      break;
    }
    case MutationKind::Insert: {
      const int at = std::uniform_int_distribution<int>(0, e.size() - 1)(rng);
      const OpKind op = pick(cfg.ops.members(), rng);
      out = replace_at(e, at, new_node(op, preorder(e)[static_cast<std::size_t>(at)], cfg, rng));
      break;
    }
    case MutationKind::Delete: {
      const auto internal = positions(e, true);
      if (internal.empty()) return std::nullopt;
      out = replace_at(e, pick(internal, rng), fresh_leaf(cfg, rng));
      break;
    }
    case MutationKind::Simplify: {
      Expr s = simplify(e);
      if (s == e) return std::nullopt;
      out = s;
      break;
    }
    case MutationKind::Regenerate:
      out = random_tree(cfg.init, cfg.ops, rng);
      break;
  }
  if (!out || out->size() > cfg.max_size) return std::nullopt;
  return distinct_parameters(*out);
}

Member mutate(const Member& m, const GaConfig& cfg, GaEvaluator& eval, Rng& rng, MutationKind* applied) {
  auto weights = cfg.weights.as_array();
  for (int attempt = 0; attempt < kMutationKinds; ++attempt) {
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0; })) break;
    std::discrete_distribution<int> draw(weights.begin(), weights.end());
    const auto kind = static_cast<MutationKind>(draw(rng));
    weights[static_cast<std::size_t>(kind)] = 0.0;
    if (kind == MutationKind::Constant) {
      if (auto r = eval.perturb_constant(m, rng)) {
        if (applied) *applied = kind;
        return *r;
      }
      continue;
    }
    if (auto e = mutate_structure(m.expr, kind, cfg, rng)) {
      if (applied) *applied = kind;
      return eval.evaluate(*e, rng);
    }
  }
  if (applied) *applied = MutationKind::Regenerate;
  RandomTreeConfig init = cfg.init;
  init.max_size = std::min(init.max_size, cfg.max_size);
  return eval.evaluate(distinct_parameters(random_tree(init, cfg.ops, rng)), rng);
}

std::optional<Expr> crossover(const Expr& a, const Expr& b, int max_size, Rng& rng) {
  const auto donors = preorder(b);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const int i = std::uniform_int_distribution<int>(0, a.size() - 1)(rng);
    const auto j = std::uniform_int_distribution<std::size_t>(0, donors.size() - 1)(rng);
    Expr child = replace_at(a, i, donors[j]);
    if (child.size() <= max_size) return distinct_parameters(child);
  }
  return std::nullopt;
}

RunRecord run_ga(const Dataset& d, const GaConfig& cfg, ConstraintChecker& checker, Rng& rng) {
  if (cfg.population < 1 || cfg.islands < 1) throw std::invalid_argument("run_ga: empty population");
  const std::uint64_t calls_before = checker.invocations();
  GaEvaluator eval(d, cfg, checker);
  RunRecord rec;
  rec.engine = "ga";
  long births = 0;
  RandomTreeConfig init = cfg.init;
  init.max_size = std::min(init.max_size, cfg.max_size);

  auto note = [&](Member m) {
    m.age = births++;
    rec.samples.push_back({m.expr, m.fit.params, m.raw_loss});
    return m;
  };

  std::vector<std::vector<Member>> islands(static_cast<std::size_t>(cfg.islands));
  for (auto& pop : islands)
    for (int i = 0; i < cfg.population; ++i)
      pop.push_back(note(eval.evaluate(distinct_parameters(random_tree(init, cfg.ops, rng)), rng)));

  std::vector<Member> hof;
  std::map<std::string, Member> ever;  // every member that entered the hall of fame
  auto submit = [&](const std::vector<const Member*>& subs) {
    for (const Member* m : subs) hof.push_back(*m);
    prune_hof(hof);
    for (const auto& m : hof) ever.emplace(render(m.expr), m);
  };
  auto snapshot = [&](int gen) {
    FrontSnapshot s;
    s.generation = gen;
    for (const auto& m : hof) s.points.emplace_back(complexity(m.expr), m.loss);
    rec.history.push_back(std::move(s));
  };

  for (const auto& pop : islands) submit(best_by_score(pop, cfg.population));
  snapshot(0);

  const int replace =
      std::max(1, static_cast<int>(std::lround(cfg.replace_fraction * static_cast<double>(cfg.population))));
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    for (auto& pop : islands) {
      std::vector<Member> children;
      for (int r = 0; r < replace; ++r) {
        std::optional<Member> child;
        if (std::bernoulli_distribution(cfg.crossover_probability)(rng)) {
          const Member& a = tournament(pop, cfg.tournament, rng);
          const Member& b = tournament(pop, cfg.tournament, rng);
          if (auto e = crossover(a.expr, b.expr, cfg.max_size, rng)) child = eval.evaluate(*e, rng);
        }
        if (!child) child = mutate(tournament(pop, cfg.tournament, rng), cfg, eval, rng);
        children.push_back(note(std::move(*child)));
      }
      for (auto& c : children) pop[oldest(pop)] = std::move(c);
    }
    for (const auto& pop : islands) submit(best_by_score(pop, cfg.hof_submissions));
    if (gen % std::max(cfg.hof_period, 1) == 0 && !hof.empty()) {
      for (auto& pop : islands) {
        Member m = pick(hof, rng);
        m.age = births++;
        pop[oldest(pop)] = std::move(m);
      }
    }
    snapshot(gen);
  }

  for (const auto& m : hof) rec.elite.push_back({m.expr, m.fit.params, m.raw_loss});
  CanonicalCache cache;
  for (const auto& [text, m] : ever) rec.front.update(make_scored({m.expr, m.fit.params, m.raw_loss}, cache));
  rec.checker_invocations = checker.invocations() - calls_before;
  return rec;
}

}  // namespace isosr
