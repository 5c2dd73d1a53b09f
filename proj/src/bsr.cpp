#include "isosr/bsr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isosr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Expr leaf_of(int which) { return which == 0 ? Expr::variable() : Expr::parameter(1); }

bool is_elementary(const Expr& e) {
  if (e.is_leaf()) return false;
  for (int i = 0; i < e.child_count(); ++i)
    if (!e.child(i).is_leaf()) return false;
  return true;
}

Expr rebuild(const Expr& node, OpKind op) {
  if (arity(op) == 1) return Expr::unary(op, node.child(0));
  return Expr::binary(op, node.child(0), node.child(1));
}

Expr flip_leaf(const Expr& leaf) { return leaf.is_variable() ? Expr::parameter(1) : Expr::variable(); }

std::vector<OpKind> alternatives(const OpSet& ops, OpKind op) {
  std::vector<OpKind> out;
  for (OpKind o : ops.with_arity(arity(op)))
    if (o != op) out.push_back(o);
  return out;
}

struct Site {
  int index;
  Expr node;
};

std::vector<Site> et_sites(const Expr& e) {
  std::vector<Site> out;
  const auto nodes = preorder(e);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].is_leaf() || is_elementary(nodes[i])) out.push_back({i, nodes[i]});
  return out;
}

// Root removal options: the child that is kept.
std::vector<int> removal_options(const Expr& e) {
  std::vector<int> out;
  if (e.is_leaf()) return out;
  if (e.child_count() == 1) return {0};
  if (e.child(1).is_leaf()) out.push_back(0);
  if (e.child(0).is_leaf()) out.push_back(1);
  return out;
}

// Preorder tokens with parameter indices erased, plus subtree extents.
// Two distinct-parameter trees are equal exactly when their tokens are.
struct Flat {
  std::vector<std::uint8_t> tok;
  std::vector<int> span;
  int size() const { return static_cast<int>(tok.size()); }
};

constexpr std::uint8_t kVarTok = 0, kParTok = 1, kIntTok = 2, kOpTok = 16;

bool is_leaf_tok(std::uint8_t t) { return t < kOpTok; }
OpKind tok_op(std::uint8_t t) { return static_cast<OpKind>(t - kOpTok); }

int flatten_rec(const Expr& e, Flat& f) {
  const std::size_t at = f.tok.size();
  f.tok.push_back(e.is_variable()    ? kVarTok
                  : e.is_parameter() ? kParTok
                  : e.is_integer()   ? kIntTok
                                     : static_cast<std::uint8_t>(kOpTok + static_cast<int>(e.op())));
  f.span.push_back(1);
  int n = 1;
  for (int i = 0; i < e.child_count(); ++i) n += flatten_rec(e.child(i), f);
  f.span[at] = n;
  return n;
}

Flat flatten(const Expr& e) {
  Flat f;
  f.tok.reserve(static_cast<std::size_t>(e.size()));
  f.span.reserve(static_cast<std::size_t>(e.size()));
  flatten_rec(e, f);
  return f;
}

bool equal_range(const Flat& a, int a0, const Flat& b, int b0, int n) {
  return std::equal(a.tok.begin() + a0, a.tok.begin() + a0 + n, b.tok.begin() + b0);
}

// Lengths of the longest common prefix and suffix.
std::pair<int, int> common_ends(const Flat& a, const Flat& b) {
  const int m = std::min(a.size(), b.size());
  int pre = 0;
  while (pre < m && a.tok[pre] == b.tok[pre]) ++pre;
  int suf = 0;
  while (suf < m && a.tok[a.size() - 1 - suf] == b.tok[b.size() - 1 - suf]) ++suf;
  return {pre, suf};
}

// Does `to` equal `from` with the subtree at i (old extent) swapped for
// `len` tokens? Only the ends are checked; the middle is the caller's job.
bool frame_matches(const Flat& from, const Flat& to, int i, int len, std::pair<int, int> ends) {
  const int old = from.span[i];
  if (from.size() - old + len != to.size()) return false;
  return ends.first >= i && ends.second >= from.size() - i - old;
}

double nr_probability(const Flat& from, const Flat& to, const BsrConfig& cfg) {
  if (from.size() != to.size()) return 0.0;
  int diff = -1;
  for (int i = 0; i < from.size(); ++i)
    if (from.tok[i] != to.tok[i]) {
      if (diff >= 0) return 0.0;
      diff = i;
    }
  if (diff < 0) return 0.0;
  const double n = from.size();
  const std::uint8_t a = from.tok[diff], b = to.tok[diff];
  if (is_leaf_tok(a) || is_leaf_tok(b)) {
    const bool flip = (a == kVarTok && b == kParTok) || (a == kParTok && b == kVarTok);
    return flip ? 1.0 / n : 0.0;
  }
  if (arity(tok_op(a)) != arity(tok_op(b)) || !cfg.ops.contains(tok_op(b))) return 0.0;
  return 1.0 / n / static_cast<double>(alternatives(cfg.ops, tok_op(a)).size());
}

bool bsr_leaf(std::uint8_t t) { return t == kVarTok || t == kParTok; }

double rr_probability(const Flat& from, const Flat& to, const BsrConfig& cfg) {
  const double p_op = 1.0 / static_cast<double>(cfg.ops.members().size());
  const int grow = to.size() - from.size();
  const int n = from.size();
  double total = 0.0;
  if ((grow == 1 || grow == 2) && !is_leaf_tok(to.tok[0])) {
    const OpKind op = tok_op(to.tok[0]);
    if (!cfg.ops.contains(op) || arity(op) != grow) return 0.0;
    if (grow == 1) return equal_range(from, 0, to, 1, n) ? 0.5 * p_op : 0.0;
    // new root with the old tree on the left, then on the right
    if (equal_range(from, 0, to, 1, n) && bsr_leaf(to.tok[1 + n])) total += 0.5 * p_op * 0.25;
    if (bsr_leaf(to.tok[1]) && equal_range(from, 0, to, 2, n)) total += 0.5 * p_op * 0.25;
    return total;
  }
  if ((grow == -1 || grow == -2) && !is_leaf_tok(from.tok[0])) {
    if (arity(tok_op(from.tok[0])) == 1) return equal_range(from, 1, to, 0, to.size()) ? 0.5 : 0.0;
    const int right = 1 + from.span[1];
    std::vector<int> keep;  // kept child start, when the discarded sibling is a leaf
    if (is_leaf_tok(from.tok[right])) keep.push_back(1);
    if (is_leaf_tok(from.tok[1])) keep.push_back(right);
    for (int k : keep)
      if (from.span[k] == to.size() && equal_range(from, k, to, 0, to.size()))
        total += 0.5 / static_cast<double>(keep.size());
  }
  return total;
}

double et_probability(const Flat& from, const Flat& to, const BsrConfig& cfg) {
  const int grow = to.size() - from.size();
  if (grow == 0 || std::abs(grow) > 2) return 0.0;
  const double p_op = 1.0 / static_cast<double>(cfg.ops.members().size());
  const auto ends = common_ends(from, to);
  int sites = 0;
  double hits = 0.0;
  for (int i = 0; i < from.size(); ++i) {
    const std::uint8_t t = from.tok[i];
    const bool leaf = is_leaf_tok(t);
    const bool elementary = !leaf && from.span[i] == 1 + arity(tok_op(t));
    if (!leaf && !elementary) continue;
    ++sites;
    if (leaf) {
      if (grow < 0 || !frame_matches(from, to, i, 1 + grow, ends) || is_leaf_tok(to.tok[i])) continue;
      const OpKind op = tok_op(to.tok[i]);
      if (!cfg.ops.contains(op) || arity(op) != grow) continue;
      bool ok = true;
      for (int j = 1; j <= grow; ++j) ok = ok && bsr_leaf(to.tok[i + j]);
      if (ok) hits += p_op * std::pow(0.5, grow);
    } else {
      if (from.span[i] - 1 != -grow || !frame_matches(from, to, i, 1, ends)) continue;
      if (bsr_leaf(to.tok[i])) hits += 0.5;
    }
  }
  return sites > 0 ? hits / sites : 0.0;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

double bic(double loss, int parameters, std::size_t n) {
  if (n == 0) throw std::invalid_argument("bic: empty dataset");
  if (!(loss < kSentinelLoss)) return kInf;
  const double N = static_cast<double>(n);
  const double sse = std::max(N * loss, 1e-30);
  return N * std::log(sse / N) + (parameters + 1) * std::log(N);
}

double bic(const Expr& e, const FitResult& fit, const Dataset& d) {
  return bic(fit.loss, parameter_count(e), d.size());
}

double prior_energy(const Expr& e, const std::optional<ConstraintVerdict>& verdict, const BsrConfig& cfg) {
  double ep = cfg.c_ops * operator_count(e);
  if (verdict) {
    if (cfg.penalties[0] > 0.0 && verdict->checked[0] && !verdict->c1_pass) ep += cfg.penalties[0];
    if (cfg.penalties[1] > 0.0 && verdict->checked[1] && !verdict->c2_pass) ep += cfg.penalties[1];
  }
  return ep + cfg.c_par * parameter_count(e);
}

double proposal_probability(const Expr& from, const Expr& to, const BsrConfig& cfg) {
  const Flat a = flatten(from), b = flatten(to);
  const auto& f = cfg.move_frequencies;
  const double sum = f[0] + f[1] + f[2];
  return (f[0] * nr_probability(a, b, cfg) + f[1] * rr_probability(a, b, cfg) + f[2] * et_probability(a, b, cfg)) /
         sum;
}

Proposal propose_move(const Expr& current, const BsrConfig& cfg, Rng& rng) {
  Proposal prop;
  prop.candidate = current;
  const auto& f = cfg.move_frequencies;
  prop.kind = static_cast<MoveKind>(std::discrete_distribution<int>({f[0], f[1], f[2]})(rng));
  std::optional<Expr> cand;
  switch (prop.kind) {
    case MoveKind::NodeReplace: {
      const auto nodes = preorder(current);
      const int i = std::uniform_int_distribution<int>(0, static_cast<int>(nodes.size()) - 1)(rng);
      const Expr& node = nodes[static_cast<std::size_t>(i)];
      if (node.is_leaf()) {
        cand = replace_at(current, i, flip_leaf(node));
      } else {
        const auto alts = alternatives(cfg.ops, node.op());
        if (!alts.empty()) cand = replace_at(current, i, rebuild(node, pick(alts, rng)));
      }
      break;
    }
    case MoveKind::RootAddRemove: {
      if (std::bernoulli_distribution(0.5)(rng)) {
        const OpKind op = pick(cfg.ops.members(), rng);
        if (arity(op) == 1) {
          cand = Expr::unary(op, current);
        } else {
          const bool left = std::bernoulli_distribution(0.5)(rng);
          const Expr leaf = leaf_of(std::uniform_int_distribution<int>(0, 1)(rng));
          cand = left ? Expr::binary(op, current, leaf) : Expr::binary(op, leaf, current);
        }
      } else {
        const auto opts = removal_options(current);
        if (!opts.empty()) cand = current.child(pick(opts, rng));
      }
      break;
    }
    case MoveKind::ElementaryTree: {
      const auto sites = et_sites(current);
      const Site& s = pick(sites, rng);
      if (s.node.is_leaf()) {
        const auto members = cfg.ops.members();
        const OpKind op = pick(members, rng);
        const Expr a = leaf_of(std::uniform_int_distribution<int>(0, 1)(rng));
        if (arity(op) == 1) {
          cand = replace_at(current, s.index, Expr::unary(op, a));
        } else {
          const Expr b = leaf_of(std::uniform_int_distribution<int>(0, 1)(rng));
          cand = replace_at(current, s.index, Expr::binary(op, a, b));
        }
      } else {
        cand = replace_at(current, s.index, leaf_of(std::uniform_int_distribution<int>(0, 1)(rng)));
      }
      break;
    }
  }
  if (!cand) {
    prop.applicable = false;
    return prop;
  }
  prop.candidate = distinct_parameters(*cand);
  const double fwd = proposal_probability(current, prop.candidate, cfg);
  const double rev = proposal_probability(prop.candidate, current, cfg);
  prop.log_ratio = std::log(rev) - std::log(fwd);
  return prop;
}

BsrEvaluator::BsrEvaluator(const Dataset* d, const BsrConfig& cfg, ConstraintChecker* checker)
    : data_(d), cfg_(cfg), checker_(checker) {
  if (checker_) range_ = checker_->config().range;
  if (data_) range_.stop = 10.0 * data_->max_pressure();
}

ChainState BsrEvaluator::evaluate(const Expr& e, Rng& rng) {
  ChainState s;
  s.expr = e;
  const int k = e.max_param_index();
  if (data_) {
    const std::string key = render(e);
    auto it = fit_memo_.find(key);
    if (it == fit_memo_.end()) {
      ++fits_;
      it = fit_memo_.emplace(key, fit_constants(e, *data_, rng, cfg_.fit)).first;
    }
    s.fit = it->second;
    s.bic_value = bic(s.fit.loss, parameter_count(e), data_->size());
  } else {
    s.fit.params.assign(static_cast<std::size_t>(k), 1.0);
    s.fit.loss = 0.0;
    s.fit.converged = true;
  }
  if (cfg_.constraints_active() && checker_) s.verdict = checker_->check(e, s.fit.params, cfg_.check_mask(), &range_);
  s.prior = prior_energy(e, s.verdict, cfg_);
  s.description_length = data_ ? s.bic_value / 2 + s.prior : s.prior;
  return s;
}

double acceptance_probability(double delta_l, double log_ratio) {
  if (std::isnan(delta_l) || delta_l == kInf) return 0.0;
  const double x = -delta_l + log_ratio;
  return x >= 0.0 ? 1.0 : std::exp(x);
}

bool mcmc_step(ChainState& state, BsrEvaluator& eval, const BsrConfig& cfg, Rng& rng) {
  Proposal prop = propose_move(state.expr, cfg, rng);
  if (!prop.applicable || prop.candidate.size() > cfg.max_size) return false;
  ChainState cand = eval.evaluate(prop.candidate, rng);
  double a;
  if (cand.description_length == kInf)
    a = 0.0;
  else if (state.description_length == kInf)
    a = 1.0;
  else
    a = acceptance_probability(cand.description_length - state.description_length, prop.log_ratio);
  if (a >= 1.0 || std::uniform_real_distribution<double>(0.0, 1.0)(rng) < a) {
    state = std::move(cand);
    return true;
  }
  return false;
}

RunRecord run_bsr(const Dataset* d, const BsrConfig& cfg, ConstraintChecker* checker, Rng& rng) {
  if (cfg.thinning < 1) throw std::invalid_argument("run_bsr: thinning must be >= 1");
  const std::uint64_t calls_before = checker ? checker->invocations() : 0;
  BsrEvaluator eval(d, cfg, checker);
  RunRecord rec;
  rec.engine = "bsr";
  ChainState state = eval.evaluate(Expr::parameter(1), rng);
  std::map<std::string, Sample> distinct;
  auto keep = [&](const ChainState& s) {
    Sample smp{s.expr, s.fit.params, s.fit.loss};
    auto [it, fresh] = distinct.emplace(render(s.expr), smp);
    if (!fresh && smp.loss < it->second.loss) it->second = smp;
  };
  rec.samples.push_back({state.expr, state.fit.params, state.fit.loss});
  keep(state);
  long accepted = 0;
  for (long step = 1; step <= cfg.steps; ++step) {
    if (mcmc_step(state, eval, cfg, rng)) {
      ++accepted;
      keep(state);
    }
    if (step % cfg.thinning == 0) rec.samples.push_back({state.expr, state.fit.params, state.fit.loss});
  }
  rec.acceptance_rate = cfg.steps > 0 ? static_cast<double>(accepted) / static_cast<double>(cfg.steps) : 0.0;
  for (auto& [text, s] : distinct) rec.elite.push_back(s);
  if (d) {
    CanonicalCache cache;
    for (const auto& s : rec.elite)
      if (s.loss < kSentinelLoss) rec.front.update(make_scored(s, cache));
  }
  rec.checker_invocations = checker ? checker->invocations() - calls_before : 0;
  return rec;
}

}  // namespace isosr
