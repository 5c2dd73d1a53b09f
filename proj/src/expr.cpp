#include "isosr/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace isosr {

struct Node {
  NodeKind kind = NodeKind::Variable;
  OpKind op = OpKind::Add;
  std::int64_t value = 0;
  std::shared_ptr<const Node> a, b;
  int size = 1;
  int depth = 1;
  int max_param = 0;
  bool has_var = false;
};

namespace {

constexpr std::array<std::string_view, 8> kOpNames = {"+", "-", "*", "/", "sqrt", "square", "cube", "^"};

std::shared_ptr<const Node> make_leaf(NodeKind kind, std::int64_t value) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->value = value;
  n->has_var = kind == NodeKind::Variable;
  n->max_param = kind == NodeKind::Parameter ? static_cast<int>(value) : 0;
  return n;
}

const std::shared_ptr<const Node>& variable_node() {
  static const std::shared_ptr<const Node> v = make_leaf(NodeKind::Variable, 0);
  return v;
}

}  // namespace

std::string_view op_name(OpKind op) { return kOpNames[static_cast<std::size_t>(op)]; }

OpSet::OpSet(std::initializer_list<OpKind> ops) {
  for (OpKind op : ops) bits_ |= static_cast<std::uint16_t>(1u << static_cast<unsigned>(op));
}

OpSet OpSet::genetic() { return {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div}; }

OpSet OpSet::bayesian() {
  return {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div, OpKind::Square, OpKind::Cube, OpKind::Sqrt};
}

std::vector<OpKind> OpSet::members() const {
  std::vector<OpKind> out;
  for (unsigned i = 0; i < kOpNames.size(); ++i)
    if ((bits_ >> i) & 1u) out.push_back(static_cast<OpKind>(i));
  return out;
}

std::vector<OpKind> OpSet::with_arity(int n) const {
  std::vector<OpKind> out;
  for (OpKind op : members())
    if (arity(op) == n) out.push_back(op);
  return out;
}

// ---------------------------------------------------------------------------

Expr::Expr() : node_(variable_node()) {}

Expr Expr::variable() { return Expr(variable_node()); }

Expr Expr::parameter(int index) {
  if (index < 1) throw std::invalid_argument("parameter index must be >= 1");
  return Expr(make_leaf(NodeKind::Parameter, index));
}

Expr Expr::integer(std::int64_t value) { return Expr(make_leaf(NodeKind::Integer, value)); }

Expr Expr::unary(OpKind op, Expr child) {
  if (arity(op) != 1) throw std::invalid_argument(fmt::format("operator {} is not unary", op_name(op)));
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Operator;
  n->op = op;
  n->a = child.node_;
  n->size = 1 + child.node_->size;
  n->depth = 1 + child.node_->depth;
  n->max_param = child.node_->max_param;
  n->has_var = child.node_->has_var;
  return Expr(std::move(n));
}

Expr Expr::binary(OpKind op, Expr lhs, Expr rhs) {
  if (arity(op) != 2) throw std::invalid_argument(fmt::format("operator {} is not binary", op_name(op)));
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Operator;
  n->op = op;
  n->a = lhs.node_;
  n->b = rhs.node_;
  n->size = 1 + lhs.node_->size + rhs.node_->size;
  n->depth = 1 + std::max(lhs.node_->depth, rhs.node_->depth);
  n->max_param = std::max(lhs.node_->max_param, rhs.node_->max_param);
  n->has_var = lhs.node_->has_var || rhs.node_->has_var;
  return Expr(std::move(n));
}

Expr Expr::make(OpKind op, std::span<const Expr> children) {
  if (static_cast<int>(children.size()) != arity(op))
    throw std::invalid_argument(fmt::format("operator {} takes {} operands, got {}", op_name(op), arity(op),
                                            children.size()));
  return arity(op) == 1 ? unary(op, children[0]) : binary(op, children[0], children[1]);
}

NodeKind Expr::kind() const { return node_->kind; }
OpKind Expr::op() const { return node_->op; }
int Expr::param_index() const { return static_cast<int>(node_->value); }
std::int64_t Expr::integer_value() const { return node_->value; }
int Expr::child_count() const {
  return node_->kind == NodeKind::Operator ? arity(node_->op) : 0;
}
Expr Expr::child(int i) const { return Expr(i == 0 ? node_->a : node_->b); }
int Expr::size() const { return node_->size; }
int Expr::depth() const { return node_->depth; }
bool Expr::contains_variable() const { return node_->has_var; }
int Expr::max_param_index() const { return node_->max_param; }

namespace {
bool nodes_equal(const Node* x, const Node* y) {
  if (x == y) return true;
  if (x->kind != y->kind || x->size != y->size) return false;
  if (x->kind != NodeKind::Operator) return x->value == y->value;
  if (x->op != y->op) return false;
  if (!nodes_equal(x->a.get(), y->a.get())) return false;
  return arity(x->op) == 1 || nodes_equal(x->b.get(), y->b.get());
}
}  // namespace

bool Expr::operator==(const Expr& other) const { return nodes_equal(node_.get(), other.node_.get()); }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(OpKind::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(OpKind::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(OpKind::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(OpKind::Div, a, b); }
Expr sqrt(const Expr& a) { return Expr::unary(OpKind::Sqrt, a); }
Expr square(const Expr& a) { return Expr::unary(OpKind::Square, a); }
Expr cube(const Expr& a) { return Expr::unary(OpKind::Cube, a); }
Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(OpKind::Pow, base, exponent); }

int complexity(const Expr& e) { return e.size(); }

int operator_count(const Expr& e) {
  if (e.is_leaf()) return 0;
  int n = 1;
  for (int i = 0; i < e.child_count(); ++i) n += operator_count(e.child(i));
  return n;
}

namespace {
void collect_params(const Expr& e, std::vector<int>& seen) {
  if (e.is_parameter()) {
    if (std::find(seen.begin(), seen.end(), e.param_index()) == seen.end()) seen.push_back(e.param_index());
    return;
  }
  for (int i = 0; i < e.child_count(); ++i) collect_params(e.child(i), seen);
}
}  // namespace

int parameter_count(const Expr& e) {
  std::vector<int> seen;
  collect_params(e, seen);
  return static_cast<int>(seen.size());
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

inline double finite_or_nan(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

inline double apply_op(OpKind op, double x, double y) {
  switch (op) {
    case OpKind::Add: return finite_or_nan(x + y);
    case OpKind::Sub: return finite_or_nan(x - y);
    case OpKind::Mul: return finite_or_nan(x * y);
    case OpKind::Div: return y == 0.0 ? std::numeric_limits<double>::quiet_NaN() : finite_or_nan(x / y);
    case OpKind::Sqrt: return x < 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(x);
    case OpKind::Square: return finite_or_nan(x * x);
    case OpKind::Cube: return finite_or_nan(x * x * x);
    case OpKind::Pow:
      // pow(1, NaN) is 1 in C; undefined must stay undefined
      if (std::isnan(x) || std::isnan(y)) return std::numeric_limits<double>::quiet_NaN();
      return finite_or_nan(std::pow(x, y));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double eval_rec(const Expr& e, std::span<const double> params, double p) {
  switch (e.kind()) {
    case NodeKind::Variable: return p;
    case NodeKind::Parameter: return params[static_cast<std::size_t>(e.param_index() - 1)];
    case NodeKind::Integer: return static_cast<double>(e.integer_value());
    case NodeKind::Operator: break;
  }
  double x = eval_rec(e.child(0), params, p);
  if (std::isnan(x)) return x;
  double y = 0.0;
  if (e.child_count() == 2) {
    y = eval_rec(e.child(1), params, p);
    if (std::isnan(y)) return y;
  }
  return apply_op(e.op(), x, y);
}

}  // namespace

std::optional<double> evaluate(const Expr& e, std::span<const double> params, double p) {
  if (static_cast<int>(params.size()) < e.max_param_index())
    throw std::invalid_argument(
        fmt::format("expression uses c{} but only {} parameter values given", e.max_param_index(), params.size()));
  double v = eval_rec(e, params, p);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// structure helpers

namespace {

Expr renumber_rec(const Expr& e, std::map<int, int>& mapping, std::vector<int>* old_of) {
  if (e.is_parameter()) {
    auto [it, inserted] = mapping.emplace(e.param_index(), static_cast<int>(mapping.size()) + 1);
    if (inserted && old_of) old_of->push_back(e.param_index());
    if (it->second == e.param_index()) return e;
    return Expr::parameter(it->second);
  }
  if (e.is_leaf()) return e;
  if (e.child_count() == 1) {
    Expr c = renumber_rec(e.child(0), mapping, old_of);
    return c.same_node(e.child(0)) ? e : Expr::unary(e.op(), c);
  }
  Expr l = renumber_rec(e.child(0), mapping, old_of);
  Expr r = renumber_rec(e.child(1), mapping, old_of);
  if (l.same_node(e.child(0)) && r.same_node(e.child(1))) return e;
  return Expr::binary(e.op(), l, r);
}

void preorder_rec(const Expr& e, std::vector<Expr>& out) {
  out.push_back(e);
  for (int i = 0; i < e.child_count(); ++i) preorder_rec(e.child(i), out);
}

Expr replace_rec(const Expr& e, int& index, const Expr& replacement) {
  if (index == 0) {
    index = -1;
    return replacement;
  }
  --index;
  if (e.is_leaf()) return e;
  Expr l = replace_rec(e.child(0), index, replacement);
  if (e.child_count() == 1) return l.same_node(e.child(0)) ? e : Expr::unary(e.op(), l);
  if (index < 0) return l.same_node(e.child(0)) ? e : Expr::binary(e.op(), l, e.child(1));
  Expr r = replace_rec(e.child(1), index, replacement);
  if (l.same_node(e.child(0)) && r.same_node(e.child(1))) return e;
  return Expr::binary(e.op(), l, r);
}

}  // namespace

Expr renumber_parameters(const Expr& e, std::vector<int>* old_index_of) {
  std::map<int, int> mapping;
  if (old_index_of) old_index_of->clear();
  return renumber_rec(e, mapping, old_index_of);
}

namespace {
Expr distinct_rec(const Expr& e, int& next) {
  if (e.is_parameter()) return Expr::parameter(++next);
  if (e.is_leaf()) return e;
  if (e.child_count() == 1) return Expr::unary(e.op(), distinct_rec(e.child(0), next));
  Expr a = distinct_rec(e.child(0), next);
  return Expr::binary(e.op(), a, distinct_rec(e.child(1), next));
}
}  // namespace

Expr distinct_parameters(const Expr& e) {
  int next = 0;
  return distinct_rec(e, next);
}

std::vector<Expr> preorder(const Expr& e) {
  std::vector<Expr> out;
  out.reserve(static_cast<std::size_t>(e.size()));
  preorder_rec(e, out);
  return out;
}

Expr replace_at(const Expr& root, int index, const Expr& replacement) {
  if (index < 0 || index >= root.size()) throw std::out_of_range("replace_at: index outside tree");
  int i = index;
  return replace_rec(root, i, replacement);
}

// ---------------------------------------------------------------------------
// text

namespace {

void render_rec(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case NodeKind::Variable: out += 'p'; return;
    case NodeKind::Parameter: fmt::format_to(std::back_inserter(out), "c{}", e.param_index()); return;
    case NodeKind::Integer:
      if (e.integer_value() < 0)
        fmt::format_to(std::back_inserter(out), "({})", e.integer_value());
      else
        fmt::format_to(std::back_inserter(out), "{}", e.integer_value());
      return;
    case NodeKind::Operator: break;
  }
  if (e.child_count() == 1) {
    out += op_name(e.op());
    out += '(';
    render_rec(e.child(0), out);
    out += ')';
    return;
  }
  auto operand = [&out](const Expr& c) {
    bool wrap = !c.is_leaf() && c.child_count() == 2;
    if (wrap) out += '(';
    render_rec(c, out);
    if (wrap) out += ')';
  };
  operand(e.child(0));
  out += ' ';
  out += op_name(e.op());
  out += ' ';
  operand(e.child(1));
}

struct Token {
  enum Kind { Int, Ident, Op, LParen, RParen, End } kind;
  std::string text;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < s.size()) {
    char ch = s[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size() && (s[i] == '.' || s[i] == 'e' || s[i] == 'E'))
        throw ParseError(fmt::format("only integer literals are supported (column {})", start), toks.size() + 1,
                         start);
      toks.push_back({Token::Int, std::string(s.substr(start, i - start)), start});
    } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      toks.push_back({Token::Ident, std::string(s.substr(start, i - start)), start});
    } else if (ch == '*' && i + 1 < s.size() && s[i + 1] == '*') {
      i += 2;
      toks.push_back({Token::Op, "^", start});
    } else if (ch == '+' || ch == '-' || ch == '*' || ch == '/' || ch == '^') {
      ++i;
      toks.push_back({Token::Op, std::string(1, ch), start});
    } else if (ch == '(') {
      ++i;
      toks.push_back({Token::LParen, "(", start});
    } else if (ch == ')') {
      ++i;
      toks.push_back({Token::RParen, ")", start});
    } else {
      throw ParseError(fmt::format("unexpected character '{}' at column {}", ch, start), toks.size() + 1, start);
    }
  }
  toks.push_back({Token::End, "", s.size()});
  return toks;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : toks_(tokenize(s)) {}

  Expr parse_all() {
    Expr e = parse_sum();
    if (peek().kind != Token::End) fail("unexpected token '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool peek_op(char c) const { return peek().kind == Token::Op && peek().text[0] == c; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string where = t.kind == Token::End ? "end of input" : fmt::format("column {}", t.column);
    throw ParseError(fmt::format("{} at token {} ({})", msg, pos_ + 1, where), pos_ + 1, t.column);
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    while (peek_op('+') || peek_op('-')) {
      OpKind op = peek().text[0] == '+' ? OpKind::Add : OpKind::Sub;
      ++pos_;
      lhs = Expr::binary(op, lhs, parse_product());
    }
    return lhs;
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    while (peek_op('*') || peek_op('/')) {
      OpKind op = peek().text[0] == '*' ? OpKind::Mul : OpKind::Div;
      ++pos_;
      lhs = Expr::binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek_op('-')) {
      ++pos_;
      if (peek().kind != Token::Int) fail("unary minus is only supported on integer literals");
      Expr lit = Expr::integer(-read_int());
      return parse_power_tail(lit);
    }
    return parse_power_tail(parse_atom());
  }

  Expr parse_power_tail(Expr base) {
    if (peek_op('^')) {
      ++pos_;
      return Expr::binary(OpKind::Pow, base, parse_unary());
    }
    return base;
  }

  std::int64_t read_int() {
    const Token& t = peek();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) fail("integer literal out of range");
    ++pos_;
    return v;
  }

  Expr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Int: return Expr::integer(read_int());
      case Token::LParen: {
        ++pos_;
        Expr inner = parse_sum();
        if (peek().kind != Token::RParen) fail("expected ')'");
        ++pos_;
        return inner;
      }
      case Token::Ident: {
        if (t.text == "p") {
          ++pos_;
          return Expr::variable();
        }
        if (t.text.size() > 1 && t.text[0] == 'c' &&
            std::all_of(t.text.begin() + 1, t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
          int idx = 0;
          std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), idx);
          if (idx < 1) fail("parameter indices start at c1");
          ++pos_;
          return Expr::parameter(idx);
        }
        OpKind op;
        if (t.text == "sqrt")
          op = OpKind::Sqrt;
        else if (t.text == "square")
          op = OpKind::Square;
        else if (t.text == "cube")
          op = OpKind::Cube;
        else
          fail("unknown identifier '" + t.text + "'");
        ++pos_;
        if (peek().kind != Token::LParen) fail("expected '(' after " + std::string(op_name(op)));
        ++pos_;
        Expr arg = parse_sum();
        if (peek().kind != Token::RParen) fail("expected ')'");
        ++pos_;
        return Expr::unary(op, arg);
      }
      case Token::End: fail("unexpected end of input");
      default: fail("unexpected token '" + t.text + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string render(const Expr& e) {
  std::string out;
  out.reserve(static_cast<std::size_t>(e.size()) * 4);
  render_rec(e, out);
  return out;
}

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// random trees

Expr random_leaf(double variable_prob, int param_index, Rng& rng) {
  std::bernoulli_distribution is_var(variable_prob);
  return is_var(rng) ? Expr::variable() : Expr::parameter(param_index);
}

Expr random_tree(const RandomTreeConfig& cfg, const OpSet& ops, Rng& rng) {
  if (cfg.max_depth < 1 || cfg.max_size < 1) throw std::invalid_argument("random_tree: bounds must be >= 1");
  int hi = std::max(1, static_cast<int>(std::lround(2.0 * cfg.target_size - 1.0)));
  int wanted = std::min(cfg.max_size, std::uniform_int_distribution<int>(1, hi)(rng));

  Expr tree = random_leaf(cfg.variable_leaf_prob, 1, rng);
  std::vector<OpKind> all = ops.members();
  while (tree.size() < wanted && cfg.max_depth > 1) {
    int room = wanted - tree.size();
    std::vector<OpKind> fitting;
    for (OpKind op : all)
      if (arity(op) <= room) fitting.push_back(op);
    if (fitting.empty()) break;

    // leaves that can still grow without exceeding max_depth
    std::vector<int> sites;
    std::vector<std::pair<Expr, int>> stack{{tree, 1}};
    int index = 0;
    while (!stack.empty()) {
      auto [node, d] = stack.back();
      stack.pop_back();
      if (node.is_leaf() && d < cfg.max_depth) sites.push_back(index);
      ++index;
      for (int i = node.child_count() - 1; i >= 0; --i) stack.push_back({node.child(i), d + 1});
    }
    if (sites.empty()) break;

    int site = sites[std::uniform_int_distribution<std::size_t>(0, sites.size() - 1)(rng)];
    OpKind op = fitting[std::uniform_int_distribution<std::size_t>(0, fitting.size() - 1)(rng)];
    Expr old_leaf = preorder(tree)[static_cast<std::size_t>(site)];
    int next_param = tree.max_param_index() + 1;
    Expr grown;
    if (arity(op) == 1) {
      grown = Expr::unary(op, old_leaf);
    } else {
      Expr fresh = random_leaf(cfg.variable_leaf_prob, next_param, rng);
      grown = std::bernoulli_distribution(0.5)(rng) ? Expr::binary(op, old_leaf, fresh)
                                                    : Expr::binary(op, fresh, old_leaf);
    }
    tree = replace_at(tree, site, grown);
  }
  return renumber_parameters(tree);
}

// ---------------------------------------------------------------------------
// compiled evaluation

namespace {
enum Code : std::uint8_t { kVar = 100, kParam = 101, kConst = 102 };
constexpr int kMaxStack = 256;

void compile_rec(const Expr& e, int& depth, int& max_depth, auto& emit) {
  switch (e.kind()) {
    case NodeKind::Variable: emit(kVar, 0, 0.0); break;
    case NodeKind::Parameter: emit(kParam, e.param_index() - 1, 0.0); break;
    case NodeKind::Integer: emit(kConst, 0, static_cast<double>(e.integer_value())); break;
    case NodeKind::Operator:
      for (int i = 0; i < e.child_count(); ++i) compile_rec(e.child(i), depth, max_depth, emit);
      emit(static_cast<std::uint8_t>(e.op()), 0, 0.0);
      depth -= e.child_count();
      break;
  }
  ++depth;
  max_depth = std::max(max_depth, depth);
}
}  // namespace

CompiledExpr::CompiledExpr(const Expr& e) : slots_(e.max_param_index()) {
  code_.reserve(static_cast<std::size_t>(e.size()));
  int depth = 0;
  auto emit = [this](std::uint8_t c, std::int32_t idx, double v) { code_.push_back({c, idx, v}); };
  compile_rec(e, depth, max_stack_, emit);
  if (max_stack_ > kMaxStack) throw std::invalid_argument("expression too deep to compile");
}

double CompiledExpr::operator()(std::span<const double> params, double p) const {
  std::array<double, kMaxStack> stack;
  int top = -1;
  for (const Instr& ins : code_) {
    switch (ins.code) {
      case kVar: stack[static_cast<std::size_t>(++top)] = p; break;
      case kParam: stack[static_cast<std::size_t>(++top)] = params[static_cast<std::size_t>(ins.index)]; break;
      case kConst: stack[static_cast<std::size_t>(++top)] = ins.value; break;
      default: {
        auto op = static_cast<OpKind>(ins.code);
        if (arity(op) == 1) {
          auto& x = stack[static_cast<std::size_t>(top)];
          x = apply_op(op, x, 0.0);
        } else {
          double y = stack[static_cast<std::size_t>(top--)];
          auto& x = stack[static_cast<std::size_t>(top)];
          x = apply_op(op, x, y);
        }
      }
    }
  }
  return stack[0];
}

void CompiledExpr::evaluate_many(std::span<const double> params, std::span<const double> ps,
                                 std::span<double> out) const {
  const std::size_t n = ps.size();
  if (out.size() < n) throw std::invalid_argument("evaluate_many: output too small");
  thread_local std::vector<double> scratch;
  scratch.resize(static_cast<std::size_t>(std::max(max_stack_, 1)) * n);
  int top = -1;
  auto slot = [&](int k) { return scratch.data() + static_cast<std::size_t>(k) * n; };
  for (const Instr& ins : code_) {
    switch (ins.code) {
      case kVar: std::copy(ps.begin(), ps.end(), slot(++top)); break;
      case kParam: std::fill_n(slot(++top), n, params[static_cast<std::size_t>(ins.index)]); break;
      case kConst: std::fill_n(slot(++top), n, ins.value); break;
      default: {
        const auto op = static_cast<OpKind>(ins.code);
        if (arity(op) == 1) {
          double* x = slot(top);
          for (std::size_t i = 0; i < n; ++i) x[i] = apply_op(op, x[i], 0.0);
        } else {
          const double* y = slot(top--);
          double* x = slot(top);
          switch (op) {
            case OpKind::Add: for (std::size_t i = 0; i < n; ++i) x[i] = finite_or_nan(x[i] + y[i]); break;
            case OpKind::Sub: for (std::size_t i = 0; i < n; ++i) x[i] = finite_or_nan(x[i] - y[i]); break;
            case OpKind::Mul: for (std::size_t i = 0; i < n; ++i) x[i] = finite_or_nan(x[i] * y[i]); break;
            default: for (std::size_t i = 0; i < n; ++i) x[i] = apply_op(op, x[i], y[i]);
          }
        }
      }
    }
  }
  std::copy_n(slot(0), n, out.begin());
}

}  // namespace isosr
