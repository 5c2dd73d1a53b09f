#pragma once

// Expression trees over one variable `p` and numbered parameters c1..cN.

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isosr {

using Rng = std::mt19937_64;

enum class OpKind : std::uint8_t { Add, Sub, Mul, Div, Sqrt, Square, Cube, Pow };

constexpr int arity(OpKind op) {
  switch (op) {
    case OpKind::Sqrt:
    case OpKind::Square:
    case OpKind::Cube:
      return 1;
    default:
      return 2;
  }
}

std::string_view op_name(OpKind op);

/// A small set of operator kinds.
class OpSet {
 public:
  constexpr OpSet() = default;
  OpSet(std::initializer_list<OpKind> ops);

  /// {+, -, *, /}: the genetic search alphabet.
  static OpSet genetic();
  /// {+, -, *, /, square, cube, sqrt}: the Bayesian search alphabet.
  static OpSet bayesian();

  bool contains(OpKind op) const { return (bits_ >> static_cast<unsigned>(op)) & 1u; }
  bool empty() const { return bits_ == 0; }
  std::vector<OpKind> members() const;
  std::vector<OpKind> with_arity(int n) const;
  OpSet united(OpSet other) const {
    OpSet s;
    s.bits_ = bits_ | other.bits_;
    return s;
  }
  bool operator==(const OpSet&) const = default;

 private:
  std::uint16_t bits_ = 0;
};

enum class NodeKind : std::uint8_t { Variable, Parameter, Integer, Operator };

struct Node;

/// Immutable, structurally shared expression tree. Copies are cheap.
class Expr {
 public:
  Expr();  // the variable p

  static Expr variable();
  static Expr parameter(int index);
  static Expr integer(std::int64_t value);
  static Expr unary(OpKind op, Expr child);
  static Expr binary(OpKind op, Expr lhs, Expr rhs);
  static Expr make(OpKind op, std::span<const Expr> children);

  NodeKind kind() const;
  bool is_leaf() const { return kind() != NodeKind::Operator; }
  bool is_variable() const { return kind() == NodeKind::Variable; }
  bool is_parameter() const { return kind() == NodeKind::Parameter; }
  bool is_integer() const { return kind() == NodeKind::Integer; }
  bool is_integer(std::int64_t v) const { return is_integer() && integer_value() == v; }

  OpKind op() const;
  int param_index() const;
  std::int64_t integer_value() const;
  int child_count() const;
  Expr child(int i) const;

  /// Total node count (internal + leaves).
  int size() const;
  int depth() const;
  bool contains_variable() const;
  /// Largest parameter index used, 0 when there are none.
  int max_param_index() const;

  /// Structural equality.
  bool operator==(const Expr& other) const;
  bool same_node(const Expr& other) const { return node_ == other.node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr sqrt(const Expr& a);
Expr square(const Expr& a);
Expr cube(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);

/// Node count; leaves count 1, internal nodes 1 + their children.
int complexity(const Expr& e);
int operator_count(const Expr& e);
/// Number of distinct parameter indices.
int parameter_count(const Expr& e);

/// Numeric value at pressure p, or nullopt on division by zero, sqrt of a
/// negative, or any non-finite intermediate.
/// Throws std::invalid_argument if params is shorter than the largest index.
std::optional<double> evaluate(const Expr& e, std::span<const double> params, double p);

/// Renumber parameters to c1..cK in order of first appearance (left to right).
/// If `old_index_of` is given it receives, for each new index k, the old
/// index at position k-1.
Expr renumber_parameters(const Expr& e, std::vector<int>* old_index_of = nullptr);
/// Give every parameter leaf its own index, c1..cK left to right. Search
/// engines keep constants unshared this way.
Expr distinct_parameters(const Expr& e);

/// Nodes in preorder. Index 0 is the root.
std::vector<Expr> preorder(const Expr& e);
/// Copy of `root` with the subtree at preorder position `index` replaced.
Expr replace_at(const Expr& root, int index, const Expr& replacement);

/// Infix text: binary operands that are themselves binary are parenthesized,
/// unary operators render as calls, e.g. "(c1 * p) / (c2 + p)".
std::string render(const Expr& e);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t token, std::size_t column)
      : std::runtime_error(what), token_(token), column_(column) {}
  /// 1-based token position of the failure (one past the last token at end of input).
  std::size_t token() const { return token_; }
  /// 0-based character offset.
  std::size_t column() const { return column_; }

 private:
  std::size_t token_;
  std::size_t column_;
};

/// Parses the render() format; also accepts standard precedence without
/// redundant parentheses, `^` and `**` for powers, and sqrt/square/cube calls.
Expr parse(std::string_view text);

struct RandomTreeConfig {
  int max_depth = 6;
  int max_size = 25;
  /// Mean node count the generator aims for.
  double target_size = 7.0;
  /// Probability that a fresh leaf is the variable rather than a parameter.
  double variable_leaf_prob = 0.5;
};

Expr random_leaf(double variable_prob, int param_index, Rng& rng);

/// Random tree grown by repeatedly expanding random leaves until a size drawn
/// uniformly from [1, 2*target-1] (capped by max_size) is reached.
/// Parameters are numbered c1..cK.
Expr random_tree(const RandomTreeConfig& cfg, const OpSet& ops, Rng& rng);

/// Flat postfix program for fast repeated evaluation. Undefined values are NaN.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double operator()(std::span<const double> params, double p) const;
  /// out[i] = (*this)(params, ps[i]); one pass over the program for all points.
  void evaluate_many(std::span<const double> params, std::span<const double> ps, std::span<double> out) const;
  int parameter_slots() const { return slots_; }

 private:
  struct Instr {
    std::uint8_t code;
    std::int32_t index;
    double value;
  };
  std::vector<Instr> code_;
  int max_stack_ = 0;
  int slots_ = 0;
};

}  // namespace isosr
