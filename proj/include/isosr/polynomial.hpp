#pragma once

// Exact polynomial and rational-function arithmetic over Q.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "isosr/expr.hpp"

namespace isosr {

using Rational = mpq_class;

/// Dense univariate polynomial in p, coefficients in ascending degree.
/// The zero polynomial has no coefficients.
class UPoly {
 public:
  UPoly() = default;
  explicit UPoly(std::vector<Rational> ascending);
  static UPoly constant(const Rational& c);
  static UPoly monomial(const Rational& c, int degree);

  bool is_zero() const { return c_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  /// Lowest degree with a nonzero coefficient; -1 for zero.
  int order() const;
  const Rational& leading() const { return c_.back(); }
  Rational coeff(int k) const;
  const std::vector<Rational>& coefficients() const { return c_; }

  UPoly operator+(const UPoly& o) const;
  UPoly operator-(const UPoly& o) const;
  UPoly operator*(const UPoly& o) const;
  UPoly operator*(const Rational& s) const;
  UPoly operator/(const Rational& s) const;
  UPoly pow(int n) const;
  UPoly derivative() const;
  bool operator==(const UPoly& o) const { return c_ == o.c_; }

  /// Euclidean division; throws std::domain_error on a zero divisor.
  void divmod(const UPoly& d, UPoly& q, UPoly& r) const;
  UPoly monic() const;
  double evaluate(double p) const;

 private:
  void trim();
  std::vector<Rational> c_;
};

/// Monic greatest common divisor (zero if both are zero).
UPoly gcd(UPoly a, UPoly b);

struct URational {
  UPoly num;
  UPoly den;
};

enum class RationalStatus { Ok, NotRational, Undefined };

struct UnivariateResult {
  RationalStatus status = RationalStatus::NotRational;
  URational value;
};

/// Reduce `e` to num(p)/den(p) with parameter k replaced by values[k-1].
/// NotRational when the tree holds sqrt or a power whose exponent is not an
/// integer literal; Undefined when it divides by an identically zero polynomial.
UnivariateResult to_univariate(const Expr& e, std::span<const Rational> values);

/// Cancel the polynomial gcd and scale so the denominator is monic.
URational normalize_monic(const URational& r);

/// Sparse multivariate polynomial. Variable 0 is p, variable k is parameter ck.
class MPoly {
 public:
  using Monomial = std::vector<int>;

  MPoly() = default;
  static MPoly constant(const Rational& c);
  static MPoly variable(int var);

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  const std::map<Monomial, Rational>& terms() const { return terms_; }

  MPoly operator+(const MPoly& o) const;
  MPoly operator-(const MPoly& o) const;
  MPoly operator*(const MPoly& o) const;
  MPoly pow(int n) const;
  MPoly scaled(const Rational& s) const;
  /// Divide every term by the monomial `m` (which must divide all terms).
  MPoly divided_by_monomial(const Monomial& m) const;
  /// Componentwise minimum of exponents across terms.
  Monomial common_monomial() const;

 private:
  void add_term(const Monomial& m, const Rational& c);
  std::map<Monomial, Rational> terms_;
};

struct MRational {
  MPoly num;
  MPoly den;
};

/// Rational function in p and the parameters, or nullopt if not rational.
std::optional<MRational> to_multivariate(const Expr& e);

/// Expression tree for a multivariate polynomial.
Expr to_expr(const MPoly& poly);

/// Exact coefficient as text, e.g. "2/3".
std::string to_string(const Rational& q);

}  // namespace isosr
