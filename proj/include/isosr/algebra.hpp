#pragma once

// Symbolic layer: derivatives, local simplification, rational normalization
// and canonical forms used for deduplication and complexity accounting.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isosr/expr.hpp"

namespace isosr {

/// Symbolic d/dp with sum, product, quotient and chain rules. Results pass
/// through simplify(). Throws std::domain_error for a power whose exponent
/// depends on p.
Expr differentiate(const Expr& e);

/// Local rewrites that never increase node count: integer folding and the
/// identities x+0, x-0, x*1, x*0, x/1, 0/x, x-x, x/x, x^1, x^0, x+x.
Expr simplify(const Expr& e);

/// Combine a rational expression over a single common denominator, keeping
/// parameters symbolic. Non-rational input is returned unchanged.
Expr together(const Expr& e);

/// First `count` primes starting at position `offset` of the prime sequence.
std::vector<std::int64_t> prime_sequence(int count, int offset = 0);

struct PrimeSubstitution {
  Expr expr;
  /// (parameter index, substituted prime)
  std::vector<std::pair<int, std::int64_t>> mapping;
};

/// Replace each distinct parameter with a distinct prime (in order of index),
/// starting at position `offset` in the prime sequence.
PrimeSubstitution substitute_primes(const Expr& e, int offset = 0);

struct CanonicalForm {
  Expr tree;
  std::string text;
  int parameter_count = 0;
  int complexity = 0;
  /// Reduced to a ratio of polynomials in p.
  bool rational = false;
  /// Independent prime substitutions never agreed on the structure.
  bool unreliable = false;
  /// Values for c1..cK that make `tree` value-equivalent to the input under
  /// the substituted primes (or the fitted parameters when given).
  std::vector<double> coefficients;
  /// Exact rational values of the same coefficients (rational path only).
  std::vector<std::string> exact_coefficients;
  /// Position in the prime sequence of the values behind `coefficients`;
  /// -1 when fitted values were substituted.
  int prime_offset = -1;
};

/// Substitute primes (or `fitted` values), simplify, and for rational
/// expressions cancel common factors, make the denominator monic and
/// re-abstract the remaining non-unit coefficients as fresh c1..cK.
CanonicalForm canonical_form(const Expr& e, std::optional<std::span<const double>> fitted = std::nullopt);

/// Agreement at 50 log-spaced p in [1e-6, 1e3] within 1e-9*(1+|a|), ignoring
/// points where both sides are undefined.
bool equivalent_numeric(const Expr& a, const Expr& b, std::span<const double> params_a,
                        std::span<const double> params_b);

}  // namespace isosr
