#pragma once

// Genetic-algorithm symbolic regression with island populations, a shared
// hall of fame, and constraint penalties that multiply the loss of members
// failing a check.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isosr/constraints.hpp"
#include "isosr/dataset.hpp"
#include "isosr/fit.hpp"
#include "isosr/pareto.hpp"

namespace isosr {

enum class MutationKind { Constant, Operator, Append, Insert, Delete, Simplify, Regenerate };
inline constexpr int kMutationKinds = 7;

struct MutationWeights {
  double constant = 1.0;
  double op = 1.0;
  double append = 1.0;
  double insert = 1.0;
  double remove = 1.0;
  double simplify = 0.5;
  double regenerate = 1.0;

  std::array<double, kMutationKinds> as_array() const {
    return {constant, op, append, insert, remove, simplify, regenerate};
  }
};

struct GaConfig {
  int population = 64;
  int islands = 2;
  int generations = 200;
  /// g1..g3 >= 1; all 1.0 disables the constraint checks entirely.
  std::array<double, 3> penalties{1.0, 1.0, 1.0};
  /// Parsimony c_l: score = loss + nodes * c_l.
  double parsimony = 0.01;
  MutationWeights weights;
  int max_size = 25;
  int tournament = 4;
  double replace_fraction = 0.2;
  double crossover_probability = 0.1;
  int hof_period = 5;
  int hof_submissions = 10;
  FitOptions fit;
  RandomTreeConfig init{6, 25, 7.0, 0.5};
  OpSet ops = OpSet::genetic();

  bool constraints_active() const { return penalties[0] > 1.0 || penalties[1] > 1.0 || penalties[2] > 1.0; }
  /// Checks worth running: those with a penalty above 1.
  unsigned check_mask() const;
};

struct Member {
  Expr expr;
  FitResult fit;
  std::optional<ConstraintVerdict> verdict;
  /// Data loss before penalties.
  double raw_loss = 0.0;
  /// Loss after penalties.
  double loss = 0.0;
  double score = 0.0;
  /// Birth order; the smallest value is the oldest member.
  long age = 0;
};

/// loss multiplied by g_i for every checked constraint that failed.
double apply_penalties(double loss, const ConstraintVerdict& v, const std::array<double, 3>& penalties);
/// loss + nodes * parsimony.
double member_score(double loss, int nodes, double parsimony);

/// Scores expressions for one run: fits constants (memoized by structure)
/// and consults the checker only when some penalty exceeds 1.
class GaEvaluator {
 public:
  GaEvaluator(const Dataset& d, const GaConfig& cfg, ConstraintChecker& checker);

  Member evaluate(const Expr& e, Rng& rng);
  /// Re-score a member whose constants changed.
  Member rescore(const Expr& e, FitResult fit);
  /// Perturb one constant multiplicatively and refine from there; the
  /// fit memo is updated if the loss improves.
  std::optional<Member> perturb_constant(const Member& m, Rng& rng);

  std::size_t fits() const { return fits_; }

 private:
  const Dataset& data_;
  const GaConfig& cfg_;
  ConstraintChecker& checker_;
  MonotonicityOptions range_;
  std::map<std::string, FitResult> fit_memo_;
  std::size_t fits_ = 0;
};

/// Structural mutation of a single kind; nullopt when it cannot apply.
std::optional<Expr> mutate_structure(const Expr& e, MutationKind kind, const GaConfig& cfg, Rng& rng);

/// One mutation drawn by the configured weights, falling back to the other
/// kinds when the drawn one cannot apply. Returns the mutated member, scored.
Member mutate(const Member& m, const GaConfig& cfg, GaEvaluator& eval, Rng& rng,
              MutationKind* applied = nullptr);

/// Replace a uniform subtree of `a` with a uniform subtree of `b`,
/// resampling up to 8 times to respect max_size. nullopt if all fail.
std::optional<Expr> crossover(const Expr& a, const Expr& b, int max_size, Rng& rng);

/// Full island-model run. Islands evolve in turn; the hall of fame is
/// updated every generation and reinjected every hof_period generations.
RunRecord run_ga(const Dataset& d, const GaConfig& cfg, ConstraintChecker& checker, Rng& rng);

}  // namespace isosr
