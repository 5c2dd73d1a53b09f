#pragma once

// Bayesian symbolic regression: a Metropolis chain over expression trees
// whose energy is BIC/2 plus a prior that charges operators, parameters and
// failed constraints (C1, C2).

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

enum class MoveKind { NodeReplace, RootAddRemove, ElementaryTree };

struct BsrConfig {
  double c_ops = 1.0;
  /// b1, b2: energy added when C1 / C2 fail. Both 0 disables the checks.
  std::array<double, 2> penalties{0.0, 0.0};
  double c_par = 0.0;
  long steps = 100'000;
  /// Node replacement, root addition/removal, elementary-tree replacement.
  std::array<double, 3> move_frequencies{0.5, 0.25, 0.25};
  int max_size = 25;
  int thinning = 10;
  /// Lighter than the GA fit: a chain fits every new structure it proposes.
  FitOptions fit{2, 300, 1e-6, 1e-2, 1e2, 0.9};
  OpSet ops = OpSet::bayesian();

  bool constraints_active() const { return penalties[0] > 0.0 || penalties[1] > 0.0; }
  unsigned check_mask() const {
    return (penalties[0] > 0.0 ? kCheckC1 : 0u) | (penalties[1] > 0.0 ? kCheckC2 : 0u);
  }
};

/// N ln(SSE/N) + k ln N with SSE = N * loss (clamped at 1e-30) and
/// k = parameters + 1.
double bic(double loss, int parameters, std::size_t n);
double bic(const Expr& e, const FitResult& fit, const Dataset& d);

/// c_ops * operators + sum b_i [C_i failed] + c_par * parameters.
double prior_energy(const Expr& e, const std::optional<ConstraintVerdict>& verdict, const BsrConfig& cfg);

struct ChainState {
  Expr expr = Expr::parameter(1);
  FitResult fit;
  std::optional<ConstraintVerdict> verdict;
  double bic_value = 0.0;
  double prior = 0.0;
  /// bic/2 + prior, or prior alone without data; +inf for undefined fits.
  double description_length = 0.0;
};

struct Proposal {
  Expr candidate;
  MoveKind kind = MoveKind::NodeReplace;
  /// log q(candidate -> current) - log q(current -> candidate).
  double log_ratio = 0.0;
  /// False when the drawn move had no valid site (a self-transition).
  bool applicable = true;
};

/// Total probability that one proposal step turns `from` into `to`, summed
/// over every move and site that produces it. Trees compare after
/// parameter renumbering.
double proposal_probability(const Expr& from, const Expr& to, const BsrConfig& cfg);

Proposal propose_move(const Expr& current, const BsrConfig& cfg, Rng& rng);

/// Fits, checks and prices chain states. A null dataset selects prior-only mode.
class BsrEvaluator {
 public:
  BsrEvaluator(const Dataset* d, const BsrConfig& cfg, ConstraintChecker* checker);
  ChainState evaluate(const Expr& e, Rng& rng);
  std::size_t fits() const { return fits_; }

 private:
  const Dataset* data_;
  const BsrConfig& cfg_;
  ConstraintChecker* checker_;
  MonotonicityOptions range_;
  std::map<std::string, FitResult> fit_memo_;
  std::size_t fits_ = 0;
};

/// Metropolis acceptance: min(1, exp(-dL) * exp(log_ratio)).
double acceptance_probability(double delta_l, double log_ratio);

/// One proposal plus accept/reject. Returns true on acceptance.
bool mcmc_step(ChainState& state, BsrEvaluator& eval, const BsrConfig& cfg, Rng& rng);

/// Runs `cfg.steps` steps from the single-parameter tree, keeping every
/// `thinning`-th state. `d` may be null for a prior-only chain.
RunRecord run_bsr(const Dataset* d, const BsrConfig& cfg, ConstraintChecker* checker, Rng& rng);

}  // namespace isosr
