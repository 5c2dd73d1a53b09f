#pragma once

// Pareto fronts over (canonical complexity, loss), run records shared by
// both engines, and constraint pass-rate tables.

#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "isosr/algebra.hpp"
#include "isosr/constraints.hpp"
#include "isosr/expr.hpp"

namespace isosr {

/// An expression the engine generated, with fitted constants and data loss.
struct Sample {
  Expr expr;
  std::vector<double> params;
  double loss = 0.0;
};

/// Thread-safe memo of symbolic canonical forms keyed by rendered text.
class CanonicalCache {
 public:
  CanonicalForm get(const Expr& e);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, CanonicalForm> memo_;
};

struct ScoredModel {
  Expr expr;
  std::vector<double> params;
  double loss = 0.0;
  int raw_complexity = 0;
  std::string canonical;
  /// Canonical complexity; used for front placement.
  int complexity = 0;
  /// Values of the canonical form's c1..cK (the raw params if the fitted
  /// canonicalization lands on a different structure).
  std::vector<double> canonical_params;
  std::optional<ConstraintVerdict> verdict;
};

ScoredModel make_scored(const Sample& s, CanonicalCache& cache);

/// Strict preference used for ties: lower loss, then canonical text, then params.
bool preferred(const ScoredModel& a, const ScoredModel& b);

/// Best model per canonical complexity with dominated entries removed.
/// The result of any sequence of updates depends only on the set of
/// candidates, not their order.
class ParetoFront {
 public:
  /// Returns true if the candidate entered the front.
  bool update(const ScoredModel& m);
  /// True if some entry is simpler with loss <= `loss`, or equally complex and better.
  bool dominated(const ScoredModel& m) const;

  const std::map<int, ScoredModel>& entries() const { return entries_; }
  const ScoredModel* at(int complexity) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool operator==(const ParetoFront& o) const;

 private:
  std::map<int, ScoredModel> entries_;
};

ParetoFront merge_fronts(std::span<const ParetoFront> fronts);

/// Non-normative summary: area under the step curve of log10(loss) from the
/// simplest entry to `max_complexity`. Lower is better.
double log_area_under_front(const ParetoFront& f, int max_complexity = 30);

struct FrontSnapshot {
  int generation = 0;
  /// (complexity, loss) pairs of the engine's working front.
  std::vector<std::pair<int, double>> points;
};

struct RunRecord {
  std::string engine;
  /// Every expression generated (GA: evaluated members; BSR: thinned states).
  std::vector<Sample> samples;
  /// Final hall of fame (GA) or distinct accepted states (BSR).
  std::vector<Sample> elite;
  ParetoFront front;
  std::vector<FrontSnapshot> history;
  std::uint64_t checker_invocations = 0;
  double acceptance_rate = 0.0;
};

struct PassRates {
  std::string dataset;
  std::string engine;
  bool constraints_active = false;
  std::size_t expressions = 0;
  std::size_t c1 = 0;
  std::size_t c2 = 0;
  std::size_t c3 = 0;
  std::optional<double> log_area;

  double c1_fraction() const { return expressions ? static_cast<double>(c1) / expressions : 0.0; }
  double c2_fraction() const { return expressions ? static_cast<double>(c2) / expressions : 0.0; }
  double c3_fraction() const { return expressions ? static_cast<double>(c3) / expressions : 0.0; }
};

/// Keep the lowest-loss sample of each canonical form.
std::vector<ScoredModel> deduplicate(std::span<const Sample> samples, CanonicalCache& cache);

/// Deduplicate, recompute all three verdicts, and count passes.
PassRates pass_rate_table(std::span<const Sample> samples, ConstraintChecker& checker, CanonicalCache& cache);

/// Columns: complexity,loss,canonical_form,c1_pass,c2_pass,c3_pass,params
void write_front_csv(const ParetoFront& f, std::ostream& out);
ParetoFront read_front_csv(std::istream& in);

/// Columns: dataset,constraints_active,engine,expressions,c1_pass,c2_pass,c3_pass[,log_area]
void write_pass_rates_csv(std::span<const PassRates> rows, std::ostream& out);

}  // namespace isosr
