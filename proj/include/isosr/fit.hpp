#pragma once

// Loss evaluation and multi-start Nelder-Mead fitting of expression constants.

#include <functional>
#include <span>
#include <vector>

#include "isosr/dataset.hpp"
#include "isosr/expr.hpp"

namespace isosr {

/// Loss assigned when the expression is undefined at any data point.
inline constexpr double kSentinelLoss = 1e12;

/// Mean squared error; kSentinelLoss if any prediction is undefined.
double l2_loss(const Expr& e, std::span<const double> params, const Dataset& d);
double l2_loss(const CompiledExpr& f, std::span<const double> params, std::span<const double> pressures,
               std::span<const double> loadings);

struct FitOptions {
  int restarts = 8;
  int max_iterations = 2000;
  double tolerance = 1e-10;
  /// Starting magnitudes are log-uniform in [start_lo, start_hi].
  double start_lo = 1e-2;
  double start_hi = 1e2;
  double positive_probability = 0.9;
};

struct FitResult {
  std::vector<double> params;
  double loss = kSentinelLoss;
  int restarts_used = 0;
  bool converged = false;
};

struct SimplexResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead with reflection 1, expansion 2, contraction 0.5, shrink 0.5.
/// Stops when the vertices agree to `tolerance` in x (relative to 1+|x|) or
/// in f (relative to |f_best|), or after max_iterations.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                          int max_iterations = 2000, double tolerance = 1e-10);

/// Best of `options.restarts` simplex runs from random starts. Each restart
/// consumes the same number of draws, so a run with k restarts extends the
/// run with k-1 restarts on the same seed.
FitResult fit_constants(const Expr& e, const Dataset& d, Rng& rng, const FitOptions& options = {});

/// Single simplex run started from `start`.
FitResult refine_constants(const Expr& e, const Dataset& d, std::span<const double> start,
                           const FitOptions& options = {});

}  // namespace isosr
