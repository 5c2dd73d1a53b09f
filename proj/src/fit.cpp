#include "isosr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isosr {
namespace {

double clean(double loss) { return std::isfinite(loss) ? std::min(loss, kSentinelLoss) : kSentinelLoss; }

bool spread_ok(const std::vector<std::vector<double>>& s, std::size_t best, double tol) {
  for (const auto& v : s)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (std::abs(v[j] - s[best][j]) > tol * (1.0 + std::abs(s[best][j]))) return false;
  return true;
}

FitResult run_from(const CompiledExpr& f, const Dataset& d, std::vector<double> start, const FitOptions& o) {
  const auto ps = d.pressures();
  const auto ys = d.loadings();
  auto loss = [&](std::span<const double> x) { return clean(l2_loss(f, x, ps, ys)); };
  SimplexResult r = nelder_mead(loss, std::move(start), o.max_iterations, o.tolerance);
  // One restart at the optimum guards against a collapsed simplex.
  if (r.converged && r.iterations < o.max_iterations) {
    SimplexResult again = nelder_mead(loss, r.x, o.max_iterations - r.iterations, o.tolerance);
    if (again.fx <= r.fx) {
      again.iterations += r.iterations;
      r = std::move(again);
    }
  }
  return {std::move(r.x), r.fx, 1, r.converged};
}

}  // namespace

double l2_loss(const CompiledExpr& f, std::span<const double> params, std::span<const double> pressures,
               std::span<const double> loadings) {
  if (pressures.empty()) throw std::invalid_argument("l2_loss: empty dataset");
  thread_local std::vector<double> pred;
  pred.resize(pressures.size());
  f.evaluate_many(params, pressures, pred);
  double sum = 0.0;
  for (std::size_t i = 0; i < pressures.size(); ++i) {
    if (!std::isfinite(pred[i])) return kSentinelLoss;
    const double r = pred[i] - loadings[i];
    sum += r * r;
  }
  return clean(sum / static_cast<double>(pressures.size()));
}

double l2_loss(const Expr& e, std::span<const double> params, const Dataset& d) {
  if (static_cast<std::size_t>(e.max_param_index()) > params.size())
    throw std::invalid_argument("l2_loss: not enough parameter values");
  const auto ps = d.pressures();
  const auto ys = d.loadings();
  return l2_loss(CompiledExpr(e), params, ps, ys);
}

SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                          int max_iterations, double tolerance) {
  const std::size_t n = x0.size();
  SimplexResult out;
  if (n == 0) {
    out.fx = f(x0);
    out.converged = true;
    return out;
  }
  std::vector<std::vector<double>> s(n + 1, x0);
  for (std::size_t j = 0; j < n; ++j) s[j + 1][j] += x0[j] != 0.0 ? 0.1 * x0[j] : 1e-3;
  std::vector<double> fs(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fs[i] = f(s[i]);
  std::vector<std::size_t> idx(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  auto point = [&](double t, const std::vector<double>& worst, std::vector<double>& dst) {
    for (std::size_t j = 0; j < n; ++j) dst[j] = centroid[j] + t * (worst[j] - centroid[j]);
  };

  int it = 0;
  for (; it < max_iterations; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[n - 1];
    if (spread_ok(s, best, tolerance) || fs[worst] - fs[best] <= tolerance * std::abs(fs[best])) {
      out.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += s[idx[i]][j] / static_cast<double>(n);

    point(-1.0, s[worst], xr);
    const double fr = f(xr);
    if (fr < fs[best]) {
      point(-2.0, s[worst], xe);
      const double fe = f(xe);
      if (fe < fr) {
        s[worst] = xe;
        fs[worst] = fe;
      } else {
        s[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      s[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    const bool outside = fr < fs[worst];
    point(outside ? -0.5 : 0.5, s[worst], xc);
    const double fc = f(xc);
    if (outside ? fc <= fr : fc < fs[worst]) {
      s[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) s[i][j] = s[best][j] + 0.5 * (s[i][j] - s[best][j]);
      fs[i] = f(s[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  out.x = s[best];
  out.fx = fs[best];
  out.iterations = it;
  return out;
}

FitResult fit_constants(const Expr& e, const Dataset& d, Rng& rng, const FitOptions& o) {
  if (o.restarts < 1) throw std::invalid_argument("fit_constants: restarts must be >= 1");
  const int k = e.max_param_index();
  CompiledExpr f(e);
  if (k == 0) {
    FitResult r;
    r.loss = l2_loss(f, {}, d.pressures(), d.loadings());
    r.converged = true;
    return r;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double llo = std::log(o.start_lo), lhi = std::log(o.start_hi);
  FitResult best;
  for (int r = 0; r < o.restarts; ++r) {
    std::vector<double> x(static_cast<std::size_t>(k));
    for (auto& v : x) {
      const double mag = std::exp(llo + (lhi - llo) * unit(rng));
      v = unit(rng) < o.positive_probability ? mag : -mag;
    }
    FitResult cur = run_from(f, d, std::move(x), o);
    if (r == 0 || cur.loss < best.loss) {
      best.params = std::move(cur.params);
      best.loss = cur.loss;
      best.converged = cur.converged;
    }
    best.restarts_used = r + 1;
  }
  return best;
}

FitResult refine_constants(const Expr& e, const Dataset& d, std::span<const double> start, const FitOptions& o) {
  const std::size_t k = static_cast<std::size_t>(e.max_param_index());
  if (start.size() < k) throw std::invalid_argument("refine_constants: not enough starting values");
  CompiledExpr f(e);
  return run_from(f, d, std::vector<double>(start.begin(), start.begin() + k), o);
}

}  // namespace isosr
