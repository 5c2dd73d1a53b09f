#include "isosr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace isosr {
namespace {

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

// Smallest positive root of p^2 + b p + c, or +inf.
double smallest_positive_root(double b, double c) {
  const double disc = b * b - 4 * c;
  if (disc < 0) return kUnbounded;
  const double s = std::sqrt(disc);
  double best = kUnbounded;
  for (double r : {(-b - s) / 2, (-b + s) / 2})
    if (r > 0) best = std::min(best, r);
  return best;
}

std::vector<IsothermModel> build_catalog() {
  auto unbounded = [](std::span<const double>) { return kUnbounded; };
  std::vector<IsothermModel> out;
  auto add = [&](std::string name, std::string lit, std::string_view form, std::vector<ParamRange> ranges,
                 std::function<double(std::span<const double>)> limit) {
    IsothermModel m;
    m.name = std::move(name);
    m.literature = std::move(lit);
    m.sr_form = parse(form);
    m.complexity = complexity(m.sr_form);
    m.ranges = std::move(ranges);
    m.validity_limit = std::move(limit);
    out.push_back(std::move(m));
  };
  add("Langmuir", "q_max K p / (1 + K p)", "c1*p/(c2+p)", {{0.1, 100}, {0.01, 100}}, unbounded);
  add("Dual-Site Langmuir", "qa Ka p / (1 + Ka p) + qb Kb p / (1 + Kb p)", "c1*p/(c2+p) + c3*p/(c4+p)",
      {{0.1, 100}, {0.001, 1}, {0.1, 100}, {1, 1000}}, unbounded);
  // With p measured relative to saturation, c > 1 gives c1, c3 < 0 and c2 < 0
  // once c > 2. The form diverges at its smallest positive pole.
  add("BET", "v_m c x / ((1 - x)(1 + (c - 1) x)), x = p/p0", "c1*p/(p^2 + c2*p + c3)",
      {{-1000, -0.01}, {-1, 0}, {-1, -0.001}},
      [](std::span<const double> c) { return smallest_positive_root(c[1], c[2]); });
  add("Freundlich", "K p^(1/n)", "c1*p^c2", {{0.1, 100}, {0.1, 1}}, unbounded);
  add("Sips", "K p^(1/n) / (1 + K p^(1/n))", "p^c2/(c1+p^c2)", {{0.01, 100}, {0.1, 1}}, unbounded);
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

std::vector<double> Dataset::pressures() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& pt : points) out.push_back(pt.pressure);
  return out;
}

std::vector<double> Dataset::loadings() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& pt : points) out.push_back(pt.loading);
  return out;
}

void validate(const Dataset& d) {
  if (d.points.size() < 3)
    throw DatasetError(fmt::format("dataset '{}' has {} points; at least 3 are required", d.name, d.points.size()));
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const auto& pt = d.points[i];
    if (!std::isfinite(pt.pressure) || !std::isfinite(pt.loading))
      throw DatasetError(fmt::format("dataset '{}': non-finite value at point {}", d.name, i + 1));
    if (pt.pressure <= 0) throw DatasetError(fmt::format("dataset '{}': pressure must be positive", d.name));
    if (i > 0 && !(pt.pressure > d.points[i - 1].pressure))
      throw DatasetError(fmt::format("dataset '{}': pressures must be strictly increasing", d.name));
  }
}

Dataset read_csv(std::istream& in, std::string name) {
  Dataset d;
  d.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto body = trim(line);
    if (body.empty()) continue;
    if (!header) {
      std::string h;
      for (char ch : body)
        if (!std::isspace(static_cast<unsigned char>(ch))) h += static_cast<char>(std::tolower(ch));
      if (h != "pressure,loading")
        throw DatasetError(fmt::format("line {}: expected header 'pressure,loading'", lineno), lineno);
      header = true;
      continue;
    }
    const auto comma = body.find(',');
    DataPoint pt;
    if (comma == std::string_view::npos || body.find(',', comma + 1) != std::string_view::npos ||
        !parse_double(body.substr(0, comma), pt.pressure) || !parse_double(body.substr(comma + 1), pt.loading))
      throw DatasetError(fmt::format("line {}: malformed row '{}'", lineno, body), lineno);
    if (!std::isfinite(pt.pressure) || !std::isfinite(pt.loading))
      throw DatasetError(fmt::format("line {}: non-finite value", lineno), lineno);
    if (pt.pressure <= 0) throw DatasetError(fmt::format("line {}: pressure must be positive", lineno), lineno);
    d.points.push_back(pt);
    lines.push_back(lineno);
  }
  if (!header) throw DatasetError("missing header 'pressure,loading'");

  std::vector<std::size_t> order(d.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d.points[a].pressure < d.points[b].pressure; });
  std::vector<DataPoint> sorted;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && d.points[order[i]].pressure == d.points[order[i - 1]].pressure) {
      const std::size_t at = std::max(lines[order[i]], lines[order[i - 1]]);
      throw DatasetError(fmt::format("line {}: duplicate pressure {}", at, d.points[order[i]].pressure), at);
    }
    sorted.push_back(d.points[order[i]]);
  }
  d.points = std::move(sorted);
  validate(d);
  return d;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(fmt::format("cannot open dataset file '{}'", path.string()));
  Dataset d = read_csv(in, path.stem().string());
  d.source = path.string();
  return d;
}

void write_csv(const Dataset& d, std::ostream& out) {
  out << "pressure,loading\n";
  for (const auto& pt : d.points) out << fmt::format("{:.17g},{:.17g}\n", pt.pressure, pt.loading);
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError(fmt::format("cannot write '{}'", path.string()));
  write_csv(d, out);
}

const std::vector<IsothermModel>& catalog() {
  static const std::vector<IsothermModel> models = build_catalog();
  return models;
}

const IsothermModel& catalog_model(std::string_view name) {
  const std::string key = lower(name);
  for (const auto& m : catalog()) {
    const std::string n = lower(m.name);
    if (n == key || n.substr(0, n.find(' ')) == key) return m;
  }
  if (key == "dual-site" || key == "dualsite" || key == "dual") return catalog()[1];
  throw std::out_of_range(fmt::format("unknown isotherm model '{}'", name));
}

std::vector<double> bet_parameters(double vm, double c) {
  if (!(c > 1)) throw std::invalid_argument("bet_parameters: BET constant must exceed 1");
  return {-vm * c / (c - 1), -(c - 2) / (c - 1), -1 / (c - 1)};
}

std::vector<double> make_grid(const GridSpec& g) {
  if (g.count < 1 || !(g.lo > 0) || !(g.hi >= g.lo)) throw DatasetError("invalid pressure grid");
  std::vector<double> out(static_cast<std::size_t>(g.count));
  for (int i = 0; i < g.count; ++i) {
    const double t = g.count == 1 ? 0.0 : static_cast<double>(i) / (g.count - 1);
    out[i] = g.log_spaced ? std::exp(std::log(g.lo) + t * (std::log(g.hi) - std::log(g.lo)))
                          : g.lo + t * (g.hi - g.lo);
  }
  out.front() = g.lo;
  out.back() = g.hi;
  return out;
}

Dataset synthesize(const IsothermModel& model, std::span<const double> params, const GridSpec& grid, double sigma,
                   Rng& rng, NoiseKind noise) {
  if (params.size() < static_cast<std::size_t>(model.sr_form.max_param_index()))
    throw std::invalid_argument("synthesize: not enough parameters for " + model.name);
  if (sigma < 0) throw std::invalid_argument("synthesize: negative noise level");
  const double limit = model.validity_limit ? model.validity_limit(params) : kUnbounded;
  if (!(grid.hi < limit))
    throw DatasetError(fmt::format("{}: grid reaches p = {} but the model is only valid below p = {}", model.name,
                                   grid.hi, limit));
  Dataset d;
  d.name = model.name;
  d.units = "pressure and loading in model units";
  std::string ps;
  for (std::size_t i = 0; i < params.size(); ++i) ps += fmt::format("{}{:.12g}", i ? ";" : "", params[i]);
  d.source = fmt::format("synthetic:{} params={} grid={}[{:.12g},{:.12g}]x{} sigma={:.12g} noise={}", model.name, ps,
                         grid.log_spaced ? "log" : "lin", grid.lo, grid.hi, grid.count, sigma,
                         noise == NoiseKind::Relative ? "relative" : "additive");
  std::normal_distribution<double> eps(0.0, 1.0);
  for (double p : make_grid(grid)) {
    auto y = evaluate(model.sr_form, params, p);
    if (!y) throw DatasetError(fmt::format("{} is undefined at p = {}", model.name, p));
    const double e = sigma > 0 ? sigma * eps(rng) : 0.0;
    d.points.push_back({p, noise == NoiseKind::Relative ? *y * (1 + e) : *y + e});
  }
  validate(d);
  return d;
}

}  // namespace isosr
