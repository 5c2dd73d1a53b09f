#include "isosr/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace isosr {
namespace {

std::string join_params(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += fmt::format("{}{}", i ? ";" : "", v[i]);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

CanonicalForm CanonicalCache::get(const Expr& e) {
  std::string key = render(e);
  {
    std::lock_guard lock(mutex_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  CanonicalForm cf = canonical_form(e);
  std::lock_guard lock(mutex_);
  memo_.emplace(std::move(key), cf);
  return cf;
}

std::size_t CanonicalCache::size() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

ScoredModel make_scored(const Sample& s, CanonicalCache& cache) {
  ScoredModel m;
  m.expr = s.expr;
  m.params = s.params;
  m.loss = s.loss;
  m.raw_complexity = complexity(s.expr);
  const CanonicalForm cf = cache.get(s.expr);
  m.canonical = cf.text;
  m.complexity = cf.complexity;
  m.canonical_params = s.params;
  if (static_cast<int>(s.params.size()) >= s.expr.max_param_index()) {
    const CanonicalForm fitted = canonical_form(s.expr, std::span<const double>(s.params));
    if (fitted.text == cf.text) m.canonical_params = fitted.coefficients;
  }
  return m;
}

bool preferred(const ScoredModel& a, const ScoredModel& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  if (a.canonical != b.canonical) return a.canonical < b.canonical;
  return a.canonical_params < b.canonical_params;
}

bool ParetoFront::dominated(const ScoredModel& m) const {
  for (const auto& [c, e] : entries_) {
    if (c > m.complexity) break;
    if (c < m.complexity ? e.loss <= m.loss : !preferred(m, e)) return true;
  }
  return false;
}

bool ParetoFront::update(const ScoredModel& m) {
  if (dominated(m)) return false;
  for (auto it = entries_.upper_bound(m.complexity); it != entries_.end();) {
    if (it->second.loss >= m.loss)
      it = entries_.erase(it);
    else
      ++it;
  }
  entries_.insert_or_assign(m.complexity, m);
  return true;
}

const ScoredModel* ParetoFront::at(int complexity) const {
  auto it = entries_.find(complexity);
  return it == entries_.end() ? nullptr : &it->second;
}

bool ParetoFront::operator==(const ParetoFront& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (auto a = entries_.begin(), b = o.entries_.begin(); a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.loss != b->second.loss || a->second.canonical != b->second.canonical ||
        a->second.canonical_params != b->second.canonical_params)
      return false;
  }
  return true;
}

ParetoFront merge_fronts(std::span<const ParetoFront> fronts) {
  ParetoFront out;
  for (const auto& f : fronts)
    for (const auto& [c, m] : f.entries()) out.update(m);
  return out;
}

double log_area_under_front(const ParetoFront& f, int max_complexity) {
  double area = 0.0;
  const auto& e = f.entries();
  for (auto it = e.begin(); it != e.end() && it->first < max_complexity; ++it) {
    auto next = std::next(it);
    const int end = next == e.end() ? max_complexity : std::min(next->first, max_complexity);
    area += (end - it->first) * std::log10(std::max(it->second.loss, 1e-300));
  }
  return area;
}

std::vector<ScoredModel> deduplicate(std::span<const Sample> samples, CanonicalCache& cache) {
  std::map<std::string, const Sample*> best;
  std::map<std::string, CanonicalForm> forms;
  for (const auto& s : samples) {
    CanonicalForm cf = cache.get(s.expr);
    auto it = best.find(cf.text);
    if (it == best.end()) {
      forms.emplace(cf.text, cf);
      best.emplace(cf.text, &s);
    } else if (s.loss < it->second->loss) {
      it->second = &s;
    }
  }
  std::vector<ScoredModel> out;
  out.reserve(best.size());
  for (const auto& [text, s] : best) {
    ScoredModel m;
    m.expr = s->expr;
    m.params = s->params;
    m.loss = s->loss;
    m.raw_complexity = complexity(s->expr);
    m.canonical = text;
    m.complexity = forms.at(text).complexity;
    m.canonical_params = s->params;
    out.push_back(std::move(m));
  }
  return out;
}

PassRates pass_rate_table(std::span<const Sample> samples, ConstraintChecker& checker, CanonicalCache& cache) {
  if (samples.empty()) throw std::invalid_argument("pass_rate_table: no samples");
  PassRates r;
  for (auto& m : deduplicate(samples, cache)) {
    const ConstraintVerdict v = checker.check(m.expr, m.params, kCheckAll);
    ++r.expressions;
    r.c1 += v.c1_pass;
    r.c2 += v.c2_pass;
    r.c3 += v.c3_pass;
  }
  return r;
}

void write_front_csv(const ParetoFront& f, std::ostream& out) {
  out << "complexity,loss,canonical_form,c1_pass,c2_pass,c3_pass,params\n";
  for (const auto& [c, m] : f.entries()) {
    auto flag = [&](int i) { return m.verdict ? (m.verdict->pass(i) ? 1 : 0) : -1; };
    out << fmt::format("{},{},{},{},{},{},{}\n", c, m.loss, m.canonical, flag(0), flag(1), flag(2),
                       join_params(m.canonical_params));
  }
}

ParetoFront read_front_csv(std::istream& in) {
  ParetoFront f;
  std::string line;
  if (!std::getline(in, line) || line.rfind("complexity,loss,canonical_form", 0) != 0)
    throw std::runtime_error("front file: unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 7) throw std::runtime_error(fmt::format("front file line {}: expected 7 columns", lineno));
    ScoredModel m;
    m.complexity = std::stoi(cols[0]);
    m.loss = std::stod(cols[1]);
    m.canonical = cols[2];
    m.expr = parse(cols[2]);
    m.raw_complexity = complexity(m.expr);
    if (cols[3] != "-1") {
      ConstraintVerdict v;
      v.c1_pass = cols[3] == "1";
      v.c2_pass = cols[4] == "1";
      v.c3_pass = cols[5] == "1";
      v.checked = {true, true, true};
      m.verdict = v;
    }
    for (const auto& p : split(cols[6], ';'))
      if (!p.empty()) m.canonical_params.push_back(std::stod(p));
    m.params = m.canonical_params;
    f.update(m);
  }
  return f;
}

void write_pass_rates_csv(std::span<const PassRates> rows, std::ostream& out) {
  const bool area = std::any_of(rows.begin(), rows.end(), [](const PassRates& r) { return r.log_area.has_value(); });
  out << "dataset,constraints_active,engine,expressions,c1_pass,c2_pass,c3_pass" << (area ? ",log_area" : "")
      << "\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f}", r.dataset, r.constraints_active ? "true" : "false",
                       r.engine, r.expressions, r.c1_fraction(), r.c2_fraction(), r.c3_fraction());
    if (area) out << (r.log_area ? fmt::format(",{:.6f}", *r.log_area) : std::string(","));
    out << "\n";
  }
}

}  // namespace isosr
