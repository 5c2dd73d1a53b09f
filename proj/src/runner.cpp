#include "isosr/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include <fmt/format.h>

namespace isosr {

std::string to_string(Engine e) { return e == Engine::Ga ? "ga" : "bsr"; }

Engine parse_engine(const std::string& s) {
  if (s == "ga") return Engine::Ga;
  if (s == "bsr") return Engine::Bsr;
  throw std::invalid_argument("unknown engine '" + s + "' (expected ga or bsr)");
}

Dataset load_dataset(const DatasetSpec& spec) {
  if (!spec.csv_path.empty()) return load_csv(spec.csv_path);
  Rng rng(spec.seed);
  return synthesize(catalog_model(spec.model), spec.params, spec.grid, spec.sigma, rng, spec.noise);
}

void set_constraints(RunConfig& cfg, bool on) {
  cfg.ga.penalties = on ? kDefaultGaPenalties : std::array<double, 3>{1.0, 1.0, 1.0};
  cfg.bsr.penalties = on ? kDefaultBsrPenalties : std::array<double, 2>{0.0, 0.0};
}

bool constraints_active(const RunConfig& cfg) {
  return cfg.engine == Engine::Ga ? cfg.ga.constraints_active() : cfg.bsr.constraints_active();
}

std::uint64_t run_seed(std::uint64_t base, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

SearchResult run_search(const RunConfig& cfg, const Dataset& d,
                        const std::function<void(int, const RunRecord&)>& on_run) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be >= 1");
  ConstraintChecker checker(cfg.checker);
  SearchResult res;
  res.runs.resize(static_cast<std::size_t>(cfg.runs));

  auto one = [&](int i) {
    Rng rng(run_seed(cfg.seed, i));
    res.runs[static_cast<std::size_t>(i)] =
        cfg.engine == Engine::Ga ? run_ga(d, cfg.ga, checker, rng) : run_bsr(&d, cfg.bsr, &checker, rng);
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = cfg.deterministic ? 1 : static_cast<int>(std::min<unsigned>(hw, cfg.runs));
  if (workers <= 1) {
    for (int i = 0; i < cfg.runs; ++i) {
      one(i);
      if (on_run) on_run(i, res.runs[static_cast<std::size_t>(i)]);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < cfg.runs; i = next++) one(i);
      });
    for (auto& t : pool) t.join();
    if (on_run)
      for (int i = 0; i < cfg.runs; ++i) on_run(i, res.runs[static_cast<std::size_t>(i)]);
  }

  MonotonicityOptions range = cfg.checker.range;
  range.stop = 10.0 * d.max_pressure();
  for (auto& run : res.runs) {
    ParetoFront f;
    for (const auto& [c, m] : run.front.entries()) {
      ScoredModel s = m;
      s.verdict = checker.check(s.expr, s.params, kCheckAll, &range);
      f.update(s);
    }
    res.fronts.push_back(std::move(f));
  }
  res.merged = merge_fronts(res.fronts);

  std::vector<Sample> all;
  for (const auto& run : res.runs) all.insert(all.end(), run.samples.begin(), run.samples.end());
  CheckerConfig report_cfg = cfg.checker;
  report_cfg.range = range;
  ConstraintChecker report_checker(report_cfg);
  CanonicalCache cache;
  res.rates = pass_rate_table(all, report_checker, cache);
  res.rates.dataset = d.name;
  res.rates.engine = to_string(cfg.engine);
  res.rates.constraints_active = constraints_active(cfg);
  res.rates.log_area = log_area_under_front(res.merged);
  return res;
}

void write_outputs(const RunConfig& cfg, const SearchResult& r, const std::string& config_text) {
  std::filesystem::create_directories(cfg.out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(cfg.out_dir / name);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", (cfg.out_dir / name).string()));
    return out;
  };
  for (std::size_t i = 0; i < r.fronts.size(); ++i) {
    auto out = open(fmt::format("run_{:03d}_front.csv", i));
    write_front_csv(r.fronts[i], out);
  }
  {
    auto out = open("merged_front.csv");
    write_front_csv(r.merged, out);
  }
  {
    auto out = open("pass_rates.csv");
    write_pass_rates_csv(std::span<const PassRates>(&r.rates, 1), out);
  }
  auto out = open("manifest.ini");
  out << fmt::format("; isosr {}\n; seed={}\n; config_hash={:016x}\n", ISOSR_VERSION, cfg.seed,
                     fnv1a(config_text));
  out << config_text;
}

}  // namespace isosr
