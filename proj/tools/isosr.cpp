#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "isosr/config.hpp"
#include "isosr/runner.hpp"

namespace fs = std::filesystem;
using namespace isosr;

namespace {

// Exit codes: 0 ok, 1 runtime failure, 2 bad input (parse, config, dataset).
constexpr int kBadInput = 2;

std::string method_name(LimitValue::Method m) {
  switch (m) {
    case LimitValue::Method::Exact:
      return "exact";
    case LimitValue::Method::Series:
      return "series";
    default:
      return "numeric";
  }
}

std::string verdict_word(const ConstraintVerdict& v, int i) {
  if (v.timed_out[static_cast<std::size_t>(i)]) return "fail (timed out)";
  return v.pass(i) ? "pass" : "fail";
}

std::vector<double> padded(std::vector<double> params, const Expr& e) {
  if (static_cast<int>(params.size()) < e.max_param_index())
    throw std::invalid_argument(fmt::format("expression uses {} parameters, {} given", e.max_param_index(),
                                            params.size()));
  return params;
}

int cmd_check(const std::string& text, const std::vector<double>& params, double start, double stop,
              double budget_ms) {
  const Expr e = parse(text);
  const auto ps = padded(params, e);
  MonotonicityOptions range;
  range.start = start;
  range.stop = stop;
  const auto v = check_all(e, ps, std::chrono::microseconds(static_cast<long long>(budget_ms * 1000)), range);
  std::string c2 = "C2 " + verdict_word(v, 1);
  if (v.slope_limit.is_finite()) c2 += fmt::format(" (slope {:.6g})", v.slope_limit.value);
  std::cout << fmt::format("C1 {}, {}, C3 {}\n", verdict_word(v, 0), c2, verdict_word(v, 2));
  std::cout << fmt::format("  f(0+)  = {} [{}]\n", to_string(v.value_limit), method_name(v.value_limit.method));
  std::cout << fmt::format("  f'(0+) = {} [{}]\n", to_string(v.slope_limit), method_name(v.slope_limit.method));
  std::cout << fmt::format("  monotone on [{:g}, {:g}]\n", start, stop);
  std::cout << fmt::format("  time: C1 {} us, C2 {} us, C3 {} us\n", v.elapsed[0].count(), v.elapsed[1].count(),
                           v.elapsed[2].count());
  return 0;
}

int cmd_canon(const std::string& text, const std::vector<double>& params) {
  const Expr e = parse(text);
  CanonicalForm c;
  if (params.empty()) {
    c = canonical_form(e);
  } else {
    const auto ps = padded(params, e);
    c = canonical_form(e, std::span<const double>(ps));
  }
  std::cout << c.text << "\n";
  std::cout << fmt::format("raw complexity {}, canonical complexity {}, parameters {}{}\n", complexity(e),
                           c.complexity, c.parameter_count, c.rational ? ", rational" : "");
  // Under primes the values are only meaningful for numeric input.
  if ((!params.empty() || e.max_param_index() == 0) && !c.coefficients.empty()) {
    std::cout << "coefficients:";
    for (std::size_t i = 0; i < c.coefficients.size(); ++i) {
      if (i < c.exact_coefficients.size())
        std::cout << fmt::format(" c{}={}", i + 1, c.exact_coefficients[i]);
      else
        std::cout << fmt::format(" c{}={:.10g}", i + 1, c.coefficients[i]);
    }
    std::cout << "\n";
  }
  if (c.unreliable) std::cerr << "warning: canonicalization unreliable (prime substitutions disagreed)\n";
  return 0;
}

void print_fit(const Expr& e, const FitResult& r) {
  std::cout << render(e) << "\n";
  for (std::size_t i = 0; i < r.params.size(); ++i) std::cout << fmt::format("c{} = {:.12g}\n", i + 1, r.params[i]);
  std::cout << fmt::format("loss = {:.6g}  (restarts {}, {})\n", r.loss, r.restarts_used,
                           r.converged ? "converged" : "iteration limit");
}

void print_front(const ParetoFront& f) {
  std::cout << fmt::format("{:>10}  {:>12}  {:<3} {:<3} {:<3}  {}\n", "complexity", "loss", "C1", "C2", "C3",
                           "canonical form");
  auto flag = [](const ScoredModel& m, int i) -> std::string {
    if (!m.verdict) return "-";
    return m.verdict->pass(i) ? "y" : "n";
  };
  for (const auto& [c, m] : f.entries())
    std::cout << fmt::format("{:>10}  {:>12.6g}  {:<3} {:<3} {:<3}  {}\n", c, m.loss, flag(m, 0), flag(m, 1),
                             flag(m, 2), m.canonical);
}

ParetoFront read_front_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DatasetError(fmt::format("cannot open front file '{}'", p.string()));
  return read_front_csv(in);
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<ParetoFront> fronts;
  std::vector<fs::path> rates;
  for (const auto& s : paths) {
    const fs::path p(s);
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("run_") && name.ends_with("_front.csv")) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty() && fs::exists(p / "merged_front.csv")) files.push_back(p / "merged_front.csv");
      for (const auto& f : files) fronts.push_back(read_front_file(f));
      if (fs::exists(p / "pass_rates.csv")) rates.push_back(p / "pass_rates.csv");
    } else {
      fronts.push_back(read_front_file(p));
    }
  }
  if (fronts.empty()) {
    std::cerr << "report: no front files found\n";
    return kBadInput;
  }
  const ParetoFront merged = merge_fronts(fronts);
  std::cout << fmt::format("{} front(s) merged\n", fronts.size());
  print_front(merged);
  for (const auto& r : rates) {
    std::ifstream in(r);
    std::cout << "\n" << r.string() << ":\n" << in.rdbuf();
  }
  if (!out.empty()) {
    std::ofstream o(out);
    if (!o) throw std::runtime_error(fmt::format("cannot write '{}'", out));
    write_front_csv(merged, o);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained symbolic regression for adsorption isotherms"};
  app.set_version_flag("--version", std::string(ISOSR_VERSION));
  app.require_subcommand(1);

  // search
  auto* search = app.add_subcommand("search", "Run GA or BSR searches and write fronts and pass rates");
  std::string config_path, engine, out_dir, constraints;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  bool deterministic = false;
  search->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  search->add_option("--engine", engine, "ga or bsr (overrides the config)")->check(CLI::IsMember({"ga", "bsr"}));
  search->add_option("--seed", seed, "Base seed");
  search->add_option("--runs", runs, "Independent runs")->check(CLI::PositiveNumber);
  search->add_option("--out", out_dir, "Output directory");
  search->add_flag("--deterministic", deterministic, "Run sequentially on one thread");
  search->add_option("--constraints", constraints, "Switch constraint penalties on or off")
      ->check(CLI::IsMember({"on", "off"}));

  // check
  auto* check = app.add_subcommand("check", "Evaluate the three constraints for one expression");
  std::string expr_text;
  std::vector<double> params;
  double start = 1e-8, stop = 1e3, budget_ms = 100;
  check->add_option("expression", expr_text, "Expression in p and c1..cK")->required();
  check->add_option("--params", params, "Comma-separated parameter values")->delimiter(',');
  check->add_option("--start", start, "Monotonicity scan start")->check(CLI::PositiveNumber);
  check->add_option("--stop", stop, "Monotonicity scan stop")->check(CLI::PositiveNumber);
  check->add_option("--budget-ms", budget_ms, "Time budget per constraint");

  // canon
  auto* canon = app.add_subcommand("canon", "Print the canonical form and complexities");
  canon->add_option("expression", expr_text)->required();
  canon->add_option("--params", params, "Fitted values to substitute instead of primes")->delimiter(',');

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the constants of an expression to a dataset");
  std::string data_path, model = "langmuir";
  std::vector<double> model_params{5.0, 2.0};
  double sigma = 0.0;
  std::uint64_t data_seed = 7, fit_seed = 1;
  int restarts = 8;
  GridSpec grid;
  fit->add_option("expression", expr_text)->required();
  fit->add_option("--data", data_path, "CSV with header pressure,loading");
  fit->add_option("--model", model, "Catalog model for synthetic data when --data is absent");
  fit->add_option("--model-params", model_params, "Synthetic model parameters")->delimiter(',');
  fit->add_option("--sigma", sigma, "Relative noise of the synthetic data");
  fit->add_option("--restarts", restarts)->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_seed);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset from the catalog");
  std::string synth_out;
  synth->add_option("--model", model);
  synth->add_option("--params", model_params)->delimiter(',');
  synth->add_option("--sigma", sigma);
  synth->add_option("--seed", data_seed);
  synth->add_option("--lo", grid.lo)->check(CLI::PositiveNumber);
  synth->add_option("--hi", grid.hi)->check(CLI::PositiveNumber);
  synth->add_option("--count", grid.count)->check(CLI::Range(3, 1000000));
  synth->add_flag("--linear", [&](std::int64_t) { grid.log_spaced = false; }, "Linear instead of log spacing");
  synth->add_option("--out", synth_out, "Output CSV (stdout when absent)");

  // report
  auto* report = app.add_subcommand("report", "Merge and print fronts from search output");
  std::vector<std::string> report_paths;
  std::string report_out;
  report->add_option("paths", report_paths, "Output directories or front CSV files")->required();
  report->add_option("--out", report_out, "Write the merged front here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadInput;
  }

  try {
    if (*search) {
      RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
      if (!engine.empty()) cfg.engine = parse_engine(engine);
      if (seed) cfg.seed = *seed;
      if (runs) cfg.runs = *runs;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (deterministic) cfg.deterministic = true;
      if (!constraints.empty()) set_constraints(cfg, constraints == "on");
      const Dataset d = load_dataset(cfg.dataset);
      validate(d);
      std::cerr << fmt::format("{}: {} run(s) on '{}' ({} points), constraints {}\n", to_string(cfg.engine),
                               cfg.runs, d.name, d.size(), constraints_active(cfg) ? "on" : "off");
      const SearchResult r = run_search(cfg, d, [](int i, const RunRecord& rec) {
        std::cerr << fmt::format("  run {}: {} samples, front size {}\n", i, rec.samples.size(), rec.front.size());
      });
      write_outputs(cfg, r, format_config(cfg));
      print_front(r.merged);
      std::cout << fmt::format("C1 {:.3f}  C2 {:.3f}  C3 {:.3f}  over {} distinct expressions\n",
                               r.rates.c1_fraction(), r.rates.c2_fraction(), r.rates.c3_fraction(),
                               r.rates.expressions);
      std::cerr << "wrote " << cfg.out_dir.string() << "\n";
      return 0;
    }
    if (*check) return cmd_check(expr_text, params, start, stop, budget_ms);
    if (*canon) return cmd_canon(expr_text, params);
    if (*fit) {
      const Expr e = parse(expr_text);
      Dataset d;
      if (!data_path.empty()) {
        d = load_csv(data_path);
      } else {
        Rng drng(data_seed);
        d = synthesize(catalog_model(model), model_params, grid, sigma, drng);
      }
      FitOptions o;
      o.restarts = restarts;
      Rng rng(fit_seed);
      print_fit(e, fit_constants(e, d, rng, o));
      return 0;
    }
    if (*synth) {
      Rng rng(data_seed);
      const Dataset d = synthesize(catalog_model(model), model_params, grid, sigma, rng);
      if (synth_out.empty())
        write_csv(d, std::cout);
      else
        save_csv(d, synth_out);
      return 0;
    }
    if (*report) return cmd_report(report_paths, report_out);
  } catch (const ParseError& e) {
    std::cerr << fmt::format("parse error at column {}: {}\n", e.column(), e.what());
    return kBadInput;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadInput;
  } catch (const DatasetError& e) {
    if (e.line())
      std::cerr << fmt::format("dataset error (line {}): {}\n", e.line(), e.what());
    else
      std::cerr << "dataset error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
