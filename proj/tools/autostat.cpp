// Command-line front end: fit-and-report on a CSV dataset, benchmark the
// language presets over dataset collections, describe a kernel expression,
// or emit one of the bundled synthetic datasets.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "autostat/describe.hpp"
#include "autostat/harness.hpp"
#include "autostat/io.hpp"
#include "autostat/normal_form.hpp"
#include "autostat/parse.hpp"
#include "autostat/report.hpp"
#include "autostat/search.hpp"

namespace {

autostat::Language language_or_throw(const std::string& text) {
  auto lang = autostat::parse_language(text);
  if (!lang)
    throw CLI::ValidationError(
        "--language", "unknown language preset '" + text +
                          "' (expected full, se, linear, mkl, tci, spectral "
                          "or changepoint)");
  return *lang;
}

struct AnalyseArgs {
  std::string input;
  int x_col = 0, y_col = 1;
  std::string x_unit, y_unit;
  int depth = 10, restarts = 10, jobs = 1;
  std::uint64_t seed = 0;
  std::string language = "full";
  bool interpretable = false;
  std::string out = "report";
};

int run_analyse(const AnalyseArgs& a) {
  autostat::Language lang = language_or_throw(a.language);
  autostat::Dataset data =
      autostat::ingest_csv(a.input, a.x_col, a.y_col, a.x_unit, a.y_unit);
  autostat::log_info("loaded " + std::to_string(data.n()) + " rows from " +
                     a.input);

  autostat::SearchConfig sc;
  sc.max_depth = a.depth;
  sc.restarts = a.restarts;
  sc.seed = a.seed;
  sc.language = lang;
  sc.interpretable = a.interpretable;
  sc.jobs = a.jobs;
  autostat::SearchResult res = autostat::greedy_search(data, sc);

  autostat::ReportMeta meta;
  meta.language = autostat::language_name(lang);
  meta.seed = a.seed;
  meta.max_depth = a.depth;
  meta.restarts = a.restarts;
  meta.interpretable = a.interpretable;
  autostat::render_report(res.best, data, res.trace, meta, a.out);

  std::cout << "Selected model: " << autostat::print_kernel(res.best.kernel)
            << "\n";
  std::cout << "Log marginal likelihood: " << res.best.log_ml
            << "  BIC: " << res.best.bic_value << "\n";
  std::cout << "Report written to " << a.out << "/report.md\n";
  return 0;
}

struct BenchmarkArgs {
  std::string input;  // directory of CSV files; empty = bundled synthetics
  std::string presets = "linear,se,mkl,tci,spectral,changepoint,full";
  std::string split = "extrapolation";
  int depth = 5, restarts = 2, jobs = 1, n = 80;
  std::uint64_t seed = 0;
  bool interpretable = false;
  std::string out = "benchmark";
};

int run_benchmark(const BenchmarkArgs& a) {
  std::vector<autostat::Dataset> datasets;
  if (a.input.empty()) {
    datasets = autostat::bundled_synthetics(a.n, a.seed);
  } else {
    for (const auto& p : autostat::list_csv_files(a.input))
      datasets.push_back(autostat::ingest_csv(p));
    if (datasets.empty())
      throw std::runtime_error("no .csv files found in " + a.input);
  }

  std::vector<autostat::Language> presets;
  std::string token;
  for (char c : a.presets + ",") {
    if (c == ',') {
      if (!token.empty()) presets.push_back(language_or_throw(token));
      token.clear();
    } else {
      token += c;
    }
  }
  auto split = autostat::parse_split(a.split);
  if (!split)
    throw CLI::ValidationError("--split",
                               "expected extrapolation or interpolation");

  autostat::BenchmarkConfig cfg;
  cfg.max_depth = a.depth;
  cfg.restarts = a.restarts;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  cfg.interpretable = a.interpretable;
  autostat::BenchmarkTable table =
      autostat::run_benchmark(datasets, presets, *split, cfg);

  std::filesystem::create_directories(a.out);
  autostat::write_text_file(std::filesystem::path(a.out) / "rmse.csv",
                            autostat::benchmark_csv(table, false));
  autostat::write_text_file(
      std::filesystem::path(a.out) / "rmse_standardised.csv",
      autostat::benchmark_csv(table, true));
  std::cout << autostat::benchmark_csv(table, true);
  std::cout << "Tables written to " << a.out << "\n";
  return 0;
}

struct DescribeArgs {
  std::string kernel;
  std::string x_unit;
};

int run_describe(const DescribeArgs& a) {
  autostat::KernelExpr e = autostat::parse_kernel(a.kernel);
  std::cout << "Canonical form: " << autostat::print_kernel(e) << "\n";
  std::cout << "Free parameters: " << autostat::count_params(e) << "\n";
  autostat::NormalForm nf = autostat::to_normal_form(e);
  autostat::DescriptionContext ctx;
  ctx.x_unit = a.x_unit;
  std::cout << "Additive components:\n";
  for (size_t i = 0; i < nf.terms.size(); ++i) {
    std::cout << "  " << i + 1 << ". " << autostat::print_term(nf.terms[i])
              << "\n     " << autostat::describe_term(nf.terms[i], ctx)
              << "\n";
  }
  return 0;
}

struct SynthArgs {
  std::string name;
  int n = 80;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  autostat::Dataset d = autostat::make_synthetic(a.name, a.n, a.seed);
  std::string csv = "x,y\n";
  for (int i = 0; i < d.n(); ++i)
    csv += autostat::format_double(d.xs[static_cast<size_t>(i)]) + "," +
           autostat::format_double(d.ys[static_cast<size_t>(i)]) + "\n";
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    autostat::write_text_file(a.out, csv);
    std::cout << "Wrote " << d.n() << " rows to " << a.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "autostat: automatic construction and description of Gaussian-process "
      "regression models for one-dimensional data.\nSet AUTOSTAT_LOG to "
      "quiet, info or debug to control progress output."};
  app.require_subcommand(1);

  AnalyseArgs an;
  auto* analyse =
      app.add_subcommand("analyse", "Fit a model to a CSV file and write a report");
  analyse->add_option("--input", an.input, "CSV file with numeric x/y columns")
      ->required();
  analyse->add_option("--x-col", an.x_col, "0-based x column index")
      ->capture_default_str();
  analyse->add_option("--y-col", an.y_col, "0-based y column index")
      ->capture_default_str();
  analyse->add_option("--x-unit", an.x_unit, "Unit label for x (e.g. year)");
  analyse->add_option("--y-unit", an.y_unit, "Unit label for y");
  analyse->add_option("--depth", an.depth, "Maximum search depth")
      ->capture_default_str();
  analyse
      ->add_option("--restarts", an.restarts,
                   "Random optimizer restarts per candidate")
      ->capture_default_str();
  analyse->add_option("--seed", an.seed, "Random seed")->capture_default_str();
  analyse
      ->add_option("--language", an.language,
                   "Kernel language preset: full, se, linear, mkl, tci, "
                   "spectral, changepoint")
      ->capture_default_str();
  analyse->add_flag("--interpretable", an.interpretable,
                    "Distribute products over sums during the search");
  analyse->add_option("--jobs", an.jobs, "Worker threads for candidate scoring")
      ->capture_default_str();
  analyse->add_option("--out", an.out, "Output directory for the report")
      ->capture_default_str();

  BenchmarkArgs bm;
  auto* benchmark = app.add_subcommand(
      "benchmark", "Run language presets over datasets and tabulate RMSE");
  benchmark->add_option(
      "--input", bm.input,
      "Directory of CSV datasets (default: bundled synthetic datasets)");
  benchmark->add_option("--presets", bm.presets, "Comma-separated preset list")
      ->capture_default_str();
  benchmark
      ->add_option("--split", bm.split,
                   "Evaluation split: extrapolation (last 10% held out) or "
                   "interpolation (random half held out)")
      ->capture_default_str();
  benchmark->add_option("--depth", bm.depth, "Maximum search depth")
      ->capture_default_str();
  benchmark
      ->add_option("--restarts", bm.restarts,
                   "Random optimizer restarts per candidate")
      ->capture_default_str();
  benchmark->add_option("--seed", bm.seed, "Random seed")
      ->capture_default_str();
  benchmark->add_option("--jobs", bm.jobs, "Worker threads over datasets")
      ->capture_default_str();
  benchmark
      ->add_option("--n", bm.n, "Points per bundled synthetic dataset")
      ->capture_default_str();
  benchmark->add_flag("--interpretable", bm.interpretable,
                      "Distribute products over sums during the search");
  benchmark->add_option("--out", bm.out, "Output directory for CSV tables")
      ->capture_default_str();

  DescribeArgs de;
  auto* describe = app.add_subcommand(
      "describe", "Parse a kernel expression and describe its components");
  describe
      ->add_option("kernel", de.kernel,
                   "Kernel expression, e.g. \"SE(1,2) * (WN(0.1) + "
                   "PER(1,1,5))\"")
      ->required();
  describe->add_option("--x-unit", de.x_unit, "Unit label for x");

  SynthArgs sy;
  auto* synth =
      app.add_subcommand("synth", "Generate a bundled synthetic dataset");
  std::string synth_help = "Generator name: ";
  for (size_t i = 0; i < autostat::synthetic_names().size(); ++i)
    synth_help += (i ? ", " : "") + autostat::synthetic_names()[i];
  synth->add_option("name", sy.name, synth_help)->required();
  synth->add_option("--n", sy.n, "Number of points")->capture_default_str();
  synth->add_option("--seed", sy.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", sy.out, "Output CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyse) return run_analyse(an);
    if (*benchmark) return run_benchmark(bm);
    if (*describe) return run_describe(de);
    if (*synth) return run_synth(sy);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
