// Tests for the evaluation harness: split construction, bundled synthetic
// generators, CSV ingestion, deterministic RNG streams, the parallel_for
// helper, and a reduced benchmark grid exercising row standardisation and
// warm-start containment.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "autostat/harness.hpp"
#include "autostat/io.hpp"
#include "autostat/rng.hpp"
#include "autostat/util.hpp"

namespace {

using namespace autostat;
namespace fs = std::filesystem;

Dataset ramp_dataset(int n) {
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    xs.push_back(static_cast<double>(i));
    ys.push_back(0.5 * i + ((i % 3) - 1) * 0.1);
  }
  return make_dataset(xs, ys, "ramp");
}

fs::path write_temp_csv(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  write_text_file(p, content);
  return p;
}

}  // namespace

TEST_CASE("extrapolation split holds out the final tenth", "[harness]") {
  Dataset d = ramp_dataset(100);
  Split sp = split_extrapolation(d);
  CHECK(sp.train.n() == 90);
  CHECK(sp.test_x.size() == 10);
  // Training points all precede every test point.
  double train_max = sp.train.x_max();
  for (double tx : sp.test_x) CHECK(tx > train_max);
  // Nothing lost: train + test recompose the input.
  CHECK(sp.train.n() + static_cast<int>(sp.test_x.size()) == d.n());

  // Rounding: ceil(0.9 * 7) = 7 would leave nothing, so one point is held out.
  Split tiny = split_extrapolation(ramp_dataset(7));
  CHECK(tiny.train.n() == 6);
  CHECK(tiny.test_x.size() == 1);

  CHECK_THROWS_AS(split_extrapolation(ramp_dataset(2)),
                  std::invalid_argument);
}

TEST_CASE("interpolation split takes a seeded random half", "[harness]") {
  Dataset d = ramp_dataset(30);
  Split sp = split_interpolation(d, 11);
  CHECK(sp.train.n() == 15);
  CHECK(sp.test_x.size() == 15);

  // The two halves partition the original xs.
  std::multiset<double> all(d.xs.begin(), d.xs.end());
  std::multiset<double> got(sp.train.xs.begin(), sp.train.xs.end());
  got.insert(sp.test_x.begin(), sp.test_x.end());
  CHECK(got == all);

  // Training xs come back sorted regardless of shuffle order.
  CHECK(std::is_sorted(sp.train.xs.begin(), sp.train.xs.end()));

  // Same seed reproduces the split; another seed mixes differently.
  Split again = split_interpolation(d, 11);
  CHECK(again.train.xs == sp.train.xs);
  Split other = split_interpolation(d, 12);
  CHECK(other.train.xs != sp.train.xs);
}

TEST_CASE("bundled synthetics are deterministic and well-formed",
          "[harness]") {
  const auto& names = synthetic_names();
  REQUIRE(names.size() == 6);
  for (const auto& name : names) {
    Dataset d = make_synthetic(name, 80, 0);
    CHECK(d.name == name);
    CHECK(d.n() == 80);
    CHECK(d.x_min() == 0.0);
    CHECK(d.x_max() == 10.0);
    for (double y : d.ys) CHECK(std::isfinite(y));

    Dataset same = make_synthetic(name, 80, 0);
    CHECK(same.ys == d.ys);
    Dataset reseeded = make_synthetic(name, 80, 1);
    CHECK(reseeded.ys != d.ys);
  }
  CHECK_THROWS_AS(make_synthetic("no-such-set"), std::invalid_argument);

  auto all = bundled_synthetics(40, 2);
  REQUIRE(all.size() == names.size());
  for (size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].name == names[i]);
    CHECK(all[i].n() == 40);
  }
}

TEST_CASE("csv ingestion handles headers, columns, and errors", "[harness]") {
  auto p1 = write_temp_csv("autostat_io1.csv",
                           "time,value\n1,2.5\n2,3.5\n3,5\n");
  Dataset d1 = ingest_csv(p1);
  CHECK(d1.n() == 3);
  CHECK(d1.name == "autostat_io1");
  CHECK(d1.xs == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(d1.ys == std::vector<double>{2.5, 3.5, 5.0});

  // No header, CRLF line endings, padded fields.
  auto p2 = write_temp_csv("autostat_io2.csv", "1 , 2\r\n2,\t4\r\n3,6\r\n");
  Dataset d2 = ingest_csv(p2);
  CHECK(d2.n() == 3);
  CHECK(d2.ys == std::vector<double>{2.0, 4.0, 6.0});

  // Column selection by index.
  auto p3 = write_temp_csv("autostat_io3.csv",
                           "a,b,c\n10,x1,0.1\n20,x2,0.2\n30,x3,0.3\n");
  Dataset d3 = ingest_csv(p3, 0, 2);
  CHECK(d3.n() == 3);
  CHECK(d3.ys == std::vector<double>{0.1, 0.2, 0.3});

  // Units flow through to the dataset.
  Dataset d4 = ingest_csv(p1, 0, 1, "year", "count");
  CHECK(d4.x_unit == "year");
  CHECK(d4.y_unit == "count");

  // Unsorted input is sorted by make_dataset.
  auto p5 = write_temp_csv("autostat_io5.csv", "3,30\n1,10\n2,20\n");
  Dataset d5 = ingest_csv(p5);
  CHECK(d5.xs == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(d5.ys == std::vector<double>{10.0, 20.0, 30.0});

  // Bad numeric data past the header reports its 1-based line.
  auto bad = write_temp_csv("autostat_io_bad.csv", "1,2\n2,oops\n3,6\n");
  CHECK_THROWS_WITH(ingest_csv(bad),
                    Catch::Matchers::ContainsSubstring(":2:") &&
                        Catch::Matchers::ContainsSubstring("numeric"));

  // Missing columns report the requested width.
  auto narrow = write_temp_csv("autostat_io_narrow.csv", "1,2\n3\n");
  CHECK_THROWS_WITH(ingest_csv(narrow),
                    Catch::Matchers::ContainsSubstring("columns"));

  // A header alone is not a dataset.
  auto empty = write_temp_csv("autostat_io_empty.csv", "time,value\n1,2\n");
  CHECK_THROWS_WITH(ingest_csv(empty),
                    Catch::Matchers::ContainsSubstring("fewer than two"));

  CHECK_THROWS_AS(ingest_csv(fs::temp_directory_path() / "absent.csv"),
                  std::runtime_error);

  for (const auto& p : {p1, p2, p3, p5, bad, narrow, empty}) fs::remove(p);
}

TEST_CASE("csv directory listing is sorted", "[harness]") {
  fs::path dir = fs::temp_directory_path() / "autostat_csv_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "b.csv", "1,2\n2,3\n");
  write_text_file(dir / "a.csv", "1,2\n2,3\n");
  write_text_file(dir / "notes.txt", "not a csv");
  auto files = list_csv_files(dir);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.csv");
  CHECK(files[1].filename() == "b.csv");
  fs::remove_all(dir);
}

TEST_CASE("rng streams are deterministic and well-separated", "[harness]") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1) != derive_seed(2));

  // FNV-1a pins: empty string hashes to the offset basis.
  CHECK(stable_hash("") == 1469598103934665603ULL);
  CHECK(stable_hash("abc") != stable_hash("acb"));

  auto r1 = make_rng(9, stable_hash("stage"));
  auto r2 = make_rng(9, stable_hash("stage"));
  CHECK(r1() == r2());
}

TEST_CASE("parallel_for covers every index once and propagates errors",
          "[harness]") {
  const int n = 200;
  std::vector<std::atomic<int>> hits(n);
  parallel_for(n, 4, [&](int i) { hits[static_cast<size_t>(i)]++; });
  for (int i = 0; i < n; ++i) CHECK(hits[static_cast<size_t>(i)] == 1);

  std::vector<int> serial;
  parallel_for(3, 1, [&](int i) { serial.push_back(i); });
  CHECK(serial == std::vector<int>{0, 1, 2});

  CHECK_THROWS_WITH(parallel_for(8, 3,
                                 [&](int i) {
                                   if (i == 5)
                                     throw std::runtime_error("boom at 5");
                                 }),
                    Catch::Matchers::ContainsSubstring("boom at 5"));
  parallel_for(0, 4, [&](int) { throw std::runtime_error("never runs"); });
}

TEST_CASE("reduced benchmark grid standardises rows and honours containment",
          "[harness][slow]") {
  std::vector<Dataset> datasets = {make_synthetic("linear", 40, 0),
                                   make_synthetic("periodic", 40, 0)};
  std::vector<Language> presets = {Language::SeOnly, Language::Linear,
                                   Language::Full};
  BenchmarkConfig cfg;
  cfg.max_depth = 2;
  cfg.restarts = 1;
  cfg.seed = 3;
  cfg.jobs = 1;

  BenchmarkTable t =
      run_benchmark(datasets, presets, SplitKind::Extrapolation, cfg);

  REQUIRE(t.datasets == std::vector<std::string>{"linear", "periodic"});
  REQUIRE(t.presets == presets);
  REQUIRE(t.rmse.size() == 2);
  REQUIRE(t.standardised.size() == 2);

  for (size_t row = 0; row < 2; ++row) {
    double row_min = std::numeric_limits<double>::infinity();
    for (size_t col = 0; col < presets.size(); ++col) {
      INFO("row " << row << " col " << col);
      REQUIRE(std::isfinite(t.rmse[row][col]));
      CHECK(t.rmse[row][col] > 0.0);
      row_min = std::min(row_min, t.rmse[row][col]);
    }
    // Standardised row minimum is exactly 1.0: the winning cell divides by
    // itself.
    double std_min = std::numeric_limits<double>::infinity();
    for (size_t col = 0; col < presets.size(); ++col) {
      CHECK(t.standardised[row][col] ==
            Catch::Approx(t.rmse[row][col] / row_min));
      std_min = std::min(std_min, t.standardised[row][col]);
    }
    CHECK(std_min == 1.0);

    // Warm-start containment: FULL's recorded training likelihood is at
    // least each subsumed preset's (SE_ONLY and LINEAR both feed FULL).
    double full_lml = t.train_log_ml[row][2];
    CHECK(full_lml >= t.train_log_ml[row][0] - 1e-6);
    CHECK(full_lml >= t.train_log_ml[row][1] - 1e-6);
  }

  // CSV rendering round trip.
  std::string csv = benchmark_csv(t, true);
  CHECK(csv.rfind("dataset,SE_ONLY,LINEAR,FULL\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("NA") == std::string::npos);
  CHECK(csv.find("linear,") != std::string::npos);
  CHECK(csv.find("periodic,") != std::string::npos);

  // Determinism: the whole grid reproduces bitwise.
  BenchmarkTable u =
      run_benchmark(datasets, presets, SplitKind::Extrapolation, cfg);
  CHECK(u.rmse == t.rmse);
  CHECK(u.standardised == t.standardised);
  CHECK(u.train_log_ml == t.train_log_ml);
}
