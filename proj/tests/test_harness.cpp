#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "qkp/csv_io.hpp"
#include "qkp/harness.hpp"
#include "qkp/rng.hpp"

using namespace qkp;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.shape = KroneckerShape(2, 3);
  c.trials = 4;
  c.n = 300;
  c.fraction = 0.5;
  c.master_seed = 7;
  c.parallelism = 1;
  return c;
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Type 7 quantile through the order-statistic position 1 + (n - 1) p.
double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = 1.0 + (static_cast<double>(v.size()) - 1.0) * p;
  const auto k = static_cast<std::size_t>(pos);
  if (k >= v.size()) return v.back();
  return std::lerp(v[k - 1], v[k], pos - static_cast<double>(k));
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("quantile_summary matches hand values") {
  const QuantileSummary q = quantile_summary({3, 1, 4, 1, 5, 9, 2, 6});
  CHECK(q.min == 1.0);
  CHECK(q.q1 == doctest::Approx(1.75));
  CHECK(q.median == doctest::Approx(3.5));
  CHECK(q.q3 == doctest::Approx(5.25));
  CHECK(q.max == 9.0);
  const QuantileSummary one = quantile_summary({2.5});
  CHECK(one.q1 == 2.5);
  CHECK(one.max == 2.5);
  CHECK_THROWS_AS(quantile_summary({}), std::invalid_argument);
}

TEST_CASE("quantile_summary agrees with an order-statistic routine") {
  Rng r(3);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> v(1 + r.below(40));
    for (double& x : v) x = r.normal();
    const QuantileSummary q = quantile_summary(v);
    CHECK(q.q1 == doctest::Approx(quantile7(v, 0.25)).epsilon(1e-14));
    CHECK(q.median == doctest::Approx(quantile7(v, 0.5)).epsilon(1e-14));
    CHECK(q.q3 == doctest::Approx(quantile7(v, 0.75)).epsilon(1e-14));
  }
}

TEST_CASE("config validation and effective rates") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.fit_config(Algorithm::S1).eps == doctest::Approx(36.0 * kDefaultMagnitudeFloor));
  CHECK(c.fit_config(Algorithm::S2).eps == doctest::Approx(kDefaultMagnitudeFloor));
  CHECK(c.fit_config(Algorithm::Qkp).eps1 == doctest::Approx(9.0 * kDefaultMagnitudeFloor));
  CHECK(c.fit_config(Algorithm::Qkp).eps2 == doctest::Approx(4.0 * kDefaultMagnitudeFloor));
  c.s2_eps = 0.01;
  c.qkp_eps2 = 3.0;
  CHECK(c.fit_config(Algorithm::S2).eps == 0.01);
  CHECK(c.fit_config(Algorithm::Qkp).eps2 == 3.0);
  CHECK(c.fit_config(Algorithm::S1).eps == doctest::Approx(36.0 * kDefaultMagnitudeFloor));

  ExperimentConfig bad = small_config();
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.estimators.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.magnitude_floor = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("hyperparameter counts at the paper shape") {
  ExperimentSummary s{ExperimentConfig{}, {}};
  CHECK(s.hyperparameter_count(Algorithm::S1) == 1);
  CHECK(s.hyperparameter_count(Algorithm::S2) == 1830);
  CHECK(s.hyperparameter_count(Algorithm::Qkp) == 76);
}

TEST_CASE("smoke run on the smallest desk shape") {
  ExperimentConfig c;
  c.shape = KroneckerShape(2, 2);
  c.trials = 1;
  c.n = 200;
  c.parallelism = 1;
  const ExperimentSummary s = run_experiment(c);
  REQUIRE(s.trials.size() == 1);
  CHECK(s.trials[0].ok);
  CHECK(s.trials[0].runs.size() == 3);
  CHECK(s.failed_trials() == 0);
  const auto rows = split_csv(errors_csv(s));
  CHECK(rows.size() == 4);
  CHECK(rows[1][1] == "S1");
  CHECK(rows[2][1] == "S2");
  CHECK(rows[3][1] == "QKP");
  for (Algorithm a : c.estimators) CHECK(s.values(a, Metric::RelativeError).size() == 1);
}

TEST_CASE("results do not depend on the number of workers") {
  ExperimentConfig c = small_config();
  c.trials = 6;
  const std::string serial = errors_csv(run_experiment(c));
  c.parallelism = 3;
  const std::string threaded = errors_csv(run_experiment(c));
  CHECK(serial == threaded);
  CHECK(run_trial(c, 4).seed == derive_seed(c.master_seed, 4));
}

TEST_CASE("emit_outputs writes a consistent directory") {
  const ExperimentConfig c = small_config();
  const ExperimentSummary s = run_experiment(c);
  const fs::path dir = fresh_dir("qkp_test_emit");
  emit_outputs(s, dir);
  for (const char* f : {"config.ini", "errors.csv", "timing.csv", "boxplot.csv", "hyperparams.csv",
                        "summary.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK_FALSE(fs::exists(dir / "failures.csv"));

  SUBCASE("config echo") {
    const std::string ini = read_text_file(dir / "config.ini");
    CHECK(ini.find("m1=2\n") != std::string::npos);
    CHECK(ini.find("seed=7\n") != std::string::npos);
    CHECK(ini.find("floor=") != std::string::npos);
    CHECK(ini.find("qkp-eps1=") != std::string::npos);
  }

  SUBCASE("boxplot quartiles recomputed from errors.csv") {
    const auto errors = split_csv(read_text_file(dir / "errors.csv"));
    REQUIRE(errors.size() == 1 + 3 * 4);
    CHECK(errors[0][2] == "e_rel");
    CHECK(errors[0][3] == "e_sp");
    std::map<std::pair<std::string, std::string>, std::vector<double>> raw;
    for (std::size_t i = 1; i < errors.size(); ++i) {
      raw[{errors[i][1], "e_rel"}].push_back(std::stod(errors[i][2]));
      raw[{errors[i][1], "e_sp"}].push_back(std::stod(errors[i][3]));
    }
    const auto box = split_csv(read_text_file(dir / "boxplot.csv"));
    REQUIRE(box.size() == 1 + 6);
    for (std::size_t i = 1; i < box.size(); ++i) {
      const auto& v = raw.at({box[i][0], box[i][1]});
      CHECK(std::stod(box[i][2]) == doctest::Approx(*std::min_element(v.begin(), v.end())));
      CHECK(std::stod(box[i][3]) == doctest::Approx(quantile7(v, 0.25)).epsilon(1e-12));
      CHECK(std::stod(box[i][4]) == doctest::Approx(quantile7(v, 0.5)).epsilon(1e-12));
      CHECK(std::stod(box[i][5]) == doctest::Approx(quantile7(v, 0.75)).epsilon(1e-12));
      CHECK(std::stod(box[i][6]) == doctest::Approx(*std::max_element(v.begin(), v.end())));
    }
  }

  SUBCASE("hyperparameter counts") {
    CHECK(read_text_file(dir / "hyperparams.csv") ==
          "estimator,hyperparameters\nS1,1\nS2,21\nQKP,9\n");
  }

  SUBCASE("support grids") {
    const fs::path g = dir / "supports";
    for (const char* f : {"trial_000_true.csv", "trial_000_s1.csv", "trial_000_s2.csv",
                          "trial_000_qkp.csv", "trial_000.txt"}) {
      CHECK(fs::exists(g / f));
    }
    CHECK(read_matrix_csv(g / "trial_003_true.csv") == s.trials[3].true_support->matrix());
    CHECK(read_matrix_csv(g / "trial_003_qkp.csv") == s.trials[3].runs[2].support.matrix());
  }
  fs::remove_all(dir);
}

TEST_CASE("render_supports layout") {
  Matrix e = Matrix::Identity(4, 4);
  e(0, 3) = e(3, 0) = 1.0;
  const std::string text =
      render_supports({{"true", SupportMatrix(e)}, {"I", SupportMatrix(Matrix::Identity(4, 4))}},
                      {2, 2});
  const std::string want =
      "true    I    \n"
      "#.|.#   #.|..\n"
      ".#|..   .#|..\n"
      "--+--   --+--\n"
      "..|#.   ..|#.\n"
      "#.|.#   ..|.#\n";
  CHECK(text == want);
}

TEST_CASE("no estimator results is an error and writes nothing") {
  ExperimentSummary s{small_config(), {}};
  TrialResult failed;
  failed.ok = false;
  failed.error = "boom";
  s.trials.push_back(failed);
  const fs::path dir = fresh_dir("qkp_test_empty");
  CHECK_THROWS_AS(emit_outputs(s, dir), std::runtime_error);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("failed trials are skipped and listed") {
  ExperimentConfig c = small_config();
  c.trials = 2;
  ExperimentSummary s = run_experiment(c);
  s.trials[1].ok = false;
  s.trials[1].error = "bad, really";
  s.trials[1].runs.clear();
  CHECK(s.failed_trials() == 1);
  CHECK(s.values(Algorithm::S1, Metric::SparsityError).size() == 1);
  const fs::path dir = fresh_dir("qkp_test_failed");
  emit_outputs(s, dir);
  const std::string failures = read_text_file(dir / "failures.csv");
  CHECK(failures.find("1,") != std::string::npos);
  CHECK(failures.find("bad; really") != std::string::npos);
  fs::remove_all(dir);
}
