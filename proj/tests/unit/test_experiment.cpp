#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fmpols/analysis.hpp"
#include "fmpols/config.hpp"
#include "fmpols/experiment.hpp"

using namespace fmpols;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("fmpols_unit_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(slurp(p));
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig small_exp1(int T = 300) {
  ExperimentConfig c = preset("exp1");
  c.T = T;
  c.comparator.grid.steps = 21;
  return c;
}

}  // namespace

TEST_CASE("presets carry the published settings") {
  const ExperimentConfig e1 = preset("exp1");
  CHECK(e1.system.name == "double_integrator");
  CHECK(e1.H == 15);
  CHECK(e1.lambda == 1.0);
  CHECK(e1.T == 2000);
  CHECK(e1.noise.uniform_w == 0.3);
  CHECK(e1.noise.uniform_v == 0.3);
  CHECK(e1.comparator.kind == ComparatorKind::Grid);

  const ExperimentConfig e2 = preset("exp2");
  CHECK(e2.H == 8);
  CHECK(e2.lambda == 1.0);
  CHECK(e2.system.name == "symmetric_swap");
  CHECK(e2.noise.bias_w == Vec{0.1, 0.1});
  CHECK(e2.noise.amp_w == Vec{0.1, 0.1});
  CHECK(e2.noise.uniform_w == 0.01);

  const ExperimentConfig a1 = preset("expA1");
  CHECK(a1.noise.kind == NoiseKind::Gaussian);
  CHECK(a1.noise.uniform_w == 0.2);
  CHECK(a1.noise.uniform_v == 0.05);
  CHECK(a1.H == 15);
  CHECK(a1.T == 5000);
  CHECK(a1.trials == 50);

  const ExperimentConfig a2 = preset("expA2");
  CHECK(a2.system.name == "jordan3");
  CHECK(a2.H == 12);
  CHECK(a2.trials == 50);
  bool has_diff3 = false;
  for (const Variant& v : a2.variants) has_diff3 = has_diff3 || resolve_coeffs(v.hint) == PolyCoeffs{1, 0, -3, 0, 3, 0, -1};
  CHECK(has_diff3);

  const ExperimentConfig a3 = preset("expA3");
  CHECK(a3.system.jordan_r == 2);
  for (auto v : eigenvalues_small(a3.system.A).values) {
    CHECK(std::abs(v) == doctest::Approx(1.0));
    CHECK(std::abs(std::arg(v)) == doctest::Approx(0.7).epsilon(1e-6));
  }
  std::vector<std::string> labels;
  for (const Variant& v : a3.variants) labels.push_back(v.label);
  CHECK(labels.size() == 4);

  for (const std::string& n : preset_names()) CHECK_NOTHROW(preset(n).validate());
  try {
    preset("exp9");
    FAIL("expected UnknownPreset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownPreset);
  }
}

TEST_CASE("config validation") {
  ExperimentConfig c = preset("exp2");
  c.T = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = preset("exp2");
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = preset("exp2");
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  for (double x : {1.0 / 3.0, 123456.789, 1e-300, -7.25}) CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("CSV schema") {
  VariantRecord rec;
  rec.label = "x";
  rec.has_comparator = true;
  rec.has_hint = true;
  const fs::path dir = scratch_dir("csv");
  emit_csv(rec, dir / "empty.csv");
  CHECK(slurp(dir / "empty.csv") == "t,y_norm,learner_loss,comparator_loss,cum_regret,delta_max\n");

  StepRow row;
  row.t = 1;
  rec.trials.push_back({row});
  emit_csv(rec, dir / "one.csv");
  CHECK(slurp(dir / "one.csv") == "t,y_norm,learner_loss,comparator_loss,cum_regret,delta_max\n1,0,0,0,0,0\n");
  emit_csv(rec, dir / "again.csv");
  CHECK(slurp(dir / "again.csv") == slurp(dir / "one.csv"));

  rec.has_comparator = false;
  rec.has_hint = false;
  CHECK(csv_header(rec, false) == "t,y_norm,learner_loss");
  rec.trials.push_back({row});
  CHECK(csv_header(rec, true) == "t,y_norm_mean,y_norm_std,learner_loss_mean,learner_loss_std");

  CHECK_THROWS_AS(emit_csv(rec, dir / "missing" / "deeper" / "x.csv"), Error);
  fs::remove_all(dir);
}

TEST_CASE("run_experiment: regret column matches the loss columns") {
  const RunRecord run = run_experiment(small_exp1());
  const fs::path dir = scratch_dir("regret");
  write_outputs(run, dir);
  for (const VariantRecord& rec : run.variants) {
    CAPTURE(rec.label);
    const auto rows = read_csv(dir / ("exp1_" + rec.label + ".csv"));
    REQUIRE(rows.size() == 301);
    CHECK(rows[0][4] == "cum_regret");
    double acc = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(std::stoi(rows[i][0]) == static_cast<int>(i));
      acc += std::stod(rows[i][2]) - std::stod(rows[i][3]);
      CHECK(std::abs(std::stod(rows[i][4]) - acc) <= 1e-9 * (1.0 + std::abs(acc)));
    }
  }
  CHECK(fs::exists(dir / "summary.txt"));
  fs::remove_all(dir);
}

TEST_CASE("comparator none drops the regret columns") {
  ExperimentConfig c = preset("exp2");
  c.T = 150;
  const RunRecord run = run_experiment(c);
  for (const VariantRecord& rec : run.variants) {
    CHECK_FALSE(rec.has_comparator);
    CHECK(csv_header(rec, false).find("cum_regret") == std::string::npos);
    CHECK(csv_header(rec, false).find("comparator_loss") == std::string::npos);
  }
}

TEST_CASE("Monte Carlo columns are the mean of the per-trial files") {
  ExperimentConfig c = preset("expA1");
  c.T = 120;
  c.trials = 5;
  c.emit_trials = true;
  const RunRecord run = run_experiment(c);
  const fs::path dir = scratch_dir("mc");
  write_outputs(run, dir);
  for (const VariantRecord& rec : run.variants) {
    CAPTURE(rec.label);
    const auto agg = read_csv(dir / ("expA1_" + rec.label + ".csv"));
    std::vector<std::vector<std::vector<std::string>>> per;
    for (int k = 0; k < 5; ++k) per.push_back(read_csv(dir / ("expA1_" + rec.label + "_trial" + std::to_string(k) + ".csv")));
    REQUIRE(agg.size() == 121);
    const std::size_t cols = per[0][0].size();
    for (std::size_t i = 1; i < agg.size(); ++i) {
      for (std::size_t c2 = 1; c2 < cols; ++c2) {
        double mean = 0.0;
        for (const auto& f : per) mean += std::stod(f[i][c2]);
        mean /= 5.0;
        const double got = std::stod(agg[i][2 * c2 - 1]);
        CHECK(std::abs(got - mean) <= 1e-12 * (1.0 + std::abs(mean)));
      }
    }
  }
  // Trials are distinct draws.
  CHECK(run.variants[0].summaries[0].seed != run.variants[0].summaries[1].seed);
  fs::remove_all(dir);
}

TEST_CASE("same seed, same bytes") {
  const ExperimentConfig c = small_exp1(200);
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  write_outputs(run_experiment(c), a);
  write_outputs(run_experiment(c), b);
  for (const auto& e : fs::directory_iterator(a)) CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("regret bound covers every certified comparator on the exp1 run") {
  ExperimentConfig c = preset("exp1");
  std::erase_if(c.variants, [](const Variant& v) { return v.label != "lb_0.8"; });
  const RunRecord run = run_experiment(c);
  const VariantRecord& rec = run.variants.front();
  const MeasuredConstants mc = system_constants(c);
  for (int T : {500, 1000, 2000}) {
    BoundInputs in;
    in.norm_C = mc.norm_C;
    in.p = 1;
    in.r = 2;
    in.kappa = c.comparator.grid.kappa;
    in.gamma = c.comparator.grid.gamma;
    in.C_w = mc.C_w;
    in.C_v = mc.C_v;
    in.C_y = mc.C_y;
    in.lambda = c.lambda;
    in.H = c.H;
    in.T = T;
    in.delta_max = rec.trials[0][static_cast<std::size_t>(T - 1)].delta_max;
    // cum_regret at T is taken against the best certified gain at T, i.e.
    // the largest regret over the comparator class.
    CHECK(rec.trials[0][static_cast<std::size_t>(T - 1)].cum_regret <= regret_bound(in));
  }
}

TEST_CASE("config JSON round trip") {
  for (const std::string& n : preset_names()) {
    const ExperimentConfig c = preset(n);
    const std::string js = config_to_json(c);
    const ExperimentConfig back = config_from_json(js);
    CHECK(config_to_json(back) == js);
  }
  ExperimentConfig inline_sys = preset("exp2");
  inline_sys.system.name = "custom_swap";
  const ExperimentConfig back = config_from_json(config_to_json(inline_sys));
  CHECK(back.system.A == inline_sys.system.A);
  CHECK(back.system.name == "custom_swap");
}

TEST_CASE("config errors") {
  const std::string good = config_to_json(preset("exp2"));
  auto expect_config_error = [](const std::string& text) {
    try {
      config_from_json(text);
      FAIL("expected ConfigError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  };
  std::string extra = good;
  extra.insert(1, "\"bogus\": 1,");
  expect_config_error(extra);
  std::string nested = good;
  nested.replace(nested.find("\"freq_v\""), 8, "\"freq_q\"");
  expect_config_error(nested);
  expect_config_error("{ not json");
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), Error);
}

TEST_CASE("overrides") {
  const ExperimentConfig base = preset("exp1");
  const std::vector<std::string> ov{"T=500", "noise.uniform_w=0.2", "variants.1.lambda=0.1", "comparator.grid.steps=41",
                                    "name=custom_run"};
  const ExperimentConfig c = apply_overrides(base, ov);
  CHECK(c.T == 500);
  CHECK(c.noise.uniform_w == 0.2);
  REQUIRE(c.variants[1].lambda.has_value());
  CHECK(*c.variants[1].lambda == 0.1);
  CHECK(c.comparator.grid.steps == 41);
  CHECK(c.name == "custom_run");
  CHECK_THROWS_AS(apply_overrides(base, std::vector<std::string>{"nope=1"}), Error);
  CHECK_THROWS_AS(apply_overrides(base, std::vector<std::string>{"T"}), Error);
  CHECK_THROWS_AS(apply_overrides(base, std::vector<std::string>{"variants.99.lambda=1"}), Error);
  CHECK_THROWS_AS(apply_overrides(base, std::vector<std::string>{"T=-3"}), Error);
}

TEST_CASE("summary mentions every variant and the bound checks") {
  const RunRecord run = run_experiment(small_exp1(200));
  const std::string s = summary_text(run);
  for (const VariantRecord& rec : run.variants) CHECK(s.find("[" + rec.label + "]") != std::string::npos);
  CHECK(s.find("VIOLATED") == std::string::npos);
  CHECK(s.find("assumed, not published") != std::string::npos);
}
