#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "bbins/config.hpp"
#include "bbins/error.hpp"
#include "bbins/experiments.hpp"

using namespace bbins;

namespace {

std::string csv_of(const CampaignResult& r) {
  std::ostringstream out;
  write_csv(r, out);
  return out.str();
}

std::size_t line_count(const std::string& s) {
  std::size_t lines = 0;
  for (char ch : s) lines += ch == '\n';
  return lines;
}

Campaign small_campaign() {
  return parse_config_text(R"({
    "name": "small",
    "n": 16,
    "b": 16,
    "m": 256,
    "process": {"kind": "two_choice"},
    "sweep": [{"field": "process", "values": ["two_choice", "one_plus_beta:0.5"]},
              {"field": "b_over_n", "values": [1, 2, 4]}],
    "runs_per_point": 3,
    "seed": 9
  })");
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("minimal config takes defaults") {
  const Campaign c = parse_config_text(R"({"n": 10})");
  CHECK(c.base.n == 10);
  CHECK(c.base.b == 10);
  CHECK(c.base.m == 10);
  CHECK(c.base.process == ProcessSpec::two_choice());
  CHECK(c.base.process.tie_breaking == TieBreaking::Deterministic);
  CHECK(c.runs_per_point == 1);
  CHECK(c.sweep.empty());
}

TEST_CASE("unknown keys are rejected with their position") {
  const std::string text = "{\n  \"n\": 10,\n  \"batchsize\": 5\n}\n";
  try {
    parse_config_text(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("batchsize") != std::string::npos);
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
  CHECK_THROWS_AS(parse_config_text(R"({"n": 10, "process": {"kind": "two_choice", "beta": 1}})"), ParseError);
  CHECK_THROWS_AS(parse_config_text(R"({"b": 10})"), ParseError);
  CHECK_THROWS_AS(parse_config(std::string(BBINS_TEST_DATA_DIR) + "/bad_key.json"), ParseError);
}

TEST_CASE("malformed JSON is a parse error") {
  try {
    parse_config_text("{\n  \"n\": 10,\n  \"b\": \n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("invalid campaigns are rejected") {
  CHECK_THROWS(parse_config_text(R"({"n": 10, "b": 3, "m": 10})"));
  CHECK_THROWS(parse_config_text(R"({"n": 10, "sweep": [{"field": "colour", "values": [1]}]})"));
  CHECK_THROWS(parse_config_text(R"({"n": 10, "process": {"kind": "quantile", "params": {"delta": 1.5}}})"));
}

TEST_CASE("config round trip") {
  const std::vector<Campaign> cases = {small_campaign(),      parse_config_text(R"({"n": 10})"),
                                       preset_fig5(false),    preset_fig6(false),
                                       preset_fig7(false),    preset_fig8(true),
                                       parse_config_text(R"({
    "n": 64, "b": 64, "m": 640,
    "process": {"kind": "graphical", "tie_breaking": "random"},
    "graph": {"kind": "random_regular", "n": 64, "d": 4, "seed": 3},
    "weights": {"kind": "scaled_geometric", "q": 0.3},
    "midbatch_samples": 4, "record_runtime": true
  })")};
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(parse_config_text(config_to_text(c)) == c);
  }
}

TEST_CASE("grid points and applied configs") {
  const Campaign c = small_campaign();
  const auto points = grid_points(c);
  REQUIRE(points.size() == 6);
  CHECK(std::get<std::string>(points[0][0]) == "two_choice");
  CHECK(std::get<double>(points[1][1]) == 2.0);
  CHECK(std::get<std::string>(points[3][0]) == "one_plus_beta:0.5");
  const BatchRunConfig cfg = apply_point(c, points[5]);
  CHECK(cfg.b == 64);
  CHECK(cfg.m == 256);
  CHECK(cfg.process.kind == ProcessKind::OnePlusBeta);
  CHECK(grid_points(parse_config_text(R"({"n": 10})")).size() == 1);
  CHECK_THROWS_AS(apply_point(c, {}), InvalidParameter);
}

TEST_CASE("campaign CSV shape") {
  const CampaignResult r = run_campaign(small_campaign());
  const std::string csv = csv_of(r);
  CHECK(csv.rfind("point_id,process,b_over_n,run,seed,final_gap,final_min_y,runtime_ms\n", 0) == 0);
  CHECK(line_count(csv) == 1 + 6 * 3);
  for (const auto& row : r.rows) {
    CHECK(row.final_gap >= 0.0);
    CHECK(row.final_min_y <= 0.0);
    CHECK(row.runtime_ms == 0.0);
  }
  CHECK(r.gaps_of_point(2).size() == 3);

  const CampaignResult one = run_campaign(parse_config_text(R"({"n": 10})"));
  CHECK(line_count(csv_of(one)) == 2);
}

TEST_CASE("campaigns are byte-reproducible and match the serial reference") {
  const Campaign c = small_campaign();
  const std::string a = csv_of(run_campaign(c));
  CHECK(a == csv_of(run_campaign(c)));
  CHECK(a == csv_of(run_campaign_serial(c)));
  Campaign other = c;
  other.base.seed_plan.master_seed += 1;
  CHECK(a != csv_of(run_campaign(other)));
}

TEST_CASE("figure presets") {
  const Campaign f6 = preset_fig6(false);
  CHECK(f6.base.n == 300);
  CHECK(f6.runs_per_point == 30);
  CHECK(std::get<std::string>(f6.sweep[0].values[0]) == "quantile:" + format_double(50.0 / 300.0));
  CHECK(round_quantile(1.0 / 6.0, 300) == 50.0 / 300.0);
  CHECK(round_quantile(1e-6, 300) == 1.0 / 300.0);
  CHECK(preset_fig5(true).base.n == 1000);
  CHECK(grid_points(preset_fig5(false)).size() == 20);
  for (const char* name : {"fig5", "fig6", "fig7", "fig8"}) {
    for (bool paper : {false, true}) CHECK_NOTHROW(preset_by_name(name, paper).validate());
  }
  CHECK_THROWS_AS(preset_by_name("fig9", false), InvalidParameter);
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(3.0) == "3");
  const double x = 1.0 / 3.0;
  CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("first-batch preconditions and a small run") {
  CHECK_THROWS_AS(first_batch_lower_bound(64, 64 * 64, ProcessSpec::one_choice(), 10, 1), PreconditionViolated);
  CHECK_THROWS_AS(
      first_batch_lower_bound(64, 64 * 64, ProcessSpec::two_choice().with_ties(TieBreaking::Random), 10, 1),
      PreconditionViolated);
  CHECK_THROWS_AS(first_batch_lower_bound(64, 64, ProcessSpec::two_choice(), 10, 1), PreconditionViolated);

  const std::size_t n = 64;
  const auto b = static_cast<std::size_t>(std::ceil(8.0 * n * std::log(64.0)));
  const FirstBatchResult r = first_batch_lower_bound(n, b, ProcessSpec::two_choice(), 100, 3);
  CHECK(r.C == doctest::Approx(2.0 - 1.0 / n));
  CHECK(r.gamma == 0.5);
  CHECK(r.threshold == doctest::Approx(0.125 * static_cast<double>(b) / n));
  CHECK(r.y.size() == 100);
  CHECK(r.fraction >= 0.9);
}

TEST_CASE("log lower-bound preconditions") {
  CHECK_THROWS_AS(log_lower_experiment(ProcessSpec::two_choice(), 64, 5, 1, 0.0), PreconditionViolated);
  CHECK_THROWS_AS(log_lower_experiment(ProcessSpec::d_choice(3), 64, 5, 1, 0.0), PreconditionViolated);
  const LogLowerResult r = log_lower_experiment(ProcessSpec::one_plus_beta(0.5), 64, 10, 1, 0.0);
  CHECK(r.gaps.size() == 10);
  CHECK(r.m >= static_cast<std::size_t>(std::ceil(64 * std::log(64.0))));
  CHECK(r.m % r.b == 0);
  CHECK(r.all_above);
  CHECK(r.min_ratio > 0.0);
}

TEST_CASE("Poisson minimum gap") {
  const double lambda = 16.0 * std::log(100.0);
  CHECK_THROWS_AS(poisson_min_gap(100, lambda / 2, 100, 1), PreconditionViolated);
  const PoissonResult r = poisson_min_gap(100, lambda, 2000, 5, {0.1, 0.25, 0.5, 1.0});
  REQUIRE(r.levels.size() == 4);
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    CHECK(r.levels[i].threshold == doctest::Approx(r.levels[i].kappa1 * std::sqrt(lambda / std::log(100.0))));
    CHECK(r.levels[i].wilson.lo <= r.levels[i].probability);
    CHECK(r.levels[i].probability <= r.levels[i].wilson.hi);
    if (i > 0) CHECK(r.levels[i].probability <= r.levels[i - 1].probability);
  }
  const PoissonResult again = poisson_min_gap(100, lambda, 2000, 5, {0.1, 0.25, 0.5, 1.0});
  CHECK(again.levels[0].successes == r.levels[0].successes);
}

TEST_CASE("calibration file round trip") {
  CalibrationConstants c;
  c.pilot_seed = 77;
  c.log_lower_pilot_min_ratio = 0.7;
  c.log_lower_k_hat = 0.35;
  c.poisson_pilot_probability = 0.8;
  c.poisson_floor = 0.4;
  const std::string path = "bbins_calibration_roundtrip.json";
  save_calibration(c, path);
  const CalibrationConstants d = load_calibration(path);
  std::remove(path.c_str());
  CHECK(d.pilot_seed == 77);
  CHECK(d.log_lower_process == c.log_lower_process);
  CHECK(d.log_lower_k_hat == 0.35);
  CHECK(d.poisson_floor == 0.4);
  CHECK(d.poisson_trials == c.poisson_trials);
  CHECK(d.first_batch_min_fraction == 0.9);
  CHECK_THROWS_AS(load_calibration("no_such_calibration.json"), Error);
}

}  // TEST_SUITE
