#include "bbins/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <random>

#include "bbins/error.hpp"
#include "bbins/graphs.hpp"
#include "bbins/parallel.hpp"

namespace bbins {

namespace {

const std::vector<std::string>& known_fields() {
  static const std::vector<std::string> fields{"n",       "b",            "m",      "b_over_n", "m_over_n",
                                               "process", "tie_breaking", "weights"};
  return fields;
}

std::size_t as_count(const SweepValue& v, const std::string& field) {
  const double* d = std::get_if<double>(&v);
  if (!d || !(*d >= 0.0) || *d != std::floor(*d)) {
    throw InvalidParameter("sweep field '" + field + "' needs non-negative integer values");
  }
  return static_cast<std::size_t>(*d);
}

const std::string& as_text(const SweepValue& v, const std::string& field) {
  const std::string* s = std::get_if<std::string>(&v);
  if (!s) throw InvalidParameter("sweep field '" + field + "' needs string values");
  return *s;
}

std::size_t scaled_count(const SweepValue& v, std::size_t n, const std::string& field) {
  const double* d = std::get_if<double>(&v);
  if (!d || !(*d > 0.0)) throw InvalidParameter("sweep field '" + field + "' needs positive numbers");
  const double scaled = *d * static_cast<double>(n);
  if (std::abs(scaled - std::round(scaled)) > 1e-9 * std::max(1.0, scaled)) {
    throw InvalidParameter("sweep field '" + field + "' times n is not an integer");
  }
  return static_cast<std::size_t>(std::llround(scaled));
}

TieBreaking parse_ties(const std::string& s) {
  if (s == "deterministic") return TieBreaking::Deterministic;
  if (s == "random") return TieBreaking::Random;
  throw InvalidParameter("unknown tie-breaking mode '" + s + "'");
}

WeightDistribution parse_weights_label(const std::string& label) {
  const auto colon = label.find(':');
  const WeightKind kind = parse_weight_kind(label.substr(0, colon));
  switch (kind) {
    case WeightKind::Unit:
      return WeightDistribution::unit();
    case WeightKind::Exponential:
      return WeightDistribution::exponential();
    case WeightKind::UniformBounded:
      return WeightDistribution::uniform_bounded();
    case WeightKind::ScaledGeometric:
      if (colon == std::string::npos) return WeightDistribution::scaled_geometric(0.5);
      return WeightDistribution::scaled_geometric(std::stod(label.substr(colon + 1)));
  }
  return WeightDistribution::unit();
}

}  // namespace

std::shared_ptr<const RegularGraph> build_graph(const GraphSource& s) {
  RegularGraph g;
  if (s.kind == "cycle") {
    g = make_cycle(s.n);
  } else if (s.kind == "hypercube") {
    g = make_hypercube(s.d);
  } else if (s.kind == "complete") {
    g = make_complete(s.n);
  } else if (s.kind == "random_regular") {
    g = make_random_regular(s.n, s.d, s.seed);
  } else if (s.kind == "file") {
    g = read_graph_file(s.file);
  } else {
    throw InvalidParameter("unknown graph kind '" + s.kind + "'");
  }
  return std::make_shared<const RegularGraph>(std::move(g));
}

void Campaign::validate() const {
  if (runs_per_point < 1) throw InvalidParameter("runs_per_point must be at least 1");
  for (const auto& axis : sweep) {
    if (std::find(known_fields().begin(), known_fields().end(), axis.field) == known_fields().end()) {
      throw InvalidParameter("unknown sweep field '" + axis.field + "'");
    }
    if (axis.values.empty()) throw InvalidParameter("sweep field '" + axis.field + "' has no values");
  }
  for (const auto& point : grid_points(*this)) apply_point(*this, point).validate();
}

std::vector<std::vector<SweepValue>> grid_points(const Campaign& c) {
  std::vector<std::vector<SweepValue>> points{{}};
  for (const auto& axis : c.sweep) {
    std::vector<std::vector<SweepValue>> next;
    next.reserve(points.size() * axis.values.size());
    for (const auto& prefix : points) {
      for (const auto& v : axis.values) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

BatchRunConfig apply_point(const Campaign& c, const std::vector<SweepValue>& point) {
  if (point.size() != c.sweep.size()) throw InvalidParameter("grid point does not match the sweep axes");
  BatchRunConfig cfg = c.base;
  // categorical fields and n first, then b, then m: b_over_n and m_over_n refer to the final n
  for (int pass = 0; pass < 3; ++pass) {
    for (std::size_t i = 0; i < point.size(); ++i) {
      const std::string& f = c.sweep[i].field;
      const SweepValue& v = point[i];
      if (pass == 0) {
        if (f == "n") {
          cfg.n = as_count(v, f);
        } else if (f == "process") {
          const std::string& label = as_text(v, f);
          const TieBreaking ties = cfg.process.tie_breaking;
          if (label == "graphical") {
            if (!c.graph) throw InvalidParameter("graphical process needs a graph section");
            cfg.process = ProcessSpec::graphical(build_graph(*c.graph));
          } else {
            cfg.process = parse_process_label(label);
          }
          cfg.process.tie_breaking = ties;
        } else if (f == "tie_breaking") {
          cfg.process.tie_breaking = parse_ties(as_text(v, f));
        } else if (f == "weights") {
          cfg.weights = parse_weights_label(as_text(v, f));
        }
      } else if (pass == 1) {
        if (f == "b") cfg.b = as_count(v, f);
        if (f == "b_over_n") cfg.b = scaled_count(v, cfg.n, f);
      } else {
        if (f == "m") cfg.m = as_count(v, f);
        if (f == "m_over_n") cfg.m = scaled_count(v, cfg.n, f);
      }
    }
  }
  return cfg;
}

std::vector<double> CampaignResult::gaps_of_point(std::size_t point_id) const {
  std::vector<double> out;
  for (const auto& row : rows) {
    if (row.point_id == point_id) out.push_back(row.final_gap);
  }
  return out;
}

namespace {

CampaignResult campaign_impl(const Campaign& c, bool parallel) {
  c.validate();
  const auto points = grid_points(c);
  CampaignResult result;
  for (const auto& axis : c.sweep) result.swept_fields.push_back(axis.field);
  const std::size_t runs = c.runs_per_point;
  const std::size_t jobs = points.size() * runs;
  result.rows.resize(jobs);

  std::vector<BatchRunConfig> configs;
  configs.reserve(points.size());
  for (const auto& p : points) configs.push_back(apply_point(c, p));

  auto do_job = [&](std::size_t job) {
    const std::size_t point_id = job / runs;
    CampaignRow& row = result.rows[job];
    row.point_id = point_id;
    row.point = points[point_id];
    row.run = job % runs;
    BatchRunConfig cfg = configs[point_id];
    cfg.seed_plan = RngSeedPlan{c.base.seed_plan.master_seed, job};
    row.seed = cfg.seed_plan.child_seed();
    const auto start = std::chrono::steady_clock::now();
    const RunTrace trace = run(cfg);
    const auto stop = std::chrono::steady_clock::now();
    row.final_gap = trace.final_gap();
    row.final_min_y = trace.final_min_y();
    row.runtime_ms =
        c.record_runtime ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
  };

  parallel_for(jobs, parallel, do_job);
  return result;
}

}  // namespace

CampaignResult run_campaign(const Campaign& c) { return campaign_impl(c, true); }

CampaignResult run_campaign_serial(const Campaign& c) { return campaign_impl(c, false); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_sweep_value(const SweepValue& v) {
  if (const double* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

void write_csv(const CampaignResult& result, std::ostream& out) {
  out << "point_id";
  for (const auto& f : result.swept_fields) out << ',' << f;
  out << ",run,seed,final_gap,final_min_y,runtime_ms\n";
  for (const auto& row : result.rows) {
    out << row.point_id;
    for (const auto& v : row.point) out << ',' << format_sweep_value(v);
    out << ',' << row.run << ',' << row.seed << ',' << format_double(row.final_gap) << ','
        << format_double(row.final_min_y) << ',' << format_double(row.runtime_ms) << '\n';
  }
}

void write_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_csv(result, out);
  if (!out) throw Error("failed writing '" + path + "'");
}

double round_quantile(double target, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double k = std::max(1.0, std::round(target * nd));
  return std::min(k, nd) / nd;
}

namespace {

Campaign figure_base(const std::string& name, bool paper_scale) {
  Campaign c;
  c.name = name;
  const std::size_t n = paper_scale ? 1000 : 300;
  c.base.n = n;
  c.base.b = n;
  c.base.m = n * n;
  c.base.process = ProcessSpec::two_choice();
  c.runs_per_point = paper_scale ? 100 : 30;
  c.output_path = name + ".csv";
  return c;
}

std::vector<SweepValue> numbers(std::initializer_list<double> xs) { return {xs.begin(), xs.end()}; }

std::vector<SweepValue> batch_ratios(bool paper_scale) {
  // paper scale keeps m = n^2 a multiple of b by using divisors of n = 1000
  return paper_scale ? numbers({1, 2, 4, 5, 8, 10, 20, 25, 40, 50}) : numbers({1, 5, 10, 25, 50});
}

std::vector<SweepValue> figure5_processes() {
  return {std::string("one_plus_beta:0.5"), std::string("one_plus_beta:0.7"), std::string("two_choice"),
          std::string("three_choice")};
}

}  // namespace

Campaign preset_fig5(bool paper_scale) {
  Campaign c = figure_base("fig5", paper_scale);
  c.sweep = {{"process", figure5_processes()}, {"b_over_n", batch_ratios(paper_scale)}};
  return c;
}

Campaign preset_fig6(bool paper_scale) {
  Campaign c = figure_base("fig6", paper_scale);
  const double ln_n = std::log(static_cast<double>(c.base.n));
  const double q = round_quantile(1.0 / std::ceil(ln_n), c.base.n);
  c.sweep = {{"process",
              {std::string("quantile:") + format_double(q), std::string("one_plus_beta:") + format_double(1.0 / ln_n),
               std::string("one_plus_beta:0.5")}},
             {"b_over_n", paper_scale ? numbers({50, 100, 125, 200, 250}) : numbers({50, 75, 100, 150})}};
  return c;
}

Campaign preset_fig7(bool paper_scale) {
  Campaign c = figure_base("fig7", paper_scale);
  c.base.weights = WeightDistribution::exponential();
  c.sweep = {{"weights", {std::string("exponential"), std::string("unit")}},
             {"process", figure5_processes()},
             {"b_over_n", batch_ratios(paper_scale)}};
  return c;
}

Campaign preset_fig8(bool paper_scale) {
  Campaign c = figure_base("fig8", paper_scale);
  c.sweep = {{"tie_breaking", {std::string("deterministic"), std::string("random")}}, {"b_over_n", numbers({25})}};
  return c;
}

Campaign preset_by_name(const std::string& name, bool paper_scale) {
  if (name == "fig5") return preset_fig5(paper_scale);
  if (name == "fig6") return preset_fig6(paper_scale);
  if (name == "fig7") return preset_fig7(paper_scale);
  if (name == "fig8") return preset_fig8(paper_scale);
  throw InvalidParameter("unknown preset '" + name + "' (expected fig5..fig8)");
}

FirstBatchResult first_batch_lower_bound(std::size_t n, std::size_t b, const ProcessSpec& spec, std::size_t runs,
                                         std::uint64_t seed) {
  if (spec.kind == ProcessKind::Graphical) throw PreconditionViolated("needs a fixed probability vector");
  if (spec.tie_breaking != TieBreaking::Deterministic) {
    throw PreconditionViolated("the first-batch bound needs deterministic tie-breaking");
  }
  const double nd = static_cast<double>(n);
  if (static_cast<double>(b) < nd * std::log(nd)) throw PreconditionViolated("needs b >= n ln n");
  if (runs == 0) throw InvalidParameter("need at least one run");
  const auto p = probability_vector(spec, n);
  FirstBatchResult r;
  r.C = p.max() * nd;
  if (!(r.C > 1.0 + 1e-12)) throw PreconditionViolated("max p must exceed 1/n (C > 1)");
  r.gamma = std::min(r.C - 1.0, 0.5);
  r.threshold = r.gamma / 4.0 * static_cast<double>(b) / nd;
  const auto max_rank = static_cast<std::size_t>(std::max_element(p.p.begin(), p.p.end()) - p.p.begin());
  r.heavy_bin = rank_order(LoadState(n))[max_rank];
  r.runs = runs;
  r.y.resize(runs);

  parallel_for(runs, true, [&](std::uint64_t run) {
    Rng rng = RngSeedPlan{seed, run}.engine();
    LoadState state(n);
    run_batch(state, spec, b, WeightDistribution::unit(), rng);
    r.y[run] = state.load(r.heavy_bin) - state.average();
  });
  for (double y : r.y) r.successes += y >= r.threshold ? 1 : 0;
  r.fraction = static_cast<double>(r.successes) / static_cast<double>(runs);
  r.wilson = stats::wilson_interval(r.successes, runs);
  r.mean_y = stats::mean(r.y);
  return r;
}

LogLowerResult log_lower_experiment(const ProcessSpec& spec, std::size_t n, std::size_t runs, std::uint64_t seed,
                                    double k_hat, std::size_t b) {
  if (spec.kind == ProcessKind::Graphical || spec.kind == ProcessKind::DChoice) {
    throw PreconditionViolated("the log-n lower bound needs min p >= C/n; d-choice has p_1 = 1/n^d");
  }
  const auto p = probability_vector(spec, n);
  const double nd = static_cast<double>(n);
  if (p.min() * nd < kLogLowerMinScaledProbability) {
    throw PreconditionViolated("smallest allocation probability is not a constant multiple of 1/n");
  }
  LogLowerResult r;
  r.b = b == 0 ? n : b;
  const auto target = static_cast<std::size_t>(std::ceil(nd * std::log(nd)));
  r.m = (target + r.b - 1) / r.b * r.b;
  r.k_hat = k_hat;
  r.gaps.resize(runs);
  parallel_for(runs, true, [&](std::uint64_t run) {
    BatchRunConfig cfg;
    cfg.n = n;
    cfg.b = r.b;
    cfg.m = r.m;
    cfg.process = spec;
    cfg.seed_plan = RngSeedPlan{seed, run};
    r.gaps[run] = bbins::run(cfg).final_gap();
  });
  const double ln_n = std::log(nd);
  r.min_ratio = runs ? *std::min_element(r.gaps.begin(), r.gaps.end()) / ln_n : 0.0;
  r.all_above = std::all_of(r.gaps.begin(), r.gaps.end(), [&](double g) { return g >= k_hat * ln_n; });
  return r;
}

PoissonResult poisson_min_gap(std::size_t n, double lambda, std::uint64_t trials, std::uint64_t seed,
                              std::vector<double> kappas) {
  if (n < 2) throw InvalidParameter("need n >= 2");
  const double ln_n = std::log(static_cast<double>(n));
  if (lambda < 16.0 * ln_n) throw PreconditionViolated("needs lambda >= 16 ln n");
  PoissonResult r;
  r.n = n;
  r.lambda = lambda;
  r.trials = trials;
  std::vector<double> gaps(trials);
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(trials); ++t) {
    Rng rng = RngSeedPlan{seed, static_cast<std::uint64_t>(t)}.engine();
    std::poisson_distribution<long long> pois(lambda);
    long long lowest = std::numeric_limits<long long>::max();
    long long second = std::numeric_limits<long long>::max();
    for (std::size_t i = 0; i < n; ++i) {
      const long long x = pois(rng);
      if (x < lowest) {
        second = lowest;
        lowest = x;
      } else if (x < second) {
        second = x;
      }
    }
    gaps[static_cast<std::size_t>(t)] = static_cast<double>(second - lowest);
  }
  for (double kappa : kappas) {
    PoissonLevel level;
    level.kappa1 = kappa;
    level.threshold = kappa * std::sqrt(lambda / ln_n);
    for (double g : gaps) level.successes += g >= level.threshold ? 1 : 0;
    level.probability = trials ? static_cast<double>(level.successes) / static_cast<double>(trials) : 0.0;
    level.wilson = stats::wilson_interval(level.successes, trials);
    r.levels.push_back(level);
  }
  return r;
}

CalibrationConstants calibrate(std::uint64_t pilot_seed) {
  CalibrationConstants c;
  c.pilot_seed = pilot_seed;
  const auto log_pilot = log_lower_experiment(parse_process_label(c.log_lower_process), c.log_lower_n,
                                              c.log_lower_runs, mix64(pilot_seed ^ 0x1), 0.0);
  c.log_lower_pilot_min_ratio = log_pilot.min_ratio;
  c.log_lower_k_hat = 0.5 * log_pilot.min_ratio;

  const double lambda = 16.0 * std::log(static_cast<double>(c.poisson_n));
  const auto pois = poisson_min_gap(c.poisson_n, lambda, c.poisson_trials, mix64(pilot_seed ^ 0x2), {c.poisson_kappa1});
  c.poisson_pilot_probability = pois.levels.front().probability;
  c.poisson_floor = std::max(0.05, 0.5 * pois.levels.front().wilson.lo);
  return c;
}

void save_calibration(const CalibrationConstants& c, const std::string& path) {
  nlohmann::ordered_json j;
  j["pilot_seed"] = c.pilot_seed;
  j["log_lower"] = {{"process", c.log_lower_process},
                    {"n", c.log_lower_n},
                    {"runs", c.log_lower_runs},
                    {"pilot_min_ratio", c.log_lower_pilot_min_ratio},
                    {"k_hat", c.log_lower_k_hat}};
  j["poisson"] = {{"n", c.poisson_n},
                  {"kappa1", c.poisson_kappa1},
                  {"trials", c.poisson_trials},
                  {"pilot_probability", c.poisson_pilot_probability},
                  {"floor", c.poisson_floor}};
  j["first_batch"] = {{"min_fraction", c.first_batch_min_fraction}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

CalibrationConstants load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open calibration file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    CalibrationConstants c;
    c.pilot_seed = j.at("pilot_seed").get<std::uint64_t>();
    const auto& ll = j.at("log_lower");
    c.log_lower_process = ll.at("process").get<std::string>();
    c.log_lower_n = ll.at("n").get<std::size_t>();
    c.log_lower_runs = ll.at("runs").get<std::size_t>();
    c.log_lower_pilot_min_ratio = ll.at("pilot_min_ratio").get<double>();
    c.log_lower_k_hat = ll.at("k_hat").get<double>();
    const auto& po = j.at("poisson");
    c.poisson_n = po.at("n").get<std::size_t>();
    c.poisson_kappa1 = po.at("kappa1").get<double>();
    c.poisson_trials = po.at("trials").get<std::uint64_t>();
    c.poisson_pilot_probability = po.at("pilot_probability").get<double>();
    c.poisson_floor = po.at("floor").get<double>();
    c.first_batch_min_fraction = j.at("first_batch").at("min_fraction").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("calibration file: ") + e.what(), 0, 0);
  }
}

}  // namespace bbins
