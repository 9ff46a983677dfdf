#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "bbins/batch_sim.hpp"
#include "bbins/config.hpp"
#include "bbins/error.hpp"
#include "bbins/experiments.hpp"
#include "bbins/graphs.hpp"
#include "bbins/potentials.hpp"
#include "bbins/processes.hpp"

using json = nlohmann::json;
using namespace bbins;

namespace {

json report_json(const ConditionReport& r) {
  json j{{"holds", r.holds}, {"delta", r.delta}, {"epsilon", r.epsilon}, {"C", r.C}};
  j["witness_k"] = r.witness_k ? json(*r.witness_k) : json(nullptr);
  j["witness_value"] = r.witness_value ? json(*r.witness_value) : json(nullptr);
  return j;
}

json interval_json(const stats::Interval& iv) { return json{iv.lo, iv.hi}; }

ProcessSpec spec_with_graph(const std::string& label, const std::string& graph_file, std::size_t n,
                            std::size_t d, std::uint64_t seed) {
  ProcessSpec spec = parse_process_label(label);
  if (spec.kind == ProcessKind::Graphical) {
    GraphSource src;
    if (!graph_file.empty()) {
      src.kind = "file";
      src.file = graph_file;
    } else {
      src.n = n;
      src.d = d;
      src.seed = seed;
    }
    spec.graph = build_graph(src);
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched weighted balls-into-bins simulator"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int threads = 0;
  bool paper_scale = false;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");
  app.add_flag("--paper-scale", paper_scale, "Use n = 1000 and 100 runs in presets");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Single run; prints the gap at every batch boundary");
  std::size_t sim_n = 100, sim_b = 0, sim_m = 0, sim_mid = 0, sim_graph_d = 4;
  std::string sim_process = "two_choice", sim_ties = "random", sim_weights = "unit", sim_graph;
  double sim_lambda = 0.0, sim_q = 0.5;
  bool sim_potentials = false;
  sim->add_option("-n,--n", sim_n, "Number of bins");
  sim->add_option("-b,--b", sim_b, "Batch size (default n)");
  sim->add_option("-m,--m", sim_m, "Total balls (default 10 b)");
  sim->add_option("-p,--process", sim_process, "Process label, e.g. two_choice, one_plus_beta:0.5");
  sim->add_option("--ties", sim_ties, "random | deterministic")->check(CLI::IsMember({"random", "deterministic"}));
  sim->add_option("--weights", sim_weights, "unit | exponential | scaled_geometric | uniform_bounded");
  sim->add_option("--lambda", sim_lambda, "MGF parameter (default per distribution)");
  sim->add_option("--q", sim_q, "scaled_geometric parameter");
  sim->add_option("--graph", sim_graph, "Graph file for the graphical process");
  sim->add_option("--graph-degree", sim_graph_d, "Degree of the random regular graph when no file is given");
  sim->add_option("--midbatch", sim_mid, "Gap samples inside the final batch");
  sim->add_flag("--potentials", sim_potentials, "Record Gamma with the weak-bound smoothing");

  // campaign
  auto* camp = app.add_subcommand("campaign", "Grid sweep to CSV");
  std::string camp_config, camp_preset, camp_out;
  bool camp_summary = false;
  camp->add_option("config", camp_config, "Campaign JSON file");
  camp->add_option("--preset", camp_preset, "fig5 | fig6 | fig7 | fig8");
  camp->add_option("-o,--out", camp_out, "CSV path (overrides the config)");
  camp->add_flag("--summary", camp_summary, "Print mean gap per grid point");

  // check-conditions
  auto* cond = app.add_subcommand("check-conditions", "Condition report as JSON");
  std::string cond_process;
  std::size_t cond_n = 0;
  double cond_delta = NAN, cond_eps = NAN, cond_C = NAN;
  cond->add_option("process", cond_process)->required();
  cond->add_option("n", cond_n)->required();
  cond->add_option("--delta", cond_delta);
  cond->add_option("--epsilon", cond_eps);
  cond->add_option("--C", cond_C);

  // conductance
  auto* cond_g = app.add_subcommand("conductance", "Exact conductance of a small graph");
  std::string cg_file;
  cond_g->add_option("graph-file", cg_file)->required();

  // drift-check
  auto* drift = app.add_subcommand("drift-check", "Randomised check of the one-step drift inequality");
  std::size_t drift_n = 64, drift_vectors = 1000;
  double drift_K = 1.0;
  drift->add_option("--n", drift_n);
  drift->add_option("--vectors", drift_vectors);
  drift->add_option("--K", drift_K);

  // lower-bound
  auto* lb = app.add_subcommand("lower-bound", "Lower-bound experiments");
  lb->require_subcommand(1);
  std::size_t lb_n = 256, lb_b = 0, lb_runs = 200;
  std::string lb_process = "two_choice";
  auto* lb_first = lb->add_subcommand("first-batch", "Heavy bin after one large batch");
  lb_first->add_option("--n", lb_n);
  lb_first->add_option("--b", lb_b, "Batch size (default ceil(8 n ln n))");
  lb_first->add_option("--runs", lb_runs);
  lb_first->add_option("--process", lb_process);
  auto* lb_log = lb->add_subcommand("log", "Gap after about n ln n balls");
  double lb_khat = NAN;
  std::string lb_constants;
  std::string lb_log_process = "one_plus_beta:0.5";
  std::size_t lb_log_runs = 100;
  lb_log->add_option("--n", lb_n);
  lb_log->add_option("--b", lb_b, "Batch size (default n)");
  lb_log->add_option("--runs", lb_log_runs);
  lb_log->add_option("--process", lb_log_process);
  lb_log->add_option("--k-hat", lb_khat);
  lb_log->add_option("--constants", lb_constants, "Calibration file providing k_hat");
  auto* lb_poisson = lb->add_subcommand("poisson", "Minimum gap of iid Poisson loads");
  std::size_t lb_pn = 100;
  double lb_lambda = 0.0;
  std::uint64_t lb_trials = 10000;
  lb_poisson->add_option("--n", lb_pn);
  lb_poisson->add_option("--lambda", lb_lambda, "Mean (default 16 ln n)");
  lb_poisson->add_option("--trials", lb_trials);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Run the pilots and write the constants file");
  std::string cal_out = "calibration.json";
  cal->add_option("-o,--out", cal_out);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*sim) {
      BatchRunConfig cfg;
      cfg.n = sim_n;
      cfg.b = sim_b ? sim_b : sim_n;
      cfg.m = sim_m ? sim_m : 10 * cfg.b;
      cfg.process = spec_with_graph(sim_process, sim_graph, sim_n, sim_graph_d, seed)
                        .with_ties(sim_ties == "random" ? TieBreaking::Random : TieBreaking::Deterministic);
      const WeightKind wk = parse_weight_kind(sim_weights);
      cfg.weights = {wk, sim_q, sim_lambda > 0 ? sim_lambda : default_lambda(wk, sim_q)};
      cfg.seed_plan = {seed, 0};
      cfg.midbatch_samples = sim_mid;
      if (sim_potentials) {
        const ConditionParams cp = cfg.process.kind == ProcessKind::Graphical ? ConditionParams{}
                                                                               : verified_parameters(cfg.process);
        cfg.record_potentials = PotentialParams::for_weak_bound(cfg.n, cfg.b, cp.epsilon, cp.delta, cp.C,
                                                                moment_bound_S(cfg.weights));
      }
      const RunTrace trace = run(cfg);
      std::cout << "step,gap,min_y" << (sim_potentials ? ",Gamma" : "") << "\n";
      for (const auto& r : trace.boundaries) {
        std::cout << r.step << ',' << format_double(r.gap) << ',' << format_double(r.min_y);
        if (r.Gamma) std::cout << ',' << format_double(*r.Gamma);
        std::cout << "\n";
      }
      if (!trace.midbatch.empty()) {
        std::cout << "# midbatch step,gap\n";
        for (const auto& [s, g] : trace.midbatch) std::cout << "# " << s << ',' << format_double(g) << "\n";
      }
    } else if (*camp) {
      if (camp_config.empty() == camp_preset.empty()) {
        std::cerr << "campaign: give exactly one of <config> or --preset\n";
        return 2;
      }
      Campaign c = camp_preset.empty() ? parse_config(camp_config) : preset_by_name(camp_preset, paper_scale);
      if (app.count("--seed")) c.base.seed_plan.master_seed = seed;
      if (!camp_out.empty()) c.output_path = camp_out;
      const CampaignResult res = run_campaign(c);
      if (c.output_path.empty())
        write_csv(res, std::cout);
      else
        write_csv(res, c.output_path);
      if (camp_summary) {
        const auto points = grid_points(c);
        for (std::size_t p = 0; p < points.size(); ++p) {
          const auto gaps = res.gaps_of_point(p);
          std::cerr << p;
          for (const auto& v : points[p]) std::cerr << ' ' << format_sweep_value(v);
          std::cerr << " mean_gap=" << stats::mean(gaps) << " sd=" << stats::sample_std(gaps) << "\n";
        }
      }
    } else if (*cond) {
      const ProcessSpec spec = parse_process_label(cond_process);
      const ProbabilityVector p = probability_vector(spec, cond_n);
      ConditionParams cp = verified_parameters(spec);
      if (!std::isnan(cond_delta)) cp.delta = cond_delta;
      if (!std::isnan(cond_eps)) cp.epsilon = cond_eps;
      if (!std::isnan(cond_C)) cp.C = cond_C;
      json out{{"process", spec.label()},
               {"n", cond_n},
               {"D0", report_json(check_D0(p))},
               {"D1", report_json(check_D1(p, cp.delta, cp.epsilon))},
               {"D2", report_json(check_D2(p, cp.C))},
               {"C1", report_json(check_C1(p, cp.delta, cp.epsilon))},
               {"C2", report_json(check_C2(p, cp.C))}};
      std::cout << out.dump(2) << "\n";
    } else if (*cond_g) {
      const RegularGraph g = read_graph_file(cg_file);
      const ConductanceResult r = conductance_exact(g);
      std::cout << json{{"n", g.n},
                        {"d", g.d},
                        {"phi", r.phi},
                        {"cut_edges", r.cut_edges},
                        {"volume", r.volume},
                        {"witness_set", r.witness_set}}
                       .dump(2)
                << "\n";
    } else if (*drift) {
      std::vector<DriftCase> cases;
      for (const char* label : {"two_choice", "one_plus_beta:0.5", "quantile:0.5"}) {
        const ProcessSpec spec = parse_process_label(label);
        const ConditionParams cp = verified_parameters(spec);
        cases.push_back({spec.label(), probability_vector(spec, drift_n), cp.delta, cp.epsilon});
      }
      cases.push_back({"worst_case:0.25:0.5", worst_case_vector(drift_n, 0.25, 0.5), 0.25, 0.5});
      const auto res = drift_sweep(cases, drift_n, drift_vectors, drift_K, seed);
      json out = json::array();
      bool ok = true;
      for (const auto& e : res) {
        out.push_back({{"process", e.label}, {"vectors", e.vectors}, {"violations", e.violations},
                       {"max_relative_excess", e.max_excess}});
        ok = ok && e.violations == 0;
      }
      std::cout << out.dump(2) << "\n";
      return ok ? 0 : 1;
    } else if (*lb_first) {
      const std::size_t b = lb_b ? lb_b : static_cast<std::size_t>(std::ceil(8.0 * lb_n * std::log(lb_n)));
      const ProcessSpec spec = parse_process_label(lb_process).with_ties(TieBreaking::Deterministic);
      const FirstBatchResult r = first_batch_lower_bound(lb_n, b, spec, lb_runs, seed);
      std::cout << json{{"n", lb_n},       {"b", b},
                        {"C", r.C},        {"gamma", r.gamma},
                        {"threshold", r.threshold}, {"successes", r.successes},
                        {"runs", r.runs},  {"fraction", r.fraction},
                        {"wilson", interval_json(r.wilson)}, {"mean_y", r.mean_y}}
                       .dump(2)
                << "\n";
    } else if (*lb_log) {
      double k_hat = lb_khat;
      if (std::isnan(k_hat)) {
        if (lb_constants.empty()) {
          std::cerr << "lower-bound log: give --k-hat or --constants\n";
          return 2;
        }
        k_hat = load_calibration(lb_constants).log_lower_k_hat;
      }
      const LogLowerResult r = log_lower_experiment(parse_process_label(lb_log_process), lb_n, lb_log_runs, seed,
                                                    k_hat, lb_b);
      std::cout << json{{"n", lb_n},           {"m", r.m},
                        {"b", r.b},            {"k_hat", r.k_hat},
                        {"min_ratio", r.min_ratio}, {"mean_gap", stats::mean(r.gaps)},
                        {"all_above", r.all_above}}
                       .dump(2)
                << "\n";
    } else if (*lb_poisson) {
      const double lambda = lb_lambda > 0 ? lb_lambda : 16.0 * std::log(static_cast<double>(lb_pn));
      const PoissonResult r = poisson_min_gap(lb_pn, lambda, lb_trials, seed);
      json levels = json::array();
      for (const auto& l : r.levels)
        levels.push_back({{"kappa1", l.kappa1}, {"threshold", l.threshold}, {"successes", l.successes},
                          {"probability", l.probability}, {"wilson", interval_json(l.wilson)}});
      std::cout << json{{"n", r.n}, {"lambda", r.lambda}, {"trials", r.trials}, {"levels", levels}}.dump(2)
                << "\n";
    } else if (*cal) {
      const CalibrationConstants c = calibrate(seed);
      save_calibration(c, cal_out);
      std::cout << "k_hat=" << c.log_lower_k_hat << " poisson_floor=" << c.poisson_floor << " -> " << cal_out
                << "\n";
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error at " << e.line() << ':' << e.column() << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
