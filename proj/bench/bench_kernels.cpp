// OpenMP kernels against their single-threaded references.
#include <benchmark/benchmark.h>

#include "bbins/experiments.hpp"
#include "bbins/graphs.hpp"
#include "bbins/potentials.hpp"
#include "bbins/processes.hpp"

using namespace bbins;

namespace {

Campaign bench_campaign() {
  Campaign c;
  c.name = "bench";
  c.base.n = 128;
  c.base.b = 128;
  c.base.m = 128 * 64;
  c.base.process = ProcessSpec::two_choice();
  c.sweep = {{"process", {std::string("two_choice"), std::string("one_plus_beta:0.5")}}};
  c.runs_per_point = 8;
  return c;
}

void BM_campaign(benchmark::State& state) {
  const Campaign c = bench_campaign();
  for (auto _ : state) benchmark::DoNotOptimize(run_campaign(c));
}

void BM_campaign_serial(benchmark::State& state) {
  const Campaign c = bench_campaign();
  for (auto _ : state) benchmark::DoNotOptimize(run_campaign_serial(c));
}

BatchMomentRequest bench_moment() {
  BatchMomentRequest req;
  req.spec = ProcessSpec::two_choice();
  req.b = 8;
  req.alpha = 8.0 / (2.0 * 2.0 * moment_bound_S(WeightDistribution::unit()) * 8.0);
  req.trials = 20000;
  req.seed = 1;
  return req;
}

void BM_moment(benchmark::State& state) {
  const auto req = bench_moment();
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_batch_moment(req, LoadState(8)));
}

void BM_moment_serial(benchmark::State& state) {
  const auto req = bench_moment();
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_batch_moment_serial(req, LoadState(8)));
}

void BM_conductance(benchmark::State& state) {
  const RegularGraph g = make_random_regular(20, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conductance_exact(g));
}

void BM_conductance_serial(benchmark::State& state) {
  const RegularGraph g = make_random_regular(20, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conductance_exact_serial(g));
}

std::vector<DriftCase> bench_cases() {
  return {{"two_choice", probability_vector(ProcessSpec::two_choice(), 64), 0.25, 0.5},
          {"quantile:0.5", probability_vector(ProcessSpec::quantile(0.5), 64), 0.5, 0.5}};
}

void BM_drift_sweep(benchmark::State& state) {
  const auto cases = bench_cases();
  for (auto _ : state) benchmark::DoNotOptimize(drift_sweep(cases, 64, 500, 1.0, 1));
}

void BM_drift_sweep_serial(benchmark::State& state) {
  const auto cases = bench_cases();
  for (auto _ : state) benchmark::DoNotOptimize(drift_sweep_serial(cases, 64, 500, 1.0, 1));
}

}  // namespace

BENCHMARK(BM_campaign)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_campaign_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_moment)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_moment_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conductance)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conductance_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_drift_sweep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_drift_sweep_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
