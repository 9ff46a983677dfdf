#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "bbins/batch_sim.hpp"
#include "bbins/error.hpp"
#include "bbins/stats.hpp"

using namespace bbins;

namespace {

BatchRunConfig config(std::size_t n, std::size_t b, std::size_t m, ProcessSpec spec, std::uint64_t seed = 1) {
  BatchRunConfig c;
  c.n = n;
  c.b = b;
  c.m = m;
  c.process = std::move(spec);
  c.seed_plan = {seed, 0};
  return c;
}

// Sequential two-choice: each ball samples two bins and joins the lighter, ties by a coin flip.
double direct_two_choice_gap(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<double> loads(n, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t a = uniform_index(rng, n);
    const std::size_t b = uniform_index(rng, n);
    std::size_t pick = loads[a] < loads[b] ? a : b;
    if (loads[a] == loads[b]) pick = uniform01(rng) < 0.5 ? a : b;
    loads[pick] += 1.0;
  }
  return *std::max_element(loads.begin(), loads.end()) - static_cast<double>(m) / static_cast<double>(n);
}

// Fraction of suites whose chi-square test rejects at 1e-3 when drawing `balls` from a sampler.
template <typename Make>
double rejection_rate(Make make_sampler, const std::vector<double>& expected_by_bin, std::size_t balls,
                      int suites) {
  int rejections = 0;
  for (int s = 0; s < suites; ++s) {
    Rng rng = RngSeedPlan{777, static_cast<std::uint64_t>(s)}.engine();
    const BatchSampler sampler = make_sampler();
    std::vector<std::uint64_t> counts(expected_by_bin.size());
    for (std::size_t j = 0; j < balls; ++j) ++counts[sampler.draw(rng)];
    const double stat = stats::chi_square_statistic(counts, expected_by_bin);
    std::size_t cells = 0;
    for (double p : expected_by_bin) cells += p > 0;
    if (stats::chi_square_p_value(stat, static_cast<double>(cells - 1)) < 1e-3) ++rejections;
  }
  return static_cast<double>(rejections) / suites;
}

}  // namespace

TEST_SUITE("batch_sim") {

TEST_CASE("single ball into two equal bins") {
  // Enumerate the four ordered rank pairs: the ball goes to the lighter (higher) rank of the two.
  std::vector<double> oracle(2, 0.0);
  for (std::size_t r1 = 0; r1 < 2; ++r1)
    for (std::size_t r2 = 0; r2 < 2; ++r2) oracle[std::max(r1, r2)] += 0.25;
  CHECK(oracle == std::vector<double>{0.25, 0.75});

  const ProcessSpec det = ProcessSpec::two_choice();
  CHECK(det.tie_breaking == TieBreaking::Deterministic);
  const BatchSampler sampler(det, LoadState(2));
  CHECK(sampler.rank_probabilities().p == oracle);
  CHECK(sampler.order() == std::vector<std::size_t>{0, 1});

  std::size_t to_bin1 = 0;
  constexpr int runs = 20000;
  for (int s = 0; s < runs; ++s) {
    LoadState state(2);
    Rng rng = RngSeedPlan{3, static_cast<std::uint64_t>(s)}.engine();
    run_batch(state, det, 1, WeightDistribution::unit(), rng);
    CHECK(gap(state) == 0.5);
    to_bin1 += state.load(1) == 1.0;
  }
  CHECK(std::abs(static_cast<double>(to_bin1) / runs - 0.75) <= 4 * std::sqrt(0.75 * 0.25 / runs));

  // Random tie-breaking averages the tied block, giving each bin 1/2.
  const BatchSampler rnd(ProcessSpec::two_choice().with_ties(TieBreaking::Random), LoadState(2));
  CHECK(rnd.rank_probabilities().p == std::vector<double>{0.5, 0.5});
}

TEST_CASE("empty batch leaves the state unchanged") {
  LoadState state = LoadState::from_loads({3, 1, 2}, 6);
  Rng rng = RngSeedPlan{1, 0}.engine();
  run_batch(state, ProcessSpec::two_choice(), 0, WeightDistribution::unit(), rng);
  CHECK(state.step() == 6);
  CHECK(std::vector<double>(state.loads().begin(), state.loads().end()) == std::vector<double>{3, 1, 2});
}

TEST_CASE("trace shape") {
  const RunTrace one = run(config(8, 8, 8, ProcessSpec::two_choice()));
  CHECK(one.boundaries.size() == 2);
  CHECK(one.boundaries[0].step == 0);
  CHECK(one.boundaries[0].gap == 0.0);
  CHECK(one.boundaries[1].step == 8);

  const RunTrace many = run(config(16, 4, 64, ProcessSpec::one_plus_beta(0.5)));
  CHECK(many.boundaries.size() == 17);
  for (std::size_t i = 1; i < many.boundaries.size(); ++i) {
    CHECK(many.boundaries[i].step == many.boundaries[i - 1].step + 4);
    CHECK(many.boundaries[i].gap >= 0.0);
    CHECK(many.boundaries[i].min_y <= 0.0);
  }
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(run(config(8, 3, 10, ProcessSpec::two_choice())), InvalidParameter);
  CHECK_THROWS_AS(run(config(1, 1, 1, ProcessSpec::two_choice())), InvalidParameter);
  CHECK_THROWS_AS(run(config(8, 0, 0, ProcessSpec::two_choice())), InvalidParameter);
  CHECK_THROWS_AS(run(config(10, 10, 10, ProcessSpec::quantile(0.25))), InvalidParameter);
  auto g = std::make_shared<const RegularGraph>(make_cycle(6));
  CHECK_THROWS_AS(run(config(8, 8, 8, ProcessSpec::graphical(g))), InvalidParameter);
}

TEST_CASE("runs are reproducible from their seed plan") {
  for (const auto& spec : {ProcessSpec::two_choice(), ProcessSpec::quantile(0.5), ProcessSpec::d_choice(3)}) {
    BatchRunConfig c = config(32, 64, 640, spec, 9);
    c.weights = WeightDistribution::exponential();
    c.midbatch_samples = 3;
    const RunTrace a = run(c);
    const RunTrace b = run(c);
    CHECK(a.final_state_digest == b.final_state_digest);
    REQUIRE(a.boundaries.size() == b.boundaries.size());
    for (std::size_t i = 0; i < a.boundaries.size(); ++i) {
      CHECK(a.boundaries[i].gap == b.boundaries[i].gap);
      CHECK(a.boundaries[i].min_y == b.boundaries[i].min_y);
    }
    CHECK(a.midbatch == b.midbatch);
    c.seed_plan = c.seed_plan.with_run(1);
    CHECK(run(c).final_state_digest != a.final_state_digest);
  }
}

TEST_CASE("weight is conserved and loads stay centred") {
  for (const auto& w : {WeightDistribution::unit(), WeightDistribution::exponential(),
                        WeightDistribution::scaled_geometric(0.2), WeightDistribution::uniform_bounded()}) {
    CAPTURE(w.label());
    BatchRunConfig c = config(50, 500, 100000, ProcessSpec::two_choice(), 4);
    c.weights = w;
    LoadState final_state(c.n);
    run(c, final_state);
    CHECK(final_state.step() == 100000);
    // Replay the same stream to recover every sampled weight.
    Rng rng = c.seed_plan.engine();
    LoadState replay(c.n);
    CompensatedSum sampled;
    for (std::size_t batch = 0; batch < c.m / c.b; ++batch) {
      const BatchSampler sampler(c.process, replay);
      for (std::size_t j = 0; j < c.b; ++j) {
        const std::size_t bin = sampler.draw(rng);
        const double weight = sample_weight(c.weights, rng);
        sampled.add(weight);
        replay.add_ball(bin, weight);
      }
    }
    CHECK(load_digest(replay) == load_digest(final_state));
    CHECK(std::abs(final_state.total_weight() - sampled.value()) <= 1e-9 * sampled.value());
    CHECK(std::abs(compensated_total(final_state.loads()) - sampled.value()) <= 1e-9 * sampled.value());
    if (w.kind == WeightKind::Unit) CHECK(final_state.total_weight() == 100000.0);
    const NormalizedLoads y = normalize_and_sort(final_state);
    CHECK(std::abs(compensated_total(y.y)) <= 1e-6 * static_cast<double>(c.n));
  }
}

TEST_CASE("per-rank allocation counts are multinomial") {
  // Distinct loads so every rank keeps its own probability.
  std::vector<double> loads(16);
  for (std::size_t i = 0; i < 16; ++i) loads[i] = static_cast<double>((i * 7) % 16);
  const LoadState state = LoadState::from_loads(loads);
  const ProcessSpec spec = ProcessSpec::two_choice();
  const BatchSampler probe(spec, state);
  std::vector<double> expected(16);
  const ProbabilityVector p = probability_vector(spec, 16);
  for (std::size_t r = 0; r < 16; ++r) expected[probe.order()[r]] = p[r];
  CHECK(rejection_rate([&] { return BatchSampler(spec, state); }, expected, 100000, 100) < 0.05);
}

TEST_CASE("first batch under random ties is one-choice") {
  const std::vector<double> uniform(16, 1.0 / 16);
  for (const auto& base : {ProcessSpec::two_choice(), ProcessSpec::d_choice(4), ProcessSpec::quantile(0.25)}) {
    const ProcessSpec spec = base.with_ties(TieBreaking::Random);
    CAPTURE(spec.label());
    CHECK(rejection_rate([&] { return BatchSampler(spec, LoadState(16)); }, uniform, 100000, 100) < 0.05);
  }
}

TEST_CASE("unit batches match a sequential two-choice reference") {
  constexpr std::size_t n = 64;
  constexpr int runs = 1000;
  std::vector<double> engine, direct;
  for (int r = 0; r < runs; ++r) {
    BatchRunConfig c = config(n, 1, n, ProcessSpec::two_choice().with_ties(TieBreaking::Random), 2024);
    c.seed_plan = c.seed_plan.with_run(static_cast<std::uint64_t>(r));
    engine.push_back(run(c).final_gap());
    Rng rng = RngSeedPlan{4048, static_cast<std::uint64_t>(r)}.engine();
    direct.push_back(direct_two_choice_gap(n, n, rng));
  }
  const stats::KsResult ks = stats::ks_two_sample(engine, direct);
  CAPTURE(ks.d);
  CHECK(ks.p_value > 1e-3);
}

TEST_CASE("graphical sampler agrees with the graphical vector") {
  const auto g = std::make_shared<const RegularGraph>(make_random_regular(12, 3, 7));
  // Loads with ties so both the strict and the coin-flip branches are exercised.
  const LoadState state = LoadState::from_loads({3, 1, 1, 0, 2, 2, 0, 1, 3, 0, 1, 2});
  const ProcessSpec spec = ProcessSpec::graphical(g).with_ties(TieBreaking::Random);
  const BatchSampler probe(spec, state);
  std::vector<std::size_t> rank_of(12);
  for (std::size_t r = 0; r < 12; ++r) rank_of[probe.order()[r]] = r;
  const NormalizedLoads y = normalize_and_sort(state);
  const ProbabilityVector p = graphical_probability_vector(*g, y, rank_of);
  std::vector<double> expected(12);
  for (std::size_t v = 0; v < 12; ++v) expected[v] = p[rank_of[v]];
  CHECK(rejection_rate([&] { return BatchSampler(spec, state); }, expected, 100000, 100) < 0.05);

  // With fixed ties on an empty complete graph vertex 0 is ranked heaviest and never wins.
  const auto k5 = std::make_shared<const RegularGraph>(make_complete(5));
  const BatchSampler fixed(ProcessSpec::graphical(k5).with_ties(TieBreaking::Deterministic), LoadState(5));
  Rng rng = RngSeedPlan{5, 0}.engine();
  std::vector<std::uint64_t> counts(5);
  for (int j = 0; j < 10000; ++j) ++counts[fixed.draw(rng)];
  CHECK(counts[0] == 0);
  CHECK(counts[4] > 0);
}

TEST_CASE("midbatch samples and recorded potentials") {
  BatchRunConfig c = config(16, 32, 96, ProcessSpec::two_choice(), 3);
  c.midbatch_samples = 3;
  c.record_potentials = PotentialParams{0.1, 0.1 / 240, 0.2, 1.0, 1.0, 5.0};
  const RunTrace t = run(c);
  REQUIRE(t.midbatch.size() == 3);
  CHECK(t.midbatch[0].first == 72);
  CHECK(t.midbatch[1].first == 80);
  CHECK(t.midbatch[2].first == 88);
  for (const auto& b : t.boundaries) {
    REQUIRE(b.Gamma);
    CHECK(*b.Gamma >= 2.0 * 16 - 1e-9);
    REQUIRE(b.Lambda);
    CHECK(*b.Lambda >= 0.0);
  }
  CHECK(*t.boundaries[0].Gamma == 32.0);
}

TEST_CASE("gap statistics") {
  RunTrace a;
  a.boundaries = {{0, 0.0, 0.0, {}, {}}, {8, 4.0, -1.0, {}, {}}};
  RunTrace b = a;
  b.boundaries[1].gap = 6.0;
  const auto single = gap_statistics({a});
  CHECK(single[1].mean == 4.0);
  CHECK(single[1].std == 0.0);
  const auto pair = gap_statistics({a, b});
  CHECK(pair[1].mean == 5.0);
  CHECK(pair[1].std == 1.0);
  CHECK(pair[1].min == 4.0);
  CHECK(pair[1].max == 6.0);
  CHECK(pair[1].median == 5.0);
  RunTrace c = a;
  c.boundaries[1].step = 9;
  CHECK_THROWS_AS(gap_statistics({a, c}), MismatchedTraces);
  CHECK_THROWS_AS(gap_statistics({}), MismatchedTraces);

  std::vector<RunTrace> traces;
  for (std::uint64_t r = 0; r < 100; ++r) {
    BatchRunConfig cfg = config(16, 16, 160, ProcessSpec::one_choice(), 6);
    cfg.seed_plan = cfg.seed_plan.with_run(r);
    traces.push_back(run(cfg));
  }
  CHECK(gap_statistics(traces).back().std > 0.0);
}

}  // TEST_SUITE
