#include "bbins/batch_sim.hpp"

#include <algorithm>
#include <cmath>

#include "bbins/error.hpp"
#include "bbins/stats.hpp"

namespace bbins {

BatchSampler::BatchSampler(const ProcessSpec& spec, const LoadState& state)
    : kind_(spec.kind), ties_(spec.tie_breaking), graph_(spec.graph), order_(rank_order(state)) {
  const std::size_t n = state.n();
  rank_of_bin_.resize(n);
  for (std::size_t r = 0; r < n; ++r) rank_of_bin_[order_[r]] = r;

  if (kind_ == ProcessKind::Graphical) {
    if (!graph_ || graph_->n != n) throw InvalidParameter("graph size differs from the number of bins");
    snapshot_.assign(state.loads().begin(), state.loads().end());
    return;
  }
  p_ = probability_vector(spec, n);
  if (ties_ == TieBreaking::Random) {
    NormalizedLoads y;
    y.y.reserve(n);
    const double avg = state.average();
    for (std::size_t r = 0; r < n; ++r) y.y.push_back(state.load(order_[r]) - avg);
    p_ = tie_break_average(p_, y);
  }
  table_ = AliasTable(p_.p);
}

std::size_t BatchSampler::draw(Rng& rng) const {
  if (kind_ != ProcessKind::Graphical) return order_[table_.sample(rng)];

  const auto& [a, b] = graph_->edges[uniform_index(rng, graph_->edges.size())];
  const double la = snapshot_[a];
  const double lb = snapshot_[b];
  if (la < lb) return a;
  if (lb < la) return b;
  if (ties_ == TieBreaking::Random) return uniform01(rng) < 0.5 ? a : b;
  // fixed order: the endpoint ranked lighter wins
  return rank_of_bin_[a] > rank_of_bin_[b] ? a : b;
}

void run_batch(LoadState& state, const ProcessSpec& spec, std::size_t b, const WeightDistribution& weights,
               Rng& rng) {
  if (b == 0) return;
  const BatchSampler sampler(spec, state);
  for (std::size_t j = 0; j < b; ++j) {
    const std::size_t bin = sampler.draw(rng);
    state.add_ball(bin, sample_weight(weights, rng));
  }
}

void BatchRunConfig::validate() const {
  if (n < 2) throw InvalidParameter("need n >= 2");
  if (b < 1) throw InvalidParameter("batch size must be at least 1");
  if (m % b != 0) throw InvalidParameter("m must be a multiple of b");
  weights.validate();
  if (process.kind == ProcessKind::Graphical) {
    if (!process.graph || process.graph->n != n) throw InvalidParameter("graph size differs from n");
  } else {
    (void)probability_vector(process, n);
  }
}

namespace {

BoundaryRecord record(const LoadState& state, const std::optional<PotentialParams>& params) {
  BoundaryRecord r;
  r.step = state.step();
  r.gap = gap(state);
  r.min_y = min_normalized(state);
  if (params) {
    const auto y = normalize_and_sort(state);
    if (params->alpha > 0.0) r.Gamma = hyperbolic_potential(y, params->alpha).Gamma;
    if (params->gamma > 0.0) r.Lambda = lambda_potential(y, params->gamma, params->k_threshold);
  }
  return r;
}

}  // namespace

RunTrace run(const BatchRunConfig& config, LoadState& final_state) {
  config.validate();
  Rng rng = config.seed_plan.engine();
  LoadState state(config.n);
  RunTrace trace;
  const std::size_t batches = config.m / config.b;
  trace.boundaries.reserve(batches + 1);
  trace.boundaries.push_back(record(state, config.record_potentials));

  for (std::size_t batch = 0; batch < batches; ++batch) {
    const bool last = batch + 1 == batches;
    if (!last || config.midbatch_samples == 0) {
      run_batch(state, config.process, config.b, config.weights, rng);
    } else {
      // evenly spaced observation points strictly inside the final batch
      const BatchSampler sampler(config.process, state);
      std::vector<std::size_t> marks;
      for (std::size_t s = 1; s <= config.midbatch_samples; ++s) {
        marks.push_back(static_cast<std::size_t>(
            std::llround(static_cast<double>(config.b) * static_cast<double>(s) /
                         static_cast<double>(config.midbatch_samples + 1))));
      }
      std::size_t next = 0;
      for (std::size_t j = 0; j < config.b; ++j) {
        state.add_ball(sampler.draw(rng), sample_weight(config.weights, rng));
        while (next < marks.size() && marks[next] == j + 1) {
          trace.midbatch.emplace_back(state.step(), gap(state));
          ++next;
        }
      }
    }
    trace.boundaries.push_back(record(state, config.record_potentials));
  }
  trace.final_state_digest = load_digest(state);
  final_state = std::move(state);
  return trace;
}

RunTrace run(const BatchRunConfig& config) {
  LoadState final_state(config.n < 1 ? 1 : config.n);
  return run(config, final_state);
}

std::vector<BoundarySummary> gap_statistics(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw MismatchedTraces("no traces to summarise");
  const std::size_t count = traces.front().boundaries.size();
  for (const auto& t : traces) {
    if (t.boundaries.size() != count) throw MismatchedTraces("traces have different numbers of boundaries");
    for (std::size_t i = 0; i < count; ++i) {
      if (t.boundaries[i].step != traces.front().boundaries[i].step) {
        throw MismatchedTraces("traces disagree on boundary steps");
      }
    }
  }
  std::vector<BoundarySummary> out(count);
  std::vector<double> values(traces.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t r = 0; r < traces.size(); ++r) values[r] = traces[r].boundaries[i].gap;
    auto& s = out[i];
    s.step = traces.front().boundaries[i].step;
    s.mean = stats::mean(values);
    s.std = stats::population_std(values);
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    s.q05 = stats::quantile(values, 0.05);
    s.q25 = stats::quantile(values, 0.25);
    s.median = stats::quantile(values, 0.5);
    s.q75 = stats::quantile(values, 0.75);
    s.q95 = stats::quantile(values, 0.95);
  }
  return out;
}

}  // namespace bbins
