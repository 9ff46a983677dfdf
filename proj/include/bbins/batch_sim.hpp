#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "bbins/alias_table.hpp"
#include "bbins/core.hpp"
#include "bbins/graphs.hpp"
#include "bbins/potentials.hpp"
#include "bbins/processes.hpp"
#include "bbins/rng.hpp"
#include "bbins/weights.hpp"

namespace bbins {

/// Draws bins for one batch from the loads frozen at batch start.
class BatchSampler {
 public:
  BatchSampler(const ProcessSpec& spec, const LoadState& state);

  std::size_t draw(Rng& rng) const;
  /// Bin ids by rank at batch start.
  const std::vector<std::size_t>& order() const { return order_; }
  /// Effective rank vector (after tie averaging) for non-graphical processes.
  const ProbabilityVector& rank_probabilities() const { return p_; }

 private:
  ProcessKind kind_;
  TieBreaking ties_;
  std::shared_ptr<const RegularGraph> graph_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_of_bin_;
  ProbabilityVector p_;
  AliasTable table_;
  std::vector<double> snapshot_;  // graphical: frozen loads by bin
};

/// Allocates b balls against the state frozen at call time.
void run_batch(LoadState& state, const ProcessSpec& spec, std::size_t b, const WeightDistribution& weights,
               Rng& rng);

struct BatchRunConfig {
  std::size_t n = 2;
  std::size_t b = 1;
  std::size_t m = 1;
  ProcessSpec process;
  WeightDistribution weights = WeightDistribution::unit();
  RngSeedPlan seed_plan;
  std::optional<PotentialParams> record_potentials;
  std::size_t midbatch_samples = 0;

  void validate() const;

  bool operator==(const BatchRunConfig&) const = default;
};

struct BoundaryRecord {
  std::int64_t step = 0;
  double gap = 0.0;
  double min_y = 0.0;
  std::optional<double> Gamma;
  std::optional<double> Lambda;
};

struct RunTrace {
  std::vector<BoundaryRecord> boundaries;
  std::vector<std::pair<std::int64_t, double>> midbatch;  // (step, gap) inside the final batch
  std::uint64_t final_state_digest = 0;

  double final_gap() const { return boundaries.back().gap; }
  double final_min_y() const { return boundaries.back().min_y; }
};

RunTrace run(const BatchRunConfig& config);
/// Same as run(), also handing back the final loads.
RunTrace run(const BatchRunConfig& config, LoadState& final_state);

struct BoundarySummary {
  std::int64_t step = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

/// Per-boundary gap aggregates. Throws MismatchedTraces if boundary steps differ.
std::vector<BoundarySummary> gap_statistics(const std::vector<RunTrace>& traces);

}  // namespace bbins
