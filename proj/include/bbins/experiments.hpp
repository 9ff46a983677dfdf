#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bbins/batch_sim.hpp"
#include "bbins/stats.hpp"

namespace bbins {

using SweepValue = std::variant<double, std::string>;

/// One swept field. Supported fields: n, b, m, b_over_n, m_over_n, process, tie_breaking, weights.
struct SweepAxis {
  std::string field;
  std::vector<SweepValue> values;

  bool operator==(const SweepAxis&) const = default;
};

/// How a Graphical base process obtains its graph.
struct GraphSource {
  std::string kind = "random_regular";  // cycle | hypercube | complete | random_regular | file
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::string file;

  bool operator==(const GraphSource&) const = default;
};

std::shared_ptr<const RegularGraph> build_graph(const GraphSource& source);

struct Campaign {
  std::string name = "campaign";
  BatchRunConfig base;
  std::optional<GraphSource> graph;
  std::vector<SweepAxis> sweep;
  std::size_t runs_per_point = 1;
  std::string output_path;
  /// Wall-clock runtimes make the CSV non-reproducible, so they are written as 0 unless enabled.
  bool record_runtime = false;

  void validate() const;

  bool operator==(const Campaign&) const = default;
};

/// Cartesian product of the sweep axes, first axis outermost. One empty point when no sweep.
std::vector<std::vector<SweepValue>> grid_points(const Campaign& c);

/// base with one grid point applied.
BatchRunConfig apply_point(const Campaign& c, const std::vector<SweepValue>& point);

struct CampaignRow {
  std::size_t point_id = 0;
  std::vector<SweepValue> point;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double final_gap = 0.0;
  double final_min_y = 0.0;
  double runtime_ms = 0.0;
};

struct CampaignResult {
  std::vector<std::string> swept_fields;
  std::vector<CampaignRow> rows;  // ordered by (point_id, run)

  /// final_gap values of one grid point.
  std::vector<double> gaps_of_point(std::size_t point_id) const;
};

/// Runs every (point, run) job in an OpenMP work pool; rows come back in deterministic order.
CampaignResult run_campaign(const Campaign& c);
/// Single-threaded reference of run_campaign.
CampaignResult run_campaign_serial(const Campaign& c);

void write_csv(const CampaignResult& result, std::ostream& out);
void write_csv(const CampaignResult& result, const std::string& path);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
std::string format_sweep_value(const SweepValue& v);

// Figure presets. Desk scale uses n = 300 and 30 runs; paper scale n = 1000 and 100 runs.
Campaign preset_fig5(bool paper_scale);
Campaign preset_fig6(bool paper_scale);
Campaign preset_fig7(bool paper_scale);
Campaign preset_fig8(bool paper_scale);
Campaign preset_by_name(const std::string& name, bool paper_scale);

/// Quantile parameter closest to target that makes target * n integral (at least 1/n).
double round_quantile(double target, std::size_t n);

struct FirstBatchResult {
  double C = 0.0;        // n * max p
  double gamma = 0.0;    // min(C - 1, 0.5)
  double threshold = 0.0;  // (gamma / 4) b / n
  std::size_t heavy_bin = 0;  // bin holding the max-p rank at time 0
  std::vector<double> y;   // y of that bin after the first batch, per run
  std::uint64_t successes = 0;
  std::uint64_t runs = 0;
  double fraction = 0.0;
  stats::Interval wilson;
  double mean_y = 0.0;
};

/// One batch from the empty state without random tie-breaking; counts runs where the bin of the
/// largest allocation probability ends with y >= (gamma/4) b/n. Requires b >= n ln n and C > 1.
FirstBatchResult first_batch_lower_bound(std::size_t n, std::size_t b, const ProcessSpec& spec,
                                         std::size_t runs, std::uint64_t seed);

struct LogLowerResult {
  std::size_t m = 0;
  std::size_t b = 0;
  std::vector<double> gaps;
  double min_ratio = 0.0;  // min gap / ln n
  double k_hat = 0.0;
  bool all_above = false;  // every gap >= k_hat ln n
};

/// Smallest admissible n * min p for the log-n lower-bound experiment.
inline constexpr double kLogLowerMinScaledProbability = 0.1;

/// Gap after m = ceil(n ln n) balls (rounded up to a multiple of b). Requires a vector whose smallest
/// entry is a constant multiple of 1/n, which rules out d-choice.
LogLowerResult log_lower_experiment(const ProcessSpec& spec, std::size_t n, std::size_t runs,
                                    std::uint64_t seed, double k_hat, std::size_t b = 0);

struct PoissonLevel {
  double kappa1 = 0.0;
  double threshold = 0.0;  // kappa1 sqrt(lambda / ln n)
  std::uint64_t successes = 0;
  double probability = 0.0;
  stats::Interval wilson;
};

struct PoissonResult {
  std::size_t n = 0;
  double lambda = 0.0;
  std::uint64_t trials = 0;
  std::vector<PoissonLevel> levels;
};

/// Empirical Pr[Y_(n-1) - Y_(n) >= kappa1 sqrt(lambda / ln n)] for n iid Poisson(lambda) draws.
/// Requires lambda >= 16 ln n.
PoissonResult poisson_min_gap(std::size_t n, double lambda, std::uint64_t trials, std::uint64_t seed,
                              std::vector<double> kappas = {0.1, 0.25, 0.5});

/// Pilot-calibrated thresholds, persisted as JSON.
struct CalibrationConstants {
  std::uint64_t pilot_seed = 0;
  std::string log_lower_process = "one_plus_beta:0.5";
  std::size_t log_lower_n = 256;
  std::size_t log_lower_runs = 100;
  double log_lower_pilot_min_ratio = 0.0;
  double log_lower_k_hat = 0.0;
  std::size_t poisson_n = 100;
  double poisson_kappa1 = 0.1;
  std::uint64_t poisson_trials = 10000;
  double poisson_pilot_probability = 0.0;
  double poisson_floor = 0.05;
  double first_batch_min_fraction = 0.9;
};

/// Runs the pilots: k_hat is half the smallest pilot ratio, the Poisson floor is
/// max(0.05, half the pilot Wilson lower bound).
CalibrationConstants calibrate(std::uint64_t pilot_seed);
void save_calibration(const CalibrationConstants& c, const std::string& path);
CalibrationConstants load_calibration(const std::string& path);

}  // namespace bbins
