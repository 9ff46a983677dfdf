#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bbins/error.hpp"

namespace bbins {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_total(std::span<const double> values);

/// Bin loads of one simulation run. Loads are kept unsorted, indexed by bin id.
class LoadState {
 public:
  explicit LoadState(std::size_t n);
  /// Builds a state from explicit loads; total weight is their (compensated) sum.
  static LoadState from_loads(std::vector<double> loads, std::int64_t step = 0);

  std::size_t n() const { return loads_.size(); }
  std::span<const double> loads() const { return loads_; }
  double load(std::size_t bin) const { return loads_[bin]; }
  double total_weight() const { return total_.value(); }
  double average() const { return total_weight() / static_cast<double>(n()); }
  std::int64_t step() const { return step_; }

  void add_ball(std::size_t bin, double weight) {
    loads_[bin] += weight;
    total_.add(weight);
    ++step_;
  }

  /// Throws InvalidParameter if an invariant is broken.
  void validate() const;

 private:
  std::vector<double> loads_;
  CompensatedSum total_;
  std::int64_t step_ = 0;
};

/// Normalized loads y_i = x_i - W/n sorted non-increasing (y[0] is the heaviest bin).
struct NormalizedLoads {
  std::vector<double> y;

  std::size_t n() const { return y.size(); }
};

NormalizedLoads normalize_and_sort(const LoadState& state);

/// max_i x_i - W/n.
double gap(const LoadState& state);

/// min_i x_i - W/n.
double min_normalized(const LoadState& state);

/// Bin ids ordered by rank: rank 0 is the most loaded bin, equal loads ordered by bin id.
std::vector<std::size_t> rank_order(const LoadState& state);

/// FNV-1a over the bit patterns of the loads.
std::uint64_t load_digest(const LoadState& state);

}  // namespace bbins
