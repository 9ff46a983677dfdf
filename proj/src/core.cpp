#include "bbins/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace bbins {

double compensated_total(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

LoadState::LoadState(std::size_t n) : loads_(n, 0.0) {
  if (n == 0) throw InvalidParameter("LoadState needs at least one bin");
}

LoadState LoadState::from_loads(std::vector<double> loads, std::int64_t step) {
  LoadState s(loads.size());
  for (double v : loads) s.total_.add(v);
  s.loads_ = std::move(loads);
  s.step_ = step;
  s.validate();
  return s;
}

void LoadState::validate() const {
  if (step_ < 0) throw InvalidParameter("negative step counter");
  for (std::size_t i = 0; i < loads_.size(); ++i) {
    if (!(loads_[i] >= 0.0)) throw InvalidParameter("negative load in bin " + std::to_string(i));
  }
  const double total = total_weight();
  const double recomputed = compensated_total(loads_);
  if (std::abs(total - recomputed) > 1e-9 * std::max(1.0, std::abs(total))) {
    throw InvalidParameter("total weight does not match the sum of loads");
  }
}

NormalizedLoads normalize_and_sort(const LoadState& state) {
  const double avg = state.average();
  NormalizedLoads out;
  out.y.reserve(state.n());
  for (double x : state.loads()) out.y.push_back(x - avg);
  std::sort(out.y.begin(), out.y.end(), std::greater<>());
  return out;
}

double gap(const LoadState& state) {
  const auto loads = state.loads();
  return *std::max_element(loads.begin(), loads.end()) - state.average();
}

double min_normalized(const LoadState& state) {
  const auto loads = state.loads();
  return *std::min_element(loads.begin(), loads.end()) - state.average();
}

std::vector<std::size_t> rank_order(const LoadState& state) {
  std::vector<std::size_t> order(state.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto loads = state.loads();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (loads[a] != loads[b]) return loads[a] > loads[b];
    return a < b;
  });
  return order;
}

std::uint64_t load_digest(const LoadState& state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : state.loads()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace bbins
