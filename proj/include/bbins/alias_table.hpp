#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bbins/rng.hpp"

namespace bbins {

/// Walker/Vose alias table: O(n) build, O(1) draws.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }

  std::size_t sample(Rng& rng) const {
    const auto column = static_cast<std::size_t>(uniform_index(rng, prob_.size()));
    return uniform01(rng) < prob_[column] ? column : alias_[column];
  }

  /// Probability that sample() returns i, recovered from the table.
  double probability(std::size_t i) const;

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace bbins
