#pragma once

#include <string>

#include "bbins/rng.hpp"

namespace bbins {

enum class WeightKind { Unit, Exponential, ScaledGeometric, UniformBounded };

/// Ball-weight law with mean exactly 1 and a closed-form moment generating function.
///
/// ScaledGeometric draws G >= 1 trials until the first success (success probability q)
/// and returns q * G. UniformBounded is uniform on [0, 2].
struct WeightDistribution {
  WeightKind kind = WeightKind::Unit;
  double q = 0.5;       // ScaledGeometric only
  double lambda = 1.0;  // MGF parameter, must lie strictly inside the finiteness domain

  static WeightDistribution unit();
  static WeightDistribution exponential();
  static WeightDistribution scaled_geometric(double q);
  static WeightDistribution uniform_bounded();

  /// Supremum of z for which E[e^{zW}] is finite (infinity when finite everywhere).
  double mgf_domain_limit() const;
  void validate() const;
  std::string label() const;

  bool operator==(const WeightDistribution&) const = default;
};

double default_lambda(WeightKind kind, double q = 0.5);

double sample_weight(const WeightDistribution& dist, Rng& rng);

/// E[e^{zW}]. Throws DomainError outside the finiteness domain.
double mgf(const WeightDistribution& dist, double z);

/// S := 2 * max{ ((8/lambda) ln(8/lambda))^4, 2 E[e^{lambda W}], 1/2 }.
double moment_bound_S(const WeightDistribution& dist);

WeightKind parse_weight_kind(const std::string& name);
std::string weight_kind_name(WeightKind kind);

}  // namespace bbins
