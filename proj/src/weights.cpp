#include "bbins/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bbins/error.hpp"

namespace bbins {

double default_lambda(WeightKind kind, double q) {
  switch (kind) {
    case WeightKind::Unit:
      return 1.0;
    case WeightKind::Exponential:
      return 0.5;
    case WeightKind::ScaledGeometric:
      return std::log(1.0 / (1.0 - q)) / 2.0;
    case WeightKind::UniformBounded:
      return 1.0;
  }
  return 1.0;
}

WeightDistribution WeightDistribution::unit() { return {WeightKind::Unit, 0.5, 1.0}; }

WeightDistribution WeightDistribution::exponential() { return {WeightKind::Exponential, 0.5, 0.5}; }

WeightDistribution WeightDistribution::scaled_geometric(double q) {
  WeightDistribution d{WeightKind::ScaledGeometric, q, 0.0};
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("geometric success probability must lie in (0,1)");
  d.lambda = default_lambda(WeightKind::ScaledGeometric, q);
  return d;
}

WeightDistribution WeightDistribution::uniform_bounded() {
  return {WeightKind::UniformBounded, 0.5, 1.0};
}

double WeightDistribution::mgf_domain_limit() const {
  switch (kind) {
    case WeightKind::Exponential:
      return 1.0;
    case WeightKind::ScaledGeometric:
      // q G with G ~ Geom(q): finite while (1-q) e^{zq} < 1.
      return std::log(1.0 / (1.0 - q)) / q;
    default:
      return std::numeric_limits<double>::infinity();
  }
}

void WeightDistribution::validate() const {
  if (kind == WeightKind::ScaledGeometric && !(q > 0.0 && q < 1.0)) {
    throw InvalidParameter("geometric success probability must lie in (0,1)");
  }
  if (!(lambda > 0.0)) throw InvalidParameter("weight lambda must be positive");
  if (!(lambda < mgf_domain_limit())) {
    throw InvalidParameter("weight lambda lies outside the MGF finiteness domain");
  }
}

std::string WeightDistribution::label() const {
  if (kind == WeightKind::ScaledGeometric) return weight_kind_name(kind) + ":" + std::to_string(q);
  return weight_kind_name(kind);
}

double sample_weight(const WeightDistribution& dist, Rng& rng) {
  switch (dist.kind) {
    case WeightKind::Unit:
      return 1.0;
    case WeightKind::Exponential:
      return -std::log1p(-uniform01(rng));
    case WeightKind::ScaledGeometric: {
      // inverse transform: G = 1 + floor(ln U / ln(1-q))
      const double u = 1.0 - uniform01(rng);  // (0, 1]
      const double g = 1.0 + std::floor(std::log(u) / std::log1p(-dist.q));
      return dist.q * g;
    }
    case WeightKind::UniformBounded:
      return 2.0 * uniform01(rng);
  }
  return 1.0;
}

double mgf(const WeightDistribution& dist, double z) {
  if (z == 0.0) return 1.0;
  if (!(z < dist.mgf_domain_limit())) {
    throw DomainError("MGF of " + dist.label() + " diverges at z=" + std::to_string(z));
  }
  switch (dist.kind) {
    case WeightKind::Unit:
      return std::exp(z);
    case WeightKind::Exponential:
      return 1.0 / (1.0 - z);
    case WeightKind::ScaledGeometric: {
      const double e = std::exp(z * dist.q);
      return dist.q * e / (1.0 - (1.0 - dist.q) * e);
    }
    case WeightKind::UniformBounded:
      return std::expm1(2.0 * z) / (2.0 * z);
  }
  return 1.0;
}

double moment_bound_S(const WeightDistribution& dist) {
  const double lam = dist.lambda;
  if (!(lam > 0.0)) throw DomainError("lambda must be positive");
  const double r = 8.0 / lam;
  const double poly = std::pow(r * std::log(r), 4);
  const double m = 2.0 * mgf(dist, lam);
  return 2.0 * std::max({poly, m, 0.5});
}

WeightKind parse_weight_kind(const std::string& name) {
  if (name == "unit") return WeightKind::Unit;
  if (name == "exponential") return WeightKind::Exponential;
  if (name == "scaled_geometric") return WeightKind::ScaledGeometric;
  if (name == "uniform_bounded") return WeightKind::UniformBounded;
  throw InvalidParameter("unknown weight distribution '" + name + "'");
}

std::string weight_kind_name(WeightKind kind) {
  switch (kind) {
    case WeightKind::Unit:
      return "unit";
    case WeightKind::Exponential:
      return "exponential";
    case WeightKind::ScaledGeometric:
      return "scaled_geometric";
    case WeightKind::UniformBounded:
      return "uniform_bounded";
  }
  return "unit";
}

}  // namespace bbins
