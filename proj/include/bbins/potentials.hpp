#pragma once

#include <cstdint>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bbins/core.hpp"
#include "bbins/processes.hpp"
#include "bbins/rng.hpp"
#include "bbins/weights.hpp"

namespace bbins {

/// Constants of the exponential potentials. alpha_tilde is always alpha / 240.
struct PotentialParams {
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  double gamma = 0.0;
  double k_threshold = 0.0;
  double K = 0.0;
  double c_delta = 0.0;

  /// Smoothing for the O((b/n) log n) regime: K = 5 C^2 S^2 b/n, alpha = eps delta / (8K).
  static PotentialParams for_weak_bound(std::size_t n, std::size_t b, double epsilon, double delta,
                                        double C, double S);
  /// Parameters of the refined O(b/n + log n) analysis: alpha, alpha/240, gamma and k.
  static PotentialParams for_strong_bound(std::size_t n, std::size_t b, double epsilon, double delta,
                                          double C, double S);

  bool operator==(const PotentialParams&) const = default;
};

/// c(delta) = 2 max(delta/4, delta/(1-delta), 2 e^{((1-delta)/(2 delta)) ln(8/3)} delta/(1-delta),
///                 2 e^{(delta/(2(1-delta))) ln(8/3)}).
double c_delta(double delta);

struct BinPotential {
  double phi = 0.0;
  double psi = 0.0;
};

struct PotentialSnapshot {
  double Gamma = 0.0;
  double Phi = 0.0;
  double Psi = 0.0;
  std::vector<BinPotential> per_bin;  // by rank, aligned with the sorted loads
  std::optional<double> Lambda;
};

/// Gamma = sum e^{alpha y_i} + sum e^{-alpha y_i}. Throws Overflow when alpha max|y| > 700.
PotentialSnapshot hyperbolic_potential(const NormalizedLoads& y, double alpha);

/// Sum over bins with y_i >= k of e^{gamma (y_i - k)}.
double lambda_potential(const NormalizedLoads& y, double gamma, double k);

struct DriftBounds {
  double dPhi = 0.0;
  double dPsi = 0.0;
  double dGamma = 0.0;
};

/// sum Phi_i ((p_i - 1/n) alpha + K alpha^2/n) and the Psi analogue with (1/n - p_i).
DriftBounds drift_upper_bounds(const ProbabilityVector& p, const PotentialSnapshot& snap, double alpha,
                               double K);

struct DriftCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Evaluates dGamma <= -(eps delta / 8)(alpha/n) Gamma + c(delta) eps alpha for one load vector.
/// Throws PreconditionViolated unless p satisfies C1(delta, eps) and 0 < alpha < min(1, eps delta/(8K)).
DriftCheck verify_main_theorem(const ProbabilityVector& p, const NormalizedLoads& y, double alpha,
                               double epsilon, double delta, double K);

struct DriftSweepEntry {
  std::string label;
  std::size_t vectors = 0;
  std::size_t violations = 0;
  double max_excess = -INFINITY;  // max over vectors of (lhs - rhs) / |rhs|
};

/// Checks verify_main_theorem on `vectors` random centred load vectors of length n for each
/// (label, p, delta, eps) entry with alpha = eps delta / (16 K), half the largest admissible value. Vector v uses the
/// stream (seed, v), so results do not depend on the thread count.
struct DriftCase {
  std::string label;
  ProbabilityVector p;
  double delta = 0.25;
  double epsilon = 0.5;
};

std::vector<DriftSweepEntry> drift_sweep(const std::vector<DriftCase>& cases, std::size_t n,
                                         std::size_t vectors, double K, std::uint64_t seed);
std::vector<DriftSweepEntry> drift_sweep_serial(const std::vector<DriftCase>& cases, std::size_t n,
                                                std::size_t vectors, double K, std::uint64_t seed);

/// Random centred load vector (sorted non-increasing) with a scale drawn per vector; a share of
/// vectors gets a few large spikes.
NormalizedLoads random_centered_loads(std::size_t n, Rng& rng);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
};

struct BatchMomentResult {
  std::vector<MomentEstimate> phi;  // per bin, ordered by rank at batch start
  std::vector<MomentEstimate> psi;
  MomentEstimate phi_total;
  MomentEstimate psi_total;
  double phi_now = 0.0;  // sum of Phi_i at batch start
  double psi_now = 0.0;
  double phi_bound = 0.0;  // right-hand sides of the one-batch moment bounds
  double psi_bound = 0.0;
  std::uint64_t trials = 0;
};

struct BatchMomentRequest {
  ProcessSpec spec;
  std::size_t b = 0;
  WeightDistribution weights = WeightDistribution::unit();
  double alpha = 0.0;
  double C = 2.0;  // cap of condition C2 for the process vector
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of E[Phi_i^{t+b}], E[Psi_i^{t+b}] from a frozen state, next to the
/// bound  sum Phi_i (1 + (p_i - 1/n) alpha b + 5 C^2 S^2 (b/n)(alpha^2/n) b).
/// Requires p to satisfy C2(C) and alpha <= n / (2 C S b). Trials run under OpenMP.
BatchMomentResult monte_carlo_batch_moment(const BatchMomentRequest& req, const LoadState& state);
/// Single-threaded reference; bit-identical to monte_carlo_batch_moment.
BatchMomentResult monte_carlo_batch_moment_serial(const BatchMomentRequest& req, const LoadState& state);

}  // namespace bbins
