#include "bbins/potentials.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include "bbins/batch_sim.hpp"
#include "bbins/error.hpp"
#include "bbins/parallel.hpp"

namespace bbins {

double c_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0,1)");
  const double ln83 = std::log(8.0 / 3.0);
  const double ratio = delta / (1.0 - delta);
  const double a = delta / 4.0;
  const double b = ratio;
  const double c = 2.0 * std::exp((1.0 - delta) / (2.0 * delta) * ln83) * ratio;
  const double d = 2.0 * std::exp(delta / (2.0 * (1.0 - delta)) * ln83);
  return 2.0 * std::max({a, b, c, d});
}

PotentialParams PotentialParams::for_weak_bound(std::size_t n, std::size_t b, double epsilon, double delta,
                                                double C, double S) {
  PotentialParams p;
  p.K = 5.0 * C * C * S * S * static_cast<double>(b) / static_cast<double>(n);
  p.alpha = epsilon * delta / (8.0 * p.K);
  p.alpha_tilde = p.alpha / 240.0;
  p.c_delta = bbins::c_delta(delta);
  return p;
}

PotentialParams PotentialParams::for_strong_bound(std::size_t n, std::size_t b, double epsilon, double delta,
                                                  double C, double S) {
  const double nd = static_cast<double>(n);
  const double bd = static_cast<double>(b);
  const double ln_n = std::log(nd);
  PotentialParams p;
  p.K = 5.0 * C * C * S * S * bd / nd;
  p.alpha = epsilon * delta / (40.0 * C * C * S * S) * std::min(1.0 / ln_n, nd / bd);
  p.alpha_tilde = p.alpha / 240.0;
  p.c_delta = bbins::c_delta(delta);
  const double c_tilde = 16.0 * p.c_delta / delta;
  p.k_threshold = std::log(c_tilde / delta) / p.alpha_tilde;
  p.gamma = std::min(epsilon / (4.0 * C * S), nd * ln_n / bd);
  return p;
}

PotentialSnapshot hyperbolic_potential(const NormalizedLoads& y, double alpha) {
  if (!(alpha > 0.0)) throw InvalidParameter("alpha must be positive");
  double extreme = 0.0;
  for (double v : y.y) extreme = std::max(extreme, std::abs(v));
  if (alpha * extreme > 700.0) throw Overflow("alpha * max|y| exceeds 700; exponentials would overflow");

  PotentialSnapshot s;
  s.per_bin.reserve(y.n());
  CompensatedSum phi;
  CompensatedSum psi;
  for (double v : y.y) {
    const BinPotential bin{std::exp(alpha * v), std::exp(-alpha * v)};
    phi.add(bin.phi);
    psi.add(bin.psi);
    s.per_bin.push_back(bin);
  }
  s.Phi = phi.value();
  s.Psi = psi.value();
  s.Gamma = s.Phi + s.Psi;
  return s;
}

double lambda_potential(const NormalizedLoads& y, double gamma, double k) {
  if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  CompensatedSum acc;
  for (double v : y.y) {
    if (v < k) continue;
    if (gamma * (v - k) > 700.0) throw Overflow("gamma * (y - k) exceeds 700; exponentials would overflow");
    acc.add(std::exp(gamma * (v - k)));
  }
  return acc.value();
}

DriftBounds drift_upper_bounds(const ProbabilityVector& p, const PotentialSnapshot& snap, double alpha,
                               double K) {
  if (p.n() != snap.per_bin.size()) throw InvalidParameter("vector and snapshot differ in length");
  const double nd = static_cast<double>(p.n());
  const double second = K * alpha * alpha / nd;
  CompensatedSum dphi;
  CompensatedSum dpsi;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double bias = p.p[i] - 1.0 / nd;
    dphi.add(snap.per_bin[i].phi * (bias * alpha + second));
    dpsi.add(snap.per_bin[i].psi * (-bias * alpha + second));
  }
  DriftBounds out;
  out.dPhi = dphi.value();
  out.dPsi = dpsi.value();
  out.dGamma = out.dPhi + out.dPsi;
  return out;
}

DriftCheck verify_main_theorem(const ProbabilityVector& p, const NormalizedLoads& y, double alpha,
                               double epsilon, double delta, double K) {
  if (!check_C1(p, delta, epsilon).holds) {
    throw PreconditionViolated("probability vector does not satisfy C1 for the given (delta, eps)");
  }
  if (!(K > 0.0)) throw PreconditionViolated("K must be positive");
  if (!(alpha > 0.0 && alpha < std::min(1.0, epsilon * delta / (8.0 * K)))) {
    throw PreconditionViolated("alpha must lie in (0, min(1, eps delta / (8K)))");
  }
  const auto snap = hyperbolic_potential(y, alpha);
  const auto drift = drift_upper_bounds(p, snap, alpha, K);
  const double nd = static_cast<double>(y.n());
  DriftCheck out;
  out.lhs = drift.dGamma;
  out.rhs = -(epsilon * delta / 8.0) * (alpha / nd) * snap.Gamma + c_delta(delta) * epsilon * alpha;
  const double slack = 1e-12 * (std::abs(out.lhs) + std::abs(out.rhs));
  out.holds = out.lhs <= out.rhs + slack;
  return out;
}

NormalizedLoads random_centered_loads(std::size_t n, Rng& rng) {
  static constexpr double kScales[] = {0.1, 1.0, 5.0, 20.0, 100.0, 400.0};
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = kScales[uniform_index(rng, std::size(kScales))];
  NormalizedLoads y;
  y.y.resize(n);
  for (double& v : y.y) v = scale * normal(rng);
  if (uniform01(rng) < 0.25) {
    const std::size_t spikes = 1 + uniform_index(rng, 3);
    for (std::size_t s = 0; s < spikes; ++s) y.y[uniform_index(rng, n)] += 10.0 * scale * (1.0 + uniform01(rng));
  }
  const double avg = compensated_total(y.y) / static_cast<double>(n);
  for (double& v : y.y) v -= avg;
  std::sort(y.y.begin(), y.y.end(), std::greater<>());
  return y;
}

namespace {

std::vector<DriftSweepEntry> drift_impl(const std::vector<DriftCase>& cases, std::size_t n, std::size_t vectors,
                                        double K, std::uint64_t seed, bool parallel) {
  const std::size_t total = cases.size() * vectors;
  std::vector<DriftCheck> checks(total);
  auto one = [&](std::size_t idx) {
    const DriftCase& dc = cases[idx / vectors];
    Rng rng = RngSeedPlan{seed, idx % vectors}.engine();
    const NormalizedLoads y = random_centered_loads(n, rng);
    const double alpha = dc.epsilon * dc.delta / (16.0 * K);
    checks[idx] = verify_main_theorem(dc.p, y, alpha, dc.epsilon, dc.delta, K);
  };
  parallel_for(total, parallel, one);
  std::vector<DriftSweepEntry> out;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    DriftSweepEntry e;
    e.label = cases[c].label;
    e.vectors = vectors;
    for (std::size_t v = 0; v < vectors; ++v) {
      const DriftCheck& chk = checks[c * vectors + v];
      if (!chk.holds) ++e.violations;
      e.max_excess = std::max(e.max_excess, (chk.lhs - chk.rhs) / std::abs(chk.rhs));
    }
    out.push_back(e);
  }
  return out;
}

constexpr std::uint64_t kTrialsPerBlock = 256;

struct MomentAccumulator {
  std::vector<double> phi_sum, phi_sq, psi_sum, psi_sq;
  double phi_tot = 0.0, phi_tot_sq = 0.0, psi_tot = 0.0, psi_tot_sq = 0.0;

  explicit MomentAccumulator(std::size_t n) : phi_sum(n), phi_sq(n), psi_sum(n), psi_sq(n) {}

  void merge(const MomentAccumulator& o) {
    for (std::size_t i = 0; i < phi_sum.size(); ++i) {
      phi_sum[i] += o.phi_sum[i];
      phi_sq[i] += o.phi_sq[i];
      psi_sum[i] += o.psi_sum[i];
      psi_sq[i] += o.psi_sq[i];
    }
    phi_tot += o.phi_tot;
    phi_tot_sq += o.phi_tot_sq;
    psi_tot += o.psi_tot;
    psi_tot_sq += o.psi_tot_sq;
  }
};

// Accumulates deviations from the batch-start values so the variance survives rounding.
struct Shift {
  std::vector<double> phi, psi;
  double phi_tot = 0.0, psi_tot = 0.0;
};

MomentAccumulator run_block(const BatchMomentRequest& req, const LoadState& state, const BatchSampler& sampler,
                            const Shift& shift, std::uint64_t first, std::uint64_t last) {
  const std::size_t n = state.n();
  MomentAccumulator acc(n);
  const auto& order = sampler.order();
  for (std::uint64_t trial = first; trial < last; ++trial) {
    Rng rng = RngSeedPlan{req.seed, trial}.engine();
    LoadState s = state;
    for (std::size_t j = 0; j < req.b; ++j) s.add_ball(sampler.draw(rng), sample_weight(req.weights, rng));
    const double avg = s.average();
    double phi_t = 0.0;
    double psi_t = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double y = s.load(order[r]) - avg;
      const double phi = std::exp(req.alpha * y) - shift.phi[r];
      const double psi = std::exp(-req.alpha * y) - shift.psi[r];
      acc.phi_sum[r] += phi;
      acc.phi_sq[r] += phi * phi;
      acc.psi_sum[r] += psi;
      acc.psi_sq[r] += psi * psi;
      phi_t += phi;
      psi_t += psi;
    }
    acc.phi_tot += phi_t;
    acc.phi_tot_sq += phi_t * phi_t;
    acc.psi_tot += psi_t;
    acc.psi_tot_sq += psi_t * psi_t;
  }
  return acc;
}

MomentEstimate estimate(double shift, double sum, double sq, std::uint64_t trials) {
  const double t = static_cast<double>(trials);
  const double dev = sum / t;
  MomentEstimate e;
  e.mean = shift + dev;
  if (trials > 1) {
    const double var = std::max(0.0, (sq - t * dev * dev) / (t - 1.0));
    e.se = std::sqrt(var / t);
  }
  return e;
}

BatchMomentResult moment_impl(const BatchMomentRequest& req, const LoadState& state, bool parallel) {
  const std::size_t n = state.n();
  const double nd = static_cast<double>(n);
  const double bd = static_cast<double>(req.b);
  if (req.trials == 0) throw InvalidParameter("need at least one trial");
  if (!(req.alpha > 0.0)) throw PreconditionViolated("alpha must be positive");
  req.weights.validate();
  const double S = moment_bound_S(req.weights);

  const BatchSampler sampler(req.spec, state);
  ProbabilityVector p;
  if (req.spec.kind == ProcessKind::Graphical) {
    const auto y = normalize_and_sort(state);
    std::vector<std::size_t> rank_of_vertex(n);
    for (std::size_t r = 0; r < n; ++r) rank_of_vertex[sampler.order()[r]] = r;
    p = graphical_probability_vector(*req.spec.graph, y, rank_of_vertex);
  } else {
    p = sampler.rank_probabilities();
  }
  if (!check_C2(p, req.C).holds) throw PreconditionViolated("probability vector violates C2 for the given C");
  if (req.b > 0 && req.alpha > nd / (2.0 * req.C * S * bd)) {
    throw PreconditionViolated("alpha exceeds n / (2 C S b)");
  }

  BatchMomentResult out;
  out.trials = req.trials;
  const double avg = state.average();
  const double second = 5.0 * req.C * req.C * S * S * (bd / nd) * (req.alpha * req.alpha / nd) * bd;
  CompensatedSum phi_now, psi_now, phi_bound, psi_bound;
  Shift shift;
  for (std::size_t r = 0; r < n; ++r) {
    const double y = state.load(sampler.order()[r]) - avg;
    const double phi = std::exp(req.alpha * y);
    const double psi = std::exp(-req.alpha * y);
    shift.phi.push_back(phi);
    shift.psi.push_back(psi);
    const double bias = (p.p[r] - 1.0 / nd) * req.alpha * bd;
    phi_now.add(phi);
    psi_now.add(psi);
    phi_bound.add(phi * (1.0 + bias + second));
    psi_bound.add(psi * (1.0 - bias + second));
  }
  out.phi_now = phi_now.value();
  out.psi_now = psi_now.value();
  shift.phi_tot = out.phi_now;
  shift.psi_tot = out.psi_now;
  out.phi_bound = phi_bound.value();
  out.psi_bound = psi_bound.value();

  const std::uint64_t blocks = (req.trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<MomentAccumulator> partial(blocks, MomentAccumulator(n));
  auto do_block = [&](std::uint64_t blk) {
    const std::uint64_t first = blk * kTrialsPerBlock;
    const std::uint64_t last = std::min(req.trials, first + kTrialsPerBlock);
    partial[blk] = run_block(req, state, sampler, shift, first, last);
  };
  parallel_for(blocks, parallel, do_block);
  MomentAccumulator total(n);
  for (const auto& part : partial) total.merge(part);

  out.phi.resize(n);
  out.psi.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.phi[r] = estimate(shift.phi[r], total.phi_sum[r], total.phi_sq[r], req.trials);
    out.psi[r] = estimate(shift.psi[r], total.psi_sum[r], total.psi_sq[r], req.trials);
  }
  out.phi_total = estimate(shift.phi_tot, total.phi_tot, total.phi_tot_sq, req.trials);
  out.psi_total = estimate(shift.psi_tot, total.psi_tot, total.psi_tot_sq, req.trials);
  return out;
}

}  // namespace

std::vector<DriftSweepEntry> drift_sweep(const std::vector<DriftCase>& cases, std::size_t n, std::size_t vectors,
                                         double K, std::uint64_t seed) {
  return drift_impl(cases, n, vectors, K, seed, true);
}

std::vector<DriftSweepEntry> drift_sweep_serial(const std::vector<DriftCase>& cases, std::size_t n,
                                                std::size_t vectors, double K, std::uint64_t seed) {
  return drift_impl(cases, n, vectors, K, seed, false);
}

BatchMomentResult monte_carlo_batch_moment(const BatchMomentRequest& req, const LoadState& state) {
  return moment_impl(req, state, true);
}

BatchMomentResult monte_carlo_batch_moment_serial(const BatchMomentRequest& req, const LoadState& state) {
  return moment_impl(req, state, false);
}

}  // namespace bbins
