#include "bbins/processes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <charconv>

#include "bbins/error.hpp"
#include "bbins/graphs.hpp"

namespace bbins {

namespace {

double tolerance(std::size_t n) { return 1e-12 * static_cast<double>(n); }

std::string format_param(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ConditionReport fail_at(ConditionReport r, std::size_t k, double value) {
  r.holds = false;
  r.witness_k = k;
  r.witness_value = value;
  return r;
}

}  // namespace

double ProbabilityVector::max() const { return *std::max_element(p.begin(), p.end()); }
double ProbabilityVector::min() const { return *std::min_element(p.begin(), p.end()); }
double ProbabilityVector::total() const { return compensated_total(p); }

ProcessSpec ProcessSpec::one_choice() { return ProcessSpec{}; }

ProcessSpec ProcessSpec::two_choice() { return d_choice(2); }

ProcessSpec ProcessSpec::d_choice(int d) {
  if (d < 2) throw InvalidParameter("d-choice needs d >= 2");
  ProcessSpec s;
  s.kind = ProcessKind::DChoice;
  s.d = d;
  return s;
}

ProcessSpec ProcessSpec::one_plus_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidParameter("beta must lie in (0,1]");
  ProcessSpec s;
  s.kind = ProcessKind::OnePlusBeta;
  s.beta = beta;
  return s;
}

ProcessSpec ProcessSpec::quantile(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidParameter("quantile delta must lie in (0,1]");
  ProcessSpec s;
  s.kind = ProcessKind::Quantile;
  s.delta = delta;
  return s;
}

ProcessSpec ProcessSpec::graphical(std::shared_ptr<const RegularGraph> graph) {
  if (!graph) throw InvalidParameter("graphical process needs a graph");
  ProcessSpec s;
  s.kind = ProcessKind::Graphical;
  s.graph = std::move(graph);
  return s;
}

std::string ProcessSpec::label() const {
  switch (kind) {
    case ProcessKind::OneChoice:
      return "one_choice";
    case ProcessKind::DChoice:
      return d == 2 ? "two_choice" : "d_choice:" + std::to_string(d);
    case ProcessKind::OnePlusBeta:
      return "one_plus_beta:" + format_param(beta);
    case ProcessKind::Quantile:
      return "quantile:" + format_param(delta);
    case ProcessKind::Graphical:
      return "graphical";
  }
  return "unknown";
}

bool ProcessSpec::operator==(const ProcessSpec& o) const {
  if (kind != o.kind || tie_breaking != o.tie_breaking) return false;
  switch (kind) {
    case ProcessKind::OneChoice:
      return true;
    case ProcessKind::DChoice:
      return d == o.d;
    case ProcessKind::OnePlusBeta:
      return beta == o.beta;
    case ProcessKind::Quantile:
      return delta == o.delta;
    case ProcessKind::Graphical:
      if (graph == o.graph) return true;
      return graph && o.graph && *graph == *o.graph;
  }
  return false;
}

ProcessSpec parse_process_label(const std::string& label) {
  const auto colon = label.find(':');
  const std::string kind = label.substr(0, colon);
  const bool has_param = colon != std::string::npos;
  auto param = [&]() -> double {
    if (!has_param) throw InvalidParameter("process '" + kind + "' needs a parameter");
    std::size_t used = 0;
    const std::string text = label.substr(colon + 1);
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) throw InvalidParameter("bad process parameter '" + text + "'");
    return v;
  };
  if (kind == "one_choice") return ProcessSpec::one_choice();
  if (kind == "two_choice") return ProcessSpec::two_choice();
  if (kind == "three_choice") return ProcessSpec::d_choice(3);
  if (kind == "d_choice") {
    const double d = param();
    if (d != std::floor(d)) throw InvalidParameter("d must be an integer");
    return ProcessSpec::d_choice(static_cast<int>(d));
  }
  if (kind == "one_plus_beta") return ProcessSpec::one_plus_beta(param());
  if (kind == "quantile") return ProcessSpec::quantile(param());
  throw InvalidParameter("unknown process '" + label + "'");
}

std::size_t heavy_rank_count(std::size_t n, double delta) {
  const auto k = static_cast<std::size_t>(std::floor(delta * static_cast<double>(n) + 1e-9));
  if (k == 0) throw InvalidParameter("floor(delta * n) is zero");
  return k;
}

ConditionParams verified_parameters(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::OneChoice:
      return {0.25, 0.5, 1.0};
    case ProcessKind::DChoice:
      return {0.25, 0.5, static_cast<double>(spec.d)};
    case ProcessKind::OnePlusBeta:
      return {0.25, spec.beta / 2.0, 2.0};
    case ProcessKind::Quantile:
      return {spec.delta, 1.0 - spec.delta, 2.0};
    case ProcessKind::Graphical:
      break;
  }
  throw InvalidParameter("graphical parameters depend on the conductance of the graph");
}

ProbabilityVector probability_vector(const ProcessSpec& spec, std::size_t n) {
  if (n < 2) throw InvalidParameter("need n >= 2");
  const double nd = static_cast<double>(n);
  ProbabilityVector out;
  out.p.resize(n);
  switch (spec.kind) {
    case ProcessKind::OneChoice:
      std::fill(out.p.begin(), out.p.end(), 1.0 / nd);
      break;
    case ProcessKind::DChoice: {
      if (spec.d < 2) throw InvalidParameter("d-choice needs d >= 2");
      // Rank i (1-based) receives the ball iff it is the lightest of d uniform samples:
      // p_i = (i^d - (i-1)^d) / n^d. Integer numerators keep small cases exactly rounded.
      const double denom = std::pow(nd, spec.d);
      if (denom < 0x1.0p53) {
        for (std::size_t i = 1; i <= n; ++i) {
          std::uint64_t hi = 1;
          std::uint64_t lo = 1;
          for (int k = 0; k < spec.d; ++k) {
            hi *= i;
            lo *= i - 1;
          }
          out.p[i - 1] = static_cast<double>(hi - lo) / denom;
        }
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          out.p[i - 1] = std::pow(static_cast<double>(i) / nd, spec.d) -
                         std::pow(static_cast<double>(i - 1) / nd, spec.d);
        }
      }
      break;
    }
    case ProcessKind::OnePlusBeta: {
      if (!(spec.beta > 0.0 && spec.beta <= 1.0)) throw InvalidParameter("beta must lie in (0,1]");
      // p_i = (1-beta)/n + beta (2i-1)/n^2, evaluated in extended precision and rounded once.
      const long double ln = nd;
      const long double lb = spec.beta;
      for (std::size_t i = 1; i <= n; ++i) {
        const long double two = static_cast<long double>(2 * i - 1) / (ln * ln);
        out.p[i - 1] = static_cast<double>((1.0L - lb) / ln + lb * two);
      }
      break;
    }
    case ProcessKind::Quantile: {
      if (!(spec.delta > 0.0 && spec.delta <= 1.0)) throw InvalidParameter("quantile delta must lie in (0,1]");
      const double heavy = spec.delta * nd;
      if (std::abs(heavy - std::round(heavy)) > 1e-9) {
        throw InvalidParameter("quantile delta * n must be integral");
      }
      const auto k = static_cast<std::size_t>(std::llround(heavy));
      for (std::size_t i = 0; i < n; ++i) {
        out.p[i] = i < k ? spec.delta / nd : (1.0 + spec.delta) / nd;
      }
      break;
    }
    case ProcessKind::Graphical:
      throw InvalidParameter("graphical vectors depend on the load state; use graphical_probability_vector");
  }
  return out;
}

ProbabilityVector tie_break_average(const ProbabilityVector& p, const NormalizedLoads& y) {
  if (p.n() != y.n()) throw InvalidParameter("probability vector and loads differ in length");
  ProbabilityVector out = p;
  std::size_t start = 0;
  while (start < y.n()) {
    std::size_t end = start + 1;
    while (end < y.n() && y.y[end] == y.y[start]) ++end;
    if (end - start > 1) {
      double s = 0.0;
      double lo = p.p[start];
      double hi = p.p[start];
      for (std::size_t i = start; i < end; ++i) {
        s += p.p[i];
        lo = std::min(lo, p.p[i]);
        hi = std::max(hi, p.p[i]);
      }
      // Rounding can push the quotient just outside the block's range.
      const double avg = std::clamp(s / static_cast<double>(end - start), lo, hi);
      std::fill(out.p.begin() + static_cast<std::ptrdiff_t>(start),
                out.p.begin() + static_cast<std::ptrdiff_t>(end), avg);
    }
    start = end;
  }
  return out;
}

ProbabilityVector worst_case_vector(std::size_t n, double delta, double epsilon) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0,1)");
  const std::size_t k = heavy_rank_count(n, delta);
  const double nd = static_cast<double>(n);
  const double eps_tilde = epsilon * delta / (1.0 - delta);
  ProbabilityVector q;
  q.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) q.p[i] = i < k ? (1.0 - epsilon) / nd : (1.0 + eps_tilde) / nd;
  return q;
}

ConditionReport check_D0(const ProbabilityVector& p) {
  ConditionReport r;
  for (std::size_t i = 1; i < p.n(); ++i) {
    if (p.p[i] < p.p[i - 1] - tolerance(p.n())) return fail_at(r, i + 1, p.p[i]);
  }
  return r;
}

ConditionReport check_D1(const ProbabilityVector& p, double delta, double epsilon) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0,1)");
  ConditionReport r;
  r.delta = delta;
  r.epsilon = epsilon;
  const std::size_t k = heavy_rank_count(p.n(), delta);
  const double bound = (1.0 - epsilon) / static_cast<double>(p.n());
  if (p.p[k - 1] > bound + tolerance(p.n())) return fail_at(r, k, p.p[k - 1]);
  return r;
}

ConditionReport check_D2(const ProbabilityVector& p, double C) {
  ConditionReport r = check_C2(p, C);
  return r;
}

ConditionReport check_C1(const ProbabilityVector& p, double delta, double epsilon) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameter("epsilon must lie in (0,1)");
  ConditionReport r;
  r.delta = delta;
  r.epsilon = epsilon;
  const std::size_t n = p.n();
  const double nd = static_cast<double>(n);
  const std::size_t heavy = heavy_rank_count(n, delta);
  const double tol = tolerance(n);

  double prefix = 0.0;
  for (std::size_t k = 1; k <= heavy; ++k) {
    prefix += p.p[k - 1];
    if (prefix > (1.0 - epsilon) * static_cast<double>(k) / nd + tol) return fail_at(r, k, prefix);
  }
  const double factor = 1.0 + epsilon * delta / (1.0 - delta);
  double suffix = 0.0;
  for (std::size_t k = n; k > heavy; --k) {
    suffix += p.p[k - 1];
    if (suffix < factor * static_cast<double>(n - k + 1) / nd - tol) return fail_at(r, k, suffix);
  }
  return r;
}

ConditionReport check_C2(const ProbabilityVector& p, double C) {
  ConditionReport r;
  r.C = C;
  const auto it = std::max_element(p.p.begin(), p.p.end());
  if (*it > C / static_cast<double>(p.n()) + tolerance(p.n())) {
    return fail_at(r, static_cast<std::size_t>(it - p.p.begin()) + 1, *it);
  }
  r.witness_k = static_cast<std::size_t>(it - p.p.begin()) + 1;
  r.witness_value = *it;
  return r;
}

bool majorizes(const ProbabilityVector& p, const ProbabilityVector& q) {
  if (p.n() != q.n()) throw InvalidParameter("majorization needs vectors of equal length");
  const double tol = 1e-12;
  double sp = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < p.n(); ++k) {
    sp += p.p[k];
    sq += q.p[k];
    if (sp < sq - tol) return false;
  }
  return true;
}

}  // namespace bbins
