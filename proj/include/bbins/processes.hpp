#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bbins/core.hpp"

namespace bbins {

struct RegularGraph;

/// Allocation probabilities indexed by load rank (index 0 = most loaded bin).
struct ProbabilityVector {
  std::vector<double> p;

  std::size_t n() const { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }
  double max() const;
  double min() const;
  double total() const;
};

enum class ProcessKind { OneChoice, DChoice, OnePlusBeta, Quantile, Graphical };
enum class TieBreaking { Deterministic, Random };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::OneChoice;
  int d = 2;            // DChoice
  double beta = 1.0;    // OnePlusBeta
  double delta = 0.5;   // Quantile
  std::shared_ptr<const RegularGraph> graph;  // Graphical
  TieBreaking tie_breaking = TieBreaking::Deterministic;

  static ProcessSpec one_choice();
  static ProcessSpec two_choice();
  static ProcessSpec d_choice(int d);
  static ProcessSpec one_plus_beta(double beta);
  static ProcessSpec quantile(double delta);
  static ProcessSpec graphical(std::shared_ptr<const RegularGraph> graph);

  ProcessSpec with_ties(TieBreaking t) const {
    ProcessSpec s = *this;
    s.tie_breaking = t;
    return s;
  }

  /// Short label such as "two_choice", "d_choice:3", "one_plus_beta:0.5".
  std::string label() const;

  /// Compares parameters and, for graphical processes, graph contents.
  bool operator==(const ProcessSpec& other) const;
};

/// Inverse of ProcessSpec::label for non-graphical kinds.
ProcessSpec parse_process_label(const std::string& label);

/// Closed-form rank vector of a non-graphical process on n bins.
ProbabilityVector probability_vector(const ProcessSpec& spec, std::size_t n);

/// Replaces p by its average over every block of equal y-values.
ProbabilityVector tie_break_average(const ProbabilityVector& p, const NormalizedLoads& y);

/// (1-eps)/n on the first floor(delta n) ranks, (1 + eps delta/(1-delta))/n on the rest.
ProbabilityVector worst_case_vector(std::size_t n, double delta, double epsilon);

struct ConditionReport {
  bool holds = true;
  double delta = 0.0;
  double epsilon = 0.0;
  double C = 0.0;
  std::optional<std::size_t> witness_k;  // 1-based rank where a bound fails
  std::optional<double> witness_value;   // offending sum or entry
};

/// p is non-decreasing in rank.
ConditionReport check_D0(const ProbabilityVector& p);
/// p_{delta n} <= (1-eps)/n.
ConditionReport check_D1(const ProbabilityVector& p, double delta, double epsilon);
/// max p_i <= C/n.
ConditionReport check_D2(const ProbabilityVector& p, double C);
/// Prefix bound for k <= delta n and suffix bound for k > delta n.
ConditionReport check_C1(const ProbabilityVector& p, double delta, double epsilon);
ConditionReport check_C2(const ProbabilityVector& p, double C);

/// Every prefix sum of p dominates the matching prefix of q.
bool majorizes(const ProbabilityVector& p, const ProbabilityVector& q);

/// (delta, eps) for C1 and C for C2 under which a process is known to satisfy both conditions:
/// (1+beta): (1/4, beta/2, 2); Quantile(q): (q, 1-q, 2); d-choice: (1/4, 1/2, d).
/// One-choice gets (1/4, 1/2, 1) and fails C1.
struct ConditionParams {
  double delta = 0.25;
  double epsilon = 0.5;
  double C = 2.0;
};

ConditionParams verified_parameters(const ProcessSpec& spec);

/// floor(delta n), throwing InvalidParameter when it is zero.
std::size_t heavy_rank_count(std::size_t n, double delta);

}  // namespace bbins
