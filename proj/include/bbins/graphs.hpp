#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bbins/core.hpp"
#include "bbins/processes.hpp"
#include "bbins/rng.hpp"

namespace bbins {

/// Undirected, connected, d-regular simple graph on vertices 0..n-1.
struct RegularGraph {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  std::size_t edge_count() const { return edges.size(); }
  std::vector<std::vector<std::uint32_t>> adjacency() const;
  /// Throws InvalidParameter when the graph is not simple, connected and d-regular.
  void validate() const;

  bool operator==(const RegularGraph&) const = default;
};

RegularGraph make_cycle(std::size_t n);
RegularGraph make_hypercube(std::size_t dim);
RegularGraph make_complete(std::size_t n);
/// Pairing model with rejection until simple and connected; GenerationFailure after 1000 tries.
RegularGraph make_random_regular(std::size_t n, std::size_t d, std::uint64_t seed);

/// Exchange format: header "n d", then one "u v" line per edge (0-based).
RegularGraph read_graph(std::istream& in);
RegularGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const RegularGraph& g);

struct ConductanceResult {
  double phi = 0.0;
  std::uint64_t cut_edges = 0;
  std::uint64_t volume = 0;  // |S| * d
  std::vector<std::size_t> witness_set;
};

inline constexpr std::size_t kMaxExactConductanceVertices = 24;

/// Exact min over 1 <= |S| <= n/2 of |E(S, V\S)| / (|S| d). OpenMP over subsets.
ConductanceResult conductance_exact(const RegularGraph& g);
/// Single-threaded reference of conductance_exact; identical result.
ConductanceResult conductance_exact_serial(const RegularGraph& g);

/// |E(S, V\S)| for an explicit vertex subset.
std::uint64_t cut_size(const RegularGraph& g, const std::vector<std::size_t>& subset);

/// Per-rank allocation mass in units of 1/(2|E|): a vertex earns 2 for each incident edge
/// whose other endpoint is strictly heavier and 1 for each tied edge. Sums to 2|E| exactly.
std::vector<std::uint64_t> graphical_half_counts(const RegularGraph& g, const NormalizedLoads& y,
                                                 const std::vector<std::size_t>& rank_of_vertex);

ProbabilityVector graphical_probability_vector(const RegularGraph& g, const NormalizedLoads& y,
                                               const std::vector<std::size_t>& rank_of_vertex);

/// Prefix bound (1-phi) k/n for k <= n/2, suffix bound (1+phi)(n-k+1)/n beyond, and max <= d/n.
ConditionReport verify_expansion_bounds(const RegularGraph& g, const NormalizedLoads& y,
                                        const std::vector<std::size_t>& rank_of_vertex, double phi);

}  // namespace bbins
