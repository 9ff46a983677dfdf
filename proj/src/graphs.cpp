#include "bbins/graphs.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "bbins/error.hpp"

namespace bbins {

std::vector<std::vector<std::uint32_t>> RegularGraph::adjacency() const {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

namespace {

bool is_connected(std::size_t n, const std::vector<std::vector<std::uint32_t>>& adj) {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

bool is_simple(const RegularGraph& g) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (auto [u, v] : g.edges) {
    if (u == v) return false;
    if (!seen.emplace(std::min(u, v), std::max(u, v)).second) return false;
  }
  return true;
}

}  // namespace

void RegularGraph::validate() const {
  if (n < 2) throw InvalidParameter("graph needs at least two vertices");
  if (edges.size() * 2 != n * d) throw InvalidParameter("edge count differs from n*d/2");
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw InvalidParameter("edge endpoint out of range");
  }
  if (!is_simple(*this)) throw InvalidParameter("graph has a self-loop or parallel edge");
  const auto adj = adjacency();
  for (std::size_t v = 0; v < n; ++v) {
    if (adj[v].size() != d) throw InvalidParameter("vertex " + std::to_string(v) + " is not of degree d");
  }
  if (!is_connected(n, adj)) throw InvalidParameter("graph is not connected");
}

RegularGraph make_cycle(std::size_t n) {
  if (n < 3) throw InvalidParameter("cycle needs n >= 3");
  RegularGraph g{n, 2, {}};
  for (std::size_t i = 0; i < n; ++i) {
    g.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>((i + 1) % n));
  }
  return g;
}

RegularGraph make_hypercube(std::size_t dim) {
  if (dim < 1 || dim > 20) throw InvalidParameter("hypercube dimension must lie in [1, 20]");
  const std::size_t n = std::size_t{1} << dim;
  RegularGraph g{n, dim, {}};
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t b = 0; b < dim; ++b) {
      const std::size_t u = v ^ (std::size_t{1} << b);
      if (v < u) g.edges.emplace_back(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(u));
    }
  }
  return g;
}

RegularGraph make_complete(std::size_t n) {
  if (n < 2) throw InvalidParameter("complete graph needs n >= 2");
  RegularGraph g{n, n - 1, {}};
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      g.edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
    }
  }
  return g;
}

RegularGraph make_random_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (d < 1 || d >= n) throw InvalidParameter("random regular graph needs 1 <= d < n");
  if ((n * d) % 2 != 0) throw InvalidParameter("n*d must be even");
  Rng rng(mix64(seed));
  std::vector<std::uint32_t> points(n * d);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = static_cast<std::uint32_t>(i / d);
    // Fisher-Yates, then pair consecutive points.
    for (std::size_t i = points.size() - 1; i > 0; --i) {
      std::swap(points[i], points[uniform_index(rng, i + 1)]);
    }
    RegularGraph g{n, d, {}};
    g.edges.reserve(points.size() / 2);
    for (std::size_t i = 0; i < points.size(); i += 2) g.edges.emplace_back(points[i], points[i + 1]);
    if (!is_simple(g)) continue;
    if (!is_connected(n, g.adjacency())) continue;
    return g;
  }
  throw GenerationFailure("pairing model did not produce a simple connected graph in 1000 attempts");
}

RegularGraph read_graph(std::istream& in) {
  RegularGraph g;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long a = -1;
    long long b = -1;
    if (!(ls >> a >> b) || a < 0 || b < 0) throw ParseError("expected two non-negative integers", lineno, 1);
    std::string rest;
    if (ls >> rest) throw ParseError("trailing content '" + rest + "'", lineno, 1);
    if (!have_header) {
      g.n = static_cast<std::size_t>(a);
      g.d = static_cast<std::size_t>(b);
      have_header = true;
    } else {
      g.edges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
    }
  }
  if (!have_header) throw ParseError("missing 'n d' header", lineno, 1);
  g.validate();
  return g;
}

RegularGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path + "'");
  return read_graph(in);
}

void write_graph(std::ostream& out, const RegularGraph& g) {
  out << g.n << ' ' << g.d << '\n';
  for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
}

namespace {

struct Candidate {
  std::uint64_t cut = 1;
  std::uint64_t volume = 0;  // 0 marks "none yet"
  std::uint64_t mask = 0;
};

// a < b on cut/volume, ties broken by the smaller mask
bool better(const Candidate& a, const Candidate& b) {
  if (b.volume == 0) return a.volume != 0;
  if (a.volume == 0) return false;
  const auto lhs = static_cast<__uint128_t>(a.cut) * b.volume;
  const auto rhs = static_cast<__uint128_t>(b.cut) * a.volume;
  if (lhs != rhs) return lhs < rhs;
  return a.mask < b.mask;
}

std::vector<std::uint64_t> neighbour_masks(const RegularGraph& g) {
  std::vector<std::uint64_t> nbr(g.n, 0);
  for (auto [u, v] : g.edges) {
    nbr[u] |= std::uint64_t{1} << v;
    nbr[v] |= std::uint64_t{1} << u;
  }
  return nbr;
}

Candidate evaluate(std::uint64_t mask, const std::vector<std::uint64_t>& nbr, std::size_t d,
                   std::size_t half) {
  const auto size = static_cast<std::size_t>(std::popcount(mask));
  if (size == 0 || size > half) return {};
  std::uint64_t cut = 0;
  for (std::uint64_t rest = mask; rest != 0; rest &= rest - 1) {
    const int v = std::countr_zero(rest);
    cut += static_cast<std::uint64_t>(std::popcount(nbr[static_cast<std::size_t>(v)] & ~mask));
  }
  return {cut, static_cast<std::uint64_t>(size * d), mask};
}

ConductanceResult finish(const Candidate& best, std::size_t n) {
  ConductanceResult r;
  r.cut_edges = best.cut;
  r.volume = best.volume;
  r.phi = static_cast<double>(best.cut) / static_cast<double>(best.volume);
  for (std::size_t v = 0; v < n; ++v) {
    if (best.mask >> v & 1U) r.witness_set.push_back(v);
  }
  return r;
}

void check_exact_size(const RegularGraph& g) {
  if (g.n > kMaxExactConductanceVertices) {
    throw TooLarge("exact conductance is limited to " + std::to_string(kMaxExactConductanceVertices) +
                   " vertices; supply the value for larger graphs");
  }
  g.validate();
}

}  // namespace

ConductanceResult conductance_exact_serial(const RegularGraph& g) {
  check_exact_size(g);
  const auto nbr = neighbour_masks(g);
  const std::size_t half = g.n / 2;
  const std::uint64_t limit = std::uint64_t{1} << g.n;
  Candidate best;
  for (std::uint64_t mask = 1; mask < limit; ++mask) {
    const Candidate c = evaluate(mask, nbr, g.d, half);
    if (better(c, best)) best = c;
  }
  return finish(best, g.n);
}

ConductanceResult conductance_exact(const RegularGraph& g) {
  check_exact_size(g);
  const auto nbr = neighbour_masks(g);
  const std::size_t half = g.n / 2;
  const auto limit = static_cast<std::int64_t>(std::uint64_t{1} << g.n);
  Candidate best;
#pragma omp parallel
  {
    Candidate local;
#pragma omp for schedule(static) nowait
    for (std::int64_t mask = 1; mask < limit; ++mask) {
      const Candidate c = evaluate(static_cast<std::uint64_t>(mask), nbr, g.d, half);
      if (better(c, local)) local = c;
    }
#pragma omp critical(bbins_conductance)
    {
      if (better(local, best)) best = local;
    }
  }
  return finish(best, g.n);
}

std::uint64_t cut_size(const RegularGraph& g, const std::vector<std::size_t>& subset) {
  std::vector<char> in(g.n, 0);
  for (auto v : subset) in.at(v) = 1;
  std::uint64_t cut = 0;
  for (auto [u, v] : g.edges) cut += in[u] != in[v] ? 1 : 0;
  return cut;
}

std::vector<std::uint64_t> graphical_half_counts(const RegularGraph& g, const NormalizedLoads& y,
                                                 const std::vector<std::size_t>& rank_of_vertex) {
  if (y.n() != g.n || rank_of_vertex.size() != g.n) {
    throw InvalidParameter("graph, loads and rank permutation differ in size");
  }
  std::vector<std::uint64_t> counts(g.n, 0);
  for (auto [u, v] : g.edges) {
    const std::size_t ru = rank_of_vertex[u];
    const std::size_t rv = rank_of_vertex[v];
    const double yu = y.y[ru];
    const double yv = y.y[rv];
    if (yu < yv) {
      counts[ru] += 2;
    } else if (yv < yu) {
      counts[rv] += 2;
    } else {
      counts[ru] += 1;
      counts[rv] += 1;
    }
  }
  return counts;
}

ProbabilityVector graphical_probability_vector(const RegularGraph& g, const NormalizedLoads& y,
                                               const std::vector<std::size_t>& rank_of_vertex) {
  const auto counts = graphical_half_counts(g, y, rank_of_vertex);
  const double denom = 2.0 * static_cast<double>(g.edge_count());
  ProbabilityVector p;
  p.p.reserve(g.n);
  for (auto c : counts) p.p.push_back(static_cast<double>(c) / denom);
  return p;
}

ConditionReport verify_expansion_bounds(const RegularGraph& g, const NormalizedLoads& y,
                                        const std::vector<std::size_t>& rank_of_vertex, double phi) {
  const auto p = graphical_probability_vector(g, y, rank_of_vertex);
  const std::size_t n = g.n;
  const double nd = static_cast<double>(n);
  const double tol = 1e-12;
  ConditionReport r;
  r.delta = 0.5;
  r.epsilon = phi;
  r.C = static_cast<double>(g.d);
  auto fail = [&](std::size_t k, double v) {
    r.holds = false;
    r.witness_k = k;
    r.witness_value = v;
    return r;
  };
  double prefix = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    prefix += p.p[k - 1];
    if (prefix > (1.0 - phi) * static_cast<double>(k) / nd + tol) return fail(k, prefix);
  }
  double suffix = 0.0;
  // Suffix bound applies from k = n/2 + 1, which for odd n is the rank after ceil(n/2).
  for (std::size_t k = n; k > (n + 1) / 2; --k) {
    suffix += p.p[k - 1];
    if (suffix < (1.0 + phi) * static_cast<double>(n - k + 1) / nd - tol) return fail(k, suffix);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (p.p[i] > static_cast<double>(g.d) / nd + tol) return fail(i + 1, p.p[i]);
  }
  return r;
}

}  // namespace bbins
