#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "bbins/error.hpp"
#include "bbins/graphs.hpp"
#include "bbins/rng.hpp"

using namespace bbins;

namespace {

struct Fraction {
  std::uint64_t num;
  std::uint64_t den;
};

// Straightforward enumeration of every vertex subset of size 1..n/2.
Fraction brute_force_conductance(const RegularGraph& g) {
  Fraction best{1, 0};
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << g.n); ++mask) {
    const auto size = static_cast<std::uint64_t>(__builtin_popcountll(mask));
    if (2 * size > g.n) continue;
    std::uint64_t cut = 0;
    for (auto [u, v] : g.edges) cut += ((mask >> u) & 1) != ((mask >> v) & 1);
    const Fraction f{cut, size * g.d};
    if (best.den == 0 || f.num * best.den < best.num * f.den) best = f;
  }
  return best;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[uniform_index(rng, i)]);
  return p;
}

NormalizedLoads strictly_decreasing(std::size_t n) {
  NormalizedLoads y;
  for (std::size_t i = 0; i < n; ++i) y.y.push_back((static_cast<double>(n) - 1.0) / 2.0 - static_cast<double>(i));
  return y;
}

}  // namespace

TEST_SUITE("graphs") {

TEST_CASE("generator shapes") {
  const RegularGraph c6 = make_cycle(6);
  CHECK(c6.n == 6);
  CHECK(c6.edge_count() == 6);
  CHECK(c6.d == 2);
  const RegularGraph h3 = make_hypercube(3);
  CHECK(h3.n == 8);
  CHECK(h3.edge_count() == 12);
  CHECK(h3.d == 3);
  const RegularGraph k4 = make_complete(4);
  CHECK(k4.edge_count() == 6);
  CHECK(k4.d == 3);
  for (const auto& g : {c6, h3, k4}) CHECK_NOTHROW(g.validate());
}

TEST_CASE("random regular graphs") {
  const RegularGraph a = make_random_regular(64, 4, 5);
  CHECK_NOTHROW(a.validate());
  CHECK(a.edge_count() == 128);
  CHECK(a == make_random_regular(64, 4, 5));
  CHECK_FALSE(a == make_random_regular(64, 4, 6));
  CHECK_THROWS_AS(make_random_regular(7, 3, 1), InvalidParameter);
  CHECK_THROWS_AS(make_random_regular(5, 5, 1), InvalidParameter);
}

TEST_CASE("validation rejects malformed graphs") {
  RegularGraph g = make_cycle(4);
  g.edges[0] = {0, 0};
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
  RegularGraph two_triangles{6, 2, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}};
  CHECK_THROWS_AS(two_triangles.validate(), InvalidParameter);
}

TEST_CASE("conductance examples") {
  const ConductanceResult c6 = conductance_exact(make_cycle(6));
  CHECK(c6.phi == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(c6.cut_edges == 2);
  CHECK(c6.volume == 6);
  CHECK(conductance_exact(make_complete(4)).phi == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(conductance_exact(make_hypercube(3)).phi == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("conductance matches brute force and its witness") {
  std::vector<RegularGraph> graphs = {make_cycle(6),     make_cycle(9),         make_complete(4),
                                      make_complete(7),  make_hypercube(3),     make_hypercube(4),
                                      make_random_regular(12, 3, 1), make_random_regular(16, 4, 2),
                                      make_random_regular(14, 3, 3)};
  for (const auto& g : graphs) {
    CAPTURE(g.n);
    const Fraction oracle = brute_force_conductance(g);
    const ConductanceResult r = conductance_exact(g);
    CHECK(r.cut_edges * oracle.den == oracle.num * r.volume);
    CHECK(r.phi == static_cast<double>(r.cut_edges) / static_cast<double>(r.volume));
    CHECK(cut_size(g, r.witness_set) == r.cut_edges);
    CHECK(r.witness_set.size() * g.d == r.volume);
    CHECK(2 * r.witness_set.size() <= g.n);
    const ConductanceResult s = conductance_exact_serial(g);
    CHECK(s.phi == r.phi);
    CHECK(s.witness_set == r.witness_set);
  }
  CHECK_THROWS_AS(conductance_exact(make_cycle(25)), TooLarge);
}

TEST_CASE("graphical vector examples") {
  const RegularGraph c4 = make_cycle(4);
  const std::vector<std::size_t> id = {0, 1, 2, 3};
  const ProbabilityVector flat = graphical_probability_vector(c4, NormalizedLoads{{0, 0, 0, 0}}, id);
  CHECK(flat.p == std::vector<double>(4, 0.25));

  // complete(3), loads (2,1,0) with vertex i at rank i.
  const ProbabilityVector k3 = graphical_probability_vector(make_complete(3), NormalizedLoads{{1, 0, -1}}, {0, 1, 2});
  CHECK(k3.p == std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0});

  // cycle(4) with loads (1,0,1,0) around the cycle: vertices 0 and 2 are the heavy ranks.
  const ProbabilityVector alt =
      graphical_probability_vector(c4, NormalizedLoads{{0.5, 0.5, -0.5, -0.5}}, {0, 2, 1, 3});
  CHECK(alt.p == std::vector<double>{0.0, 0.0, 0.5, 0.5});
}

TEST_CASE("graphical vectors sum to one and respect the degree cap") {
  Rng rng = RngSeedPlan{4, 0}.engine();
  const std::vector<RegularGraph> graphs = {make_cycle(8), make_hypercube(3), make_complete(8),
                                            make_random_regular(12, 3, 7)};
  for (const auto& g : graphs) {
    for (int trial = 0; trial < 500; ++trial) {
      NormalizedLoads y;
      for (std::size_t i = 0; i < g.n; ++i) y.y.push_back(static_cast<double>(uniform_index(rng, 3)));
      std::sort(y.y.begin(), y.y.end(), std::greater<>());
      const auto rank = random_permutation(g.n, rng);
      const auto half = graphical_half_counts(g, y, rank);
      CHECK(std::accumulate(half.begin(), half.end(), std::uint64_t{0}) == 2 * g.edge_count());
      const ProbabilityVector p = graphical_probability_vector(g, y, rank);
      CHECK(p.max() <= static_cast<double>(g.d) / static_cast<double>(g.n) + 1e-12);
    }
  }
}

TEST_CASE("expansion bounds hold on random strict orderings") {
  Rng rng = RngSeedPlan{12, 0}.engine();
  const std::vector<RegularGraph> graphs = {make_cycle(8),  make_hypercube(3), make_complete(8),
                                            make_random_regular(12, 3, 7), make_cycle(6), make_cycle(7),
                                            make_complete(4)};
  for (const auto& g : graphs) {
    CAPTURE(g.n);
    const Fraction phi = brute_force_conductance(g);
    const double phi_d = static_cast<double>(phi.num) / static_cast<double>(phi.den);
    const NormalizedLoads y = strictly_decreasing(g.n);
    std::size_t failures = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const ConditionReport r = verify_expansion_bounds(g, y, random_permutation(g.n, rng), phi_d);
      if (!r.holds) ++failures;
    }
    CHECK(failures == 0);
  }
}

TEST_CASE("expansion bounds on complete(4) over every ordering") {
  const RegularGraph g = make_complete(4);
  std::vector<std::size_t> rank = {0, 1, 2, 3};
  const NormalizedLoads y = strictly_decreasing(4);
  do {
    CHECK(verify_expansion_bounds(g, y, rank, 2.0 / 3.0).holds);
  } while (std::next_permutation(rank.begin(), rank.end()));
}

TEST_CASE("graph file round trip and parse errors") {
  const RegularGraph g = make_random_regular(10, 3, 4);
  std::stringstream ss;
  write_graph(ss, g);
  CHECK(read_graph(ss) == g);

  std::istringstream commented("# a square\n4 2\n0 1\n1 2\n\n2 3  # last\n3 0\n");
  CHECK(read_graph(commented).edge_count() == 4);

  std::istringstream bad("4 2\n0 1\n1 x\n");
  try {
    read_graph(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_graph(empty), ParseError);
  std::istringstream irregular("3 2\n0 1\n1 2\n");
  CHECK_THROWS_AS(read_graph(irregular), InvalidParameter);
}

}  // TEST_SUITE
