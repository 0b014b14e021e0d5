#include <doctest.h>

#include <cmath>

#include "pushedfront/bbm_sim.hpp"
#include "pushedfront/errors.hpp"
#include "pushedfront/genealogy.hpp"

using namespace pushedfront;

namespace {

NodeRecord node(std::uint32_t parent, std::uint32_t first_child, double birth, double death, double x,
                DeathCause cause, std::uint8_t bit) {
  NodeRecord n;
  n.parent = parent;
  n.first_child = first_child;
  n.birth = birth;
  n.death = death;
  n.x_death = x;
  n.cause = cause;
  n.planar_bit = bit;
  return n;
}

// root branches at 3; its right child (id 2, bit 0 -> drawn left) branches at 6.
//   planar order of leaves: 4, 3 (children of 2, bits 0 / 1), then 1
GenealogyForest toy() {
  GenealogyForest f;
  f.horizon = 10.0;
  const auto B = DeathCause::Branched, A = DeathCause::AliveAtHorizon;
  f.nodes = {node(kNoNode, 1, 0, 3, 1.0, B, 0), node(0, kNoNode, 3, 10, 2.0, A, 1),
             node(0, 3, 3, 6, 1.5, B, 0),       node(2, kNoNode, 6, 10, 3.0, A, 1),
             node(2, kNoNode, 6, 10, 4.0, A, 0)};
  f.snapshot_times = {5.0};
  f.snapshots = {{{1, 2.2}, {2, 1.1}}};
  return f;
}

}  // namespace

TEST_SUITE("genealogy") {

TEST_CASE("planar extraction and distances") {
  const auto s = extract_mmm(toy(), 10.0);
  REQUIRE(s.size() == 3);
  CHECK(s.leaves()[0].node == 4);
  CHECK(s.leaves()[1].node == 3);
  CHECK(s.leaves()[2].node == 1);
  CHECK(s.distance(0, 1) == 4.0);
  CHECK(s.distance(1, 2) == 7.0);
  CHECK(s.distance(0, 2) == 7.0);
  CHECK(s.distance(1, 1) == 0.0);
  CHECK(s.mark(2) == 2.0);
  CHECK(s.total_mass() == 3.0);
  CHECK(is_ultrametric(s.distance_matrix(), 3));
  const auto r = extract_mmm(toy(), 10.0, 2.0);
  CHECK(r.distance(0, 1) == 2.0);
  CHECK(r.total_mass() == 1.5);
}

TEST_CASE("snapshot extraction") {
  const auto s = extract_mmm(toy(), 5.0);
  REQUIRE(s.size() == 2);
  CHECK(s.distance(0, 1) == 2.0);
  CHECK_THROWS_AS(extract_mmm(toy(), 4.0), ConfigError);
  auto capped = toy();
  capped.capped = true;
  CHECK_THROWS(extract_mmm(capped, 10.0));
}

TEST_CASE("single particle and extinct forests") {
  GenealogyForest f;
  f.horizon = 1.0;
  f.nodes = {node(kNoNode, kNoNode, 0, 1, 0.7, DeathCause::AliveAtHorizon, 0)};
  const auto s = extract_mmm(f, 1.0, 10.0);
  CHECK(s.size() == 1);
  CHECK(s.adjacent().empty());
  CHECK(s.total_mass() == doctest::Approx(0.1));
  f.nodes[0].cause = DeathCause::Absorbed0;
  f.nodes[0].death = 0.4;
  CHECK(extract_mmm(f, 1.0).empty());
}

TEST_CASE("uniform k-samples") {
  const auto s = extract_mmm(toy(), 10.0);
  RandomStream rng(3, 0, kTestStream);
  CHECK_THROWS_AS(sample_uniform_k(s, 0, rng), ConfigError);
  const auto one = sample_uniform_k(s, 1, rng);
  CHECK(one.marks.size() == 1);
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < 30000; ++i) counts[sample_uniform_k(s, 1, rng).leaves[0]] += 1;
  for (double c : counts) CHECK(std::abs(c - 10000) < 3 * std::sqrt(10000 * 2.0 / 3));
  // two-leaf sample: the off-diagonal distance or 0 with probability 1/2 each
  GenealogyForest pair;
  pair.horizon = 2.0;
  pair.nodes = {node(kNoNode, 1, 0, 0.5, 1, DeathCause::Branched, 0), node(0, kNoNode, 0.5, 2, 1, DeathCause::AliveAtHorizon, 0),
                node(0, kNoNode, 0.5, 2, 1, DeathCause::AliveAtHorizon, 1)};
  const auto p = extract_mmm(pair, 2.0);
  int zero = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto k = sample_uniform_k(p, 2, rng);
    const double d = k.dist[1];
    CHECK((d == 0.0 || d == 1.5));
    zero += d == 0.0;
  }
  CHECK(std::abs(zero - 10000) < 3 * std::sqrt(5000.0));
}

TEST_CASE("polynomials against brute force") {
  const auto s = extract_mmm(toy(), 10.0, 2.0);
  const double w = s.leaf_weight();
  PolynomialSpec mass;
  mass.phi = {[](double) { return 1.0; }};
  CHECK(evaluate_polynomial(s, mass).value == doctest::Approx(s.total_mass()));
  PolynomialSpec fact;
  fact.phi = {[](double) { return 1.0; }, [](double) { return 1.0; }};
  fact.distinct = true;
  CHECK(evaluate_polynomial(s, fact).value == doctest::Approx(3.0 * 2.0 * w * w));
  // psi = 1{d <= 2.5} on rescaled distances, phi = marks
  PolynomialSpec ind;
  ind.psi = [](int, int, double d) { return d <= 2.5 ? 1.0 : 0.0; };
  ind.phi = {[](double x) { return x; }, [](double x) { return x * x; }};
  double brute = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      brute += (s.distance(i, j) <= 2.5) * s.mark(i) * s.mark(j) * s.mark(j) * w * w;
  const auto v = evaluate_polynomial(s, ind);
  CHECK(v.exhaustive);
  CHECK(v.value == doctest::Approx(brute));
  // k = 4 goes through Monte Carlo
  PolynomialSpec four;
  four.phi.assign(4, [](double) { return 1.0; });
  four.mc_samples = 20000;
  const auto m = evaluate_polynomial(s, four);
  CHECK_FALSE(m.exhaustive);
  CHECK(std::abs(m.value - std::pow(s.total_mass(), 4)) <= 3 * m.se + 1e-12);
  // distinct tuples on a too-small sample give the empty sum
  PolynomialSpec big;
  big.phi.assign(4, [](double) { return 1.0; });
  big.distinct = true;
  CHECK(evaluate_polynomial(s, big).value == 0.0);
}

TEST_CASE("ultrametric check") {
  CHECK(is_ultrametric({0, 2, 2, 2, 0, 1, 2, 1, 0}, 3));
  CHECK_FALSE(is_ultrametric({0, 2, 3, 2, 0, 1, 3, 1, 0}, 3));
}

}  // TEST_SUITE
