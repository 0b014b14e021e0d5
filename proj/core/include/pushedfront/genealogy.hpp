#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pushedfront/bbm_sim.hpp"
#include "pushedfront/rng.hpp"

namespace pushedfront {

struct Leaf {
  std::uint32_t node;
  double mark;
};

// Alive population at time t in planar (left-to-right) order. Distances come from the
// planar representation: d(i, j) = max of the adjacent distances between i and j.
class MarkedSample {
 public:
  MarkedSample() = default;
  MarkedSample(double time, std::vector<Leaf> leaves, std::vector<double> adjacent,
               std::optional<double> rescale_N);

  double time() const { return time_; }
  std::size_t size() const { return leaves_.size(); }
  bool empty() const { return leaves_.empty(); }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  double mark(std::size_t i) const { return leaves_[i].mark; }
  const std::vector<double>& adjacent() const { return adjacent_; }
  std::optional<double> rescale_N() const { return rescale_N_; }
  double leaf_weight() const { return rescale_N_ ? 1.0 / *rescale_N_ : 1.0; }
  double total_mass() const { return leaf_weight() * static_cast<double>(size()); }

  double distance(std::size_t i, std::size_t j) const;
  std::vector<double> distance_matrix() const;  // row-major size() x size()

 private:
  double time_ = 0.0;
  std::vector<Leaf> leaves_;
  std::vector<double> adjacent_;
  std::optional<double> rescale_N_;
  std::vector<std::vector<double>> sparse_;  // sparse_[j][i] = max adjacent_[i .. i + 2^j - 1]
};

// Alive particles at t (the horizon or a snapshot time) with genealogical distances
// t - |v ^ w|, divided by N when rescale_N is given.
MarkedSample extract_mmm(const GenealogyForest& forest, double t,
                         std::optional<double> rescale_N = std::nullopt);

struct KSample {
  std::size_t k = 0;
  std::vector<std::size_t> leaves;
  std::vector<double> dist;  // row-major k x k
  std::vector<double> marks;
};

// k leaves uniformly with replacement.
KSample sample_uniform_k(const MarkedSample& sample, int k, RandomStream& rng);

struct PolynomialSpec {
  // psi(i, j, d) for i < j; empty means 1.
  std::function<double(int, int, double)> psi;
  std::vector<std::function<double(double)>> phi;  // k = phi.size()
  bool distinct = false;
  std::size_t mc_samples = 200'000;
  std::uint64_t seed = 0;
};

struct PolynomialValue {
  double value = 0.0;
  double se = 0.0;
  bool exhaustive = true;
};

// Sum over ordered k-tuples of leaves of prod_{i<j} psi(d) prod_i phi_i(x), each leaf
// weighted by the sample's leaf weight. Exhaustive for k <= 3, Monte Carlo beyond.
PolynomialValue evaluate_polynomial(const MarkedSample& sample, const PolynomialSpec& spec);

bool is_ultrametric(const std::vector<double>& dist, std::size_t k, double tol = 0.0);

}  // namespace pushedfront
