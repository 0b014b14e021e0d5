#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pushedfront/rng.hpp"
#include "pushedfront/spectral.hpp"

namespace pushedfront {

struct SpineSamplerOptions {
  double euler_step = 1e-3;     // for durations below the spectral t_min
  int max_halvings = 20;
  double term_tolerance = 1e-13;
};

// Transition sampler for the 1-spine (generator (1/2) d2 + (v1'/v1) d on [0, L]).
class SpineSampler {
 public:
  explicit SpineSampler(const SpectralData& spectral, SpineSamplerOptions options = {});

  const SpectralData& spectral() const { return *spectral_; }

  // Position after duration s started from x.
  double draw(double x, double s, RandomStream& rng) const;
  // Transition CDF P(zeta_s <= y | zeta_0 = x) from the eigen-series (s >= t_min).
  double cdf(double x, double s, double y) const;

 private:
  std::vector<double> coefficients(double x, double s) const;
  double cdf_at_node(const std::vector<double>& c, std::size_t j) const;
  double euler(double x, double s, RandomStream& rng) const;

  const SpectralData* spectral_;
  SpineSamplerOptions options_;
  std::vector<double> integrals_;  // mode k: running integral of phi_1 phi_k on the grid
  std::vector<double> sup_;        // sup |phi_k|
};

// Planar k-spine tree. U[i] separates leaves i and i + 1 (0-based); branch points are listed
// in the order they are created (the root split first).
struct SpineTree {
  int k = 1;
  double depth = 0.0;
  double N = 1.0;  // acceleration factor of the spine kernel
  double root_mark = 0.0;
  std::vector<double> U;
  std::vector<double> branch_times;  // |v|
  std::vector<double> branch_marks;  // zeta_v
  std::vector<double> leaf_marks;    // zeta_{V_1..V_k}

  double U_pair(int i, int j) const;  // max U[min..max-1], 0 on the diagonal
  std::vector<double> umatrix() const;
};

SpineTree sample_kspine(const SpineSampler& sampler, int k, double t, double x0, RandomStream& rng,
                        double accelerate_N = 1.0);

// Bias weight: prod_B r h(|v| N, .) * prod_L 1 / h(t N, .).
double spine_weight(const SpineTree& tree, const SpectralData& spectral);

struct SpineFunctional {
  std::function<double(int, int, double)> psi;      // on pairs i < j of permuted leaves; empty = 1
  std::vector<std::function<double(double)>> phi;   // k = phi.size()
};

struct SpineRecord {
  double weight = 0.0;
  std::vector<double> U_pairs;      // U_{i,j}, i < j, planar labels
  std::vector<double> leaf_marks;   // planar order
  double contribution = 0.0;
};

struct SpineEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t replicas = 0;
  double prefactor = 1.0;
  double top_share = 0.0;   // share of sum |contribution| carried by the largest 1%
  double ess = 0.0;         // effective sample size of the weights
  bool heavy_tail = false;
};

// Mean of Delta * prod psi(U_{sigma_i, sigma_j}) * prod phi(zeta_{V_{sigma_i}}) under the
// (accelerated) k-spine measure.
SpineEstimate spine_expectation(const SpineSampler& sampler, double t, double x0,
                                const SpineFunctional& f, std::size_t replicas, double N,
                                std::uint64_t seed, unsigned threads = 1,
                                std::vector<SpineRecord>* records = nullptr);

// (1/N) k! h(0, x0) t^(k-1) times the expectation above.
SpineEstimate many_to_few_estimate(const SpineSampler& sampler, double t, double x0,
                                   const SpineFunctional& f, std::size_t replicas, double N,
                                   std::uint64_t seed, unsigned threads = 1,
                                   std::vector<SpineRecord>* records = nullptr);

}  // namespace pushedfront
