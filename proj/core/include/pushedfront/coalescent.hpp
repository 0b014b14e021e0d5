#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pushedfront/rng.hpp"
#include "pushedfront/spectral.hpp"

namespace pushedfront {

// Probability density on [0, inf): tabulated on [0, split] plus an optional exponential tail
// rate * exp(-rate (x - split)) carrying the remaining mass.
class MarkDensity {
 public:
  // h~inf = c~ e^{-mu x} v1inf(x); needs a bound state.
  static MarkDensity tilde_h_inf(const LimitProfile& limit);
  // pdf on [lo, hi] (normalised numerically), no tail.
  static MarkDensity from_pdf(std::function<double(double)> pdf, double lo, double hi,
                              std::size_t cells = 4000);

  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  double sample(RandomStream& rng) const { return quantile(rng.uniform()); }
  // Integral of f against the density.
  double integrate(const std::function<double(double)>& f) const;
  double upper() const;  // effective upper end for integration

 private:
  std::function<double(double)> pdf_;
  double lo_ = 0.0, split_ = 1.0, tail_rate_ = 0.0, tail_mass_ = 0.0, scale_ = 1.0;
  std::vector<double> x_, cdf_;
};

// Law of the pairwise distance H_{1,2} at depth t: P(H <= s) with p = s/t equals
// 2p(p - 1 - log p) / (1 - p)^2.
double h12_cdf(double s, double t);

struct HMatrix {
  int k = 2;
  double t = 1.0;
  double theta = 0.0;
  std::vector<double> U;       // U^theta_1 .. U^theta_{k-1}
  std::vector<int> sigma;
  std::vector<double> dist;    // k x k, H_{sigma_i, sigma_j}
  std::vector<double> marks;   // empty unless a mark density was given
};

HMatrix sample_H(int k, double t, RandomStream& rng, const MarkDensity* marks = nullptr);

struct CppAtom {
  double t;  // height
  double y;  // position along the spine of length Y
};

struct CPPSample {
  double T = 1.0;
  double t_floor = 1e-4;
  double Y = 0.0;
  bool capped = false;
  std::vector<CppAtom> atoms;  // sorted by y

  // Genealogical distance of the leaves at y1, y2 in [0, Y]: largest atom height between them.
  double distance(double y1, double y2) const;
};

CPPSample sample_cpp(double T, double t_floor, RandomStream& rng,
                     std::size_t max_atoms = 50'000'000);

struct CppMoment {
  double value = 0.0;
  double se = 0.0;
  bool quadrature = true;
};

struct CppMomentOptions {
  std::size_t mc_samples = 1'000'000;
  std::uint64_t seed = 0;
  double mark_mass = 1.0;  // |m|
};

// k! T^k E[prod_{i<j} psi(U_{sigma_i, sigma_j})] prod_i |m| int phi_i dm/|m|.
CppMoment cpp_moment(double T, const std::function<double(int, int, double)>& psi,
                     const std::vector<std::function<double(double)>>& phi,
                     const MarkDensity& marks, const CppMomentOptions& options = {});

}  // namespace pushedfront
