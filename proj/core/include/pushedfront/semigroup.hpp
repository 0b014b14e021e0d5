#pragma once

#include <functional>
#include <vector>

#include "pushedfront/spectral.hpp"

namespace pushedfront {

// Eigen-series evaluation of the killed drifted heat kernel p_t, its symmetric part g_t and
// the spine kernel q_t. Valid for t >= t_min of the underlying SpectralData.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(const SpectralData& spectral);

  const SpectralData& spectral() const { return *spectral_; }
  std::size_t n_terms() const { return spectral_->size(); }
  double t_min() const { return spectral_->t_min(); }
  double truncation_bound(double t) const { return spectral_->truncation_bound(t); }

  double symmetric(double t, double x, double y) const;
  double heat(double t, double x, double y) const;
  double spine(double t, double x, double y) const;
  // d/dy p_t(x, y)
  double heat_dy(double t, double x, double y) const;

  // Values on spectral().grid().
  std::vector<double> heat_profile(double t, double x) const;
  std::vector<double> spine_profile(double t, double x) const;

  // Integral of p_t(x, .) over [0, L], i.e. the expected population size.
  double mass(double t, double x) const;

 private:
  void check_time(double t) const;
  std::vector<double> weights(double t, double x) const;  // e^{lambda_k t} phi_k(x)

  const SpectralData* spectral_;
  std::vector<double> exp_moments_;  // integral of e^{-mu y} phi_k(y)
};

struct MixingReport {
  std::vector<double> times;
  std::vector<double> sup_ratio;  // sup_y |q_t(x,y) - Pi(y)| / Pi(y)
  double fitted_rate = 0.0;       // -d log(sup_ratio) / dt
  double gap = 0.0;               // lambda_1 - lambda_2
  double threshold = 0.0;         // exp(-beta L)
  double onset = -1.0;            // first sampled time with sup_ratio <= threshold, -1 if none
};

MixingReport mixing_diagnostic(const KernelEvaluator& kernel, double x,
                               const std::vector<double>& times);

// Resolvent of the killed drifted motion at lambda = lambda1_inf + xi, tabulated on the
// spectral grid from the two fundamental solutions.
class GreenFunction {
 public:
  GreenFunction(const SpectralData& spectral, double xi);

  double xi() const { return xi_; }
  double lambda() const { return lambda_; }
  double wronskian() const { return omega_; }
  double wronskian_at(double x) const;

  double phi(double x) const;
  double phi_slope(double x) const;
  double psi(double x) const;
  double psi_slope(double x) const;

  double operator()(double x, double y) const;
  // d/dy G(x, y) for y > x
  double dy_above(double x, double y) const;

 private:
  const SpectralData* spectral_;
  double xi_, lambda_, omega_ = 0.0;
  std::vector<double> phi_, dphi_, psi_, dpsi_;
};

// G_xi(x, y); rejects xi <= 0 and shifts that do not clear the top eigenvalue.
double green_function(const SpectralData& spectral, double xi, double x, double y);

struct EscapeMass {
  double value = 0.0;
  double level = 0.0;       // gamma L
  double resolvent = 0.0;   // contribution of the full-time resolvent
  double tail = 0.0;        // removed contribution of times beyond the horizon
  double truncation = 0.0;  // bound on the neglected tail terms
};

// Expected number of lineages that first reach gamma L before time `horizon`, from x.
EscapeMass escape_mass(const SpectralData& spectral, double gamma, double horizon, double x);

}  // namespace pushedfront
