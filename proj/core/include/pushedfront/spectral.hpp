#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pushedfront/grid.hpp"
#include "pushedfront/potential.hpp"
#include "pushedfront/prufer.hpp"

namespace pushedfront {

enum class Regime { Pulled, Semipushed, FullyPushed };

std::string to_string(Regime regime);

struct RegimeConstants {
  Regime regime = Regime::Pulled;
  double lambda1_inf = 0.0;
  double mu = 1.0;     // critical drift
  double beta = 0.0;   // decay rate of the bound state
  double alpha = 1.0;  // (mu + beta) / (mu - beta)
};

RegimeConstants classify_regime(double lambda1_inf);

// Top eigenvalue of the Dirichlet problem on [0, L] with exactly k - 1 interior zeros (k >= 1).
// `upper_hint` (if finite) is a known upper bound, e.g. the previous eigenvalue.
double eigenvalue(const Potential& potential, double L, int k,
                  double upper_hint = std::numeric_limits<double>::infinity());

// Bound state of the half-line problem: v(1) = 1, v = exp(-beta (x - 1)) for x >= 1.
class LimitProfile {
 public:
  static LimitProfile compute(const Potential& potential, bool cross_validate = true);

  bool bound() const { return constants_.lambda1_inf > 0.0; }
  const RegimeConstants& constants() const { return constants_; }
  double lambda() const { return constants_.lambda1_inf; }

  double value(double x) const;
  double derivative(double x) const;
  // Integral of v^2 over [0, inf).
  double norm2() const;
  // Integral of exp(-rate x) v(x) over [0, inf); needs rate > -beta.
  double exp_moment(double rate) const;
  // Integral over [0, inf) of r(x) exp(a x) v(x)^3, closed-form tail; needs a < 3 beta.
  double weighted_cube(double a) const;

  double tilde_c() const;  // RegimeError without a bound state
  double sigma2() const;   // RegimeError unless fully pushed
  double h_inf(double x) const;
  double tilde_h_inf(double x) const;
  double pi_inf(double x) const;

  const Grid& grid() const { return grid_; }

 private:
  Potential potential_ = Potential::zero();
  RegimeConstants constants_;
  Grid grid_;
  std::vector<double> v_, dv_;
};

// Half-line top eigenvalue (0 when there is no bound state).
double limit_top_eigenvalue(const Potential& potential);

struct SpectralOptions {
  double t_min = 0.05;           // smallest time at which eigen-series are evaluated
  double series_tolerance = 1e-12;
  double grid_spacing = 5e-3;
  int n_terms = 0;               // 0: choose from t_min and series_tolerance
  int max_terms = 5000;
  bool with_limit = true;        // compute the half-line constants as well
};

// Eigenpairs of (1/2) v'' + (1/2) W v = lambda v on [0, L], Dirichlet, plus the
// half-line constants. Immutable after construction.
class SpectralData {
 public:
  SpectralData(Potential potential, double L, SpectralOptions options = {});

  const Potential& potential() const { return potential_; }
  double L() const { return L_; }
  const Grid& grid() const { return grid_; }
  const SpectralOptions& options() const { return options_; }
  double t_min() const { return options_.t_min; }

  std::size_t size() const { return lambdas_.size(); }
  const std::vector<double>& eigenvalues() const { return lambdas_; }
  double lambda(std::size_t i) const { return lambdas_[i]; }  // i = 0 is the top eigenvalue
  int positive_count() const;

  // Unit-L2 eigenfunctions with positive slope at 0, tabulated on grid().
  std::span<const double> mode(std::size_t i) const;
  std::span<const double> mode_derivative(std::size_t i) const;
  double mode_value(std::size_t i, double x) const;
  double mode_slope(std::size_t i, double x) const;
  // L2 norm of the eigenfunction normalised by u'(0) = 1.
  double norm(std::size_t i) const { return norms_[i]; }
  int zeros(std::size_t i) const { return zeros_[i]; }

  // Top eigenfunction scaled so that v1(1) = 1.
  double v1(double x) const;
  double v1_slope(double x) const;
  double v1_norm2() const { return v1_norm2_; }
  double v1_scale() const { return v1_scale_; }  // v1 = v1_scale * mode(0)

  const LimitProfile& limit() const { return limit_; }
  const RegimeConstants& constants() const { return limit_.constants(); }
  double lambda1_inf() const { return constants().lambda1_inf; }
  double mu() const { return constants().mu; }
  double beta() const { return constants().beta; }
  double alpha() const { return constants().alpha; }
  Regime regime() const { return constants().regime; }
  std::optional<double> tilde_c() const;
  std::optional<double> sigma2() const;

  // Finite-domain harmonic pair; normalisation constant falls back to 1 without a bound state.
  double h(double t, double x) const;
  double tilde_h(double t, double x) const;
  double Pi(double x) const;

  // Truncation bound exp((lambda_M - lambda_1) t) of the eigen-series at time t.
  double truncation_bound(double t) const;

 private:
  double c_tilde_or_one() const;

  Potential potential_;
  double L_;
  SpectralOptions options_;
  Grid grid_;
  std::vector<double> lambdas_;
  std::vector<double> modes_, slopes_;  // row-major: mode i at offset i * grid.size()
  std::vector<double> norms_;
  std::vector<int> zeros_;
  double v1_scale_ = 1.0, v1_norm2_ = 1.0;
  LimitProfile limit_;
};

// Half-line harmonic data and the population-size cutoff.
struct HarmonicData {
  double N = 0.0;
  double cutoff = 0.0;  // log N / (mu - beta), rounded up to the grid spacing
  double tilde_c = 0.0;
  double norm_inf2 = 0.0;
  double sigma2 = 0.0;
};

double cutoff_length(const RegimeConstants& constants, double N, double spacing = 5e-3);
HarmonicData harmonic_data(const LimitProfile& limit, double N, double spacing = 5e-3);
HarmonicData harmonic_data(const SpectralData& spectral, double N);

struct NegativeModeCheck {
  int k = 0;
  double lambda = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  bool near_pole = false;
  bool flagged = false;  // residual above tolerance away from a pole
};

struct NegativeSpectrumReport {
  double L = 0.0;
  double height = 0.0;
  int positive_count = 0;
  std::vector<NegativeModeCheck> modes;
  double max_residual = 0.0;  // over modes away from tangent poles
};

// Both sides of the matching condition for a negative eigenvalue of the step potential.
NegativeModeCheck step_matching_residual(double lambda, double L, double height);

// Checks the first `count` negative eigenvalues of height * 1_[0,1] against the matching condition.
NegativeSpectrumReport verify_negative_spectrum(double L, int count = 3, double height = 10.0,
                                                double tolerance = 1e-6);

}  // namespace pushedfront
