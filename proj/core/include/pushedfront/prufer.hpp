#pragma once

#include <cmath>
#include <vector>

#include "pushedfront/grid.hpp"
#include "pushedfront/potential.hpp"

namespace pushedfront {

// Polar coordinates of (u, u') for u'' = (2 lambda - W) u: u = rho sin(theta), u' = rho cos(theta).
// The amplitude is carried as log(rho).
struct PhaseState {
  double theta = 0.0;
  double log_rho = 0.0;
};

struct PruferTrace {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> theta;
  std::vector<double> log_rho;

  double rho(std::size_t i) const { return std::exp(log_rho[i]); }
  double u(std::size_t i) const { return std::exp(log_rho[i]) * std::sin(theta[i]); }
  double du(std::size_t i) const { return std::exp(log_rho[i]) * std::cos(theta[i]); }
  // Number of multiples of pi crossed strictly inside (0, L).
  int interior_zeros() const;
};

// Integrates the phase/amplitude pair from `from` to `to` (to >= from). Pieces where W is
// constant are propagated in closed form; smooth pieces use RK4 with step <= max_step.
PhaseState advance_phase(const Potential& potential, double lambda, PhaseState state, double from,
                         double to, double max_step = 1e-3);

PruferTrace prufer_integrate(const Potential& potential, double lambda, const Grid& grid,
                             double max_step = 1e-3);
PruferTrace prufer_integrate(const Potential& potential, double lambda, double L, double step);

// theta_lambda(x) with theta(0) = 0.
double phase_at(const Potential& potential, double lambda, double x, double max_step = 1e-3);

struct LinearState {
  double u = 0.0;
  double du = 0.0;
};

// Propagates (u, u') for u'' = (2 lambda - W) u in either direction.
LinearState propagate_linear(const Potential& potential, double lambda, LinearState state,
                             double from, double to, double max_step = 1e-3);

}  // namespace pushedfront
