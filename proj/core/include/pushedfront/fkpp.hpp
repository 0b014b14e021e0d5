#pragma once

#include <optional>
#include <vector>

#include "pushedfront/spectral.hpp"

namespace pushedfront {

enum class FkppMode {
  Full,        // r (u - u^2)
  Linearized,  // r u
  NoReaction,  // pure killed drift-diffusion
};

struct FkppOptions {
  double dx = 2.5e-3;
  double dt = 2.5e-3;
  double T_end = 1.0;
  int snapshots = 100;              // equally spaced output times in (0, T_end]
  std::vector<double> probes;       // positions at which u is reported
  FkppMode mode = FkppMode::Full;
  std::optional<double> mu;         // drift override (defaults to the spectral mu)
  bool keep_profiles = false;
  int rannacher_steps = 4;          // backward-Euler half steps at the start
  double min_dt_ratio = 1e-6;       // dt may be halved down to this fraction
};

struct FkppResult {
  double L = 0.0;
  double dx = 0.0;
  std::vector<double> x;                     // grid nodes including both boundaries
  std::vector<double> times;                 // snapshot times
  std::vector<double> a;                     // integral of h~(0, y) u(t, y) dy
  std::vector<std::vector<double>> probes;   // probes[s][j] = u(times[s], probes[j])
  std::vector<std::vector<double>> profiles; // full u at snapshot times, if kept
  std::vector<double> u_final;
  int halvings = 0;                          // dt halvings forced by invariant violations

  double u_at(double x) const;               // final profile, linear interpolation
};

// Survival probability u(t, x) = P_x(Z_t > 0) for the process killed at 0 and L, u(0, .) = 1.
FkppResult solve_fkpp(const SpectralData& spectral, const FkppOptions& options);

struct KolmogorovCheck {
  double N = 0.0;
  double t = 0.0;
  double x = 0.0;
  double lhs = 0.0;      // N u(tN, x)
  double rhs = 0.0;      // 2 h^inf(x) / (Sigma^2 t)
  double rel_err = 0.0;
  double proportionality_spread = 0.0;  // max/min - 1 of u(tN, .)/h(0, .) over [1, L/2]
};

// Requires the spectral data to sit at L = L(N) and a fully pushed potential.
KolmogorovCheck kolmogorov_check(const SpectralData& spectral, double N, double t, double x,
                                 FkppOptions options = {});

}  // namespace pushedfront
