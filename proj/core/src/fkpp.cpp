#include "pushedfront/fkpp.hpp"

#include <algorithm>
#include <cmath>

#include "pushedfront/errors.hpp"

namespace pushedfront {

double FkppResult::u_at(double xq) const {
  if (xq <= 0.0 || xq >= L) return 0.0;
  const std::size_t i = std::min(static_cast<std::size_t>(xq / dx), x.size() - 2);
  const double f = (xq - x[i]) / dx;
  return (1.0 - f) * u_final[i] + f * u_final[i + 1];
}

namespace {

// Tridiagonal solve with sub-diagonal a, diagonal b, super-diagonal c (Thomas).
void thomas(const std::vector<double>& a, std::vector<double>& b, const std::vector<double>& c,
            std::vector<double>& d) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

}  // namespace

FkppResult solve_fkpp(const SpectralData& sp, const FkppOptions& opt) {
  if (!(opt.dx > 0.0) || !(opt.dt > 0.0)) throw ConfigError("fkpp: dx and dt must be positive");
  if (!(opt.T_end > 0.0)) throw ConfigError("fkpp: T_end must be positive");
  if (opt.snapshots < 1) throw ConfigError("fkpp: need at least one snapshot");
  const double L = sp.L();
  const std::size_t n = static_cast<std::size_t>(std::ceil(L / opt.dx - 1e-9));
  if (n < 4) throw ConfigError("fkpp: grid too coarse for the domain");
  const double dx = L / static_cast<double>(n);
  const std::size_t m = n - 1;  // interior unknowns
  const double mu = opt.mu.value_or(sp.mu());

  FkppResult res;
  res.L = L;
  res.dx = dx;
  res.x.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) res.x[i] = dx * static_cast<double>(i);

  // Cell-averaged branching rate: exact for step potentials straddling a node.
  std::vector<double> r(m, 0.0);
  if (opt.mode != FkppMode::NoReaction) {
    const auto& pot = sp.potential();
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = res.x[i + 1];
      r[i] = 0.5 + 0.5 * pot.integral(xi - 0.5 * dx, xi + 0.5 * dx) / dx;
    }
  }
  const bool nonlinear = opt.mode == FkppMode::Full;
  const bool monotone = opt.mode != FkppMode::Linearized;

  const double D = 0.5 / (dx * dx);
  double lo, di, up;
  if (2.0 * std::abs(mu) * dx > 2.0) {
    // Upwind drift (cell Peclet number above 2).
    if (mu >= 0) {
      lo = D;
      di = -2.0 * D + mu / dx;
      up = D - mu / dx;
    } else {
      lo = D - std::abs(mu) / dx;
      di = -2.0 * D + std::abs(mu) / dx;
      up = D;
    }
  } else {
    lo = D + mu / (2.0 * dx);
    di = -2.0 * D;
    up = D - mu / (2.0 * dx);
  }

  std::vector<double> weight(m);
  for (std::size_t i = 0; i < m; ++i) weight[i] = sp.tilde_h(0.0, res.x[i + 1]) * dx;
  auto functional = [&](const std::vector<double>& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += weight[i] * u[i];
    return s;
  };
  auto probe = [&](const std::vector<double>& u) {
    std::vector<double> out;
    for (double p : opt.probes) {
      if (p <= 0.0 || p >= L) {
        out.push_back(0.0);
        continue;
      }
      const double s = p / dx;
      const std::size_t i = std::min(static_cast<std::size_t>(s), n - 1);
      const double f = s - static_cast<double>(i);
      const double ui = i == 0 ? 0.0 : u[i - 1];
      const double uj = i + 1 >= n ? 0.0 : u[i];
      out.push_back((1.0 - f) * ui + f * uj);
    }
    return out;
  };

  std::vector<double> u(m, 1.0), u_prev(m, 1.0), unew(m), sub(m), diag(m), sup(m);
  double t = 0.0, dt_prev = 0.0;
  const double dt0 = opt.dt;
  int be_left = std::max(0, opt.rannacher_steps);
  int snap = 1;
  auto snap_time = [&](int s) { return opt.T_end * s / opt.snapshots; };

  // One step of size h; theta = 1 (backward Euler) or 1/2 (Crank-Nicolson).
  auto step = [&](double h, double theta, const std::vector<double>& ubar) {
    for (std::size_t i = 0; i < m; ++i) {
      const double nl = nonlinear ? r[i] * ubar[i] : 0.0;
      double au = (di + r[i]) * u[i];
      if (i > 0) au += lo * u[i - 1];
      if (i + 1 < m) au += up * u[i + 1];
      unew[i] = u[i] + (1.0 - theta) * h * (au - nl * u[i]);
      diag[i] = 1.0 - theta * h * (di + r[i]) + theta * h * nl;
      sub[i] = -theta * h * lo;
      sup[i] = -theta * h * up;
    }
    thomas(sub, diag, sup, unew);
  };
  // Roundoff allowance grows with the size of the implicit operator's diagonal.
  double r_top = 0.0;
  for (double ri : r) r_top = std::max(r_top, ri);
  auto admissible = [&](double h) {
    const double tol = 64.0 * 2.2e-16 * (1.0 + h * (2.0 * D + std::abs(mu) / dx + r_top));
    for (std::size_t i = 0; i < m; ++i) {
      const double v = unew[i];
      if (!std::isfinite(v) || v < -tol) return false;
      if (monotone && v > u[i] + tol) return false;
      if (nonlinear && v > 1.0 + tol) return false;
    }
    return true;
  };

  std::vector<double> ubar(m);
  double dt = dt0;
  int calm = 0;
  while (snap <= opt.snapshots) {
    const double target = snap_time(snap);
    double h = std::min(be_left > 0 ? 0.5 * dt : dt, target - t);
    bool hit = h >= target - t - 1e-12 * std::max(1.0, target);
    if (hit) h = target - t;
    const bool be = be_left > 0;
    if (be || dt_prev == 0.0) {
      ubar = u;
    } else {
      const double c = 0.5 * h / dt_prev;
      for (std::size_t i = 0; i < m; ++i) ubar[i] = u[i] + c * (u[i] - u_prev[i]);
    }
    step(h, be ? 1.0 : 0.5, ubar);
    if (!admissible(h)) {
      dt *= 0.5;
      ++res.halvings;
      if (dt < opt.min_dt_ratio * dt0)
        throw NumericalError("fkpp: invariants still violated after reducing dt to " + std::to_string(dt));
      be_left = std::max(be_left, 2);  // damp again after the disturbance
      calm = 0;
      continue;
    }
    if (dt < dt0 && ++calm >= 50) {
      dt = std::min(dt0, 2.0 * dt);
      calm = 0;
    }
    u_prev.swap(u);
    u.swap(unew);
    dt_prev = h;
    t = hit ? target : t + h;
    if (be) --be_left;
    if (hit) {
      res.times.push_back(t);
      res.a.push_back(functional(u));
      res.probes.push_back(probe(u));
      if (opt.keep_profiles) {
        std::vector<double> full(n + 1, 0.0);
        std::copy(u.begin(), u.end(), full.begin() + 1);
        res.profiles.push_back(std::move(full));
      }
      ++snap;
    }
  }
  res.u_final.assign(n + 1, 0.0);
  std::copy(u.begin(), u.end(), res.u_final.begin() + 1);
  return res;
}

KolmogorovCheck kolmogorov_check(const SpectralData& sp, double N, double t, double x,
                                 FkppOptions options) {
  if (sp.regime() != Regime::FullyPushed)
    throw RegimeError("Kolmogorov check needs a fully pushed potential");
  const double L = cutoff_length(sp.constants(), N, sp.options().grid_spacing);
  if (std::abs(L - sp.L()) > 1e-9 * L) throw ConfigError("spectral data must be built at L = L(N)");
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  if (!(x > 0.0 && x < L)) throw ConfigError("x must lie in (0, L)");
  options.T_end = t * N;
  options.mode = FkppMode::Full;
  const auto res = solve_fkpp(sp, options);

  KolmogorovCheck c;
  c.N = N;
  c.t = t;
  c.x = x;
  c.lhs = N * res.u_at(x);
  c.rhs = 2.0 * sp.limit().h_inf(x) / (*sp.sigma2() * t);
  c.rel_err = std::abs(c.lhs - c.rhs) / c.rhs;
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = 0; i < res.x.size(); ++i) {
    const double xi = res.x[i];
    if (xi < 1.0 || xi > 0.5 * L) continue;
    const double ratio = res.u_final[i] / sp.h(0.0, xi);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  c.proportionality_spread = hi / lo - 1.0;
  return c;
}

}  // namespace pushedfront
