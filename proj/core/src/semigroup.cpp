#include "pushedfront/semigroup.hpp"

#include <algorithm>
#include <cmath>

#include "pushedfront/errors.hpp"

namespace pushedfront {

namespace {

// Terms with e^{(lambda_k - lambda_1) t} below this are dropped.
constexpr double kNegligible = 1e-18;

}  // namespace

KernelEvaluator::KernelEvaluator(const SpectralData& spectral) : spectral_(&spectral) {
  const auto& grid = spectral.grid();
  const double mu = spectral.mu();
  std::vector<double> f(grid.size()), df(grid.size());
  exp_moments_.resize(spectral.size());
  for (std::size_t k = 0; k < spectral.size(); ++k) {
    const auto v = spectral.mode(k);
    const auto dv = spectral.mode_derivative(k);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e = std::exp(-mu * grid[i]);
      f[i] = e * v[i];
      df[i] = e * (dv[i] - mu * v[i]);
    }
    exp_moments_[k] = grid.cumulative(f, df).back();
  }
}

void KernelEvaluator::check_time(double t) const {
  if (!(t >= spectral_->t_min() * (1.0 - 1e-12)))
    throw SeriesError("series not converged at t = " + std::to_string(t) +
                      "; increase the number of terms or t");
}

std::vector<double> KernelEvaluator::weights(double t, double x) const {
  const auto& s = *spectral_;
  const double top = s.lambda(0);
  std::vector<double> w;
  w.reserve(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (std::exp((s.lambda(k) - top) * t) < kNegligible) break;
    w.push_back(std::exp((s.lambda(k) - s.lambda1_inf()) * t) * s.mode_value(k, x));
  }
  return w;
}

double KernelEvaluator::symmetric(double t, double x, double y) const {
  check_time(t);
  const auto w = weights(t, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * spectral_->mode_value(k, y);
  return std::exp(spectral_->lambda1_inf() * t) * sum;
}

double KernelEvaluator::heat(double t, double x, double y) const {
  check_time(t);
  const auto w = weights(t, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * spectral_->mode_value(k, y);
  return std::exp(spectral_->mu() * (x - y)) * sum;
}

double KernelEvaluator::heat_dy(double t, double x, double y) const {
  check_time(t);
  const auto w = weights(t, x);
  double sum = 0.0, dsum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    sum += w[k] * spectral_->mode_value(k, y);
    dsum += w[k] * spectral_->mode_slope(k, y);
  }
  const double mu = spectral_->mu();
  return std::exp(mu * (x - y)) * (dsum - mu * sum);
}

double KernelEvaluator::spine(double t, double x, double y) const {
  check_time(t);
  const auto& s = *spectral_;
  const double top = s.lambda(0);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double e = std::exp((s.lambda(k) - top) * t);
    if (e < kNegligible) break;
    sum += e * s.mode_value(k, x) * s.mode_value(k, y);
  }
  return sum * s.mode_value(0, y) / s.mode_value(0, x);
}

std::vector<double> KernelEvaluator::heat_profile(double t, double x) const {
  check_time(t);
  const auto& s = *spectral_;
  const auto& grid = s.grid();
  const auto w = weights(t, x);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto v = s.mode(k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * v[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(s.mu() * (x - grid[i]));
  return out;
}

std::vector<double> KernelEvaluator::spine_profile(double t, double x) const {
  check_time(t);
  const auto& s = *spectral_;
  const auto& grid = s.grid();
  std::vector<double> out(grid.size(), 0.0);
  const double top = s.lambda(0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double e = std::exp((s.lambda(k) - top) * t);
    if (e < kNegligible) break;
    const double c = e * s.mode_value(k, x);
    const auto v = s.mode(k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * v[i];
  }
  const auto v1 = s.mode(0);
  const double v1x = s.mode_value(0, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= v1[i] / v1x;
  return out;
}

double KernelEvaluator::mass(double t, double x) const {
  check_time(t);
  const auto w = weights(t, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * exp_moments_[k];
  return std::exp(spectral_->mu() * x) * sum;
}

MixingReport mixing_diagnostic(const KernelEvaluator& kernel, double x,
                               const std::vector<double>& times) {
  const auto& s = kernel.spectral();
  if (s.size() < 2) throw SpectralError("mixing diagnostic needs at least two eigenpairs");
  MixingReport rep;
  rep.gap = s.lambda(0) - s.lambda(1);
  rep.threshold = std::exp(-s.beta() * s.L());
  const auto& grid = s.grid();
  const auto v1 = s.mode(0);
  const double v1x = s.mode_value(0, x);
  // Far from the well v_k / v1 grows like e^{beta y}, so a mode is dropped only when its
  // whole contribution to the ratio is negligible, not when e^{(lambda_k - lambda_1) t} is.
  std::vector<double> reach(s.size(), 0.0);
  for (std::size_t k = 1; k < s.size(); ++k) {
    const auto v = s.mode(k);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) reach[k] = std::max(reach[k], std::abs(v[i] / v1[i]));
    reach[k] *= std::abs(s.mode_value(k, x) / v1x);
  }
  for (double t : times) {
    if (t < kernel.t_min()) throw SeriesError("mixing diagnostic below t_min");
    std::vector<double> ratio(grid.size(), 0.0);
    const double floor = kNegligible * rep.threshold * std::exp((s.lambda(1) - s.lambda(0)) * t) * reach[1];
    for (std::size_t k = 1; k < s.size(); ++k) {
      const double e = std::exp((s.lambda(k) - s.lambda(0)) * t);
      if (e == 0.0) break;
      if (e * reach[k] < floor) continue;
      const double c = e * s.mode_value(k, x) / v1x;
      const auto v = s.mode(k);
      for (std::size_t i = 1; i + 1 < grid.size(); ++i) ratio[i] += c * v[i] / v1[i];
    }
    double sup = 0.0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) sup = std::max(sup, std::abs(ratio[i]));
    rep.times.push_back(t);
    rep.sup_ratio.push_back(sup);
    if (rep.onset < 0.0 && sup <= rep.threshold) rep.onset = t;
  }
  // least-squares slope of log sup_ratio
  double n = 0, st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    if (!(rep.sup_ratio[i] > 0.0)) continue;
    const double l = std::log(rep.sup_ratio[i]);
    n += 1;
    st += rep.times[i];
    sl += l;
    stt += rep.times[i] * rep.times[i];
    stl += rep.times[i] * l;
  }
  if (n >= 2) rep.fitted_rate = -(n * stl - st * sl) / (n * stt - st * st);
  return rep;
}

// ---------------------------------------------------------------------------------------------

GreenFunction::GreenFunction(const SpectralData& spectral, double xi)
    : spectral_(&spectral), xi_(xi), lambda_(spectral.lambda1_inf() + xi) {
  const double top = spectral.lambda(0);
  if (!(xi >= 0.0) || !(lambda_ > top))
    throw SpectralError("resolvent shift below top eigenvalue");
  const auto& pot = spectral.potential();
  const auto& grid = spectral.grid();
  const std::size_t n = grid.size();
  const std::size_t b = grid.break_index();
  const double L = spectral.L();
  phi_.resize(n);
  dphi_.resize(n);
  psi_.resize(n);
  dpsi_.resize(n);

  LinearState s{0.0, spectral.v1_slope(0.0)};
  phi_[0] = s.u;
  dphi_[0] = s.du;
  for (std::size_t i = 1; i < n; ++i) {
    s = propagate_linear(pot, lambda_, s, grid[i - 1], grid[i]);
    phi_[i] = s.u;
    dphi_[i] = s.du;
  }

  // closed form where W vanishes
  const double a = std::sqrt(2.0 * lambda_);
  const double den = top > 0.0 ? std::sqrt(2.0 * top) * (L - 1.0) : a * (L - 1.0);
  for (std::size_t i = b; i < n; ++i) {
    const double z = a * (L - grid[i]);
    const double scale = std::exp(z - den) / (1.0 - std::exp(-2.0 * den));
    psi_[i] = scale * (1.0 - std::exp(-2.0 * z));
    dpsi_[i] = -a * scale * (1.0 + std::exp(-2.0 * z));
  }
  LinearState r{psi_[b], dpsi_[b]};
  for (std::size_t i = b; i-- > 0;) {
    r = propagate_linear(pot, lambda_, r, grid[i + 1], grid[i]);
    psi_[i] = r.u;
    dpsi_[i] = r.du;
  }
  omega_ = psi_[b] * dphi_[b] - dpsi_[b] * phi_[b];
}

double GreenFunction::phi(double x) const {
  const auto& g = spectral_->grid();
  const std::size_t i = g.cell(x);
  return hermite(g[i], g[i + 1], phi_[i], phi_[i + 1], dphi_[i], dphi_[i + 1], x);
}

double GreenFunction::phi_slope(double x) const {
  const auto& g = spectral_->grid();
  const std::size_t i = g.cell(x);
  return hermite_derivative(g[i], g[i + 1], phi_[i], phi_[i + 1], dphi_[i], dphi_[i + 1], x);
}

double GreenFunction::psi(double x) const {
  const auto& g = spectral_->grid();
  const std::size_t i = g.cell(x);
  return hermite(g[i], g[i + 1], psi_[i], psi_[i + 1], dpsi_[i], dpsi_[i + 1], x);
}

double GreenFunction::psi_slope(double x) const {
  const auto& g = spectral_->grid();
  const std::size_t i = g.cell(x);
  return hermite_derivative(g[i], g[i + 1], psi_[i], psi_[i + 1], dpsi_[i], dpsi_[i + 1], x);
}

double GreenFunction::wronskian_at(double x) const {
  return psi(x) * phi_slope(x) - psi_slope(x) * phi(x);
}

double GreenFunction::operator()(double x, double y) const {
  const double lo = std::min(x, y), hi = std::max(x, y);
  // density with respect to Lebesgue measure: the generator is (1/2) d^2/dx^2
  return 2.0 / omega_ * std::exp(spectral_->mu() * (x - y)) * psi(hi) * phi(lo);
}

double GreenFunction::dy_above(double x, double y) const {
  const double mu = spectral_->mu();
  return 2.0 / omega_ * phi(x) * std::exp(mu * (x - y)) * (psi_slope(y) - mu * psi(y));
}

double green_function(const SpectralData& spectral, double xi, double x, double y) {
  if (!(xi > 0.0)) throw ConfigError("resolvent shift xi must be positive");
  return GreenFunction(spectral, xi)(x, y);
}

// ---------------------------------------------------------------------------------------------

EscapeMass escape_mass(const SpectralData& spectral, double gamma, double horizon, double x) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  const double level = gamma * spectral.L();
  if (!(level > 1.0))
    throw ConfigError("escape level gamma L must exceed the support of W (unsupported)");
  if (!(x > 0.0 && x < level)) throw ConfigError("start point must lie in (0, gamma L)");
  if (!(horizon >= spectral.t_min()))
    throw SeriesError("escape mass needs a horizon of at least t_min");

  auto opts = spectral.options();
  const SpectralData inner(spectral.potential(), level, opts);
  const GreenFunction green(inner, 0.0);
  const double mu = inner.mu();
  const double drift = std::exp(mu * (x - level));

  EscapeMass out;
  out.level = level;
  out.resolvent = -drift * green.phi(x) * green.psi_slope(level) / green.wronskian();
  double tail = 0.0, last = 0.0;
  for (std::size_t k = 0; k < inner.size(); ++k) {
    const double gap = inner.lambda1_inf() - inner.lambda(k);
    const double term = inner.mode_value(k, x) * inner.mode_slope(k, level) *
                        std::exp(-gap * horizon) / gap;
    tail += term;
    last = term;
  }
  out.tail = 0.5 * drift * tail;
  out.truncation = std::abs(0.5 * drift * last);
  out.value = out.resolvent + out.tail;
  return out;
}

}  // namespace pushedfront
