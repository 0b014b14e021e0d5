#include "pushedfront/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pushedfront/errors.hpp"

namespace pushedfront {

namespace {

constexpr double kPi = std::numbers::pi;

double laplacian_eigenvalue(double L, int k) {
  return -static_cast<double>(k) * k * kPi * kPi / (2.0 * L * L);
}

}  // namespace

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Pulled:
      return "pulled";
    case Regime::Semipushed:
      return "semipushed";
    case Regime::FullyPushed:
      return "fully_pushed";
  }
  return "unknown";
}

RegimeConstants classify_regime(double lambda1_inf) {
  if (!(lambda1_inf >= 0.0)) throw ConfigError("top half-line eigenvalue must be non-negative");
  RegimeConstants c;
  c.lambda1_inf = lambda1_inf;
  c.mu = std::sqrt(1.0 + 2.0 * lambda1_inf);
  c.beta = std::sqrt(2.0 * lambda1_inf);
  c.alpha = c.beta == 0.0 ? 1.0 : (c.mu + c.beta) / (c.mu - c.beta);
  if (lambda1_inf == 0.0) {
    c.regime = Regime::Pulled;
  } else if (lambda1_inf > 1.0 / 16.0) {
    c.regime = Regime::FullyPushed;
  } else {
    c.regime = Regime::Semipushed;
  }
  return c;
}

double eigenvalue(const Potential& potential, double L, int k, double upper_hint) {
  if (k < 1) throw ConfigError("eigenvalue index must be >= 1");
  if (!(L > 1.0)) throw ConfigError("domain length must exceed 1");
  const double target = k * kPi;
  auto f = [&](double lambda) { return phase_at(potential, lambda, L) - target; };

  const double base = laplacian_eigenvalue(L, k);
  double lo = base - 1e-9 * (1.0 + std::abs(base));
  double hi = base + 0.5 * potential.sup() + 1e-9 * (1.0 + std::abs(base));
  if (std::isfinite(upper_hint)) hi = std::min(hi, upper_hint);
  double flo = f(lo), fhi = f(hi);
  for (int widen = 0; widen < 8 && !(flo >= 0.0 && fhi <= 0.0); ++widen) {
    const double span = std::max(hi - lo, 1e-6);
    if (flo < 0.0) {
      lo -= span;
      flo = f(lo);
    }
    if (fhi > 0.0) {
      hi += span;
      fhi = f(hi);
    }
  }
  if (!(flo >= 0.0 && fhi <= 0.0))
    throw SpectralError("eigenvalue " + std::to_string(k) + " could not be bracketed");

  while (hi - lo > 1e-15 * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  double best = std::abs(flo) < std::abs(fhi) ? lo : hi;
  double fbest = std::min(std::abs(flo), std::abs(fhi));
  if (flo != fhi) {
    const double secant = lo - flo * (hi - lo) / (fhi - flo);
    if (secant >= lo && secant <= hi) {
      const double fs = std::abs(f(secant));
      if (fs <= fbest) best = secant;
    }
  }
  // No phase-residual check: near a bound state d(theta)/d(lambda) grows like e^{2 beta L},
  // so the bracket width is the only meaningful tolerance.
  return best;
}

// ---------------------------------------------------------------------------------------------

LimitProfile LimitProfile::compute(const Potential& potential, bool cross_validate) {
  LimitProfile out;
  out.potential_ = potential;
  const double sup = potential.sup();
  double lambda_inf = 0.0;
  if (sup > 0.0) {
    // theta_lambda(1) against the phase of the decaying solution exp(-sqrt(2 lambda) x)
    auto g = [&](double lambda) {
      return phase_at(potential, lambda, 1.0) - (kPi - std::atan(1.0 / std::sqrt(2.0 * lambda)));
    };
    double lo = 1e-12, hi = 0.5 * sup - 1e-12;
    if (hi > lo && g(lo) > 0.0) {
      for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
      }
      lambda_inf = 0.5 * (lo + hi);
    }
  }
  out.constants_ = classify_regime(lambda_inf);
  if (!out.bound()) return out;

  if (cross_validate) {
    const double beta = out.constants_.beta;
    const double la = std::min(2000.0, 1.0 + 4.0 / beta);
    const double lb = std::min(4000.0, 1.0 + 8.0 / beta);
    const double ea = eigenvalue(potential, la, 1);
    const double eb = eigenvalue(potential, lb, 1);
    const bool ok = ea < eb && eb <= lambda_inf + 1e-12 &&
                    lambda_inf - eb <= 0.01 * (lambda_inf - ea) + 1e-10;
    if (!ok)
      throw SpectralError("half-line eigenvalue disagrees with the large-L extrapolation");
  }

  out.grid_ = Grid(1.0, 1e-3);
  const auto trace = prufer_integrate(potential, lambda_inf, out.grid_, 1e-3);
  const std::size_t n = out.grid_.size();
  const double u1 = trace.u(n - 1);
  out.v_.resize(n);
  out.dv_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.v_[i] = trace.u(i) / u1;
    out.dv_[i] = trace.du(i) / u1;
  }
  return out;
}

double LimitProfile::value(double x) const {
  if (!bound() || x <= 0.0) return 0.0;
  if (x >= 1.0) return std::exp(-constants_.beta * (x - 1.0));
  const std::size_t i = grid_.cell(x);
  return hermite(grid_[i], grid_[i + 1], v_[i], v_[i + 1], dv_[i], dv_[i + 1], x);
}

double LimitProfile::derivative(double x) const {
  if (!bound() || x < 0.0) return 0.0;
  if (x >= 1.0) return -constants_.beta * std::exp(-constants_.beta * (x - 1.0));
  const std::size_t i = grid_.cell(x);
  return hermite_derivative(grid_[i], grid_[i + 1], v_[i], v_[i + 1], dv_[i], dv_[i + 1], x);
}

double LimitProfile::norm2() const {
  if (!bound()) throw RegimeError("no bound state: the half-line profile is not square integrable");
  std::vector<double> f(v_.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = v_[i] * v_[i];
  return grid_.integrate(f) + 1.0 / (2.0 * constants_.beta);
}

double LimitProfile::exp_moment(double rate) const {
  if (!bound()) throw RegimeError("no bound state");
  if (!(rate > -constants_.beta)) throw RegimeError("exponential moment diverges");
  std::vector<double> f(v_.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-rate * grid_[i]) * v_[i];
  return grid_.integrate(f) + std::exp(-rate) / (rate + constants_.beta);
}

double LimitProfile::weighted_cube(double a) const {
  if (!bound()) throw RegimeError("no bound state");
  if (!(a < 3.0 * constants_.beta)) throw RegimeError("variance integral diverges in this regime");
  std::vector<double> f(v_.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    // left limit of r at the end of the support
    const double x = grid_[i];
    const double r = i + 1 == f.size() ? potential_.rate(std::nextafter(x, 0.0)) : potential_.rate(x);
    f[i] = r * std::exp(a * x) * v_[i] * v_[i] * v_[i];
  }
  return grid_.integrate(f) + 0.5 * std::exp(a) / (3.0 * constants_.beta - a);
}

double LimitProfile::tilde_c() const { return 1.0 / exp_moment(constants_.mu); }

double LimitProfile::sigma2() const {
  if (constants_.regime != Regime::FullyPushed)
    throw RegimeError("Sigma^2 divergent in this regime (" + to_string(constants_.regime) + ")");
  const double n2 = norm2();
  return 2.0 * weighted_cube(constants_.mu) / (tilde_c() * n2 * n2);
}

double LimitProfile::h_inf(double x) const {
  return std::exp(constants_.mu * x) * value(x) / (tilde_c() * norm2());
}

double LimitProfile::tilde_h_inf(double x) const {
  return tilde_c() * std::exp(-constants_.mu * x) * value(x);
}

double LimitProfile::pi_inf(double x) const {
  const double v = value(x);
  return v * v / norm2();
}

double limit_top_eigenvalue(const Potential& potential) {
  return LimitProfile::compute(potential).lambda();
}

// ---------------------------------------------------------------------------------------------

SpectralData::SpectralData(Potential potential, double L, SpectralOptions options)
    : potential_(std::move(potential)), L_(L), options_(options) {
  if (!(L > 1.0)) throw ConfigError("domain length must exceed 1");
  if (!(options_.t_min > 0.0)) throw ConfigError("t_min must be positive");
  if (!(options_.grid_spacing > 0.0 && options_.grid_spacing <= 1e-2))
    throw ConfigError("grid spacing must lie in (0, 0.01]");
  grid_ = Grid(L_, options_.grid_spacing);
  if (options_.with_limit) limit_ = LimitProfile::compute(potential_);

  const double log_tol = std::log(options_.series_tolerance);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= options_.max_terms; ++k) {
    const double lam = eigenvalue(potential_, L_, k, prev);
    lambdas_.push_back(lam);
    prev = lam;
    if (options_.n_terms > 0) {
      if (k == options_.n_terms) break;
    } else if ((lam - lambdas_.front()) * options_.t_min <= log_tol) {
      break;
    }
  }

  const std::size_t n = grid_.size();
  const std::size_t b = grid_.break_index();
  modes_.resize(lambdas_.size() * n);
  slopes_.resize(lambdas_.size() * n);
  norms_.resize(lambdas_.size());
  zeros_.resize(lambdas_.size());
  const double step = std::min(1e-3, options_.grid_spacing);
  std::vector<double> sq(n);
  for (std::size_t k = 0; k < lambdas_.size(); ++k) {
    const double lam = lambdas_[k];
    double* val = modes_.data() + k * n;
    double* der = slopes_.data() + k * n;
    // forward phase on [0, 1], in units where rho(1) = 1
    PhaseState ps;
    std::vector<double> th(b + 1, 0.0), lr(b + 1, 0.0);
    for (std::size_t i = 1; i <= b; ++i) {
      ps = advance_phase(potential_, lam, ps, grid_[i - 1], grid_[i], step);
      th[i] = ps.theta;
      lr[i] = ps.log_rho;
    }
    for (std::size_t i = 0; i <= b; ++i) {
      const double a = std::exp(lr[i] - lr[b]);
      val[i] = a * std::sin(th[i]);
      der[i] = a * std::cos(th[i]);
    }
    // W vanishes on [1, L]: closed-form solution with R(L) = 0, R'(L) = -1, matched at 1.
    auto right = [&](double x, double& r, double& dr) {
      const double z = L_ - x;
      const double c = 2.0 * lam;
      if (c > 1e-14) {
        const double kap = std::sqrt(c);
        r = std::sinh(kap * z) / kap;
        dr = -std::cosh(kap * z);
      } else if (c < -1e-14) {
        const double om = std::sqrt(-c);
        r = std::sin(om * z) / om;
        dr = -std::cos(om * z);
      } else {
        r = z;
        dr = -1.0;
      }
    };
    double r1, dr1;
    right(grid_[b], r1, dr1);
    const double match = (val[b] * r1 + der[b] * dr1) / (r1 * r1 + dr1 * dr1);
    for (std::size_t i = b; i < n; ++i) {
      double r, dr;
      right(grid_[i], r, dr);
      val[i] = match * r;
      der[i] = match * dr;
    }
    val[0] = 0.0;
    val[n - 1] = 0.0;
    int sign_changes = 0;
    double last = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (val[i] == 0.0) continue;
      if (last != 0.0 && (val[i] > 0.0) != (last > 0.0)) ++sign_changes;
      last = val[i];
    }
    zeros_[k] = sign_changes;
    if (zeros_[k] != static_cast<int>(k))
      throw SpectralError("phase-integration failure: eigenfunction " + std::to_string(k + 1) +
                          " has " + std::to_string(zeros_[k]) + " interior zeros");
    for (std::size_t i = 0; i < n; ++i) sq[i] = val[i] * val[i];
    const double norm_scaled = std::sqrt(grid_.integrate(sq));
    norms_[k] = norm_scaled * std::exp(lr[b]);
    for (std::size_t i = 0; i < n; ++i) {
      val[i] /= norm_scaled;
      der[i] /= norm_scaled;
    }
  }

  const std::span<const double> top = mode(0);
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (!(top[i] > 0.0)) throw SpectralError("top eigenfunction is not positive inside the domain");
  v1_scale_ = 1.0 / top[grid_.break_index()];
  v1_norm2_ = v1_scale_ * v1_scale_;
}

int SpectralData::positive_count() const {
  return static_cast<int>(std::count_if(lambdas_.begin(), lambdas_.end(),
                                        [](double l) { return l > 0.0; }));
}

std::span<const double> SpectralData::mode(std::size_t i) const {
  return {modes_.data() + i * grid_.size(), grid_.size()};
}

std::span<const double> SpectralData::mode_derivative(std::size_t i) const {
  return {slopes_.data() + i * grid_.size(), grid_.size()};
}

double SpectralData::mode_value(std::size_t k, double x) const {
  if (x <= 0.0 || x >= L_) return 0.0;
  const std::size_t n = grid_.size();
  const std::size_t i = grid_.cell(x);
  const double* v = modes_.data() + k * n;
  const double* d = slopes_.data() + k * n;
  return hermite(grid_[i], grid_[i + 1], v[i], v[i + 1], d[i], d[i + 1], x);
}

double SpectralData::mode_slope(std::size_t k, double x) const {
  const std::size_t n = grid_.size();
  const std::size_t i = grid_.cell(x);
  const double* v = modes_.data() + k * n;
  const double* d = slopes_.data() + k * n;
  return hermite_derivative(grid_[i], grid_[i + 1], v[i], v[i + 1], d[i], d[i + 1],
                            std::clamp(x, 0.0, L_));
}

double SpectralData::v1(double x) const { return v1_scale_ * mode_value(0, x); }
double SpectralData::v1_slope(double x) const { return v1_scale_ * mode_slope(0, x); }

std::optional<double> SpectralData::tilde_c() const {
  if (!limit_.bound()) return std::nullopt;
  return limit_.tilde_c();
}

std::optional<double> SpectralData::sigma2() const {
  if (regime() != Regime::FullyPushed) return std::nullopt;
  return limit_.sigma2();
}

double SpectralData::c_tilde_or_one() const { return limit_.bound() ? limit_.tilde_c() : 1.0; }

double SpectralData::h(double t, double x) const {
  return std::exp((lambda1_inf() - lambdas_[0]) * t + mu() * x) * v1(x) /
         (c_tilde_or_one() * v1_norm2_);
}

double SpectralData::tilde_h(double t, double x) const {
  return c_tilde_or_one() * std::exp((lambdas_[0] - lambda1_inf()) * t - mu() * x) * v1(x);
}

double SpectralData::Pi(double x) const {
  const double v = mode_value(0, x);
  return v * v;
}

double SpectralData::truncation_bound(double t) const {
  return std::exp((lambdas_.back() - lambdas_.front()) * t);
}

// ---------------------------------------------------------------------------------------------

double cutoff_length(const RegimeConstants& constants, double N, double spacing) {
  if (!(N >= 2.0)) throw ConfigError("population size N must be at least 2");
  if (constants.regime == Regime::Pulled) throw RegimeError("cutoff undefined in the pulled regime");
  const double raw = std::log(N) / (constants.mu - constants.beta);
  return std::ceil(raw / spacing - 1e-9) * spacing;
}

HarmonicData harmonic_data(const LimitProfile& limit, double N, double spacing) {
  if (limit.constants().regime != Regime::FullyPushed)
    throw RegimeError("Sigma^2 divergent in this regime (" +
                      to_string(limit.constants().regime) + ")");
  HarmonicData out;
  out.N = N;
  out.cutoff = cutoff_length(limit.constants(), N, spacing);
  out.tilde_c = limit.tilde_c();
  out.norm_inf2 = limit.norm2();
  out.sigma2 = limit.sigma2();
  return out;
}

HarmonicData harmonic_data(const SpectralData& spectral, double N) {
  return harmonic_data(spectral.limit(), N, spectral.options().grid_spacing);
}

// ---------------------------------------------------------------------------------------------

NegativeModeCheck step_matching_residual(double lambda, double L, double height) {
  if (!(lambda < 0.0)) throw ConfigError("matching condition only applies to negative eigenvalues");
  NegativeModeCheck c;
  c.lambda = lambda;
  const double inner = std::sqrt(height - 2.0 * lambda);
  const double outer = std::sqrt(-2.0 * lambda);
  c.lhs = std::tan(inner) / inner;
  c.rhs = -std::tan(outer * (L - 1.0)) / outer;
  c.near_pole = std::abs(std::cos(inner)) < 1e-6 || std::abs(std::cos(outer * (L - 1.0))) < 1e-6;
  c.residual = std::abs(c.lhs - c.rhs) / std::max({1.0, std::abs(c.lhs), std::abs(c.rhs)});
  return c;
}

NegativeSpectrumReport verify_negative_spectrum(double L, int count, double height,
                                                double tolerance) {
  if (count < 1) throw ConfigError("need at least one negative eigenvalue");
  const auto pot = Potential::step(height);
  NegativeSpectrumReport rep;
  rep.L = L;
  rep.height = height;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; static_cast<int>(rep.modes.size()) < count; ++k) {
    const double lam = eigenvalue(pot, L, k, prev);
    prev = lam;
    if (lam > 0.0) {
      ++rep.positive_count;
      continue;
    }
    auto c = step_matching_residual(lam, L, height);
    c.k = k;
    if (!c.near_pole) rep.max_residual = std::max(rep.max_residual, c.residual);
    c.flagged = !c.near_pole && c.residual > tolerance;
    rep.modes.push_back(c);
  }
  return rep;
}

}  // namespace pushedfront
