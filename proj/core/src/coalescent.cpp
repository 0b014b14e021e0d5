#include "pushedfront/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pushedfront/errors.hpp"
#include "pushedfront/stats.hpp"

namespace pushedfront {

namespace {

void tabulate(const std::function<double(double)>& pdf, double lo, double hi, std::size_t cells,
              std::vector<double>& x, std::vector<double>& cdf) {
  x.resize(cells + 1);
  cdf.assign(cells + 1, 0.0);
  const double h = (hi - lo) / static_cast<double>(cells);
  for (std::size_t i = 0; i <= cells; ++i) x[i] = lo + h * static_cast<double>(i);
  double prev = pdf(x[0]);
  for (std::size_t i = 0; i < cells; ++i) {
    const double next = pdf(x[i + 1]);
    cdf[i + 1] = cdf[i] + h / 6.0 * (prev + 4.0 * pdf(0.5 * (x[i] + x[i + 1])) + next);
    prev = next;
  }
}

}  // namespace

MarkDensity MarkDensity::tilde_h_inf(const LimitProfile& limit) {
  if (!limit.bound()) throw RegimeError("h~inf needs a bound state");
  MarkDensity d;
  const double mu = limit.constants().mu, beta = limit.constants().beta;
  d.lo_ = 0.0;
  d.split_ = 1.0;
  d.tail_rate_ = mu + beta;
  d.tail_mass_ = limit.tilde_c() * std::exp(-mu) / (mu + beta);
  // Own copy of the profile so the density does not refer back to `limit`.
  std::vector<double> xs(8001), ys(8001);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = static_cast<double>(i) / 8000.0;
    ys[i] = limit.tilde_h_inf(xs[i]);
  }
  std::vector<double> ds(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ds[i] = limit.derivative(xs[i]);
  const double ct = limit.tilde_c();
  d.pdf_ = [xs, ys, ds, ct, mu](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return ys.back();
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(x * 8000.0), xs.size() - 2);
    // derivative of c e^{-mu x} v
    auto slope = [&](std::size_t j) { return ct * std::exp(-mu * xs[j]) * ds[j] - mu * ys[j]; };
    return hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], slope(i), slope(i + 1), x);
  };
  tabulate(d.pdf_, 0.0, 1.0, 4000, d.x_, d.cdf_);
  d.scale_ = (1.0 - d.tail_mass_) / d.cdf_.back();
  return d;
}

MarkDensity MarkDensity::from_pdf(std::function<double(double)> pdf, double lo, double hi,
                                  std::size_t cells) {
  if (!(hi > lo)) throw ConfigError("mark density needs lo < hi");
  MarkDensity d;
  d.pdf_ = std::move(pdf);
  d.lo_ = lo;
  d.split_ = hi;
  tabulate(d.pdf_, lo, hi, cells, d.x_, d.cdf_);
  if (!(d.cdf_.back() > 0.0)) throw ConfigError("mark density has no mass");
  d.scale_ = 1.0 / d.cdf_.back();
  return d;
}

double MarkDensity::pdf(double x) const {
  if (x < lo_) return 0.0;
  if (x <= split_) return scale_ * pdf_(x);
  if (tail_rate_ <= 0.0) return 0.0;
  return tail_mass_ * tail_rate_ * std::exp(-tail_rate_ * (x - split_));
}

double MarkDensity::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= split_) {
    if (tail_rate_ <= 0.0) return 1.0;
    return 1.0 - tail_mass_ * std::exp(-tail_rate_ * (x - split_));
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double a = x_[i];
  const double part = (x - a) / 6.0 * (pdf_(a) + 4.0 * pdf_(0.5 * (a + x)) + pdf_(x));
  return scale_ * (cdf_[i] + part);
}

double MarkDensity::quantile(double u) const {
  if (u <= 0.0) return lo_;
  const double body = 1.0 - tail_mass_;
  if (u >= body) {
    if (tail_rate_ <= 0.0) return split_;
    return split_ - std::log((1.0 - u) / tail_mass_) / tail_rate_;
  }
  const double target = u / scale_;
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  i = std::clamp<std::size_t>(i, 1, cdf_.size() - 1) - 1;
  double a = x_[i], b = x_[i + 1];
  for (int iter = 0; iter < 60 && b - a > 1e-14 * (1.0 + std::abs(b)); ++iter) {
    const double m = 0.5 * (a + b);
    if (cdf(m) < u)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

double MarkDensity::upper() const { return tail_rate_ > 0.0 ? split_ + 40.0 / tail_rate_ : split_; }

double MarkDensity::integrate(const std::function<double(double)>& f) const {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double x) { return f(x) * pdf(x); };
  double total = 0.0;
  // Panels keep discontinuous test functions from defeating the error estimate.
  const int panels = 16;
  const double h = (split_ - lo_) / panels;
  for (int p = 0; p < panels; ++p)
    total += gauss_kronrod<double, 61>::integrate(g, lo_ + p * h, lo_ + (p + 1) * h, 12, 1e-13);
  if (tail_rate_ > 0.0) total += gauss_kronrod<double, 61>::integrate(g, split_, upper(), 15, 1e-13);
  return total;
}

double h12_cdf(double s, double t) {
  if (s <= 0.0) return 0.0;
  if (s >= t) return 1.0;
  const double p = s / t;
  const double q = 1.0 - p;
  if (q < 1e-4) {
    // Series around p = 1 avoids cancellation: 1 - q^2/3 - q^3/6 - ...
    return 1.0 - q * q / 3.0 - q * q * q / 6.0 - q * q * q * q / 10.0;
  }
  return 2.0 * p * (p - 1.0 - std::log(p)) / (q * q);
}

HMatrix sample_H(int k, double t, RandomStream& rng, const MarkDensity* marks) {
  if (k < 2) throw ConfigError("sample_H needs k >= 2");
  if (!(t > 0.0)) throw ConfigError("sample_H needs t > 0");
  HMatrix h;
  h.k = k;
  h.t = t;
  const double u = std::pow(rng.uniform(), 1.0 / k);
  h.theta = u / (1.0 - u);
  h.U.resize(static_cast<std::size_t>(k - 1));
  for (auto& x : h.U) {
    const double v = rng.uniform();
    x = t * v / (1.0 + h.theta * (1.0 - v));
  }
  h.sigma.resize(static_cast<std::size_t>(k));
  std::iota(h.sigma.begin(), h.sigma.end(), 0);
  for (int i = k - 1; i > 0; --i)
    std::swap(h.sigma[static_cast<std::size_t>(i)], h.sigma[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  const auto kk = static_cast<std::size_t>(k);
  h.dist.assign(kk * kk, 0.0);
  for (std::size_t i = 0; i < kk; ++i)
    for (std::size_t j = 0; j < kk; ++j) {
      int a = h.sigma[i], b = h.sigma[j];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      h.dist[i * kk + j] = *std::max_element(h.U.begin() + a, h.U.begin() + b);
    }
  if (marks) {
    h.marks.resize(kk);
    for (auto& m : h.marks) m = marks->sample(rng);
  }
  return h;
}

double CPPSample::distance(double y1, double y2) const {
  if (y1 == y2) return 0.0;
  if (y1 > y2) std::swap(y1, y2);
  auto lo = std::upper_bound(atoms.begin(), atoms.end(), y1, [](double y, const CppAtom& a) { return y < a.y; });
  auto hi = std::lower_bound(atoms.begin(), atoms.end(), y2, [](const CppAtom& a, double y) { return a.y < y; });
  double d = 0.0;
  for (auto it = lo; it < hi; ++it) d = std::max(d, it->t);
  return d;
}

CPPSample sample_cpp(double T, double t_floor, RandomStream& rng, std::size_t max_atoms) {
  if (!(t_floor > 0.0 && t_floor < T)) throw ConfigError("sample_cpp needs 0 < t_floor < T");
  CPPSample s;
  s.T = T;
  s.t_floor = t_floor;
  s.Y = rng.exponential(1.0 / T);
  const double a = 1.0 / t_floor, b = 1.0 / T;
  std::poisson_distribution<std::uint64_t> count(s.Y * (a - b));
  const std::uint64_t n = count(rng);
  if (n > max_atoms) {
    s.capped = true;
    return s;
  }
  s.atoms.resize(n);
  for (auto& atom : s.atoms) {
    atom.y = s.Y * rng.uniform();
    // inverse CDF of dt/t^2 on [t_floor, T)
    atom.t = 1.0 / (a - rng.uniform() * (a - b));
  }
  std::sort(s.atoms.begin(), s.atoms.end(), [](const CppAtom& l, const CppAtom& r) { return l.y < r.y; });
  return s;
}

namespace {

double psi_product(const std::function<double(int, int, double)>& psi, const std::vector<int>& sigma,
                   const std::vector<double>& U) {
  if (!psi) return 1.0;
  const int k = static_cast<int>(sigma.size());
  double v = 1.0;
  for (int i = 0; i < k && v != 0.0; ++i)
    for (int j = i + 1; j < k && v != 0.0; ++j) {
      int a = sigma[static_cast<std::size_t>(i)], b = sigma[static_cast<std::size_t>(j)];
      if (a > b) std::swap(a, b);
      v *= psi(i, j, *std::max_element(U.begin() + a, U.begin() + b));
    }
  return v;
}

}  // namespace

CppMoment cpp_moment(double T, const std::function<double(int, int, double)>& psi,
                     const std::vector<std::function<double(double)>>& phi,
                     const MarkDensity& marks, const CppMomentOptions& options) {
  const int k = static_cast<int>(phi.size());
  if (k < 1) throw ConfigError("cpp_moment needs k >= 1");
  if (!(T > 0.0)) throw ConfigError("cpp_moment needs T > 0");
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= i;
  double mark_part = 1.0;
  for (const auto& f : phi) mark_part *= options.mark_mass * marks.integrate(f);
  const double pre = factorial * std::pow(T, k) * mark_part;

  CppMoment out;
  if (k == 1) {
    out.value = pre;
    return out;
  }
  std::vector<int> sigma(static_cast<std::size_t>(k));
  std::vector<double> U(static_cast<std::size_t>(k - 1));
  if (k <= 4 && !psi) {
    out.value = pre;
    return out;
  }
  if (k <= 4) {
    // Tensor composite Gauss-Legendre over [0, T]^{k-1}, averaged over all k! labellings.
    using Gauss = boost::math::quadrature::gauss<double, 5>;
    const int panels = k == 2 ? 400 : (k == 3 ? 60 : 16);
    std::vector<double> nodes, weights;
    const double h = T / panels;
    const auto& absc = Gauss::abscissa();
    const auto& wts = Gauss::weights();
    for (int p = 0; p < panels; ++p) {
      const double c = (p + 0.5) * h;
      for (std::size_t i = 0; i < absc.size(); ++i) {
        const double a = absc[i], w = wts[i];
        nodes.push_back(c + 0.5 * h * a);
        weights.push_back(0.5 * h * w / T);
        if (a != 0.0) {
          nodes.push_back(c - 0.5 * h * a);
          weights.push_back(0.5 * h * w / T);
        }
      }
    }
    const std::size_t m = nodes.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(k - 1), 0);
    double sum = 0.0;
    std::iota(sigma.begin(), sigma.end(), 0);
    std::vector<std::vector<int>> perms;
    do perms.push_back(sigma);
    while (std::next_permutation(sigma.begin(), sigma.end()));
    for (;;) {
      double w = 1.0;
      for (std::size_t d = 0; d < idx.size(); ++d) {
        U[d] = nodes[idx[d]];
        w *= weights[idx[d]];
      }
      double inner = 0.0;
      for (const auto& s : perms) inner += psi_product(psi, s, U);
      sum += w * inner / static_cast<double>(perms.size());
      std::size_t pos = idx.size();
      bool done = true;
      while (pos > 0) {
        --pos;
        if (++idx[pos] < m) {
          done = false;
          break;
        }
        idx[pos] = 0;
      }
      if (done) break;
    }
    out.value = pre * sum;
    return out;
  }

  RandomStream rng(options.seed, 0xc0a1, kCoalescentStream);
  RunningMoments acc;
  for (std::size_t s = 0; s < options.mc_samples; ++s) {
    for (auto& u : U) u = T * rng.uniform();
    std::iota(sigma.begin(), sigma.end(), 0);
    for (int i = k - 1; i > 0; --i)
      std::swap(sigma[static_cast<std::size_t>(i)], sigma[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    acc.add(psi_product(psi, sigma, U));
  }
  out.value = pre * acc.mean();
  out.se = std::abs(pre) * acc.standard_error();
  out.quadrature = false;
  return out;
}

}  // namespace pushedfront
