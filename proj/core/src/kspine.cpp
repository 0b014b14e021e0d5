#include "pushedfront/kspine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pushedfront/errors.hpp"
#include "pushedfront/parallel.hpp"
#include "pushedfront/stats.hpp"

namespace pushedfront {

SpineSampler::SpineSampler(const SpectralData& spectral, SpineSamplerOptions options)
    : spectral_(&spectral), options_(options) {
  const Grid& g = spectral.grid();
  const std::size_t n = g.size(), m = spectral.size();
  integrals_.resize(m * n);
  sup_.resize(m);
  const auto p1 = spectral.mode(0);
  const auto d1 = spectral.mode_derivative(0);
  std::vector<double> f(n), df(n);
  for (std::size_t k = 0; k < m; ++k) {
    const auto pk = spectral.mode(k);
    const auto dk = spectral.mode_derivative(k);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = p1[i] * pk[i];
      df[i] = d1[i] * pk[i] + p1[i] * dk[i];
      s = std::max(s, std::abs(pk[i]));
    }
    sup_[k] = s;
    const auto c = g.cumulative(f, df);
    std::copy(c.begin(), c.end(), integrals_.begin() + static_cast<std::ptrdiff_t>(k * n));
  }
}

std::vector<double> SpineSampler::coefficients(double x, double s) const {
  const auto& sp = *spectral_;
  const double p1 = sp.mode_value(0, x);
  if (!(p1 > 0.0)) throw NumericalError("spine started outside (0, L)");
  std::vector<double> c;
  const double l1 = sp.lambda(0);
  for (std::size_t k = 0; k < sp.size(); ++k) {
    const double decay = std::exp((sp.lambda(k) - l1) * s);
    if (k > 0 && decay * sup_[k] / p1 < options_.term_tolerance) break;
    c.push_back(decay * sp.mode_value(k, x) / p1);
  }
  return c;
}

double SpineSampler::cdf_at_node(const std::vector<double>& c, std::size_t j) const {
  const std::size_t n = spectral_->grid().size();
  double f = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) f += c[k] * integrals_[k * n + j];
  return f;
}

double SpineSampler::cdf(double x, double s, double y) const {
  if (s < spectral_->t_min()) throw SeriesError("spine CDF needs s >= t_min");
  const Grid& g = spectral_->grid();
  if (y <= 0.0) return 0.0;
  if (y >= g.length()) return 1.0;
  const auto c = coefficients(x, s);
  const std::size_t i = g.cell(y);
  const double total = cdf_at_node(c, g.size() - 1);
  const double a = cdf_at_node(c, i), b = cdf_at_node(c, i + 1);
  return (a + (b - a) * (y - g[i]) / (g[i + 1] - g[i])) / total;
}

double SpineSampler::euler(double x, double s, RandomStream& rng) const {
  const auto& sp = *spectral_;
  const double L = sp.L();
  const int n = std::max(1, static_cast<int>(std::ceil(s / options_.euler_step)));
  const double dt = s / n;
  for (int step = 0; step < n; ++step) {
    // A segment that leaves (0, L) is redrawn with twice as many sub-steps.
    bool ok = false;
    for (int halving = 0; halving <= options_.max_halvings && !ok; ++halving) {
      const int sub = 1 << halving;
      const double h = dt / sub;
      double y = x;
      ok = true;
      for (int j = 0; j < sub; ++j) {
        const double drift = sp.v1_slope(y) / sp.v1(y);
        y += drift * h + std::sqrt(h) * rng.normal();
        if (!(y > 0.0 && y < L)) {
          ok = false;
          break;
        }
      }
      if (ok) x = y;
    }
    if (!ok) throw NumericalError("spine Euler step keeps leaving (0, L)");
  }
  return x;
}

double SpineSampler::draw(double x, double s, RandomStream& rng) const {
  if (s <= 0.0) return x;
  if (s < spectral_->t_min()) return euler(x, s, rng);
  const Grid& g = spectral_->grid();
  const auto c = coefficients(x, s);
  const std::size_t n = g.size();
  const double target = rng.uniform() * cdf_at_node(c, n - 1);
  // Largest node with F <= target; truncation can make F wiggle by ~1e-13, bisection does
  // not care.
  std::size_t lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (cdf_at_node(c, mid) <= target)
      lo = mid;
    else
      hi = mid;
  }
  const double a = cdf_at_node(c, lo), b = cdf_at_node(c, hi);
  const double frac = b > a ? std::clamp((target - a) / (b - a), 0.0, 1.0) : 0.5;
  double y = g[lo] + frac * (g[hi] - g[lo]);
  // Keep strictly inside the domain.
  const double eps = 1e-12 * g.length();
  return std::clamp(y, eps, g.length() - eps);
}

double SpineTree::U_pair(int i, int j) const {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  return *std::max_element(U.begin() + i, U.begin() + j);
}

std::vector<double> SpineTree::umatrix() const {
  std::vector<double> m(static_cast<std::size_t>(k * k), 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) m[static_cast<std::size_t>(i * k + j)] = U_pair(i, j);
  return m;
}

namespace {

void build(const SpineSampler& sampler, SpineTree& tree, int lo, int hi, double start_time,
           double start_mark, RandomStream& rng) {
  if (lo == hi) {
    const double dur = (tree.depth - start_time) * tree.N;
    tree.leaf_marks[static_cast<std::size_t>(lo)] = sampler.draw(start_mark, dur, rng);
    return;
  }
  int arg = lo;
  for (int i = lo + 1; i < hi; ++i)
    if (tree.U[static_cast<std::size_t>(i)] > tree.U[static_cast<std::size_t>(arg)]) arg = i;
  const double time = tree.depth - tree.U[static_cast<std::size_t>(arg)];
  const double mark = sampler.draw(start_mark, (time - start_time) * tree.N, rng);
  tree.branch_times.push_back(time);
  tree.branch_marks.push_back(mark);
  build(sampler, tree, lo, arg, time, mark, rng);
  build(sampler, tree, arg + 1, hi, time, mark, rng);
}

}  // namespace

SpineTree sample_kspine(const SpineSampler& sampler, int k, double t, double x0, RandomStream& rng,
                        double accelerate_N) {
  if (k < 1) throw ConfigError("k-spine needs k >= 1");
  if (!(t > 0.0)) throw ConfigError("k-spine depth must be positive");
  if (!(x0 > 0.0 && x0 < sampler.spectral().L())) throw ConfigError("x0 must lie in (0, L)");
  if (!(accelerate_N >= 1.0)) throw ConfigError("acceleration factor must be >= 1");
  SpineTree tree;
  tree.k = k;
  tree.depth = t;
  tree.N = accelerate_N;
  tree.root_mark = x0;
  tree.U.resize(static_cast<std::size_t>(k - 1));
  for (auto& u : tree.U) u = t * rng.uniform();
  tree.leaf_marks.resize(static_cast<std::size_t>(k));
  build(sampler, tree, 0, k - 1, 0.0, x0, rng);
  return tree;
}

double spine_weight(const SpineTree& tree, const SpectralData& sp) {
  double w = 1.0;
  for (std::size_t b = 0; b < tree.branch_marks.size(); ++b) {
    const double z = tree.branch_marks[b];
    w *= sp.potential().rate(z) * sp.h(tree.branch_times[b] * tree.N, z);
  }
  for (double z : tree.leaf_marks) w /= sp.h(tree.depth * tree.N, z);
  return w;
}

SpineEstimate spine_expectation(const SpineSampler& sampler, double t, double x0,
                                const SpineFunctional& f, std::size_t replicas, double N,
                                std::uint64_t seed, unsigned threads,
                                std::vector<SpineRecord>* records) {
  const int k = static_cast<int>(f.phi.size());
  if (k < 1) throw ConfigError("spine functional needs at least one phi");
  if (replicas < 2) throw ConfigError("need at least two spine replicas");
  std::vector<double> contrib(replicas), weight(replicas);
  if (records) records->assign(replicas, {});
  parallel_for(replicas, threads, [&](std::size_t r) {
    RandomStream rng(seed, r, kSpineStream);
    const SpineTree tree = sample_kspine(sampler, k, t, x0, rng, N);
    const double w = spine_weight(tree, sampler.spectral());
    std::vector<int> sigma(static_cast<std::size_t>(k));
    std::iota(sigma.begin(), sigma.end(), 0);
    for (int i = k - 1; i > 0; --i)
      std::swap(sigma[static_cast<std::size_t>(i)],
                sigma[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    double v = w;
    for (int i = 0; i < k && v != 0.0; ++i)
      v *= f.phi[static_cast<std::size_t>(i)](tree.leaf_marks[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])]);
    if (f.psi)
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k && v != 0.0; ++j)
          v *= f.psi(i, j, tree.U_pair(sigma[static_cast<std::size_t>(i)], sigma[static_cast<std::size_t>(j)]));
    contrib[r] = v;
    weight[r] = w;
    if (records) {
      auto& rec = (*records)[r];
      rec.weight = w;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) rec.U_pairs.push_back(tree.U_pair(i, j));
      rec.leaf_marks = tree.leaf_marks;
      rec.contribution = v;
    }
  });

  SpineEstimate est;
  const auto m = estimate_mean(contrib);
  est.estimate = m.mean;
  est.se = m.se;
  est.replicas = replicas;
  std::vector<double> mag(replicas);
  for (std::size_t i = 0; i < replicas; ++i) mag[i] = std::abs(contrib[i]);
  const double total = std::accumulate(mag.begin(), mag.end(), 0.0);
  const std::size_t top = std::max<std::size_t>(1, replicas / 100);
  std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(top), mag.end(), std::greater<>());
  const double top_sum = std::accumulate(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
  est.top_share = total > 0 ? top_sum / total : 0.0;
  est.heavy_tail = est.top_share > 0.5;
  double sw = 0, sw2 = 0;
  for (double w : weight) {
    sw += w;
    sw2 += w * w;
  }
  est.ess = sw2 > 0 ? sw * sw / sw2 : 0.0;
  return est;
}

SpineEstimate many_to_few_estimate(const SpineSampler& sampler, double t, double x0,
                                   const SpineFunctional& f, std::size_t replicas, double N,
                                   std::uint64_t seed, unsigned threads,
                                   std::vector<SpineRecord>* records) {
  if (replicas < 100) throw ConfigError("many-to-few estimate needs at least 100 replicas");
  auto est = spine_expectation(sampler, t, x0, f, replicas, N, seed, threads, records);
  const int k = static_cast<int>(f.phi.size());
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= i;
  const double pre = factorial * sampler.spectral().h(0.0, x0) * std::pow(t, k - 1) / N;
  est.prefactor = pre;
  est.estimate *= pre;
  est.se *= pre;
  if (records)
    for (auto& r : *records) r.contribution *= pre;
  return est;
}

}  // namespace pushedfront
