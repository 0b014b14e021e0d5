#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "pushedfront/coalescent.hpp"
#include "pushedfront/errors.hpp"
#include "pushedfront/spectral.hpp"
#include "pushedfront/stats.hpp"

using namespace pushedfront;

namespace {

const double kHalf = 4 * std::log(2.0) - 2;

MarkDensity step_marks() {
  static const LimitProfile lim = LimitProfile::compute(Potential::step(10.0));
  return MarkDensity::tilde_h_inf(lim);
}

}  // namespace

TEST_SUITE("coalescent") {

TEST_CASE("pair distance law") {
  for (double p : {0.01, 0.1, 0.3, 0.5, 0.77, 0.95, 0.999})
    CHECK(h12_cdf(p * 3.0, 3.0) == doctest::Approx(oracle::cpp_pair_cdf(p * 3.0, 3.0)).epsilon(1e-9));
  CHECK(h12_cdf(0.5, 1.0) == doctest::Approx(kHalf).epsilon(1e-12));
  CHECK(h12_cdf(0.0, 1.0) == 0.0);
  CHECK(h12_cdf(2.0, 1.0) == 1.0);
}

TEST_CASE("sample_H: pair law, theta law and conditional heights") {
  RandomStream rng(11, 0, kTestStream);
  const double t = 2.0;
  const int k = 3;
  std::vector<double> pair, theta, pit, pit_large;
  int below = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto h = sample_H(k, t, rng);
    REQUIRE(h.U.size() == 2);
    REQUIRE(h.dist.size() == 9);
    CHECK(std::is_permutation(h.sigma.begin(), h.sigma.end(), std::vector<int>{0, 1, 2}.begin()));
    const double d = h.dist[0 * 3 + 1];
    CHECK(d == h.dist[1 * 3 + 0]);
    pair.push_back(d);
    below += d <= t / 2;
    theta.push_back(h.theta / (1 + h.theta));
    for (double u : h.U) {
      const double v = u * (1 + h.theta) / (t + h.theta * u);
      pit.push_back(v);
      if (h.theta > 20) pit_large.push_back(v);
    }
  }
  const double f = static_cast<double>(below) / n;
  CHECK(std::abs(f - kHalf) < 3 * std::sqrt(kHalf * (1 - kHalf) / n));
  CHECK(ks_test(pair, [t](double s) { return h12_cdf(s, t); }).p_value > 0.01);
  CHECK(ks_test(theta, [](double x) { return std::pow(std::clamp(x, 0.0, 1.0), 3); }).p_value > 0.01);
  CHECK(ks_test(pit, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
  REQUIRE(pit_large.size() > 1000);
  CHECK(ks_test(pit_large, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
  CHECK_THROWS_AS(sample_H(1, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(sample_H(2, 0.0, rng), ConfigError);
}

TEST_CASE("sample_H heights collapse to 0 when theta is large") {
  // E[U/t | theta] = int_0^1 (1 - p(1+theta)/(1+theta p)) dp
  auto mean = [](double th) {
    return oracle::integrate([th](double p) { return 1 - p * (1 + th) / (1 + th * p); }, 0.0, 1.0);
  };
  RandomStream rng(12, 0, kTestStream);
  RunningMoments big;
  double ref = 0;
  for (int i = 0; i < 200000; ++i) {
    const auto h = sample_H(2, 1.0, rng);
    if (h.theta > 50) {
      big.add(h.U[0]);
      ref += mean(h.theta);
    }
  }
  REQUIRE(big.count() > 100);
  ref /= static_cast<double>(big.count());
  CHECK(ref < 0.1);
  CHECK(std::abs(big.mean() - ref) < 3 * big.standard_error());
}

TEST_CASE("sample_cpp: spine length and pair law") {
  RandomStream rng(13, 0, kTestStream);
  const double T = 2.0;
  RunningMoments Y, Y2;
  std::vector<double> d;
  int below = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_cpp(T, 1e-2 * T, rng);
    CHECK_FALSE(s.capped);
    Y.add(s.Y);
    Y2.add(s.Y * s.Y);
    const double a = s.Y * rng.uniform(), b = s.Y * rng.uniform();
    const double dd = s.distance(a, b);
    CHECK(dd < T);
    below += dd <= T / 2;
    d.push_back(dd);
  }
  CHECK(std::abs(Y.mean() - T) < 3 * Y.standard_error());
  CHECK(std::abs(Y2.mean() - 2 * T * T) < 3 * Y2.standard_error());
  const double f = static_cast<double>(below) / n;
  CHECK(std::abs(f - kHalf) < 3 * std::sqrt(kHalf * (1 - kHalf) / n));
  // above the floor the law is exact
  std::vector<double> above;
  for (double x : d)
    if (x > 0.1) above.push_back(x);
  const double base = oracle::cpp_pair_cdf(0.1, T);
  CHECK(ks_test(above, [&](double s) { return (oracle::cpp_pair_cdf(s, T) - base) / (1 - base); }).p_value > 0.01);
  CHECK_THROWS_AS(sample_cpp(T, T, rng), ConfigError);
  const auto capped = sample_cpp(T, 1e-6, rng, 10);
  CHECK((capped.capped || capped.atoms.size() <= 10));
}

TEST_CASE("sample_cpp: the floor does not move T/2 statistics") {
  RandomStream a(14, 0, kTestStream), b(14, 1, kTestStream);
  int ca = 0, cb = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_cpp(1.0, 1e-1, a);
    ca += s.distance(s.Y * a.uniform(), s.Y * a.uniform()) <= 0.5;
    const auto r = sample_cpp(1.0, 1e-4, b);
    cb += r.distance(r.Y * b.uniform(), r.Y * b.uniform()) <= 0.5;
  }
  const double se = std::sqrt(2 * kHalf * (1 - kHalf) / n);
  CHECK(std::abs((ca - cb) / static_cast<double>(n)) < 3 * se);
}

TEST_CASE("the two constructions agree on a 3-point statistic") {
  // P(all three pairwise distances <= T/2) for three uniform leaves
  RandomStream rng(15, 0, kTestStream);
  const int n = 30000;
  int h = 0, c = 0;
  for (int i = 0; i < n; ++i) {
    const auto m = sample_H(3, 1.0, rng);
    h += *std::max_element(m.dist.begin(), m.dist.end()) <= 0.5;
    const auto s = sample_cpp(1.0, 1e-3, rng);
    double y[3] = {s.Y * rng.uniform(), s.Y * rng.uniform(), s.Y * rng.uniform()};
    c += std::max({s.distance(y[0], y[1]), s.distance(y[0], y[2]), s.distance(y[1], y[2])}) <= 0.5;
  }
  const double ph = static_cast<double>(h) / n, pc = static_cast<double>(c) / n;
  CHECK(std::abs(ph - pc) < 3 * std::sqrt((ph * (1 - ph) + pc * (1 - pc)) / n));
}

TEST_CASE("mark density") {
  const auto m = step_marks();
  CHECK(m.integrate([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.cdf(m.upper()) == doctest::Approx(1.0).epsilon(1e-8));
  for (double u : {0.01, 0.2, 0.5, 0.9, 0.999}) CHECK(m.cdf(m.quantile(u)) == doctest::Approx(u).epsilon(1e-8));
  for (double x : {0.3, 1.0, 2.0, 5.0})
    CHECK(m.cdf(x) == doctest::Approx(oracle::integrate([&](double y) { return m.pdf(y); }, 0.0, x)).epsilon(1e-6));
  RandomStream rng(16, 0, kTestStream);
  std::vector<double> s;
  for (int i = 0; i < 20000; ++i) s.push_back(m.sample(rng));
  CHECK(ks_test(s, [&](double x) { return m.cdf(x); }).p_value > 0.01);
  const auto box = MarkDensity::from_pdf([](double x) { return x; }, 0.0, 2.0);
  CHECK(box.cdf(1.0) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(box.quantile(0.25) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("CPP moments") {
  const auto m = step_marks();
  const double T = 1.7, mass = 2.5;
  CppMomentOptions o;
  o.mark_mass = mass;
  auto one = [](double) { return 1.0; };
  CHECK(cpp_moment(T, {}, {one}, m, o).value == doctest::Approx(T * mass).epsilon(1e-10));
  CHECK(cpp_moment(T, {}, {one, one}, m, o).value == doctest::Approx(2 * T * T * mass * mass).epsilon(1e-10));
  // size-biasing by the squared spine length makes the pair distance uniform on [0, T]
  auto le = [T](int, int, double d) { return d <= T / 2 ? 1.0 : 0.0; };
  CHECK(cpp_moment(T, le, {one, one}, m, o).value == doctest::Approx(T * T * mass * mass).epsilon(1e-3));
  auto ex = [](int, int, double d) { return std::exp(-d); };
  CHECK(cpp_moment(T, ex, {one, one}, m, o).value ==
        doctest::Approx(2 * T * T * mass * mass * (1 - std::exp(-T)) / T).epsilon(1e-9));
  auto first = [](double x) { return x; };
  const double mx = m.integrate(first);
  CHECK(cpp_moment(T, {}, {first}, m, o).value == doctest::Approx(T * mass * mx).epsilon(1e-10));

  // k = 3 quadrature against a direct Monte Carlo of the labelled construction
  const auto q = cpp_moment(T, ex, {one, one, one}, m, o);
  CHECK(q.quadrature);
  RandomStream rng(17, 0, kTestStream);
  RunningMoments acc;
  for (int i = 0; i < 200000; ++i) {
    const double u0 = T * rng.uniform(), u1 = T * rng.uniform();
    acc.add(std::exp(-u0 - u1 - std::max(u0, u1)));
  }
  const double pre = 6 * std::pow(T * mass, 3);
  CHECK(std::abs(q.value - pre * acc.mean()) < 3 * pre * acc.standard_error());

  // k = 5 goes through Monte Carlo; with psi = 1 it is exact
  o.mc_samples = 20000;
  const auto five = cpp_moment(T, ex, std::vector<std::function<double(double)>>(5, one), m, o);
  CHECK_FALSE(five.quadrature);
  CHECK(five.se > 0.0);
  const auto flat = cpp_moment(T, [](int, int, double) { return 1.0; }, std::vector<std::function<double(double)>>(5, one), m, o);
  CHECK(flat.value == doctest::Approx(120 * std::pow(T * mass, 5)).epsilon(1e-10));
  CHECK_THROWS_AS(cpp_moment(T, {}, {}, m, o), ConfigError);
}

}  // TEST_SUITE
