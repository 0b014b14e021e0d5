#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "pushedfront/errors.hpp"
#include "pushedfront/prufer.hpp"
#include "pushedfront/spectral.hpp"
#include "pushedfront/stats.hpp"

using namespace pushedfront;

TEST_SUITE("spectral") {

TEST_CASE("potential basics") {
  const auto s = Potential::step(10.0);
  CHECK(s.W(0.5) == 10.0);
  CHECK(s.W(1.5) == 0.0);
  CHECK(s.rate(0.5) == doctest::Approx(5.5));
  CHECK(s.r_max() == doctest::Approx(5.5));
  CHECK(s.integral(0.0, 2.0) == doctest::Approx(10.0));
  CHECK(Potential::zero().r_max() == 0.5);
  CHECK(Potential::parse("step:4").W(0.2) == 4.0);
  CHECK(Potential::parse("bump:2").W(0.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(Potential::parse("step:x"), ConfigError);
  CHECK_THROWS_AS(Potential::parse("wedge:1"), ConfigError);
  CHECK_THROWS_AS(Potential::step(-1.0), ConfigError);
}

TEST_CASE("table potential interpolates and matches the equivalent step") {
  const auto path = std::filesystem::temp_directory_path() / "pf_table_test.csv";
  {
    std::ofstream f(path);
    f << "x,W\n0,0\n0.5,4\n1,0\n";
  }
  const auto p = Potential::parse("table:" + path.string());
  CHECK(p.W(0.25) == doctest::Approx(2.0));
  CHECK(p.W(0.75) == doctest::Approx(2.0));
  CHECK(p.W(1.5) == 0.0);
  CHECK(p.integral(0.0, 1.0) == doctest::Approx(2.0));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Potential::parse("table:/nonexistent/file.csv"), ConfigError);
}

TEST_CASE("phase with zero potential") {
  const auto z = Potential::zero();
  const double lam = -std::numbers::pi * std::numbers::pi / 200.0;
  CHECK(phase_at(z, lam, 10.0) == doctest::Approx(std::numbers::pi).epsilon(1e-10));
  const double th0 = phase_at(z, 0.0, 10.0);
  CHECK(th0 > 0.0);
  CHECK(th0 < std::numbers::pi);
}

TEST_CASE("phase is non-increasing in lambda") {
  const auto s = Potential::step(10.0);
  double prev = phase_at(s, 0.0, 20.0);
  for (double lam = 0.5; lam <= 3.0; lam += 0.5) {
    const double th = phase_at(s, lam, 20.0);
    CHECK(th <= prev + 1e-12);
    prev = th;
  }
  // one zero below the top eigenvalue (about 2.3121 at L = 20), none above
  CHECK(phase_at(s, 2.0, 20.0) > std::numbers::pi);
  CHECK(phase_at(s, 2.4, 20.0) < std::numbers::pi);
}

TEST_CASE("laplacian eigenvalues are exact") {
  const auto z = Potential::zero();
  for (int k = 1; k <= 5; ++k) CHECK(std::abs(eigenvalue(z, 10.0, k) - oracle::laplacian_eigenvalue(k, 10.0)) < 1e-8);
  SpectralOptions o;
  o.n_terms = 5;
  const SpectralData sp(z, 10.0, o);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(std::abs(sp.lambda(k) - oracle::laplacian_eigenvalue(static_cast<int>(k) + 1, 10.0)) < 1e-8);
    CHECK(sp.zeros(k) == static_cast<int>(k));
  }
  for (double x : {0.5, 2.0, 5.0, 8.5})
    CHECK(sp.v1(x) == doctest::Approx(std::sin(std::numbers::pi * x / 10) / std::sin(std::numbers::pi / 10)).epsilon(1e-8));
}

TEST_CASE("step potential bound state") {
  const auto s = Potential::step(10.0);
  const double lam = limit_top_eigenvalue(s);
  CHECK(std::abs(lam - oracle::step_bound_state(10.0)) < 1e-8);
  CHECK(lam == doctest::Approx(2.3121).epsilon(1e-4));
  const auto rc = classify_regime(lam);
  CHECK(rc.regime == Regime::FullyPushed);
  CHECK(rc.mu == doctest::Approx(std::sqrt(1 + 2 * lam)));
  CHECK(rc.beta == doctest::Approx(std::sqrt(2 * lam)));
  CHECK(rc.alpha == doctest::Approx((rc.mu + rc.beta) / (rc.mu - rc.beta)));
  CHECK(rc.mu < 3 * rc.beta);
  CHECK(limit_top_eigenvalue(Potential::zero()) == 0.0);
}

TEST_CASE("regime thresholds") {
  CHECK(classify_regime(0.0).regime == Regime::Pulled);
  CHECK(classify_regime(0.0).mu == 1.0);
  CHECK(classify_regime(0.0).alpha == 1.0);
  CHECK(classify_regime(1.0 / 16 + 1e-6).regime == Regime::FullyPushed);
  CHECK(classify_regime(1.0 / 16 - 1e-6).regime == Regime::Semipushed);
  CHECK(classify_regime(1.0 / 16 + 1e-6).alpha > 2.0);
  CHECK(classify_regime(1.0 / 16 - 1e-6).alpha < 2.0);
}

TEST_CASE("weak potentials are pulled") {
  // A step of height b binds iff sqrt(b) > pi/2.
  const double b1 = std::numbers::pi * std::numbers::pi / 4;
  CHECK(limit_top_eigenvalue(Potential::step(0.95 * b1)) == 0.0);
  CHECK(limit_top_eigenvalue(Potential::step(1.05 * b1)) > 0.0);
  CHECK(std::abs(limit_top_eigenvalue(Potential::step(1.05 * b1)) - oracle::step_bound_state(1.05 * b1)) < 1e-8);
}

TEST_CASE("top eigenvalue increases with L and converges geometrically") {
  const auto s = Potential::step(10.0);
  const double lam_inf = limit_top_eigenvalue(s);
  const double beta = std::sqrt(2 * lam_inf);
  std::vector<double> Ls, logs;
  double prev = -1.0;
  for (double L = 2.0; L <= 5.0; L += 0.5) {
    const double l1 = eigenvalue(s, L, 1);
    CHECK(l1 > prev);
    CHECK(l1 < lam_inf);
    prev = l1;
    Ls.push_back(L);
    logs.push_back(std::log(lam_inf - l1));
  }
  const auto fit = linear_fit(Ls, logs);
  CHECK(fit.slope == doctest::Approx(-2 * beta).epsilon(0.1));
  const double l20 = eigenvalue(s, 20.0, 1), l30 = eigenvalue(s, 30.0, 1);
  CHECK(l20 <= l30);
  CHECK(l30 <= lam_inf);
}

TEST_CASE("eigenfunctions on the step potential") {
  const auto s = Potential::step(10.0);
  const SpectralData sp(s, 20.0);
  const double a = std::sqrt(2 * sp.lambda(0));
  double err = 0.0;
  for (double x = 1.0; x < 20.0; x += 0.173) err = std::max(err, std::abs(sp.v1(x) - std::sinh(a * (20 - x)) / std::sinh(a * 19)));
  CHECK(err < 1e-6);
  CHECK(sp.v1(1.0) == doctest::Approx(1.0));
  // orthonormality of the first three modes
  const auto& g = sp.grid();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> f(g.size());
      const auto mi = sp.mode(i), mj = sp.mode(j);
      for (std::size_t n = 0; n < g.size(); ++n) f[n] = mi[n] * mj[n];
      CHECK(std::abs(g.integrate(f) - (i == j ? 1.0 : 0.0)) < 1e-6);
    }
  for (std::size_t k = 0; k < 6; ++k) CHECK(sp.zeros(k) == static_cast<int>(k));
  for (std::size_t k = 1; k < sp.size(); ++k) CHECK(sp.lambda(k) < sp.lambda(k - 1));
  // lower comparison bound
  for (std::size_t k = 0; k < 20; ++k) CHECK(sp.lambda(k) >= oracle::laplacian_eigenvalue(static_cast<int>(k) + 1, 20.0) - 1e-9);
}

TEST_CASE("v1 envelope") {
  const SpectralData sp(Potential::step(10.0), 20.0);
  double lo = 1e300, hi = 0;
  for (double x = 0.01; x < 19.99; x += 0.01) {
    const double env = std::min({1.0, x, 20 - x}) * std::exp(-sp.beta() * x);
    const double r = sp.v1(x) / env;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(lo > 0.1);
  CHECK(hi < 100.0);
}

TEST_CASE("limit constants") {
  const auto lp = LimitProfile::compute(Potential::step(10.0));
  const double mu = lp.constants().mu, beta = lp.constants().beta;
  // integrals of h~inf and h inf h~inf
  const double tail = 60.0;
  CHECK(oracle::integrate([&](double x) { return lp.tilde_h_inf(x); }, 0, 1) +
            oracle::integrate([&](double x) { return lp.tilde_h_inf(x); }, 1, tail) ==
        doctest::Approx(1.0).epsilon(1e-8));
  CHECK(oracle::integrate([&](double x) { return lp.pi_inf(x); }, 0, 1) +
            oracle::integrate([&](double x) { return lp.pi_inf(x); }, 1, tail) ==
        doctest::Approx(1.0).epsilon(1e-8));
  for (double x : {0.3, 1.0, 2.5}) CHECK(lp.h_inf(x) * lp.tilde_h_inf(x) == doctest::Approx(lp.pi_inf(x)).epsilon(1e-8));
  // Sigma^2 by an independent adaptive quadrature
  auto integrand = [&](double x) { return 2 * 0.5 * (1 + (x < 1 ? 10.0 : 0.0)) * std::pow(lp.h_inf(x), 2) * lp.tilde_h_inf(x); };
  const double s2 = oracle::integrate(integrand, 0, 1) + oracle::integrate(integrand, 1, tail);
  CHECK(lp.sigma2() == doctest::Approx(s2).epsilon(1e-6));
  CHECK(mu < 3 * beta);
  CHECK_THROWS_AS(LimitProfile::compute(Potential::zero()).sigma2(), RegimeError);
  CHECK_THROWS_AS(LimitProfile::compute(Potential::step(2.6)).sigma2(), RegimeError);  // semipushed
}

TEST_CASE("cutoff length") {
  const auto rc = classify_regime(limit_top_eigenvalue(Potential::step(10.0)));
  const double L = cutoff_length(rc, 1000.0);
  CHECK(L == doctest::Approx(std::log(1000.0) / (rc.mu - rc.beta)).epsilon(1e-3));
  CHECK(L == doctest::Approx(31.2).epsilon(2e-3));
  CHECK(std::fmod(L + 1e-12, 5e-3) < 1e-9);
}

TEST_CASE("negative spectrum matching condition") {
  const auto rep = verify_negative_spectrum(5.0, 3);
  REQUIRE(rep.modes.size() == 3);
  for (const auto& m : rep.modes) CHECK(m.lambda < 0);
  CHECK(rep.max_residual <= 1e-6);
  CHECK_THROWS(step_matching_residual(0.5, 5.0, 10.0));
  // Weyl-type growth: modes below -A scale with L
  const double A = -1.0;
  auto count = [&](double L) {
    SpectralOptions o;
    o.n_terms = 60;
    o.with_limit = false;
    const SpectralData sp(Potential::step(10.0), L, o);
    int c = 0;
    for (double l : sp.eigenvalues()) c += l > A;
    return c;
  };
  const int c10 = count(10.0), c20 = count(20.0);
  CHECK(std::abs(c20 - 2 * c10) <= 2);
}

}  // TEST_SUITE
