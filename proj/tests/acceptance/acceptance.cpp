// Acceptance run: one PASS/FAIL line per criterion. Tolerances come from thresholds.json.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <memory>
#include <set>
#include <string>

#include "oracles.hpp"
#include "pushedfront/bbm_sim.hpp"
#include "pushedfront/coalescent.hpp"
#include "pushedfront/errors.hpp"
#include "pushedfront/fkpp.hpp"
#include "pushedfront/harness.hpp"
#include "pushedfront/kspine.hpp"
#include "pushedfront/parallel.hpp"
#include "pushedfront/semigroup.hpp"
#include "pushedfront/spectral.hpp"
#include "pushedfront/stats.hpp"

using namespace pushedfront;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Outcome::require(bool ok, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  if (!detail.empty()) detail += "; ";
  detail += buf;
  if (!ok) {
    detail += " [!]";
    pass = false;
  }
}

unsigned g_threads = 1;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const Potential& step10() {
  static const Potential p = Potential::step(10.0);
  return p;
}

// ---- 1 ----
Outcome spectral_exactness(const json& c) {
  Outcome o;
  const double L = c["L"];
  const int K = c["modes"];
  SpectralOptions opt;
  opt.n_terms = K;
  opt.with_limit = false;
  const SpectralData sp(Potential::zero(), L, opt);
  double worst = 0.0;
  for (int k = 1; k <= K; ++k)
    worst = std::max(worst, std::abs(sp.lambda(static_cast<std::size_t>(k - 1)) - oracle::laplacian_eigenvalue(k, L)));
  o.require(worst <= c["abs_tol"].get<double>(), "max |lambda_k + k^2 pi^2 / 2L^2| = %.2e (tol %g)", worst,
            c["abs_tol"].get<double>());
  return o;
}

// ---- 2 ----
Outcome step_spectrum(const json& c) {
  Outcome o;
  const double lam = limit_top_eigenvalue(step10());
  const double err = std::abs(lam - oracle::step_bound_state(10.0));
  o.require(err <= c["oracle_tol"].get<double>(), "lambda1_inf = %.12f, |err| = %.1e", lam, err);
  const double beta = std::sqrt(2 * lam);
  std::vector<double> Ls, logs;
  bool increasing = true;
  double prev = -INFINITY;
  for (double L = 2.0; L <= 5.0 + 1e-12; L += 0.5) {
    const double l1 = eigenvalue(step10(), L, 1);
    increasing = increasing && l1 > prev && l1 < lam;
    prev = l1;
    Ls.push_back(L);
    logs.push_back(std::log(lam - l1));
  }
  o.require(increasing, "lambda1(L) increasing on [2, 5]");
  const double slope = linear_fit(Ls, logs).slope;
  const double rel = std::abs(slope / (-2 * beta) - 1);
  o.require(rel <= c["slope_rel_tol"].get<double>(), "log-slope %.4f vs -2 beta %.4f (rel %.3f)", slope, -2 * beta, rel);
  const auto neg = verify_negative_spectrum(5.0, 3);
  o.require(neg.max_residual <= c["residual_tol"].get<double>(), "negative-mode residual %.1e", neg.max_residual);
  return o;
}

// ---- 3 ----
Outcome kernel_identities(const json& c) {
  Outcome o;
  const SpectralData sp(step10(), c["L"].get<double>());
  const KernelEvaluator k(sp);
  const auto& g = sp.grid();
  const double tol = c["identity_tol"];
  double sym = 0, ck = 0, mass = 0, stat = 0;
  for (auto [x, y] : {std::pair{2.0, 4.0}, {0.5, 7.0}, {3.3, 3.4}, {1.0, 12.0}})
    sym = std::max(sym, std::abs(k.symmetric(2.0, x, y) - k.symmetric(2.0, y, x)));
  for (auto [x, y] : {std::pair{2.0, 4.0}, {0.7, 1.5}, {1.0, 3.0}}) {
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = k.heat(2.0, x, g[i]) * k.heat(2.0, g[i], y);
    ck = std::max(ck, std::abs(g.integrate(f) / k.heat(4.0, x, y) - 1));
  }
  for (double x : {0.5, 2.0, 8.0}) mass = std::max(mass, std::abs(g.integrate(k.spine_profile(2.0, x)) - 1));
  for (double y : {0.5, 2.0, 6.0}) {
    std::vector<double> f(g.size(), 0.0);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) f[i] = sp.Pi(g[i]) * k.spine(2.0, g[i], y);
    stat = std::max(stat, std::abs(g.integrate(f) - sp.Pi(y)));
  }
  o.require(sym <= tol, "symmetry %.1e", sym);
  o.require(ck <= tol, "Chapman-Kolmogorov (2,2) rel %.1e", ck);
  o.require(mass <= tol, "|int q - 1| %.1e", mass);
  o.require(stat <= tol, "Pi-stationarity %.1e", stat);

  const double xi = c["xi"];
  double green = 0;
  // separations of at least 1.5, so the kernel below t_min is negligible
  for (auto [x, y] : {std::pair{2.0, 4.0}, {4.0, 2.0}, {0.5, 3.0}}) {
    auto f = [&](double t) { return std::exp(-xi * t) * k.heat(t, x, y); };
    double laplace = 0.0;
    const double cuts[] = {sp.t_min(), 0.5, 2, 8, 30, 100, 400};
    for (int i = 0; i + 1 < 7; ++i) laplace += oracle::integrate(f, cuts[i], cuts[i + 1]);
    green = std::max(green, std::abs(green_function(sp, xi, x, y) / laplace - 1));
  }
  o.require(green <= c["green_rel_tol"].get<double>(), "Green vs Laplace quadrature rel %.1e", green);
  const GreenFunction G(sp, xi);
  const double target = 1.0 / (xi + sp.lambda1_inf() - sp.lambda(0));
  double hid = 0;
  for (double x : {0.5, 2.0, 5.0}) {
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = sp.h(0, g[i]) * G(x, g[i]);
    hid = std::max(hid, std::abs(g.integrate(f) / sp.h(0, x) / target - 1));
  }
  o.require(hid <= c["h_identity_rel_tol"].get<double>(), "h-weighted resolvent rel %.1e", hid);
  return o;
}

// ---- 4 ----
Outcome many_to_few(const json& c) {
  Outcome o;
  const double L = c["L"], t = c["t"], x0 = c["x0"], z = c["z"];
  const SpectralData sp(step10(), L);
  const KernelEvaluator k(sp);
  SimConfig cfg;
  cfg.potential = step10();
  cfg.mu = sp.mu();
  cfg.cutoff = L;
  cfg.horizon = t;
  cfg.x0 = x0;
  cfg.seed = 401;
  const std::size_t n = c["replicas"];
  std::vector<double> Z(n);
  parallel_for(n, g_threads, [&](std::size_t r) { Z[r] = static_cast<double>(simulate(cfg, r).alive_at_horizon()); });
  RunningMoments m1, m2;
  for (double v : Z) {
    m1.add(v);
    m2.add(v * (v - 1));
  }
  const double ref = k.mass(t, x0);
  o.require(std::abs(m1.mean() - ref) <= z * m1.standard_error(), "E[Z] %.4f +- %.4f vs spectral %.4f", m1.mean(),
            m1.standard_error(), ref);
  const SpineSampler sampler(sp);
  SpineFunctional f;
  f.phi = {[](double) { return 1.0; }, [](double) { return 1.0; }};
  const auto e = many_to_few_estimate(sampler, t, x0, f, c["spine_replicas"], 1.0, 402, g_threads);
  const double se = std::hypot(m2.standard_error(), e.se);
  o.require(std::abs(m2.mean() - e.estimate) <= z * se, "E[Z(Z-1)] %.3f +- %.3f vs 2-spine %.3f +- %.3f", m2.mean(),
            m2.standard_error(), e.estimate, e.se);
  return o;
}

// ---- 5, 6, 7 share one population at N_mc ----
struct Population {
  std::unique_ptr<SpectralData> spectral;
  PopulationRun run;
};

Population& population(const json& th) {
  static Population p;
  if (!p.spectral) {
    const auto& c = th["kolmogorov"];
    const double N = c["N_mc"];
    const auto rc = classify_regime(limit_top_eigenvalue(step10()));
    p.spectral = std::make_unique<SpectralData>(step10(), cutoff_length(rc, N));
    PopulationOptions po;
    po.N = N;
    po.t = c["t"];
    po.x0 = c["x0"];
    po.replicas = c["replicas"];
    po.seed = 500;
    po.threads = g_threads;
    p.run = run_population(*p.spectral, po);
  }
  return p;
}

Outcome kolmogorov(const json& th) {
  Outcome o;
  const auto& c = th["kolmogorov"];
  const auto& pop = population(th);
  const auto rep = run_kolmogorov(step10(), c["N"].get<std::vector<double>>(), c["t"], c["x0"], FkppOptions{}, {&pop.run});
  const double tol = c["rel_tol"];
  for (const auto& r : rep.rows) {
    o.require(r.N != c["N_mc"].get<double>() || r.fkpp_rel_err <= tol, "N=%g: N u = %.5f, limit %.5f, rel %.4f", r.N,
              r.fkpp, r.limit, r.fkpp_rel_err);
    if (r.has_mc)
      o.require(r.mc_fkpp_z <= c["z"].get<double>(), "MC %.4f +- %.4f (%zu/%zu survive), |MC - FKPP| = %.2f SE", r.mc,
                r.mc_se, r.survivors, r.replicas, r.mc_fkpp_z);
  }
  o.require(rep.fkpp_trend_nonincreasing, "FKPP error non-increasing in N");
  return o;
}

Outcome yaglom(const json& th) {
  Outcome o;
  const auto& c = th["yaglom"];
  const auto& pop = population(th);
  const auto y = run_yaglom(pop.run, *pop.spectral, c["min_survivors"]);
  o.require(y.sufficient, "%zu survivors (need %zu)", y.survivors, c["min_survivors"].get<std::size_t>());
  o.require(y.moment_ratio >= c["moment_ratio_low"].get<double>() && y.moment_ratio <= c["moment_ratio_high"].get<double>(),
            "E[X^2]/(2 E[X]^2) = %.4f", y.moment_ratio);
  o.require(y.ks_fitted.p_value > c["ks_p"].get<double>(), "KS vs Exp(fitted) D = %.4f, p = %.3f", y.ks_fitted.statistic,
            y.ks_fitted.p_value);
  o.require(true, "mean %.4f vs Sigma^2 t / 2 = %.4f (rel %.3f)", y.mean, y.limit_mean, y.mean_rel_err);
  return o;
}

Outcome genealogy(const json& th) {
  Outcome o;
  const auto& c = th["genealogy"];
  const auto& pop = population(th);
  const auto g = run_genealogy(pop.run, *pop.spectral, c["mark_bins"], th["yaglom"]["min_survivors"]);
  o.require(g.sufficient, "%zu survivors, %zu pairs", g.survivors, g.pairs);
  o.require(g.ks_pairs.statistic <= c["pair_ks_max"].get<double>(), "pair KS D = %.4f", g.ks_pairs.statistic);
  o.require(g.chi2_marks.p_value > c["mark_chi2_p"].get<double>(), "marks chi2 = %.2f (dof %d), p = %.3f",
            g.chi2_marks.statistic, g.chi2_marks.dof, g.chi2_marks.p_value);
  o.require(g.violations == 0, "ultrametric violations %zu / %zu", g.violations, g.triangles);

  const double target = 4 * std::log(2.0) - 2, z = c["z"];
  const std::size_t n = c["cpp_draws"];
  RandomStream rh(700, 0, kCoalescentStream), rc(700, 1, kCoalescentStream);
  double fh = 0, fc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fh += sample_H(2, 1.0, rh).dist[1] <= 0.5;
    const auto s = sample_cpp(1.0, 1e-3, rc);
    fc += s.distance(s.Y * rc.uniform(), s.Y * rc.uniform()) <= 0.5;
  }
  fh /= static_cast<double>(n);
  fc /= static_cast<double>(n);
  const double se = std::sqrt(target * (1 - target) / static_cast<double>(n));
  o.require(std::abs(fh - target) <= z * se, "F(t/2): H-matrix %.4f", fh);
  o.require(std::abs(fc - target) <= z * se, "CPP %.4f vs 4 ln 2 - 2 = %.4f (SE %.4f)", fc, target, se);
  return o;
}

// ---- 8 ----
Outcome cpp_moments(const json& c) {
  Outcome o;
  const double T = c["T"], mass = c["mark_mass"], tol = c["exact_rel_tol"], z = c["z"];
  const auto lim = LimitProfile::compute(step10());
  const auto marks = MarkDensity::tilde_h_inf(lim);
  CppMomentOptions opt;
  opt.mark_mass = mass;
  auto one = [](double) { return 1.0; };
  auto flat = [](int, int, double) { return 1.0; };
  const double e1 = T * mass, e2 = 2 * T * T * mass * mass;
  const auto q1 = cpp_moment(T, flat, {one}, marks, opt), q2 = cpp_moment(T, flat, {one, one}, marks, opt);
  o.require(std::abs(q1.value / e1 - 1) <= tol, "k=1: %.12g vs T|m| = %.12g", q1.value, e1);
  o.require(q2.quadrature && std::abs(q2.value / e2 - 1) <= tol, "k=2 quadrature: %.12g vs 2T^2|m|^2 = %.12g", q2.value, e2);
  // Monte Carlo on the point process itself: <M^k> = (|m| Y)^k
  RandomStream rng(800, 0, kCoalescentStream);
  RunningMoments a1, a2;
  const std::size_t n = c["mc_draws"];
  for (std::size_t i = 0; i < n; ++i) {
    const double y = sample_cpp(T, 0.5 * T, rng).Y * mass;
    a1.add(y);
    a2.add(y * y);
  }
  o.require(std::abs(a1.mean() - e1) <= z * a1.standard_error(), "MC k=1 %.4f +- %.4f", a1.mean(), a1.standard_error());
  o.require(std::abs(a2.mean() - e2) <= z * a2.standard_error(), "MC k=2 %.3f +- %.3f vs %.3f", a2.mean(),
            a2.standard_error(), e2);
  return o;
}

// ---- 9 ----
Outcome kspine_limit(const json& c) {
  Outcome o;
  const double N = c["N"], t = c["t"], x0 = c["x0"];
  const auto rc = classify_regime(limit_top_eigenvalue(step10()));
  const SpectralData sp(step10(), cutoff_length(rc, N));
  const SpineSampler sampler(sp);
  const auto& lim = sp.limit();
  const auto pi = MarkDensity::from_pdf([&](double x) { return lim.pi_inf(x); }, 0.0, 20.0);

  const std::size_t draws = c["mark_draws"];
  const int bins = c["bins"];
  std::vector<double> marks(draws);
  parallel_for(draws, g_threads, [&](std::size_t r) {
    RandomStream rng(900, r, kSpineStream);
    marks[r] = sample_kspine(sampler, 2, t, x0, rng, N).branch_marks[0];
  });
  std::vector<double> edges{0.0};
  for (int i = 1; i < bins; ++i) edges.push_back(pi.quantile(static_cast<double>(i) / bins));
  edges.push_back(std::numeric_limits<double>::max());
  const auto chi = chi_square(histogram(marks, edges), std::vector<double>(static_cast<std::size_t>(bins), static_cast<double>(draws) / bins));
  o.require(chi.p_value > c["chi2_p"].get<double>(), "branch marks vs Pi_inf chi2 = %.2f (dof %d), p = %.3f", chi.statistic,
            chi.dof, chi.p_value);

  const double s2 = lim.sigma2();
  std::uint64_t seed = 910;
  for (const auto& name : c["test_functions"]) {
    const auto phi = parse_test_function(name.get<std::string>());
    const double I = pi.integrate(phi), target = s2 / 2 * I * I;
    SpineFunctional f;
    auto g = [&lim, phi](double x) { return phi(x) * lim.h_inf(x); };
    f.phi = {g, g};
    const auto e = spine_expectation(sampler, t, x0, f, c["replicas"], N, seed++, g_threads);
    const double rel = std::abs(e.estimate / target - 1);
    o.require(rel <= c["rel_tol"].get<double>(), "%s: %.5f +- %.5f vs %.5f (rel %.3f)", name.get<std::string>().c_str(),
              e.estimate, e.se, target, rel);
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  CLI::App app{"acceptance checks"};
  std::string path = "thresholds.json";
  std::vector<int> only;
  app.add_option("--thresholds", path)->check(CLI::ExistingFile);
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  g_threads = worker_count();

  json th;
  try {
    th = load_config(path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  using Check = std::function<Outcome()>;
  const std::vector<std::pair<std::string, Check>> checks = {
      {"spectral exactness", [&] { return spectral_exactness(th["spectral_exactness"]); }},
      {"step-potential spectrum", [&] { return step_spectrum(th["step_spectrum"]); }},
      {"kernel identities", [&] { return kernel_identities(th["kernel_identities"]); }},
      {"many-to-one / many-to-few", [&] { return many_to_few(th["many_to_few"]); }},
      {"Kolmogorov estimate", [&] { return kolmogorov(th); }},
      {"Yaglom law", [&] { return yaglom(th); }},
      {"genealogy limit", [&] { return genealogy(th); }},
      {"CPP moments", [&] { return cpp_moments(th["cpp_moments"]); }},
      {"k-spine limit", [&] { return kspine_limit(th["kspine_limit"]); }},
  };
  const std::set<int> wanted(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = checks[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failed += !r.pass;
    std::printf("%s %d %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", id, checks[i].first.c_str(), r.detail.c_str(),
                seconds_since(t0));
  }
  std::printf("%d failed\n", failed);
  return failed ? 1 : 0;
}
