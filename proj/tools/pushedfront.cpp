#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushedfront/bbm_sim.hpp"
#include "pushedfront/coalescent.hpp"
#include "pushedfront/errors.hpp"
#include "pushedfront/fkpp.hpp"
#include "pushedfront/harness.hpp"
#include "pushedfront/kspine.hpp"
#include "pushedfront/parallel.hpp"
#include "pushedfront/semigroup.hpp"
#include "pushedfront/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pushedfront;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitGate = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Context {
  json config;
  std::uint64_t seed = 0;
  std::string hash;
  fs::path out = ".";
  unsigned threads = 1;

  const json& section(const char* name) const {
    static const json empty = json::object();
    auto it = config.find(name);
    return it == config.end() ? empty : *it;
  }
  fs::path path(const std::string& name) const {
    const fs::path p(name);
    return p.is_absolute() ? p : out / p;
  }
  std::ofstream open(const std::string& name) const {
    const fs::path p = path(name);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << stamp_line(seed, hash) << '\n';
    return f;
  }
};

template <class T>
T get(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "': " + it->dump());
  }
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "': " + it->dump());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

Potential potential_of(const Context& ctx) { return Potential::parse(get<std::string>(ctx.config, "potential", "step:10")); }

SpectralOptions spectral_options(const Context& ctx) {
  const json& s = ctx.section("spectral");
  SpectralOptions o;
  o.t_min = get(s, "t_min", o.t_min);
  o.grid_spacing = get(s, "grid_spacing", o.grid_spacing);
  o.series_tolerance = get(s, "series_tolerance", o.series_tolerance);
  o.max_terms = get(s, "max_terms", o.max_terms);
  require(o.t_min > 0 && o.grid_spacing > 0 && o.series_tolerance > 0, "spectral options must be positive");
  return o;
}

// Cutoff: explicit L wins, otherwise L(N).
double domain_length(const json& s, const Potential& pot, const SpectralOptions& so, double fallback_L) {
  if (auto L = get_opt<double>(s, "L")) {
    require(*L > 1.0, "L must exceed 1");
    return *L;
  }
  if (auto N = get_opt<double>(s, "N")) {
    require(*N >= 2.0, "N must be at least 2");
    const auto rc = classify_regime(limit_top_eigenvalue(pot));
    require(rc.regime != Regime::Pulled, "L(N) needs a bound state; give L explicitly");
    return cutoff_length(rc, *N, so.grid_spacing);
  }
  return fallback_L;
}

void print_constants(const SpectralData& sp) {
  const auto& c = sp.constants();
  std::printf("regime %s  lambda1_inf %.12g  mu %.10g  beta %.10g  alpha %.6g\n",
              to_string(c.regime).c_str(), c.lambda1_inf, c.mu, c.beta, c.alpha);
  if (auto s2 = sp.sigma2()) std::printf("Sigma2 %.10g  tilde_c %.10g\n", *s2, *sp.tilde_c());
}

// ---- spectrum ---------------------------------------------------------------------------------

int cmd_spectrum(const Context& ctx) {
  const json& s = ctx.section("spectrum");
  reject_unknown_keys(s, {"L", "k", "emit"}, "spectrum");
  const Potential pot = potential_of(ctx);
  const double L = get(s, "L", 10.0);
  const int k = get(s, "k", 5);
  require(L > 1.0, "L must exceed 1");
  require(k >= 1 && k <= 5000, "k must be in [1, 5000]");
  SpectralOptions so = spectral_options(ctx);
  so.n_terms = k;
  const SpectralData sp(pot, L, so);
  print_constants(sp);
  auto f = ctx.open(get<std::string>(s, "emit", "spectrum.csv"));
  f << "k,lambda_k,norm,n_zeros\n";
  for (int i = 0; i < k; ++i) {
    const auto u = static_cast<std::size_t>(i);
    f << i + 1 << ',' << num(sp.lambda(u)) << ',' << num(sp.norm(u)) << ',' << sp.zeros(u) << '\n';
    if (i < 10) std::printf("k=%d lambda=%.15g zeros=%d\n", i + 1, sp.lambda(u), sp.zeros(u));
  }
  return kExitPass;
}

// ---- kernel -----------------------------------------------------------------------------------

int cmd_kernel(const Context& ctx) {
  const json& s = ctx.section("kernel");
  reject_unknown_keys(s, {"L", "N", "t", "x", "y", "profile", "emit"}, "kernel");
  const Potential pot = potential_of(ctx);
  const SpectralOptions so = spectral_options(ctx);
  const double L = domain_length(s, pot, so, 20.0);
  double t = get(s, "t", 1.0), x = get(s, "x", 1.5);
  std::optional<double> y = get_opt<double>(s, "y");
  if (auto p = get_opt<std::string>(s, "profile")) {
    std::stringstream ss(*p);
    char comma = 0;
    require(static_cast<bool>(ss >> t >> comma >> x) && comma == ',', "profile must be 't,x'");
    y.reset();
  }
  require(x > 0 && x < L, "x must lie in (0, L)");
  const SpectralData sp(pot, L, so);
  require(t >= sp.t_min(), "t below the series horizon t_min = " + num(sp.t_min()));
  const KernelEvaluator kernel(sp);
  auto f = ctx.open(get<std::string>(s, "emit", "kernel.csv"));
  f << "y,p_t,q_t,Pi\n";
  if (y) {
    const double yy = y.value();
    require(yy >= 0 && yy <= L, "y must lie in [0, L]");
    const double p = kernel.heat(t, x, yy), q = kernel.spine(t, x, yy);
    f << num(yy) << ',' << num(p) << ',' << num(q) << ',' << num(sp.Pi(yy)) << '\n';
    std::printf("p_t=%.12g q_t=%.12g Pi=%.12g\n", p, q, sp.Pi(yy));
  } else {
    const auto p = kernel.heat_profile(t, x);
    const auto q = kernel.spine_profile(t, x);
    const auto& g = sp.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
      f << num(g[i]) << ',' << num(p[i]) << ',' << num(q[i]) << ',' << num(sp.Pi(g[i])) << '\n';
    std::printf("mass E[Z_t] = %.12g over %zu grid points\n", kernel.mass(t, x), g.size());
  }
  return kExitPass;
}

// ---- simulate ---------------------------------------------------------------------------------

int cmd_simulate(const Context& ctx) {
  const json& s = ctx.section("simulate");
  reject_unknown_keys(s,
                      {"L", "N", "t", "horizon", "x0", "mu", "replicas", "dt_max", "dt_max_boundary",
                       "boundary_layer", "max_particles", "gamma_levels", "branching", "emit_forest",
                       "emit_stats"},
                      "simulate");
  const Potential pot = potential_of(ctx);
  const auto rc = classify_regime(limit_top_eigenvalue(pot));
  SimConfig cfg;
  cfg.potential = pot;
  cfg.mu = get(s, "mu", rc.mu);
  const auto N = get_opt<double>(s, "N");
  if (s.contains("L") || N) cfg.cutoff = domain_length(s, pot, spectral_options(ctx), 0.0);
  if (auto h = get_opt<double>(s, "horizon")) {
    cfg.horizon = *h;
  } else {
    cfg.horizon = get(s, "t", 1.0) * N.value_or(1.0);
  }
  cfg.x0 = get(s, "x0", 1.0);
  cfg.dt_max = get(s, "dt_max", cfg.dt_max);
  cfg.dt_max_boundary = get(s, "dt_max_boundary", cfg.dt_max_boundary);
  cfg.boundary_layer = get(s, "boundary_layer", cfg.boundary_layer);
  cfg.max_particles = get(s, "max_particles", cfg.max_particles);
  cfg.gamma_levels = get(s, "gamma_levels", std::vector<double>{});
  cfg.branching = get(s, "branching", true);
  cfg.seed = ctx.seed;
  cfg.validate();
  const auto replicas = get<std::size_t>(s, "replicas", 1);
  require(replicas >= 1, "replicas must be at least 1");
  const auto forest_path = get_opt<std::string>(s, "emit_forest");
  require(!forest_path || replicas <= 1000, "emit_forest is limited to 1000 replicas");

  std::vector<ReplicaSummary> summaries(replicas);
  std::vector<std::string> forests(forest_path ? replicas : 0);
  parallel_for(replicas, ctx.threads, [&](std::size_t r) {
    const GenealogyForest forest = simulate(cfg, r);
    summaries[r] = summarize(forest);
    if (forest_path) forests[r] = forest.to_csv(false);
  });

  auto stats = ctx.open(get<std::string>(s, "emit_stats", "stats.csv"));
  stats << "replica,survived,Z_t";
  for (double g : cfg.gamma_levels) stats << ",escapes_gamma_" << short_num(g);
  stats << '\n';
  std::size_t survived = 0, capped = 0;
  RunningMoments z;
  for (const auto& sm : summaries) {
    stats << sm.replica << ',' << (sm.survived ? 1 : 0) << ',' << sm.population;
    for (auto e : sm.escapes) stats << ',' << e;
    stats << '\n';
    survived += sm.survived;
    capped += sm.capped;
    z.add(static_cast<double>(sm.population));
  }
  if (forest_path) {
    auto f = ctx.open(*forest_path);
    f << "id,parent_id,birth,death,cause,planar_bit,x_at_death\n";
    for (std::size_t r = 0; r < replicas; ++r) f << "# replica " << r << '\n' << forests[r];
  }
  std::printf("replicas %zu  survived %zu  capped %zu  E[Z] %.8g +- %.3g\n", replicas, survived, capped,
              z.mean(), z.standard_error());
  return kExitPass;
}

// ---- spine ------------------------------------------------------------------------------------

SpineFunctional functional_from(const json& s, int k, const SpectralData& sp) {
  SpineFunctional f;
  const auto psi = get<std::string>(s, "psi", "one");
  if (psi != "one") {
    auto g = parse_pair_function(psi);
    f.psi = [g](int, int, double d) { return g(d); };
  }
  auto phis = get(s, "phi", std::vector<std::string>{});
  if (phis.empty()) phis.assign(static_cast<std::size_t>(k), "one");
  if (phis.size() == 1 && k > 1) phis.assign(static_cast<std::size_t>(k), phis.front());
  require(static_cast<int>(phis.size()) == k, "phi needs one entry or k entries");
  // times_h_inf: phi(x) h_inf(x), the form whose accelerated limit is the CPP moment
  const bool weighted = get(s, "times_h_inf", false);
  for (const auto& p : phis) {
    auto g = parse_test_function(p);
    if (weighted) {
      const LimitProfile* lim = &sp.limit();
      f.phi.push_back([g, lim](double x) { return g(x) * lim->h_inf(x); });
    } else {
      f.phi.push_back(g);
    }
  }
  return f;
}

int cmd_spine(const Context& ctx) {
  const json& s = ctx.section("spine");
  reject_unknown_keys(s, {"L", "N", "k", "t", "x0", "replicas", "phi", "psi", "times_h_inf", "emit"}, "spine");
  const Potential pot = potential_of(ctx);
  const SpectralOptions so = spectral_options(ctx);
  const int k = get(s, "k", 2);
  const double t = get(s, "t", 1.0), x0 = get(s, "x0", 1.0), N = get(s, "N", 1.0);
  const auto replicas = get<std::size_t>(s, "replicas", 10000);
  require(k >= 1 && k <= 16, "k must be in [1, 16]");
  require(t > 0, "t must be positive");
  require(N >= 1, "N must be at least 1");
  require(replicas >= 100, "spine needs at least 100 replicas");
  // An acceleration N > 1 without an explicit L uses L(N).
  json dom = s;
  if (N <= 1.0) dom.erase("N");
  const double L = domain_length(dom, pot, so, 5.0);
  require(x0 > 0 && x0 < L, "x0 must lie in (0, L)");
  const SpectralData sp(pot, L, so);
  const SpineSampler sampler(sp);
  const SpineFunctional f = functional_from(s, k, sp);
  std::vector<SpineRecord> records;
  const SpineEstimate est = N > 1.0
                                ? spine_expectation(sampler, t, x0, f, replicas, N, ctx.seed, ctx.threads, &records)
                                : many_to_few_estimate(sampler, t, x0, f, replicas, N, ctx.seed, ctx.threads, &records);

  auto out = ctx.open(get<std::string>(s, "emit", "spine.csv"));
  out << "replica,weight";
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) out << ",U_" << i + 1 << '_' << j + 1;
  for (int i = 0; i < k; ++i) out << ",zeta_" << i + 1;
  out << ",estimate_contrib\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    out << r << ',' << num(rec.weight);
    for (double u : rec.U_pairs) out << ',' << num(u);
    for (double z : rec.leaf_marks) out << ',' << num(z);
    out << ',' << num(rec.contribution) << '\n';
  }
  std::printf("%s estimate %.10g +- %.4g  (prefactor %.6g, ess %.1f, top 1%% share %.3f%s)\n",
              N > 1.0 ? "accelerated" : "many-to-few", est.estimate, est.se, est.prefactor, est.ess,
              est.top_share, est.heavy_tail ? ", heavy tail" : "");
  return kExitPass;
}

// ---- cpp --------------------------------------------------------------------------------------

int cmd_cpp(const Context& ctx) {
  const json& s = ctx.section("cpp");
  reject_unknown_keys(s, {"T", "k", "replicas", "marks", "emit"}, "cpp");
  const double T = get(s, "T", 1.0);
  const int k = get(s, "k", 2);
  const auto replicas = get<std::size_t>(s, "replicas", 10000);
  require(T > 0, "T must be positive");
  require(k >= 2 && k <= 64, "k must be in [2, 64]");
  require(replicas >= 1, "replicas must be at least 1");
  std::optional<MarkDensity> marks;
  if (get(s, "marks", true)) {
    const Potential pot = potential_of(ctx);
    const LimitProfile limit = LimitProfile::compute(pot);
    require(limit.bound(), "marks need a potential with a bound state (or set marks=false)");
    marks = MarkDensity::tilde_h_inf(limit);
  }
  std::vector<HMatrix> samples(replicas);
  parallel_for(replicas, ctx.threads, [&](std::size_t r) {
    RandomStream rng(ctx.seed, r, kCoalescentStream);
    samples[r] = sample_H(k, T, rng, marks ? &*marks : nullptr);
  });
  auto out = ctx.open(get<std::string>(s, "emit", "cpp.csv"));
  out << "replica,theta";
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) out << ",H_" << i + 1 << '_' << j + 1;
  if (marks)
    for (int i = 0; i < k; ++i) out << ",mark_" << i + 1;
  out << '\n';
  std::size_t below = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto& h = samples[r];
    out << r << ',' << num(h.theta);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) out << ',' << num(h.dist[static_cast<std::size_t>(i * k + j)]);
    for (double m : h.marks) out << ',' << num(m);
    out << '\n';
    below += h.dist[1] <= T / 2;
  }
  const double p = static_cast<double>(below) / static_cast<double>(replicas);
  std::printf("P(H_12 <= T/2) = %.6f +- %.6f  (exact %.6f)\n", p,
              std::sqrt(p * (1 - p) / static_cast<double>(replicas)), 4 * std::log(2.0) - 2);
  return kExitPass;
}

// ---- fkpp -------------------------------------------------------------------------------------

int cmd_fkpp(const Context& ctx) {
  const json& s = ctx.section("fkpp");
  reject_unknown_keys(s, {"N", "L", "t", "T_end", "snapshots", "probes", "dx", "dt", "mode", "emit"}, "fkpp");
  const Potential pot = potential_of(ctx);
  const SpectralOptions so = spectral_options(ctx);
  const double N = get(s, "N", 200.0);
  const double t = get(s, "t", 1.0);
  json dom = s;
  if (!dom.contains("N")) dom["N"] = N;
  const double L = domain_length(dom, pot, so, 0.0);
  FkppOptions o;
  o.T_end = get_opt<double>(s, "T_end").value_or(t * N);
  o.snapshots = get(s, "snapshots", 100);
  o.probes = get(s, "probes", std::vector<double>{1.0, 2.0, 4.0});
  o.dx = get(s, "dx", o.dx);
  o.dt = get(s, "dt", o.dt);
  const auto mode = get<std::string>(s, "mode", "full");
  if (mode == "full") o.mode = FkppMode::Full;
  else if (mode == "linearized") o.mode = FkppMode::Linearized;
  else if (mode == "no_reaction") o.mode = FkppMode::NoReaction;
  else throw ConfigError("mode must be full, linearized or no_reaction");
  require(o.T_end > 0 && o.snapshots >= 1, "T_end and snapshots must be positive");
  for (double x : o.probes) require(x > 0 && x < L, "probes must lie in (0, L)");
  const SpectralData sp(pot, L, so);
  const FkppResult res = solve_fkpp(sp, o);
  auto out = ctx.open(get<std::string>(s, "emit", "fkpp.csv"));
  out << "t,a_t";
  for (double x : o.probes) out << ",u_" << short_num(x);
  out << '\n';
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    out << num(res.times[i]) << ',' << num(res.a[i]);
    for (double u : res.probes[i]) out << ',' << num(u);
    out << '\n';
  }
  std::printf("L %.6g  T_end %.6g  dt halvings %d\n", L, o.T_end, res.halvings);
  const auto s2 = sp.sigma2();
  for (double x : o.probes) {
    std::printf("x=%-6g N*u = %.8g", x, N * res.u_at(x));
    if (s2 && o.mode == FkppMode::Full) std::printf("  limit %.8g", 2 * sp.limit().h_inf(x) / (*s2 * o.T_end / N));
    std::printf("\n");
  }
  return kExitPass;
}

// ---- verify -----------------------------------------------------------------------------------

struct Gate {
  std::string name;
  bool pass;
  std::string detail;
};

int cmd_verify(const Context& ctx) {
  const json& s = ctx.section("verify");
  reject_unknown_keys(s, {"N", "t", "x0", "replicas", "checks", "kolmogorov_N", "pairs_per_survivor",
                          "triples_per_survivor", "gates", "emit"},
                      "verify");
  const json gates = get(s, "gates", json::object());
  reject_unknown_keys(gates,
                      {"min_survivors", "moment_ratio_low", "moment_ratio_high", "yaglom_ks_p", "yaglom_mean_rel",
                       "pair_ks_max", "mark_chi2_p", "kolmogorov_rel", "mc_fkpp_z"},
                      "verify.gates");
  auto checks = get(s, "checks", std::vector<std::string>{"yaglom", "genealogy", "kolmogorov"});
  for (const auto& c : checks)
    require(c == "yaglom" || c == "genealogy" || c == "kolmogorov", "unknown check '" + c + "'");
  auto has = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };

  const Potential pot = potential_of(ctx);
  const SpectralOptions so = spectral_options(ctx);
  const auto rc = classify_regime(limit_top_eigenvalue(pot));
  if (rc.regime != Regime::FullyPushed)
    throw RegimeError("verify refused: Sigma^2 undefined in the " + to_string(rc.regime) + " regime");

  PopulationOptions po;
  po.N = get(s, "N", 200.0);
  po.t = get(s, "t", 1.0);
  po.x0 = get(s, "x0", 2.0);
  po.replicas = get<std::size_t>(s, "replicas", 160000);
  po.pairs_per_survivor = get<std::size_t>(s, "pairs_per_survivor", 100);
  po.triples_per_survivor = get<std::size_t>(s, "triples_per_survivor", 20);
  po.seed = ctx.seed;
  po.threads = ctx.threads;
  const std::size_t min_surv = get<std::size_t>(gates, "min_survivors", 300);

  const SpectralData sp(pot, cutoff_length(rc, po.N, so.grid_spacing), so);
  json report = json::object();
  std::vector<Gate> results;
  std::optional<PopulationRun> run;
  if (has("yaglom") || has("genealogy") || has("kolmogorov")) run = run_population(sp, po);
  report["population"] = {{"N", po.N}, {"t", po.t}, {"x0", po.x0}, {"replicas", po.replicas},
                          {"survivors", run->survivors.size()}, {"capped", run->capped}};

  if (has("yaglom")) {
    const auto y = run_yaglom(*run, sp, min_surv);
    report["yaglom"] = to_json(y);
    const double lo = get(gates, "moment_ratio_low", 0.85), hi = get(gates, "moment_ratio_high", 1.15);
    results.push_back({"yaglom.survivors", y.sufficient, std::to_string(y.survivors) + " survivors"});
    results.push_back({"yaglom.moment_ratio", y.sufficient && y.moment_ratio >= lo && y.moment_ratio <= hi,
                       num(y.moment_ratio)});
    results.push_back({"yaglom.ks_fitted", y.sufficient && y.ks_fitted.p_value > get(gates, "yaglom_ks_p", 0.01),
                       "D=" + num(y.ks_fitted.statistic) + " p=" + num(y.ks_fitted.p_value)});
    results.push_back({"yaglom.mean", y.sufficient && y.mean_rel_err <= get(gates, "yaglom_mean_rel", 0.15),
                       "rel=" + num(y.mean_rel_err)});
  }
  if (has("genealogy")) {
    const auto g = run_genealogy(*run, sp, 20, min_surv);
    report["genealogy"] = to_json(g);
    results.push_back({"genealogy.pair_ks", g.sufficient && g.ks_pairs.statistic <= get(gates, "pair_ks_max", 0.08),
                       "D=" + num(g.ks_pairs.statistic)});
    results.push_back({"genealogy.marks", g.sufficient && g.chi2_marks.p_value > get(gates, "mark_chi2_p", 0.01),
                       "p=" + num(g.chi2_marks.p_value)});
    results.push_back({"genealogy.ultrametric", g.violations == 0, std::to_string(g.violations) + " violations"});
  }
  if (has("kolmogorov")) {
    const auto Ns = get(s, "kolmogorov_N", std::vector<double>{100.0, 200.0, 400.0});
    const auto k = run_kolmogorov(pot, Ns, po.t, po.x0, FkppOptions{}, {&*run}, so);
    report["kolmogorov"] = to_json(k);
    const double tol = get(gates, "kolmogorov_rel", 0.2), zmax = get(gates, "mc_fkpp_z", 3.0);
    for (const auto& row : k.rows) {
      results.push_back({"kolmogorov.fkpp_N" + short_num(row.N), row.fkpp_rel_err <= tol, "rel=" + num(row.fkpp_rel_err)});
      if (row.has_mc) {
        results.push_back({"kolmogorov.mc_vs_fkpp_N" + short_num(row.N), row.mc_fkpp_z <= zmax, "z=" + num(row.mc_fkpp_z)});
        results.push_back({"kolmogorov.mc_vs_limit_N" + short_num(row.N), row.mc_rel_err <= tol, "rel=" + num(row.mc_rel_err)});
      }
    }
    results.push_back({"kolmogorov.fkpp_trend", k.fkpp_trend_nonincreasing, ""});
  }

  bool all = true;
  json gj = json::array();
  for (const auto& r : results) {
    std::printf("%-36s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
    gj.push_back({{"gate", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all = all && r.pass;
  }
  report["gates"] = gj;
  report["pass"] = all;
  auto out = ctx.open(get<std::string>(s, "emit", "verify.json"));
  out << report.dump(2) << '\n';
  return all ? kExitPass : kExitGate;
}

// Flag values are read as JSON when they parse, otherwise as strings ("step:10", "one").
json flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pushedfront: branching Brownian motion in the fully pushed regime"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1, 1);

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  // (section key) -> raw flag text
  std::map<std::pair<std::string, std::string>, std::string> overrides;
  std::string potential_flag;

  using Handler = int (*)(const Context&);
  std::map<std::string, Handler> handlers = {{"spectrum", cmd_spectrum}, {"kernel", cmd_kernel},
                                             {"simulate", cmd_simulate}, {"spine", cmd_spine},
                                             {"cpp", cmd_cpp},           {"fkpp", cmd_fkpp},
                                             {"verify", cmd_verify}};
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>> flags = {
      {"spectrum", {{"L", "domain length"}, {"k", "number of eigenvalues"}, {"emit", "CSV path"}}},
      {"kernel", {{"L", "domain length"}, {"N", "population size (L = L(N))"}, {"t", "time"}, {"x", "start"},
                  {"y", "end point"}, {"profile", "'t,x': full profile in y"}, {"emit", "CSV path"}}},
      {"simulate", {{"replicas", "replica count"}, {"N", "population size"}, {"L", "cutoff"}, {"t", "time in units of N"},
                    {"horizon", "absolute horizon"}, {"x0", "start"}, {"emit-forest", "forest CSV path"},
                    {"emit-stats", "stats CSV path"}}},
      {"spine", {{"k", "number of leaves"}, {"t", "depth"}, {"x0", "root position"}, {"N", "acceleration"},
                 {"L", "domain length"}, {"replicas", "replica count"}, {"emit", "CSV path"}}},
      {"cpp", {{"T", "depth"}, {"k", "sample size"}, {"replicas", "replica count"}, {"emit", "CSV path"}}},
      {"fkpp", {{"N", "population size"}, {"t", "time in units of N"}, {"snapshots", "output times"},
                {"emit", "CSV path"}}},
      {"verify", {{"replicas", "replica count"}, {"emit", "JSON report path"}}},
  };

  for (const auto& [name, list] : flags) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--potential", potential_flag, "zero | step:<b> | table:<file> | bump:<a>");
    for (const auto& [flag, help] : list) {
      std::string key = flag;
      std::replace(key.begin(), key.end(), '-', '_');
      const std::string section = name;
      sub->add_option_function<std::string>(
          "--" + flag, [&overrides, section, key](const std::string& v) { overrides[{section, key}] = v; }, help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    Context ctx;
    ctx.config = config_path.empty() ? json::object() : load_config(config_path);
    require(ctx.config.is_object(), "config must be a JSON object");
    reject_unknown_keys(ctx.config,
                        {"potential", "seed", "spectral", "spectrum", "kernel", "simulate", "spine", "cpp",
                         "fkpp", "verify"},
                        "config");
    reject_unknown_keys(ctx.section("spectral"), {"t_min", "grid_spacing", "series_tolerance", "max_terms"},
                        "spectral");
    if (!potential_flag.empty()) ctx.config["potential"] = potential_flag;
    for (const auto& [where, text] : overrides) ctx.config[where.first][where.second] = flag_value(text);
    ctx.seed = seed ? *seed : get<std::uint64_t>(ctx.config, "seed", 0);
    ctx.config.erase("seed");
    ctx.hash = config_hash(ctx.config);
    ctx.out = out_dir;
    ctx.threads = worker_count();
    const std::string name = app.get_subcommands().front()->get_name();
    return handlers.at(name)(ctx);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const RegimeError& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInternal;
  }
}
