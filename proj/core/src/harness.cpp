#include "pushedfront/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pushedfront/coalescent.hpp"
#include "pushedfront/errors.hpp"
#include "pushedfront/genealogy.hpp"
#include "pushedfront/parallel.hpp"
#include "pushedfront/rng.hpp"

#ifndef PUSHEDFRONT_VERSION
#define PUSHEDFRONT_VERSION "0.0.0"
#endif

namespace pushedfront {

const char* version() { return PUSHEDFRONT_VERSION; }

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

std::string config_hash(const nlohmann::json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string stamp_line(std::uint64_t seed, const std::string& hash) {
  return std::string("# pushedfront ") + version() + " seed=" + std::to_string(seed) + " config=" + hash;
}

void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : object.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return item.key() == a; });
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(part);
  return out;
}

double number(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("bad number '" + s + "' in '" + context + "'");
  }
}

}  // namespace

std::function<double(double)> parse_test_function(const std::string& text) {
  const auto p = split(text, ':');
  if (p.empty()) throw ConfigError("empty test function");
  if (p[0] == "one" && p.size() == 1) return [](double) { return 1.0; };
  if (p[0] == "zero" && p.size() == 1) return [](double) { return 0.0; };
  if (p[0] == "const" && p.size() == 2) {
    const double c = number(p[1], text);
    return [c](double) { return c; };
  }
  if ((p[0] == "indicator" || p[0] == "bump") && p.size() == 3) {
    const double a = number(p[1], text), b = number(p[2], text);
    if (!(b > a)) throw ConfigError("test function '" + text + "' needs a < b");
    if (p[0] == "indicator") return [a, b](double x) { return x >= a && x < b ? 1.0 : 0.0; };
    return [a, b](double x) {
      const double z = (2.0 * x - a - b) / (b - a);
      return std::abs(z) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
    };
  }
  throw ConfigError("unknown test function '" + text + "'");
}

std::function<double(double)> parse_pair_function(const std::string& text) {
  const auto p = split(text, ':');
  if (p.empty()) throw ConfigError("empty pair function");
  if (p[0] == "one" && p.size() == 1) return [](double) { return 1.0; };
  if (p.size() == 2) {
    const double s = number(p[1], text);
    if (p[0] == "le") return [s](double d) { return d <= s ? 1.0 : 0.0; };
    if (p[0] == "gt") return [s](double d) { return d > s ? 1.0 : 0.0; };
    if (p[0] == "exp") return [s](double d) { return std::exp(-s * d); };
  }
  throw ConfigError("unknown pair function '" + text + "'");
}

// ---------------------------------------------------------------------------------------------

double PopulationRun::survival() const {
  const auto n = effective_replicas();
  return n ? static_cast<double>(survivors.size()) / static_cast<double>(n) : 0.0;
}

double PopulationRun::survival_se() const {
  const auto n = effective_replicas();
  if (!n) return 0.0;
  const double p = survival();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

namespace {

struct ReplicaOut {
  bool survived = false;
  bool capped = false;
  double mass = 0.0;
  double first_mark = 0.0;
  std::vector<double> pairs;
  std::size_t triangles = 0, violations = 0;
};

}  // namespace

PopulationRun run_population(const SpectralData& sp, const PopulationOptions& opt) {
  if (!(opt.N >= 2.0)) throw ConfigError("population size N must be at least 2");
  if (!(opt.t > 0.0)) throw ConfigError("t must be positive");
  if (opt.replicas < 1) throw ConfigError("need at least one replica");
  const double L = cutoff_length(sp.constants(), opt.N, sp.options().grid_spacing);
  if (std::abs(L - sp.L()) > 1e-9 * L) throw ConfigError("spectral data must be built at L = L(N)");

  SimConfig cfg;
  cfg.potential = sp.potential();
  cfg.mu = sp.mu();
  cfg.horizon = opt.t * opt.N;
  cfg.cutoff = L;
  cfg.x0 = opt.x0;
  cfg.dt_max = opt.dt_max;
  cfg.dt_max_boundary = opt.dt_max_boundary;
  cfg.boundary_layer = opt.boundary_layer;
  cfg.seed = opt.seed;
  cfg.max_particles = opt.max_particles;
  cfg.validate();

  std::vector<ReplicaOut> out(opt.replicas);
  parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
    const GenealogyForest forest = simulate(cfg, r);
    ReplicaOut& o = out[r];
    if (forest.capped) {
      o.capped = true;
      return;
    }
    if (!forest.survived()) return;
    o.survived = true;
    const MarkedSample s = extract_mmm(forest, cfg.horizon, opt.N);
    o.mass = s.total_mass();
    RandomStream rng(opt.seed, r, kSamplingStream);
    const std::size_t n = s.size();
    o.first_mark = s.mark(static_cast<std::size_t>(rng.below(n)));
    if (n >= 2) {
      for (std::size_t p = 0; p < opt.pairs_per_survivor; ++p) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        auto j = static_cast<std::size_t>(rng.below(n - 1));
        if (j >= i) ++j;
        o.pairs.push_back(s.distance(i, j));
      }
    }
    if (n >= 3) {
      for (std::size_t p = 0; p < opt.triples_per_survivor; ++p) {
        std::size_t idx[3];
        for (auto& v : idx) v = static_cast<std::size_t>(rng.below(n));
        std::vector<double> d(9, 0.0);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) d[static_cast<std::size_t>(a * 3 + b)] = s.distance(idx[a], idx[b]);
        ++o.triangles;
        if (!is_ultrametric(d, 3)) ++o.violations;
      }
    }
  });

  PopulationRun run;
  run.options = opt;
  run.L = L;
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto& o = out[r];
    if (o.capped) ++run.capped;
    if (!o.survived) continue;
    run.survivors.push_back(r);
    run.masses.push_back(o.mass);
    run.first_marks.push_back(o.first_mark);
    run.pair_distances.insert(run.pair_distances.end(), o.pairs.begin(), o.pairs.end());
    run.triangles += o.triangles;
    run.ultrametric_violations += o.violations;
  }
  return run;
}

YaglomReport run_yaglom(const PopulationRun& run, const SpectralData& sp, std::size_t min_survivors) {
  const auto s2 = sp.sigma2();
  if (!s2) throw RegimeError("Yaglom law needs a fully pushed potential");
  YaglomReport rep;
  rep.survivors = run.survivors.size();
  rep.replicas = run.effective_replicas();
  rep.limit_mean = *s2 * run.options.t / 2.0;
  rep.sufficient = rep.survivors >= std::max<std::size_t>(min_survivors, 2);
  if (rep.survivors < 2) return rep;
  RunningMoments m;
  for (double x : run.masses) m.add(x);
  rep.mean = m.mean();
  rep.variance = m.variance();
  rep.moment_ratio = m.second_moment() / (2.0 * rep.mean * rep.mean);
  rep.mean_rel_err = std::abs(rep.mean - rep.limit_mean) / rep.limit_mean;
  const double fm = rep.mean, lm = rep.limit_mean;
  rep.ks_fitted = ks_test(run.masses, [fm](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x / fm); });
  rep.ks_limit = ks_test(run.masses, [lm](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x / lm); });
  return rep;
}

YaglomReport run_yaglom(const SpectralData& sp, double N, double t, double x0, std::size_t replicas,
                        std::uint64_t seed, unsigned threads) {
  PopulationOptions o;
  o.N = N;
  o.t = t;
  o.x0 = x0;
  o.replicas = replicas;
  o.seed = seed;
  o.threads = threads;
  o.pairs_per_survivor = 0;
  o.triples_per_survivor = 0;
  return run_yaglom(run_population(sp, o), sp);
}

GenealogyReport run_genealogy(const PopulationRun& run, const SpectralData& sp, int bins,
                              std::size_t min_survivors) {
  if (!sp.limit().bound()) throw RegimeError("genealogy limit needs a bound state");
  if (bins < 2) throw ConfigError("need at least two mark bins");
  GenealogyReport rep;
  rep.survivors = run.survivors.size();
  rep.pairs = run.pair_distances.size();
  rep.triangles = run.triangles;
  rep.violations = run.ultrametric_violations;
  rep.sufficient = rep.survivors >= std::max<std::size_t>(min_survivors, 2) && rep.pairs > 0;
  if (rep.pairs > 0) {
    const double t = run.options.t;
    rep.ks_pairs = ks_test(run.pair_distances, [t](double s) { return h12_cdf(s, t); });
  }
  if (!run.first_marks.empty()) {
    const auto density = MarkDensity::tilde_h_inf(sp.limit());
    std::vector<double> edges;
    for (int i = 0; i < bins; ++i) edges.push_back(density.quantile(static_cast<double>(i) / bins));
    edges.front() = 0.0;
    edges.push_back(std::numeric_limits<double>::max());
    const auto counts = histogram(run.first_marks, edges);
    std::vector<double> expected(counts.size(), static_cast<double>(run.first_marks.size()) / bins);
    rep.chi2_marks = chi_square(counts, expected);
  }
  return rep;
}

GenealogyReport run_genealogy(const SpectralData& sp, double N, double t, double x0, int k,
                              std::size_t replicas, std::uint64_t seed, unsigned threads) {
  if (k < 2) throw ConfigError("genealogy needs k >= 2");
  PopulationOptions o;
  o.N = N;
  o.t = t;
  o.x0 = x0;
  o.replicas = replicas;
  o.seed = seed;
  o.threads = threads;
  if (k < 3) o.triples_per_survivor = 0;
  return run_genealogy(run_population(sp, o), sp);
}

KolmogorovReport run_kolmogorov(const Potential& potential, const std::vector<double>& N_list,
                                double t, double x0, const FkppOptions& fkpp,
                                const std::vector<const PopulationRun*>& runs,
                                SpectralOptions spectral_options) {
  const auto constants = classify_regime(limit_top_eigenvalue(potential));
  if (constants.regime != Regime::FullyPushed)
    throw RegimeError("Kolmogorov estimate refused: Sigma^2 undefined in the " +
                      to_string(constants.regime) + " regime");
  if (N_list.empty()) throw ConfigError("N_list must not be empty");
  KolmogorovReport rep;
  std::vector<double> sorted = N_list;
  std::sort(sorted.begin(), sorted.end());
  for (double N : sorted) {
    const double L = cutoff_length(constants, N, spectral_options.grid_spacing);
    const SpectralData sp(potential, L, spectral_options);
    const auto check = kolmogorov_check(sp, N, t, x0, fkpp);
    KolmogorovRow row;
    row.N = N;
    row.L = L;
    row.limit = check.rhs;
    row.fkpp = check.lhs;
    row.fkpp_rel_err = check.rel_err;
    for (const PopulationRun* run : runs) {
      if (!run || run->options.N != N || run->options.t != t || run->options.x0 != x0) continue;
      row.has_mc = true;
      row.replicas = run->effective_replicas();
      row.survivors = run->survivors.size();
      row.mc = N * run->survival();
      row.mc_se = N * run->survival_se();
      row.mc_rel_err = std::abs(row.mc - row.limit) / row.limit;
      row.mc_fkpp_z = row.mc_se > 0 ? std::abs(row.mc - row.fkpp) / row.mc_se : INFINITY;
      break;
    }
    rep.rows.push_back(row);
  }
  const KolmogorovRow* last_mc = nullptr;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (i > 0 && rep.rows[i].fkpp_rel_err > rep.rows[i - 1].fkpp_rel_err * (1.0 + 1e-9))
      rep.fkpp_trend_nonincreasing = false;
    if (rep.rows[i].has_mc) {
      if (last_mc && rep.rows[i].mc_rel_err > last_mc->mc_rel_err) rep.mc_trend_nonincreasing = false;
      last_mc = &rep.rows[i];
    }
  }
  return rep;
}

namespace {

nlohmann::json test_json(const TestResult& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"n", r.n}, {"dof", r.dof}};
}

}  // namespace

nlohmann::json to_json(const YaglomReport& r) {
  return {{"sufficient", r.sufficient},   {"survivors", r.survivors},
          {"replicas", r.replicas},       {"mean", r.mean},
          {"variance", r.variance},       {"moment_ratio", r.moment_ratio},
          {"limit_mean", r.limit_mean},   {"mean_rel_err", r.mean_rel_err},
          {"ks_fitted", test_json(r.ks_fitted)}, {"ks_limit", test_json(r.ks_limit)}};
}

nlohmann::json to_json(const GenealogyReport& r) {
  return {{"sufficient", r.sufficient}, {"survivors", r.survivors}, {"pairs", r.pairs},
          {"ks_pairs", test_json(r.ks_pairs)}, {"chi2_marks", test_json(r.chi2_marks)},
          {"triangles", r.triangles}, {"ultrametric_violations", r.violations}};
}

nlohmann::json to_json(const KolmogorovReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = {{"N", row.N}, {"L", row.L}, {"limit", row.limit}, {"fkpp", row.fkpp},
                        {"fkpp_rel_err", row.fkpp_rel_err}};
    if (row.has_mc) {
      j["mc"] = row.mc;
      j["mc_se"] = row.mc_se;
      j["mc_rel_err"] = row.mc_rel_err;
      j["mc_fkpp_z"] = row.mc_fkpp_z;
      j["survivors"] = row.survivors;
      j["replicas"] = row.replicas;
    }
    rows.push_back(j);
  }
  return {{"rows", rows},
          {"fkpp_trend_nonincreasing", r.fkpp_trend_nonincreasing},
          {"mc_trend_nonincreasing", r.mc_trend_nonincreasing}};
}

}  // namespace pushedfront
