#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushedfront/bbm_sim.hpp"
#include "pushedfront/fkpp.hpp"
#include "pushedfront/spectral.hpp"
#include "pushedfront/stats.hpp"

namespace pushedfront {

const char* version();

// ---- configuration -------------------------------------------------------------------------

nlohmann::json load_config(const std::string& path);
// FNV-1a over the compact dump (keys are sorted by nlohmann::json).
std::string config_hash(const nlohmann::json& config);
// "# pushedfront <version> seed=<seed> config=<hash>"
std::string stamp_line(std::uint64_t seed, const std::string& hash);

// Throws ConfigError naming the first key of `object` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<const char*> allowed,
                         const std::string& where);

// "one", "zero", "const:c", "indicator:a:b", "bump:a:b" (smooth, support (a, b), peak 1).
std::function<double(double)> parse_test_function(const std::string& text);
// "one", "le:s" (1 if d <= s), "gt:s", "exp:c" (exp(-c d)).
std::function<double(double)> parse_pair_function(const std::string& text);

// ---- population experiments ----------------------------------------------------------------

struct PopulationOptions {
  double N = 200.0;
  double t = 1.0;
  double x0 = 2.0;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t pairs_per_survivor = 100;
  std::size_t triples_per_survivor = 20;
  double dt_max = 0.1;
  double dt_max_boundary = 0.01;
  double boundary_layer = 0.5;
  std::size_t max_particles = 20'000'000;
};

// Replicas of the BBM killed at 0 and L(N) run to time tN; survivors are reduced to their
// rescaled mass, sampled pair distances and marks.
struct PopulationRun {
  PopulationOptions options;
  double L = 0.0;
  std::size_t capped = 0;
  std::vector<std::uint64_t> survivors;      // replica indices
  std::vector<double> masses;                // Z / N per survivor
  std::vector<double> pair_distances;        // distinct uniform pairs, rescaled by N
  std::vector<double> first_marks;           // one uniform mark per survivor
  std::size_t triangles = 0;
  std::size_t ultrametric_violations = 0;

  std::size_t effective_replicas() const { return options.replicas - capped; }
  double survival() const;
  double survival_se() const;
};

PopulationRun run_population(const SpectralData& spectral, const PopulationOptions& options);

struct YaglomReport {
  bool sufficient = false;
  std::size_t survivors = 0;
  std::size_t replicas = 0;
  double mean = 0.0;
  double variance = 0.0;
  double moment_ratio = 0.0;   // E[X^2] / (2 E[X]^2)
  double limit_mean = 0.0;     // Sigma^2 t / 2
  double mean_rel_err = 0.0;
  TestResult ks_fitted;        // vs Exp(sample mean)
  TestResult ks_limit;         // vs Exp(limit mean)
};

YaglomReport run_yaglom(const PopulationRun& run, const SpectralData& spectral,
                        std::size_t min_survivors = 300);
YaglomReport run_yaglom(const SpectralData& spectral, double N, double t, double x0,
                        std::size_t replicas, std::uint64_t seed = 0, unsigned threads = 1);

struct GenealogyReport {
  bool sufficient = false;
  std::size_t survivors = 0;
  std::size_t pairs = 0;
  TestResult ks_pairs;     // pooled distances vs the H_{1,2} law
  TestResult chi2_marks;   // first marks vs h~inf, quantile bins
  std::size_t triangles = 0;
  std::size_t violations = 0;
};

GenealogyReport run_genealogy(const PopulationRun& run, const SpectralData& spectral, int bins = 20,
                              std::size_t min_survivors = 300);
GenealogyReport run_genealogy(const SpectralData& spectral, double N, double t, double x0, int k,
                              std::size_t replicas, std::uint64_t seed = 0, unsigned threads = 1);

struct KolmogorovRow {
  double N = 0.0;
  double L = 0.0;
  double limit = 0.0;          // 2 h^inf(x0) / (Sigma^2 t)
  double fkpp = 0.0;           // N u(tN, x0)
  double fkpp_rel_err = 0.0;
  bool has_mc = false;
  double mc = 0.0;             // N * survival frequency
  double mc_se = 0.0;
  double mc_rel_err = 0.0;
  double mc_fkpp_z = 0.0;      // |mc - fkpp| / mc_se
  std::size_t survivors = 0;
  std::size_t replicas = 0;
};

struct KolmogorovReport {
  std::vector<KolmogorovRow> rows;
  bool fkpp_trend_nonincreasing = true;
  bool mc_trend_nonincreasing = true;  // over rows with Monte Carlo
};

// FKPP at every N; Monte Carlo rows are filled from `runs` with a matching N. Refuses
// potentials that are not fully pushed.
KolmogorovReport run_kolmogorov(const Potential& potential, const std::vector<double>& N_list,
                                double t, double x0, const FkppOptions& fkpp,
                                const std::vector<const PopulationRun*>& runs = {},
                                SpectralOptions spectral_options = {});

nlohmann::json to_json(const YaglomReport& r);
nlohmann::json to_json(const GenealogyReport& r);
nlohmann::json to_json(const KolmogorovReport& r);

}  // namespace pushedfront
