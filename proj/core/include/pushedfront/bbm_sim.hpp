#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pushedfront/potential.hpp"

namespace pushedfront {

struct SimConfig {
  Potential potential = Potential::zero();
  double mu = 1.0;
  double horizon = 1.0;
  std::optional<double> cutoff;        // absorbing upper boundary L
  double x0 = 1.0;
  double dt_max = 0.1;                 // sub-step in the bulk
  double dt_max_boundary = 0.01;       // sub-step within boundary_layer of 0 or L
  double boundary_layer = 0.5;
  std::uint64_t seed = 0;
  std::size_t max_particles = 20'000'000;  // cap on node records per replica
  std::vector<double> gamma_levels;    // escape thresholds, as fractions of the cutoff
  std::vector<double> snapshot_times;  // times in (0, horizon) at which alive marks are kept
  bool branching = true;               // false: pure killed diffusion

  void validate() const;  // ConfigError
};

enum class DeathCause : std::uint8_t { Absorbed0, AbsorbedL, Branched, AliveAtHorizon };

const char* to_string(DeathCause cause);

inline constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

struct NodeRecord {
  std::uint32_t parent = kNoNode;
  std::uint32_t first_child = kNoNode;  // children are first_child and first_child + 1
  double birth = 0.0;
  double death = 0.0;
  double x_birth = 0.0;
  double x_death = 0.0;
  DeathCause cause = DeathCause::AliveAtHorizon;
  std::uint8_t planar_bit = 0;
};

struct SnapshotEntry {
  std::uint32_t node;
  double x;
};

class GenealogyForest {
 public:
  std::uint64_t replica = 0;
  double horizon = 0.0;
  std::optional<double> cutoff;
  bool capped = false;
  std::vector<NodeRecord> nodes;
  std::vector<double> escape_levels;          // absolute levels gamma * L
  std::vector<std::uint64_t> escape_counts;   // lineages first reaching each level
  std::vector<double> snapshot_times;
  std::vector<std::vector<SnapshotEntry>> snapshots;

  std::size_t alive_at_horizon() const;
  bool survived() const { return alive_at_horizon() > 0; }
  // Number of particles alive at a snapshot time or at the horizon.
  std::size_t population(double t) const;

  // One node per line: id,parent_id,birth,death,cause,planar_bit,x_at_death (parent -1 for root).
  std::string to_csv(bool header = true) const;
};

// One replica; deterministic in (config.seed, replica).
GenealogyForest simulate(const SimConfig& config, std::uint64_t replica = 0);

struct ReplicaSummary {
  std::uint64_t replica = 0;
  bool survived = false;
  bool capped = false;
  std::uint64_t population = 0;  // Z at the horizon
  std::uint64_t nodes = 0;
  std::vector<std::uint64_t> escapes;
};

ReplicaSummary summarize(const GenealogyForest& forest);

}  // namespace pushedfront
