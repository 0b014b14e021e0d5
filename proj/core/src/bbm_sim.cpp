#include "pushedfront/bbm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pushedfront/errors.hpp"
#include "pushedfront/rng.hpp"

namespace pushedfront {

void SimConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
  if (!(dt_max > 0.0) || !(dt_max_boundary > 0.0)) throw ConfigError("dt_max must be positive");
  if (boundary_layer < 0.0) throw ConfigError("boundary_layer must be non-negative");
  if (!(x0 > 0.0)) throw ConfigError("x0 must be positive");
  if (cutoff) {
    if (!(*cutoff > 0.0)) throw ConfigError("cutoff must be positive");
    if (!(x0 < *cutoff)) throw ConfigError("x0 must lie below the cutoff");
  }
  if (max_particles < 1) throw ConfigError("max_particles must be at least 1");
  if (!gamma_levels.empty() && !cutoff) throw ConfigError("gamma_levels need a cutoff");
  if (gamma_levels.size() > 32) throw ConfigError("at most 32 gamma levels");
  for (double g : gamma_levels)
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("gamma levels must lie in (0, 1]");
  for (double s : snapshot_times)
    if (!(s > 0.0 && s < horizon)) throw ConfigError("snapshot times must lie in (0, horizon)");
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()))
    throw ConfigError("snapshot times must be sorted");
  if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
}

const char* to_string(DeathCause cause) {
  switch (cause) {
    case DeathCause::Absorbed0: return "absorbed0";
    case DeathCause::AbsorbedL: return "absorbedL";
    case DeathCause::Branched: return "branched";
    case DeathCause::AliveAtHorizon: return "alive_at_horizon";
  }
  return "?";
}

std::size_t GenealogyForest::alive_at_horizon() const {
  if (capped) return 0;
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const NodeRecord& n) {
    return n.cause == DeathCause::AliveAtHorizon;
  }));
}

std::size_t GenealogyForest::population(double t) const {
  if (t == horizon) return alive_at_horizon();
  for (std::size_t i = 0; i < snapshot_times.size(); ++i)
    if (snapshot_times[i] == t) return snapshots[i].size();
  throw ConfigError("population: time is neither the horizon nor a snapshot time");
}

std::string GenealogyForest::to_csv(bool header) const {
  std::ostringstream out;
  out.precision(17);
  if (header) out << "id,parent_id,birth,death,cause,planar_bit,x_at_death\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    out << i << ',' << (n.parent == kNoNode ? -1 : static_cast<long long>(n.parent)) << ','
        << n.birth << ',' << n.death << ',' << to_string(n.cause) << ','
        << static_cast<int>(n.planar_bit) << ',' << n.x_death << '\n';
  }
  return out.str();
}

namespace {

struct Active {
  std::uint32_t node;
  std::uint32_t mask;  // escape levels already reached by the lineage
  double t, x;
  std::uint64_t stream;
};

// Crossing probability of a Brownian bridge of duration dt between two points at distances
// a, b from a barrier; draws only when the probability is not negligible.
inline bool bridge_cross(RandomStream& rng, double a, double b, double dt) {
  const double e = 2.0 * a * b / dt;
  return e < 37.0 && rng.uniform() < std::exp(-e);
}

bool within_reach(double c, double x, double xn, double dt) {
  return c > x && c > xn && 2.0 * (c - x) * (c - xn) / dt < 37.0;
}

// Maximum of the Brownian bridge from x to xn over dt, by inversion of
// P(M >= c) = exp(-2 (c - x)(c - xn) / dt).
double bridge_max(RandomStream& rng, double x, double xn, double dt) {
  const double d = xn - x;
  return 0.5 * (x + xn + std::sqrt(d * d - 2.0 * dt * std::log(rng.uniform())));
}

}  // namespace

GenealogyForest simulate(const SimConfig& cfg, std::uint64_t replica) {
  cfg.validate();
  GenealogyForest forest;
  forest.replica = replica;
  forest.horizon = cfg.horizon;
  forest.cutoff = cfg.cutoff;
  forest.snapshot_times = cfg.snapshot_times;
  forest.snapshots.resize(cfg.snapshot_times.size());

  const double L = cfg.cutoff.value_or(std::numeric_limits<double>::infinity());
  for (double g : cfg.gamma_levels) forest.escape_levels.push_back(g * L);
  forest.escape_counts.assign(forest.escape_levels.size(), 0);
  const auto& levels = forest.escape_levels;
  const std::size_t n_levels = levels.size();

  const Potential& pot = cfg.potential;
  const double r_max = pot.r_max();
  const double mu = cfg.mu;
  const auto& snaps = cfg.snapshot_times;
  const double horizon = cfg.horizon;

  NodeRecord root;
  root.x_birth = cfg.x0;
  forest.nodes.push_back(root);
  std::vector<Active> stack;
  stack.push_back({0, 0, 0.0, cfg.x0, RandomStream::derive(replica, 0x9a3f)});

  while (!stack.empty()) {
    const Active a = stack.back();
    stack.pop_back();
    RandomStream rng(cfg.seed, a.stream, kParticleStream);
    double t = a.t, x = a.x;
    std::uint32_t mask = a.mask;
    std::size_t snap = static_cast<std::size_t>(std::upper_bound(snaps.begin(), snaps.end(), t) - snaps.begin());

    for (;;) {
      double t_event = horizon;
      if (cfg.branching) t_event = std::min(horizon, t + rng.exponential(r_max));

      bool died = false;
      DeathCause cause = DeathCause::AliveAtHorizon;
      while (t < t_event) {
        const bool near = x < cfg.boundary_layer || x > L - cfg.boundary_layer;
        double stop = t_event;
        if (snap < snaps.size() && snaps[snap] < stop) stop = snaps[snap];
        double t_next = t + (near ? cfg.dt_max_boundary : cfg.dt_max);
        if (t_next >= stop) t_next = stop;
        const double dt = t_next - t;
        const double xn = x - mu * dt + std::sqrt(dt) * rng.normal();

        // one bridge maximum serves the escape levels and the upper boundary, so that the
        // level gamma = 1 and absorption at L see the same path
        bool need_max = cfg.cutoff && within_reach(L, x, xn, dt);
        for (std::size_t j = 0; j < n_levels && !need_max; ++j)
          need_max = !(mask >> j & 1u) && within_reach(levels[j], x, xn, dt);
        const double top = need_max ? bridge_max(rng, x, xn, dt) : std::max(x, xn);

        for (std::size_t j = 0; j < n_levels; ++j) {
          if (mask >> j & 1u) continue;
          if (top >= levels[j]) {
            mask |= 1u << j;
            ++forest.escape_counts[j];
          }
        }

        if (xn <= 0.0) {
          died = true;
          cause = DeathCause::Absorbed0;
        } else if (cfg.cutoff && top >= L) {
          died = true;
          cause = DeathCause::AbsorbedL;
        } else if (bridge_cross(rng, x, xn, dt)) {
          died = true;
          cause = DeathCause::Absorbed0;
        }
        t = t_next;
        if (died) {
          x = cause == DeathCause::Absorbed0 ? 0.0 : L;
          break;
        }
        x = xn;
        if (snap < snaps.size() && t == snaps[snap]) {
          forest.snapshots[snap].push_back({a.node, x});
          ++snap;
        }
      }

      NodeRecord& node = forest.nodes[a.node];
      if (died || t >= horizon) {
        node.death = t;
        node.x_death = x;
        node.cause = died ? cause : DeathCause::AliveAtHorizon;
        break;
      }
      if (rng.uniform() * r_max >= pot.rate(x)) continue;  // rejected tentative event

      const std::size_t c = forest.nodes.size();
      if (c + 2 > cfg.max_particles || c + 2 >= kNoNode) {
        forest.capped = true;
        stack.clear();
        break;
      }
      node.first_child = static_cast<std::uint32_t>(c);
      node.death = t;
      node.x_death = x;
      node.cause = DeathCause::Branched;
      const std::uint8_t bit = rng.uniform() < 0.5 ? 1 : 0;
      NodeRecord child;
      child.parent = a.node;
      child.birth = t;
      child.x_birth = x;
      child.planar_bit = bit;
      forest.nodes.push_back(child);
      child.planar_bit = static_cast<std::uint8_t>(1 - bit);
      forest.nodes.push_back(child);
      stack.push_back({static_cast<std::uint32_t>(c + 1), mask, t, x, RandomStream::derive(a.stream, 2)});
      stack.push_back({static_cast<std::uint32_t>(c), mask, t, x, RandomStream::derive(a.stream, 1)});
      break;
    }
  }
  return forest;
}

ReplicaSummary summarize(const GenealogyForest& forest) {
  ReplicaSummary s;
  s.replica = forest.replica;
  s.capped = forest.capped;
  s.population = forest.alive_at_horizon();
  s.survived = s.population > 0;
  s.nodes = forest.nodes.size();
  s.escapes = forest.escape_counts;
  return s;
}

}  // namespace pushedfront
