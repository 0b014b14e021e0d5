#include "pushedfront/genealogy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "pushedfront/errors.hpp"
#include "pushedfront/stats.hpp"

namespace pushedfront {

MarkedSample::MarkedSample(double time, std::vector<Leaf> leaves, std::vector<double> adjacent,
                           std::optional<double> rescale_N)
    : time_(time), leaves_(std::move(leaves)), adjacent_(std::move(adjacent)), rescale_N_(rescale_N) {
  if (!leaves_.empty() && adjacent_.size() + 1 != leaves_.size())
    throw Error("MarkedSample: adjacent distances must number leaves - 1");
  const std::size_t n = adjacent_.size();
  if (n == 0) return;
  sparse_.push_back(adjacent_);
  for (std::size_t w = 2; w <= n; w *= 2) {
    const auto& prev = sparse_.back();
    std::vector<double> next(n - w + 1);
    for (std::size_t i = 0; i + w <= n; ++i) next[i] = std::max(prev[i], prev[i + w / 2]);
    sparse_.push_back(std::move(next));
  }
}

double MarkedSample::distance(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  const std::size_t len = j - i;
  const int level = std::bit_width(len) - 1;
  const auto& row = sparse_[static_cast<std::size_t>(level)];
  return std::max(row[i], row[j - (std::size_t{1} << level)]);
}

std::vector<double> MarkedSample::distance_matrix() const {
  const std::size_t n = size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double run = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      run = std::max(run, adjacent_[j - 1]);
      d[i * n + j] = d[j * n + i] = run;
    }
  }
  return d;
}

MarkedSample extract_mmm(const GenealogyForest& forest, double t, std::optional<double> rescale_N) {
  if (rescale_N && !(*rescale_N > 0.0)) throw ConfigError("rescale N must be positive");
  if (forest.capped) throw Error("extract_mmm: capped forest");
  const auto& nodes = forest.nodes;
  std::vector<double> mark(nodes.size(), std::numeric_limits<double>::quiet_NaN());
  if (t == forest.horizon) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].cause == DeathCause::AliveAtHorizon) mark[i] = nodes[i].x_death;
  } else {
    const auto it = std::find(forest.snapshot_times.begin(), forest.snapshot_times.end(), t);
    if (it == forest.snapshot_times.end())
      throw ConfigError("extract_mmm: time is neither the horizon nor a recorded snapshot");
    for (const auto& e : forest.snapshots[static_cast<std::size_t>(it - forest.snapshot_times.begin())])
      mark[e.node] = e.x;
  }

  const double scale = rescale_N ? 1.0 / *rescale_N : 1.0;
  std::vector<Leaf> leaves;
  std::vector<double> adjacent;
  if (nodes.empty()) return MarkedSample(t, {}, {}, rescale_N);

  // Depth-first, left child first. The LCA of consecutive leaves is the shallowest branch
  // point whose right subtree was entered since the previous leaf.
  struct Item {
    std::uint32_t node;
    bool right;
  };
  std::vector<Item> stack{{0, false}};
  double pending = std::numeric_limits<double>::infinity();
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    const auto& n = nodes[it.node];
    if (it.right) pending = std::min(pending, nodes[n.parent].death);
    if (!std::isnan(mark[it.node])) {
      if (!leaves.empty()) adjacent.push_back((t - pending) * scale);
      leaves.push_back({it.node, mark[it.node]});
      pending = std::numeric_limits<double>::infinity();
      continue;
    }
    if (n.cause != DeathCause::Branched || n.death > t) continue;
    std::uint32_t left = n.first_child, right = n.first_child + 1;
    if (nodes[left].planar_bit == 1) std::swap(left, right);
    stack.push_back({right, true});
    stack.push_back({left, false});
  }
  return MarkedSample(t, std::move(leaves), std::move(adjacent), rescale_N);
}

KSample sample_uniform_k(const MarkedSample& sample, int k, RandomStream& rng) {
  if (k <= 0) throw ConfigError("sample_uniform_k: k must be positive");
  if (sample.empty()) throw Error("sample_uniform_k: empty sample");
  KSample out;
  out.k = static_cast<std::size_t>(k);
  out.leaves.resize(out.k);
  out.marks.resize(out.k);
  out.dist.assign(out.k * out.k, 0.0);
  for (std::size_t i = 0; i < out.k; ++i) {
    out.leaves[i] = static_cast<std::size_t>(rng.below(sample.size()));
    out.marks[i] = sample.mark(out.leaves[i]);
  }
  for (std::size_t i = 0; i < out.k; ++i)
    for (std::size_t j = i + 1; j < out.k; ++j)
      out.dist[i * out.k + j] = out.dist[j * out.k + i] = sample.distance(out.leaves[i], out.leaves[j]);
  return out;
}

namespace {

double tuple_term(const MarkedSample& s, const PolynomialSpec& spec, const std::vector<std::size_t>& idx) {
  const int k = static_cast<int>(idx.size());
  double v = 1.0;
  for (int i = 0; i < k; ++i) {
    v *= spec.phi[static_cast<std::size_t>(i)](s.mark(idx[static_cast<std::size_t>(i)]));
    if (v == 0.0) return 0.0;
  }
  if (spec.psi) {
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        v *= spec.psi(i, j, s.distance(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]));
        if (v == 0.0) return 0.0;
      }
  }
  return v;
}

bool has_repeat(const std::vector<std::size_t>& idx) {
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      if (idx[i] == idx[j]) return true;
  return false;
}

}  // namespace

PolynomialValue evaluate_polynomial(const MarkedSample& sample, const PolynomialSpec& spec) {
  const std::size_t k = spec.phi.size();
  if (k < 1) throw ConfigError("evaluate_polynomial: need at least one phi");
  const std::size_t n = sample.size();
  const double wk = std::pow(sample.leaf_weight(), static_cast<double>(k));
  if (n == 0 || (spec.distinct && n < k)) return {0.0, 0.0, true};

  std::vector<std::size_t> idx(k, 0);
  if (k <= 3) {
    // Odometer over all ordered tuples.
    double sum = 0.0;
    for (;;) {
      if (!spec.distinct || !has_repeat(idx)) sum += tuple_term(sample, spec, idx);
      std::size_t pos = k;
      while (pos > 0) {
        --pos;
        if (++idx[pos] < n) break;
        idx[pos] = 0;
        if (pos == 0) return {wk * sum, 0.0, true};
      }
    }
  }

  // Uniform tuples from the admissible set, scaled by its cardinality.
  double count = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    count *= spec.distinct ? static_cast<double>(n - i) : static_cast<double>(n);
  RandomStream rng(spec.seed, 0x70f1, kSamplingStream);
  RunningMoments m;
  for (std::size_t s = 0; s < spec.mc_samples; ++s) {
    if (spec.distinct) {
      // k distinct leaves by rejection; fine while k << n.
      for (std::size_t i = 0; i < k; ++i) {
        std::size_t c;
        do {
          c = static_cast<std::size_t>(rng.below(n));
        } while (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(i), c) !=
                 idx.begin() + static_cast<std::ptrdiff_t>(i));
        idx[i] = c;
      }
    } else {
      for (auto& c : idx) c = static_cast<std::size_t>(rng.below(n));
    }
    m.add(tuple_term(sample, spec, idx));
  }
  return {wk * count * m.mean(), wk * count * m.standard_error(), false};
}

bool is_ultrametric(const std::vector<double>& d, std::size_t k, double tol) {
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l)
        if (d[i * k + j] > std::max(d[i * k + l], d[l * k + j]) + tol) return false;
  return true;
}

}  // namespace pushedfront
