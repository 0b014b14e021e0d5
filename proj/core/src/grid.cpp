#include "pushedfront/grid.hpp"

#include <algorithm>
#include <cmath>

#include "pushedfront/errors.hpp"

namespace pushedfront {

namespace {

std::size_t even_cells(double length, double max_spacing) {
  auto n = static_cast<std::size_t>(std::ceil(length / max_spacing - 1e-9));
  n = std::max<std::size_t>(n, 2);
  return n + (n % 2);
}

}  // namespace

std::vector<double> simpson_weights(std::size_t cells, double h) {
  std::vector<double> w(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    w[i] = (i == 0 || i == cells) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& x : w) x *= h / 3.0;
  return w;
}

Grid::Grid(double length, double max_spacing, double break_point) : max_spacing_(max_spacing) {
  if (!(length > 0.0) || !(max_spacing > 0.0)) throw ConfigError("grid needs L > 0 and spacing > 0");
  if (break_point >= length) break_point = 0.0;
  break_ = break_point;
  std::size_t n1 = 0;
  if (break_ > 0.0) {
    n1 = even_cells(break_, max_spacing);
    h1_ = break_ / static_cast<double>(n1);
  }
  const std::size_t n2 = even_cells(length - break_, max_spacing);
  h2_ = (length - break_) / static_cast<double>(n2);
  nodes_.resize(n1 + n2 + 1);
  weights_.assign(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < n1; ++i) nodes_[i] = h1_ * static_cast<double>(i);
  for (std::size_t j = 0; j <= n2; ++j) nodes_[n1 + j] = break_ + h2_ * static_cast<double>(j);
  nodes_.back() = length;
  break_index_ = n1;
  if (n1 > 0) {
    auto w1 = simpson_weights(n1, h1_);
    for (std::size_t i = 0; i <= n1; ++i) weights_[i] += w1[i];
  }
  auto w2 = simpson_weights(n2, h2_);
  for (std::size_t j = 0; j <= n2; ++j) weights_[n1 + j] += w2[j];
}

std::size_t Grid::cell(double x) const {
  const std::size_t last = nodes_.size() - 2;
  if (x <= 0.0) return 0;
  std::size_t i;
  if (x < break_) {
    i = static_cast<std::size_t>(x / h1_);
  } else {
    i = break_index_ + static_cast<std::size_t>((x - break_) / h2_);
  }
  i = std::min(i, last);
  // float rounding near cell edges
  while (i > 0 && nodes_[i] > x) --i;
  while (i < last && nodes_[i + 1] < x) ++i;
  return i;
}

double Grid::integrate(std::span<const double> values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights_[i] * values[i];
  return s;
}

std::vector<double> Grid::cumulative(std::span<const double> f, std::span<const double> df) const {
  std::vector<double> out(nodes_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double h = nodes_[i + 1] - nodes_[i];
    out[i + 1] = out[i] + 0.5 * h * (f[i] + f[i + 1]) + h * h / 12.0 * (df[i] - df[i + 1]);
  }
  return out;
}

}  // namespace pushedfront
