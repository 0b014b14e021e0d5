#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pushedfront {

// Uniform on [0, b] and on [b, L] (b = 1 by default) with an even number of cells
// per piece so that composite Simpson applies on each.
class Grid {
 public:
  Grid() = default;
  Grid(double length, double max_spacing, double break_point = 1.0);

  std::size_t size() const { return nodes_.size(); }
  double length() const { return nodes_.back(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t break_index() const { return break_index_; }
  double max_spacing() const { return max_spacing_; }

  // Index i with nodes[i] <= x <= nodes[i+1]; x is clamped into [0, L].
  std::size_t cell(double x) const;

  double integrate(std::span<const double> values) const;
  // Running integral from 0 using the cubic Hermite rule per cell.
  std::vector<double> cumulative(std::span<const double> f, std::span<const double> df) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::size_t break_index_ = 0;
  double h1_ = 0.0, h2_ = 0.0, break_ = 0.0, max_spacing_ = 0.0;
};

// Cubic Hermite interpolation on [x0, x1].
inline double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * f1 +
         (s3 - s2) * h * d1;
}

inline double hermite_derivative(double x0, double x1, double f0, double f1, double d0, double d1,
                                 double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * f0 + (-6 * s2 + 6 * s) * f1) / h + (3 * s2 - 4 * s + 1) * d0 +
         (3 * s2 - 2 * s) * d1;
}

// Composite Simpson weights for n (even) uniform cells of width h.
std::vector<double> simpson_weights(std::size_t cells, double h);

}  // namespace pushedfront
