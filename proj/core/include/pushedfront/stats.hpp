#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace pushedfront {

// Welford accumulator; merge() is exact up to rounding, so chunked aggregation in a fixed
// order gives the same answer on any number of workers.
class RunningMoments {
 public:
  void add(double x);
  void merge(const RunningMoments& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double standard_error() const;
  double second_moment() const { return variance_biased() + mean_ * mean_; }

 private:
  double variance_biased() const { return n_ ? m2_ / static_cast<double>(n_) : 0.0; }
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanEstimate estimate_mean(const std::vector<double>& values);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  int dof = 0;  // chi-square only
};

// Survival function of the Kolmogorov distribution, P(sqrt(n) D > lambda) as n -> inf.
double kolmogorov_sf(double lambda);

// Two-sided one-sample KS against a continuous CDF; asymptotic p-value with the usual
// small-sample adjustment of lambda.
TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Pearson chi-square; adjacent bins are merged left to right until every expected count is
// at least `min_expected` (a short last group is folded into its neighbour).
TestResult chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                      double min_expected = 5.0, int fitted_parameters = 0);

double chi_square_sf(double x, double dof);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Bin `values` into [edges[i], edges[i+1]); values outside are dropped.
std::vector<double> histogram(const std::vector<double>& values, const std::vector<double>& edges);

}  // namespace pushedfront
