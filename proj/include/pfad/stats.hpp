#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace pfad {

// Quantile with linear interpolation between order statistics:
// h = (n - 1) p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile(std::span<const double> values, double p);
double quantile_sorted(std::span<const double> sorted, double p);

template <typename Derived>
double quantile(const Eigen::DenseBase<Derived>& v, double p) {
  std::vector<double> tmp(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) tmp[static_cast<std::size_t>(i)] = v(i);
  return quantile(std::span<const double>(tmp), p);
}

double median(std::span<const double> values);

struct Moments {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
};

Moments moments(std::span<const double> values);

// Biased sample skewness (third standardized moment); 0 for constant input.
double skewness(std::span<const double> values);

}  // namespace pfad
