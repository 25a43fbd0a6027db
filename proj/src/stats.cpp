#include "pfad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfad {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> tmp(values.begin(), values.end());
  std::sort(tmp.begin(), tmp.end());
  return quantile_sorted(tmp, p);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

Moments moments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  double sum = 0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

double skewness(std::span<const double> values) {
  const Moments m = moments(values);
  if (values.size() < 2) return 0.0;
  double m2 = 0, m3 = 0;
  for (double v : values) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(values.size());
  m2 /= n;
  m3 /= n;
  // Relative floor so that numerically constant columns report 0.
  if (m2 <= 1e-24 * std::max(1.0, m.mean * m.mean)) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

}  // namespace pfad
