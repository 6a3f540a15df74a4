#pragma once

// Test-only reference computations, kept independent of the library paths
// they are used to check.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace dpmkit::testing {

/// phi_k(z) = sum_{n >= 0} z^n / (n + k)!, truncated after `terms` terms.
inline double phi_series(int k, double z, int terms = 50) {
  long double term = 1.0L;
  for (int i = 2; i <= k; ++i) term /= i;
  long double sum = 0.0L;
  for (int n = 0; n < terms; ++n) {
    sum += term;
    term *= static_cast<long double>(z) / (n + k + 1);
  }
  return static_cast<double>(sum);
}

/// Central difference with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Gradient of f at x by central differences.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// log N(x; mean, var I).
inline double log_normal(const std::vector<double>& x, const std::vector<double>& mean, double var) {
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - mean[i]) * (x[i] - mean[i]);
  return -0.5 * sq / var - 0.5 * x.size() * std::log(2.0 * std::numbers::pi * var);
}

/// Linear VP log(alpha_t) written out independently of the library.
inline double linear_log_alpha(double t, double beta0 = 0.1, double beta1 = 20.0) {
  return -(beta1 - beta0) / 4.0 * t * t - beta0 / 2.0 * t;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dpmkit::testing
