#pragma once

#include "dpmkit/types.hpp"

namespace dpmkit {

enum class ScheduleKind { LinearVP, CosineVP };

struct AlphaSigma {
  double alpha;
  double sigma;
};

/// Drift f(t) = d log(alpha)/dt and squared diffusion g^2(t) of the forward SDE.
struct DriftDiffusion {
  double f;
  double g2;
};

/**
 * Variance-preserving noise schedule with closed-form forward maps
 * alpha(t), sigma(t), the half log-SNR lambda(t) = log(alpha/sigma) and its
 * inverse.
 *
 * Immutable once built; every query is a pure function of t (or lambda).
 */
class NoiseSchedule {
 public:
  /// Smallest time the inverse map is guaranteed to reach.
  static constexpr double kMinTime = 1e-6;
  static constexpr double kCosineTMax = 0.9946;

  static NoiseSchedule linear(double beta0 = 0.1, double beta1 = 20.0);
  static NoiseSchedule cosine(double s = 0.008);

  ScheduleKind kind() const { return kind_; }
  double beta0() const { return beta0_; }
  double beta1() const { return beta1_; }
  double cosine_s() const { return cosine_s_; }
  double t_max() const { return t_max_; }
  const char* name() const;

  double log_alpha(double t) const;
  AlphaSigma alpha_sigma(double t) const;
  double half_log_snr(double t) const;
  double time_of_lambda(double lam) const;
  DriftDiffusion drift_diffusion(double t) const;

  /// lambda(t_max), the lower end of the invertible range.
  double lambda_min() const { return lambda_min_; }
  /// lambda(kMinTime), the upper end of the invertible range.
  double lambda_max() const { return lambda_max_; }

 private:
  NoiseSchedule(ScheduleKind kind, double beta0, double beta1, double s, double t_max);
  void check_time(double t) const;

  ScheduleKind kind_;
  double beta0_;
  double beta1_;
  double cosine_s_;
  double t_max_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

// VP identities expressed directly in lambda.
double vp_sigma_of_lambda(double lam);
double vp_alpha_of_lambda(double lam);

}  // namespace dpmkit
