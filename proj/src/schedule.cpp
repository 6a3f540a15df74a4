#include "dpmkit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dpmkit {

namespace {

constexpr double kSigmaFloor = 1e-30;

// log(1 + e^x) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::string describe(const char* what, double value) {
  std::ostringstream os;
  os.precision(17);
  os << what << " " << value;
  return os.str();
}

}  // namespace

NoiseSchedule::NoiseSchedule(ScheduleKind kind, double beta0, double beta1, double s,
                             double t_max)
    : kind_(kind), beta0_(beta0), beta1_(beta1), cosine_s_(s), t_max_(t_max) {
  lambda_min_ = half_log_snr(t_max_);
  lambda_max_ = half_log_snr(kMinTime);
}

NoiseSchedule NoiseSchedule::linear(double beta0, double beta1) {
  if (!(beta0 > 0.0) || !(beta1 > beta0))
    throw std::invalid_argument("linear schedule requires 0 < beta0 < beta1");
  return NoiseSchedule(ScheduleKind::LinearVP, beta0, beta1, 0.0, 1.0);
}

NoiseSchedule NoiseSchedule::cosine(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("cosine schedule requires s > 0");
  return NoiseSchedule(ScheduleKind::CosineVP, 0.0, 0.0, s, kCosineTMax);
}

const char* NoiseSchedule::name() const {
  return kind_ == ScheduleKind::LinearVP ? "linear" : "cosine";
}

void NoiseSchedule::check_time(double t) const {
  if (!(t > 0.0) || t > t_max_) throw DomainError(describe("time outside (0, t_max]:", t));
}

double NoiseSchedule::log_alpha(double t) const {
  check_time(t);
  switch (kind_) {
    case ScheduleKind::LinearVP:
      return -0.25 * (beta1_ - beta0_) * t * t - 0.5 * beta0_ * t;
    case ScheduleKind::CosineVP: {
      const double w = 0.5 * std::numbers::pi / (1.0 + cosine_s_);
      return std::log(std::cos(w * (t + cosine_s_))) - std::log(std::cos(w * cosine_s_));
    }
  }
  return 0.0;
}

AlphaSigma NoiseSchedule::alpha_sigma(double t) const {
  const double la = log_alpha(t);
  const double sigma = std::max(std::sqrt(-std::expm1(2.0 * la)), kSigmaFloor);
  return {std::exp(la), sigma};
}

double NoiseSchedule::half_log_snr(double t) const {
  const double la = log_alpha(t);
  const double sigma2 = -std::expm1(2.0 * la);
  const double log_sigma =
      sigma2 > kSigmaFloor * kSigmaFloor ? 0.5 * std::log(sigma2) : std::log(kSigmaFloor);
  return la - log_sigma;
}

double NoiseSchedule::time_of_lambda(double lam) const {
  const double slack = 1e-10 * std::max(1.0, std::abs(lam));
  if (!(lam >= lambda_min_ - slack) || !(lam <= lambda_max_ + slack))
    throw DomainError(describe("half log-SNR outside the invertible range:", lam));

  // log(e^{-2 lam} + 1)
  const double q = softplus(-2.0 * lam);
  double t = 0.0;
  switch (kind_) {
    case ScheduleKind::LinearVP:
      t = 2.0 * q / (std::sqrt(beta0_ * beta0_ + 2.0 * (beta1_ - beta0_) * q) + beta0_);
      break;
    case ScheduleKind::CosineVP: {
      const double w = 0.5 * std::numbers::pi / (1.0 + cosine_s_);
      const double log_alpha = -0.5 * q;
      t = std::acos(std::exp(log_alpha + std::log(std::cos(w * cosine_s_)))) / w - cosine_s_;
      break;
    }
  }
  return std::clamp(t, std::numeric_limits<double>::min(), t_max_);
}

DriftDiffusion NoiseSchedule::drift_diffusion(double t) const {
  check_time(t);
  double f = 0.0;
  switch (kind_) {
    case ScheduleKind::LinearVP:
      f = -0.5 * (beta1_ - beta0_) * t - 0.5 * beta0_;
      break;
    case ScheduleKind::CosineVP: {
      const double w = 0.5 * std::numbers::pi / (1.0 + cosine_s_);
      f = -w * std::tan(w * (t + cosine_s_));
      break;
    }
  }
  // g^2 = d(sigma^2)/dt - 2 f sigma^2 with sigma^2 = 1 - alpha^2, which is -2 f.
  return {f, -2.0 * f};
}

double vp_sigma_of_lambda(double lam) { return std::exp(-0.5 * softplus(2.0 * lam)); }

double vp_alpha_of_lambda(double lam) { return std::exp(-0.5 * softplus(-2.0 * lam)); }

}  // namespace dpmkit
