#include "dpmkit/oracle.hpp"

#include <cmath>

namespace dpmkit {

State gaussian_flow_exact(const NoiseSchedule& sched, const GaussianProblem& prob, StateView x_s,
                          double s, double t) {
  prob.validate();
  if (x_s.size() != prob.dim()) throw std::invalid_argument("gaussian flow: dimension mismatch");
  if (t > s) throw DomainError("gaussian flow runs backwards in time: requires t <= s");
  const auto [alpha_s, sigma_s] = sched.alpha_sigma(s);
  const auto [alpha_t, sigma_t] = sched.alpha_sigma(t);
  const double s0 = prob.s0;
  const double v_s = alpha_s * alpha_s * s0 * s0 + sigma_s * sigma_s;
  const double v_t = alpha_t * alpha_t * s0 * s0 + sigma_t * sigma_t;
  const double ratio = std::sqrt(v_t / v_s);
  State x(x_s.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = alpha_t * prob.mu0[i] + ratio * (x_s[i] - alpha_s * prob.mu0[i]);
  return x;
}

State reference_solve(const NoisePredictor& p, const NoiseSchedule& sched, StateView x_T, double T,
                      double eps, int n_fine) {
  if (n_fine < 1000) throw std::invalid_argument("reference solve needs n_fine >= 1000");
  if (!(eps > 0.0) || !(eps < T)) throw DomainError("reference solve requires 0 < eps < T");
  const double lam_T = sched.half_log_snr(T);
  const double lam_eps = sched.half_log_snr(eps);
  const double h = (lam_eps - lam_T) / n_fine;

  // dx/dlambda = sigma^2 x - sigma eps(x, t(lambda)), sigma^2 = 1 / (1 + e^{2 lambda}).
  auto field = [&](StateView x, double lam) {
    const double sigma = vp_sigma_of_lambda(lam);
    const State e = p(x, sched.time_of_lambda(lam));
    State k(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) k[i] = sigma * sigma * x[i] - sigma * e[i];
    return k;
  };

  const std::size_t d = x_T.size();
  State x(x_T.begin(), x_T.end());
  State y(d);
  for (int n = 0; n < n_fine; ++n) {
    const double lam = lam_T + n * h;
    const double lam_next = n + 1 == n_fine ? lam_eps : lam_T + (n + 1) * h;
    const State k1 = field(x, lam);
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + 0.5 * h * k1[i];
    const State k2 = field(y, lam + 0.5 * h);
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + 0.5 * h * k2[i];
    const State k3 = field(y, lam + 0.5 * h);
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * k3[i];
    const State k4 = field(y, lam_next);
    for (std::size_t i = 0; i < d; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return x;
}

double rms_error(StateView a, StateView b) {
  if (a.size() != b.size()) throw std::invalid_argument("rms_error: length mismatch");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double estimate_order(const std::vector<double>& hs, const std::vector<double>& errors) {
  if (hs.size() != errors.size()) throw std::invalid_argument("estimate_order: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0)) throw std::invalid_argument("estimate_order: step sizes must be positive");
    if (errors[i] > kErrorFloor) {
      lx.push_back(std::log(hs[i]));
      ly.push_back(std::log(errors[i]));
    }
  }
  if (lx.size() < 3) throw std::invalid_argument("estimate_order: need at least 3 points above the error floor");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("estimate_order: step sizes must differ");
  return sxy / sxx;
}

}  // namespace dpmkit
