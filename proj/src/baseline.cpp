#include "dpmkit/baseline.hpp"

#include <cmath>

namespace dpmkit {

BaselineMethod BaselineMethod::paired(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::RK2_t:
    case BaselineKind::RK3_t:
      return {kind, GridStyle::UniformT};
    default:
      return {kind, GridStyle::UniformLambda};
  }
}

int BaselineMethod::cost_per_step() const {
  switch (kind) {
    case BaselineKind::DDIM:
      return 1;
    case BaselineKind::RK2_t:
    case BaselineKind::RK2_lambda:
      return 2;
    default:
      return 3;
  }
}

bool BaselineMethod::lambda_domain() const {
  return kind == BaselineKind::RK2_lambda || kind == BaselineKind::RK3_lambda;
}

std::string BaselineMethod::name() const {
  switch (kind) {
    case BaselineKind::DDIM:
      return "ddim";
    case BaselineKind::RK2_t:
      return "rk2_t";
    case BaselineKind::RK3_t:
      return "rk3_t";
    case BaselineKind::RK2_lambda:
      return "rk2_lambda";
    case BaselineKind::RK3_lambda:
      return "rk3_lambda";
  }
  return "unknown";
}

State ddim_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t) {
  if (t > s) throw DomainError("ddim step requires t <= s");
  const auto [alpha_s, sigma_s] = sched.alpha_sigma(s);
  const auto [alpha_t, sigma_t] = sched.alpha_sigma(t);
  const State eps = p.eval(x, s);
  const double cx = alpha_t / alpha_s;
  const double ce = alpha_t * (sigma_s / alpha_s - sigma_t / alpha_t);
  State out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = cx * x[i] - ce * eps[i];
  return out;
}

State ode_field_t(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double t) {
  const auto [f, g2] = sched.drift_diffusion(t);
  const double sigma = sched.alpha_sigma(t).sigma;
  const State eps = p.eval(x, t);
  State out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i] + g2 / (2.0 * sigma) * eps[i];
  return out;
}

State ode_field_lambda(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double lam) {
  const double sigma = vp_sigma_of_lambda(lam);
  const State eps = p.eval(x, sched.time_of_lambda(lam));
  State out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigma * sigma * x[i] - sigma * eps[i];
  return out;
}

namespace {

State axpy(StateView x, double a, StateView k) {
  State out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * k[i];
  return out;
}

}  // namespace

State midpoint_step(const Field& field, StateView x, double tau0, double tau1) {
  const double h = tau1 - tau0;
  const State k1 = field(x, tau0);
  const State u = axpy(x, 0.5 * h, k1);
  return axpy(x, h, field(u, tau0 + 0.5 * h));
}

State heun3_step(const Field& field, StateView x, double tau0, double tau1) {
  constexpr double r1 = 1.0 / 3.0;
  constexpr double r2 = 2.0 / 3.0;
  const double h = tau1 - tau0;
  const State k1 = field(x, tau0);
  const State u1 = axpy(x, r1 * h, k1);
  const State k2 = field(u1, tau0 + r1 * h);
  const State u2 = axpy(x, r2 * h, k2);
  const State k3 = field(u2, tau0 + r2 * h);
  State out = axpy(x, 0.25 * h, k1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.75 * h * k3[i];
  return out;
}

State rk_step(const BaselineMethod& method, CountedPredictor& p, const NoiseSchedule& sched,
              StateView x, double from, double to) {
  if (method.kind == BaselineKind::DDIM) throw std::invalid_argument("rk_step: DDIM is not an RK method");
  Field field;
  if (method.lambda_domain())
    field = [&](StateView y, double lam) { return ode_field_lambda(p, sched, y, lam); };
  else
    field = [&](StateView y, double t) { return ode_field_t(p, sched, y, t); };
  const bool second = method.kind == BaselineKind::RK2_t || method.kind == BaselineKind::RK2_lambda;
  return second ? midpoint_step(field, x, from, to) : heun3_step(field, x, from, to);
}

std::vector<double> uniform_t_grid(double T, double eps, int M) {
  if (M < 1) throw std::invalid_argument("grid needs at least one segment");
  std::vector<double> times(M + 1);
  for (int i = 0; i <= M; ++i) times[i] = T + (static_cast<double>(i) / M) * (eps - T);
  times.back() = eps;
  return times;
}

std::vector<double> quadratic_t_grid(double T, double eps, int M) {
  if (M < 1) throw std::invalid_argument("grid needs at least one segment");
  std::vector<double> times(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double u = 1.0 - static_cast<double>(i) / M;
    times[i] = eps + u * u * (T - eps);
  }
  times.back() = eps;
  return times;
}

std::vector<double> baseline_times(GridStyle style, const NoiseSchedule& sched, double T,
                                   double eps, int M) {
  if (!(eps > 0.0) || !(eps < T) || T > sched.t_max())
    throw DomainError("grid requires 0 < eps < T <= t_max");
  switch (style) {
    case GridStyle::UniformT:
      return uniform_t_grid(T, eps, M);
    case GridStyle::QuadraticT:
      return quadratic_t_grid(T, eps, M);
    case GridStyle::UniformLambda:
      return uniform_lambda_grid(sched, T, eps, M).times;
  }
  return {};
}

SolveResult solve_baseline(const BaselineMethod& method, CountedPredictor& p,
                           const NoiseSchedule& sched, StateView x_T, double T, double eps, int M) {
  std::vector<double> times = baseline_times(method.grid, sched, T, eps, M);
  std::vector<double> lambdas(times.size());
  if (method.grid == GridStyle::UniformLambda) {
    lambdas = uniform_lambda_grid(sched, T, eps, M).lambdas;
  } else {
    for (std::size_t i = 0; i < times.size(); ++i) lambdas[i] = sched.half_log_snr(times[i]);
  }

  const std::size_t nfe0 = p.nfe();
  SolveResult result;
  State x(x_T.begin(), x_T.end());
  for (int i = 0; i < M; ++i) {
    if (method.kind == BaselineKind::DDIM)
      x = ddim_step(p, sched, x, times[i], times[i + 1]);
    else if (method.lambda_domain())
      x = rk_step(method, p, sched, x, lambdas[i], lambdas[i + 1]);
    else
      x = rk_step(method, p, sched, x, times[i], times[i + 1]);
    const double h = method.lambda_domain() || method.kind == BaselineKind::DDIM
                         ? lambdas[i + 1] - lambdas[i]
                         : times[i] - times[i + 1];
    result.trace.push_back({times[i + 1], lambdas[i + 1], h, true});
    ++result.accepted_steps;
  }
  result.final_state = std::move(x);
  result.nfe = p.nfe() - nfe0;
  return result;
}

}  // namespace dpmkit
