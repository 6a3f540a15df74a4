#include "dpmkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpmkit {

double phi(int k, double z) {
  if (k < 1 || k > 3) throw std::invalid_argument("phi: order must be 1, 2 or 3");
  if (std::abs(z) <= 1.0) {
    // sum_n z^n / (n + k)!, converged to double precision after 20 terms on |z| <= 1.
    double denom = 1.0;
    for (int i = 2; i <= k; ++i) denom *= i;
    double term = 1.0 / denom;
    double sum = 0.0;
    for (int n = 0; n < 20; ++n) {
      sum += term;
      term *= z / static_cast<double>(n + k + 1);
    }
    return sum;
  }
  const double em1 = std::expm1(z);
  switch (k) {
    case 1:
      return em1 / z;
    case 2:
      return (em1 - z) / (z * z);
    default:
      return (em1 - z - 0.5 * z * z) / (z * z * z);
  }
}

double TimeGrid::h_max() const {
  double h = 0.0;
  for (std::size_t i = 1; i < lambdas.size(); ++i) h = std::max(h, step_size(i));
  return h;
}

TimeGrid uniform_lambda_grid(const NoiseSchedule& sched, double T, double eps, int M) {
  if (M < 1) throw std::invalid_argument("grid needs at least one segment");
  if (!(eps > 0.0) || !(eps < T) || T > sched.t_max())
    throw DomainError("grid requires 0 < eps < T <= t_max");
  const double lam_T = sched.half_log_snr(T);
  const double lam_eps = sched.half_log_snr(eps);
  TimeGrid grid;
  grid.times.resize(M + 1);
  grid.lambdas.resize(M + 1);
  grid.times.front() = T;
  grid.times.back() = eps;
  grid.lambdas.front() = lam_T;
  grid.lambdas.back() = lam_eps;
  for (int i = 1; i < M; ++i) {
    const double lam = lam_T + (static_cast<double>(i) / M) * (lam_eps - lam_T);
    grid.times[i] = sched.time_of_lambda(lam);
    grid.lambdas[i] = lam;
  }
  return grid;
}

int StepPlan::nfe() const {
  int total = 0;
  for (int o : orders) total += o;
  return total;
}

StepPlan budget_plan(int K) {
  if (K < 1) throw std::invalid_argument("NFE budget must be at least 1");
  if (K == 1) return {{1}};
  if (K == 2) return {{2}};
  const int segments = K / 3 + 1;
  StepPlan plan;
  switch (K % 3) {
    case 0:
      plan.orders.assign(segments - 2, 3);
      plan.orders.push_back(2);
      plan.orders.push_back(1);
      break;
    case 1:
      plan.orders.assign(segments - 1, 3);
      plan.orders.push_back(1);
      break;
    default:
      plan.orders.assign(segments - 1, 3);
      plan.orders.push_back(2);
      break;
  }
  return plan;
}

namespace {

struct Node {
  double t;
  double lambda;
  double alpha;
  double sigma;
};

Node node_at(const NoiseSchedule& sched, double t) {
  const auto [alpha, sigma] = sched.alpha_sigma(t);
  return {t, sched.half_log_snr(t), alpha, sigma};
}

Node node_at_lambda(const NoiseSchedule& sched, double lam) {
  return node_at(sched, sched.time_of_lambda(lam));
}

void check_interval(double s, double t) {
  if (!(t < s)) throw DomainError("solver step requires t < s");
}

void check_dim(StateView a, StateView b) {
  if (a.size() != b.size()) throw std::invalid_argument("predictor output dimension mismatch");
}

// (alpha_to / alpha_from) x - sigma_to expm1(h) eps_from
State first_order(const Node& from, const Node& to, StateView x, StateView eps_from) {
  const double cx = to.alpha / from.alpha;
  const double ce = to.sigma * std::expm1(to.lambda - from.lambda);
  State out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = cx * x[i] - ce * eps_from[i];
  return out;
}

State second_order(CountedPredictor& p, const NoiseSchedule& sched, const Node& s, const Node& t,
                   StateView x, StateView eps_s, double r1) {
  const double h = t.lambda - s.lambda;
  const Node mid = node_at_lambda(sched, s.lambda + r1 * h);
  const State u = first_order(s, mid, x, eps_s);
  const State eps_mid = p.eval(u, mid.t);
  check_dim(eps_mid, eps_s);

  State out = first_order(s, t, x, eps_s);
  const double c = t.sigma / (2.0 * r1) * std::expm1(h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * (eps_mid[i] - eps_s[i]);
  return out;
}

struct ThirdOrder {
  State lower;  // second-order update through the r1 node
  State upper;
};

ThirdOrder third_order(CountedPredictor& p, const NoiseSchedule& sched, const Node& s,
                       const Node& t, StateView x, StateView eps_s, double r1, double r2) {
  const double h = t.lambda - s.lambda;
  const Node n1 = node_at_lambda(sched, s.lambda + r1 * h);
  const Node n2 = node_at_lambda(sched, s.lambda + r2 * h);

  const State u1 = first_order(s, n1, x, eps_s);
  State d1 = p.eval(u1, n1.t);
  check_dim(d1, eps_s);
  for (std::size_t i = 0; i < d1.size(); ++i) d1[i] -= eps_s[i];

  // (e^{r2 h} - 1) / (r2 h) - 1 == r2 h phi_2(r2 h)
  State u2 = first_order(s, n2, x, eps_s);
  const double c2 = n2.sigma * (r2 / r1) * (r2 * h) * phi(2, r2 * h);
  for (std::size_t i = 0; i < u2.size(); ++i) u2[i] -= c2 * d1[i];
  State d2 = p.eval(u2, n2.t);
  check_dim(d2, eps_s);
  for (std::size_t i = 0; i < d2.size(); ++i) d2[i] -= eps_s[i];

  ThirdOrder out{first_order(s, t, x, eps_s), {}};
  out.upper = out.lower;
  const double c_lo = t.sigma / (2.0 * r1) * std::expm1(h);
  const double c_hi = t.sigma / r2 * h * phi(2, h);
  for (std::size_t i = 0; i < out.upper.size(); ++i) {
    out.lower[i] -= c_lo * d1[i];
    out.upper[i] -= c_hi * d2[i];
  }
  return out;
}

State take_step(int order, CountedPredictor& p, const NoiseSchedule& sched, const Node& s,
                const Node& t, StateView x) {
  const State eps_s = p.eval(x, s.t);
  check_dim(eps_s, x);
  switch (order) {
    case 1:
      return first_order(s, t, x, eps_s);
    case 2:
      return second_order(p, sched, s, t, x, eps_s, 0.5);
    case 3:
      return third_order(p, sched, s, t, x, eps_s, 1.0 / 3.0, 2.0 / 3.0).upper;
    default:
      throw std::invalid_argument("solver order must be 1, 2 or 3");
  }
}

}  // namespace

State dpm1_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t) {
  check_interval(s, t);
  return take_step(1, p, sched, node_at(sched, s), node_at(sched, t), x);
}

State dpm2_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t,
                double r1) {
  if (!(r1 > 0.0 && r1 < 1.0)) throw std::invalid_argument("dpm2: r1 must lie in (0, 1)");
  check_interval(s, t);
  const Node ns = node_at(sched, s);
  const Node nt = node_at(sched, t);
  const State eps_s = p.eval(x, s);
  check_dim(eps_s, x);
  return second_order(p, sched, ns, nt, x, eps_s, r1);
}

State dpm3_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t,
                double r1, double r2) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < 1.0))
    throw std::invalid_argument("dpm3: requires 0 < r1 < r2 < 1");
  check_interval(s, t);
  const Node ns = node_at(sched, s);
  const Node nt = node_at(sched, t);
  const State eps_s = p.eval(x, s);
  check_dim(eps_s, x);
  return third_order(p, sched, ns, nt, x, eps_s, r1, r2).upper;
}

double SolveResult::h_max() const {
  double h = 0.0;
  for (const auto& r : trace)
    if (r.accepted) h = std::max(h, r.h);
  return h;
}

SolveResult solve_on_grid(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T,
                          const TimeGrid& grid, const StepPlan& plan) {
  if (plan.orders.empty()) throw std::invalid_argument("empty step plan");
  if (plan.segments() != grid.steps())
    throw std::invalid_argument("step plan and grid disagree on the number of segments");
  const std::size_t nfe0 = p.nfe();
  SolveResult result;
  State x(x_T.begin(), x_T.end());
  Node from = node_at(sched, grid.times.front());
  for (std::size_t i = 0; i < plan.segments(); ++i) {
    const Node to = node_at(sched, grid.times[i + 1]);
    check_interval(from.t, to.t);
    x = take_step(plan.orders[i], p, sched, from, to, x);
    result.trace.push_back({to.t, to.lambda, to.lambda - from.lambda, true});
    ++result.accepted_steps;
    from = to;
  }
  result.final_state = std::move(x);
  result.nfe = p.nfe() - nfe0;
  return result;
}

SolveResult solve_fixed(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T, double T,
                        double eps, const StepPlan& plan) {
  if (plan.orders.empty()) throw std::invalid_argument("empty step plan");
  const TimeGrid grid = uniform_lambda_grid(sched, T, eps, static_cast<int>(plan.segments()));
  return solve_on_grid(p, sched, x_T, grid, plan);
}

SolveResult solve_fixed(const NoisePredictor& p, const NoiseSchedule& sched, StateView x_T,
                        double T, double eps, const StepPlan& plan) {
  CountedPredictor counted(p);
  return solve_fixed(counted, sched, x_T, T, eps, plan);
}

void AdaptiveConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0) || !(h_init > 0.0) || !(theta > 0.0) || !(theta < 1.0))
    throw std::invalid_argument("adaptive config: tolerances, h_init and theta must be positive, theta < 1");
  if (max_iterations == 0) throw std::invalid_argument("adaptive config: max_iterations must be positive");
}

namespace {

// Scaled RMS of (lo - hi) / delta, maximized over consecutive blocks of `block` entries.
double scaled_error(StateView lo, StateView hi, StateView prev, const AdaptiveConfig& cfg,
                    std::size_t block) {
  double worst = 0.0;
  for (std::size_t b0 = 0; b0 < lo.size(); b0 += block) {
    double sum = 0.0;
    for (std::size_t i = b0; i < b0 + block; ++i) {
      const double delta = std::max(cfg.atol, cfg.rtol * std::max(std::abs(lo[i]), std::abs(prev[i])));
      const double r = (lo[i] - hi[i]) / delta;
      sum += r * r;
    }
    worst = std::max(worst, std::sqrt(sum / static_cast<double>(block)));
  }
  return worst;
}

SolveResult adaptive_driver(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T,
                            double T, double eps, const AdaptiveConfig& cfg, std::size_t block) {
  cfg.validate();
  if (!(eps > 0.0) || !(eps < T) || T > sched.t_max())
    throw DomainError("adaptive solve requires 0 < eps < T <= t_max");
  if (block == 0 || x_T.size() % block != 0) throw std::invalid_argument("bad batch layout");

  const std::size_t nfe0 = p.nfe();
  const double lam_eps = sched.half_log_snr(eps);
  const double order = cfg.pair == AdaptivePair::Order12 ? 2.0 : 3.0;

  SolveResult result;
  State x(x_T.begin(), x_T.end());
  State x_prev = x;
  Node s = node_at(sched, T);
  double h = std::min(cfg.h_init, lam_eps - s.lambda);

  std::size_t iterations = 0;
  while (std::abs(s.t - eps) > 1e-5) {
    if (++iterations > cfg.max_iterations)
      throw NonTermination("adaptive solve exceeded the iteration limit");
    if (!(h > 0.0)) throw NonTermination("adaptive solve: step size collapsed");

    const Node t = node_at_lambda(sched, s.lambda + h);
    const State eps_s = p.eval(x, s.t);
    check_dim(eps_s, x);

    State lo, hi;
    if (cfg.pair == AdaptivePair::Order12) {
      lo = first_order(s, t, x, eps_s);
      hi = second_order(p, sched, s, t, x, eps_s, 0.5);
    } else {
      auto pair = third_order(p, sched, s, t, x, eps_s, 1.0 / 3.0, 2.0 / 3.0);
      lo = std::move(pair.lower);
      hi = std::move(pair.upper);
    }

    const double E = scaled_error(lo, hi, x_prev, cfg, block);
    if (std::isnan(E)) throw NonTermination("adaptive solve: error estimate is NaN");
    const bool accept = E <= 1.0;
    result.trace.push_back({t.t, t.lambda, t.lambda - s.lambda, accept});
    if (accept) {
      x_prev = std::move(lo);
      x = std::move(hi);
      s = t;
      ++result.accepted_steps;
    } else {
      ++result.rejected_steps;
    }
    // E == 0 gives an infinite proposal, which the min() clamps.
    h = std::min(cfg.theta * h * std::pow(E, -1.0 / order), lam_eps - s.lambda);
  }

  result.final_state = std::move(x);
  result.nfe = p.nfe() - nfe0;
  return result;
}

}  // namespace

SolveResult solve_adaptive(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T,
                           double T, double eps, const AdaptiveConfig& cfg) {
  return adaptive_driver(p, sched, x_T, T, eps, cfg, x_T.size());
}

SolveResult solve_adaptive(const NoisePredictor& p, const NoiseSchedule& sched, StateView x_T,
                           double T, double eps, const AdaptiveConfig& cfg) {
  CountedPredictor counted(p);
  return solve_adaptive(counted, sched, x_T, T, eps, cfg);
}

SolveResult solve_adaptive_batch(const NoisePredictor& p, const NoiseSchedule& sched,
                                 const std::vector<State>& batch, double T, double eps,
                                 const AdaptiveConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t dim = batch.front().size();
  State stacked;
  stacked.reserve(dim * batch.size());
  for (const auto& x : batch) {
    if (x.size() != dim) throw std::invalid_argument("batch samples differ in dimension");
    stacked.insert(stacked.end(), x.begin(), x.end());
  }
  // One call of the batched model evaluates every sample.
  NoisePredictor batched([p, dim](StateView xs, double t) {
    State out;
    out.reserve(xs.size());
    for (std::size_t b0 = 0; b0 < xs.size(); b0 += dim) {
      const State e = p(xs.subspan(b0, dim), t);
      out.insert(out.end(), e.begin(), e.end());
    }
    return out;
  });
  CountedPredictor counted(std::move(batched));
  return adaptive_driver(counted, sched, stacked, T, eps, cfg, dim);
}

}  // namespace dpmkit
