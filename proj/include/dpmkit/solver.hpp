#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dpmkit/predictor.hpp"
#include "dpmkit/schedule.hpp"
#include "dpmkit/types.hpp"

namespace dpmkit {

/// phi_k(z) = int_0^1 e^{(1-u) z} u^{k-1} / (k-1)! du for k in {1, 2, 3}.
double phi(int k, double z);

/// Decreasing times t_0 = T > ... > t_M = eps with their lambda values.
struct TimeGrid {
  std::vector<double> times;
  std::vector<double> lambdas;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  /// Lambda increment of step i (1-based as h_i = lambda_{t_i} - lambda_{t_{i-1}}).
  double step_size(std::size_t i) const { return lambdas[i] - lambdas[i - 1]; }
  double h_max() const;
};

TimeGrid uniform_lambda_grid(const NoiseSchedule& sched, double T, double eps, int M);

/// Solver order per segment; the total NFE is the sum of the orders.
struct StepPlan {
  std::vector<int> orders;

  int nfe() const;
  std::size_t segments() const { return orders.size(); }
};

/// Splits a budget of K evaluations into order-3 steps and a low-order tail.
StepPlan budget_plan(int K);

// Single steps from time s down to time t < s. Each costs `order` NFE.
State dpm1_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t);
State dpm2_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t,
                double r1 = 0.5);
State dpm3_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t,
                double r1 = 1.0 / 3.0, double r2 = 2.0 / 3.0);

struct StepRecord {
  double t;       // time reached (or proposed, for rejected steps)
  double lambda;  // lambda at t
  double h;       // lambda increment attempted
  bool accepted = true;
};

struct SolveResult {
  State final_state;
  std::size_t nfe = 0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::vector<StepRecord> trace;

  double h_max() const;
};

/// Runs plan.orders over a uniform-lambda grid from T to eps.
SolveResult solve_fixed(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T, double T,
                        double eps, const StepPlan& plan);
SolveResult solve_fixed(const NoisePredictor& p, const NoiseSchedule& sched, StateView x_T,
                        double T, double eps, const StepPlan& plan);

/// Same driver over an explicit grid; plan.segments() must equal grid.steps().
SolveResult solve_on_grid(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T,
                          const TimeGrid& grid, const StepPlan& plan);

enum class AdaptivePair { Order12, Order23 };

struct AdaptiveConfig {
  double rtol = 0.05;
  double atol = 0.0078;
  double h_init = 0.05;
  double theta = 0.9;
  AdaptivePair pair = AdaptivePair::Order23;
  std::size_t max_iterations = 10000;

  void validate() const;
  /// NFE charged per proposal: 2 for Order12, 3 for Order23.
  int cost_per_iteration() const { return pair == AdaptivePair::Order12 ? 2 : 3; }
};

/// Embedded-pair adaptive step size driver in lambda.
SolveResult solve_adaptive(CountedPredictor& p, const NoiseSchedule& sched, StateView x_T,
                           double T, double eps, const AdaptiveConfig& cfg);
SolveResult solve_adaptive(const NoisePredictor& p, const NoiseSchedule& sched, StateView x_T,
                           double T, double eps, const AdaptiveConfig& cfg);

/// Batched variant: one predictor call serves the whole batch and the error
/// estimate is the maximum over samples. final_state holds the samples
/// concatenated in input order.
SolveResult solve_adaptive_batch(const NoisePredictor& p, const NoiseSchedule& sched,
                                 const std::vector<State>& batch, double T, double eps,
                                 const AdaptiveConfig& cfg);

}  // namespace dpmkit
