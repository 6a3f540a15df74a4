#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpmkit/predictor.hpp"
#include "dpmkit/schedule.hpp"
#include "dpmkit/solver.hpp"
#include "dpmkit/types.hpp"

namespace dpmkit {

enum class BaselineKind { DDIM, RK2_t, RK3_t, RK2_lambda, RK3_lambda };
enum class GridStyle { UniformT, UniformLambda, QuadraticT };

struct BaselineMethod {
  BaselineKind kind;
  GridStyle grid;

  /// The grid each method is compared on: uniform t for RK(t), uniform lambda otherwise.
  static BaselineMethod paired(BaselineKind kind);
  int cost_per_step() const;
  bool lambda_domain() const;
  std::string name() const;
};

/// One DDIM update from s to t <= s (1 NFE).
State ddim_step(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double s, double t);

/// Probability-flow vector field in t: f(t) x + g^2(t) / (2 sigma_t) eps(x, t).
State ode_field_t(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double t);

/// The same field after the change of variables t -> lambda (VP schedules).
State ode_field_lambda(CountedPredictor& p, const NoiseSchedule& sched, StateView x, double lam);

using Field = std::function<State(StateView x, double tau)>;

// Explicit Runge-Kutta steps on a generic field, from tau0 to tau1.
State midpoint_step(const Field& field, StateView x, double tau0, double tau1);
State heun3_step(const Field& field, StateView x, double tau0, double tau1);

/// RK2/RK3 step in t or lambda; `from`/`to` are coordinates of the method's domain.
State rk_step(const BaselineMethod& method, CountedPredictor& p, const NoiseSchedule& sched,
              StateView x, double from, double to);

std::vector<double> uniform_t_grid(double T, double eps, int M);
/// t_i = eps + (1 - i/M)^2 (T - eps), i = 0..M.
std::vector<double> quadratic_t_grid(double T, double eps, int M);
/// Decreasing times for `style`; M segments from T to eps.
std::vector<double> baseline_times(GridStyle style, const NoiseSchedule& sched, double T,
                                   double eps, int M);

/// Runs M steps of a baseline method from T to eps.
SolveResult solve_baseline(const BaselineMethod& method, CountedPredictor& p,
                           const NoiseSchedule& sched, StateView x_T, double T, double eps, int M);

}  // namespace dpmkit
