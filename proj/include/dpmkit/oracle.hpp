#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dpmkit/predictor.hpp"
#include "dpmkit/schedule.hpp"
#include "dpmkit/types.hpp"

namespace dpmkit {

struct ErrorReport {
  double rms_error = 0.0;
  std::size_t nfe = 0;
  double h_max = 0.0;
  std::string solver_name;
};

/**
 * Exact flow map of the probability-flow ODE for Gaussian data
 * q0 = N(mu0, s0^2 I), from time s to time t:
 *
 *   x_t = alpha_t mu0 + sqrt(v_t / v_s) (x_s - alpha_s mu0),
 *   v_tau = alpha_tau^2 s0^2 + sigma_tau^2.
 */
State gaussian_flow_exact(const NoiseSchedule& sched, const GaussianProblem& prob, StateView x_s,
                          double s, double t);

inline constexpr int kDefaultFineSteps = 20000;

/// Classical RK4 on the lambda-domain ODE with n_fine uniform steps from T to eps.
State reference_solve(const NoisePredictor& p, const NoiseSchedule& sched, StateView x_T, double T,
                      double eps, int n_fine = kDefaultFineSteps);

/// ||a - b||_2 / sqrt(D).
double rms_error(StateView a, StateView b);

/// Errors at or below this are treated as roundoff and left out of order fits.
inline constexpr double kErrorFloor = 1e-13;

/// Least-squares slope of log(error) against log(h).
double estimate_order(const std::vector<double>& hs, const std::vector<double>& errors);

}  // namespace dpmkit
