#pragma once

#include <cstddef>
#include <functional>
#include <memory>

#include "dpmkit/schedule.hpp"
#include "dpmkit/types.hpp"

namespace dpmkit {

/**
 * A noise-prediction model eps(x, t).
 *
 * Cheap to copy: the evaluation closure is shared and immutable. Calling the
 * predictor directly is not counted; solvers go through a CountedPredictor.
 */
class NoisePredictor {
 public:
  using Fn = std::function<State(StateView x, double t)>;

  NoisePredictor() = default;
  explicit NoisePredictor(Fn fn);

  State operator()(StateView x, double t) const;
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  std::shared_ptr<const Fn> fn_;
};

/// Per-solve view of a predictor that counts function evaluations (NFE).
class CountedPredictor {
 public:
  explicit CountedPredictor(NoisePredictor predictor);

  State eval(StateView x, double t);
  std::size_t nfe() const { return nfe_; }
  const NoisePredictor& predictor() const { return predictor_; }

 private:
  NoisePredictor predictor_;
  std::size_t nfe_ = 0;
};

inline State eval_counted(CountedPredictor& p, StateView x, double t) { return p.eval(x, t); }

/// Gaussian data distribution q0 = N(mu0, s0^2 I).
struct GaussianProblem {
  State mu0;
  double s0 = 1.0;

  std::size_t dim() const { return mu0.size(); }
  void validate() const;
};

/// Isotropic Gaussian mixture sum_j w_j N(mu_j, s_j^2 I).
struct MixtureProblem {
  std::vector<double> weights;
  std::vector<State> means;
  std::vector<double> scales;

  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  void validate() const;
};

NoisePredictor make_zero_predictor();
/// eps(x, t) = c for every input.
NoisePredictor make_constant_predictor(State c);

/// Exact predictor -sigma_t grad log q_t for a Gaussian q0.
NoisePredictor make_gaussian_predictor(const NoiseSchedule& sched, GaussianProblem prob);

/// Exact predictor for a Gaussian mixture, stabilized with log-sum-exp.
NoisePredictor make_mixture_predictor(const NoiseSchedule& sched, MixtureProblem prob);

enum class DiscreteMode { Type1, Type2 };

/// Adapter from a model trained on N discrete steps to continuous time.
struct DiscreteModelSpec {
  int n_steps = 1000;
  double horizon = 1.0;
  DiscreteMode mode = DiscreteMode::Type1;
  /// Evaluated at the (possibly fractional) discrete input in [0, 1000(N-1)/N].
  NoisePredictor inner;
};

/// Discrete model input for continuous time t in [0, T].
double discrete_index(const DiscreteModelSpec& spec, double t);
NoisePredictor wrap_discrete(DiscreteModelSpec spec);

/// Toy discrete-time model: evaluates `continuous` at the time t_{n+1} that
/// discrete input 1000 n / N stands for, i.e. t' = index * T / 1000 + T / N.
NoisePredictor make_discretized_model(NoisePredictor continuous, int n_steps, double horizon);

using GradientFn = std::function<State(StateView x, double t)>;

/**
 * Classifier guidance: eps(x, t) - scale * sigma_t * grad_log_classifier(x, t).
 *
 * Only the inner predictor counts toward NFE; the classifier gradient is
 * free in this accounting even though a real guided sampler pays for it.
 */
NoisePredictor wrap_guidance(NoisePredictor p, GradientFn grad_log_classifier, double scale,
                             const NoiseSchedule& sched);

}  // namespace dpmkit
