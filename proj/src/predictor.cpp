#include "dpmkit/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpmkit {

NoisePredictor::NoisePredictor(Fn fn) : fn_(std::make_shared<const Fn>(std::move(fn))) {}

State NoisePredictor::operator()(StateView x, double t) const {
  if (!fn_) throw std::logic_error("empty noise predictor");
  return (*fn_)(x, t);
}

CountedPredictor::CountedPredictor(NoisePredictor predictor) : predictor_(std::move(predictor)) {}

State CountedPredictor::eval(StateView x, double t) {
  State out = predictor_(x, t);
  ++nfe_;
  return out;
}

void GaussianProblem::validate() const {
  if (mu0.empty()) throw std::invalid_argument("gaussian problem needs a non-empty mean");
  if (!(s0 > 0.0)) throw std::invalid_argument("gaussian problem needs s0 > 0");
}

void MixtureProblem::validate() const {
  if (weights.empty()) throw std::invalid_argument("mixture needs at least one component");
  if (means.size() != weights.size() || scales.size() != weights.size())
    throw std::invalid_argument("mixture component counts disagree");
  const std::size_t d = dim();
  if (d == 0) throw std::invalid_argument("mixture means must be non-empty");
  for (const auto& m : means)
    if (m.size() != d) throw std::invalid_argument("mixture means differ in dimension");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
  for (double s : scales)
    if (!(s > 0.0)) throw std::invalid_argument("mixture scales must be positive");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
}

NoisePredictor make_zero_predictor() {
  return NoisePredictor([](StateView x, double) { return State(x.size(), 0.0); });
}

NoisePredictor make_constant_predictor(State c) {
  return NoisePredictor([c = std::move(c)](StateView x, double) {
    if (x.size() != c.size()) throw std::invalid_argument("constant predictor: dimension mismatch");
    return c;
  });
}

NoisePredictor make_gaussian_predictor(const NoiseSchedule& sched, GaussianProblem prob) {
  prob.validate();
  return NoisePredictor([sched, prob = std::move(prob)](StateView x, double t) {
    if (x.size() != prob.dim()) throw std::invalid_argument("gaussian predictor: dimension mismatch");
    const auto [alpha, sigma] = sched.alpha_sigma(t);
    const double v = alpha * alpha * prob.s0 * prob.s0 + sigma * sigma;
    State eps(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) eps[i] = sigma * (x[i] - alpha * prob.mu0[i]) / v;
    return eps;
  });
}

NoisePredictor make_mixture_predictor(const NoiseSchedule& sched, MixtureProblem prob) {
  prob.validate();
  return NoisePredictor([sched, prob = std::move(prob)](StateView x, double t) {
    const std::size_t d = prob.dim();
    if (x.size() != d) throw std::invalid_argument("mixture predictor: dimension mismatch");
    const auto [alpha, sigma] = sched.alpha_sigma(t);
    const std::size_t k = prob.weights.size();

    std::vector<double> var(k), logp(k);
    for (std::size_t j = 0; j < k; ++j) {
      var[j] = alpha * alpha * prob.scales[j] * prob.scales[j] + sigma * sigma;
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double r = x[i] - alpha * prob.means[j][i];
        sq += r * r;
      }
      logp[j] = std::log(prob.weights[j]) - 0.5 * static_cast<double>(d) * std::log(var[j]) -
                0.5 * sq / var[j];
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    double norm = 0.0;
    for (double& lp : logp) norm += (lp = std::exp(lp - top));

    // eps = sigma * sum_j gamma_j (x - alpha mu_j) / v_j
    State eps(d, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double gamma = logp[j] / norm;
      for (std::size_t i = 0; i < d; ++i)
        eps[i] += gamma * sigma * (x[i] - alpha * prob.means[j][i]) / var[j];
    }
    return eps;
  });
}

double discrete_index(const DiscreteModelSpec& spec, double t) {
  if (spec.n_steps < 1 || !(spec.horizon > 0.0))
    throw std::invalid_argument("discrete model needs N >= 1 and T > 0");
  if (t < 0.0 || t > spec.horizon) throw DomainError("discrete model: time outside [0, T]");
  const double n = spec.n_steps;
  const double T = spec.horizon;
  switch (spec.mode) {
    case DiscreteMode::Type1:
      return 1000.0 * std::max(t - T / n, 0.0);
    case DiscreteMode::Type2:
      return 1000.0 * (n - 1.0) * t / (n * T);
  }
  return 0.0;
}

NoisePredictor wrap_discrete(DiscreteModelSpec spec) {
  if (!spec.inner) throw std::invalid_argument("discrete wrapper needs an inner model");
  discrete_index(spec, spec.horizon);  // validates N and T
  return NoisePredictor([spec = std::move(spec)](StateView x, double t) {
    return spec.inner(x, discrete_index(spec, t));
  });
}

NoisePredictor make_discretized_model(NoisePredictor continuous, int n_steps, double horizon) {
  if (n_steps < 1 || !(horizon > 0.0))
    throw std::invalid_argument("discretized model needs N >= 1 and T > 0");
  return NoisePredictor([continuous = std::move(continuous), n_steps, horizon](StateView x,
                                                                               double index) {
    const double t = index * horizon / 1000.0 + horizon / n_steps;
    return continuous(x, std::min(t, horizon));
  });
}

NoisePredictor wrap_guidance(NoisePredictor p, GradientFn grad_log_classifier, double scale,
                             const NoiseSchedule& sched) {
  if (!(scale >= 0.0)) throw std::invalid_argument("guidance scale must be non-negative");
  if (!grad_log_classifier) throw std::invalid_argument("guidance needs a classifier gradient");
  return NoisePredictor([p = std::move(p), grad = std::move(grad_log_classifier), scale,
                         sched](StateView x, double t) {
    State eps = p(x, t);
    if (scale == 0.0) return eps;
    const State g = grad(x, t);
    if (g.size() != eps.size()) throw std::invalid_argument("guidance: gradient dimension mismatch");
    const double sigma = sched.alpha_sigma(t).sigma;
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] -= scale * sigma * g[i];
    return eps;
  });
}

}  // namespace dpmkit
