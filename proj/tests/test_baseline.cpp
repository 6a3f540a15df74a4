#include <doctest.h>

#include <cmath>
#include <random>

#include "dpmkit/baseline.hpp"
#include "dpmkit/oracle.hpp"
#include "support/oracles.hpp"

using namespace dpmkit;
using namespace dpmkit::testing;

TEST_CASE("ddim_step basics") {
  const auto sched = NoiseSchedule::linear();
  CountedPredictor zero(make_zero_predictor());
  const State x{1.5, -0.5};
  const double ratio = sched.alpha_sigma(0.2).alpha / sched.alpha_sigma(0.7).alpha;
  const State y = ddim_step(zero, sched, x, 0.7, 0.2);
  CHECK(y[0] == doctest::Approx(ratio * 1.5).epsilon(1e-15));

  CountedPredictor g(make_gaussian_predictor(sched, {{0.3, 0.1}, 0.5}));
  CHECK(ddim_step(g, sched, x, 0.4, 0.4) == x);
  CHECK(g.nfe() == 1);
  CHECK_THROWS_AS(ddim_step(g, sched, x, 0.2, 0.4), DomainError);
}

TEST_CASE("ddim_step equals dpm1_step") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(1e-3, 1.0);
  const auto sched = NoiseSchedule::linear();
  const auto eps = make_mixture_predictor(sched, {{0.4, 0.6}, {{1.0, 0.0, -1.0}, {-0.5, 0.5, 0.0}}, {0.3, 0.6}});
  for (int trial = 0; trial < 1000; ++trial) {
    double s = unif(rng), t = unif(rng);
    if (s == t) continue;
    if (s < t) std::swap(s, t);
    const State x = random_vector(rng, 3);
    CountedPredictor a(eps), b(eps);
    REQUIRE(rel_diff(ddim_step(a, sched, x, s, t), dpm1_step(b, sched, x, s, t)) <= 1e-12);
  }
}

TEST_CASE("ode_field_t") {
  const auto sched = NoiseSchedule::linear();
  CountedPredictor zero(make_zero_predictor());
  const State x{1.5, -0.5};
  const double f = sched.drift_diffusion(0.3).f;
  CHECK(ode_field_t(zero, sched, x, 0.3)[0] == doctest::Approx(f * 1.5).epsilon(1e-15));

  // Standard normal data is stationary: the field vanishes.
  CountedPredictor standard(make_gaussian_predictor(sched, {{0.0, 0.0}, 1.0}));
  for (double t : {0.01, 0.3, 0.9})
    for (double v : ode_field_t(standard, sched, x, t)) CHECK(std::abs(v) <= 1e-12);

  // Matches the time derivative of the exact Gaussian flow.
  const GaussianProblem prob{{0.8, -0.6}, 0.3};
  CountedPredictor g(make_gaussian_predictor(sched, prob));
  const double s = 0.9;
  for (double t : {0.05, 0.2, 0.6}) {
    const State xt = gaussian_flow_exact(sched, prob, x, s, t);
    const double step = 1e-6;
    const State fwd = gaussian_flow_exact(sched, prob, x, s, t + step);
    const State bwd = gaussian_flow_exact(sched, prob, x, s, t - step);
    const State field = ode_field_t(g, sched, xt, t);
    for (int i = 0; i < 2; ++i) CHECK(field[i] == doctest::Approx((fwd[i] - bwd[i]) / (2 * step)).epsilon(1e-5));
  }
}

TEST_CASE("ode_field_lambda") {
  const auto sched = NoiseSchedule::linear();
  const State x{1.5, -0.5};
  CountedPredictor zero(make_zero_predictor());
  const double lam = 0.7;
  const double sigma = vp_sigma_of_lambda(lam);
  CHECK(ode_field_lambda(zero, sched, x, lam)[0] == doctest::Approx(sigma * sigma * 1.5).epsilon(1e-15));

  CountedPredictor standard(make_gaussian_predictor(sched, {{0.0, 0.0}, 1.0}));
  for (double v : ode_field_lambda(standard, sched, x, lam)) CHECK(std::abs(v) <= 1e-14);

  // Change of variables: field_lambda * dlambda/dt = field_t.
  const auto eps = make_mixture_predictor(sched, {{0.4, 0.6}, {{1.0, 0.0}, {-0.5, 0.5}}, {0.3, 0.6}});
  CountedPredictor p(eps);
  for (double t : {0.05, 0.2, 0.5, 0.9}) {
    const double dlam = central_diff([&](double u) { return sched.half_log_snr(u); }, t, 1e-6);
    const State fl = ode_field_lambda(p, sched, x, sched.half_log_snr(t));
    const State ft = ode_field_t(p, sched, x, t);
    for (int i = 0; i < 2; ++i) CHECK(fl[i] * dlam == doctest::Approx(ft[i]).epsilon(1e-8));
  }
}

TEST_CASE("explicit RK steps on linear fields") {
  const Field zero = [](StateView x, double) { return State(x.size(), 0.0); };
  const Field growth = [](StateView x, double) { return State(x.begin(), x.end()); };
  const State x{2.0};
  CHECK(midpoint_step(zero, x, 0.0, 0.3) == x);
  CHECK(heun3_step(zero, x, 0.0, 0.3) == x);
  const double h = 0.3;
  CHECK(midpoint_step(growth, x, 0.0, h)[0] == doctest::Approx(2.0 * (1 + h + h * h / 2)).epsilon(1e-15));
  CHECK(heun3_step(growth, x, 0.0, h)[0] == doctest::Approx(2.0 * (1 + h + h * h / 2 + h * h * h / 6)).epsilon(1e-15));

  const auto sched = NoiseSchedule::linear();
  CountedPredictor p(make_zero_predictor());
  rk_step(BaselineMethod::paired(BaselineKind::RK2_t), p, sched, x, 0.8, 0.6);
  CHECK(p.nfe() == 2);
  rk_step(BaselineMethod::paired(BaselineKind::RK3_lambda), p, sched, x, -1.0, 0.5);
  CHECK(p.nfe() == 5);
  CHECK_THROWS_AS(rk_step(BaselineMethod::paired(BaselineKind::DDIM), p, sched, x, 0.8, 0.6), std::invalid_argument);
}

TEST_CASE("time grids") {
  const auto u = uniform_t_grid(1.0, 1e-3, 4);
  CHECK(u.front() == 1.0);
  CHECK(u.back() == 1e-3);
  CHECK(u[1] - u[2] == doctest::Approx(u[2] - u[3]).epsilon(1e-12));

  const auto q = quadratic_t_grid(1.0, 1e-3, 4);
  CHECK(q.front() == 1.0);
  CHECK(q.back() == 1e-3);
  CHECK(q[3] == doctest::Approx(1e-3 + 0.0625 * (1.0 - 1e-3)).epsilon(1e-14));
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] < q[i - 1]);
  // Densest near eps.
  CHECK(q[3] - q[4] < q[0] - q[1]);

  CHECK(BaselineMethod::paired(BaselineKind::RK2_t).grid == GridStyle::UniformT);
  CHECK(BaselineMethod::paired(BaselineKind::RK3_lambda).grid == GridStyle::UniformLambda);
  CHECK(BaselineMethod::paired(BaselineKind::DDIM).grid == GridStyle::UniformLambda);
}

TEST_CASE("RK baselines converge at their nominal order") {
  const auto sched = NoiseSchedule::linear();
  const MixtureProblem mix{{0.3, 0.5, 0.2}, {{1.0, 0.5}, {-1.0, 0.0}, {0.0, -1.0}}, {0.3, 0.5, 0.4}};
  const auto eps = make_mixture_predictor(sched, mix);
  const State x_T{0.4, -1.1};
  const State ref = reference_solve(eps, sched, x_T, 1.0, 1e-3, 20000);

  for (auto kind : {BaselineKind::RK2_t, BaselineKind::RK3_t, BaselineKind::RK2_lambda, BaselineKind::RK3_lambda}) {
    const BaselineMethod method = BaselineMethod::paired(kind);
    std::vector<double> hs, errs;
    for (int M : {20, 40, 80, 160}) {
      CountedPredictor p(eps);
      const SolveResult r = solve_baseline(method, p, sched, x_T, 1.0, 1e-3, M);
      CHECK(r.nfe == static_cast<std::size_t>(M * method.cost_per_step()));
      hs.push_back(r.h_max());
      errs.push_back(rms_error(r.final_state, ref));
    }
    const double slope = estimate_order(hs, errs);
    const double k = method.cost_per_step();
    MESSAGE(method.name() << " slope " << slope);
    CHECK(slope >= k - 0.3);
    CHECK(slope <= k + 0.7);
  }
}
