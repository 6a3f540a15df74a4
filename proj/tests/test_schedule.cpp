#include <doctest.h>

#include <cmath>
#include <vector>

#include "dpmkit/schedule.hpp"
#include "support/oracles.hpp"

using namespace dpmkit;
using dpmkit::testing::central_diff;

namespace {

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> ts(n);
  for (int i = 0; i < n; ++i) ts[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  ts.back() = hi;
  return ts;
}

}  // namespace

TEST_CASE("alpha_sigma closed forms") {
  const auto lin = NoiseSchedule::linear();
  const auto cos = NoiseSchedule::cosine();

  // 50-digit evaluation of exp(-(20 - 0.1)/4 - 0.05).
  CHECK(lin.alpha_sigma(1.0).alpha == doctest::Approx(6.5715864949296150e-3).epsilon(1e-14));

  const auto near0 = lin.alpha_sigma(1e-12);
  CHECK(near0.alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(near0.sigma < 1e-6);
  CHECK(near0.sigma > 0.0);

  CHECK(cos.alpha_sigma(1e-14).alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cos.t_max() == 0.9946);
  CHECK(lin.t_max() == 1.0);
}

TEST_CASE("alpha_sigma rejects times outside (0, t_max]") {
  const auto lin = NoiseSchedule::linear();
  const auto cos = NoiseSchedule::cosine();
  CHECK_THROWS_AS(lin.alpha_sigma(0.0), DomainError);
  CHECK_THROWS_AS(lin.alpha_sigma(-0.1), DomainError);
  CHECK_THROWS_AS(lin.alpha_sigma(1.0 + 1e-12), DomainError);
  CHECK_THROWS_AS(cos.alpha_sigma(0.995), DomainError);
  CHECK_THROWS_AS(lin.half_log_snr(0.0), DomainError);
  CHECK_THROWS_AS(lin.drift_diffusion(2.0), DomainError);
}

TEST_CASE("VP identity alpha^2 + sigma^2 = 1") {
  for (const auto& sched : {NoiseSchedule::linear(), NoiseSchedule::cosine()}) {
    for (int i = 1; i <= 1000; ++i) {
      const double t = sched.t_max() * i / 1000.0;
      const auto [a, s] = sched.alpha_sigma(t);
      CHECK(std::abs(a * a + s * s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("half_log_snr values") {
  const auto lin = NoiseSchedule::linear();
  // 50-digit references.
  CHECK(lin.half_log_snr(1e-3) == doctest::Approx(4.5577149327298977).epsilon(1e-12));
  CHECK(lin.half_log_snr(1.0) == doctest::Approx(-5.0249784066592042).epsilon(1e-12));
  CHECK(lin.half_log_snr(0.5) == doctest::Approx(-1.2275677344107873).epsilon(1e-12));
  const auto cos = NoiseSchedule::cosine();
  CHECK(cos.half_log_snr(0.9946) == doctest::Approx(-4.7776404693750837).epsilon(1e-10));
  CHECK(cos.half_log_snr(0.5) == doctest::Approx(-0.012313441405757272).epsilon(1e-9));
}

TEST_CASE("half_log_snr is strictly decreasing") {
  for (const auto& sched : {NoiseSchedule::linear(), NoiseSchedule::cosine()}) {
    double prev = sched.half_log_snr(1e-6);
    for (double t = 1e-6 + 1e-4; t <= sched.t_max(); t += 1e-4) {
      const double lam = sched.half_log_snr(t);
      REQUIRE(lam < prev);
      prev = lam;
    }
    // Neighbours 1e-8 apart never tie.
    for (double t : {1e-5, 1e-3, 0.1, 0.5, 0.9}) CHECK(sched.half_log_snr(t + 1e-8) < sched.half_log_snr(t));
  }
}

TEST_CASE("time_of_lambda inverts half_log_snr") {
  const auto lin = NoiseSchedule::linear();
  const auto cos = NoiseSchedule::cosine();
  for (double t : {1e-3, 0.1, 0.5, 1.0}) CHECK(lin.time_of_lambda(lin.half_log_snr(t)) == doctest::Approx(t).epsilon(1e-9));
  for (double t : {1e-3, 0.1, 0.5, 0.9946}) CHECK(std::abs(cos.time_of_lambda(cos.half_log_snr(t)) - t) <= 1e-6);
  CHECK(cos.time_of_lambda(cos.half_log_snr(0.9946)) == doctest::Approx(0.9946).epsilon(1e-6));

  // lambda(1) = -5.02497840665920417...; the rounded value -5.0250 maps to
  // t = 1.0000021592 (50 digits), just past t_max, and is rejected.
  CHECK(lin.time_of_lambda(-5.0249784066592042) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(lin.time_of_lambda(-5.0250), DomainError);

  for (double t : log_spaced(1e-6, 1.0, 1000))
    REQUIRE(std::abs(lin.time_of_lambda(lin.half_log_snr(t)) - t) <= 1e-9 * std::max(1.0, t));
  for (double t : log_spaced(1e-6, 0.9946, 1000))
    REQUIRE(std::abs(cos.time_of_lambda(cos.half_log_snr(t)) - t) <= 1e-6);
}

TEST_CASE("time_of_lambda range checks") {
  const auto lin = NoiseSchedule::linear();
  CHECK_THROWS_AS(lin.time_of_lambda(lin.lambda_min() - 0.1), DomainError);
  CHECK_THROWS_AS(lin.time_of_lambda(lin.lambda_max() + 0.1), DomainError);
  CHECK(lin.time_of_lambda(lin.lambda_min()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lin.time_of_lambda(lin.lambda_max()) == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("drift_diffusion matches finite differences") {
  const auto lin = NoiseSchedule::linear();
  const auto d0 = lin.drift_diffusion(1e-12);
  CHECK(d0.f == doctest::Approx(-0.05).epsilon(1e-9));

  for (const auto& sched : {NoiseSchedule::linear(), NoiseSchedule::cosine()}) {
    for (double t : {0.05, 0.3, 0.5, 0.8}) {
      const auto [f, g2] = sched.drift_diffusion(t);
      const double step = 1e-6;
      const double dlog_alpha = central_diff([&](double u) { return sched.log_alpha(u); }, t, step);
      const double dsigma2 = central_diff(
          [&](double u) {
            const double s = sched.alpha_sigma(u).sigma;
            return s * s;
          },
          t, step);
      const double dlambda = central_diff([&](double u) { return sched.half_log_snr(u); }, t, step);
      const double sigma2 = std::pow(sched.alpha_sigma(t).sigma, 2);
      CHECK(f == doctest::Approx(dlog_alpha).epsilon(1e-6));
      CHECK(g2 >= 0.0);
      CHECK(g2 == doctest::Approx(dsigma2 - 2.0 * f * sigma2).epsilon(1e-6));
      CHECK(g2 == doctest::Approx(-2.0 * sigma2 * dlambda).epsilon(1e-6));
    }
  }
}

TEST_CASE("lambda-only VP helpers") {
  const auto lin = NoiseSchedule::linear();
  for (double t : {1e-4, 0.2, 0.7, 1.0}) {
    const auto [a, s] = lin.alpha_sigma(t);
    const double lam = lin.half_log_snr(t);
    CHECK(vp_alpha_of_lambda(lam) == doctest::Approx(a).epsilon(1e-12));
    CHECK(vp_sigma_of_lambda(lam) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("schedule construction validation") {
  CHECK_THROWS_AS(NoiseSchedule::linear(0.0, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::linear(1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::cosine(-1.0), std::invalid_argument);
}
