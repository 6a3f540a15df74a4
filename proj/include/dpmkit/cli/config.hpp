#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpmkit/baseline.hpp"
#include "dpmkit/oracle.hpp"
#include "dpmkit/predictor.hpp"
#include "dpmkit/schedule.hpp"
#include "dpmkit/solver.hpp"

namespace dpmkit::cli {

/// Malformed or inconsistent run configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemType { Gaussian, Mixture };

struct ProblemSpec {
  ProblemType type = ProblemType::Gaussian;
  GaussianProblem gaussian;
  MixtureProblem mixture;

  std::size_t dim() const;
  const char* name() const { return type == ProblemType::Gaussian ? "gaussian" : "mixture"; }
};

/// Three-component mixture in four dimensions used as the nonlinear toy.
MixtureProblem default_mixture_problem();

struct SolverSpec {
  std::string name = "dpm3";
  double r1 = 0.0;  // 0 selects the method default
  double r2 = 0.0;
  GridStyle ddim_grid = GridStyle::UniformLambda;
  std::vector<int> steps;  // step counts M for sweeps
  std::vector<int> nfe;    // NFE budgets for sweeps and comparisons
  int budget = 10;         // K for sampling with the fixed-budget plan
  AdaptiveConfig adaptive;
  bool batch = false;      // adaptive: one shared step size for all samples
};

struct RunConfig {
  std::string schedule = "linear";
  double beta0 = 0.1;
  double beta1 = 20.0;
  double cosine_s = 0.008;
  ProblemSpec problem;
  SolverSpec solver;
  std::optional<double> T;
  std::optional<double> eps;
  int n_samples = 4;
  std::uint64_t seed = 0;
  std::string output;
  int n_fine = kDefaultFineSteps;

  NoiseSchedule make_schedule() const;
  NoisePredictor make_predictor(const NoiseSchedule& sched) const;
  double start_time(const NoiseSchedule& sched) const;
  /// Configured eps, or 1e-3 for budgets up to 15 NFE and 1e-4 above.
  double end_time(int nfe) const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

}  // namespace dpmkit::cli
