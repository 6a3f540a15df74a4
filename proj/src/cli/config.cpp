#include "dpmkit/cli/config.hpp"

#include <fstream>
#include <set>

namespace dpmkit::cli {

using nlohmann::json;

std::size_t ProblemSpec::dim() const {
  return type == ProblemType::Gaussian ? gaussian.dim() : mixture.dim();
}

MixtureProblem default_mixture_problem() {
  return {{0.3, 0.5, 0.2},
          {{1.0, 0.5, -0.5, 0.0}, {-1.0, 0.0, 0.5, 0.5}, {0.0, -1.0, 0.0, 1.0}},
          {0.3, 0.5, 0.4}};
}

NoiseSchedule RunConfig::make_schedule() const {
  if (schedule == "linear") return NoiseSchedule::linear(beta0, beta1);
  if (schedule == "cosine") return NoiseSchedule::cosine(cosine_s);
  throw ConfigError("unknown schedule '" + schedule + "'");
}

NoisePredictor RunConfig::make_predictor(const NoiseSchedule& sched) const {
  return problem.type == ProblemType::Gaussian ? make_gaussian_predictor(sched, problem.gaussian)
                                               : make_mixture_predictor(sched, problem.mixture);
}

double RunConfig::start_time(const NoiseSchedule& sched) const { return T.value_or(sched.t_max()); }

double RunConfig::end_time(int nfe) const {
  if (eps) return *eps;
  return nfe <= 15 ? 1e-3 : 1e-4;
}

namespace {

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

GridStyle parse_grid(const std::string& s) {
  if (s == "uniform_lambda") return GridStyle::UniformLambda;
  if (s == "uniform_t") return GridStyle::UniformT;
  if (s == "quadratic_t") return GridStyle::QuadraticT;
  throw ConfigError("unknown grid style '" + s + "'");
}

ProblemSpec parse_problem(const json& doc, int dim) {
  ProblemSpec spec;
  const json p = doc.contains("problem") ? doc.at("problem") : json::object();
  if (!p.is_object()) throw ConfigError("'problem' must be an object");
  const std::string type = get_or<std::string>(p, "type", "gaussian");
  if (type == "gaussian") {
    spec.type = ProblemType::Gaussian;
    if (p.contains("mu0") && p.at("mu0").is_array()) {
      spec.gaussian.mu0 = get_or<std::vector<double>>(p, "mu0", {});
      if (dim > 0 && spec.gaussian.mu0.size() != static_cast<std::size_t>(dim))
        throw ConfigError("'mu0' length disagrees with 'dim'");
    } else {
      spec.gaussian.mu0.assign(dim > 0 ? dim : 4, get_or<double>(p, "mu0", 0.5));
    }
    spec.gaussian.s0 = get_or<double>(p, "s0", 0.5);
    try {
      spec.gaussian.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (type == "mixture") {
    spec.type = ProblemType::Mixture;
    spec.mixture = default_mixture_problem();
    if (p.contains("weights")) {
      spec.mixture.weights = get_or<std::vector<double>>(p, "weights", {});
      spec.mixture.means = get_or<std::vector<State>>(p, "means", {});
      spec.mixture.scales = get_or<std::vector<double>>(p, "scales", {});
    }
    try {
      spec.mixture.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (dim > 0 && spec.mixture.dim() != static_cast<std::size_t>(dim))
      throw ConfigError("mixture dimension disagrees with 'dim'");
  } else {
    throw ConfigError("unknown problem type '" + type + "'");
  }
  return spec;
}

const std::set<std::string> kSolvers = {"dpm1",     "dpm2",         "dpm3",         "ddim",
                                        "rk2_t",    "rk3_t",        "rk2_lambda",   "rk3_lambda",
                                        "dpm_fast", "dpm_adaptive12", "dpm_adaptive23"};

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  cfg.schedule = get_or<std::string>(doc, "schedule", cfg.schedule);
  cfg.beta0 = get_or<double>(doc, "beta0", cfg.beta0);
  cfg.beta1 = get_or<double>(doc, "beta1", cfg.beta1);
  cfg.cosine_s = get_or<double>(doc, "cosine_s", cfg.cosine_s);
  cfg.problem = parse_problem(doc, get_or<int>(doc, "dim", 0));
  if (doc.contains("T") && !doc.at("T").is_null()) cfg.T = get_or<double>(doc, "T", 1.0);
  if (doc.contains("eps") && !doc.at("eps").is_null()) cfg.eps = get_or<double>(doc, "eps", 1e-3);
  cfg.n_samples = get_or<int>(doc, "n_samples", cfg.n_samples);
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.output = get_or<std::string>(doc, "output", cfg.output);
  cfg.n_fine = get_or<int>(doc, "n_fine", cfg.n_fine);

  const json s = doc.contains("solver") ? doc.at("solver") : json::object();
  if (s.is_string()) {
    cfg.solver.name = s.get<std::string>();
  } else if (s.is_object()) {
    SolverSpec& sv = cfg.solver;
    sv.name = get_or<std::string>(s, "name", sv.name);
    sv.r1 = get_or<double>(s, "r1", sv.r1);
    sv.r2 = get_or<double>(s, "r2", sv.r2);
    sv.ddim_grid = parse_grid(get_or<std::string>(s, "grid", "uniform_lambda"));
    sv.steps = get_or<std::vector<int>>(s, "steps", sv.steps);
    sv.nfe = get_or<std::vector<int>>(s, "nfe", sv.nfe);
    sv.budget = get_or<int>(s, "K", sv.budget);
    sv.adaptive.rtol = get_or<double>(s, "rtol", sv.adaptive.rtol);
    sv.adaptive.atol = get_or<double>(s, "atol", sv.adaptive.atol);
    sv.adaptive.h_init = get_or<double>(s, "h_init", sv.adaptive.h_init);
    sv.adaptive.theta = get_or<double>(s, "theta", sv.adaptive.theta);
    sv.batch = get_or<bool>(s, "batch", sv.batch);
  } else {
    throw ConfigError("'solver' must be a string or an object");
  }
  if (!kSolvers.contains(cfg.solver.name)) throw ConfigError("unknown solver '" + cfg.solver.name + "'");
  if (cfg.solver.name == "dpm_adaptive12") cfg.solver.adaptive.pair = AdaptivePair::Order12;
  if (cfg.solver.name == "dpm_adaptive23") cfg.solver.adaptive.pair = AdaptivePair::Order23;
  if (cfg.solver.r1 != 0.0 && !(cfg.solver.r1 > 0.0 && cfg.solver.r1 < 1.0))
    throw ConfigError("r1 must lie in (0, 1)");
  if (cfg.solver.r2 != 0.0 && !(cfg.solver.r2 > 0.0 && cfg.solver.r2 < 1.0))
    throw ConfigError("r2 must lie in (0, 1)");
  try {
    cfg.solver.adaptive.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (int m : cfg.solver.steps)
    if (m < 1) throw ConfigError("'steps' entries must be >= 1");
  for (int k : cfg.solver.nfe)
    if (k < 1) throw ConfigError("'nfe' entries must be >= 1");
  if (cfg.solver.budget < 1) throw ConfigError("'K' must be >= 1");
  if (cfg.n_samples < 1) throw ConfigError("'n_samples' must be >= 1");
  if (cfg.n_fine < 1000) throw ConfigError("'n_fine' must be >= 1000");

  NoiseSchedule sched = [&] {
    try {
      return cfg.make_schedule();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  const double T = cfg.start_time(sched);
  if (!(T > 0.0) || T > sched.t_max()) throw ConfigError("T must lie in (0, t_max]");
  if (cfg.eps && (!(*cfg.eps >= NoiseSchedule::kMinTime) || !(*cfg.eps < T)))
    throw ConfigError("eps must satisfy 1e-6 <= eps < T");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace dpmkit::cli
