#include "dpmkit/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

#include "dpmkit/cli/rng.hpp"

namespace dpmkit::cli {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.solver << ',' << r.schedule << ',' << r.problem << ',' << r.nfe << ',' << r.steps
        << ',' << format_real(r.h_max) << ',' << format_real(r.rms_error) << ',' << r.seed << '\n';
  }
}

unsigned thread_count() {
  if (const char* env = std::getenv("DPMKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            body(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int cost_per_step(const std::string& name) {
  if (name == "dpm1" || name == "ddim") return 1;
  if (name == "dpm2" || name == "rk2_t" || name == "rk2_lambda") return 2;
  if (name == "dpm3" || name == "rk3_t" || name == "rk3_lambda") return 3;
  throw ConfigError("'" + name + "' is not a fixed-step method");
}

namespace {

BaselineKind baseline_kind(const std::string& name) {
  if (name == "ddim") return BaselineKind::DDIM;
  if (name == "rk2_t") return BaselineKind::RK2_t;
  if (name == "rk3_t") return BaselineKind::RK3_t;
  if (name == "rk2_lambda") return BaselineKind::RK2_lambda;
  return BaselineKind::RK3_lambda;
}

SolveResult run_dpm_grid(int order, const SolverSpec& spec, CountedPredictor& p,
                         const NoiseSchedule& sched, StateView x_T, double T, double eps, int M) {
  const double r1 = spec.r1 != 0.0 ? spec.r1 : (order == 2 ? 0.5 : 1.0 / 3.0);
  const double r2 = spec.r2 != 0.0 ? spec.r2 : 2.0 / 3.0;
  if (order == 1 || (order == 2 && r1 == 0.5) || (order == 3 && r1 == 1.0 / 3.0 && r2 == 2.0 / 3.0))
    return solve_fixed(p, sched, x_T, T, eps, StepPlan{std::vector<int>(M, order)});

  // Non-default intermediate points.
  const TimeGrid grid = uniform_lambda_grid(sched, T, eps, M);
  const std::size_t nfe0 = p.nfe();
  SolveResult result;
  State x(x_T.begin(), x_T.end());
  for (int i = 0; i < M; ++i) {
    x = order == 2 ? dpm2_step(p, sched, x, grid.times[i], grid.times[i + 1], r1)
                   : dpm3_step(p, sched, x, grid.times[i], grid.times[i + 1], r1, r2);
    result.trace.push_back({grid.times[i + 1], grid.lambdas[i + 1], grid.step_size(i + 1), true});
  }
  result.accepted_steps = M;
  result.final_state = std::move(x);
  result.nfe = p.nfe() - nfe0;
  return result;
}

}  // namespace

SolveResult run_fixed_method(const std::string& name, const SolverSpec& spec, CountedPredictor& p,
                             const NoiseSchedule& sched, StateView x_T, double T, double eps,
                             int steps) {
  if (name == "dpm1") return run_dpm_grid(1, spec, p, sched, x_T, T, eps, steps);
  if (name == "dpm2") return run_dpm_grid(2, spec, p, sched, x_T, T, eps, steps);
  if (name == "dpm3") return run_dpm_grid(3, spec, p, sched, x_T, T, eps, steps);
  if (name == "dpm_fast") return solve_fixed(p, sched, x_T, T, eps, budget_plan(steps));
  if (name == "dpm_adaptive12" || name == "dpm_adaptive23")
    throw ConfigError("'" + name + "' is adaptive and has no fixed step count");
  BaselineMethod method = BaselineMethod::paired(baseline_kind(name));
  if (method.kind == BaselineKind::DDIM) method.grid = spec.ddim_grid;
  return solve_baseline(method, p, sched, x_T, T, eps, steps);
}

namespace {

struct Setup {
  NoiseSchedule sched;
  NoisePredictor predictor;
  double T;
  std::vector<State> initial;
};

Setup make_setup(const RunConfig& cfg) {
  NoiseSchedule sched = cfg.make_schedule();
  NoisePredictor predictor = cfg.make_predictor(sched);
  const double T = cfg.start_time(sched);
  std::vector<State> initial;
  for (int i = 0; i < cfg.n_samples; ++i)
    initial.push_back(standard_normal(cfg.seed, static_cast<std::uint64_t>(i), cfg.problem.dim()));
  return {sched, std::move(predictor), T, std::move(initial)};
}

std::vector<State> references(const RunConfig& cfg, const Setup& setup, double eps) {
  std::vector<State> refs(setup.initial.size());
  parallel_for(refs.size(), [&](std::size_t i) {
    refs[i] = cfg.problem.type == ProblemType::Gaussian
                  ? gaussian_flow_exact(setup.sched, cfg.problem.gaussian, setup.initial[i], setup.T, eps)
                  : reference_solve(setup.predictor, setup.sched, setup.initial[i], setup.T, eps,
                                    cfg.n_fine);
  });
  return refs;
}

// Error over all samples and components, plus the per-solve NFE and step size.
CsvRow run_row(const std::string& name, const RunConfig& cfg, const Setup& setup,
               const std::vector<State>& refs, double eps, int steps) {
  std::vector<double> sq(setup.initial.size());
  std::vector<SolveResult> results(setup.initial.size());
  parallel_for(setup.initial.size(), [&](std::size_t i) {
    CountedPredictor counted(setup.predictor);
    results[i] = run_fixed_method(name, cfg.solver, counted, setup.sched, setup.initial[i], setup.T,
                                  eps, steps);
    const double e = rms_error(results[i].final_state, refs[i]);
    sq[i] = e * e;
  });
  double mean = 0.0;
  for (double v : sq) mean += v;
  mean /= static_cast<double>(sq.size());

  CsvRow row;
  row.solver = name;
  row.schedule = setup.sched.name();
  row.problem = cfg.problem.name();
  row.nfe = results.front().nfe;
  row.steps = results.front().accepted_steps;
  row.h_max = results.front().h_max();
  row.rms_error = std::sqrt(mean);
  row.seed = cfg.seed;
  return row;
}

void write_output(const RunConfig& cfg, const std::vector<CsvRow>& rows) {
  if (cfg.output.empty()) return;
  std::ofstream out(cfg.output);
  if (!out) throw std::runtime_error("cannot write '" + cfg.output + "'");
  write_csv(out, rows);
}

}  // namespace

ConvergenceReport cmd_convergence(const RunConfig& cfg, std::ostream& log) {
  const std::string& name = cfg.solver.name;
  std::vector<int> steps = cfg.solver.steps;
  if (name == "dpm_adaptive12" || name == "dpm_adaptive23")
    throw ConfigError("convergence sweeps need a fixed-step solver");
  if (name == "dpm_fast") {
    steps = cfg.solver.nfe.empty() ? std::vector<int>{10, 20, 40, 80} : cfg.solver.nfe;
  } else if (steps.empty()) {
    if (cfg.solver.nfe.empty()) {
      steps = {5, 10, 20, 40, 80};
    } else {
      for (int k : cfg.solver.nfe) steps.push_back(std::max(1, k / cost_per_step(name)));
    }
  }

  const Setup setup = make_setup(cfg);
  const double eps = cfg.eps.value_or(1e-3);
  const auto refs = references(cfg, setup, eps);

  ConvergenceReport report;
  std::vector<double> hs, errs;
  for (int m : steps) {
    report.rows.push_back(run_row(name, cfg, setup, refs, eps, m));
    hs.push_back(report.rows.back().h_max);
    errs.push_back(report.rows.back().rms_error);
  }
  write_output(cfg, report.rows);
  try {
    report.fitted_order = estimate_order(hs, errs);
    log << "fitted order " << name << ": " << format_real(report.fitted_order) << '\n';
  } catch (const std::invalid_argument& e) {
    report.fitted_order = std::nan("");
    log << "fitted order " << name << ": unavailable (" << e.what() << ")\n";
  }
  return report;
}

const std::vector<std::string>& compare_methods() {
  static const std::vector<std::string> methods = {"rk2_t", "rk2_lambda", "dpm2", "rk3_t",
                                                   "rk3_lambda", "dpm3", "ddim", "dpm1"};
  return methods;
}

std::vector<CsvRow> cmd_compare(const RunConfig& cfg, std::ostream& log) {
  const std::vector<int> budgets = cfg.solver.nfe.empty() ? std::vector<int>{12, 24, 48} : cfg.solver.nfe;
  const Setup setup = make_setup(cfg);
  const double eps = cfg.eps.value_or(1e-3);
  const auto refs = references(cfg, setup, eps);

  std::vector<CsvRow> rows;
  for (const auto& name : compare_methods()) {
    for (int k : budgets) {
      const int steps = k / cost_per_step(name);
      if (steps < 1) continue;
      rows.push_back(run_row(name, cfg, setup, refs, eps, steps));
    }
  }
  write_output(cfg, rows);
  for (const auto& r : rows)
    log << r.solver << " nfe=" << r.nfe << " rms_error=" << format_real(r.rms_error) << '\n';
  return rows;
}

namespace {

// Order12 pairs with eps = 1e-3 and Order23 with eps = 1e-4 unless eps is set.
double adaptive_end_time(const RunConfig& cfg) {
  return cfg.eps.value_or(cfg.solver.adaptive.pair == AdaptivePair::Order12 ? 1e-3 : 1e-4);
}

}  // namespace

SampleReport cmd_sample(const RunConfig& cfg, std::ostream& log) {
  const Setup setup = make_setup(cfg);
  const std::string& name = cfg.solver.name;
  const bool adaptive = name == "dpm_adaptive12" || name == "dpm_adaptive23";

  SampleReport report;
  if (adaptive && cfg.solver.batch) {
    const double eps = adaptive_end_time(cfg);
    report.results.push_back(
        solve_adaptive_batch(setup.predictor, setup.sched, setup.initial, setup.T, eps, cfg.solver.adaptive));
    const State& stacked = report.results.front().final_state;
    const std::size_t d = cfg.problem.dim();
    for (std::size_t b = 0; b < setup.initial.size(); ++b)
      report.samples.emplace_back(stacked.begin() + b * d, stacked.begin() + (b + 1) * d);
  } else {
    report.results.resize(setup.initial.size());
    parallel_for(setup.initial.size(), [&](std::size_t i) {
      CountedPredictor counted(setup.predictor);
      if (adaptive) {
        report.results[i] = solve_adaptive(counted, setup.sched, setup.initial[i], setup.T,
                                           adaptive_end_time(cfg),
                                           cfg.solver.adaptive);
      } else {
        const int K = cfg.solver.budget;
        const int steps = name == "dpm_fast" ? K : std::max(1, K / cost_per_step(name));
        report.results[i] = run_fixed_method(name, cfg.solver, counted, setup.sched,
                                             setup.initial[i], setup.T, cfg.end_time(K), steps);
      }
    });
    for (const auto& r : report.results) report.samples.push_back(r.final_state);
  }

  for (const auto& r : report.results) {
    report.nfe = std::max(report.nfe, r.nfe);
    report.total_nfe += r.nfe;
    report.accepted = std::max(report.accepted, r.accepted_steps);
    report.rejected = std::max(report.rejected, r.rejected_steps);
  }

  if (!cfg.output.empty()) {
    std::ofstream out(cfg.output);
    if (!out) throw std::runtime_error("cannot write '" + cfg.output + "'");
    out << "sample";
    for (std::size_t j = 0; j < cfg.problem.dim(); ++j) out << ",x" << j;
    out << '\n';
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
      out << i;
      for (double v : report.samples[i]) out << ',' << format_real(v);
      out << '\n';
    }
  }
  log << "summary solver=" << name << " samples=" << report.samples.size() << " nfe=" << report.nfe
      << " total_nfe=" << report.total_nfe << " accepted=" << report.accepted
      << " rejected=" << report.rejected << '\n';
  return report;
}

void cmd_plan(int K, const NoiseSchedule& sched, double T, double eps, std::ostream& out) {
  const StepPlan plan = budget_plan(K);
  for (std::size_t i = 0; i < plan.orders.size(); ++i) out << (i ? " " : "") << plan.orders[i];
  out << '\n';
  const TimeGrid grid = uniform_lambda_grid(sched, T, eps, static_cast<int>(plan.segments()));
  out << "segment,order,t_start,t_end,lambda_start,lambda_end\n";
  for (std::size_t i = 0; i < plan.segments(); ++i) {
    out << i << ',' << plan.orders[i] << ',' << format_real(grid.times[i]) << ','
        << format_real(grid.times[i + 1]) << ',' << format_real(grid.lambdas[i]) << ','
        << format_real(grid.lambdas[i + 1]) << '\n';
  }
}

}  // namespace dpmkit::cli
