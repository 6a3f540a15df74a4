#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpmkit/cli/config.hpp"

namespace dpmkit::cli {

/// One line of the results CSV.
struct CsvRow {
  std::string solver;
  std::string schedule;
  std::string problem;
  std::size_t nfe = 0;
  std::size_t steps = 0;
  double h_max = 0.0;
  double rms_error = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kCsvHeader = "solver,schedule,problem,nfe,steps,h_max,rms_error,seed";

std::string format_real(double v);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

/// Worker count from DPMKIT_THREADS, else the hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Runs the named fixed-step method with M steps (or budget K for dpm_fast).
SolveResult run_fixed_method(const std::string& name, const SolverSpec& spec, CountedPredictor& p,
                             const NoiseSchedule& sched, StateView x_T, double T, double eps,
                             int steps);

/// NFE charged per step by a fixed-step method.
int cost_per_step(const std::string& name);

struct ConvergenceReport {
  std::vector<CsvRow> rows;
  double fitted_order = 0.0;
};

ConvergenceReport cmd_convergence(const RunConfig& cfg, std::ostream& log);

/// Methods run by cmd_compare, in output order.
const std::vector<std::string>& compare_methods();
std::vector<CsvRow> cmd_compare(const RunConfig& cfg, std::ostream& log);

struct SampleReport {
  std::vector<State> samples;
  std::vector<SolveResult> results;  // one per sample, or a single batched result
  std::size_t nfe = 0;               // per solve (maximum over samples)
  std::size_t total_nfe = 0;
  std::size_t accepted = 0;          // per solve (maximum over samples)
  std::size_t rejected = 0;
};

SampleReport cmd_sample(const RunConfig& cfg, std::ostream& log);

void cmd_plan(int K, const NoiseSchedule& sched, double T, double eps, std::ostream& out);

}  // namespace dpmkit::cli
