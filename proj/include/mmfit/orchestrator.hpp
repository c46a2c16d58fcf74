#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmfit/candidate.hpp"
#include "mmfit/evolution.hpp"
#include "mmfit/problem.hpp"

namespace mmfit {

enum class Method { shade, lshade, nm };
enum class StopOn { evals, time };
enum class InitMode { seed_centered, uniform };

// Everything a run needs besides the problem itself. Serialized with
// snake_case keys matching the field names below.
struct CalibrationOptions {
  Method method = Method::shade;
  std::int64_t max_fun_evals = 0;      // 0 = auto: 1000 per free parameter
  double max_calibration_time = 0.0;   // seconds; 0 = no time cap
  StopOn stop_on = StopOn::evals;
  std::size_t num_results = 200;       // result-set size; also the initial population size
  bool refine_best = true;
  double refine_prob = 0.0;
  double engine_fraction = 0.75;       // share of the budget spent before refinement
  InitMode init_mode = InitMode::seed_centered;
  std::uint64_t seed = 1;

  void validate() const;
};

ordered_json options_to_json(const CalibrationOptions& options);
CalibrationOptions options_from_json(const ordered_json& doc);
CalibrationOptions load_options(const std::string& path);

// Report metrics attached to each returned solution. NaN marks a metric that
// could not be computed (serialized as null).
struct SolutionMetrics {
  double mre_value = std::numeric_limits<double>::quiet_NaN();
  double smse_value = std::numeric_limits<double>::quiet_NaN();
};

// The result of one calibration run: solutions sorted best-first, their
// losses and report metrics, plus enough metadata (problem, options, seed)
// to reproduce or continue the run.
struct SolutionSet {
  std::vector<std::string> par_names;   // free-parameter names
  std::vector<Candidate> solutions;     // sorted by (loss, params); finite losses only
  std::vector<SolutionMetrics> metrics; // parallel to solutions
  ordered_json problem_json;
  CalibrationOptions options;           // effective options of the producing run
  std::uint64_t seed = 0;

  std::size_t set_size() const { return solutions.size(); }
  const Candidate& best() const { return solutions.front(); }
  Problem problem() const { return problem_from_json(problem_json); }
};

enum class StopReason { none, evals_exhausted, time_exhausted };

// Pure stopping rule: the configured criterion governs, but whichever other
// cap is set still acts as a hard secondary limit.
StopReason check_stopping(std::int64_t evals_used, double elapsed_seconds,
                          const CalibrationOptions& effective_options);

struct CalibrateHooks {
  TraceSink trace;                          // per-generation engine stats
  std::function<double()> elapsed_seconds;  // injectable clock (tests); default: wall clock
};

// Runs the configured engine under the budget/time caps, applies the
// refinement policy with whatever budget remains, and assembles the solution
// set. method = nm skips the population engine entirely and returns a
// single-solution set.
SolutionSet calibrate(const Problem& problem, const CalibrationOptions& options,
                      const ExecContext& exec = {}, const CalibrateHooks& hooks = {});

// Which prior solutions seed a follow-up run.
struct Selection {
  bool best_only = true;
  std::vector<std::size_t> indices;  // used when best_only is false
};

// Re-launches calibration seeded from selected prior solutions. The new
// problem may fix parameters or narrow bounds, but must keep the same full
// parameter list; selected solutions that violate the new bounds or filter
// are reported (all of them) instead of silently dropped.
SolutionSet continue_calibration(const SolutionSet& prior, const Selection& selection,
                                 const Problem& new_problem,
                                 const CalibrationOptions& new_options,
                                 const ExecContext& exec = {}, const CalibrateHooks& hooks = {});

ordered_json solution_set_to_json(const SolutionSet& s);
SolutionSet solution_set_from_json(const ordered_json& doc);
void save_solution_set(const SolutionSet& s, const std::string& path);
SolutionSet load_solution_set(const std::string& path);

}  // namespace mmfit
