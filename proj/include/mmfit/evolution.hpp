#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mmfit/candidate.hpp"
#include "mmfit/loss.hpp"
#include "mmfit/parameter_space.hpp"
#include "mmfit/rng.hpp"

namespace mmfit {

// Success-history memory for the adaptive control parameters. Each slot k
// holds a running location for crossover rate (m_cr) and mutation scale
// (m_f); slots are rewritten cyclically from the successes of a generation.
struct SuccessHistory {
  std::vector<double> m_cr;
  std::vector<double> m_f;
  std::size_t k = 0;  // next slot to rewrite

  explicit SuccessHistory(std::size_t len, double cr_init = 0.9, double f_init = 0.5)
      : m_cr(len, cr_init), m_f(len, f_init) {}
};

// Draws one (CR, F) pair from the history: CR ~ Normal(m_cr[r], 0.1) clipped
// to [0,1]; F ~ Cauchy(m_f[r], 0.1), redrawn while F <= 0, clipped to 1.
// Non-positive or non-finite memory locations fall back to the neutral 0.5.
std::pair<double, double> sample_parameters(const SuccessHistory& history, Rng& rng);

// Pool of replaced parents used to widen the difference vectors. Pushing
// into a full pool evicts a uniformly random member first.
struct ExternalArchive {
  std::vector<std::vector<double>> members;
  std::size_t capacity = 0;

  void push(std::vector<double> parent, Rng& rng);
  void set_capacity(std::size_t cap, Rng& rng);  // evicts randomly while above cap
};

// Donor for member i:
//   v = x_i + F (x_pbest - x_i) + F (x_r1 - x_r2)
// with x_pbest uniform over the ceil(p_best * N) lowest-loss members, r1 a
// population index != i, and r2 drawn from population + archive, distinct
// from both i and r1. Out-of-bounds coordinates are repaired toward the
// parent (midpoint rule in ParameterSpace::reflect_into_bounds).
std::vector<double> mutate_current_to_pbest(const std::vector<Candidate>& population,
                                            const std::vector<std::size_t>& order_by_loss,
                                            const ExternalArchive& archive, std::size_t i,
                                            double f, double p_best,
                                            const ParameterSpace& space, Rng& rng);

// Convenience overload that sorts internally; fine for tests and small N.
std::vector<double> mutate_current_to_pbest(const std::vector<Candidate>& population,
                                            const ExternalArchive& archive, std::size_t i,
                                            double f, double p_best,
                                            const ParameterSpace& space, Rng& rng);

// Binomial crossover with one forced donor coordinate (j_rand), so the trial
// never collapses back onto the parent.
std::vector<double> crossover_binomial(const std::vector<double>& parent,
                                       const std::vector<double>& donor, double cr, Rng& rng);

// Population size schedule for the linear-reduction variant: interpolates
// from n_init down to n_min across the evaluation budget, rounding half to
// even.
std::size_t lshade_population_size(std::int64_t evals_used, std::int64_t max_evals,
                                   std::size_t n_init, std::size_t n_min);

struct EngineConfig {
  std::size_t n_init = 200;       // initial population size (= result set size)
  std::size_t n_min = 5;          // floor for the linear-reduction variant
  std::size_t history_len = 100;  // success-history slots
  double cr_init = 0.9;           // initial memory location for CR
  double f_init = 0.5;            // initial memory location for F
  double p_best = 0.11;           // fraction of the population eligible as pbest
  bool linear_pop_reduction = false;
};

struct ExecContext {
  unsigned threads = 1;  // evaluation fan-out; results are identical for any value
};

struct GenerationStats {
  std::size_t generation = 0;
  std::int64_t evals_used = 0;  // engine evaluations consumed so far
  std::size_t pop_size = 0;
  double best_loss = kInfLoss;
  double mean_loss = kInfLoss;   // over finite-loss members
  std::vector<double> m_cr, m_f;  // history snapshots
};

using TraceSink = std::function<void(const GenerationStats&)>;

// Success-history adaptive differential evolution with optional linear
// population-size reduction. The engine is deterministic for a fixed rng
// stream: trials and control parameters are drawn serially, the set of
// trials to evaluate is decided serially, and only the (pure) evaluations
// fan out to threads.
class ShadeEngine {
 public:
  ShadeEngine(const Objective& objective, EngineConfig config, Rng& rng);

  // Builds and evaluates the initial population. seed_vectors (clipped into
  // bounds) occupy the first slots; the rest is sampled uniformly in the box.
  void initialize(EvalCounter& counter, std::int64_t engine_budget,
                  const std::vector<std::vector<double>>& seed_vectors,
                  const ExecContext& exec);

  // Runs one generation; returns false once the engine budget is spent.
  bool run_generation(EvalCounter& counter, const ExecContext& exec,
                      const TraceSink& trace = {});

  const std::vector<Candidate>& population() const { return population_; }
  const SuccessHistory& history() const { return history_; }
  const ExternalArchive& external_archive() const { return archive_; }
  std::int64_t evals_used() const { return evals_used_; }
  std::int64_t engine_budget() const { return engine_budget_; }
  std::size_t generation() const { return generation_; }

  GenerationStats stats() const;

 private:
  // Charges both the engine budget and the shared counter; serial callers only.
  bool acquire_eval(EvalCounter& counter);
  void evaluate_batch(std::vector<std::size_t> todo,
                      const std::vector<std::vector<double>>& points,
                      std::vector<EvalOutcome>& outcomes, const ExecContext& exec);
  void shrink_population(Rng& rng);

  const Objective* objective_;
  EngineConfig config_;
  Rng* rng_;
  std::vector<Candidate> population_;
  SuccessHistory history_;
  ExternalArchive archive_;
  std::int64_t engine_budget_ = 0;
  std::int64_t evals_used_ = 0;
  std::size_t generation_ = 0;
};

}  // namespace mmfit
