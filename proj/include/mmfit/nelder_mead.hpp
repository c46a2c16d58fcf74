#pragma once

#include <functional>
#include <optional>

#include "mmfit/candidate.hpp"
#include "mmfit/parameter_space.hpp"
#include "mmfit/rng.hpp"
#include "mmfit/solution_archive.hpp"

namespace mmfit {

// Budget-aware evaluation callback for the local refiner. Returns the
// outcome of evaluating a free-coordinate vector, or nullopt once the
// evaluation budget is spent (the refiner then stops where it stands).
using BoundedEval = std::function<std::optional<EvalOutcome>(const std::vector<double>&)>;

struct NmResult {
  Candidate best;
  bool budget_exhausted = false;
  int steps = 0;  // simplex iterations actually performed
};

// One bounded Nelder-Mead run of at most max_steps simplex iterations using
// the standard coefficients (reflect 1, expand 2, contract 0.5, shrink 0.5).
// The initial simplex steps each axis by 5% of its bound range (stepping
// inward by 0.00025 of the range when that would leave the box), and every
// proposal is projected back onto the bounds. Worst case one iteration costs
// dim + 2 evaluations (reflect + contract + shrink).
NmResult nm_run(const Candidate& start, const BoundedEval& eval, const ParameterSpace& space,
                int max_steps = 500);

// Restarts nm_run from the incumbent until a run improves the loss by less
// than rel_tol (relative), the budget runs out, or should_stop() fires
// between runs. This is the "keep polishing while it still pays" loop.
NmResult nm_with_continuation(const Candidate& start, const BoundedEval& eval,
                              const ParameterSpace& space, double rel_tol = 1e-6,
                              int max_steps_per_run = 500,
                              const std::function<bool()>& should_stop = {});

struct RefinePolicy {
  bool refine_best = true;
  double refine_prob = 0.0;  // chance for each non-best member
};

// Polishes archive members in place: the best member first (when enabled),
// then each other member selected by an independent Bernoulli(refine_prob)
// draw, in rank order. Refinement is strictly sequential so a fixed rng
// stream yields identical results regardless of thread count.
void apply_refinement(SolutionArchive& archive, const RefinePolicy& policy,
                      const BoundedEval& eval, const ParameterSpace& space, Rng& rng,
                      const std::function<bool()>& should_stop = {});

}  // namespace mmfit
