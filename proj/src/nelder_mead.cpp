#include "mmfit/nelder_mead.hpp"

#include <algorithm>
#include <cmath>

#include "mmfit/errors.hpp"

namespace mmfit {

namespace {

Candidate best_vertex(const std::vector<Candidate>& v) {
  const Candidate* best = &v.front();
  for (const Candidate& c : v) {
    if (candidate_less(c, *best)) best = &c;
  }
  return *best;
}

}  // namespace

NmResult nm_run(const Candidate& start, const BoundedEval& eval, const ParameterSpace& space,
                int max_steps) {
  const std::size_t d = space.dim();
  if (start.free_params.size() != d) throw InputError("refine: start has wrong dimension");
  if (!space.in_bounds(start.free_params)) throw InputError("refine: start is out of bounds");
  if (max_steps <= 0) return NmResult{start, false, 0};

  std::vector<Candidate> v;
  v.reserve(d + 1);
  v.push_back(start);

  // Evaluates one proposal; false means the budget died and we must bail out
  // with the best vertex seen so far.
  bool exhausted = false;
  auto probe = [&](std::vector<double> x, Candidate& out) {
    std::optional<EvalOutcome> r = eval(x);
    if (!r.has_value()) {
      exhausted = true;
      return false;
    }
    out = Candidate{std::move(x), r->loss, std::move(r->predictions)};
    return true;
  };

  // Initial simplex: one extra vertex per axis, stepping 5% of the bound
  // range (clamped), or a tiny inward step when the incumbent sits exactly on
  // a bound edge.
  for (std::size_t k = 0; k < d; ++k) {
    const double lo = space.free_lower(k), hi = space.free_upper(k);
    const double range = hi - lo;
    std::vector<double> x = start.free_params;
    if (x[k] == hi) {
      x[k] -= 0.00025 * range;
    } else if (x[k] == lo) {
      x[k] += 0.00025 * range;
    } else {
      x[k] += 0.05 * range;
    }
    Candidate c;
    if (!probe(space.clip_to_bounds(std::move(x)), c)) {
      return NmResult{best_vertex(v), true, 0};
    }
    v.push_back(std::move(c));
  }

  // Converged when the vertex losses agree to a tight tolerance AND the
  // vertices have contracted to a sliver of each coordinate's range.
  const double tol_fun_abs = 1e-12;
  const double tol_fun_rel = 1e-10;
  const double tol_x_frac = 1e-7;

  int steps = 0;
  while (steps < max_steps) {
    std::stable_sort(v.begin(), v.end(),
                     [](const Candidate& a, const Candidate& b) { return a.loss < b.loss; });

    bool collapsed = true;
    for (std::size_t j = 1; j <= d && collapsed; ++j) {
      collapsed = v[j].free_params == v[0].free_params;
    }
    if (collapsed) break;  // fully degenerate simplex; more steps change nothing

    const double loss_spread = v[d].loss - v[0].loss;
    if (loss_spread <= std::max(tol_fun_abs, tol_fun_rel * std::abs(v[0].loss))) {
      bool tight = true;
      for (std::size_t k = 0; k < d && tight; ++k) {
        const double span = tol_x_frac * (space.free_upper(k) - space.free_lower(k));
        for (std::size_t j = 1; j <= d && tight; ++j) {
          tight = std::abs(v[j].free_params[k] - v[0].free_params[k]) <= span;
        }
      }
      if (tight) break;
    }

    std::vector<double> centroid(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < d; ++k) centroid[k] += v[j].free_params[k];
    }
    for (std::size_t k = 0; k < d; ++k) centroid[k] /= static_cast<double>(d);
    const Candidate& worst = v[d];

    auto along = [&](double t) {  // centroid + t * (centroid - worst), boxed
      std::vector<double> x(d);
      for (std::size_t k = 0; k < d; ++k) {
        x[k] = centroid[k] + t * (centroid[k] - worst.free_params[k]);
      }
      return space.clip_to_bounds(std::move(x));
    };

    Candidate reflected;
    if (!probe(along(1.0), reflected)) break;

    if (reflected.loss < v[0].loss) {
      Candidate expanded;
      if (!probe(along(2.0), expanded)) {
        v[d] = std::move(reflected);  // keep the improvement we already have
        break;
      }
      v[d] = expanded.loss < reflected.loss ? std::move(expanded) : std::move(reflected);
    } else if (reflected.loss < v[d - 1].loss) {
      v[d] = std::move(reflected);
    } else {
      bool shrink = false;
      if (reflected.loss < worst.loss) {
        Candidate contracted;  // outside
        if (!probe(along(0.5), contracted)) {
          v[d] = std::move(reflected);
          break;
        }
        if (contracted.loss <= reflected.loss) {
          v[d] = std::move(contracted);
        } else {
          shrink = true;
        }
      } else {
        Candidate contracted;  // inside
        if (!probe(along(-0.5), contracted)) break;
        if (contracted.loss < worst.loss) {
          v[d] = std::move(contracted);
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (std::size_t j = 1; j <= d; ++j) {
          std::vector<double> x(d);
          for (std::size_t k = 0; k < d; ++k) {
            x[k] = v[0].free_params[k] + 0.5 * (v[j].free_params[k] - v[0].free_params[k]);
          }
          Candidate c;
          if (!probe(space.clip_to_bounds(std::move(x)), c)) break;
          v[j] = std::move(c);
        }
      }
    }
    ++steps;
    if (exhausted) break;
  }

  return NmResult{best_vertex(v), exhausted, steps};
}

NmResult nm_with_continuation(const Candidate& start, const BoundedEval& eval,
                              const ParameterSpace& space, double rel_tol,
                              int max_steps_per_run, const std::function<bool()>& should_stop) {
  if (max_steps_per_run < 1) throw InputError("refine: max_steps_per_run must be >= 1");

  NmResult out;
  out.best = start;
  while (true) {
    if (should_stop && should_stop()) break;
    const double prev_loss = out.best.loss;
    NmResult run = nm_run(out.best, eval, space, max_steps_per_run);
    out.steps += run.steps;
    out.best = std::move(run.best);
    if (run.budget_exhausted) {
      out.budget_exhausted = true;
      break;
    }
    if (!std::isfinite(prev_loss)) continue;  // escaped an unevaluated start: keep going
    const double improvement = prev_loss - out.best.loss;
    if (improvement <= 0.0) break;
    if (improvement < rel_tol * std::max(std::abs(prev_loss), 1e-300)) break;
  }
  return out;
}

void apply_refinement(SolutionArchive& archive, const RefinePolicy& policy,
                      const BoundedEval& eval, const ParameterSpace& space, Rng& rng,
                      const std::function<bool()>& should_stop) {
  if (archive.empty()) return;

  // Selection draws happen up front, one per non-best member, so the rng
  // stream does not depend on how far the budget lets refinement get.
  std::vector<std::size_t> targets;
  if (policy.refine_best) targets.push_back(0);
  for (std::size_t i = 1; i < archive.size(); ++i) {
    if (rng.bernoulli(policy.refine_prob)) targets.push_back(i);
  }

  for (std::size_t idx : targets) {
    if (should_stop && should_stop()) break;
    NmResult r = nm_with_continuation(archive.members()[idx], eval, space, 1e-6, 500,
                                      should_stop);
    archive.replace_member(idx, std::move(r.best));
    if (r.budget_exhausted) break;
  }
  archive.resort();
}

}  // namespace mmfit
