#include "mmfit/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "mmfit/errors.hpp"

namespace mmfit {

std::pair<double, double> sample_parameters(const SuccessHistory& history, Rng& rng) {
  const std::size_t r = rng.index(history.m_cr.size());

  double cr = rng.normal(history.m_cr[r], 0.1);
  cr = std::min(1.0, std::max(0.0, cr));

  // A damaged memory location (non-positive or non-finite) would make the
  // resample loop below spin almost forever; recenter it on the neutral 0.5.
  double mf = history.m_f[r];
  if (!(mf > 0.0) || !std::isfinite(mf)) mf = 0.5;
  double f = rng.cauchy(mf, 0.1);
  while (f <= 0.0) f = rng.cauchy(mf, 0.1);
  if (f > 1.0) f = 1.0;

  return {cr, f};
}

void ExternalArchive::push(std::vector<double> parent, Rng& rng) {
  if (capacity == 0) return;
  if (members.size() < capacity) {
    members.push_back(std::move(parent));
  } else {
    members[rng.index(members.size())] = std::move(parent);  // evict a random one
  }
}

void ExternalArchive::set_capacity(std::size_t cap, Rng& rng) {
  capacity = cap;
  while (members.size() > capacity) {
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(rng.index(members.size())));
  }
}

namespace {

// ceil(p * n) with a guard against FP noise pushing an exact product like
// 0.11 * 200 == 22 up to 23.
std::size_t pbest_count(double p_best, std::size_t n) {
  const double raw = p_best * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(n, std::max<std::size_t>(1, count));
}

}  // namespace

std::vector<double> mutate_current_to_pbest(const std::vector<Candidate>& population,
                                            const std::vector<std::size_t>& order_by_loss,
                                            const ExternalArchive& archive, std::size_t i,
                                            double f, double p_best,
                                            const ParameterSpace& space, Rng& rng) {
  const std::size_t n = population.size();
  if (n < 4) throw InputError("mutation needs a population of at least 4");

  const std::size_t pbest = order_by_loss[rng.index(pbest_count(p_best, n))];

  std::size_t r1 = rng.index(n);
  while (r1 == i) r1 = rng.index(n);

  // r2 ranges over population followed by the archive pool; indices >= n can
  // never collide with i or r1, so the two checks below stay valid.
  const std::size_t pool = n + archive.members.size();
  std::size_t r2 = rng.index(pool);
  while (r2 == i || r2 == r1) r2 = rng.index(pool);

  const std::vector<double>& xi = population[i].free_params;
  const std::vector<double>& xp = population[pbest].free_params;
  const std::vector<double>& x1 = population[r1].free_params;
  const std::vector<double>& x2 =
      r2 < n ? population[r2].free_params : archive.members[r2 - n];

  std::vector<double> donor(xi.size());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    donor[k] = xi[k] + f * (xp[k] - xi[k]) + f * (x1[k] - x2[k]);
  }
  return space.reflect_into_bounds(std::move(donor), xi);
}

std::vector<double> mutate_current_to_pbest(const std::vector<Candidate>& population,
                                            const ExternalArchive& archive, std::size_t i,
                                            double f, double p_best,
                                            const ParameterSpace& space, Rng& rng) {
  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidate_less(population[a], population[b]);
  });
  return mutate_current_to_pbest(population, order, archive, i, f, p_best, space, rng);
}

std::vector<double> crossover_binomial(const std::vector<double>& parent,
                                       const std::vector<double>& donor, double cr, Rng& rng) {
  const std::size_t d = parent.size();
  const std::size_t j_rand = rng.index(d);
  std::vector<double> trial(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double u = rng.uniform01();  // always drawn: one draw per coordinate
    trial[k] = (u < cr || k == j_rand) ? donor[k] : parent[k];
  }
  return trial;
}

std::size_t lshade_population_size(std::int64_t evals_used, std::int64_t max_evals,
                                   std::size_t n_init, std::size_t n_min) {
  if (max_evals <= 0) return n_init;
  double frac = static_cast<double>(evals_used) / static_cast<double>(max_evals);
  frac = std::min(1.0, std::max(0.0, frac));
  const double raw = static_cast<double>(n_init) +
                     (static_cast<double>(n_min) - static_cast<double>(n_init)) * frac;
  // nearbyint under the default rounding mode rounds halves to even
  const auto target = static_cast<std::size_t>(std::nearbyint(raw));
  return std::min(n_init, std::max(n_min, target));
}

ShadeEngine::ShadeEngine(const Objective& objective, EngineConfig config, Rng& rng)
    : objective_(&objective),
      config_(config),
      rng_(&rng),
      history_(config.history_len, config.cr_init, config.f_init) {
  if (config_.n_init < 4) throw InputError("engine: n_init must be at least 4");
  if (config_.n_min < 4 || config_.n_min > config_.n_init) {
    throw InputError("engine: need 4 <= n_min <= n_init");
  }
  if (config_.history_len == 0) throw InputError("engine: history_len must be positive");
  if (!(config_.p_best > 0.0) || config_.p_best > 1.0) {
    throw InputError("engine: p_best must lie in (0, 1]");
  }
}

bool ShadeEngine::acquire_eval(EvalCounter& counter) {
  if (evals_used_ >= engine_budget_) return false;
  if (!counter.try_acquire()) return false;
  ++evals_used_;
  return true;
}

void ShadeEngine::evaluate_batch(std::vector<std::size_t> todo,
                                 const std::vector<std::vector<double>>& points,
                                 std::vector<EvalOutcome>& outcomes, const ExecContext& exec) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, exec.threads), todo.size());
  if (workers <= 1) {
    for (std::size_t idx : todo) outcomes[idx] = objective_->evaluate_prepaid(points[idx]);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t j = next.fetch_add(1); j < todo.size(); j = next.fetch_add(1)) {
      outcomes[todo[j]] = objective_->evaluate_prepaid(points[todo[j]]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
}

void ShadeEngine::initialize(EvalCounter& counter, std::int64_t engine_budget,
                             const std::vector<std::vector<double>>& seed_vectors,
                             const ExecContext& exec) {
  const ParameterSpace& space = objective_->space();
  const std::size_t n = config_.n_init;
  const std::size_t d = space.dim();

  engine_budget_ = engine_budget;
  evals_used_ = 0;
  generation_ = 0;

  // Seeds first (clipped into the box), the rest uniform. All sampling is
  // serial so the population is a pure function of the rng stream.
  std::vector<std::vector<double>> points(n);
  std::size_t filled = 0;
  for (const std::vector<double>& seed : seed_vectors) {
    if (filled >= n) break;
    if (seed.size() != d) throw InputError("engine: seed vector has wrong dimension");
    points[filled++] = space.clip_to_bounds(seed);
  }
  for (; filled < n; ++filled) {
    std::vector<double> v(d);
    for (std::size_t k = 0; k < d; ++k) {
      v[k] = rng_->uniform(space.free_lower(k), space.free_upper(k));
    }
    points[filled] = std::move(v);
  }

  std::vector<EvalOutcome> outcomes(n);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    if (!objective_->feasible_free(points[i])) {
      outcomes[i].status = PredictStatus::filter_rejected;  // stays at +inf, free
    } else if (acquire_eval(counter)) {
      todo.push_back(i);
    }
    // else: budget ran dry; the member stays unevaluated at +inf
  }
  evaluate_batch(std::move(todo), points, outcomes, exec);

  population_.clear();
  population_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    population_.push_back(Candidate{std::move(points[i]), outcomes[i].loss,
                                    std::move(outcomes[i].predictions)});
  }
  archive_.members.clear();
  archive_.capacity = n;
}

bool ShadeEngine::run_generation(EvalCounter& counter, const ExecContext& exec,
                                 const TraceSink& trace) {
  if (population_.empty()) throw InputError("engine: run_generation before initialize");
  if (evals_used_ >= engine_budget_) return false;

  const ParameterSpace& space = objective_->space();
  const std::size_t n = population_.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidate_less(population_[a], population_[b]);
  });

  // Plan every trial serially: control parameters, donor, crossover.
  std::vector<std::vector<double>> trials(n);
  std::vector<double> crs(n), fs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [cr, f] = sample_parameters(history_, *rng_);
    crs[i] = cr;
    fs[i] = f;
    std::vector<double> donor = mutate_current_to_pbest(population_, order, archive_, i, f,
                                                        config_.p_best, space, *rng_);
    trials[i] = crossover_binomial(population_[i].free_params, donor, cr, *rng_);
  }

  // Decide serially which trials get evaluated, then fan out the model runs.
  enum class Slot { rejected, scheduled, skipped };
  std::vector<Slot> slot(n, Slot::skipped);
  std::vector<EvalOutcome> outcomes(n);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    if (!objective_->feasible_free(trials[i])) {
      slot[i] = Slot::rejected;
      outcomes[i].status = PredictStatus::filter_rejected;
    } else if (acquire_eval(counter)) {
      slot[i] = Slot::scheduled;
      todo.push_back(i);
    }
  }
  evaluate_batch(std::move(todo), trials, outcomes, exec);

  // Serial replacement pass. Ties (<=) still replace, which lets the
  // population traverse plateaus; only strict improvements count as
  // successes and feed the adaptive memories / archive.
  std::vector<double> s_cr, s_f, s_dw;
  for (std::size_t i = 0; i < n; ++i) {
    if (slot[i] == Slot::skipped) continue;  // never evaluated: parent stays
    const double trial_loss = outcomes[i].loss;
    const double parent_loss = population_[i].loss;
    if (!(trial_loss <= parent_loss)) continue;
    if (trial_loss < parent_loss) {
      s_cr.push_back(crs[i]);
      s_f.push_back(fs[i]);
      // Improvement magnitude drives the memory weights; cap the jump from
      // an unevaluated (+inf) parent so the weights stay finite.
      double dw = parent_loss - trial_loss;
      if (!std::isfinite(dw)) dw = 1e300;
      s_dw.push_back(dw);
      archive_.push(population_[i].free_params, *rng_);
    }
    population_[i] =
        Candidate{std::move(trials[i]), trial_loss, std::move(outcomes[i].predictions)};
  }

  if (!s_dw.empty()) {
    double wsum = 0.0;
    for (double w : s_dw) wsum += w;
    double cr_acc = 0.0, f_num = 0.0, f_den = 0.0;
    for (std::size_t s = 0; s < s_dw.size(); ++s) {
      const double w = s_dw[s] / wsum;
      cr_acc += w * s_cr[s];
      f_num += w * s_f[s] * s_f[s];
      f_den += w * s_f[s];
    }
    history_.m_cr[history_.k] = cr_acc;
    history_.m_f[history_.k] = f_num / f_den;  // Lehmer mean favours large F
    history_.k = (history_.k + 1) % history_.m_cr.size();
  }
  // Generations without a single success leave the memories untouched.

  if (config_.linear_pop_reduction) shrink_population(*rng_);

  ++generation_;
  if (trace) trace(stats());
  return evals_used_ < engine_budget_;
}

void ShadeEngine::shrink_population(Rng& rng) {
  const std::size_t target =
      lshade_population_size(evals_used_, engine_budget_, config_.n_init, config_.n_min);
  if (target >= population_.size()) return;

  const std::size_t n = population_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidate_less(population_[a], population_[b]);
  });

  // Drop the worst members; survivors keep their relative order. The dropped
  // vectors stay around in the eviction pool as mutation material.
  std::vector<bool> drop(n, false);
  for (std::size_t r = target; r < n; ++r) drop[order[r]] = true;

  std::vector<Candidate> kept;
  kept.reserve(target);
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) {
      archive_.push(std::move(population_[i].free_params), rng);
    } else {
      kept.push_back(std::move(population_[i]));
    }
  }
  population_ = std::move(kept);
  archive_.set_capacity(target, rng);
}

GenerationStats ShadeEngine::stats() const {
  GenerationStats st;
  st.generation = generation_;
  st.evals_used = evals_used_;
  st.pop_size = population_.size();
  double sum = 0.0;
  std::size_t finite = 0;
  const Candidate* best = nullptr;
  for (const Candidate& c : population_) {
    if (best == nullptr || candidate_less(c, *best)) best = &c;
    if (std::isfinite(c.loss)) {
      sum += c.loss;
      ++finite;
    }
  }
  if (best != nullptr) st.best_loss = best->loss;
  if (finite > 0) st.mean_loss = sum / static_cast<double>(finite);
  st.m_cr = history_.m_cr;
  st.m_f = history_.m_f;
  return st;
}

}  // namespace mmfit
