#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "mmfit/builtin_models.hpp"
#include "mmfit/errors.hpp"
#include "mmfit/orchestrator.hpp"

using namespace mmfit;

namespace {

CalibrationOptions small_run(Method m = Method::shade) {
  CalibrationOptions o;
  o.method = m;
  o.num_results = 8;
  o.max_fun_evals = 600;
  o.seed = 42;
  return o;
}

std::string tmp_path(const std::string& name) { return "/tmp/mmfit_test_" + name; }

}  // namespace

TEST_CASE("option validation catches each bad field") {
  CalibrationOptions o;
  o.max_fun_evals = -1;
  CHECK_THROWS_WITH_AS(o.validate(), "options: max_fun_evals must be >= 0", InputError);

  o = CalibrationOptions{};
  o.max_calibration_time = -2.0;
  CHECK_THROWS_WITH_AS(o.validate(), "options: max_calibration_time must be a finite value >= 0",
                       InputError);

  o = CalibrationOptions{};
  o.stop_on = StopOn::time;
  CHECK_THROWS_WITH_AS(o.validate(), "options: stop_on=time requires max_calibration_time > 0",
                       InputError);

  o = CalibrationOptions{};
  o.num_results = 3;
  CHECK_THROWS_WITH_AS(o.validate(), "options: num_results must be at least 4", InputError);

  o = CalibrationOptions{};
  o.refine_prob = 1.5;
  CHECK_THROWS_WITH_AS(o.validate(), "options: refine_prob must lie in [0, 1]", InputError);

  o = CalibrationOptions{};
  o.engine_fraction = 0.0;
  CHECK_THROWS_WITH_AS(o.validate(), "options: engine_fraction must lie in (0, 1]", InputError);

  CHECK_NOTHROW(CalibrationOptions{}.validate());
}

TEST_CASE("options serialize losslessly and tolerate missing fields") {
  CalibrationOptions o;
  o.method = Method::lshade;
  o.max_fun_evals = 12345;
  o.refine_prob = 0.25;
  o.init_mode = InitMode::uniform;
  o.seed = 987654321;

  const ordered_json doc = options_to_json(o);
  const CalibrationOptions back = options_from_json(doc);
  CHECK(options_to_json(back).dump() == doc.dump());

  // a sparse document keeps the defaults for everything absent
  const CalibrationOptions sparse = options_from_json(ordered_json{{"seed", 7}});
  CHECK(sparse.seed == 7);
  CHECK(sparse.method == Method::shade);
  CHECK(sparse.num_results == 200);
  CHECK(sparse.engine_fraction == 0.75);

  CHECK_THROWS_WITH_AS(options_from_json(ordered_json{{"foo", 1}}),
                       "options.foo: unknown field", SchemaError);
  CHECK_THROWS_WITH_AS(options_from_json(ordered_json{{"method", "annealing"}}),
                       "options.method: expected 'shade', 'lshade' or 'nm'", SchemaError);
  CHECK_THROWS_WITH_AS(options_from_json(ordered_json{{"stop_on", "never"}}),
                       "options.stop_on: expected 'evals' or 'time'", SchemaError);
  CHECK_THROWS_WITH_AS(options_from_json(ordered_json{{"init_mode", "warm"}}),
                       "options.init_mode: expected 'seed_centered' or 'uniform'", SchemaError);
  CHECK_THROWS_WITH_AS(options_from_json(ordered_json{{"seed", -3}}),
                       "options.seed: must be non-negative", SchemaError);
  // invalid values arrive as schema errors too
  CHECK_THROWS_WITH_AS(options_from_json(ordered_json{{"num_results", 2}}),
                       "options: num_results must be at least 4", SchemaError);
}

TEST_CASE("stopping rule prefers the configured criterion") {
  CalibrationOptions o;
  o.max_fun_evals = 100;
  o.max_calibration_time = 10.0;

  CHECK(check_stopping(50, 5.0, o) == StopReason::none);
  CHECK(check_stopping(100, 5.0, o) == StopReason::evals_exhausted);
  CHECK(check_stopping(50, 10.0, o) == StopReason::time_exhausted);  // secondary cap
  CHECK(check_stopping(100, 10.0, o) == StopReason::evals_exhausted);

  o.stop_on = StopOn::time;
  CHECK(check_stopping(100, 10.0, o) == StopReason::time_exhausted);
  CHECK(check_stopping(100, 5.0, o) == StopReason::evals_exhausted);

  o = CalibrationOptions{};
  o.max_fun_evals = 0;  // no caps configured at all
  CHECK(check_stopping(1000000, 1e9, o) == StopReason::none);
}

TEST_CASE("local-search method returns a single polished solution") {
  const Problem problem = make_builtin_problem("toy_growth");
  CalibrationOptions o = small_run(Method::nm);
  o.max_fun_evals = 2000;

  const SolutionSet s = calibrate(problem, o);
  CHECK(s.set_size() == 1);
  CHECK(s.par_names == problem.space.free_names());
  CHECK(std::isfinite(s.best().loss));
  CHECK(std::isfinite(s.metrics[0].mre_value));
  CHECK(std::isfinite(s.metrics[0].smse_value));
  CHECK(s.seed == 42);
}

TEST_CASE("identical configurations produce byte-identical result documents") {
  const Problem problem = make_builtin_problem("toy_growth");
  const CalibrationOptions o = small_run();

  const std::string a = solution_set_to_json(calibrate(problem, o)).dump(2);
  const std::string b = solution_set_to_json(calibrate(problem, o)).dump(2);
  CHECK(a == b);

  // thread fan-out must not leak into results
  const std::string c = solution_set_to_json(calibrate(problem, o, ExecContext{4})).dump(2);
  CHECK(a == c);

  // a different seed genuinely changes the run
  CalibrationOptions other = o;
  other.seed = 43;
  CHECK(solution_set_to_json(calibrate(problem, other)).dump(2) != a);
}

TEST_CASE("solutions come back sorted with matching metrics") {
  const Problem problem = make_builtin_problem("toy_growth");
  const SolutionSet s = calibrate(problem, small_run());
  REQUIRE(s.set_size() == 8);
  for (std::size_t i = 1; i < s.set_size(); ++i) {
    CHECK(s.solutions[i - 1].loss <= s.solutions[i].loss);
  }
  for (std::size_t i = 0; i < s.set_size(); ++i) {
    CHECK(std::isfinite(s.solutions[i].loss));
    CHECK(problem.space.in_bounds(s.solutions[i].free_params));
    CHECK(s.metrics[i].mre_value ==
          doctest::Approx(mre(problem.data, s.solutions[i].predictions)).epsilon(1e-15));
  }
}

namespace {

// Counts actual model runs, to pin the evaluation budget from the outside.
struct CountingModel : PredictionModel {
  std::shared_ptr<std::atomic<long>> runs = std::make_shared<std::atomic<long>>(0);
  std::shared_ptr<const PredictionModel> inner;

  explicit CountingModel(std::shared_ptr<const PredictionModel> m) : inner(std::move(m)) {}
  std::string id() const override { return inner->id(); }
  bool feasible(const std::vector<double>& full) const override { return inner->feasible(full); }
  PredictResult predict(const std::vector<double>& full,
                        const DatasetCollection& data) const override {
    runs->fetch_add(1);
    return inner->predict(full, data);
  }
};

}  // namespace

TEST_CASE("the evaluation budget is a hard cap for every method") {
  const Problem base = make_builtin_problem("toy_growth");
  Rng pick(2718);
  for (int rep = 0; rep < 10; ++rep) {
    auto counting = std::make_shared<CountingModel>(base.model);
    Problem problem{base.space, base.data, counting, base.model_json, base.initial_full};

    CalibrationOptions o;
    o.method = rep % 3 == 0 ? Method::nm : (rep % 3 == 1 ? Method::shade : Method::lshade);
    o.num_results = 4 + pick.index(20);
    o.max_fun_evals = 100 + static_cast<std::int64_t>(pick.index(900));
    o.engine_fraction = 0.2 + 0.8 * pick.uniform01();
    o.refine_prob = pick.uniform01();
    o.seed = pick.next_u64();

    calibrate(problem, o);
    CHECK(counting->runs->load() <= o.max_fun_evals);
  }
}

TEST_CASE("a zero budget setting resolves to a per-parameter default") {
  const Problem problem = make_builtin_problem("toy_growth");  // four free parameters
  CalibrationOptions o = small_run();
  o.max_fun_evals = 0;
  const SolutionSet s = calibrate(problem, o);
  CHECK(s.options.max_fun_evals == 4000);
}

TEST_CASE("an injected clock can stop the run on time") {
  // himmelblau: every point evaluates to a finite loss, so the whole initial
  // population survives into the result set
  const Problem problem = make_builtin_problem("himmelblau");
  CalibrationOptions o = small_run();
  o.stop_on = StopOn::time;
  o.max_calibration_time = 5.0;
  o.max_fun_evals = 100000;

  CalibrateHooks hooks;
  hooks.elapsed_seconds = [] { return 99.0; };  // already over before the first generation
  const SolutionSet s = calibrate(problem, o, ExecContext{}, hooks);
  CHECK(s.set_size() == 8);  // the evaluated initial population, nothing more
}

TEST_CASE("the per-generation trace reports monotone progress") {
  const Problem problem = make_builtin_problem("toy_growth");
  CalibrationOptions o = small_run();
  o.max_fun_evals = 800;

  std::vector<GenerationStats> seen;
  CalibrateHooks hooks;
  hooks.trace = [&](const GenerationStats& g) { seen.push_back(g); };
  calibrate(problem, o, ExecContext{}, hooks);

  REQUIRE(!seen.empty());
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i].generation == i + 1);
    CHECK(seen[i].pop_size == 8);
    if (i > 0) {
      CHECK(seen[i].best_loss <= seen[i - 1].best_loss);
      CHECK(seen[i].evals_used > seen[i - 1].evals_used);
    }
  }
  CHECK(seen.back().evals_used <= 600);  // engine share: 0.75 * 800
}

TEST_CASE("continuing a run can only improve on its best solution") {
  const Problem problem = make_builtin_problem("toy_growth");
  const SolutionSet first = calibrate(problem, small_run());

  CalibrationOptions next = small_run();
  next.seed = 77;
  const SolutionSet second = continue_calibration(first, Selection{}, problem, next);
  CHECK(second.best().loss <= first.best().loss);

  // explicit multi-solution selection works too
  Selection some;
  some.best_only = false;
  some.indices = {0, 2, 3};
  const SolutionSet third = continue_calibration(first, some, problem, next);
  CHECK(third.best().loss <= first.best().loss);
}

TEST_CASE("continuation validates the selection and the new problem") {
  const Problem problem = make_builtin_problem("toy_growth");
  const SolutionSet prior = calibrate(problem, small_run());

  CHECK_THROWS_WITH_AS(
      continue_calibration(SolutionSet{}, Selection{}, problem, small_run()),
      "continue: prior solution set is empty", InputError);

  Selection empty_sel;
  empty_sel.best_only = false;
  CHECK_THROWS_WITH_AS(continue_calibration(prior, empty_sel, problem, small_run()),
                       "continue: empty selection", InputError);

  Selection oob;
  oob.best_only = false;
  oob.indices = {99};
  CHECK_THROWS_AS(continue_calibration(prior, oob, problem, small_run()), InputError);

  // different full parameter list is rejected outright
  const Problem other = make_builtin_problem("himmelblau");
  CHECK_THROWS_WITH_AS(continue_calibration(prior, Selection{}, other, small_run()),
                       "continue: new problem must keep the same full parameter list",
                       InputError);
}

TEST_CASE("narrowed bounds report every infeasible selected solution") {
  const Problem problem = make_builtin_problem("toy_growth");
  const SolutionSet prior = calibrate(problem, small_run());

  // squeeze the first free parameter into a box the solutions cannot be in
  std::vector<double> lower = problem.space.lower();
  std::vector<double> upper = problem.space.upper();
  const std::size_t first_free = problem.space.free_indices()[0];
  lower[first_free] = upper[first_free] - 1e-9;
  ParameterSpace narrow(problem.space.names(), lower, upper, problem.space.free_mask(),
                        problem.space.fixed_values());
  std::vector<double> initial = problem.initial_full;
  initial[first_free] = upper[first_free];
  const Problem squeezed{narrow, problem.data, problem.model, problem.model_json, initial};

  try {
    continue_calibration(prior, Selection{}, squeezed, small_run());
    FAIL_CHECK("expected infeasible-selection error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("selected solutions infeasible under the new problem") != std::string::npos);
    CHECK(msg.find("0 (out of bounds)") != std::string::npos);
  }
}

TEST_CASE("continuation can fix a parameter at the prior optimum") {
  const Problem problem = make_builtin_problem("toy_growth");
  const SolutionSet prior = calibrate(problem, small_run());

  // pin the first free parameter to the prior best value
  const std::size_t pin = problem.space.free_indices()[0];
  std::vector<bool> mask = problem.space.free_mask();
  mask[pin] = false;
  const std::vector<double> best_full =
      problem.space.assemble_full_vector(prior.best().free_params);
  std::vector<double> fixed = problem.space.fixed_values();
  fixed[pin] = best_full[pin];
  ParameterSpace pinned(problem.space.names(), problem.space.lower(), problem.space.upper(),
                        mask, fixed);
  const Problem reduced{pinned, problem.data, problem.model, problem.model_json, best_full};

  const SolutionSet s = continue_calibration(prior, Selection{}, reduced, small_run());
  CHECK(s.par_names == pinned.free_names());
  CHECK(s.par_names.size() == problem.space.dim() - 1);
  for (const Candidate& c : s.solutions) CHECK(c.free_params.size() == pinned.dim());
}

TEST_CASE("saving and reloading a solution set is byte-stable") {
  const Problem problem = make_builtin_problem("toy_growth");
  const SolutionSet s = calibrate(problem, small_run());

  const std::string p1 = tmp_path("roundtrip_a.json");
  const std::string p2 = tmp_path("roundtrip_b.json");
  save_solution_set(s, p1);
  const SolutionSet loaded = load_solution_set(p1);
  save_solution_set(loaded, p2);

  std::ifstream f1(p1), f2(p2);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(!b1.empty());
  std::remove(p1.c_str());
  std::remove(p2.c_str());

  CHECK_THROWS_AS(load_solution_set("/tmp/definitely_missing_mmfit.json"), InputError);
}

TEST_CASE("corrupted solution documents name the offending field") {
  const Problem problem = make_builtin_problem("toy_growth");
  const ordered_json good = solution_set_to_json(calibrate(problem, small_run()));

  auto expect = [&](ordered_json doc, const char* fragment) {
    try {
      solution_set_from_json(doc);
      FAIL_CHECK("expected schema error mentioning: " << fragment);
    } catch (const SchemaError& e) {
      const std::string msg = e.what();
      CHECK_MESSAGE(msg.find(fragment) != std::string::npos,
                    "message '" << msg << "' lacks '" << fragment << "'");
    }
  };

  ordered_json d = good;
  d.erase("schema_version");
  expect(d, "solution_set.schema_version: missing field");

  d = good;
  d["schema_version"] = "9";
  expect(d, "unsupported version '9'");

  d = good;
  d["set_size"] = 3;
  expect(d, "solution_set.solutions_set: expected an array of set_size entries");

  d = good;
  d["fun_values"][0] = d["fun_values"][7].get<double>() + 1.0;
  expect(d, "fun_values not sorted ascending");

  d = good;
  d["solutions_set"][2][1] = 1e300;
  expect(d, "solution_set.solutions_set[2]: outside the problem bounds");

  d = good;
  d["par_names"][0] = "zzz";
  expect(d, "solution_set.par_names: does not match the problem's free parameters");

  d = good;
  d["best_mre"] = 123.0;
  expect(d, "solution_set.best_mre: does not match mre_values[0]");

  d = good;
  d["results"]["solutions"][1].erase(d["par_names"][0].get<std::string>());
  expect(d, ": missing field");
}
