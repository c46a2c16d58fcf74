#include <doctest.h>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "mmfit/errors.hpp"
#include "mmfit/nelder_mead.hpp"
#include "mmfit/rng.hpp"

using namespace mmfit;

namespace {

using Fn = std::function<double(const std::vector<double>&)>;

// Budget-limited evaluation callback over a plain function; counts calls and
// optionally records the probed points.
struct Meter {
  Fn f;
  long budget = 1000000;
  long used = 0;
  std::vector<std::vector<double>>* trace = nullptr;

  BoundedEval eval() {
    return [this](const std::vector<double>& x) -> std::optional<EvalOutcome> {
      if (used >= budget) return std::nullopt;
      ++used;
      if (trace) trace->push_back(x);
      EvalOutcome out;
      out.loss = f(x);
      out.status = PredictStatus::ok;
      return out;
    };
  }
};

double sum_sq(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(const std::vector<double>& x) {
  const double a = x[1] - x[0] * x[0];
  const double b = 1.0 - x[0];
  return 100.0 * a * a + b * b;
}

ParameterSpace box(std::size_t d, double lo, double hi) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < d; ++k) names.push_back("p" + std::to_string(k));
  return ParameterSpace(names, std::vector<double>(d, lo), std::vector<double>(d, hi),
                        std::vector<bool>(d, true), std::vector<double>(d, 0.0));
}

}  // namespace

TEST_CASE("continuation drives a quadratic to the optimum in 2 to 5 dimensions") {
  for (std::size_t d = 2; d <= 5; ++d) {
    const ParameterSpace space = box(d, -10.0, 10.0);
    Meter m{sum_sq};
    const Candidate start{std::vector<double>(d, 1.0), sum_sq(std::vector<double>(d, 1.0)), {}};
    const NmResult r = nm_with_continuation(start, m.eval(), space);
    CHECK(r.best.loss <= 1e-10);
    CHECK_FALSE(r.budget_exhausted);
    CHECK(space.in_bounds(r.best.free_params));
  }
}

TEST_CASE("the banana valley is followed to its end") {
  const ParameterSpace space = box(2, -5.0, 5.0);
  Meter m{rosenbrock};
  m.budget = 20000;
  const Candidate start{{-1.2, 1.0}, rosenbrock({-1.2, 1.0}), {}};
  const NmResult r = nm_with_continuation(start, m.eval(), space);
  CHECK(r.best.loss < 1e-6);
  CHECK(r.best.free_params[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.best.free_params[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("refinement never makes a point worse") {
  const ParameterSpace space = box(3, -8.0, 8.0);
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.uniform(-8.0, 8.0);
    const Candidate start{x, sum_sq(x), {}};

    Meter m{sum_sq};
    m.budget = 40 + static_cast<long>(rng.index(200));  // tight, often mid-run
    const NmResult r = nm_run(start, m.eval(), space, 100);
    CHECK(r.best.loss <= start.loss);
    CHECK(space.in_bounds(r.best.free_params));
  }
}

TEST_CASE("zero steps means zero evaluations and an untouched start") {
  const ParameterSpace space = box(2, -1.0, 1.0);
  Meter m{sum_sq};
  const Candidate start{{0.3, -0.4}, 0.25, {}};
  const NmResult r = nm_run(start, m.eval(), space, 0);
  CHECK(r.best.free_params == start.free_params);
  CHECK(r.best.loss == 0.25);
  CHECK(r.steps == 0);
  CHECK_FALSE(r.budget_exhausted);
  CHECK(m.used == 0);
}

TEST_CASE("start vector must fit the space") {
  const ParameterSpace space = box(2, -1.0, 1.0);
  Meter m{sum_sq};
  CHECK_THROWS_WITH_AS(nm_run(Candidate{{0.0}, 0.0, {}}, m.eval(), space),
                       "refine: start has wrong dimension", InputError);
  CHECK_THROWS_WITH_AS(nm_run(Candidate{{2.0, 0.0}, 4.0, {}}, m.eval(), space),
                       "refine: start is out of bounds", InputError);
  CHECK_THROWS_WITH_AS(
      nm_with_continuation(Candidate{{0.0, 0.0}, 0.0, {}}, m.eval(), space, 1e-6, 0),
      "refine: max_steps_per_run must be >= 1", InputError);
}

TEST_CASE("initial simplex steps 5% of the range, or inward off an edge") {
  const ParameterSpace space(
      {"a", "b"}, {0.0, -2.0}, {10.0, 2.0}, {true, true}, {0.0, 0.0});

  std::vector<std::vector<double>> probes;
  Meter interior{sum_sq};
  interior.trace = &probes;
  nm_run(Candidate{{3.0, 0.0}, sum_sq({3.0, 0.0}), {}}, interior.eval(), space, 1);
  REQUIRE(probes.size() >= 2);
  CHECK(probes[0] == std::vector<double>{3.5, 0.0});  // +5% of range 10
  CHECK(probes[1] == std::vector<double>{3.0, 0.2});  // +5% of range 4

  probes.clear();
  Meter edge{sum_sq};
  edge.trace = &probes;
  nm_run(Candidate{{10.0, -2.0}, sum_sq({10.0, -2.0}), {}}, edge.eval(), space, 1);
  REQUIRE(probes.size() >= 2);
  CHECK(probes[0][0] == doctest::Approx(10.0 - 0.0025).epsilon(1e-15));  // off the top
  CHECK(probes[0][1] == -2.0);
  CHECK(probes[1][0] == 10.0);
  CHECK(probes[1][1] == doctest::Approx(-2.0 + 0.001).epsilon(1e-15));  // off the bottom
}

TEST_CASE("every probe stays inside the box") {
  const ParameterSpace space = box(2, -1.0, 3.0);
  std::vector<std::vector<double>> probes;
  Meter m{[](const std::vector<double>& x) { return sum_sq(x); }};
  m.trace = &probes;
  // start near a corner so reflections would love to leave the box
  const Candidate start{{2.9, -0.95}, sum_sq({2.9, -0.95}), {}};
  nm_with_continuation(start, m.eval(), space);
  for (const std::vector<double>& p : probes) CHECK(space.in_bounds(p));
}

TEST_CASE("budget exhaustion reports itself and still returns the best seen") {
  const ParameterSpace space = box(4, -10.0, 10.0);
  const std::vector<double> x0(4, 7.0);
  const Candidate start{x0, sum_sq(x0), {}};
  Meter m{sum_sq};
  m.budget = 25;  // dies mid-descent
  const NmResult r = nm_run(start, m.eval(), space, 500);
  CHECK(r.budget_exhausted);
  CHECK(r.best.loss <= start.loss);
  CHECK(m.used == 25);
}

namespace {

SolutionArchive seeded_archive(const ParameterSpace& space, Rng& rng, std::size_t n) {
  SolutionArchive archive(n, space);
  std::vector<Candidate> members;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(space.dim());
    for (double& v : x) v = rng.uniform(-7.0, 7.0);
    members.push_back(Candidate{x, sum_sq(x), {}});
  }
  archive.merge(members);
  return archive;
}

}  // namespace

TEST_CASE("policy with refine_prob zero polishes only the best member") {
  const ParameterSpace space = box(3, -8.0, 8.0);
  Rng rng(23);
  SolutionArchive archive = seeded_archive(space, rng, 6);
  const std::vector<Candidate> before = archive.members();

  Meter m{sum_sq};
  apply_refinement(archive, RefinePolicy{true, 0.0}, m.eval(), space, rng);

  CHECK(archive.best().loss < before[0].loss);
  CHECK(archive.best().loss <= 1e-10);
  // the other members are bitwise untouched
  for (std::size_t i = 1; i < before.size(); ++i) {
    bool found = false;
    for (const Candidate& c : archive.members()) {
      if (c.free_params == before[i].free_params && c.loss == before[i].loss) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("policy with refine_prob one polishes the whole set") {
  const ParameterSpace space = box(3, -8.0, 8.0);
  Rng rng(29);
  SolutionArchive archive = seeded_archive(space, rng, 6);

  Meter m{sum_sq};
  apply_refinement(archive, RefinePolicy{true, 1.0}, m.eval(), space, rng);

  const std::vector<Candidate>& after = archive.members();
  for (std::size_t i = 0; i < after.size(); ++i) {
    CHECK(after[i].loss <= 1e-10);  // unimodal: everyone lands at the optimum
    if (i > 0) CHECK(after[i - 1].loss <= after[i].loss);  // still sorted
  }
  CHECK(m.used > 0);
}

TEST_CASE("refinement survives running out of budget halfway") {
  const ParameterSpace space = box(3, -8.0, 8.0);
  Rng rng(31);
  SolutionArchive archive = seeded_archive(space, rng, 8);
  const double worst_before = archive.members().back().loss;

  Meter m{sum_sq};
  m.budget = 120;
  apply_refinement(archive, RefinePolicy{true, 1.0}, m.eval(), space, rng);

  CHECK(m.used == 120);
  const std::vector<Candidate>& after = archive.members();
  for (std::size_t i = 1; i < after.size(); ++i) CHECK(after[i - 1].loss <= after[i].loss);
  CHECK(after.back().loss <= worst_before);

  SolutionArchive empty(4, space);
  apply_refinement(empty, RefinePolicy{true, 1.0}, m.eval(), space, rng);  // no-op
  CHECK(empty.empty());
}
