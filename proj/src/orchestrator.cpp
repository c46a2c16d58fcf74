#include "mmfit/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "mmfit/errors.hpp"
#include "mmfit/nelder_mead.hpp"
#include "mmfit/solution_archive.hpp"

namespace mmfit {

namespace {

const ordered_json& require_field(const ordered_json& obj, const char* key,
                                  const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key + ": missing field");
  return *it;
}

double require_number(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path + ": expected a number");
  return v.get<double>();
}

std::int64_t require_int(const ordered_json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string require_string(const ordered_json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path + ": expected a string");
  return v.get<std::string>();
}

bool require_bool(const ordered_json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path + ": expected a boolean");
  return v.get<bool>();
}

// number-or-null; null maps to the NaN "undefined" marker
double number_or_null(const ordered_json& v, const std::string& path) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return require_number(v, path);
}

}  // namespace

void CalibrationOptions::validate() const {
  if (max_fun_evals < 0) throw InputError("options: max_fun_evals must be >= 0");
  if (!(max_calibration_time >= 0.0) || !std::isfinite(max_calibration_time)) {
    throw InputError("options: max_calibration_time must be a finite value >= 0");
  }
  if (stop_on == StopOn::time && max_calibration_time <= 0.0) {
    throw InputError("options: stop_on=time requires max_calibration_time > 0");
  }
  if (num_results < 4) throw InputError("options: num_results must be at least 4");
  if (!(refine_prob >= 0.0 && refine_prob <= 1.0)) {
    throw InputError("options: refine_prob must lie in [0, 1]");
  }
  if (!(engine_fraction > 0.0 && engine_fraction <= 1.0)) {
    throw InputError("options: engine_fraction must lie in (0, 1]");
  }
}

namespace {

std::string method_name(Method m) {
  switch (m) {
    case Method::shade: return "shade";
    case Method::lshade: return "lshade";
    case Method::nm: return "nm";
  }
  return "shade";
}

Method method_from(const std::string& s, const std::string& path) {
  if (s == "shade") return Method::shade;
  if (s == "lshade") return Method::lshade;
  if (s == "nm") return Method::nm;
  throw SchemaError(path + ": expected 'shade', 'lshade' or 'nm'");
}

}  // namespace

ordered_json options_to_json(const CalibrationOptions& o) {
  ordered_json doc;
  doc["method"] = method_name(o.method);
  doc["max_fun_evals"] = o.max_fun_evals;
  doc["max_calibration_time"] = o.max_calibration_time;
  doc["stop_on"] = o.stop_on == StopOn::time ? "time" : "evals";
  doc["num_results"] = o.num_results;
  doc["refine_best"] = o.refine_best;
  doc["refine_prob"] = o.refine_prob;
  doc["engine_fraction"] = o.engine_fraction;
  doc["init_mode"] = o.init_mode == InitMode::uniform ? "uniform" : "seed_centered";
  doc["seed"] = o.seed;
  return doc;
}

CalibrationOptions options_from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw SchemaError("options: expected an object");
  static const char* known[] = {"method",      "max_fun_evals", "max_calibration_time",
                                "stop_on",     "num_results",   "refine_best",
                                "refine_prob", "engine_fraction", "init_mode", "seed"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw SchemaError("options." + it.key() + ": unknown field");
  }

  CalibrationOptions o;
  if (doc.contains("method")) {
    o.method = method_from(require_string(doc.at("method"), "options.method"), "options.method");
  }
  if (doc.contains("max_fun_evals")) {
    o.max_fun_evals = require_int(doc.at("max_fun_evals"), "options.max_fun_evals");
  }
  if (doc.contains("max_calibration_time")) {
    o.max_calibration_time =
        require_number(doc.at("max_calibration_time"), "options.max_calibration_time");
  }
  if (doc.contains("stop_on")) {
    const std::string s = require_string(doc.at("stop_on"), "options.stop_on");
    if (s == "evals") {
      o.stop_on = StopOn::evals;
    } else if (s == "time") {
      o.stop_on = StopOn::time;
    } else {
      throw SchemaError("options.stop_on: expected 'evals' or 'time'");
    }
  }
  if (doc.contains("num_results")) {
    const std::int64_t n = require_int(doc.at("num_results"), "options.num_results");
    if (n < 0) throw SchemaError("options.num_results: must be non-negative");
    o.num_results = static_cast<std::size_t>(n);
  }
  if (doc.contains("refine_best")) {
    o.refine_best = require_bool(doc.at("refine_best"), "options.refine_best");
  }
  if (doc.contains("refine_prob")) {
    o.refine_prob = require_number(doc.at("refine_prob"), "options.refine_prob");
  }
  if (doc.contains("engine_fraction")) {
    o.engine_fraction = require_number(doc.at("engine_fraction"), "options.engine_fraction");
  }
  if (doc.contains("init_mode")) {
    const std::string s = require_string(doc.at("init_mode"), "options.init_mode");
    if (s == "seed_centered") {
      o.init_mode = InitMode::seed_centered;
    } else if (s == "uniform") {
      o.init_mode = InitMode::uniform;
    } else {
      throw SchemaError("options.init_mode: expected 'seed_centered' or 'uniform'");
    }
  }
  if (doc.contains("seed")) {
    const ordered_json& v = doc.at("seed");
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw SchemaError("options.seed: expected an integer");
    }
    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
      throw SchemaError("options.seed: must be non-negative");
    }
    o.seed = v.get<std::uint64_t>();
  }
  try {
    o.validate();
  } catch (const InputError& e) {
    throw SchemaError(e.what());  // validate() messages already carry the options. prefix
  }
  return o;
}

CalibrationOptions load_options(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open options file '" + path + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("options file '" + path + "': " + e.what());
  }
  return options_from_json(doc);
}

StopReason check_stopping(std::int64_t evals_used, double elapsed_seconds,
                          const CalibrationOptions& o) {
  const bool evals_hit = o.max_fun_evals > 0 && evals_used >= o.max_fun_evals;
  const bool time_hit = o.max_calibration_time > 0.0 && elapsed_seconds >= o.max_calibration_time;
  if (o.stop_on == StopOn::time) {
    if (time_hit) return StopReason::time_exhausted;
    if (evals_hit) return StopReason::evals_exhausted;
  } else {
    if (evals_hit) return StopReason::evals_exhausted;
    if (time_hit) return StopReason::time_exhausted;
  }
  return StopReason::none;
}

namespace {

SolutionSet assemble_solution_set(const SolutionArchive& archive, const Problem& problem,
                                  const CalibrationOptions& effective) {
  SolutionSet out;
  out.par_names = problem.space.free_names();
  out.solutions = archive.members();
  out.metrics.reserve(out.solutions.size());
  for (const Candidate& c : out.solutions) {
    SolutionMetrics m;
    if (!c.predictions.empty()) {
      try {
        m.mre_value = mre(problem.data, c.predictions);
      } catch (const LossError&) {
      }
      try {
        m.smse_value = smse(problem.data, c.predictions);
      } catch (const LossError&) {
      }
    }
    out.metrics.push_back(m);
  }
  out.problem_json = problem_to_json(problem);
  out.options = effective;
  out.seed = effective.seed;
  return out;
}

SolutionSet run_calibration(const Problem& problem, const CalibrationOptions& options_in,
                            const ExecContext& exec, const CalibrateHooks& hooks,
                            const std::vector<std::vector<double>>& seed_vectors) {
  options_in.validate();
  CalibrationOptions options = options_in;
  if (options.max_fun_evals == 0) {
    options.max_fun_evals = 1000 * static_cast<std::int64_t>(problem.space.dim());
  }

  const auto wall_start = std::chrono::steady_clock::now();
  std::function<double()> elapsed = hooks.elapsed_seconds;
  if (!elapsed) {
    elapsed = [wall_start] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();
    };
  }

  EvalCounter counter(options.max_fun_evals);
  Objective objective(problem.model, problem.space, problem.data);
  Rng rng(options.seed);
  SolutionArchive archive(options.num_results, problem.space);

  auto should_stop = [&] {
    return check_stopping(counter.count(), elapsed(), options) != StopReason::none;
  };
  BoundedEval bounded = [&](const std::vector<double>& v) -> std::optional<EvalOutcome> {
    if (!objective.feasible_free(v)) {
      EvalOutcome out;
      out.status = PredictStatus::filter_rejected;
      return out;
    }
    if (!counter.try_acquire()) return std::nullopt;
    return objective.evaluate_prepaid(v);
  };

  if (options.method == Method::nm) {
    Candidate start;
    start.free_params = problem.space.clip_to_bounds(
        seed_vectors.empty() ? problem.initial_free() : seed_vectors.front());
    if (std::optional<EvalOutcome> r = bounded(start.free_params)) {
      start.loss = r->loss;
      start.predictions = std::move(r->predictions);
    }
    NmResult res = nm_with_continuation(start, bounded, problem.space, 1e-6, 500, should_stop);
    archive.merge({res.best});
  } else {
    EngineConfig cfg;
    cfg.n_init = options.num_results;
    cfg.n_min = std::min<std::size_t>(5, cfg.n_init);
    cfg.linear_pop_reduction = options.method == Method::lshade;
    const auto engine_budget = static_cast<std::int64_t>(
        std::llround(options.engine_fraction * static_cast<double>(options.max_fun_evals)));

    ShadeEngine engine(objective, cfg, rng);
    engine.initialize(counter, engine_budget, seed_vectors, exec);
    // The result archive is folded forward every generation, so basins the
    // working population visits and later abandons keep a representative,
    // and the L-SHADE population can shrink below num_results without
    // shrinking the returned set.
    archive.merge(engine.population());
    while (!should_stop()) {
      const bool more = engine.run_generation(counter, exec, hooks.trace);
      archive.merge(engine.population());
      if (!more) break;
    }
  }

  RefinePolicy policy{options.refine_best, options.refine_prob};
  apply_refinement(archive, policy, bounded, problem.space, rng, should_stop);

  return assemble_solution_set(archive, problem, options);
}

}  // namespace

SolutionSet calibrate(const Problem& problem, const CalibrationOptions& options,
                      const ExecContext& exec, const CalibrateHooks& hooks) {
  std::vector<std::vector<double>> seeds;
  if (options.init_mode == InitMode::seed_centered) seeds.push_back(problem.initial_free());
  return run_calibration(problem, options, exec, hooks, seeds);
}

SolutionSet continue_calibration(const SolutionSet& prior, const Selection& selection,
                                 const Problem& new_problem,
                                 const CalibrationOptions& new_options,
                                 const ExecContext& exec, const CalibrateHooks& hooks) {
  if (prior.set_size() == 0) throw InputError("continue: prior solution set is empty");

  const Problem prior_problem = prior.problem();
  if (new_problem.space.names() != prior_problem.space.names()) {
    throw InputError("continue: new problem must keep the same full parameter list");
  }

  std::vector<std::size_t> picked;
  if (selection.best_only) {
    picked.push_back(0);
  } else {
    if (selection.indices.empty()) throw InputError("continue: empty selection");
    for (std::size_t idx : selection.indices) {
      if (idx >= prior.set_size()) {
        throw InputError("continue: selection index " + std::to_string(idx) +
                         " out of range (set has " + std::to_string(prior.set_size()) +
                         " solutions)");
      }
      picked.push_back(idx);
    }
  }

  // Selected solutions must survive in the new space: free coordinates inside
  // the (possibly narrowed) bounds and the assembled vector past the filter.
  std::vector<std::vector<double>> seeds;
  std::string offenders;
  for (std::size_t idx : picked) {
    const std::vector<double> full =
        prior_problem.space.assemble_full_vector(prior.solutions[idx].free_params);
    std::vector<double> free_values = new_problem.space.extract_free(full);
    if (!new_problem.space.in_bounds(free_values)) {
      offenders += (offenders.empty() ? "" : ", ") + std::to_string(idx) + " (out of bounds)";
      continue;
    }
    if (!new_problem.model->feasible(new_problem.space.assemble_full_vector(free_values))) {
      offenders += (offenders.empty() ? "" : ", ") + std::to_string(idx) + " (filter-rejected)";
      continue;
    }
    seeds.push_back(std::move(free_values));
  }
  if (!offenders.empty()) {
    throw InputError("continue: selected solutions infeasible under the new problem: " +
                     offenders);
  }

  return run_calibration(new_problem, new_options, exec, hooks, seeds);
}

ordered_json solution_set_to_json(const SolutionSet& s) {
  const Problem problem = s.problem();

  ordered_json doc;
  doc["schema_version"] = "1";
  doc["set_size"] = s.set_size();
  doc["par_names"] = s.par_names;

  ordered_json vectors = ordered_json::array();
  for (const Candidate& c : s.solutions) vectors.push_back(c.free_params);
  doc["solutions_set"] = std::move(vectors);

  ordered_json losses = ordered_json::array();
  for (const Candidate& c : s.solutions) losses.push_back(c.loss);
  doc["fun_values"] = std::move(losses);

  ordered_json mres = ordered_json::array(), smses = ordered_json::array();
  for (const SolutionMetrics& m : s.metrics) {
    mres.push_back(m.mre_value);    // NaN serializes as null
    smses.push_back(m.smse_value);
  }
  doc["mre_values"] = std::move(mres);
  doc["smse_values"] = std::move(smses);
  doc["best_mre"] = s.metrics.empty() ? ordered_json() : ordered_json(s.metrics[0].mre_value);
  doc["best_smse"] = s.metrics.empty() ? ordered_json() : ordered_json(s.metrics[0].smse_value);

  ordered_json results;
  results["model_id"] = s.problem_json.at("model").at("id");
  results["seed"] = s.seed;
  results["options"] = options_to_json(s.options);
  results["problem"] = s.problem_json;
  ordered_json records = ordered_json::array();
  for (const Candidate& c : s.solutions) {
    const std::vector<double> full = problem.space.assemble_full_vector(c.free_params);
    ordered_json rec;
    for (std::size_t i = 0; i < problem.space.full_size(); ++i) {
      rec[problem.space.names()[i]] = full[i];
    }
    records.push_back(std::move(rec));
  }
  results["solutions"] = std::move(records);
  doc["results"] = std::move(results);
  return doc;
}

SolutionSet solution_set_from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw SchemaError("solution_set: expected an object");
  const std::string version = require_string(
      require_field(doc, "schema_version", "solution_set"), "solution_set.schema_version");
  if (version != "1") {
    throw SchemaError("solution_set.schema_version: unsupported version '" + version + "'");
  }

  const ordered_json& results = require_field(doc, "results", "solution_set");
  SolutionSet out;
  out.problem_json = require_field(results, "problem", "solution_set.results");
  const Problem problem = [&]() -> Problem {
    try {
      return problem_from_json(out.problem_json);
    } catch (const SchemaError& e) {
      throw SchemaError(std::string("solution_set.results.") + e.what());
    }
  }();
  try {
    out.options =
        options_from_json(require_field(results, "options", "solution_set.results"));
  } catch (const SchemaError& e) {
    throw SchemaError(std::string("solution_set.results.") + e.what());
  }

  const std::string model_id = require_string(
      require_field(results, "model_id", "solution_set.results"),
      "solution_set.results.model_id");
  if (model_id != out.problem_json.at("model").at("id").get<std::string>()) {
    throw SchemaError("solution_set.results.model_id: does not match the problem's model");
  }
  const ordered_json& seed_v = require_field(results, "seed", "solution_set.results");
  if (!seed_v.is_number_unsigned() && !seed_v.is_number_integer()) {
    throw SchemaError("solution_set.results.seed: expected an integer");
  }
  out.seed = seed_v.get<std::uint64_t>();

  const std::int64_t declared =
      require_int(require_field(doc, "set_size", "solution_set"), "solution_set.set_size");
  if (declared < 0) throw SchemaError("solution_set.set_size: must be non-negative");
  const auto n = static_cast<std::size_t>(declared);

  const ordered_json& names_v = require_field(doc, "par_names", "solution_set");
  if (!names_v.is_array()) throw SchemaError("solution_set.par_names: expected an array");
  std::vector<std::string> par_names;
  for (std::size_t i = 0; i < names_v.size(); ++i) {
    par_names.push_back(
        require_string(names_v[i], "solution_set.par_names[" + std::to_string(i) + "]"));
  }
  if (par_names != problem.space.free_names()) {
    throw SchemaError("solution_set.par_names: does not match the problem's free parameters");
  }
  out.par_names = std::move(par_names);

  const ordered_json& vectors = require_field(doc, "solutions_set", "solution_set");
  if (!vectors.is_array() || vectors.size() != n) {
    throw SchemaError("solution_set.solutions_set: expected an array of set_size entries");
  }
  const ordered_json& losses = require_field(doc, "fun_values", "solution_set");
  if (!losses.is_array() || losses.size() != n) {
    throw SchemaError("solution_set.fun_values: expected an array of set_size entries");
  }
  const ordered_json& mres = require_field(doc, "mre_values", "solution_set");
  if (!mres.is_array() || mres.size() != n) {
    throw SchemaError("solution_set.mre_values: expected an array of set_size entries");
  }
  const ordered_json& smses = require_field(doc, "smse_values", "solution_set");
  if (!smses.is_array() || smses.size() != n) {
    throw SchemaError("solution_set.smse_values: expected an array of set_size entries");
  }

  const std::size_t dim = problem.space.dim();
  double prev_loss = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string vpath = "solution_set.solutions_set[" + std::to_string(i) + "]";
    const ordered_json& vec = vectors[i];
    if (!vec.is_array() || vec.size() != dim) {
      throw SchemaError(vpath + ": expected " + std::to_string(dim) + " values");
    }
    Candidate c;
    c.free_params.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const double value = require_number(vec[k], vpath + "[" + std::to_string(k) + "]");
      if (!std::isfinite(value)) {
        throw SchemaError(vpath + "[" + std::to_string(k) + "]: non-finite value");
      }
      c.free_params.push_back(value);
    }
    if (!problem.space.in_bounds(c.free_params)) {
      throw SchemaError(vpath + ": outside the problem bounds");
    }
    if (!problem.model->feasible(problem.space.assemble_full_vector(c.free_params))) {
      throw SchemaError(vpath + ": rejected by the feasibility filter");
    }

    const std::string lpath = "solution_set.fun_values[" + std::to_string(i) + "]";
    c.loss = require_number(losses[i], lpath);
    if (!std::isfinite(c.loss)) throw SchemaError(lpath + ": non-finite value");
    if (c.loss < prev_loss) throw SchemaError(lpath + ": fun_values not sorted ascending");
    prev_loss = c.loss;

    SolutionMetrics m;
    m.mre_value = number_or_null(mres[i], "solution_set.mre_values[" + std::to_string(i) + "]");
    m.smse_value =
        number_or_null(smses[i], "solution_set.smse_values[" + std::to_string(i) + "]");
    out.solutions.push_back(std::move(c));
    out.metrics.push_back(m);
  }

  const double best_mre = number_or_null(require_field(doc, "best_mre", "solution_set"),
                                         "solution_set.best_mre");
  const double best_smse = number_or_null(require_field(doc, "best_smse", "solution_set"),
                                          "solution_set.best_smse");
  auto same = [](double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
  };
  if (n > 0) {
    if (!same(best_mre, out.metrics[0].mre_value)) {
      throw SchemaError("solution_set.best_mre: does not match mre_values[0]");
    }
    if (!same(best_smse, out.metrics[0].smse_value)) {
      throw SchemaError("solution_set.best_smse: does not match smse_values[0]");
    }
  }

  const ordered_json& records = require_field(results, "solutions", "solution_set.results");
  if (!records.is_array() || records.size() != n) {
    throw SchemaError("solution_set.results.solutions: expected an array of set_size entries");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string rpath = "solution_set.results.solutions[" + std::to_string(i) + "]";
    const ordered_json& rec = records[i];
    if (!rec.is_object()) throw SchemaError(rpath + ": expected an object");
    const std::vector<double> full =
        problem.space.assemble_full_vector(out.solutions[i].free_params);
    for (std::size_t p = 0; p < problem.space.full_size(); ++p) {
      const std::string& name = problem.space.names()[p];
      auto it = rec.find(name);
      if (it == rec.end()) throw SchemaError(rpath + "." + name + ": missing field");
      if (require_number(*it, rpath + "." + name) != full[p]) {
        throw SchemaError(rpath + "." + name + ": inconsistent with solutions_set");
      }
    }
  }

  return out;
}

void save_solution_set(const SolutionSet& s, const std::string& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw InputError("cannot write solution file '" + path + "'");
  outf << solution_set_to_json(s).dump(2) << "\n";
  if (!outf) throw InputError("failed writing solution file '" + path + "'");
}

SolutionSet load_solution_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open solution file '" + path + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("solution file '" + path + "': " + e.what());
  }
  return solution_set_from_json(doc);
}

}  // namespace mmfit
