#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfit/dataset.hpp"
#include "mmfit/model.hpp"
#include "mmfit/parameter_space.hpp"

namespace mmfit {

using ordered_json = nlohmann::ordered_json;

// A complete calibration problem: search space, observed data, the model
// that maps parameters to predictions, and an initial full parameter vector
// (the user's first guess, also the center of seeded initialization).
struct Problem {
  ParameterSpace space;
  DatasetCollection data;
  std::shared_ptr<const PredictionModel> model;
  ordered_json model_json;  // {"id": ..., "constants": {...}}, kept for re-serialization
  std::vector<double> initial_full;

  std::vector<double> initial_free() const { return space.extract_free(initial_full); }
};

// Model factories keyed by id, so problems loaded from disk can name their
// model. The built-in models are pre-registered; tests may add their own.
void register_model(const std::string& id,
                    std::function<std::shared_ptr<const PredictionModel>(const ordered_json&
                                                                             constants)>
                        factory);
std::shared_ptr<const PredictionModel> make_model(const std::string& id,
                                                  const ordered_json& constants);

ordered_json problem_to_json(const Problem& problem);
Problem problem_from_json(const ordered_json& doc);

// Reads a problem document from a JSON file. Also accepts the spelled-out
// built-in names via resolve_problem below.
Problem load_problem(const std::string& path);

// "builtin:<name>" -> generated fixture problem; anything else -> file path.
Problem resolve_problem(const std::string& spec);

// Fixture problems with pre-generated synthetic data (fixed internal seed,
// so repeated calls produce identical datasets):
//   toy_growth          growth curve, 1 uni-variate + 1 zero-variate dataset
//   multi_basin_growth  same data, rate enters as s^2 (two mirrored optima)
//   himmelblau          four-minimum surface, single unit observation
Problem make_builtin_problem(const std::string& name);

}  // namespace mmfit
