#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmfit/dataset.hpp"
#include "mmfit/parameter_space.hpp"

namespace mmfit {

// One prediction vector per dataset, in collection order, sized to match.
using Predictions = std::vector<std::vector<double>>;

enum class PredictStatus {
  ok,
  filter_rejected,  // failed the feasibility pre-check; the model never ran
  failed,           // the model ran but could not produce usable predictions
};

struct PredictResult {
  PredictStatus status = PredictStatus::failed;
  Predictions values;  // populated only when status == ok
  std::string detail;  // human-readable reason for non-ok outcomes
};

// A parameter -> predictions mapping. Implementations must be pure (no
// internal state mutated by predict) and safe to call from several threads.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;

  virtual std::string id() const = 0;

  // Cheap feasibility pre-check on the full parameter vector. Infeasible
  // vectors are reported as filter_rejected without running predict.
  virtual bool feasible(const std::vector<double>& full_params) const {
    (void)full_params;
    return true;
  }

  // Predictions for every dataset in the collection. Runtime trouble should
  // be reported via PredictResult (status failed), not by throwing.
  virtual PredictResult predict(const std::vector<double>& full_params,
                                const DatasetCollection& data) const = 0;
};

// Assembles the full vector from free coordinates, applies the feasibility
// pre-check, runs the model, and validates the output: one vector per
// dataset, sized n_i, all values finite. Shape or finiteness violations are
// downgraded to a failed result rather than propagated.
PredictResult predict(const PredictionModel& model,
                      const ParameterSpace& space,
                      const std::vector<double>& free_values,
                      const DatasetCollection& data);

}  // namespace mmfit
