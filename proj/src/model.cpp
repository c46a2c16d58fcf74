#include "mmfit/model.hpp"

#include <cmath>

namespace mmfit {

PredictResult predict(const PredictionModel& model,
                      const ParameterSpace& space,
                      const std::vector<double>& free_values,
                      const DatasetCollection& data) {
  const std::vector<double> full = space.assemble_full_vector(free_values);
  if (!model.feasible(full)) {
    PredictResult out;
    out.status = PredictStatus::filter_rejected;
    out.detail = "rejected by feasibility filter";
    return out;
  }
  PredictResult out = model.predict(full, data);
  if (out.status != PredictStatus::ok) {
    if (out.status == PredictStatus::filter_rejected) {
      // Models must do feasibility checking via feasible(); anything that
      // goes wrong inside predict counts as a failed evaluation.
      out.status = PredictStatus::failed;
    }
    return out;
  }
  if (out.values.size() != data.size()) {
    out = PredictResult{};
    out.detail = "model returned wrong number of prediction vectors";
    return out;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (out.values[i].size() != data.at(i).size()) {
      std::string id = data.at(i).id;
      out = PredictResult{};
      out.detail = "prediction length mismatch for dataset '" + id + "'";
      return out;
    }
    for (double v : out.values[i]) {
      if (!std::isfinite(v)) {
        std::string id = data.at(i).id;
        out = PredictResult{};
        out.detail = "non-finite prediction in dataset '" + id + "'";
        return out;
      }
    }
  }
  return out;
}

}  // namespace mmfit
