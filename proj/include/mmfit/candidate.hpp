#pragma once

#include <vector>

#include "mmfit/loss.hpp"
#include "mmfit/model.hpp"

namespace mmfit {

// One evaluated point of the search space: free coordinates, loss, and the
// cached model predictions (empty when the point was never evaluated or was
// rejected). Caching predictions means reporting never re-runs the model.
struct Candidate {
  std::vector<double> free_params;
  double loss = kInfLoss;
  Predictions predictions;
};

// Strict total order: by loss, ties broken lexicographically on the
// parameter vector. Gives every population/archive operation a single
// deterministic notion of "better" even on plateaus.
inline bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  return a.free_params < b.free_params;
}

}  // namespace mmfit
