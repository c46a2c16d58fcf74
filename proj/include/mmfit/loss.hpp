#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "mmfit/dataset.hpp"
#include "mmfit/model.hpp"
#include "mmfit/parameter_space.hpp"

namespace mmfit {

inline constexpr double kInfLoss = std::numeric_limits<double>::infinity();

// Mean relative error. With w_i the total weight and d_i the plain mean of
// dataset i, and n' the number of datasets with w_i > 0:
//   MRE = (1/n') sum_i sum_j (w_ij / w_i) * |p_ij - d_ij| / |d_i|
// Zero-total-weight datasets are skipped entirely. A skipped-or-not dataset
// with d_i == 0 that does participate raises LossError (the relative scale
// is undefined). Range: [0, inf).
double mre(const DatasetCollection& data, const Predictions& predictions);

// Symmetric mean squared error, with p_i the plain mean prediction:
//   SMSE = (1/n') sum_i sum_j (w_ij / w_i) * (p_ij - d_ij)^2 / (p_i^2 + d_i^2)
// Participating datasets with p_i == d_i == 0 raise LossError.
double smse(const DatasetCollection& data, const Predictions& predictions);

// The loss actually minimized: the symmetric squared error without the 1/n'
// factor and without the per-dataset weight normalization,
//   sum_i sum_j w_ij * (p_ij - d_ij)^2 / (d_i^2 + p_i^2)
// so dataset influence scales directly with its total weight.
double primary_loss(const DatasetCollection& data, const Predictions& predictions);

// Shared, thread-safe evaluation budget. Acquisition is a single CAS loop:
// the count never exceeds the limit no matter how many threads race on it.
class EvalCounter {
 public:
  explicit EvalCounter(std::int64_t limit) : limit_(limit) {}

  std::int64_t limit() const { return limit_; }
  std::int64_t count() const { return count_.load(std::memory_order_relaxed); }
  std::int64_t remaining() const { return limit_ - count(); }

  // Reserves one evaluation; false when the budget is already spent.
  bool try_acquire() {
    std::int64_t cur = count_.load(std::memory_order_relaxed);
    while (cur < limit_) {
      if (count_.compare_exchange_weak(cur, cur + 1, std::memory_order_relaxed)) return true;
    }
    return false;
  }

 private:
  std::atomic<std::int64_t> count_{0};
  std::int64_t limit_;
};

// One budget-charged evaluation. Filter rejections and failures carry an
// infinite loss; predictions are kept so callers can reuse them for
// reporting without re-running the model.
struct EvalOutcome {
  double loss = kInfLoss;
  PredictStatus status = PredictStatus::failed;
  Predictions predictions;
};

// Model + data + space bundled behind a budget. feasible_free() is the free
// pre-check; evaluate() charges the counter for every model run (successful
// or failed) but never for filter rejections, and throws BudgetExhausted when
// the counter is already full.
class Objective {
 public:
  Objective(std::shared_ptr<const PredictionModel> model, const ParameterSpace& space,
            const DatasetCollection& data)
      : model_(std::move(model)), space_(&space), data_(&data) {}

  const ParameterSpace& space() const { return *space_; }
  const DatasetCollection& data() const { return *data_; }
  const PredictionModel& model() const { return *model_; }

  bool feasible_free(const std::vector<double>& free_values) const {
    return model_->feasible(space_->assemble_full_vector(free_values));
  }

  EvalOutcome evaluate(EvalCounter& counter, const std::vector<double>& free_values) const;

  // Runs the model without touching any counter. For callers (the engines)
  // that reserve budget up front in a serial section and fan the actual model
  // runs out to worker threads.
  EvalOutcome evaluate_prepaid(const std::vector<double>& free_values) const;

 private:
  std::shared_ptr<const PredictionModel> model_;
  const ParameterSpace* space_;
  const DatasetCollection* data_;
};

}  // namespace mmfit
