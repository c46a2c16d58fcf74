#include "mmfit/loss.hpp"

#include <cmath>
#include <string>

#include "mmfit/errors.hpp"

namespace mmfit {

namespace {

void check_shapes(const DatasetCollection& data, const Predictions& predictions) {
  if (predictions.size() != data.size()) {
    throw InputError("loss: prediction blocks (" + std::to_string(predictions.size()) +
                     ") do not match datasets (" + std::to_string(data.size()) + ")");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predictions[i].size() != data.at(i).size()) {
      throw InputError("loss: prediction length mismatch for dataset '" + data.at(i).id + "'");
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mre(const DatasetCollection& data, const Predictions& predictions) {
  check_shapes(data, predictions);
  double total = 0.0;
  std::size_t included = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Dataset& ds = data.at(i);
    const double w_total = ds.weight_total();
    if (w_total <= 0.0) continue;
    const double d_mean = ds.data_mean();
    if (d_mean == 0.0) {
      throw LossError(ds.id, "mre undefined: dataset '" + ds.id + "' has zero mean");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      acc += (ds.w[j] / w_total) * std::abs(predictions[i][j] - ds.d[j]);
    }
    total += acc / std::abs(d_mean);
    ++included;
  }
  return total / static_cast<double>(included);
}

double smse(const DatasetCollection& data, const Predictions& predictions) {
  check_shapes(data, predictions);
  double total = 0.0;
  std::size_t included = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Dataset& ds = data.at(i);
    const double w_total = ds.weight_total();
    if (w_total <= 0.0) continue;
    const double d_mean = ds.data_mean();
    const double p_mean = mean_of(predictions[i]);
    const double den = p_mean * p_mean + d_mean * d_mean;
    if (den == 0.0) {
      throw LossError(ds.id, "smse undefined: dataset '" + ds.id +
                                 "' has zero data mean and zero prediction mean");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      const double diff = predictions[i][j] - ds.d[j];
      acc += (ds.w[j] / w_total) * diff * diff;
    }
    total += acc / den;
    ++included;
  }
  return total / static_cast<double>(included);
}

double primary_loss(const DatasetCollection& data, const Predictions& predictions) {
  check_shapes(data, predictions);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Dataset& ds = data.at(i);
    if (ds.weight_total() <= 0.0) continue;
    const double d_mean = ds.data_mean();
    const double p_mean = mean_of(predictions[i]);
    const double den = d_mean * d_mean + p_mean * p_mean;
    if (den == 0.0) {
      throw LossError(ds.id, "loss undefined: dataset '" + ds.id +
                                 "' has zero data mean and zero prediction mean");
    }
    for (std::size_t j = 0; j < ds.size(); ++j) {
      const double diff = predictions[i][j] - ds.d[j];
      total += ds.w[j] * diff * diff / den;
    }
  }
  return total;
}

EvalOutcome Objective::evaluate(EvalCounter& counter,
                                const std::vector<double>& free_values) const {
  if (counter.count() >= counter.limit()) throw BudgetExhausted();

  if (!feasible_free(free_values)) {
    EvalOutcome out;
    out.status = PredictStatus::filter_rejected;  // costs nothing
    return out;
  }
  if (!counter.try_acquire()) throw BudgetExhausted();
  return evaluate_prepaid(free_values);
}

EvalOutcome Objective::evaluate_prepaid(const std::vector<double>& free_values) const {
  EvalOutcome out;
  PredictResult res = predict(*model_, *space_, free_values, *data_);
  if (res.status != PredictStatus::ok) {
    out.status = res.status;
    return out;
  }
  // Degenerate loss denominators make the candidate unusable; report it like
  // a failed model run instead of aborting the whole calibration.
  try {
    out.loss = primary_loss(*data_, res.values);
  } catch (const LossError&) {
    out.status = PredictStatus::failed;
    return out;
  }
  if (!std::isfinite(out.loss)) {
    out.status = PredictStatus::failed;
    out.loss = kInfLoss;
    return out;
  }
  out.status = PredictStatus::ok;
  out.predictions = std::move(res.values);
  return out;
}

}  // namespace mmfit
