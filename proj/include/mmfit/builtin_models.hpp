#pragma once

#include <memory>
#include <string>

#include "mmfit/model.hpp"

namespace mmfit {

// Saturating growth curve, the workhorse fixture:
//   W(t) = w_max * (1 - exp(-r * (t - t0)))^b
// Parameters, in order: w_max, r, t0, b. Feasibility requires t0 <= t_min
// (observations before the growth onset would need negative curve bases).
// Zero-variate datasets are predicted as W(zv_age).
class GrowthCurveModel : public PredictionModel {
 public:
  GrowthCurveModel(double zv_age, double t_min) : zv_age_(zv_age), t_min_(t_min) {}

  std::string id() const override { return "toy_growth"; }
  bool feasible(const std::vector<double>& full_params) const override;
  PredictResult predict(const std::vector<double>& full_params,
                        const DatasetCollection& data) const override;

  double zv_age() const { return zv_age_; }
  double t_min() const { return t_min_; }

 protected:
  virtual double rate(const std::vector<double>& full_params) const { return full_params[1]; }

 private:
  double zv_age_;
  double t_min_;
};

// Same curve, but the second parameter s enters through r = s^2, so -s and +s
// produce identical predictions: two mirrored basins of equal depth.
class MultiBasinGrowthModel : public GrowthCurveModel {
 public:
  using GrowthCurveModel::GrowthCurveModel;
  std::string id() const override { return "multi_basin_growth"; }

 protected:
  double rate(const std::vector<double>& full_params) const override {
    return full_params[1] * full_params[1];
  }
};

// Classic four-minimum test surface over (x, y):
//   H(x, y) = (x^2 + y - 11)^2 + (x + y^2 - 7)^2
// Every observation is predicted as 1 + H, so fitting a dataset observed at
// exactly 1 drives the loss to zero precisely at the four minima of H.
class HimmelblauModel : public PredictionModel {
 public:
  std::string id() const override { return "himmelblau"; }
  PredictResult predict(const std::vector<double>& full_params,
                        const DatasetCollection& data) const override;

  static double surface(double x, double y);
};

}  // namespace mmfit
