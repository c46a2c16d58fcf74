#include "mmfit/builtin_models.hpp"

#include <cmath>

namespace mmfit {

namespace {

double growth_curve(double w_max, double r, double t0, double b, double t) {
  const double base = 1.0 - std::exp(-r * (t - t0));
  return w_max * std::pow(base, b);
}

}  // namespace

bool GrowthCurveModel::feasible(const std::vector<double>& full_params) const {
  return full_params[2] <= t_min_;  // growth must start before the first observation
}

PredictResult GrowthCurveModel::predict(const std::vector<double>& full_params,
                                        const DatasetCollection& data) const {
  const double w_max = full_params[0];
  const double r = rate(full_params);
  const double t0 = full_params[2];
  const double b = full_params[3];

  PredictResult out;
  out.values.reserve(data.size());
  for (const Dataset& ds : data) {
    std::vector<double> p(ds.size());
    if (ds.kind == DatasetKind::uni_variate) {
      for (std::size_t j = 0; j < ds.size(); ++j) {
        p[j] = growth_curve(w_max, r, t0, b, ds.x[j]);
      }
    } else {
      const double at_age = growth_curve(w_max, r, t0, b, zv_age_);
      for (std::size_t j = 0; j < ds.size(); ++j) p[j] = at_age;
    }
    out.values.push_back(std::move(p));
  }
  out.status = PredictStatus::ok;
  return out;
}

double HimmelblauModel::surface(double x, double y) {
  const double a = x * x + y - 11.0;
  const double b = x + y * y - 7.0;
  return a * a + b * b;
}

PredictResult HimmelblauModel::predict(const std::vector<double>& full_params,
                                       const DatasetCollection& data) const {
  const double value = 1.0 + surface(full_params[0], full_params[1]);
  PredictResult out;
  out.values.reserve(data.size());
  for (const Dataset& ds : data) {
    out.values.emplace_back(ds.size(), value);
  }
  out.status = PredictStatus::ok;
  return out;
}

}  // namespace mmfit
