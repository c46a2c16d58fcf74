#include "mmfit/dataset.hpp"

#include <cmath>
#include <set>

#include "mmfit/errors.hpp"

namespace mmfit {

namespace {

std::vector<double> default_weights(std::size_t n) {
  return std::vector<double>(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
}

}  // namespace

Dataset Dataset::zero_variate(std::string id, std::vector<double> d, std::vector<double> w) {
  Dataset out;
  out.id = std::move(id);
  out.kind = DatasetKind::zero_variate;
  out.d = std::move(d);
  out.w = w.empty() ? default_weights(out.d.size()) : std::move(w);
  out.validate();
  return out;
}

Dataset Dataset::uni_variate(std::string id, std::vector<double> x, std::vector<double> d,
                             std::vector<double> w) {
  Dataset out;
  out.id = std::move(id);
  out.kind = DatasetKind::uni_variate;
  out.x = std::move(x);
  out.d = std::move(d);
  out.w = w.empty() ? default_weights(out.d.size()) : std::move(w);
  out.validate();
  return out;
}

double Dataset::weight_total() const {
  double s = 0.0;
  for (double wi : w) s += wi;
  return s;
}

double Dataset::data_mean() const {
  double s = 0.0;
  for (double di : d) s += di;
  return d.empty() ? 0.0 : s / static_cast<double>(d.size());
}

void Dataset::validate() const {
  if (id.empty()) throw InputError("dataset: empty id");
  if (d.empty()) throw InputError("dataset '" + id + "': no observations");
  if (w.size() != d.size()) {
    throw InputError("dataset '" + id + "': weight count differs from observation count");
  }
  for (double v : d) {
    if (!std::isfinite(v)) throw InputError("dataset '" + id + "': non-finite observation");
  }
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InputError("dataset '" + id + "': weights must be finite and >= 0");
    }
  }
  if (kind == DatasetKind::uni_variate) {
    if (x.size() != d.size()) {
      throw InputError("dataset '" + id + "': x count differs from observation count");
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!std::isfinite(x[j])) throw InputError("dataset '" + id + "': non-finite x value");
      if (j > 0 && !(x[j] > x[j - 1])) {
        throw InputError("dataset '" + id + "': x values must be strictly increasing");
      }
    }
  } else if (!x.empty()) {
    throw InputError("dataset '" + id + "': zero-variate set must not carry x values");
  }
}

DatasetCollection::DatasetCollection(std::vector<Dataset> datasets)
    : datasets_(std::move(datasets)) {
  if (datasets_.empty()) throw InputError("dataset collection: no datasets");
  std::set<std::string> seen;
  bool any_positive = false;
  for (const Dataset& ds : datasets_) {
    ds.validate();
    if (!seen.insert(ds.id).second) {
      throw InputError("dataset collection: duplicate dataset id '" + ds.id + "'");
    }
    if (ds.weight_total() > 0.0) any_positive = true;
  }
  if (!any_positive) {
    throw InputError("dataset collection: every dataset has zero total weight");
  }
}

const Dataset* DatasetCollection::find(const std::string& id) const {
  for (const Dataset& ds : datasets_) {
    if (ds.id == id) return &ds;
  }
  return nullptr;
}

}  // namespace mmfit
