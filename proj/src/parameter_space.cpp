#include "mmfit/parameter_space.hpp"

#include <cmath>
#include <set>

#include "mmfit/errors.hpp"

namespace mmfit {

ParameterSpace::ParameterSpace(std::vector<std::string> names,
                               std::vector<double> lower,
                               std::vector<double> upper,
                               std::vector<bool> free_mask,
                               std::vector<double> fixed_values)
    : names_(std::move(names)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      free_mask_(std::move(free_mask)),
      fixed_values_(std::move(fixed_values)) {
  const std::size_t n = names_.size();
  if (n == 0) throw InputError("parameter space: empty parameter list");
  if (lower_.size() != n || upper_.size() != n || free_mask_.size() != n ||
      fixed_values_.size() != n) {
    throw InputError("parameter space: names/lower/upper/free/fixed lengths differ");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (names_[i].empty()) throw InputError("parameter space: empty parameter name");
    if (!seen.insert(names_[i]).second) {
      throw InputError("parameter space: duplicate parameter name '" + names_[i] + "'");
    }
    if (free_mask_[i]) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
        throw InputError("parameter space: need finite lower < upper for free parameter '" +
                         names_[i] + "'");
      }
      free_idx_.push_back(i);
    } else if (!std::isfinite(fixed_values_[i])) {
      throw InputError("parameter space: non-finite fixed value for parameter '" + names_[i] +
                       "'");
    }
  }
  if (free_idx_.empty()) throw InputError("parameter space: no free parameters");
}

std::vector<std::string> ParameterSpace::free_names() const {
  std::vector<std::string> out;
  out.reserve(free_idx_.size());
  for (std::size_t i : free_idx_) out.push_back(names_[i]);
  return out;
}

std::vector<double> ParameterSpace::assemble_full_vector(
    const std::vector<double>& free_values) const {
  if (free_values.size() != dim()) {
    throw InputError("assemble_full_vector: expected " + std::to_string(dim()) +
                     " free values, got " + std::to_string(free_values.size()));
  }
  std::vector<double> full = fixed_values_;
  for (std::size_t k = 0; k < free_idx_.size(); ++k) full[free_idx_[k]] = free_values[k];
  return full;
}

std::vector<double> ParameterSpace::extract_free(const std::vector<double>& full_values) const {
  if (full_values.size() != full_size()) {
    throw InputError("extract_free: expected " + std::to_string(full_size()) +
                     " values, got " + std::to_string(full_values.size()));
  }
  std::vector<double> out;
  out.reserve(dim());
  for (std::size_t i : free_idx_) out.push_back(full_values[i]);
  return out;
}

bool ParameterSpace::in_bounds(const std::vector<double>& free_values) const {
  if (free_values.size() != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double v = free_values[k];
    if (!(v >= free_lower(k)) || !(v <= free_upper(k))) return false;
  }
  return true;
}

std::vector<double> ParameterSpace::reflect_into_bounds(
    std::vector<double> trial, const std::vector<double>& parent) const {
  for (std::size_t k = 0; k < dim(); ++k) {
    const double lo = free_lower(k), hi = free_upper(k);
    if (trial[k] < lo) {
      trial[k] = 0.5 * (lo + parent[k]);
    } else if (trial[k] > hi) {
      trial[k] = 0.5 * (hi + parent[k]);
    }
    // NaN (e.g. from a degenerate donor) fails both comparisons above; pin it
    // to the parent so the trial stays usable.
    if (std::isnan(trial[k])) trial[k] = parent[k];
  }
  return trial;
}

std::vector<double> ParameterSpace::clip_to_bounds(std::vector<double> free_values) const {
  for (std::size_t k = 0; k < dim(); ++k) {
    const double lo = free_lower(k), hi = free_upper(k);
    if (!(free_values[k] >= lo)) free_values[k] = lo;  // also catches NaN
    if (free_values[k] > hi) free_values[k] = hi;
  }
  return free_values;
}

std::vector<double> ParameterSpace::normalize(const std::vector<double>& free_values) const {
  std::vector<double> out(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    out[k] = (free_values[k] - free_lower(k)) / (free_upper(k) - free_lower(k));
  }
  return out;
}

}  // namespace mmfit
