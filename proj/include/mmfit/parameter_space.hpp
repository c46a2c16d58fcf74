#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mmfit {

// Optional feasibility predicate over the full parameter vector. Must be pure
// and cheap; rejected vectors are never sent to the model and cost no budget.
using FeasibilityFilter = std::function<bool(const std::vector<double>&)>;

// Box-bounded search space over the full model parameter list. A subset of
// the parameters (the free ones) is calibrated; the rest stay pinned at fixed
// values. All search-side operations work on free-coordinate vectors of
// length dim(); the model always receives the assembled full vector.
class ParameterSpace {
 public:
  ParameterSpace(std::vector<std::string> names,
                 std::vector<double> lower,
                 std::vector<double> upper,
                 std::vector<bool> free_mask,
                 std::vector<double> fixed_values);

  std::size_t full_size() const { return names_.size(); }
  std::size_t dim() const { return free_idx_.size(); }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<bool>& free_mask() const { return free_mask_; }
  const std::vector<double>& fixed_values() const { return fixed_values_; }
  const std::vector<std::size_t>& free_indices() const { return free_idx_; }

  std::vector<std::string> free_names() const;
  double free_lower(std::size_t k) const { return lower_[free_idx_[k]]; }
  double free_upper(std::size_t k) const { return upper_[free_idx_[k]]; }

  // Full vector from free coordinates; fixed slots come from fixed_values.
  std::vector<double> assemble_full_vector(const std::vector<double>& free_values) const;
  // Free coordinates extracted from a full vector.
  std::vector<double> extract_free(const std::vector<double>& full_values) const;

  bool in_bounds(const std::vector<double>& free_values) const;

  // Repairs an out-of-bounds trial by moving each offending coordinate to the
  // midpoint between the violated bound and the (in-bounds) parent value.
  // In-bounds coordinates are left untouched, so the repair is idempotent.
  std::vector<double> reflect_into_bounds(std::vector<double> trial,
                                          const std::vector<double>& parent) const;

  // Plain projection onto the box; used by the local refiner.
  std::vector<double> clip_to_bounds(std::vector<double> free_values) const;

  // Maps free coordinates to [0,1]^dim using the bound ranges. Distances for
  // crowding, niching and bandwidths are all taken in this normalized space.
  std::vector<double> normalize(const std::vector<double>& free_values) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> lower_, upper_;
  std::vector<bool> free_mask_;
  std::vector<double> fixed_values_;
  std::vector<std::size_t> free_idx_;
};

}  // namespace mmfit
