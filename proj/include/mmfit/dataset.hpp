#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mmfit {

enum class DatasetKind { zero_variate, uni_variate };

// One named block of observations. Zero-variate sets are bare values (often a
// single scalar trait); uni-variate sets pair each observation with an
// independent-variable value x (strictly increasing). Every observation
// carries a non-negative weight; when the caller supplies none, each point
// gets 1/n so the whole set weighs 1.
struct Dataset {
  std::string id;
  DatasetKind kind = DatasetKind::zero_variate;
  std::vector<double> x;  // uni-variate only; empty for zero-variate
  std::vector<double> d;  // observed values
  std::vector<double> w;  // per-observation weights, >= 0

  static Dataset zero_variate(std::string id, std::vector<double> d,
                              std::vector<double> w = {});
  static Dataset uni_variate(std::string id, std::vector<double> x, std::vector<double> d,
                             std::vector<double> w = {});

  std::size_t size() const { return d.size(); }
  double weight_total() const;  // w_i
  double data_mean() const;     // plain mean of d
  void validate() const;
};

// Ordered list of datasets with unique ids. At least one dataset must carry
// positive total weight, otherwise no loss is defined.
class DatasetCollection {
 public:
  explicit DatasetCollection(std::vector<Dataset> datasets);

  std::size_t size() const { return datasets_.size(); }
  const Dataset& at(std::size_t i) const { return datasets_[i]; }
  const Dataset* find(const std::string& id) const;
  const std::vector<Dataset>& all() const { return datasets_; }

  auto begin() const { return datasets_.begin(); }
  auto end() const { return datasets_.end(); }

 private:
  std::vector<Dataset> datasets_;
};

}  // namespace mmfit
