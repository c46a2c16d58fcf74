#pragma once

#include <stdexcept>
#include <string>

namespace mmfit {

// Invalid input at an API boundary: malformed files, inconsistent options,
// out-of-range selections. The command line maps this family to exit code 1.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A loaded document does not match the expected schema. The message carries
// the offending field path (e.g. "datasets[2].w").
class SchemaError : public InputError {
 public:
  explicit SchemaError(const std::string& what) : InputError(what) {}
};

// Loss computation hit a degenerate dataset (zero mean where a mean is used
// as a denominator). Names the dataset so the user can fix the weights/data.
class LossError : public std::runtime_error {
 public:
  LossError(const std::string& dataset_id, const std::string& what)
      : std::runtime_error(what), dataset_id_(dataset_id) {}
  const std::string& dataset_id() const { return dataset_id_; }

 private:
  std::string dataset_id_;
};

// Thrown by evaluation entry points when the shared budget is already spent.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("evaluation budget exhausted") {}
};

}  // namespace mmfit
