#pragma once

#include <cstddef>
#include <vector>

#include "mmfit/candidate.hpp"
#include "mmfit/parameter_space.hpp"

namespace mmfit {

// Fixed-capacity set of good-and-diverse solutions. Merging new candidates
// past the capacity repeatedly finds the closest pair of members (Euclidean
// distance in bounds-normalized coordinates) and drops the worse of the two,
// so clusters thin out before isolated basins lose their representative. The
// global best can never be the worse member of a pair, hence never dropped.
class SolutionArchive {
 public:
  SolutionArchive(std::size_t capacity, const ParameterSpace& space);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

  // Members sorted best-first (loss, then lexicographic parameters).
  const std::vector<Candidate>& members() const { return members_; }
  const Candidate& best() const { return members_.front(); }

  // Adds candidates, then crowds the set back down to capacity. Candidates
  // without a finite loss (rejected/unevaluated) are not solutions and are
  // skipped; exact duplicates of an existing member are folded into it.
  void merge(const std::vector<Candidate>& incoming);

  // In-place replacement used by refinement; call resort() once afterwards.
  void replace_member(std::size_t i, Candidate c);
  void resort();

 private:
  std::size_t capacity_;
  const ParameterSpace* space_;
  std::vector<Candidate> members_;
  std::vector<std::vector<double>> norm_;  // normalized coords, parallel to members_
};

}  // namespace mmfit
