#include "mmfit/solution_archive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmfit/errors.hpp"

namespace mmfit {

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

SolutionArchive::SolutionArchive(std::size_t capacity, const ParameterSpace& space)
    : capacity_(capacity), space_(&space) {
  if (capacity_ == 0) throw InputError("solution archive: capacity must be positive");
}

void SolutionArchive::merge(const std::vector<Candidate>& incoming) {
  for (const Candidate& cand : incoming) {
    if (!std::isfinite(cand.loss)) continue;  // not a usable solution
    bool duplicate = false;
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (members_[i].free_params == cand.free_params) {
        if (cand.loss < members_[i].loss) members_[i] = cand;
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    norm_.push_back(space_->normalize(cand.free_params));
    members_.push_back(cand);
  }

  const std::size_t m = members_.size();
  if (m > capacity_) {
    // Nearest-neighbour bookkeeping: nn[i] is i's closest other member.
    // Dropping a member only invalidates entries whose neighbour it was.
    const double big = std::numeric_limits<double>::max();
    std::vector<double> nn_dist(m, big);
    std::vector<std::size_t> nn_idx(m, 0);
    std::vector<bool> alive(m, true);

    auto recompute = [&](std::size_t i) {
      nn_dist[i] = big;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i || !alive[j]) continue;
        const double d = dist2(norm_[i], norm_[j]);
        if (d < nn_dist[i]) {
          nn_dist[i] = d;
          nn_idx[i] = j;
        }
      }
    };
    for (std::size_t i = 0; i < m; ++i) recompute(i);

    std::size_t alive_count = m;
    while (alive_count > capacity_) {
      std::size_t first = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (alive[i] && (first == m || nn_dist[i] < nn_dist[first])) first = i;
      }
      const std::size_t second = nn_idx[first];
      const std::size_t victim =
          candidate_less(members_[first], members_[second]) ? second : first;
      alive[victim] = false;
      --alive_count;
      for (std::size_t i = 0; i < m; ++i) {
        if (alive[i] && nn_idx[i] == victim) recompute(i);
      }
    }

    std::size_t w = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!alive[i]) continue;
      if (w != i) {
        members_[w] = std::move(members_[i]);
        norm_[w] = std::move(norm_[i]);
      }
      ++w;
    }
    members_.resize(w);
    norm_.resize(w);
  }

  resort();
}

void SolutionArchive::replace_member(std::size_t i, Candidate c) {
  norm_[i] = space_->normalize(c.free_params);
  members_[i] = std::move(c);
}

void SolutionArchive::resort() {
  std::vector<std::size_t> order(members_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidate_less(members_[a], members_[b]);
  });
  std::vector<Candidate> ms;
  std::vector<std::vector<double>> ns;
  ms.reserve(members_.size());
  ns.reserve(members_.size());
  for (std::size_t i : order) {
    ms.push_back(std::move(members_[i]));
    ns.push_back(std::move(norm_[i]));
  }
  members_ = std::move(ms);
  norm_ = std::move(ns);
}

}  // namespace mmfit
