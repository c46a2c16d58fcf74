#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmfit/orchestrator.hpp"

namespace mmfit {

struct LossStats {
  std::size_t cardinality = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean_pairwise_distance = 0.0;
};

// Moment statistics (skewness, kurtosis, bimodality) need n > 3 and non-zero
// variance; outside that they are reported as explicit null markers.
struct ParamStats {
  std::string name;
  double mean = 0.0;
  double std_dev = 0.0;
  double spread = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::optional<double> skewness;
  std::optional<double> kurtosis;  // excess kurtosis, sample-adjusted
  std::optional<double> bimodality_coefficient;
  double mean_distance_to_lower = 0.0;  // in bounds-normalized coordinates
  double mean_distance_to_upper = 0.0;
};

LossStats loss_stats(const SolutionSet& s);
std::vector<ParamStats> param_stats(const SolutionSet& s, const ParameterSpace& space);

ordered_json stats_report_json(const SolutionSet& s);
std::string stats_report_text(const SolutionSet& s);

}  // namespace mmfit
