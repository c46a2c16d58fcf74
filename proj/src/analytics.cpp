#include "mmfit/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mmfit/errors.hpp"

namespace mmfit {

namespace {

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

LossStats loss_stats(const SolutionSet& s) {
  if (s.set_size() == 0) throw InputError("loss_stats: empty solution set");
  std::vector<double> f;
  f.reserve(s.set_size());
  for (const Candidate& c : s.solutions) f.push_back(c.loss);

  // Sorting first makes every statistic a function of the value multiset, so
  // reordering the solutions cannot even flip a last bit.
  std::sort(f.begin(), f.end());

  LossStats out;
  out.cardinality = f.size();
  out.mean = 0.0;
  for (double x : f) out.mean += x;
  out.mean /= static_cast<double>(f.size());
  out.std_dev = sample_std(f, out.mean);
  out.min = f.front();
  out.max = f.back();

  // Mean |f_a - f_b| over unordered pairs. On sorted values the double loop
  // collapses to a single weighted sum.
  const std::size_t n = f.size();
  if (n > 1) {
    std::sort(f.begin(), f.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += f[i] * (2.0 * static_cast<double>(i) - static_cast<double>(n) + 1.0);
    }
    out.mean_pairwise_distance = acc * 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  }
  return out;
}

std::vector<ParamStats> param_stats(const SolutionSet& s, const ParameterSpace& space) {
  if (s.set_size() == 0) throw InputError("param_stats: empty solution set");
  const std::size_t n = s.set_size();
  const std::size_t dim = space.dim();
  const std::vector<std::string> names = space.free_names();

  std::vector<ParamStats> out;
  out.reserve(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<double> col;
    col.reserve(n);
    for (const Candidate& c : s.solutions) col.push_back(c.free_params[k]);
    std::sort(col.begin(), col.end());  // canonical fold order: reordering-proof

    ParamStats ps;
    ps.name = names[k];
    ps.mean = 0.0;
    for (double x : col) ps.mean += x;
    ps.mean /= static_cast<double>(n);
    ps.std_dev = sample_std(col, ps.mean);
    ps.min = col.front();
    ps.max = col.back();
    ps.spread = ps.max - ps.min;

    const double lo = space.free_lower(k);
    const double range = space.free_upper(k) - lo;
    double dist_lo = 0.0;
    for (double x : col) dist_lo += (x - lo) / range;
    dist_lo /= static_cast<double>(n);
    ps.mean_distance_to_lower = dist_lo;
    ps.mean_distance_to_upper = 1.0 - dist_lo;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : col) {
      const double d = x - ps.mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    const double dn = static_cast<double>(n);
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    if (n > 3 && m2 > 0.0) {
      // bias-corrected sample skewness / excess kurtosis
      const double g1 = m3 / std::pow(m2, 1.5);
      const double g2 = m4 / (m2 * m2) - 3.0;
      const double skew = g1 * std::sqrt(dn * (dn - 1.0)) / (dn - 2.0);
      const double kurt = ((dn + 1.0) * g2 + 6.0) * (dn - 1.0) / ((dn - 2.0) * (dn - 3.0));
      ps.skewness = skew;
      ps.kurtosis = kurt;
      const double corr = 3.0 * (dn - 1.0) * (dn - 1.0) / ((dn - 2.0) * (dn - 3.0));
      ps.bimodality_coefficient = (skew * skew + 1.0) / (kurt + corr);
    }
    out.push_back(std::move(ps));
  }
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

ordered_json opt_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json();
}

}  // namespace

ordered_json stats_report_json(const SolutionSet& s) {
  const Problem problem = s.problem();
  const LossStats ls = loss_stats(s);
  const std::vector<ParamStats> pstats = param_stats(s, problem.space);

  ordered_json doc;
  doc["set_size"] = s.set_size();
  ordered_json best;
  best["loss"] = s.best().loss;
  best["mre"] = s.metrics[0].mre_value;    // NaN -> null
  best["smse"] = s.metrics[0].smse_value;
  doc["best"] = std::move(best);

  ordered_json loss;
  loss["cardinality"] = ls.cardinality;
  loss["mean"] = ls.mean;
  loss["std_dev"] = ls.std_dev;
  loss["min"] = ls.min;
  loss["max"] = ls.max;
  loss["mean_pairwise_distance"] = ls.mean_pairwise_distance;
  doc["loss"] = std::move(loss);

  ordered_json params = ordered_json::array();
  for (const ParamStats& ps : pstats) {
    ordered_json p;
    p["name"] = ps.name;
    p["mean"] = ps.mean;
    p["std_dev"] = ps.std_dev;
    p["spread"] = ps.spread;
    p["min"] = ps.min;
    p["max"] = ps.max;
    p["skewness"] = opt_json(ps.skewness);
    p["kurtosis"] = opt_json(ps.kurtosis);
    p["bimodality_coefficient"] = opt_json(ps.bimodality_coefficient);
    p["mean_distance_to_lower"] = ps.mean_distance_to_lower;
    p["mean_distance_to_upper"] = ps.mean_distance_to_upper;
    params.push_back(std::move(p));
  }
  doc["parameters"] = std::move(params);
  return doc;
}

std::string stats_report_text(const SolutionSet& s) {
  const Problem problem = s.problem();
  const LossStats ls = loss_stats(s);
  const std::vector<ParamStats> pstats = param_stats(s, problem.space);

  std::string out;
  out += "solution set: " + std::to_string(s.set_size()) + " solutions\n";
  out += "best loss: " + fmt(s.best().loss) + "  (mre " + fmt(s.metrics[0].mre_value) +
         ", smse " + fmt(s.metrics[0].smse_value) + ")\n";
  out += "\n";
  out += "loss values\n";
  out += "  cardinality             " + std::to_string(ls.cardinality) + "\n";
  out += "  mean                    " + fmt(ls.mean) + "\n";
  out += "  std dev                 " + fmt(ls.std_dev) + "\n";
  out += "  min                     " + fmt(ls.min) + "\n";
  out += "  max                     " + fmt(ls.max) + "\n";
  out += "  mean pairwise distance  " + fmt(ls.mean_pairwise_distance) + "\n";
  for (const ParamStats& ps : pstats) {
    out += "\n";
    out += "parameter " + ps.name + "\n";
    out += "  mean                    " + fmt(ps.mean) + "\n";
    out += "  std dev                 " + fmt(ps.std_dev) + "\n";
    out += "  spread                  " + fmt(ps.spread) + "\n";
    out += "  min                     " + fmt(ps.min) + "\n";
    out += "  max                     " + fmt(ps.max) + "\n";
    out += "  skewness                " + fmt(ps.skewness) + "\n";
    out += "  kurtosis                " + fmt(ps.kurtosis) + "\n";
    out += "  bimodality coefficient  " + fmt(ps.bimodality_coefficient) + "\n";
    out += "  mean dist to lower      " + fmt(ps.mean_distance_to_lower) + "\n";
    out += "  mean dist to upper      " + fmt(ps.mean_distance_to_upper) + "\n";
  }
  return out;
}

}  // namespace mmfit
