#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mmfit/orchestrator.hpp"

namespace mmfit {

// 2-D histogram over the full bound rectangle of one parameter pair.
// Cells are row-major (iy * nx + ix); edges live in raw parameter space.
// Binning is lower-edge inclusive, with the top edge folded into the last bin.
struct Grid2D {
  std::string param_a, param_b;
  std::size_t nx = 0, ny = 0;
  std::vector<double> x_edges, y_edges;  // sizes nx+1, ny+1
  std::vector<double> counts;            // per-cell solution counts
  std::vector<double> min_loss;          // per-cell best loss, +inf when empty
};

enum class ScatterMode { plain, weighted, density };

struct ScatterPoint {
  double x = 0.0, y = 0.0;
};

struct ScatterSeries {
  std::string param_a, param_b;
  ScatterMode mode = ScatterMode::plain;
  std::vector<ScatterPoint> points;
  // empty for plain, per-point loss for weighted, Gaussian-KDE value for density
  std::vector<double> values;
};

enum class PlotSelection { basic, best, set, complete };

struct PredictionCurve {
  std::size_t solution_index = 0;
  bool is_best = false;
  std::vector<double> values;  // aligned to the dataset grid
};

struct DatasetPlot {
  std::string dataset_id;
  DatasetKind kind = DatasetKind::uni_variate;
  std::vector<double> x;  // empty for zero-variate data
  std::vector<double> observed;
  std::vector<PredictionCurve> curves;
};

struct PredictionFailure {
  std::size_t solution_index = 0;
  std::string detail;
};

struct PredictionPlotData {
  PlotSelection selection = PlotSelection::basic;
  std::vector<DatasetPlot> datasets;
  std::vector<PredictionFailure> failures;
  // set / complete only: arithmetic mean of per-solution metric values
  std::optional<double> set_mre, set_smse;
};

Grid2D density_heatmap(const SolutionSet& s, const std::string& param_a,
                       const std::string& param_b, std::size_t nx = 25, std::size_t ny = 25);

ScatterSeries scatter(const SolutionSet& s, const std::string& param_a,
                      const std::string& param_b, ScatterMode mode);

PredictionPlotData prediction_plot_data(const SolutionSet& s, PlotSelection selection,
                                        const Problem& problem);

// Renders are deterministic: same data, same bytes.
std::string grid_to_csv(const Grid2D& g);
std::string grid_to_svg(const Grid2D& g, bool color_by_loss = false,
                        const ScatterSeries* overlay = nullptr);
std::string scatter_to_csv(const ScatterSeries& s);
std::string scatter_to_svg(const ScatterSeries& s);
std::string prediction_to_csv(const PredictionPlotData& p);
std::string prediction_to_svg(const PredictionPlotData& p);

// <run-id>_<chart>_<paramA>-<paramB>.<ext>; detail parts may be empty
std::string chart_file_name(const std::string& run_id, const std::string& chart,
                            const std::string& detail_a, const std::string& detail_b,
                            const std::string& ext);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mmfit
