#include "mmfit/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mmfit/errors.hpp"
#include "mmfit/loss.hpp"

namespace mmfit {

namespace {

std::size_t find_free_index(const ParameterSpace& space, const std::string& name) {
  const std::vector<std::string>& names = space.free_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  std::string valid;
  for (const std::string& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw InputError("unknown parameter '" + name + "' (free parameters: " + valid + ")");
}

double column_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// product-Gaussian KDE over normalized pair coordinates, Silverman bandwidth
std::vector<double> kde_values(const std::vector<double>& u, const std::vector<double>& v) {
  const std::size_t n = u.size();
  const double dn = static_cast<double>(n);
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= dn;
  mv /= dn;
  // d=2: (4 / ((d+2) n))^(1/(d+4)) = n^(-1/6)
  const double factor = std::pow(dn, -1.0 / 6.0);
  const double hx = std::max(column_std(u, mu) * factor, 1e-9);
  const double hy = std::max(column_std(v, mv) * factor, 1e-9);
  const double norm = 1.0 / (dn * 2.0 * 3.14159265358979323846 * hx * hy);

  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double du = (u[i] - u[j]) / hx;
      const double dv = (v[i] - v[j]) / hy;
      acc += std::exp(-0.5 * (du * du + dv * dv));
    }
    out[i] = acc * norm;
  }
  return out;
}

}  // namespace

Grid2D density_heatmap(const SolutionSet& s, const std::string& param_a,
                       const std::string& param_b, std::size_t nx, std::size_t ny) {
  if (nx < 2 || ny < 2) throw InputError("heatmap needs at least 2 bins per axis");
  const Problem problem = s.problem();
  const ParameterSpace& space = problem.space;
  const std::size_t ia = find_free_index(space, param_a);
  const std::size_t ib = find_free_index(space, param_b);
  const double xlo = space.free_lower(ia), xhi = space.free_upper(ia);
  const double ylo = space.free_lower(ib), yhi = space.free_upper(ib);

  Grid2D g;
  g.param_a = param_a;
  g.param_b = param_b;
  g.nx = nx;
  g.ny = ny;
  for (std::size_t e = 0; e <= nx; ++e) {
    g.x_edges.push_back(e == nx ? xhi : xlo + (xhi - xlo) * static_cast<double>(e) /
                                            static_cast<double>(nx));
  }
  for (std::size_t e = 0; e <= ny; ++e) {
    g.y_edges.push_back(e == ny ? yhi : ylo + (yhi - ylo) * static_cast<double>(e) /
                                            static_cast<double>(ny));
  }
  g.counts.assign(nx * ny, 0.0);
  g.min_loss.assign(nx * ny, kInfLoss);

  for (const Candidate& c : s.solutions) {
    const double tx = (c.free_params[ia] - xlo) / (xhi - xlo);
    const double ty = (c.free_params[ib] - ylo) / (yhi - ylo);
    const std::size_t ix =
        std::min(static_cast<std::size_t>(tx * static_cast<double>(nx)), nx - 1);
    const std::size_t iy =
        std::min(static_cast<std::size_t>(ty * static_cast<double>(ny)), ny - 1);
    const std::size_t cell = iy * nx + ix;
    g.counts[cell] += 1.0;
    g.min_loss[cell] = std::min(g.min_loss[cell], c.loss);
  }
  return g;
}

ScatterSeries scatter(const SolutionSet& s, const std::string& param_a,
                      const std::string& param_b, ScatterMode mode) {
  const Problem problem = s.problem();
  const ParameterSpace& space = problem.space;
  const std::size_t ia = find_free_index(space, param_a);
  const std::size_t ib = find_free_index(space, param_b);

  ScatterSeries out;
  out.param_a = param_a;
  out.param_b = param_b;
  out.mode = mode;
  for (const Candidate& c : s.solutions) {
    out.points.push_back({c.free_params[ia], c.free_params[ib]});
  }
  if (mode == ScatterMode::weighted) {
    for (const Candidate& c : s.solutions) out.values.push_back(c.loss);
  } else if (mode == ScatterMode::density) {
    const double xlo = space.free_lower(ia), xhi = space.free_upper(ia);
    const double ylo = space.free_lower(ib), yhi = space.free_upper(ib);
    std::vector<double> u, v;
    for (const ScatterPoint& p : out.points) {
      u.push_back((p.x - xlo) / (xhi - xlo));
      v.push_back((p.y - ylo) / (yhi - ylo));
    }
    out.values = kde_values(u, v);
  }
  return out;
}

PredictionPlotData prediction_plot_data(const SolutionSet& s, PlotSelection selection,
                                        const Problem& problem) {
  if (s.set_size() == 0) throw InputError("prediction plot: empty solution set");

  PredictionPlotData out;
  out.selection = selection;
  for (const Dataset& ds : problem.data) {
    DatasetPlot p;
    p.dataset_id = ds.id;
    p.kind = ds.kind;
    p.x = ds.x;
    p.observed = ds.d;
    out.datasets.push_back(std::move(p));
  }

  const bool whole_set =
      selection == PlotSelection::set || selection == PlotSelection::complete;
  const std::size_t count = whole_set ? s.set_size() : 1;

  double mre_sum = 0.0, smse_sum = 0.0;
  std::size_t mre_n = 0, smse_n = 0;
  for (std::size_t idx = 0; idx < count; ++idx) {
    const PredictResult r =
        predict(*problem.model, problem.space, s.solutions[idx].free_params, problem.data);
    if (r.status != PredictStatus::ok) {
      out.failures.push_back({idx, r.detail});
      continue;
    }
    for (std::size_t d = 0; d < out.datasets.size(); ++d) {
      out.datasets[d].curves.push_back({idx, !whole_set && selection == PlotSelection::best,
                                        r.values[d]});
    }
    if (whole_set) {
      try {
        mre_sum += mre(problem.data, r.values);
        ++mre_n;
      } catch (const LossError&) {
      }
      try {
        smse_sum += smse(problem.data, r.values);
        ++smse_n;
      } catch (const LossError&) {
      }
      // the figure draws every solution grey and repeats the best on top
      if (idx == 0) {
        for (std::size_t d = 0; d < out.datasets.size(); ++d) {
          out.datasets[d].curves.push_back({idx, true, r.values[d]});
        }
      }
    }
  }
  if (whole_set) {
    if (mre_n > 0) out.set_mre = mre_sum / static_cast<double>(mre_n);
    if (smse_n > 0) out.set_smse = smse_sum / static_cast<double>(smse_n);
  }
  return out;
}

// ---------------------------------------------------------------- rendering

namespace {

std::string gnum(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

std::string tick_label(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::string pix(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// light -> dark blue ramp
std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247.0 + t * (8.0 - 247.0)));
  const int g = static_cast<int>(std::lround(251.0 + t * (48.0 - 251.0)));
  const int b = static_cast<int>(std::lround(255.0 + t * (107.0 - 255.0)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Frame {
  double x0, y0, w, h;  // pixel rect, y grows downward
  double xmin, xmax, ymin, ymax;
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void pad_range(double& lo, double& hi) {
  if (hi > lo) {
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  } else {
    const double pad = std::max(0.5, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
}

void draw_axes(std::string& svg, const Frame& f, const std::string& xlabel,
               const std::string& ylabel) {
  svg += "<rect x=\"" + pix(f.x0) + "\" y=\"" + pix(f.y0) + "\" width=\"" + pix(f.w) +
         "\" height=\"" + pix(f.h) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.xmin + (f.xmax - f.xmin) * k / 4.0;
    const double yv = f.ymin + (f.ymax - f.ymin) * k / 4.0;
    const double xp = f.px(xv);
    const double yp = f.py(yv);
    svg += "<line x1=\"" + pix(xp) + "\" y1=\"" + pix(f.y0 + f.h) + "\" x2=\"" + pix(xp) +
           "\" y2=\"" + pix(f.y0 + f.h + 5) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + pix(xp) + "\" y=\"" + pix(f.y0 + f.h + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + escape_xml(tick_label(xv)) +
           "</text>\n";
    svg += "<line x1=\"" + pix(f.x0 - 5) + "\" y1=\"" + pix(yp) + "\" x2=\"" + pix(f.x0) +
           "\" y2=\"" + pix(yp) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + pix(f.x0 - 8) + "\" y=\"" + pix(yp + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + escape_xml(tick_label(yv)) +
           "</text>\n";
  }
  svg += "<text x=\"" + pix(f.x0 + f.w / 2) + "\" y=\"" + pix(f.y0 + f.h + 38) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + escape_xml(xlabel) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + pix(f.y0 + f.h / 2) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         pix(f.y0 + f.h / 2) + ")\">" + escape_xml(ylabel) + "</text>\n";
}

std::string svg_open(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + pix(width) + "\" height=\"" +
         pix(height) + "\" viewBox=\"0 0 " + pix(width) + " " + pix(height) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" "
         "fill=\"#ffffff\"/>\n";
}

}  // namespace

std::string grid_to_csv(const Grid2D& g) {
  std::string out = "x_lo,x_hi,y_lo,y_hi,count,min_loss\n";
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const std::size_t cell = iy * g.nx + ix;
      out += gnum(g.x_edges[ix]) + "," + gnum(g.x_edges[ix + 1]) + "," + gnum(g.y_edges[iy]) +
             "," + gnum(g.y_edges[iy + 1]) + "," + gnum(g.counts[cell]) + ",";
      if (std::isfinite(g.min_loss[cell])) out += gnum(g.min_loss[cell]);
      out += "\n";
    }
  }
  return out;
}

std::string grid_to_svg(const Grid2D& g, bool color_by_loss, const ScatterSeries* overlay) {
  Frame f{70, 40, 540, 380, g.x_edges.front(), g.x_edges.back(), g.y_edges.front(),
          g.y_edges.back()};
  std::string svg = svg_open(640, 480);
  const std::string what = color_by_loss ? "min-loss heatmap" : "density heatmap";
  svg += "<text x=\"320\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">" +
         escape_xml(what + " " + g.param_a + " vs " + g.param_b) + "</text>\n";

  double vmin = 0.0, vmax = 1.0;
  if (color_by_loss) {
    vmin = kInfLoss;
    vmax = -kInfLoss;
    for (double v : g.min_loss) {
      if (std::isfinite(v)) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
  } else {
    vmax = 1.0;
    for (double v : g.counts) vmax = std::max(vmax, v);
  }

  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const std::size_t cell = iy * g.nx + ix;
      std::string color;
      if (color_by_loss) {
        const double v = g.min_loss[cell];
        if (!std::isfinite(v)) {
          color = "#eeeeee";
        } else if (vmax > vmin) {
          color = ramp_color(1.0 - (v - vmin) / (vmax - vmin));  // dark = low loss
        } else {
          color = ramp_color(1.0);
        }
      } else {
        color = ramp_color(g.counts[cell] / vmax);
      }
      const double xa = f.px(g.x_edges[ix]);
      const double xb = f.px(g.x_edges[ix + 1]);
      const double ya = f.py(g.y_edges[iy + 1]);
      const double yb = f.py(g.y_edges[iy]);
      svg += "<rect x=\"" + pix(xa) + "\" y=\"" + pix(ya) + "\" width=\"" + pix(xb - xa) +
             "\" height=\"" + pix(yb - ya) + "\" fill=\"" + color + "\"/>\n";
    }
  }
  if (overlay != nullptr) {
    for (const ScatterPoint& p : overlay->points) {
      svg += "<circle cx=\"" + pix(f.px(p.x)) + "\" cy=\"" + pix(f.py(p.y)) +
             "\" r=\"2.5\" fill=\"#d62728\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
    }
  }
  draw_axes(svg, f, g.param_a, g.param_b);
  svg += "</svg>\n";
  return svg;
}

std::string scatter_to_csv(const ScatterSeries& s) {
  std::string out = s.param_a + "," + s.param_b;
  if (s.mode == ScatterMode::weighted) out += ",loss";
  if (s.mode == ScatterMode::density) out += ",density";
  out += "\n";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    out += gnum(s.points[i].x) + "," + gnum(s.points[i].y);
    if (!s.values.empty()) out += "," + gnum(s.values[i]);
    out += "\n";
  }
  return out;
}

std::string scatter_to_svg(const ScatterSeries& s) {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (!s.points.empty()) {
    xmin = xmax = s.points[0].x;
    ymin = ymax = s.points[0].y;
    for (const ScatterPoint& p : s.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  pad_range(xmin, xmax);
  pad_range(ymin, ymax);
  Frame f{70, 40, 540, 380, xmin, xmax, ymin, ymax};

  std::string what = "scatter";
  if (s.mode == ScatterMode::weighted) what = "weighted scatter";
  if (s.mode == ScatterMode::density) what = "density scatter";

  std::string svg = svg_open(640, 480);
  svg += "<text x=\"320\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">" +
         escape_xml(what + " " + s.param_a + " vs " + s.param_b) + "</text>\n";

  double vmin = 0.0, vmax = 0.0;
  if (!s.values.empty()) {
    vmin = *std::min_element(s.values.begin(), s.values.end());
    vmax = *std::max_element(s.values.begin(), s.values.end());
    const char* label = s.mode == ScatterMode::weighted ? "loss" : "density";
    svg += "<text x=\"610\" y=\"24\" font-size=\"10\" text-anchor=\"end\">" +
           escape_xml(std::string(label) + " " + tick_label(vmin) + " to " + tick_label(vmax)) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    std::string color = "#4682b4";
    if (!s.values.empty()) {
      double t = vmax > vmin ? (s.values[i] - vmin) / (vmax - vmin) : 1.0;
      if (s.mode == ScatterMode::weighted) t = 1.0 - t;  // dark = low loss
      color = ramp_color(t);
    }
    svg += "<circle cx=\"" + pix(f.px(s.points[i].x)) + "\" cy=\"" + pix(f.py(s.points[i].y)) +
           "\" r=\"3\" fill=\"" + color + "\" stroke=\"#333333\" stroke-width=\"0.3\"/>\n";
  }
  draw_axes(svg, f, s.param_a, s.param_b);
  svg += "</svg>\n";
  return svg;
}

std::string prediction_to_csv(const PredictionPlotData& p) {
  std::string out = "dataset,kind,series,x,value\n";
  for (const DatasetPlot& ds : p.datasets) {
    const std::string kind = ds.kind == DatasetKind::uni_variate ? "uni_variate" : "zero_variate";
    for (std::size_t i = 0; i < ds.observed.size(); ++i) {
      out += ds.dataset_id + "," + kind + ",observed,";
      if (!ds.x.empty()) out += gnum(ds.x[i]);
      out += "," + gnum(ds.observed[i]) + "\n";
    }
    for (const PredictionCurve& c : ds.curves) {
      const std::string series =
          c.is_best ? "best" : "solution_" + std::to_string(c.solution_index);
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        out += ds.dataset_id + "," + kind + "," + series + ",";
        if (!ds.x.empty()) out += gnum(ds.x[i]);
        out += "," + gnum(c.values[i]) + "\n";
      }
    }
  }
  return out;
}

std::string prediction_to_svg(const PredictionPlotData& p) {
  const double width = 640;
  const double panel_h = 300;
  const double gap = 46;
  const double top = 46;
  const double height = top + (panel_h + gap) * static_cast<double>(p.datasets.size()) + 10;

  std::string svg = svg_open(width, height);
  const char* sel = "basic";
  if (p.selection == PlotSelection::best) sel = "best";
  if (p.selection == PlotSelection::set) sel = "set";
  if (p.selection == PlotSelection::complete) sel = "complete";
  std::string title = std::string("prediction plot (") + sel + ")";
  if (p.set_mre || p.set_smse) {
    title += "  set mre " + (p.set_mre ? tick_label(*p.set_mre) : "n/a");
    title += ", set smse " + (p.set_smse ? tick_label(*p.set_smse) : "n/a");
  }
  svg += "<text x=\"320\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">" +
         escape_xml(title) + "</text>\n";
  if (!p.failures.empty()) {
    svg += "<text x=\"320\" y=\"38\" font-size=\"11\" text-anchor=\"middle\">" +
           escape_xml(std::to_string(p.failures.size()) + " solution(s) failed to predict") +
           "</text>\n";
  }

  for (std::size_t d = 0; d < p.datasets.size(); ++d) {
    const DatasetPlot& ds = p.datasets[d];
    const double y0 = top + (panel_h + gap) * static_cast<double>(d);

    double xmin, xmax;
    if (ds.kind == DatasetKind::uni_variate && !ds.x.empty()) {
      xmin = ds.x.front();
      xmax = ds.x.back();
    } else {
      xmin = 0.0;
      xmax = 1.0;
    }
    double ymin = ds.observed.empty() ? 0.0 : ds.observed[0];
    double ymax = ymin;
    for (double v : ds.observed) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
    for (const PredictionCurve& c : ds.curves) {
      for (double v : c.values) {
        if (std::isfinite(v)) {
          ymin = std::min(ymin, v);
          ymax = std::max(ymax, v);
        }
      }
    }
    if (ds.kind == DatasetKind::uni_variate) pad_range(xmin, xmax);
    pad_range(ymin, ymax);
    Frame f{70, y0, 540, panel_h - 60, xmin, xmax, ymin, ymax};

    svg += "<text x=\"70\" y=\"" + pix(y0 - 6) + "\" font-size=\"12\">" +
           escape_xml(ds.dataset_id) + "</text>\n";

    auto draw_curve = [&](const PredictionCurve& c) {
      const std::string style = c.is_best ? "stroke=\"#000000\" stroke-width=\"2\""
                                          : "stroke=\"#b0b0b0\" stroke-width=\"1\"";
      if (ds.kind == DatasetKind::uni_variate) {
        std::string pts;
        for (std::size_t i = 0; i < c.values.size(); ++i) {
          pts += (i ? " " : "") + pix(f.px(ds.x[i])) + "," + pix(f.py(c.values[i]));
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" " + style + "/>\n";
      } else {
        for (double v : c.values) {
          svg += "<circle cx=\"" + pix(f.px(0.65)) + "\" cy=\"" + pix(f.py(v)) + "\" r=\"" +
                 (c.is_best ? "4" : "3") + "\" fill=\"" +
                 (c.is_best ? std::string("#000000") : std::string("#b0b0b0")) + "\"/>\n";
        }
      }
    };
    for (const PredictionCurve& c : ds.curves) {
      if (!c.is_best) draw_curve(c);
    }
    for (const PredictionCurve& c : ds.curves) {
      if (c.is_best) draw_curve(c);
    }
    for (std::size_t i = 0; i < ds.observed.size(); ++i) {
      const double ox = ds.kind == DatasetKind::uni_variate ? ds.x[i] : 0.35;
      svg += "<circle cx=\"" + pix(f.px(ox)) + "\" cy=\"" + pix(f.py(ds.observed[i])) +
             "\" r=\"3.5\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    }
    draw_axes(svg, f, ds.kind == DatasetKind::uni_variate ? "x" : "", "value");
  }
  svg += "</svg>\n";
  return svg;
}

std::string chart_file_name(const std::string& run_id, const std::string& chart,
                            const std::string& detail_a, const std::string& detail_b,
                            const std::string& ext) {
  std::string name = run_id + "_" + chart;
  if (!detail_a.empty()) {
    name += "_" + detail_a;
    if (!detail_b.empty()) name += "-" + detail_b;
  }
  return name + "." + ext;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing file '" + path + "'");
}

}  // namespace mmfit
