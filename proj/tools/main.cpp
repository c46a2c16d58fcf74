#include <CLI11.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mmfit/analytics.hpp"
#include "mmfit/charts.hpp"
#include "mmfit/errors.hpp"
#include "mmfit/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace mmfit;

namespace {

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct OptionOverrides {
  std::string method, stop_on, init_mode;
  std::int64_t max_fun_evals = -1;
  double max_calibration_time = -1.0, refine_prob = -1.0, engine_fraction = -1.0;
  std::int64_t num_results = -1;
  int refine_best = -1;  // -1 unset, 0 false, 1 true
  std::int64_t seed = -1;

  // CLI11 hookup shared between calibrate and continue
  void attach(CLI::App* cmd) {
    cmd->add_option("--method", method, "shade | lshade | nm");
    cmd->add_option("--max_fun_evals", max_fun_evals, "objective evaluation budget");
    cmd->add_option("--max_calibration_time", max_calibration_time, "wall-clock cap, seconds");
    cmd->add_option("--stop_on", stop_on, "evals | time");
    cmd->add_option("--num_results", num_results, "solution archive capacity");
    cmd->add_option("--refine_best", refine_best, "1 to polish the best solution, 0 to skip");
    cmd->add_option("--refine_prob", refine_prob, "refinement probability per other solution");
    cmd->add_option("--engine_fraction", engine_fraction,
                    "fraction of the budget spent by the evolution engine");
    cmd->add_option("--init_mode", init_mode, "seed_centered | uniform");
    cmd->add_option("--seed", seed, "random seed");
  }

  void apply(CalibrationOptions& o) const {
    auto parse_method = [](const std::string& s) {
      if (s == "shade") return Method::shade;
      if (s == "lshade") return Method::lshade;
      if (s == "nm") return Method::nm;
      throw InputError("unknown method '" + s + "' (valid: shade, lshade, nm)");
    };
    if (!method.empty()) o.method = parse_method(method);
    if (max_fun_evals >= 0) o.max_fun_evals = max_fun_evals;
    if (max_calibration_time >= 0.0) o.max_calibration_time = max_calibration_time;
    if (!stop_on.empty()) {
      if (stop_on == "evals") {
        o.stop_on = StopOn::evals;
      } else if (stop_on == "time") {
        o.stop_on = StopOn::time;
      } else {
        throw InputError("unknown stop_on '" + stop_on + "' (valid: evals, time)");
      }
    }
    if (num_results >= 0) o.num_results = static_cast<std::size_t>(num_results);
    if (refine_best >= 0) o.refine_best = refine_best != 0;
    if (refine_prob >= 0.0) o.refine_prob = refine_prob;
    if (engine_fraction >= 0.0) o.engine_fraction = engine_fraction;
    if (!init_mode.empty()) {
      if (init_mode == "seed_centered") {
        o.init_mode = InitMode::seed_centered;
      } else if (init_mode == "uniform") {
        o.init_mode = InitMode::uniform;
      } else {
        throw InputError("unknown init_mode '" + init_mode +
                         "' (valid: seed_centered, uniform)");
      }
    }
    if (seed >= 0) o.seed = static_cast<std::uint64_t>(seed);
  }
};

struct RunPaths {
  fs::path solutions, trace, manifest;
};

RunPaths prepare_run_dir(const std::string& out_dir, const std::string& run_id) {
  fs::create_directories(out_dir);
  RunPaths p;
  p.solutions = fs::path(out_dir) / (run_id + "_solutions.json");
  p.trace = fs::path(out_dir) / (run_id + "_trace.ndjson");
  p.manifest = fs::path(out_dir) / (run_id + "_manifest.json");
  if (fs::exists(p.manifest)) {
    throw InputError("run id '" + run_id + "' already used in '" + out_dir + "'");
  }
  return p;
}

void write_manifest(const fs::path& path, const std::string& command, const std::string& run_id,
                    const std::string& problem_source, const CalibrationOptions& effective,
                    unsigned threads, const std::string& started, const std::string& finished,
                    const RunPaths& outputs, const std::string& prior_run) {
  ordered_json m;
  m["run_id"] = run_id;
  m["command"] = command;
  m["problem"] = problem_source;
  m["options"] = options_to_json(effective);
  m["seed"] = effective.seed;
  m["threads"] = threads;
  m["started_at"] = started;
  m["finished_at"] = finished;
  ordered_json outs;
  outs["solutions"] = outputs.solutions.filename().string();
  outs["trace"] = outputs.trace.filename().string();
  if (!prior_run.empty()) m["prior_run"] = prior_run;
  m["outputs"] = std::move(outs);
  write_text_file(path.string(), m.dump(2) + "\n");
}

TraceSink make_trace_sink(std::ofstream& stream) {
  return [&stream](const GenerationStats& g) {
    ordered_json line;
    line["generation"] = g.generation;
    line["evals_used"] = g.evals_used;
    line["best_loss"] = g.best_loss;
    line["mean_loss"] = g.mean_loss;
    line["pop_size"] = g.pop_size;
    line["m_cr"] = g.m_cr;
    line["m_f"] = g.m_f;
    stream << line.dump() << "\n";
  };
}

int report_run(const SolutionSet& set, const RunPaths& paths) {
  std::printf("%zu solution(s), best loss %.10g\n", set.set_size(),
              set.set_size() ? set.best().loss : kInfLoss);
  std::printf("wrote %s\n", paths.solutions.string().c_str());
  return 0;
}

int cmd_calibrate(const std::string& problem_source, const std::string& options_file,
                  const OptionOverrides& over, const std::string& out_dir,
                  const std::string& run_id, unsigned threads) {
  const Problem problem = resolve_problem(problem_source);
  CalibrationOptions options;
  if (!options_file.empty()) options = load_options(options_file);
  over.apply(options);

  const RunPaths paths = prepare_run_dir(out_dir, run_id);
  std::ofstream trace_stream(paths.trace, std::ios::binary);
  if (!trace_stream) throw InputError("cannot write trace file '" + paths.trace.string() + "'");

  CalibrateHooks hooks;
  hooks.trace = make_trace_sink(trace_stream);
  ExecContext exec;
  exec.threads = threads;

  const std::string started = iso_now();
  const SolutionSet set = calibrate(problem, options, exec, hooks);
  const std::string finished = iso_now();

  save_solution_set(set, paths.solutions.string());
  write_manifest(paths.manifest, "calibrate", run_id, problem_source, set.options, threads,
                 started, finished, paths, "");
  return report_run(set, paths);
}

Selection parse_selection(const std::string& text) {
  Selection sel;
  if (text == "best") return sel;
  sel.best_only = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string tok = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(tok, &used);
      if (used != tok.size() || tok.empty()) throw std::invalid_argument(tok);
      sel.indices.push_back(v);
    } catch (const std::exception&) {
      throw InputError("invalid selection '" + text + "' (expected 'best' or e.g. '0,5,10')");
    }
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return sel;
}

int cmd_continue(const std::string& from_file, const std::string& select_text,
                 const std::string& problem_source, const std::string& options_file,
                 const OptionOverrides& over, const std::string& out_dir,
                 const std::string& run_id, unsigned threads) {
  const SolutionSet prior = load_solution_set(from_file);
  const Problem problem =
      problem_source.empty() ? prior.problem() : resolve_problem(problem_source);
  CalibrationOptions options = prior.options;
  if (!options_file.empty()) options = load_options(options_file);
  over.apply(options);
  const Selection sel = parse_selection(select_text);

  const RunPaths paths = prepare_run_dir(out_dir, run_id);
  std::ofstream trace_stream(paths.trace, std::ios::binary);
  if (!trace_stream) throw InputError("cannot write trace file '" + paths.trace.string() + "'");

  CalibrateHooks hooks;
  hooks.trace = make_trace_sink(trace_stream);
  ExecContext exec;
  exec.threads = threads;

  const std::string started = iso_now();
  const SolutionSet set = continue_calibration(prior, sel, problem, options, exec, hooks);
  const std::string finished = iso_now();

  save_solution_set(set, paths.solutions.string());
  write_manifest(paths.manifest, "continue", run_id,
                 problem_source.empty() ? from_file : problem_source, set.options, threads,
                 started, finished, paths, from_file);
  return report_run(set, paths);
}

int cmd_stats(const std::string& solutions_file, bool as_json) {
  const SolutionSet set = load_solution_set(solutions_file);
  if (as_json) {
    std::cout << stats_report_json(set).dump(2) << "\n";
  } else {
    std::cout << stats_report_text(set);
  }
  return 0;
}

std::pair<std::string, std::string> parse_pair(const std::string& text) {
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 >= text.size() ||
      text.find(',', comma + 1) != std::string::npos) {
    throw InputError("expected --pair A,B (two parameter names)");
  }
  return {text.substr(0, comma), text.substr(comma + 1)};
}

int cmd_chart(const std::string& solutions_file, const std::string& chart,
              const std::string& pair_text, const std::string& plot_text,
              const std::string& out_dir, const std::string& run_id) {
  static const char* kPairCharts[] = {"density_hm", "density_hm_scatter", "scatter",
                                      "weighted_scatter", "density_scatter"};
  bool pair_chart = false;
  for (const char* c : kPairCharts) pair_chart = pair_chart || chart == c;
  if (!pair_chart && chart != "results") {
    throw InputError(
        "unknown chart '" + chart +
        "' (valid: density_hm, density_hm_scatter, scatter, weighted_scatter, "
        "density_scatter, results)");
  }

  const SolutionSet set = load_solution_set(solutions_file);
  fs::create_directories(out_dir);

  std::string svg, csv, name_a, name_b;
  if (pair_chart) {
    if (pair_text.empty()) throw InputError("--pair A,B is required for chart '" + chart + "'");
    const auto [a, b] = parse_pair(pair_text);
    name_a = a;
    name_b = b;
    if (chart == "density_hm" || chart == "density_hm_scatter") {
      const Grid2D g = density_heatmap(set, a, b);
      const ScatterSeries overlay = scatter(set, a, b, ScatterMode::plain);
      svg = grid_to_svg(g, false, chart == "density_hm_scatter" ? &overlay : nullptr);
      csv = grid_to_csv(g);
    } else {
      ScatterMode mode = ScatterMode::plain;
      if (chart == "weighted_scatter") mode = ScatterMode::weighted;
      if (chart == "density_scatter") mode = ScatterMode::density;
      const ScatterSeries series = scatter(set, a, b, mode);
      svg = scatter_to_svg(series);
      csv = scatter_to_csv(series);
    }
  } else {
    PlotSelection sel;
    if (plot_text == "basic") {
      sel = PlotSelection::basic;
    } else if (plot_text == "best") {
      sel = PlotSelection::best;
    } else if (plot_text == "set") {
      sel = PlotSelection::set;
    } else if (plot_text == "complete") {
      sel = PlotSelection::complete;
    } else {
      throw InputError("unknown plot '" + plot_text +
                       "' (valid: basic, best, set, complete)");
    }
    const PredictionPlotData data = prediction_plot_data(set, sel, set.problem());
    svg = prediction_to_svg(data);
    csv = prediction_to_csv(data);
    name_a = plot_text;
    for (const PredictionFailure& f : data.failures) {
      std::fprintf(stderr, "solution %zu failed to predict: %s\n", f.solution_index,
                   f.detail.c_str());
    }
  }

  const fs::path svg_path = fs::path(out_dir) / chart_file_name(run_id, chart, name_a, name_b, "svg");
  const fs::path csv_path = fs::path(out_dir) / chart_file_name(run_id, chart, name_a, name_b, "csv");
  write_text_file(svg_path.string(), svg);
  write_text_file(csv_path.string(), csv);
  std::printf("wrote %s\n", svg_path.string().c_str());
  std::printf("wrote %s\n", csv_path.string().c_str());
  return 0;
}

int cmd_compare(const std::string& problem_source, std::int64_t budget, std::int64_t seeds,
                std::int64_t base_seed, const std::string& out_dir, unsigned threads) {
  if (budget < 1000) throw InputError("compare: --budget must be at least 1000");
  if (seeds < 1) throw InputError("compare: --seeds must be at least 1");
  const Problem problem = resolve_problem(problem_source);
  fs::create_directories(out_dir);

  ExecContext exec;
  exec.threads = threads;

  std::string csv =
      "seed,nm_best,shade_best,shade_mean,nm_mre,nm_smse,shade_mre,shade_smse,improvement\n";
  ordered_json rows = ordered_json::array();
  std::size_t shade_wins = 0;
  double improvement_sum = 0.0;

  for (std::int64_t k = 0; k < seeds; ++k) {
    const auto seed = static_cast<std::uint64_t>(base_seed + k);

    CalibrationOptions nm_opts;
    nm_opts.method = Method::nm;
    nm_opts.max_fun_evals = budget;
    nm_opts.seed = seed;
    const SolutionSet nm_set = calibrate(problem, nm_opts, exec);

    CalibrationOptions sh_opts;
    sh_opts.method = Method::shade;
    sh_opts.max_fun_evals = budget;
    sh_opts.engine_fraction = 0.75;
    sh_opts.refine_best = true;
    sh_opts.seed = seed;
    const SolutionSet sh_set = calibrate(problem, sh_opts, exec);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double nm_best = nm_set.set_size() ? nm_set.best().loss : kInfLoss;
    const double sh_best = sh_set.set_size() ? sh_set.best().loss : kInfLoss;
    const double nm_mre = nm_set.set_size() ? nm_set.metrics[0].mre_value : nan;
    const double nm_smse = nm_set.set_size() ? nm_set.metrics[0].smse_value : nan;
    const double sh_mre = sh_set.set_size() ? sh_set.metrics[0].mre_value : nan;
    const double sh_smse = sh_set.set_size() ? sh_set.metrics[0].smse_value : nan;
    double sh_mean = 0.0;
    for (const Candidate& c : sh_set.solutions) sh_mean += c.loss;
    if (sh_set.set_size()) sh_mean /= static_cast<double>(sh_set.set_size());
    const double improvement = nm_best != 0.0 ? (nm_best - sh_best) / nm_best : 0.0;

    char line[512];
    std::snprintf(line, sizeof line, "%llu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<unsigned long long>(seed), nm_best, sh_best, sh_mean, nm_mre,
                  nm_smse, sh_mre, sh_smse, improvement);
    csv += line;

    ordered_json row;
    row["seed"] = seed;
    row["nm_best"] = nm_best;
    row["shade_best"] = sh_best;
    row["shade_mean"] = sh_mean;
    row["nm_mre"] = nm_mre;
    row["nm_smse"] = nm_smse;
    row["shade_mre"] = sh_mre;
    row["shade_smse"] = sh_smse;
    row["nm_set_size"] = nm_set.set_size();
    row["shade_set_size"] = sh_set.set_size();
    row["improvement"] = improvement;
    rows.push_back(std::move(row));

    if (sh_best <= nm_best) ++shade_wins;
    improvement_sum += improvement;
    std::printf("seed %llu: nm %.10g, shade %.10g (improvement %.4g)\n",
                static_cast<unsigned long long>(seed), nm_best, sh_best, improvement);
  }

  ordered_json summary;
  summary["problem"] = problem_source;
  summary["budget"] = budget;
  summary["seeds"] = seeds;
  summary["shade_best_le_nm_count"] = shade_wins;
  summary["mean_improvement"] = improvement_sum / static_cast<double>(seeds);
  summary["runs"] = std::move(rows);

  const fs::path csv_path = fs::path(out_dir) / "comparison.csv";
  const fs::path sum_path = fs::path(out_dir) / "summary.json";
  write_text_file(csv_path.string(), csv);
  write_text_file(sum_path.string(), summary.dump(2) + "\n");
  std::printf("shade best <= nm best in %zu/%lld seeds\n", shade_wins,
              static_cast<long long>(seeds));
  std::printf("wrote %s\n", csv_path.string().c_str());
  std::printf("wrote %s\n", sum_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal parameter calibration toolkit"};
  app.require_subcommand(1);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "run a calibration from a problem file");
  std::string cal_problem, cal_options, cal_out = "out", cal_run_id = "run";
  unsigned cal_threads = 1;
  OptionOverrides cal_over;
  cal->add_option("--problem", cal_problem, "problem JSON file or builtin:<name>")->required();
  cal->add_option("--options", cal_options, "calibration options JSON file");
  cal->add_option("--out", cal_out, "output directory");
  cal->add_option("--run-id", cal_run_id, "run identifier, unique per output directory");
  cal->add_option("--threads", cal_threads, "worker threads for objective evaluation");
  cal_over.attach(cal);

  // continue
  auto* cont = app.add_subcommand("continue", "continue from a saved solution set");
  std::string cont_from, cont_select = "best", cont_problem, cont_options, cont_out = "out",
              cont_run_id = "run";
  unsigned cont_threads = 1;
  OptionOverrides cont_over;
  cont->add_option("--from", cont_from, "prior solutions JSON file")->required();
  cont->add_option("--select", cont_select, "'best' or comma-separated solution indices");
  cont->add_option("--problem", cont_problem, "replacement problem file or builtin:<name>");
  cont->add_option("--options", cont_options, "calibration options JSON file");
  cont->add_option("--out", cont_out, "output directory");
  cont->add_option("--run-id", cont_run_id, "run identifier, unique per output directory");
  cont->add_option("--threads", cont_threads, "worker threads for objective evaluation");
  cont_over.attach(cont);

  // stats
  auto* stats = app.add_subcommand("stats", "print a statistics report for a solution set");
  std::string stats_solutions;
  bool stats_json = false;
  stats->add_option("--solutions", stats_solutions, "solutions JSON file")->required();
  stats->add_flag("--json", stats_json, "emit the machine-readable JSON report");

  // chart
  auto* chart = app.add_subcommand("chart", "export chart data and SVG renders");
  std::string chart_solutions, chart_name, chart_pair, chart_plot, chart_out = ".",
              chart_run_id = "run";
  chart->add_option("--solutions", chart_solutions, "solutions JSON file")->required();
  chart
      ->add_option("--chart", chart_name,
                   "density_hm | density_hm_scatter | scatter | weighted_scatter | "
                   "density_scatter | results")
      ->required();
  chart->add_option("--pair", chart_pair, "parameter pair A,B for pair charts");
  chart->add_option("--plot", chart_plot, "basic | best | set | complete (results chart)");
  chart->add_option("--out", chart_out, "output directory");
  chart->add_option("--run-id", chart_run_id, "file name prefix");

  // compare
  auto* comp = app.add_subcommand("compare", "NM vs SHADE+refinement comparison harness");
  std::string comp_problem, comp_out = "out";
  std::int64_t comp_budget = 20000, comp_seeds = 20, comp_seed = 1;
  unsigned comp_threads = 1;
  comp->add_option("--problem", comp_problem, "problem JSON file or builtin:<name>")->required();
  comp->add_option("--budget", comp_budget, "objective evaluations per method, >= 1000");
  comp->add_option("--seeds", comp_seeds, "number of seeded repetitions");
  comp->add_option("--seed", comp_seed, "first seed");
  comp->add_option("--out", comp_out, "output directory");
  comp->add_option("--threads", comp_threads, "worker threads for objective evaluation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cal->parsed()) {
      return cmd_calibrate(cal_problem, cal_options, cal_over, cal_out, cal_run_id,
                           cal_threads);
    }
    if (cont->parsed()) {
      return cmd_continue(cont_from, cont_select, cont_problem, cont_options, cont_over,
                          cont_out, cont_run_id, cont_threads);
    }
    if (stats->parsed()) return cmd_stats(stats_solutions, stats_json);
    if (chart->parsed()) {
      return cmd_chart(chart_solutions, chart_name, chart_pair, chart_plot, chart_out,
                       chart_run_id);
    }
    if (comp->parsed()) {
      return cmd_compare(comp_problem, comp_budget, comp_seeds, comp_seed, comp_out,
                         comp_threads);
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
