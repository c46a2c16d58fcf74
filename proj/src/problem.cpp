#include "mmfit/problem.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <utility>

#include "mmfit/builtin_models.hpp"
#include "mmfit/errors.hpp"
#include "mmfit/rng.hpp"

namespace mmfit {

namespace {

std::map<std::string,
         std::function<std::shared_ptr<const PredictionModel>(const ordered_json&)>>&
registry() {
  static std::map<std::string,
                  std::function<std::shared_ptr<const PredictionModel>(const ordered_json&)>>
      models;
  return models;
}

double constant_or(const ordered_json& constants, const std::string& key, double fallback) {
  if (!constants.is_object() || !constants.contains(key)) return fallback;
  const ordered_json& v = constants.at(key);
  if (!v.is_number()) throw SchemaError("model.constants." + key + ": expected a number");
  return v.get<double>();
}

void register_builtins() {
  static bool done = false;
  if (done) return;
  done = true;
  register_model("toy_growth", [](const ordered_json& constants) {
    return std::make_shared<const GrowthCurveModel>(constant_or(constants, "zv_age", 50.0),
                                                    constant_or(constants, "t_min", 0.0));
  });
  register_model("multi_basin_growth", [](const ordered_json& constants) {
    return std::make_shared<const MultiBasinGrowthModel>(constant_or(constants, "zv_age", 50.0),
                                                         constant_or(constants, "t_min", 0.0));
  });
  register_model("himmelblau",
                 [](const ordered_json&) { return std::make_shared<const HimmelblauModel>(); });
}

// --- schema helpers -------------------------------------------------------

const ordered_json& require_field(const ordered_json& obj, const char* key,
                                  const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key + ": missing field");
  return *it;
}

std::string require_string(const ordered_json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path + ": expected a string");
  return v.get<std::string>();
}

double require_number(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path + ": expected a number");
  return v.get<double>();
}

bool require_bool(const ordered_json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path + ": expected a boolean");
  return v.get<bool>();
}

std::vector<double> require_number_array(const ordered_json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(require_number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

void register_model(
    const std::string& id,
    std::function<std::shared_ptr<const PredictionModel>(const ordered_json&)> factory) {
  registry()[id] = std::move(factory);
}

std::shared_ptr<const PredictionModel> make_model(const std::string& id,
                                                  const ordered_json& constants) {
  register_builtins();
  auto it = registry().find(id);
  if (it == registry().end()) throw SchemaError("model.id: unknown model '" + id + "'");
  return it->second(constants);
}

ordered_json problem_to_json(const Problem& problem) {
  ordered_json doc;
  doc["schema_version"] = "1";
  doc["model"] = problem.model_json;

  ordered_json params = ordered_json::array();
  const ParameterSpace& sp = problem.space;
  for (std::size_t i = 0; i < sp.full_size(); ++i) {
    ordered_json p;
    p["name"] = sp.names()[i];
    p["lower"] = sp.lower()[i];
    p["upper"] = sp.upper()[i];
    p["free"] = static_cast<bool>(sp.free_mask()[i]);
    p["initial"] = problem.initial_full[i];
    params.push_back(std::move(p));
  }
  doc["parameters"] = std::move(params);

  ordered_json datasets = ordered_json::array();
  for (const Dataset& ds : problem.data) {
    ordered_json d;
    d["id"] = ds.id;
    d["kind"] = ds.kind == DatasetKind::uni_variate ? "uni_variate" : "zero_variate";
    if (ds.kind == DatasetKind::uni_variate) d["x"] = ds.x;
    d["d"] = ds.d;
    d["w"] = ds.w;
    datasets.push_back(std::move(d));
  }
  doc["datasets"] = std::move(datasets);
  return doc;
}

Problem problem_from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw SchemaError("problem: expected an object");
  const std::string version =
      require_string(require_field(doc, "schema_version", "problem"), "problem.schema_version");
  if (version != "1") {
    throw SchemaError("problem.schema_version: unsupported version '" + version + "'");
  }

  const ordered_json& model_spec = require_field(doc, "model", "problem");
  const std::string model_id =
      require_string(require_field(model_spec, "id", "problem.model"), "problem.model.id");
  ordered_json constants = ordered_json::object();
  if (model_spec.contains("constants")) {
    if (!model_spec.at("constants").is_object()) {
      throw SchemaError("problem.model.constants: expected an object");
    }
    constants = model_spec.at("constants");
  }

  const ordered_json& params = require_field(doc, "parameters", "problem");
  if (!params.is_array() || params.empty()) {
    throw SchemaError("problem.parameters: expected a non-empty array");
  }
  std::vector<std::string> names;
  std::vector<double> lower, upper, initial;
  std::vector<bool> free_mask;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string path = "problem.parameters[" + std::to_string(i) + "]";
    const ordered_json& p = params[i];
    names.push_back(require_string(require_field(p, "name", path), path + ".name"));
    const bool is_free = require_bool(require_field(p, "free", path), path + ".free");
    free_mask.push_back(is_free);
    const double init = require_number(require_field(p, "initial", path), path + ".initial");
    initial.push_back(init);
    // Bounds are required for free parameters; fixed ones may omit them.
    if (is_free || p.contains("lower")) {
      lower.push_back(require_number(require_field(p, "lower", path), path + ".lower"));
    } else {
      lower.push_back(init);
    }
    if (is_free || p.contains("upper")) {
      upper.push_back(require_number(require_field(p, "upper", path), path + ".upper"));
    } else {
      upper.push_back(init);
    }
    if (is_free && !(initial[i] >= lower[i] && initial[i] <= upper[i])) {
      throw SchemaError(path + ".initial: outside [lower, upper]");
    }
  }

  const ordered_json& datasets_spec = require_field(doc, "datasets", "problem");
  if (!datasets_spec.is_array() || datasets_spec.empty()) {
    throw SchemaError("problem.datasets: expected a non-empty array");
  }
  std::vector<Dataset> datasets;
  for (std::size_t i = 0; i < datasets_spec.size(); ++i) {
    const std::string path = "problem.datasets[" + std::to_string(i) + "]";
    const ordered_json& d = datasets_spec[i];
    const std::string id = require_string(require_field(d, "id", path), path + ".id");
    const std::string kind = require_string(require_field(d, "kind", path), path + ".kind");
    std::vector<double> dv =
        require_number_array(require_field(d, "d", path), path + ".d");
    std::vector<double> wv;
    if (d.contains("w")) wv = require_number_array(d.at("w"), path + ".w");
    try {
      if (kind == "uni_variate") {
        std::vector<double> xv = require_number_array(require_field(d, "x", path), path + ".x");
        datasets.push_back(Dataset::uni_variate(id, std::move(xv), std::move(dv), std::move(wv)));
      } else if (kind == "zero_variate") {
        datasets.push_back(Dataset::zero_variate(id, std::move(dv), std::move(wv)));
      } else {
        throw SchemaError(path + ".kind: expected 'zero_variate' or 'uni_variate'");
      }
    } catch (const SchemaError&) {
      throw;
    } catch (const InputError& e) {
      throw SchemaError(path + ": " + e.what());
    }
  }

  ordered_json model_json;
  model_json["id"] = model_id;
  model_json["constants"] = constants;

  Problem out{ParameterSpace(names, lower, upper, free_mask, initial),
              DatasetCollection(std::move(datasets)),
              make_model(model_id, constants),
              std::move(model_json),
              initial};
  return out;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file '" + path + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("problem file '" + path + "': " + e.what());
  }
  return problem_from_json(doc);
}

Problem resolve_problem(const std::string& spec) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return make_builtin_problem(spec.substr(prefix.size()));
  return load_problem(spec);
}

namespace {

// Synthetic growth observations shared by the two growth fixtures. The noise
// seed is fixed so every call reproduces the same datasets.
std::vector<Dataset> make_growth_data() {
  const double w_max = 120.0, r = 0.05, t0 = -2.0, b = 3.0;
  const double noise_sd = 2.0;
  Rng rng(0x5eed0001u);

  std::vector<double> x, d;
  for (int t = 0; t <= 140; t += 10) {
    x.push_back(static_cast<double>(t));
    const double base = 1.0 - std::exp(-r * (t - t0));
    d.push_back(w_max * std::pow(base, b) + rng.normal(0.0, noise_sd));
  }
  const double at50 = w_max * std::pow(1.0 - std::exp(-r * (50.0 - t0)), b);
  std::vector<double> zv = {at50 + rng.normal(0.0, noise_sd)};

  std::vector<Dataset> out;
  out.push_back(Dataset::uni_variate("growth", std::move(x), std::move(d)));
  out.push_back(Dataset::zero_variate("size_at_age", std::move(zv)));
  return out;
}

Problem finish_builtin(const std::string& model_id, std::vector<std::string> names,
                       std::vector<double> lower, std::vector<double> upper,
                       std::vector<double> initial, std::vector<Dataset> datasets) {
  ordered_json model_json;
  model_json["id"] = model_id;
  model_json["constants"] = ordered_json::object();
  std::vector<bool> free_mask(names.size(), true);
  return Problem{ParameterSpace(std::move(names), std::move(lower), std::move(upper),
                                free_mask, initial),
                 DatasetCollection(std::move(datasets)),
                 make_model(model_id, ordered_json::object()),
                 std::move(model_json),
                 initial};
}

}  // namespace

Problem make_builtin_problem(const std::string& name) {
  if (name == "toy_growth") {
    return finish_builtin("toy_growth", {"w_max", "r", "t0", "b"},
                          {50.0, 0.005, -10.0, 0.5}, {300.0, 0.5, 5.0, 6.0},
                          {100.0, 0.1, 0.0, 1.0}, make_growth_data());
  }
  if (name == "multi_basin_growth") {
    return finish_builtin("multi_basin_growth", {"w_max", "s", "t0", "b"},
                          {50.0, -0.7, -10.0, 0.5}, {300.0, 0.7, 5.0, 6.0},
                          {100.0, 0.1, 0.0, 1.0}, make_growth_data());
  }
  if (name == "himmelblau") {
    std::vector<Dataset> data;
    data.push_back(Dataset::zero_variate("surface", {1.0}));
    return finish_builtin("himmelblau", {"x", "y"}, {-6.0, -6.0}, {6.0, 6.0}, {0.0, 0.0},
                          std::move(data));
  }
  throw InputError("unknown builtin problem '" + name +
                   "' (expected toy_growth, multi_basin_growth or himmelblau)");
}

}  // namespace mmfit
