#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tscp/harness.hpp"

namespace tscp::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::ConfigError, message);
}

const json* optional_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  const json* v = optional_field(j, key);
  if (v == nullptr || !v->is_string()) config_error(where + "." + key + " must be a string");
  return v->get<std::string>();
}

std::size_t size_field(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  const json* v = optional_field(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_unsigned()) config_error(where + "." + key + " must be a nonnegative integer");
  return v->get<std::size_t>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string scalar_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_boolean()) return v.dump();
  if (v.is_number_float()) return v.dump();
  config_error(where + " must be a string, number or boolean");
}

conformal::SplitSpec parse_split(const json& j, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  const std::string mode = string_field(j, "mode", where);
  try {
    if (mode == "fraction") {
      const json* f = optional_field(j, "train_fraction");
      if (f == nullptr || !f->is_number()) config_error(where + ".train_fraction must be a number");
      return conformal::SplitSpec::fraction(f->get<double>());
    }
    if (mode == "context") {
      const std::size_t c = size_field(j, "context_length", 0, where);
      return conformal::SplitSpec::context(c);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(where + ": " + e.what());
  }
  config_error(where + ".mode must be 'fraction' or 'context'");
}

HorizonSpec parse_horizon(const json& j, Frequency frequency, bool strict, const std::string& where) {
  try {
    if (j.is_string()) {
      return HorizonSpec::standard(frequency, parse_horizon_label(j.get<std::string>()));
    }
    if (j.is_object()) {
      const auto label = parse_horizon_label(string_field(j, "label", where));
      const json* steps = optional_field(j, "steps");
      if (steps == nullptr) return HorizonSpec::standard(frequency, label);
      if (!steps->is_number_integer()) config_error(where + ".steps must be an integer");
      return HorizonSpec::make(frequency, label, steps->get<int>(), strict);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(where + ": " + e.what());
  }
  config_error(where + " must be a label (S/M/L) or {label, steps}");
}

std::vector<ScenarioConfig> parse_scenario(const json& j, const DatasetConfig& dataset,
                                           std::uint64_t default_seed, std::size_t index) {
  const std::string where = "scenarios[" + std::to_string(index) + "]";
  if (!j.is_object()) config_error(where + " must be an object");
  const std::string kind = string_field(j, "kind", where);
  ScenarioConfig base;
  if (kind == "windows") {
    base.kind = ScenarioConfig::Kind::Windows;
  } else if (kind == "per_series") {
    base.kind = ScenarioConfig::Kind::PerSeries;
  } else {
    config_error(where + ".kind must be 'windows' or 'per_series'");
  }

  if (const json* label = optional_field(j, "label")) {
    if (!label->is_string()) config_error(where + ".label must be a string");
    base.label = label->get<std::string>();
  }
  if (base.kind == ScenarioConfig::Kind::Windows) {
    auto& w = base.windows;
    w.window_points = size_field(j, "window_points", 0, where);
    if (w.window_points == 0) config_error(where + ".window_points must be positive");
    w.n_windows = size_field(j, "n_windows", 20, where);
    w.seed = size_field(j, "seed", default_seed, where);
    w.start = size_field(j, "start", 0, where);
    if (const json* placement = optional_field(j, "placement")) {
      const std::string p = placement->is_string() ? placement->get<std::string>() : "";
      if (p == "even") {
        w.placement = datasets::Placement::Even;
      } else if (p == "random") {
        w.placement = datasets::Placement::Random;
      } else {
        config_error(where + ".placement must be 'even' or 'random'");
      }
    }
    if (base.label.empty()) base.label = dataset.spec.name + "-" + std::to_string(w.window_points);
  } else if (base.label.empty()) {
    base.label = dataset.spec.name;
  }

  std::vector<json> horizons;
  if (const json* h = optional_field(j, "horizon")) horizons.push_back(*h);
  if (const json* hs = optional_field(j, "horizons")) {
    if (!hs->is_array()) config_error(where + ".horizons must be an array");
    for (const auto& h : *hs) horizons.push_back(h);
  }
  if (horizons.empty()) config_error(where + " needs a horizon or horizons");

  std::vector<ScenarioConfig> out;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    ScenarioConfig s = base;
    s.horizon = parse_horizon(horizons[i], dataset.spec.frequency, dataset.strict_horizons,
                              where + ".horizon");
    s.windows.horizon = s.horizon;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  const json j = json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) config_error("config must be a JSON object");

  ExperimentConfig config;

  if (const json* alpha = optional_field(j, "alpha")) {
    if (!alpha->is_number()) config_error("alpha must be a number");
    try {
      config.alpha = MiscoverageRate(alpha->get<double>());
    } catch (const Error&) {
      config_error("alpha must lie in (0, 1)");
    }
  }
  if (const json* mode = optional_field(j, "threshold_mode")) {
    if (!mode->is_string()) config_error("threshold_mode must be a string");
    config.threshold_mode = conformal::parse_threshold_mode(mode->get<std::string>());
  }
  if (const json* out = optional_field(j, "output_dir")) {
    if (!out->is_string()) config_error("output_dir must be a string");
    config.output_dir = resolve(base_dir, out->get<std::string>());
  } else {
    config.output_dir = resolve(base_dir, "results");
  }
  config.parallelism = size_field(j, "parallelism", 0, "config");
  config.seed = size_field(j, "seed", 0, "config");
  if (const json* plots = optional_field(j, "plots")) {
    if (!plots->is_boolean()) config_error("plots must be a boolean");
    config.plots = plots->get<bool>();
  }

  // dataset
  const json* ds = optional_field(j, "dataset");
  if (ds == nullptr || !ds->is_object()) config_error("dataset must be an object");
  auto& dataset = config.dataset;
  dataset.spec.name = string_field(*ds, "name", "dataset");
  std::optional<datasets::DatasetSpec> standard;
  try {
    standard = datasets::DatasetSpec::standard(dataset.spec.name);
  } catch (const Error&) {
  }
  if (const json* f = optional_field(*ds, "frequency")) {
    if (!f->is_string()) config_error("dataset.frequency must be a string");
    try {
      dataset.spec.frequency = Frequency::parse(f->get<std::string>());
    } catch (const Error& e) {
      config_error(std::string("dataset.frequency: ") + e.what());
    }
  } else if (standard) {
    dataset.spec.frequency = standard->frequency;
  } else {
    config_error("dataset.frequency is required for dataset '" + dataset.spec.name + "'");
  }
  dataset.spec.expected_series =
      size_field(*ds, "expected_series", standard ? standard->expected_series : 0, "dataset");
  dataset.spec.expected_length =
      size_field(*ds, "expected_length", standard ? standard->expected_length : 0, "dataset");
  if (const json* p = optional_field(*ds, "path")) {
    if (!p->is_string()) config_error("dataset.path must be a string");
    dataset.path = resolve(base_dir, p->get<std::string>());
  }
  if (const json* m = optional_field(*ds, "manifest")) {
    if (!m->is_string()) config_error("dataset.manifest must be a string");
    dataset.manifest = resolve(base_dir, m->get<std::string>());
  }
  if (const json* fmt = optional_field(*ds, "format")) {
    if (!fmt->is_string()) config_error("dataset.format must be a string");
    dataset.format = fmt->get<std::string>();
    if (dataset.format != "long_csv" && dataset.format != "tsf") {
      config_error("dataset.format must be 'long_csv' or 'tsf'");
    }
  }
  if (const json* strict = optional_field(*ds, "strict_horizons")) {
    if (!strict->is_boolean()) config_error("dataset.strict_horizons must be a boolean");
    dataset.strict_horizons = strict->get<bool>();
  }

  // scenarios
  const json* sc = optional_field(j, "scenarios");
  if (sc == nullptr || !sc->is_array() || sc->empty()) config_error("scenarios must be a nonempty array");
  for (std::size_t i = 0; i < sc->size(); ++i) {
    for (auto& s : parse_scenario((*sc)[i], dataset, config.seed, i)) {
      config.scenarios.push_back(std::move(s));
    }
  }

  // estimators
  const json* est = optional_field(j, "estimators");
  if (est == nullptr || !est->is_array() || est->empty()) config_error("estimators must be a nonempty array");
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < est->size(); ++i) {
    const std::string where = "estimators[" + std::to_string(i) + "]";
    const json& e = (*est)[i];
    if (!e.is_object()) config_error(where + " must be an object");
    EstimatorConfig estimator;
    const std::string name = string_field(e, "name", where);
    if (seen[name]++ > 0) config_error("estimator name '" + name + "' is not unique");
    const auto kind = forecasters::parse_forecaster_kind(string_field(e, "kind", where));
    std::map<std::string, std::string> params;
    if (const json* p = optional_field(e, "params")) {
      if (!p->is_object()) config_error(where + ".params must be an object");
      for (const auto& [key, value] : p->items()) {
        params[key] = scalar_text(value, where + ".params." + key);
      }
    }
    estimator.handle = forecasters::ForecasterHandle::make(name, kind, std::move(params));
    if (const json* split = optional_field(e, "split")) {
      estimator.split = parse_split(*split, where + ".split");
    }
    config.estimators.push_back(std::move(estimator));
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

void ExperimentConfig::override_seed(std::uint64_t new_seed) {
  seed = new_seed;
  for (auto& s : scenarios) s.windows.seed = new_seed;
}

}  // namespace tscp::harness
