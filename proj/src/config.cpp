#include "fmpols/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fmpols {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) config_error(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key + ": " + e.what());
  }
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) config_error(where + ": expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  try {
    rows = j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    config_error(where + ": " + e.what());
  }
  const std::size_t cols = rows.front().size();
  Vec data;
  for (const auto& r : rows) {
    if (r.size() != cols || cols == 0) config_error(where + ": ragged matrix");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Mat(rows.size(), cols, std::move(data));
}

json opt_mat(const std::optional<Mat>& m) { return m ? mat_to_json(*m) : json(nullptr); }

std::optional<Mat> opt_mat_from(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return mat_from_json(j.at(key), where + "." + key);
}

json system_to_json(const SystemSpec& s) {
  for (const std::string& name : builtin_system_names()) {
    if (name != s.name) continue;
    const SystemSpec b = builtin_system(name);
    if (b.A == s.A && b.C == s.C && b.jordan_r == s.jordan_r && b.kappa_A == s.kappa_A) return name;
  }
  return json{{"name", s.name},         {"A", mat_to_json(s.A)},        {"C", mat_to_json(s.C)},
              {"jordan_r", s.jordan_r}, {"kappa_A", s.kappa_A}, {"spectrum", std::string(to_string(s.spectrum))}};
}

SystemSpec system_from_json(const json& j) {
  if (j.is_string()) return builtin_system(j.get<std::string>());
  check_keys(j, {"name", "A", "C", "jordan_r", "kappa_A", "spectrum"}, "system");
  if (!j.contains("A") || !j.contains("C")) config_error("system: A and C are required");
  return make_system(get_or<std::string>(j, "name", "inline", "system"), mat_from_json(j.at("A"), "system.A"),
                     mat_from_json(j.at("C"), "system.C"), get_or<int>(j, "jordan_r", 1, "system"),
                     get_or<double>(j, "kappa_A", 1.0, "system"),
                     spectrum_tag_from_string(get_or<std::string>(j, "spectrum", "stable", "system")));
}

json noise_to_json(const NoiseModel& m) {
  return json{{"kind", std::string(to_string(m.kind))},
              {"bias_w", m.bias_w},
              {"amp_w", m.amp_w},
              {"freq_w", m.freq_w},
              {"uniform_w", m.uniform_w},
              {"bias_v", m.bias_v},
              {"amp_v", m.amp_v},
              {"freq_v", m.freq_v},
              {"uniform_v", m.uniform_v}};
}

NoiseModel noise_from_json(const json& j, std::size_t n, std::size_t p) {
  check_keys(j, {"kind", "bias_w", "amp_w", "freq_w", "uniform_w", "bias_v", "amp_v", "freq_v", "uniform_v"}, "noise");
  NoiseModel m;
  m.kind = noise_kind_from_string(get_or<std::string>(j, "kind", "nonstochastic", "noise"));
  m.bias_w = get_or<Vec>(j, "bias_w", Vec(n, 0.0), "noise");
  m.amp_w = get_or<Vec>(j, "amp_w", Vec(n, 0.0), "noise");
  m.freq_w = get_or<double>(j, "freq_w", m.freq_w, "noise");
  m.uniform_w = get_or<double>(j, "uniform_w", 0.0, "noise");
  m.bias_v = get_or<Vec>(j, "bias_v", Vec(p, 0.0), "noise");
  m.amp_v = get_or<Vec>(j, "amp_v", Vec(p, 0.0), "noise");
  m.freq_v = get_or<double>(j, "freq_v", m.freq_v, "noise");
  m.uniform_v = get_or<double>(j, "uniform_v", 0.0, "noise");
  return m;
}

json hint_to_json(const HintSpec& h) {
  return json{{"kind", std::string(to_string(h.kind))},
              {"gamma_tilde", h.gamma_tilde},
              {"gain", opt_mat(h.gain)},
              {"family", h.family},
              {"roots", h.roots},
              {"order", h.order},
              {"theta", h.theta},
              {"coeffs", h.coeffs}};
}

HintSpec hint_from_json(const json& j, const std::string& where) {
  check_keys(j, {"kind", "gamma_tilde", "gain", "family", "roots", "order", "theta", "coeffs"}, where);
  HintSpec h;
  h.kind = hint_spec_kind_from_string(get_or<std::string>(j, "kind", "zero", where));
  h.gamma_tilde = get_or<double>(j, "gamma_tilde", h.gamma_tilde, where);
  h.gain = opt_mat_from(j, "gain", where);
  h.family = get_or<std::string>(j, "family", h.family, where);
  h.roots = get_or<std::vector<double>>(j, "roots", {}, where);
  h.order = get_or<int>(j, "order", h.order, where);
  h.theta = get_or<double>(j, "theta", h.theta, where);
  h.coeffs = get_or<std::vector<double>>(j, "coeffs", {}, where);
  return h;
}

json variant_to_json(const Variant& v) {
  return json{{"label", v.label},
              {"predictor", std::string(to_string(v.predictor))},
              {"hint", hint_to_json(v.hint)},
              {"H", v.H ? json(*v.H) : json(nullptr)},
              {"lambda", v.lambda ? json(*v.lambda) : json(nullptr)},
              {"hinf_level", v.hinf_level},
              {"gain", opt_mat(v.gain)}};
}

Variant variant_from_json(const json& j, const std::string& where) {
  check_keys(j, {"label", "predictor", "hint", "H", "lambda", "hinf_level", "gain"}, where);
  Variant v;
  v.label = get_or<std::string>(j, "label", "", where);
  if (v.label.empty()) config_error(where + ": label is required");
  v.predictor = predictor_kind_from_string(get_or<std::string>(j, "predictor", "fmpols", where));
  if (j.contains("hint") && !j.at("hint").is_null()) v.hint = hint_from_json(j.at("hint"), where + ".hint");
  if (j.contains("H") && !j.at("H").is_null()) v.H = get_or<int>(j, "H", 0, where);
  if (j.contains("lambda") && !j.at("lambda").is_null()) v.lambda = get_or<double>(j, "lambda", 0.0, where);
  v.hinf_level = get_or<double>(j, "hinf_level", v.hinf_level, where);
  v.gain = opt_mat_from(j, "gain", where);
  return v;
}

json comparator_to_json(const ComparatorSpec& c) {
  return json{{"kind", std::string(to_string(c.kind))},
              {"grid",
               {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"steps", c.grid.steps}, {"kappa", c.grid.kappa}, {"gamma", c.grid.gamma}}},
              {"level", c.level},
              {"gain", opt_mat(c.gain)}};
}

ComparatorSpec comparator_from_json(const json& j) {
  check_keys(j, {"kind", "grid", "level", "gain"}, "comparator");
  ComparatorSpec c;
  c.kind = comparator_kind_from_string(get_or<std::string>(j, "kind", "none", "comparator"));
  if (j.contains("grid") && !j.at("grid").is_null()) {
    const json& g = j.at("grid");
    check_keys(g, {"lo", "hi", "steps", "kappa", "gamma"}, "comparator.grid");
    c.grid.lo = get_or<double>(g, "lo", c.grid.lo, "comparator.grid");
    c.grid.hi = get_or<double>(g, "hi", c.grid.hi, "comparator.grid");
    c.grid.steps = get_or<int>(g, "steps", c.grid.steps, "comparator.grid");
    c.grid.kappa = get_or<double>(g, "kappa", c.grid.kappa, "comparator.grid");
    c.grid.gamma = get_or<double>(g, "gamma", c.grid.gamma, "comparator.grid");
  }
  c.level = get_or<double>(j, "level", c.level, "comparator");
  c.gain = opt_mat_from(j, "gain", "comparator");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json variants = json::array();
  for (const Variant& v : c.variants) variants.push_back(variant_to_json(v));
  return json{{"name", c.name},
              {"system", system_to_json(c.system)},
              {"noise", noise_to_json(c.noise)},
              {"T", c.T},
              {"H", c.H},
              {"lambda", c.lambda},
              {"hint", hint_to_json(c.hint)},
              {"variants", variants},
              {"comparator", comparator_to_json(c.comparator)},
              {"trials", c.trials},
              {"seed", c.seed},
              {"emit_trials", c.emit_trials},
              {"notes", c.notes}};
}

ExperimentConfig from_json(const json& j) {
  check_keys(j,
             {"name", "system", "noise", "T", "H", "lambda", "hint", "variants", "comparator", "trials", "seed",
              "emit_trials", "notes"},
             "config");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name, "config");
  if (!j.contains("system")) config_error("config: system is required");
  c.system = system_from_json(j.at("system"));
  c.noise = j.contains("noise") ? noise_from_json(j.at("noise"), c.system.n(), c.system.p())
                                : zero_noise(c.system.n(), c.system.p());
  c.T = get_or<int>(j, "T", c.T, "config");
  c.H = get_or<int>(j, "H", c.H, "config");
  c.lambda = get_or<double>(j, "lambda", c.lambda, "config");
  if (j.contains("hint") && !j.at("hint").is_null()) c.hint = hint_from_json(j.at("hint"), "hint");
  if (j.contains("variants") && !j.at("variants").is_null()) {
    if (!j.at("variants").is_array()) config_error("variants: expected an array");
    for (std::size_t i = 0; i < j.at("variants").size(); ++i) {
      c.variants.push_back(variant_from_json(j.at("variants")[i], "variants." + std::to_string(i)));
    }
  }
  if (j.contains("comparator") && !j.at("comparator").is_null()) c.comparator = comparator_from_json(j.at("comparator"));
  c.trials = get_or<int>(j, "trials", c.trials, "config");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "config");
  c.emit_trials = get_or<bool>(j, "emit_trials", c.emit_trials, "config");
  c.notes = get_or<std::vector<std::string>>(j, "notes", {}, "config");
  c.validate();
  return c;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

ExperimentConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

ExperimentConfig apply_overrides(const ExperimentConfig& config, std::span<const std::string> overrides) {
  json j = to_json(config);
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) config_error("override '" + ov + "': expected key=value");
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      json* child = nullptr;
      if (node->is_object()) {
        if (!node->contains(part)) config_error("override: unknown key '" + key + "'");
        child = &(*node)[part];
      } else if (node->is_array()) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(part);
        } catch (const std::exception&) {
          config_error("override: '" + part + "' is not an index in '" + key + "'");
        }
        if (idx >= node->size()) config_error("override: index out of range in '" + key + "'");
        child = &(*node)[idx];
      } else {
        config_error("override: '" + key + "' descends into a scalar");
      }
      if (dot == std::string::npos) {
        *child = value;
        break;
      }
      node = child;
      start = dot + 1;
    }
  }
  return from_json(j);
}

}  // namespace fmpols
