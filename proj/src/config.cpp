#include "spde/config.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spde {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

void reject_unknown(const json& obj, const char* block,
                    std::initializer_list<const char*> known) {
  if (!obj.is_object()) bad(std::string(block) + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad("unknown key '" + item.key() + "' in " + block);
  }
}

double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(std::string(key) + " must be a number");
  return v.get<double>();
}

long long get_int(const json& obj, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(std::string(key) + " must be an integer");
  return v.get<long long>();
}

std::string get_str(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad(std::string(key) + " must be a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad(std::string(key) + " must be a boolean");
  return v.get<bool>();
}

}  // namespace

void RunConfig::validate() const {
  if (schema_version != 1) bad("unsupported schema_version");
  if (n_modes < 2) bad("n_modes must be at least 2");
  if (!std::isfinite(nu)) bad("nu must be finite");
  if (noise_family != "power" && noise_family != "off")
    bad("noise_family must be 'power' or 'off'");
  if (noise_family == "power" && !(noise_decay > 1.0))
    bad("noise_decay must exceed 1 for a trace-class covariance");
  if (!(alpha_index >= 0.0)) bad("alpha_index must be nonnegative");
  if (!(kappa > 0.0) || !(kappa < 1.0 / 19.0)) bad("kappa must lie in (0, 1/19)");
  if (!std::isfinite(a0)) bad("a0 must be finite");
  if (static_cast<int>(tail0.size()) > n_modes - 1)
    bad("tail has more entries than stable modes");
  for (double t : tail0)
    if (!std::isfinite(t)) bad("tail entries must be finite");
  if (initial_regime != "theorem" && initial_regime != "tail" &&
      initial_regime != "unchecked")
    bad("initial_regime must be theorem|tail|unchecked");
  SolverConfig sc = solver_config(*this);
  sc.validate();
  if (epsilons.empty()) bad("epsilons must be nonempty");
  for (double e : epsilons)
    if (!(e > 0.0) || !(e < 1.0)) bad("epsilon values must lie in (0,1)");
  if (ensemble < 1) bad("ensemble must be positive");
  if (!(slope_floor > 0.0)) bad("slope_floor must be positive");
  if (out_dir.empty()) bad("output directory must be nonempty");
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, /*ignore_comments=*/false);
  } catch (const json::parse_error& e) {
    bad(std::string("not valid json: ") + e.what());
  }
  if (!root.is_object()) bad("top level must be an object");
  // a result summary embeds the config it ran from; accept it directly
  if (root.contains("config") && root.contains("command")) root = root.at("config");

  reject_unknown(root, "top level",
                 {"schema_version", "model", "initial", "solver", "experiment",
                  "output"});
  RunConfig cfg;
  if (!root.contains("schema_version")) bad("schema_version is required");
  cfg.schema_version = static_cast<int>(get_int(root, "schema_version", 1));

  if (root.contains("model")) {
    const json& m = root.at("model");
    reject_unknown(m, "model",
                   {"n_modes", "nu", "noise_family", "noise_decay", "alpha_index",
                    "kappa"});
    cfg.n_modes = static_cast<int>(get_int(m, "n_modes", cfg.n_modes));
    cfg.nu = get_num(m, "nu", cfg.nu);
    cfg.noise_family = get_str(m, "noise_family", cfg.noise_family);
    cfg.noise_decay = get_num(m, "noise_decay", cfg.noise_decay);
    cfg.alpha_index = get_num(m, "alpha_index", cfg.alpha_index);
    cfg.kappa = get_num(m, "kappa", cfg.kappa);
  }
  if (root.contains("initial")) {
    const json& b = root.at("initial");
    reject_unknown(b, "initial", {"a0", "tail", "regime"});
    cfg.a0 = get_num(b, "a0", cfg.a0);
    if (b.contains("tail")) {
      const json& t = b.at("tail");
      if (!t.is_array()) bad("initial.tail must be an array");
      cfg.tail0.clear();
      for (const json& v : t) {
        if (!v.is_number()) bad("initial.tail entries must be numbers");
        cfg.tail0.push_back(v.get<double>());
      }
    }
    cfg.initial_regime = get_str(b, "regime", cfg.initial_regime);
  }
  if (root.contains("solver")) {
    const json& s = root.at("solver");
    reject_unknown(s, "solver", {"dt_fast", "T0", "blowup_guard", "record_stride"});
    cfg.dt_fast = get_num(s, "dt_fast", cfg.dt_fast);
    cfg.T0 = get_num(s, "T0", cfg.T0);
    cfg.blowup_guard = get_num(s, "blowup_guard", cfg.blowup_guard);
    cfg.record_stride = get_int(s, "record_stride", cfg.record_stride);
  }
  if (root.contains("experiment")) {
    const json& e = root.at("experiment");
    reject_unknown(e, "experiment",
                   {"epsilons", "ensemble", "master_seed", "slope_floor"});
    if (e.contains("epsilons")) {
      const json& l = e.at("epsilons");
      if (!l.is_array() || l.empty()) bad("experiment.epsilons must be a nonempty array");
      cfg.epsilons.clear();
      for (const json& v : l) {
        if (!v.is_number()) bad("experiment.epsilons entries must be numbers");
        cfg.epsilons.push_back(v.get<double>());
      }
    }
    cfg.ensemble = static_cast<int>(get_int(e, "ensemble", cfg.ensemble));
    if (e.contains("master_seed")) {
      const json& v = e.at("master_seed");
      if (!v.is_number_unsigned() && !v.is_number_integer())
        bad("master_seed must be an integer");
      cfg.master_seed = v.get<uint64_t>();
    }
    cfg.slope_floor = get_num(e, "slope_floor", cfg.slope_floor);
  }
  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown(o, "output", {"directory", "csv", "json"});
    cfg.out_dir = get_str(o, "directory", cfg.out_dir);
    cfg.write_csv = get_bool(o, "csv", cfg.write_csv);
    cfg.write_json = get_bool(o, "json", cfg.write_json);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& filename) {
  std::ifstream in(filename, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open " + filename);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  json root;
  root["schema_version"] = cfg.schema_version;
  json m;
  m["n_modes"] = cfg.n_modes;
  m["nu"] = cfg.nu;
  m["noise_family"] = cfg.noise_family;
  m["noise_decay"] = cfg.noise_decay;
  m["alpha_index"] = cfg.alpha_index;
  m["kappa"] = cfg.kappa;
  root["model"] = m;
  json b;
  b["a0"] = cfg.a0;
  b["tail"] = cfg.tail0;
  b["regime"] = cfg.initial_regime;
  root["initial"] = b;
  json s;
  s["dt_fast"] = cfg.dt_fast;
  s["T0"] = cfg.T0;
  s["blowup_guard"] = cfg.blowup_guard;
  s["record_stride"] = cfg.record_stride;
  root["solver"] = s;
  json e;
  e["epsilons"] = cfg.epsilons;
  e["ensemble"] = cfg.ensemble;
  e["master_seed"] = cfg.master_seed;
  e["slope_floor"] = cfg.slope_floor;
  root["experiment"] = e;
  json o;
  o["directory"] = cfg.out_dir;
  o["csv"] = cfg.write_csv;
  o["json"] = cfg.write_json;
  root["output"] = o;
  return root.dump(2) + "\n";
}

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig sc;
  sc.dt_fast = cfg.dt_fast;
  sc.T0 = cfg.T0;
  sc.blowup_guard = cfg.blowup_guard;
  sc.record_stride = cfg.record_stride;
  return sc;
}

ModelSpec build_model(const RunConfig& cfg, double epsilon) {
  ModelSpec m = make_gl_model(cfg.n_modes, cfg.nu, epsilon, cfg.kappa, cfg.noise_decay);
  if (cfg.noise_family == "off") m.noise_spectrum.assign(cfg.n_modes, 0.0);
  m.alpha_index = cfg.alpha_index;
  m.validate();
  return m;
}

std::vector<double> initial_field(const RunConfig& cfg, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw std::invalid_argument("initial_field: epsilon must lie in (0,1)");
  std::vector<double> u0(cfg.n_modes, 0.0);
  u0[0] = epsilon * cfg.a0;
  for (size_t i = 0; i < cfg.tail0.size(); ++i) u0[i + 1] = epsilon * cfg.tail0[i];

  auto spec = make_gl_spectrum(cfg.n_modes);
  if (cfg.initial_regime == "theorem") {
    const double bound = std::pow(epsilon, cfg.kappa / 3.0);
    const double norm = alpha_norm_raw(*spec, u0.data(), cfg.n_modes, cfg.alpha_index);
    if (norm > bound)
      throw std::invalid_argument(
          "initial_field: ||u(0)|| exceeds the admissible size for this epsilon");
  } else if (cfg.initial_regime == "tail") {
    std::vector<double> psi = u0;
    psi[0] = 0.0;
    for (double& v : psi) v /= epsilon;
    const double bound = std::pow(epsilon, -cfg.kappa / 3.0);
    const double norm = alpha_norm_raw(*spec, psi.data(), cfg.n_modes, cfg.alpha_index);
    if (norm > bound)
      throw std::invalid_argument(
          "initial_field: tail norm exceeds the admissible size for this epsilon");
  }
  return u0;
}

}  // namespace spde
