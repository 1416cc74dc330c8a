#pragma once

#include "spde/model.hpp"
#include "spde/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spde {

// Resolved run configuration. The JSON layout groups these into blocks
// (model / initial / solver / experiment / output) under a schema_version;
// unknown keys anywhere are rejected so typos cannot silently change a run.
struct RunConfig {
  int schema_version = 1;

  // model
  int n_modes = 64;
  double nu = 1.0;
  std::string noise_family = "power";  // "power": alpha_k ~ k^{-decay}, unit trace; "off"
  double noise_decay = 4.0;
  double alpha_index = 1.0;
  double kappa = 0.02;

  // initial data, in scaled-variable units: u(0) = eps*(a0 e_1 + tail)
  double a0 = 0.05;
  std::vector<double> tail0;  // stable-mode coefficients starting at the 2nd mode
  // "theorem": require ||u(0)||_alpha <= eps^{kappa/3}
  // "tail":    require ||psi(0)||_alpha <= eps^{-kappa/3}
  // "unchecked": no admissibility constraint
  std::string initial_regime = "theorem";

  // solver
  double dt_fast = 0.05;
  double T0 = 1.0;
  double blowup_guard = 1e6;
  long long record_stride = 50;

  // experiment
  std::vector<double> epsilons = {0.05};
  int ensemble = 1;
  uint64_t master_seed = 0;
  double slope_floor = 1.6;  // scaling verdict gate on the CI lower bound

  // output
  std::string out_dir = ".";
  bool write_csv = true;
  bool write_json = true;

  void validate() const;  // throws std::invalid_argument
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& filename);

// Canonical JSON for the resolved config, stable key order. parse_config
// accepts its own output, and also a result summary that embeds the config
// under a top-level "config" key, so summaries re-run as configs.
std::string dump_config(const RunConfig& cfg);

SolverConfig solver_config(const RunConfig& cfg);
ModelSpec build_model(const RunConfig& cfg, double epsilon);

// Unscaled u(0) for the given epsilon; enforces the configured admissibility
// regime and throws std::invalid_argument on violation.
std::vector<double> initial_field(const RunConfig& cfg, double epsilon);

}  // namespace spde
