#pragma once

#include "spde/analysis.hpp"
#include "spde/config.hpp"
#include "spde/noise.hpp"
#include "spde/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spde {

// Summary statistics of one coupled run inside an ensemble sweep.
struct PathResult {
  int eps_index = 0;
  int path_index = 0;
  uint64_t seed = 0;
  double error = 0.0;  // sup of the approximation functional over every step
  double sup_i = 0.0, sup_j = 0.0, sup_k = 0.0, int_k = 0.0;
  double sup_residual = 0.0;
  double identity_gap = 0.0;
  double tau_star = 0.0;
  bool tau_triggered = false;
  bool omega_ok = false;
  bool blowup = false;
};

struct SweepResult {
  std::vector<PathResult> paths;  // ordered by (eps index, path index)

  // per-epsilon ensemble statistics, always present
  std::vector<double> err_median, err_p90, err_max, exceed_frac;
  std::vector<double> omega_fraction;  // event conditions held throughout
  std::vector<double> stay_fraction;   // exit threshold never crossed

  // slope fits, present when the epsilon list satisfies the fit preconditions
  std::optional<ScalingReport> error_report;
  std::optional<ScalingReport> report_sup_i;
  std::optional<ScalingReport> report_sup_j;
  std::optional<ScalingReport> report_int_k;

  bool synthetic = false;
};

// Full experiment: ensemble × epsilon sweep, fanned out over a worker pool.
// Jobs are merged into slots keyed by (eps index, path index), so the output
// is byte-identical for any thread count. Per-path seeds derive from the
// master seed and the job indices.
SweepResult run_sweep(const RunConfig& cfg, int threads);

// Plumbing check: injects errors = 0.5 eps^2 without touching the solver.
SweepResult run_sweep_synthetic(const RunConfig& cfg);

// One coupled trajectory at the given epsilon; the seed is used directly.
TrajectoryRecord run_single(const RunConfig& cfg, double epsilon, uint64_t seed);

// Deterministic emitters (LF endings, shortest round-trip number format).
std::string scaling_csv(const SweepResult& r, const RunConfig& cfg);
std::string scaling_json(const RunConfig& cfg, const SweepResult& r);
std::string trajectory_csv(const TrajectoryRecord& traj);
std::string simulate_json(const RunConfig& cfg, const TrajectoryRecord& traj,
                          uint64_t seed, double epsilon, double dt_actual);
std::string decomposition_csv(const TrajectoryRecord& traj,
                              const DecompositionRecord& dec);
std::string decomposition_json(const RunConfig& cfg, const TrajectoryRecord& traj,
                               const DecompositionRecord& dec, uint64_t seed,
                               double epsilon);
std::string coefficient_csv(const RunConfig& cfg);

}  // namespace spde
