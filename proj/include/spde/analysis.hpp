#pragma once

#include "spde/model.hpp"
#include "spde/noise.hpp"
#include "spde/solver.hpp"

#include <vector>

namespace spde {

// Offline reconstruction of the stable-space decomposition psi = Q + I + J + K
// from a trajectory recorded at full stride plus the noise path that drove it.
// Two reconstructions are kept: one repeats the solver's own left-endpoint
// quadrature (defect at roundoff level), one replaces the drift weights by the
// exact one-step integral of the semigroup kernel, whose defect against the
// stored psi shrinks linearly with the step size.
struct DecompositionRecord {
  std::vector<double> slow_times;
  std::vector<std::vector<double>> q_tail;  // scaled variable, stable modes
  std::vector<std::vector<double>> part_i;
  std::vector<std::vector<double>> part_j;
  std::vector<std::vector<double>> part_k;

  // sup-norms over records in [0, tau*]
  double sup_q = 0.0, sup_i = 0.0, sup_j = 0.0, sup_k = 0.0;
  double int_k = 0.0;  // slow-time integral of ||K||_alpha over [0, tau*]
  double tau_star = 0.0;

  double defect = 0.0;        // scheme-weight reconstruction vs stored psi
  double defect_exact = 0.0;  // exact drift-kernel weights vs stored psi
};

// Requires record_stride == 1 and the exact path the run consumed (verified
// against the stored noise checksum). Throws std::invalid_argument otherwise.
DecompositionRecord decompose_psi(const TrajectoryRecord& traj, const NoisePath& path,
                                  const ModelSpec& model);

// Recomputes the reduced-equation defect on the kernel from the stored states
// and the same increments: the cubic mismatch integrated in slow time plus the
// stochastic term (projected noise minus the linearised amplitude noise).
// Returns one value per record, starting at 0. Preconditions as decompose_psi.
std::vector<double> residual_R(const TrajectoryRecord& traj, const NoisePath& path,
                               const ModelSpec& model);

// sup over records of ||u - eps b e_1 - eps Q||_alpha, recomputed from the
// stored series with the given norm index.
double approximation_error(const TrajectoryRecord& traj, double alpha);

// First recorded slow time where ||a||_alpha or ||psi||_alpha exceeds
// eps^{-kappa}; T0 if no record does.
double tau_star(const TrajectoryRecord& traj, double kappa, double epsilon, double T0);

// Fraction of trajectories whose records satisfy, up to and including the
// tau* trigger, all three event conditions: ||a|| < eps^{-kappa/2},
// ||psi||_alpha < eps^{-kappa/2}, error < eps^{2-19 kappa}.
double omega_star_fraction(const std::vector<TrajectoryRecord>& ensemble, double kappa,
                           double epsilon);

struct ScalingReport {
  std::vector<double> epsilons;
  std::vector<int> n_paths;
  std::vector<double> err_median, err_p90, err_max;
  std::vector<double> exceed_frac;  // fraction of errors above eps^{2-19 kappa}

  double slope = 0.0;      // least squares on (log eps, log median error)
  double intercept = 0.0;
  double residual = 0.0;   // rms of the fit residuals
  double ci_low = 0.0;     // bootstrap percentile interval for the slope
  double ci_high = 0.0;
  double kappa = 0.0;
  int bootstrap_resamples = 0;
};

// Requires >= 4 distinct epsilon values spanning at least a factor 4 and a
// nonempty, positive-median error sample per epsilon. The bootstrap (200
// resamples, fixed internal seed) is deterministic.
ScalingReport fit_scaling(const std::vector<double>& epsilons,
                          const std::vector<std::vector<double>>& errors, double kappa);

// Quantile of a sample: q = 0.5 uses the midpoint convention, other q the
// nearest-rank rule. Exposed for the report emitters.
double sample_quantile(std::vector<double> values, double q);

}  // namespace spde
