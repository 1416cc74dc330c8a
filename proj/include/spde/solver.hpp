#pragma once

#include <cstdint>
#include <vector>

#include "spde/model.hpp"
#include "spde/noise.hpp"
#include "spde/spectrum.hpp"

namespace spde {

struct SolverConfig {
  double dt_fast = 0.05;      // requested fast-scale step; actual step rounds down
  double T0 = 1.0;            // slow-time horizon, fast horizon is T0 / eps^2
  double blowup_guard = 1e6;  // alpha-norm threshold declaring finite-time blowup
  long long record_stride = 50;

  void validate() const;  // throws std::invalid_argument
};

// Number of steps covering the fast horizon T0 / eps^2 with a step no larger
// than requested: n = ceil(horizon / dt), actual dt = horizon / n.
long long plan_steps(double T0, double epsilon, double dt_request, double& dt_actual);

// One exponential Euler-Maruyama step on the mild form,
//   u+ = e^{A dt} [ u + dt (eps^2 nu u + F(u)) + eps G(u) dW ],
// where noise_slice holds the per-mode Brownian increments of this step.
SpectralField step_full(const SpectralField& u, double dt,
                        const std::vector<double>& noise_slice, const ModelSpec& model);

// Everything one coupled path produces. States are recorded every
// record_stride steps plus the final step. The full field u is stored
// unscaled; a = P_c u / eps, psi = P_s u / eps, and the tail Q(T), the
// amplitude b(T) and the component norms are in the scaled variable.
struct TrajectoryRecord {
  std::vector<double> slow_times;
  std::vector<std::vector<double>> full_states;     // u, e-basis coefficients
  std::vector<double> amplitude_states;             // b(T), e-basis kernel coefficient
  std::vector<std::vector<double>> semigroup_tail;  // Q(T) = e^{A T / eps^2} psi(0)
  std::vector<double> norm_a, norm_psi, norm_q;
  std::vector<double> norm_i, norm_j, norm_k;       // decomposition parts
  std::vector<double> error_series;    // ||u - eps b e_1 - eps Q||_alpha at records
  std::vector<double> residual_series; // R(T), reduced-equation defect on the kernel

  double tau_star = 0.0;     // first recorded T crossing eps^{-kappa}, else T0
  bool tau_triggered = false;
  bool blowup = false;
  bool omega_ok = true;  // event conditions held at every record up to tau*
                         // (inclusive; a trigger always violates them)

  // every-step statistics; component sups freeze at the tau* trigger, the
  // error sup runs over the whole horizon
  double sup_error = 0.0;
  double sup_i = 0.0, sup_j = 0.0, sup_k = 0.0;
  double int_k = 0.0;  // slow-time integral of ||K||_alpha up to tau*
  double sup_residual = 0.0;
  double identity_gap = 0.0;  // max ||psi - (Q+I+J+K)||_alpha, roundoff-level

  long long n_steps = 0;
  long long record_stride = 1;
  double dt = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double alpha_index = 1.0;
  uint64_t noise_checksum = 0;
  std::shared_ptr<const SpectrumSpec> spectrum;  // for norm recomputation downstream
};

// Integrates the full SPDE and the reduced amplitude SDE on the same noise
// path (b(0) = a(0)), maintaining the exact discrete decomposition
// psi = Q + I + J + K and the online statistics above. u0 is the unscaled
// initial field; the noise path fixes the actual step via path.dt and must
// satisfy n_steps * dt = T0 / eps^2.
TrajectoryRecord simulate_full(const std::vector<double>& u0, const SolverConfig& cfg,
                               const NoisePath& path, const ModelSpec& model);

// Euler-Maruyama for the reduced equation in the sin-amplitude variable,
//   d gamma = [nu gamma - (3/4) gamma^3] dT + gamma Sigma^{1/2} d beta~,
// driven by fast-grid increments dbeta ~ N(0, dt) rescaled to the slow grid
// (dT = eps^2 dt, d beta~ = eps dbeta). Returns gamma at steps 0..n.
std::vector<double> simulate_amplitude(double gamma0, const std::vector<double>& dbeta,
                                       double dt, double epsilon,
                                       const ReducedCoefficients& coeffs,
                                       bool cubic = true);

// Closed form for the linear Ito SDE d gamma = nu gamma dT + gamma Sigma^{1/2}
// d beta: gamma0 * exp((nu - Sigma/2) T + Sigma^{1/2} beta_T), beta_T the
// terminal value of the slow-scale Brownian path.
double exact_linear_amplitude(double gamma0, double nu, double Sigma, double beta_T,
                              double T);

}  // namespace spde
