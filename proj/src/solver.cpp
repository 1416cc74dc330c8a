#include "spde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace spde {

namespace {

inline uint64_t fnv1a(uint64_t h, const double* data, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  return h;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(dt_fast > 0.0) || !std::isfinite(dt_fast))
    throw std::invalid_argument("SolverConfig: dt_fast must be positive");
  if (!(T0 > 0.0) || !std::isfinite(T0))
    throw std::invalid_argument("SolverConfig: T0 must be positive");
  if (!(blowup_guard > 0.0))
    throw std::invalid_argument("SolverConfig: blowup_guard must be positive");
  if (record_stride < 1)
    throw std::invalid_argument("SolverConfig: record_stride must be >= 1");
}

long long plan_steps(double T0, double epsilon, double dt_request, double& dt_actual) {
  if (!(T0 > 0.0) || !(epsilon > 0.0) || !(dt_request > 0.0))
    throw std::invalid_argument("plan_steps: T0, epsilon, dt must be positive");
  const double horizon = T0 / (epsilon * epsilon);
  // tiny slack so an exact multiple does not round up
  long long n = static_cast<long long>(std::ceil(horizon / dt_request * (1.0 - 1e-12)));
  if (n < 1) n = 1;
  dt_actual = horizon / static_cast<double>(n);
  return n;
}

SpectralField step_full(const SpectralField& u, double dt,
                        const std::vector<double>& noise_slice, const ModelSpec& model) {
  const int n = model.spectrum->n_modes();
  if (!u.spectrum || static_cast<int>(u.coeffs.size()) != n)
    throw std::invalid_argument("step_full: field/model mismatch");
  if (static_cast<int>(noise_slice.size()) != n)
    throw std::invalid_argument("step_full: noise slice size");
  if (!(dt > 0.0)) throw std::invalid_argument("step_full: dt must be positive");
  const double eps = model.epsilon, eps2 = eps * eps;

  const SineGrid& g = *model.grid;
  const int ngrid = g.points() - 1;
  std::vector<double> vals(ngrid), fu(n), w(n), gn(n);
  g.synth(u.coeffs.data(), vals.data());
  for (int j = 0; j < ngrid; ++j) vals[j] = -vals[j] * vals[j] * vals[j];
  g.analyze(vals.data(), fu.data());
  for (int k = 0; k < n; ++k)
    w[k] = std::sqrt(model.noise_spectrum[k]) * noise_slice[k] / (k + 1);
  model.pair->project(u.coeffs.data(), w.data(), gn.data());

  std::vector<double> esf;
  semigroup_factors(*model.spectrum, dt, esf);
  SpectralField out = make_field(u.spectrum, std::vector<double>(n, 0.0), u.alpha_index);
  for (int k = 0; k < n; ++k)
    out.coeffs[k] =
        esf[k] * (u.coeffs[k] + dt * (eps2 * model.nu * u.coeffs[k] + fu[k]) + eps * gn[k]);
  const double norm = alpha_norm(out);
  if (!std::isfinite(norm) || norm > 1e6)
    throw std::overflow_error("step_full: norm exceeded the blowup guard");
  return out;
}

TrajectoryRecord simulate_full(const std::vector<double>& u0, const SolverConfig& cfg,
                               const NoisePath& path, const ModelSpec& model) {
  cfg.validate();
  const int n_modes = model.spectrum->n_modes();
  if (static_cast<int>(u0.size()) != n_modes)
    throw std::invalid_argument("simulate_full: u0 size must match modes");
  if (path.n_modes != n_modes)
    throw std::invalid_argument("simulate_full: noise path mode count mismatch");
  if (!model.grid || !model.pair)
    throw std::invalid_argument("simulate_full: model not validated");
  const int nc = model.spectrum->kernel_dim;
  if (nc != 1)
    throw std::domain_error("simulate_full: amplitude coupling assumes a 1-dim kernel");

  const double eps = model.epsilon, eps2 = eps * eps;
  const double dt = path.dt;
  const long long n = path.n_steps;
  const double horizon = cfg.T0 / eps2;
  if (n < 1 || std::abs(n * dt - horizon) > 1e-6 * horizon)
    throw std::invalid_argument("simulate_full: path does not cover T0/eps^2");
  const double dT = eps2 * dt;
  const double nu = model.nu;
  const double alpha = model.alpha_index;

  const ReducedCoefficients rc = noise_strength(model);
  const double Sig = rc.Sigma_oracle;
  const double sqrt_sig = std::sqrt(Sig);
  const double ce = rc.cubic_coeff_e;

  std::vector<double> wred(n_modes, 0.0);
  if (Sig > 0.0)
    for (int k = 0; k < n_modes; ++k)
      wred[k] = std::sqrt(model.noise_spectrum[k]) * rc.couplings[k] / sqrt_sig;

  std::vector<double> esf, wal(n_modes), sqa(n_modes);
  semigroup_factors(*model.spectrum, dt, esf);
  for (int k = 0; k < n_modes; ++k) {
    wal[k] = std::pow(model.spectrum->eigenvalues[k] + 1.0, alpha);
    sqa[k] = std::sqrt(model.noise_spectrum[k]) / (k + 1);  // f_k = e_k / k
  }

  // scaled state v = u / eps and the decomposition accumulators
  std::vector<double> v(n_modes), Q(n_modes, 0.0), I(n_modes, 0.0), J(n_modes, 0.0),
      K(n_modes, 0.0);
  for (int k = 0; k < n_modes; ++k) v[k] = u0[k] / eps;
  for (int k = nc; k < n_modes; ++k) Q[k] = v[k];
  double b = v[0];
  double R = 0.0;

  const SineGrid& g = *model.grid;
  const int ngrid = g.points() - 1;
  std::vector<double> vals(ngrid), fu(n_modes), w(n_modes), gn(n_modes),
      pwork(2 * n_modes + 1);

  const double th_tau = std::pow(eps, -model.kappa);
  const double th_omega = std::pow(eps, -model.kappa / 2.0);
  const double th_err = std::pow(eps, 2.0 - 19.0 * model.kappa);

  TrajectoryRecord out;
  out.n_steps = n;
  out.record_stride = cfg.record_stride;
  out.dt = dt;
  out.epsilon = eps;
  out.kappa = model.kappa;
  out.alpha_index = alpha;
  out.tau_star = cfg.T0;
  out.spectrum = model.spectrum;

  uint64_t checksum = 14695981039346656037ull;
  bool frozen = false;  // component statistics stop accumulating past tau*

  auto stable_norm = [&](const std::vector<double>& c) {
    double s = 0.0;
    for (int k = nc; k < n_modes; ++k) s += c[k] * c[k] * wal[k];
    return std::sqrt(s);
  };

  auto record_state = [&](double T) {
    out.slow_times.push_back(T);
    std::vector<double> ufull(n_modes);
    for (int k = 0; k < n_modes; ++k) ufull[k] = eps * v[k];
    out.full_states.push_back(std::move(ufull));
    out.amplitude_states.push_back(b);
    out.semigroup_tail.push_back(Q);
    double na = 0.0;
    for (int k = 0; k < nc; ++k) na += v[k] * v[k] * wal[k];
    na = std::sqrt(na);
    const double npsi = stable_norm(v);
    out.norm_a.push_back(na);
    out.norm_psi.push_back(npsi);
    out.norm_q.push_back(stable_norm(Q));
    out.norm_i.push_back(stable_norm(I));
    out.norm_j.push_back(stable_norm(J));
    out.norm_k.push_back(stable_norm(K));
    double e2 = (v[0] - b) * (v[0] - b) * wal[0];
    for (int k = nc; k < n_modes; ++k) e2 += (v[k] - Q[k]) * (v[k] - Q[k]) * wal[k];
    const double err = eps * std::sqrt(e2);
    out.error_series.push_back(err);
    out.residual_series.push_back(R);
    if (!out.tau_triggered) {
      if (na >= th_omega || npsi >= th_omega || err >= th_err)
        out.omega_ok = false;  // checked at every record up to and including tau*
      if (na > th_tau || npsi > th_tau) {
        out.tau_triggered = true;
        out.tau_star = T;
        frozen = true;
      }
    }
  };

  record_state(0.0);

  for (long long j = 0; j < n; ++j) {
    const double* row = path.increments.data() + static_cast<size_t>(j) * n_modes;
    checksum = fnv1a(checksum, row, static_cast<size_t>(n_modes));

    for (int k = 0; k < n_modes; ++k) w[k] = sqa[k] * row[k];
    g.synth(v.data(), vals.data());
    for (int i = 0; i < ngrid; ++i) vals[i] = -vals[i] * vals[i] * vals[i];
    g.analyze(vals.data(), fu.data());
    model.pair->project(v.data(), w.data(), gn.data(), pwork.data());
    double dbeta = 0.0;
    for (int k = 0; k < n_modes; ++k) dbeta += wred[k] * row[k];

    const double a_cur = v[0];
    const double b_cur = b;
    b = b_cur + dT * (nu * b_cur + ce * b_cur * b_cur * b_cur) +
        sqrt_sig * b_cur * (eps * dbeta);
    R += dT * (fu[0] - ce * a_cur * a_cur * a_cur) +
         eps * (gn[0] - a_cur * sqrt_sig * dbeta);

    for (int k = 0; k < n_modes; ++k) {
      const double vk = v[k];
      const double drift = dt * eps2 * (nu * vk + fu[k]);
      const double noise = eps * gn[k];
      v[k] = esf[k] * (vk + drift + noise);
      if (k >= nc) {
        Q[k] = esf[k] * Q[k];
        I[k] = esf[k] * (I[k] + dt * eps2 * nu * vk);
        J[k] = esf[k] * (J[k] + dt * eps2 * fu[k]);
        K[k] = esf[k] * (K[k] + noise);
      }
    }

    // every-step statistics
    double e2 = (v[0] - b) * (v[0] - b) * wal[0];
    double gap2 = 0.0, nv2 = 0.0;
    for (int k = 0; k < nc; ++k) nv2 += v[k] * v[k] * wal[k];
    for (int k = nc; k < n_modes; ++k) {
      const double d = v[k] - Q[k];
      e2 += d * d * wal[k];
      const double gd = v[k] - (Q[k] + I[k] + J[k] + K[k]);
      gap2 += gd * gd * wal[k];
      nv2 += v[k] * v[k] * wal[k];
    }
    out.sup_error = std::max(out.sup_error, eps * std::sqrt(e2));
    out.identity_gap = std::max(out.identity_gap, std::sqrt(gap2));
    if (!frozen) {
      out.sup_i = std::max(out.sup_i, stable_norm(I));
      out.sup_j = std::max(out.sup_j, stable_norm(J));
      const double nk = stable_norm(K);
      out.sup_k = std::max(out.sup_k, nk);
      out.int_k += dT * nk;
      out.sup_residual = std::max(out.sup_residual, std::abs(R));
    }

    const double unorm = eps * std::sqrt(nv2);
    const bool bad = !std::isfinite(unorm) || unorm > cfg.blowup_guard ||
                     !std::isfinite(b);
    if (bad) {
      out.blowup = true;
      out.omega_ok = false;
      record_state((j + 1) * dT);
      break;
    }
    if ((j + 1) % cfg.record_stride == 0 || j + 1 == n) record_state((j + 1) * dT);
  }

  out.noise_checksum = checksum;
  return out;
}

std::vector<double> simulate_amplitude(double gamma0, const std::vector<double>& dbeta,
                                       double dt, double epsilon,
                                       const ReducedCoefficients& coeffs, bool cubic) {
  if (!(dt > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("simulate_amplitude: dt and epsilon must be positive");
  if (coeffs.Sigma_oracle < 0.0)
    throw std::invalid_argument("simulate_amplitude: negative noise strength");
  const double dT = epsilon * epsilon * dt;
  const double nu = coeffs.drift_coeff;
  const double c = coeffs.cubic_coeff;  // sin-amplitude variable
  const double s = std::sqrt(coeffs.Sigma_oracle);
  std::vector<double> out;
  out.reserve(dbeta.size() + 1);
  double g = gamma0;
  out.push_back(g);
  for (double db : dbeta) {
    const double drift = nu * g + (cubic ? c * g * g * g : 0.0);
    g += dT * drift + s * g * (epsilon * db);
    out.push_back(g);
  }
  return out;
}

double exact_linear_amplitude(double gamma0, double nu, double Sigma, double beta_T,
                              double T) {
  if (Sigma < 0.0)
    throw std::invalid_argument("exact_linear_amplitude: negative noise strength");
  return gamma0 * std::exp((nu - 0.5 * Sigma) * T + std::sqrt(Sigma) * beta_T);
}

}  // namespace spde
