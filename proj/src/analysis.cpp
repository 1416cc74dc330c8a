#include "spde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace spde {

namespace {

uint64_t splitmix(uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct TrajView {
  int n_modes = 0;
  size_t n_records = 0;
};

TrajView check_alignment(const TrajectoryRecord& traj) {
  if (!traj.spectrum) throw std::invalid_argument("trajectory carries no spectrum");
  TrajView v;
  v.n_modes = traj.spectrum->n_modes();
  v.n_records = traj.slow_times.size();
  if (v.n_records == 0) throw std::invalid_argument("trajectory has no records");
  if (traj.full_states.size() != v.n_records ||
      traj.amplitude_states.size() != v.n_records ||
      traj.semigroup_tail.size() != v.n_records ||
      traj.norm_a.size() != v.n_records || traj.norm_psi.size() != v.n_records ||
      traj.error_series.size() != v.n_records)
    throw std::invalid_argument("trajectory series are not aligned");
  for (const auto& st : traj.full_states)
    if (static_cast<int>(st.size()) != v.n_modes)
      throw std::invalid_argument("trajectory state width mismatch");
  return v;
}

void check_pairing(const TrajectoryRecord& traj, const NoisePath& path,
                   const ModelSpec& model) {
  if (traj.record_stride != 1)
    throw std::invalid_argument("reconstruction needs a full-stride trajectory");
  if (traj.blowup)
    throw std::invalid_argument("reconstruction refuses a halted (blowup) trajectory");
  if (!model.spectrum || !model.grid || !model.pair)
    throw std::invalid_argument("model not validated");
  if (model.spectrum->n_modes() != path.n_modes)
    throw std::invalid_argument("model/path mode count mismatch");
  if (path.n_steps != traj.n_steps || path.dt != traj.dt)
    throw std::invalid_argument("path does not match the trajectory time grid");
  if (model.epsilon != traj.epsilon)
    throw std::invalid_argument("model/trajectory epsilon mismatch");
  if (traj.slow_times.size() != static_cast<size_t>(traj.n_steps) + 1)
    throw std::invalid_argument("trajectory record count does not cover every step");
  if (path_checksum(path) != traj.noise_checksum)
    throw std::invalid_argument("noise path does not match the trajectory checksum");
}

}  // namespace

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile order outside [0,1]");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (q == 0.5) {
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
  }
  double idx = std::ceil(q * static_cast<double>(n)) - 1.0;
  idx = std::max(0.0, std::min(idx, static_cast<double>(n - 1)));
  return values[static_cast<size_t>(idx)];
}

double approximation_error(const TrajectoryRecord& traj, double alpha) {
  const TrajView view = check_alignment(traj);
  const SpectrumSpec& spec = *traj.spectrum;
  const double eps = traj.epsilon;
  std::vector<double> wal(view.n_modes);
  for (int k = 0; k < view.n_modes; ++k)
    wal[k] = std::pow(spec.eigenvalues[k] + 1.0, alpha);

  double sup = 0.0;
  for (size_t i = 0; i < view.n_records; ++i) {
    const std::vector<double>& u = traj.full_states[i];
    const std::vector<double>& q = traj.semigroup_tail[i];
    const double b = traj.amplitude_states[i];
    double e2 = 0.0;
    for (int k = 0; k < view.n_modes; ++k) {
      const double target = (k < spec.kernel_dim ? eps * b : 0.0) + eps * q[k];
      const double d = u[k] - target;
      e2 += d * d * wal[k];
    }
    sup = std::max(sup, std::sqrt(e2));
  }
  return sup;
}

double tau_star(const TrajectoryRecord& traj, double kappa, double epsilon, double T0) {
  check_alignment(traj);
  if (!(kappa > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("tau_star: kappa and epsilon must be positive");
  const double th = std::pow(epsilon, -kappa);
  for (size_t i = 0; i < traj.slow_times.size(); ++i)
    if (traj.norm_a[i] > th || traj.norm_psi[i] > th) return traj.slow_times[i];
  return T0;
}

double omega_star_fraction(const std::vector<TrajectoryRecord>& ensemble, double kappa,
                           double epsilon) {
  if (ensemble.empty())
    throw std::invalid_argument("omega_star_fraction: empty ensemble");
  if (!(kappa > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("omega_star_fraction: kappa and epsilon must be positive");
  const double th_tau = std::pow(epsilon, -kappa);
  const double th_o = std::pow(epsilon, -kappa / 2.0);
  const double th_e = std::pow(epsilon, 2.0 - 19.0 * kappa);
  size_t good = 0;
  for (const TrajectoryRecord& traj : ensemble) {
    check_alignment(traj);
    bool ok = !traj.blowup;
    for (size_t i = 0; ok && i < traj.slow_times.size(); ++i) {
      if (traj.norm_a[i] >= th_o || traj.norm_psi[i] >= th_o ||
          traj.error_series[i] >= th_e)
        ok = false;
      if (traj.norm_a[i] > th_tau || traj.norm_psi[i] > th_tau) break;
    }
    if (ok) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(ensemble.size());
}

DecompositionRecord decompose_psi(const TrajectoryRecord& traj, const NoisePath& path,
                                  const ModelSpec& model) {
  const TrajView view = check_alignment(traj);
  check_pairing(traj, path, model);

  const int n = view.n_modes;
  const int nc = model.spectrum->kernel_dim;
  const double eps = traj.epsilon, eps2 = eps * eps;
  const double dt = traj.dt;
  const double dT = eps2 * dt;
  const double alpha = traj.alpha_index;

  std::vector<double> esf, wal(n), phi1(n, 0.0), sqa(n);
  semigroup_factors(*model.spectrum, dt, esf);
  for (int k = 0; k < n; ++k) {
    const double lam = model.spectrum->eigenvalues[k];
    wal[k] = std::pow(lam + 1.0, alpha);
    if (k >= nc) phi1[k] = (1.0 - esf[k]) / lam;  // exact one-step drift kernel
    sqa[k] = std::sqrt(model.noise_spectrum[k]) / (k + 1);
  }

  auto stable_norm = [&](const std::vector<double>& c) {
    double s = 0.0;
    for (int k = nc; k < n; ++k) s += c[k] * c[k] * wal[k];
    return std::sqrt(s);
  };

  const SineGrid& g = *model.grid;
  const int ngrid = g.points() - 1;
  std::vector<double> v(n), vals(ngrid), fu(n), w(n), gn(n), pwork(2 * n + 1);
  std::vector<double> Q(n, 0.0), I(n, 0.0), J(n, 0.0), K(n, 0.0);
  std::vector<double> Ix(n, 0.0), Jx(n, 0.0);  // exact-weight variants

  DecompositionRecord out;
  const size_t n_rec = view.n_records;
  out.slow_times = traj.slow_times;
  out.q_tail.reserve(n_rec);
  out.part_i.reserve(n_rec);
  out.part_j.reserve(n_rec);
  out.part_k.reserve(n_rec);

  // records at or before the exit trigger contribute to the sup statistics
  const double th_tau = std::pow(eps, -traj.kappa);
  size_t idx_end = n_rec - 1;
  for (size_t i = 0; i < n_rec; ++i)
    if (traj.norm_a[i] > th_tau || traj.norm_psi[i] > th_tau) {
      idx_end = i;
      break;
    }
  out.tau_star = traj.slow_times[idx_end];

  for (int k = 0; k < n; ++k) v[k] = traj.full_states[0][k] / eps;
  for (int k = nc; k < n; ++k) Q[k] = v[k];

  auto push_parts = [&](size_t i) {
    out.q_tail.push_back(Q);
    out.part_i.push_back(I);
    out.part_j.push_back(J);
    out.part_k.push_back(K);
    if (i <= idx_end) {
      out.sup_q = std::max(out.sup_q, stable_norm(Q));
      out.sup_i = std::max(out.sup_i, stable_norm(I));
      out.sup_j = std::max(out.sup_j, stable_norm(J));
      const double nk = stable_norm(K);
      out.sup_k = std::max(out.sup_k, nk);
      if (i > 0) out.int_k += dT * nk;
    }
  };
  push_parts(0);

  for (size_t i = 0; i + 1 < n_rec; ++i) {
    const double* row = path.increments.data() + i * static_cast<size_t>(n);
    for (int k = 0; k < n; ++k) v[k] = traj.full_states[i][k] / eps;
    g.synth(v.data(), vals.data());
    for (int j = 0; j < ngrid; ++j) vals[j] = -vals[j] * vals[j] * vals[j];
    g.analyze(vals.data(), fu.data());
    for (int k = 0; k < n; ++k) w[k] = sqa[k] * row[k];
    model.pair->project(v.data(), w.data(), gn.data(), pwork.data());

    for (int k = nc; k < n; ++k) {
      const double drift_i = eps2 * model.nu * v[k];
      const double drift_j = eps2 * fu[k];
      Q[k] = esf[k] * Q[k];
      I[k] = esf[k] * (I[k] + dt * drift_i);
      J[k] = esf[k] * (J[k] + dt * drift_j);
      K[k] = esf[k] * (K[k] + eps * gn[k]);
      Ix[k] = esf[k] * Ix[k] + phi1[k] * drift_i;
      Jx[k] = esf[k] * Jx[k] + phi1[k] * drift_j;
    }
    push_parts(i + 1);

    double d2 = 0.0, dx2 = 0.0;
    for (int k = nc; k < n; ++k) {
      const double psi = traj.full_states[i + 1][k] / eps;
      const double d = psi - (Q[k] + I[k] + J[k] + K[k]);
      const double dx = psi - (Q[k] + Ix[k] + Jx[k] + K[k]);
      d2 += d * d * wal[k];
      dx2 += dx * dx * wal[k];
    }
    out.defect = std::max(out.defect, std::sqrt(d2));
    out.defect_exact = std::max(out.defect_exact, std::sqrt(dx2));
  }
  return out;
}

std::vector<double> residual_R(const TrajectoryRecord& traj, const NoisePath& path,
                               const ModelSpec& model) {
  const TrajView view = check_alignment(traj);
  check_pairing(traj, path, model);
  const int n = view.n_modes;
  if (model.spectrum->kernel_dim != 1)
    throw std::domain_error("residual_R: 1-dim kernel expected");

  const double eps = traj.epsilon, eps2 = eps * eps;
  const double dt = traj.dt, dT = eps2 * dt;
  const ReducedCoefficients rc = noise_strength(model);
  const double sqrt_sig = std::sqrt(rc.Sigma_oracle);
  const double ce = rc.cubic_coeff_e;

  std::vector<double> wred(n, 0.0);
  if (rc.Sigma_oracle > 0.0)
    for (int k = 0; k < n; ++k)
      wred[k] = std::sqrt(model.noise_spectrum[k]) * rc.couplings[k] / sqrt_sig;
  std::vector<double> sqa(n);
  for (int k = 0; k < n; ++k) sqa[k] = std::sqrt(model.noise_spectrum[k]) / (k + 1);

  const SineGrid& g = *model.grid;
  const int ngrid = g.points() - 1;
  std::vector<double> v(n), vals(ngrid), fu(n), w(n), gn(n), pwork(2 * n + 1);

  std::vector<double> out;
  out.reserve(view.n_records);
  double R = 0.0;
  out.push_back(R);
  for (size_t i = 0; i + 1 < view.n_records; ++i) {
    const double* row = path.increments.data() + i * static_cast<size_t>(n);
    for (int k = 0; k < n; ++k) v[k] = traj.full_states[i][k] / eps;
    g.synth(v.data(), vals.data());
    for (int j = 0; j < ngrid; ++j) vals[j] = -vals[j] * vals[j] * vals[j];
    g.analyze(vals.data(), fu.data());
    for (int k = 0; k < n; ++k) w[k] = sqa[k] * row[k];
    model.pair->project(v.data(), w.data(), gn.data(), pwork.data());
    double dbeta = 0.0;
    for (int k = 0; k < n; ++k) dbeta += wred[k] * row[k];
    const double a = v[0];
    R += dT * (fu[0] - ce * a * a * a) + eps * (gn[0] - a * sqrt_sig * dbeta);
    out.push_back(R);
  }
  return out;
}

ScalingReport fit_scaling(const std::vector<double>& epsilons,
                          const std::vector<std::vector<double>>& errors, double kappa) {
  if (epsilons.size() < 4)
    throw std::invalid_argument("fit_scaling: need at least 4 epsilon values");
  if (errors.size() != epsilons.size())
    throw std::invalid_argument("fit_scaling: epsilon/error count mismatch");
  if (!(kappa > 0.0) || !(kappa < 1.0 / 19.0))
    throw std::invalid_argument("fit_scaling: kappa outside (0, 1/19)");
  {
    std::vector<double> s = epsilons;
    std::sort(s.begin(), s.end());
    if (!(s.front() > 0.0))
      throw std::invalid_argument("fit_scaling: epsilon must be positive");
    for (size_t i = 1; i < s.size(); ++i)
      if (s[i] == s[i - 1])
        throw std::invalid_argument("fit_scaling: epsilon values must be distinct");
    if (s.back() / s.front() < 4.0 * (1.0 - 1e-12))
      throw std::invalid_argument("fit_scaling: epsilon range must span a factor 4");
  }

  ScalingReport rep;
  rep.kappa = kappa;
  rep.epsilons = epsilons;
  const size_t m = epsilons.size();
  std::vector<double> x(m), y(m);
  for (size_t i = 0; i < m; ++i) {
    if (errors[i].empty())
      throw std::invalid_argument("fit_scaling: empty error sample");
    for (double e : errors[i])
      if (!(e >= 0.0) || !std::isfinite(e))
        throw std::invalid_argument("fit_scaling: errors must be finite and nonnegative");
    const double med = sample_quantile(errors[i], 0.5);
    if (!(med > 0.0))
      throw std::invalid_argument("fit_scaling: nonpositive median error");
    rep.n_paths.push_back(static_cast<int>(errors[i].size()));
    rep.err_median.push_back(med);
    rep.err_p90.push_back(sample_quantile(errors[i], 0.9));
    rep.err_max.push_back(*std::max_element(errors[i].begin(), errors[i].end()));
    const double th = std::pow(epsilons[i], 2.0 - 19.0 * kappa);
    size_t over = 0;
    for (double e : errors[i])
      if (e > th) ++over;
    rep.exceed_frac.push_back(static_cast<double>(over) /
                              static_cast<double>(errors[i].size()));
    x[i] = std::log(epsilons[i]);
    y[i] = std::log(med);
  }

  auto ols = [](const std::vector<double>& xs, const std::vector<double>& ys,
                double& slope, double& icept) {
    const size_t nn = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < nn; ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double den = nn * sxx - sx * sx;
    slope = (nn * sxy - sx * sy) / den;
    icept = (sy - slope * sx) / nn;
  };
  ols(x, y, rep.slope, rep.intercept);
  double rss = 0.0;
  for (size_t i = 0; i < m; ++i) {
    const double r = y[i] - (rep.intercept + rep.slope * x[i]);
    rss += r * r;
  }
  rep.residual = std::sqrt(rss / m);

  // percentile bootstrap over per-epsilon resamples, fixed seed
  const int n_boot = 200;
  uint64_t state = 0x243F6A8885A308D3ull;
  std::vector<double> slopes;
  slopes.reserve(n_boot);
  std::vector<double> yb(m), sample;
  for (int b = 0; b < n_boot; ++b) {
    bool usable = true;
    for (size_t i = 0; i < m && usable; ++i) {
      const std::vector<double>& pool = errors[i];
      sample.resize(pool.size());
      for (size_t j = 0; j < pool.size(); ++j)
        sample[j] = pool[splitmix(state) % pool.size()];
      const double med = sample_quantile(sample, 0.5);
      if (!(med > 0.0))
        usable = false;
      else
        yb[i] = std::log(med);
    }
    if (!usable) continue;
    double bs = 0.0, bi = 0.0;
    ols(x, yb, bs, bi);
    slopes.push_back(bs);
  }
  if (slopes.size() < 100)
    throw std::runtime_error("fit_scaling: bootstrap degenerated");
  std::sort(slopes.begin(), slopes.end());
  const size_t nb = slopes.size();
  rep.ci_low = slopes[static_cast<size_t>(std::floor(0.025 * (nb - 1)))];
  rep.ci_high = slopes[static_cast<size_t>(std::ceil(0.975 * (nb - 1)))];
  rep.bootstrap_resamples = static_cast<int>(nb);
  return rep;
}

}  // namespace spde
