#include "spde/runner.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace spde {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<ScalingReport> try_fit(const std::vector<double>& epsilons,
                                     const std::vector<std::vector<double>>& samples,
                                     double kappa) {
  try {
    return fit_scaling(epsilons, samples, kappa);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

// per-epsilon aggregation shared by the real and the synthetic sweep
void aggregate(SweepResult& out, const RunConfig& cfg) {
  const size_t ne = cfg.epsilons.size();
  const size_t m = static_cast<size_t>(cfg.ensemble);
  std::vector<std::vector<double>> err(ne), si(ne), sj(ne), ik(ne);
  out.err_median.assign(ne, 0.0);
  out.err_p90.assign(ne, 0.0);
  out.err_max.assign(ne, 0.0);
  out.exceed_frac.assign(ne, 0.0);
  out.omega_fraction.assign(ne, 0.0);
  out.stay_fraction.assign(ne, 0.0);
  for (size_t ie = 0; ie < ne; ++ie) {
    err[ie].reserve(m);
    size_t n_omega = 0, n_stay = 0, over = 0;
    const double th = std::pow(cfg.epsilons[ie], 2.0 - 19.0 * cfg.kappa);
    for (size_t ip = 0; ip < m; ++ip) {
      const PathResult& p = out.paths[ie * m + ip];
      err[ie].push_back(p.error);
      si[ie].push_back(p.sup_i);
      sj[ie].push_back(p.sup_j);
      ik[ie].push_back(p.int_k);
      if (p.omega_ok) ++n_omega;
      if (!p.tau_triggered) ++n_stay;
      if (p.error > th) ++over;
    }
    out.err_median[ie] = sample_quantile(err[ie], 0.5);
    out.err_p90[ie] = sample_quantile(err[ie], 0.9);
    out.err_max[ie] = sample_quantile(err[ie], 1.0);
    out.exceed_frac[ie] = static_cast<double>(over) / static_cast<double>(m);
    out.omega_fraction[ie] = static_cast<double>(n_omega) / static_cast<double>(m);
    out.stay_fraction[ie] = static_cast<double>(n_stay) / static_cast<double>(m);
  }
  out.error_report = try_fit(cfg.epsilons, err, cfg.kappa);
  out.report_sup_i = try_fit(cfg.epsilons, si, cfg.kappa);
  out.report_sup_j = try_fit(cfg.epsilons, sj, cfg.kappa);
  out.report_int_k = try_fit(cfg.epsilons, ik, cfg.kappa);
}

json config_block(const RunConfig& cfg) { return json::parse(dump_config(cfg)); }

json report_block(const std::optional<ScalingReport>& rep) {
  json j;
  if (rep) {
    j["slope"] = rep->slope;
    j["intercept"] = rep->intercept;
    j["ci_low"] = rep->ci_low;
    j["ci_high"] = rep->ci_high;
    j["residual"] = rep->residual;
    j["bootstrap_resamples"] = rep->bootstrap_resamples;
  } else {
    j["slope"] = nullptr;
    j["intercept"] = nullptr;
    j["ci_low"] = nullptr;
    j["ci_high"] = nullptr;
    j["residual"] = nullptr;
    j["bootstrap_resamples"] = 0;
  }
  return j;
}

}  // namespace

SweepResult run_sweep(const RunConfig& cfg, int threads) {
  cfg.validate();
  if (threads < 1) throw std::invalid_argument("run_sweep: threads must be positive");

  const size_t ne = cfg.epsilons.size();
  const size_t m = static_cast<size_t>(cfg.ensemble);

  std::vector<ModelSpec> models;
  std::vector<std::vector<double>> inits;
  models.reserve(ne);
  for (size_t ie = 0; ie < ne; ++ie) {
    models.push_back(build_model(cfg, cfg.epsilons[ie]));
    inits.push_back(initial_field(cfg, cfg.epsilons[ie]));
  }
  const SolverConfig sc = solver_config(cfg);

  SweepResult out;
  out.paths.resize(ne * m);

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const size_t job = next.fetch_add(1);
      if (job >= ne * m || failed.load()) break;
      const size_t ie = job / m, ip = job % m;
      try {
        const uint64_t seed = derive_seed(cfg.master_seed, static_cast<uint32_t>(ie),
                                          static_cast<uint32_t>(ip));
        double dt = 0.0;
        const long long n = plan_steps(cfg.T0, cfg.epsilons[ie], cfg.dt_fast, dt);
        NoisePath path = generate_noise(cfg.n_modes, n, dt, seed);
        TrajectoryRecord tr = simulate_full(inits[ie], sc, path, models[ie]);
        PathResult& r = out.paths[job];
        r.eps_index = static_cast<int>(ie);
        r.path_index = static_cast<int>(ip);
        r.seed = seed;
        r.error = tr.sup_error;
        r.sup_i = tr.sup_i;
        r.sup_j = tr.sup_j;
        r.sup_k = tr.sup_k;
        r.int_k = tr.int_k;
        r.sup_residual = tr.sup_residual;
        r.identity_gap = tr.identity_gap;
        r.tau_star = tr.tau_star;
        r.tau_triggered = tr.tau_triggered;
        r.omega_ok = tr.omega_ok;
        r.blowup = tr.blowup;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };

  const size_t n_workers =
      std::min<size_t>(static_cast<size_t>(threads), std::max<size_t>(ne * m, 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  aggregate(out, cfg);
  return out;
}

SweepResult run_sweep_synthetic(const RunConfig& cfg) {
  cfg.validate();
  const size_t ne = cfg.epsilons.size();
  const size_t m = static_cast<size_t>(cfg.ensemble);
  SweepResult out;
  out.synthetic = true;
  out.paths.resize(ne * m);
  for (size_t ie = 0; ie < ne; ++ie) {
    const double e = cfg.epsilons[ie];
    for (size_t ip = 0; ip < m; ++ip) {
      PathResult& r = out.paths[ie * m + ip];
      r.eps_index = static_cast<int>(ie);
      r.path_index = static_cast<int>(ip);
      r.seed = derive_seed(cfg.master_seed, static_cast<uint32_t>(ie),
                           static_cast<uint32_t>(ip));
      r.error = 0.5 * e * e;
      r.sup_i = 0.25 * e * e;
      r.sup_j = 0.25 * e * e;
      r.int_k = 0.1 * e;
      r.tau_star = cfg.T0;
      r.omega_ok = true;
    }
  }
  aggregate(out, cfg);
  return out;
}

TrajectoryRecord run_single(const RunConfig& cfg, double epsilon, uint64_t seed) {
  cfg.validate();
  ModelSpec model = build_model(cfg, epsilon);
  std::vector<double> u0 = initial_field(cfg, epsilon);
  const SolverConfig sc = solver_config(cfg);
  double dt = 0.0;
  const long long n = plan_steps(cfg.T0, epsilon, cfg.dt_fast, dt);
  NoisePath path = generate_noise(cfg.n_modes, n, dt, seed);
  return simulate_full(u0, sc, path, model);
}

std::string scaling_csv(const SweepResult& r, const RunConfig& cfg) {
  std::string s = "epsilon,n_paths,err_median,err_p90,err_max,exceed_frac\n";
  for (size_t ie = 0; ie < cfg.epsilons.size(); ++ie) {
    s += fmt(cfg.epsilons[ie]);
    s += ',' + std::to_string(cfg.ensemble);
    s += ',' + fmt(r.err_median[ie]);
    s += ',' + fmt(r.err_p90[ie]);
    s += ',' + fmt(r.err_max[ie]);
    s += ',' + fmt(r.exceed_frac[ie]);
    s += '\n';
  }
  return s;
}

std::string scaling_json(const RunConfig& cfg, const SweepResult& r) {
  json root;
  root["schema_version"] = 1;
  root["command"] = "scaling";
  root["synthetic"] = r.synthetic;
  root["config"] = config_block(cfg);
  json res;
  res["fitted"] = r.error_report.has_value();
  json fit = report_block(r.error_report);
  for (auto& item : fit.items()) res[item.key()] = item.value();
  res["kappa"] = cfg.kappa;
  res["T0"] = cfg.T0;
  json seeds;
  seeds["master_seed"] = cfg.master_seed;
  seeds["derivation"] = "per (eps_index, path_index)";
  res["seeds"] = seeds;
  res["epsilons"] = cfg.epsilons;
  res["n_paths"] = std::vector<int>(cfg.epsilons.size(), cfg.ensemble);
  res["err_median"] = r.err_median;
  res["err_p90"] = r.err_p90;
  res["err_max"] = r.err_max;
  res["exceed_frac"] = r.exceed_frac;
  res["omega_fraction"] = r.omega_fraction;
  res["stay_fraction"] = r.stay_fraction;
  json comp;
  comp["sup_i"] = report_block(r.report_sup_i);
  comp["sup_j"] = report_block(r.report_sup_j);
  comp["int_k"] = report_block(r.report_int_k);
  res["component_fits"] = comp;
  root["results"] = res;
  return root.dump(2) + "\n";
}

std::string trajectory_csv(const TrajectoryRecord& traj) {
  if (!traj.spectrum) throw std::invalid_argument("trajectory carries no spectrum");
  const int n = traj.spectrum->n_modes();
  const double eps = traj.epsilon;
  const double gscale = std::sqrt(2.0 / std::numbers::pi);
  std::string s = "T,gamma_b";
  for (int k = 1; k <= n; ++k) s += ",a_" + std::to_string(k);
  s += ",norm_a,norm_psi,norm_Q_tail,tau_star_flag\n";
  for (size_t i = 0; i < traj.slow_times.size(); ++i) {
    s += fmt(traj.slow_times[i]);
    s += ',' + fmt(gscale * traj.amplitude_states[i]);
    for (int k = 0; k < n; ++k) s += ',' + fmt(traj.full_states[i][k] / eps);
    s += ',' + fmt(traj.norm_a[i]);
    s += ',' + fmt(traj.norm_psi[i]);
    s += ',' + fmt(traj.norm_q[i]);
    const bool flag = traj.tau_triggered && traj.slow_times[i] >= traj.tau_star;
    s += flag ? ",1\n" : ",0\n";
  }
  return s;
}

std::string simulate_json(const RunConfig& cfg, const TrajectoryRecord& traj,
                          uint64_t seed, double epsilon, double dt_actual) {
  json root;
  root["schema_version"] = 1;
  root["command"] = "simulate";
  root["seed"] = seed;
  root["epsilon"] = epsilon;
  root["config"] = config_block(cfg);
  json res;
  res["n_steps"] = traj.n_steps;
  res["dt_actual"] = dt_actual;
  res["tau_star"] = traj.tau_star;
  res["tau_star_flag"] = traj.tau_triggered;
  res["omega_ok"] = traj.omega_ok;
  res["blowup"] = traj.blowup;
  res["sup_error"] = traj.sup_error;
  res["sup_residual"] = traj.sup_residual;
  res["identity_gap"] = traj.identity_gap;
  res["noise_checksum"] = traj.noise_checksum;
  root["results"] = res;
  return root.dump(2) + "\n";
}

std::string decomposition_csv(const TrajectoryRecord& traj,
                              const DecompositionRecord& dec) {
  if (!traj.spectrum) throw std::invalid_argument("trajectory carries no spectrum");
  const SpectrumSpec& spec = *traj.spectrum;
  const int n = spec.n_modes();
  const int nc = spec.kernel_dim;
  const double eps = traj.epsilon;
  std::vector<double> wal(n);
  for (int k = 0; k < n; ++k)
    wal[k] = std::pow(spec.eigenvalues[k] + 1.0, traj.alpha_index);
  auto snorm = [&](const std::vector<double>& c) {
    double s = 0.0;
    for (int k = nc; k < n; ++k) s += c[k] * c[k] * wal[k];
    return std::sqrt(s);
  };
  std::string s = "T,norm_Q_tail,norm_I,norm_J,norm_K,defect\n";
  for (size_t i = 0; i < dec.slow_times.size(); ++i) {
    double d2 = 0.0;
    for (int k = nc; k < n; ++k) {
      const double psi = traj.full_states[i][k] / eps;
      const double d = psi - (dec.q_tail[i][k] + dec.part_i[i][k] + dec.part_j[i][k] +
                              dec.part_k[i][k]);
      d2 += d * d * wal[k];
    }
    s += fmt(dec.slow_times[i]);
    s += ',' + fmt(snorm(dec.q_tail[i]));
    s += ',' + fmt(snorm(dec.part_i[i]));
    s += ',' + fmt(snorm(dec.part_j[i]));
    s += ',' + fmt(snorm(dec.part_k[i]));
    s += ',' + fmt(std::sqrt(d2));
    s += '\n';
  }
  return s;
}

std::string decomposition_json(const RunConfig& cfg, const TrajectoryRecord& traj,
                               const DecompositionRecord& dec, uint64_t seed,
                               double epsilon) {
  json root;
  root["schema_version"] = 1;
  root["command"] = "decompose";
  root["seed"] = seed;
  root["epsilon"] = epsilon;
  root["config"] = config_block(cfg);
  json res;
  res["defect"] = dec.defect;
  res["defect_exact_weights"] = dec.defect_exact;
  res["tau_star"] = dec.tau_star;
  res["sup_Q_tail"] = dec.sup_q;
  res["sup_I"] = dec.sup_i;
  res["sup_J"] = dec.sup_j;
  res["sup_K"] = dec.sup_k;
  res["int_K"] = dec.int_k;
  res["identity_gap_online"] = traj.identity_gap;
  root["results"] = res;
  return root.dump(2) + "\n";
}

std::string coefficient_csv(const RunConfig& cfg) {
  cfg.validate();
  ModelSpec model = build_model(cfg, cfg.epsilons.front());
  const ReducedCoefficients rc = noise_strength(model);
  const double to_sigma = std::sqrt(std::numbers::pi / 2.0);
  std::string s = "k,lambda_k,alpha_k,sigma_closed,sigma_projected\n";
  for (int k = 1; k <= cfg.n_modes; ++k) {
    s += std::to_string(k);
    s += ',' + fmt(model.spectrum->eigenvalues[k - 1]);
    s += ',' + fmt(model.noise_spectrum[k - 1]);
    s += ',' + fmt(sigma_k(k));
    s += ',' + fmt(to_sigma * rc.couplings[k - 1]);
    s += '\n';
  }
  s += "Sigma_paper,,,," + fmt(rc.Sigma) + '\n';
  s += "Sigma_oracle,,,," + fmt(rc.Sigma_oracle) + '\n';
  return s;
}

}  // namespace spde
