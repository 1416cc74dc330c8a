// command line front end: coefficient tables, single runs, scaling sweeps,
// and the offline decomposition of a recorded path.
//
// exit codes: 0 success, 2 bad configuration or unmet fit preconditions,
// 3 blowup guard tripped, 4 scaling slope gate failed.

#include "CLI11.hpp"

#include "spde/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kConfig = 2;
constexpr int kBlowup = 3;
constexpr int kGate = 4;

int fail_config(const std::string& what) {
  std::cerr << "error: " << what << "\n";
  return kConfig;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("short write on " + p.string());
}

int cmd_coeffs(const spde::RunConfig& cfg, const std::filesystem::path& out_dir) {
  const std::string csv = spde::coefficient_csv(cfg);
  const auto path = out_dir / "coefficients.csv";
  write_file(path, csv);
  spde::ModelSpec model = spde::build_model(cfg, cfg.epsilons.front());
  const spde::ReducedCoefficients rc = spde::noise_strength(model);
  std::cout << "coeffs: n_modes=" << cfg.n_modes << " Sigma_paper=" << rc.Sigma
            << " Sigma_oracle=" << rc.Sigma_oracle << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return kOk;
}

int cmd_simulate(const spde::RunConfig& cfg, const std::filesystem::path& out_dir,
                 uint64_t seed) {
  const double eps = cfg.epsilons.front();
  double dt = 0.0;
  (void)spde::plan_steps(cfg.T0, eps, cfg.dt_fast, dt);
  spde::TrajectoryRecord traj = spde::run_single(cfg, eps, seed);
  if (cfg.write_csv) {
    const auto path = out_dir / "trajectory.csv";
    write_file(path, spde::trajectory_csv(traj));
    std::cout << "wrote " << path.string() << "\n";
  }
  if (cfg.write_json) {
    const auto path = out_dir / "simulate.json";
    write_file(path, spde::simulate_json(cfg, traj, seed, eps, dt));
    std::cout << "wrote " << path.string() << "\n";
  }
  std::cout << "simulate: eps=" << eps << " seed=" << seed
            << " tau_star=" << traj.tau_star << " sup_error=" << traj.sup_error
            << "\n";
  if (traj.blowup) {
    std::cerr << "error: blowup guard tripped, trajectory is truncated\n";
    return kBlowup;
  }
  return kOk;
}

int cmd_scaling(const spde::RunConfig& cfg, const std::filesystem::path& out_dir,
                int threads, bool synthetic) {
  spde::SweepResult r =
      synthetic ? spde::run_sweep_synthetic(cfg) : spde::run_sweep(cfg, threads);
  if (cfg.write_csv) {
    const auto path = out_dir / "scaling.csv";
    write_file(path, spde::scaling_csv(r, cfg));
    std::cout << "wrote " << path.string() << "\n";
  }
  if (cfg.write_json) {
    const auto path = out_dir / "scaling.json";
    write_file(path, spde::scaling_json(cfg, r));
    std::cout << "wrote " << path.string() << "\n";
  }
  size_t blowups = 0;
  for (const auto& p : r.paths) blowups += p.blowup ? 1 : 0;
  if (blowups > 0) {
    std::cerr << "error: " << blowups << " paths hit the blowup guard\n";
    return kBlowup;
  }
  if (!r.error_report)
    return fail_config(
        "scaling fit preconditions not met: need at least 4 distinct epsilons "
        "spanning a factor of 4");
  const spde::ScalingReport& rep = *r.error_report;
  std::cout << "scaling: slope=" << rep.slope << " ci=[" << rep.ci_low << ","
            << rep.ci_high << "] floor=" << cfg.slope_floor << "\n";
  return rep.ci_low >= cfg.slope_floor ? kOk : kGate;
}

int cmd_decompose(const spde::RunConfig& cfg, const std::filesystem::path& out_dir,
                  uint64_t seed) {
  if (cfg.record_stride != 1)
    return fail_config("decompose needs record_stride = 1 so every step is kept");
  const double eps = cfg.epsilons.front();
  spde::ModelSpec model = spde::build_model(cfg, eps);
  std::vector<double> u0 = spde::initial_field(cfg, eps);
  double dt = 0.0;
  const long long n = spde::plan_steps(cfg.T0, eps, cfg.dt_fast, dt);
  spde::NoisePath path = spde::generate_noise(cfg.n_modes, n, dt, seed);
  spde::TrajectoryRecord traj =
      spde::simulate_full(u0, spde::solver_config(cfg), path, model);
  if (traj.blowup) {
    std::cerr << "error: blowup guard tripped, nothing to decompose\n";
    return kBlowup;
  }
  spde::DecompositionRecord dec = spde::decompose_psi(traj, path, model);
  if (cfg.write_csv) {
    const auto fp = out_dir / "decomposition.csv";
    write_file(fp, spde::decomposition_csv(traj, dec));
    std::cout << "wrote " << fp.string() << "\n";
  }
  if (cfg.write_json) {
    const auto fp = out_dir / "decomposition.json";
    write_file(fp, spde::decomposition_json(cfg, traj, dec, seed, eps));
    std::cout << "wrote " << fp.string() << "\n";
  }
  std::cout << "decompose: eps=" << eps << " seed=" << seed
            << " defect=" << dec.defect << " defect_exact=" << dec.defect_exact
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic amplitude reduction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // accept global options after the subcommand name

  std::string config_path;
  std::string out_override;
  uint64_t seed = 0;
  int threads = 1;
  bool synthetic = false;

  app.add_option("--config", config_path, "json configuration file");
  app.add_option("--out", out_override, "output directory (overrides the config)");

  CLI::App* c_coeffs =
      app.add_subcommand("coeffs", "write the spectral coefficient table");
  CLI::App* c_sim =
      app.add_subcommand("simulate", "integrate one path and record its trajectory");
  c_sim->add_option("--seed", seed, "noise seed");
  CLI::App* c_scaling =
      app.add_subcommand("scaling", "sweep epsilon and fit the error scaling");
  c_scaling->add_option("--threads", threads, "worker threads")
      ->check(CLI::PositiveNumber);
  c_scaling->add_flag("--synthetic", synthetic,
                      "plant an exact quadratic law instead of solving");
  CLI::App* c_dec = app.add_subcommand(
      "decompose", "rerun one path and rebuild its linear decomposition");
  c_dec->add_option("--seed", seed, "noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  spde::RunConfig cfg;
  try {
    if (!config_path.empty())
      cfg = spde::load_config(config_path);
    else
      cfg.validate();
    if (!out_override.empty()) cfg.out_dir = out_override;
  } catch (const std::exception& e) {
    return fail_config(e.what());
  }

  const std::filesystem::path out_dir = cfg.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return fail_config("cannot create " + out_dir.string() + ": " + ec.message());

  try {
    if (c_coeffs->parsed()) return cmd_coeffs(cfg, out_dir);
    if (c_sim->parsed()) return cmd_simulate(cfg, out_dir, seed);
    if (c_scaling->parsed()) return cmd_scaling(cfg, out_dir, threads, synthetic);
    if (c_dec->parsed()) return cmd_decompose(cfg, out_dir, seed);
  } catch (const std::invalid_argument& e) {
    return fail_config(e.what());
  } catch (const std::domain_error& e) {
    return fail_config(e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;  // unreachable: a subcommand is required
}
