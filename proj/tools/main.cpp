#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cavitymc/analysis.hpp"
#include "cavitymc/config.hpp"
#include "cavitymc/errors.hpp"
#include "cavitymc/oracle.hpp"
#include "cavitymc/physics.hpp"
#include "cavitymc/runner.hpp"

namespace {

using namespace cavitymc;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::string shot_noise;  // "", "on", "off"
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "configuration file (key = value)");
  sub->add_option("--out-dir", opts.out_dir, "output directory");
  sub->add_option("--seed", opts.seed, "master RNG seed")
      ->each([&](const std::string&) { opts.has_seed = true; });
  sub->add_option("--shot-noise", opts.shot_noise,
                  "photon-counting shot noise on the trigger")
      ->check(CLI::IsMember({"on", "off"}));
}

SimConfig load(const CommonOpts& opts) {
  SimConfig cfg = opts.config_path.empty() ? SimConfig{}
                                           : load_config(opts.config_path);
  if (opts.has_seed) cfg.integrator.rng_seed = opts.seed;
  if (opts.shot_noise == "on") cfg.protocol.trigger.use_shot_noise = true;
  if (opts.shot_noise == "off") cfg.protocol.trigger.use_shot_noise = false;
  cfg.validate();
  std::filesystem::create_directories(opts.out_dir);
  return cfg;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

int cmd_oracle_check(const CommonOpts& opts) {
  const SimConfig cfg = load(opts);
  const double eta = cfg.physical.kappa * std::sqrt(cfg.oracle_n_empty);
  const std::vector<double> couplings = {0.0, 0.5 * cfg.physical.g0,
                                         cfg.physical.g0};
  constexpr int kGrid = 10;
  const double lo = -kTwoPi * 20e6, hi = kTwoPi * 20e6;

  const std::string table_path = join(opts.out_dir, "oracle_check.csv");
  std::ofstream table(table_path);
  if (!table) throw ConfigError("cannot write " + table_path);
  table << "g_mhz,delta_c_mhz,delta_a_eff_mhz,n_model,n_oracle,exc_model,"
           "exc_oracle,re_a_model,re_a_oracle,im_a_model,im_a_oracle,"
           "rel_err_max\n";

  double worst = 0.0;
  for (double g : couplings)
    for (int i = 0; i < kGrid; ++i)
      for (int j = 0; j < kGrid; ++j) {
        const double dc = lo + (hi - lo) * double(i) / double(kGrid - 1);
        const double da = lo + (hi - lo) * double(j) / double(kGrid - 1);
        const auto model =
            weak_drive_steady_state(g, dc, da, eta, cfg.physical);
        OracleConfig oc;
        oc.n_max = cfg.oracle_n_max;
        oc.g = g;
        oc.delta_c = dc;
        oc.delta_a_eff = da;
        oc.eta = eta;
        oc.gamma = cfg.physical.gamma;
        oc.kappa = cfg.physical.kappa;
        const auto rho = oracle_steady_state(oc);
        const auto obs = oracle_observables(rho, oc);

        double err = rel_err(model.photon_number, obs.photon_number);
        err = std::max(err, rel_err(model.excitation, obs.excitation));
        err = std::max(err, std::abs(model.field.a - obs.mean_a) /
                                std::max(std::abs(obs.mean_a), 1e-30));
        worst = std::max(worst, err);
        table << g / mhz(1.0) << ',' << dc / mhz(1.0) << ',' << da / mhz(1.0)
              << ',' << model.photon_number << ',' << obs.photon_number << ','
              << model.excitation << ',' << obs.excitation << ','
              << model.field.a.real() << ',' << obs.mean_a.real() << ','
              << model.field.a.imag() << ',' << obs.mean_a.imag() << ',' << err
              << "\n";
      }

  // Truncation convergence probe at the strongest-response corner.
  {
    OracleConfig oc;
    oc.n_max = cfg.oracle_n_max;
    oc.g = cfg.physical.g0;
    oc.delta_c = 0.0;
    oc.delta_a_eff = 0.0;
    oc.eta = eta;
    oc.gamma = cfg.physical.gamma;
    oc.kappa = cfg.physical.kappa;
    const auto coarse = oracle_observables(oracle_steady_state(oc), oc);
    OracleConfig fine = oc;
    fine.n_max = oc.n_max + 1;
    const auto refined = oracle_observables(oracle_steady_state(fine), fine);
    const double drift = rel_err(coarse.photon_number, refined.photon_number);
    if (drift > 1e-6)
      std::cerr << "warning: oracle truncation n_max=" << oc.n_max
                << " drifts by " << drift
                << " against n_max+1; increase oracle_n_max\n";
  }

  write_manifest(cfg, "oracle-check", nullptr, nullptr, {"oracle_check.csv"},
                 join(opts.out_dir, "manifest.json"));
  std::cout << "oracle-check: max relative error " << worst << " over "
            << couplings.size() * kGrid * kGrid << " points (threshold 1e-3)\n";
  if (worst >= 1e-3)
    throw ToleranceError("oracle-check: model deviates from the exact steady "
                         "state beyond 1e-3");
  return 0;
}

int cmd_calibrate(const CommonOpts& opts) {
  const SimConfig cfg = load(opts);
  const SimConfig calibrated = run_calibration(cfg);
  const std::string out_path = join(opts.out_dir, "calibrated.cfg");
  save_config(calibrated, out_path);
  write_manifest(calibrated, "calibrate", nullptr, nullptr, {"calibrated.cfg"},
                 join(opts.out_dir, "manifest.json"));
  std::cout << "calibrate: sigma_eps = " << calibrated.noise.sigma_eps
            << ", eta_probe = " << calibrated.protocol.eta_probe / mhz(1.0)
            << " MHz (" << out_path << ")\n";
  return 0;
}

struct SweepOpts {
  std::vector<double> detunings_mhz;
  std::vector<double> depths_mk;
  int atoms = 50;
  int workers = 1;
};

void add_sweep(CLI::App* sub, SweepOpts& opts) {
  sub->add_option("--detunings", opts.detunings_mhz,
                  "probe cavity detunings, MHz");
  sub->add_option("--depths", opts.depths_mk, "trap hold depths, mK");
  sub->add_option("--atoms", opts.atoms, "atoms per (detuning, depth) point")
      ->check(CLI::PositiveNumber);
  sub->add_option("--workers", opts.workers, "worker threads")
      ->check(CLI::PositiveNumber);
}

SweepSpec make_spec(const SweepOpts& opts) {
  SweepSpec spec;
  for (double d : opts.detunings_mhz) spec.detunings.push_back(mhz(d));
  for (double d : opts.depths_mk)
    spec.depths.push_back(kBoltzmann * 1e-3 * d);
  if (spec.detunings.empty())
    for (double d : {-25.0, -20.0, -16.0, -13.5, -11.0, -8.0, -4.0, 0.0, 4.0,
                     8.0, 11.0, 13.5, 16.0, 20.0, 25.0})
      spec.detunings.push_back(mhz(d));
  if (spec.depths.empty()) spec.depths.push_back(kBoltzmann * 1.6e-3);
  spec.atoms_per_point = opts.atoms;
  spec.workers = opts.workers;
  return spec;
}

int cmd_spectrum(const CommonOpts& opts, const SweepOpts& sweep_opts) {
  const SimConfig cfg = load(opts);
  const SweepSpec spec = make_spec(sweep_opts);
  const SweepResult result = run_sweep(cfg, spec);

  write_runs_jsonl(result.runs, join(opts.out_dir, "runs.jsonl"));
  write_spectrum_csv(transmission_spectrum(result.runs, true),
                     transmission_spectrum(result.runs, false),
                     join(opts.out_dir, "spectrum.csv"));
  write_coupling_hist_csv(coupling_distribution(result.runs, true),
                          coupling_distribution(result.runs, false),
                          join(opts.out_dir, "coupling_hist.csv"));
  std::vector<std::string> outputs = {"runs.jsonl", "spectrum.csv",
                                      "coupling_hist.csv"};
  try {
    const auto loc_all = axial_localization(result.runs, false, cfg.physical);
    const auto loc_q = axial_localization(result.runs, true, cfg.physical);
    write_localization_csv(loc_all, loc_q, cfg.physical,
                           join(opts.out_dir, "localization.csv"));
    outputs.push_back("localization.csv");
  } catch (const ToleranceError& e) {
    std::cerr << "warning: localization skipped: " << e.what() << "\n";
  }
  write_manifest(cfg, "spectrum", &spec, &result, outputs,
                 join(opts.out_dir, "manifest.json"));
  std::cout << "spectrum: " << result.runs.size() << " runs, "
            << result.n_failures << " failures, " << result.total_steps
            << " steps, " << result.wall_seconds << " s\n";
  return 0;
}

int cmd_lossrate(const CommonOpts& opts, const SweepOpts& sweep_opts) {
  const SimConfig cfg = load(opts);
  const SweepSpec spec = make_spec(sweep_opts);
  const SweepResult result = run_sweep(cfg, spec);

  write_runs_jsonl(result.runs, join(opts.out_dir, "runs.jsonl"));
  write_lossrate_csv(loss_rate_spectrum(result.runs),
                     join(opts.out_dir, "lossrate.csv"));
  write_attribution_csv(heating_attribution(result.runs),
                        join(opts.out_dir, "attribution.csv"));
  write_manifest(cfg, "lossrate", &spec, &result,
                 {"runs.jsonl", "lossrate.csv", "attribution.csv"},
                 join(opts.out_dir, "manifest.json"));
  std::cout << "lossrate: " << result.runs.size() << " runs, "
            << result.n_failures << " failures, " << result.total_steps
            << " steps, " << result.wall_seconds << " s\n";
  return 0;
}

struct TrajectoryOpts {
  double detuning_mhz = 0.0;
  double depth_mk = 1.6;
  std::uint64_t atom_index = 0;
};

int cmd_trajectory(const CommonOpts& opts, const TrajectoryOpts& traj) {
  SimConfig cfg = load(opts);
  cfg.protocol.probe_delta_c = mhz(traj.detuning_mhz);
  cfg.protocol.trap_depth_hold = kBoltzmann * 1e-3 * traj.depth_mk;
  const AtomRunResult run =
      run_atom(cfg.protocol, cfg.integrator, cfg.noise, cfg.physical,
               cfg.integrator.rng_seed, traj.atom_index);
  write_runs_jsonl({run}, join(opts.out_dir, "trajectory.jsonl"));
  write_manifest(cfg, "trajectory", nullptr, nullptr, {"trajectory.jsonl"},
                 join(opts.out_dir, "manifest.json"));
  std::cout << "trajectory: atom " << run.atom_index
            << (run.triggered ? " triggered at " : " no trigger by ")
            << run.trigger_time * 1e3 << " ms, " << run.intervals.size()
            << " intervals, exit " << run.exit_time * 1e3 << " ms"
            << (run.lost ? ", lost" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical trajectory simulator for one trapped atom "
               "strongly coupled to a driven optical cavity"};
  app.require_subcommand(1);

  CommonOpts oracle_opts, calib_opts, spec_opts, loss_opts, traj_opts;
  SweepOpts spec_sweep, loss_sweep;
  TrajectoryOpts traj_extra;

  add_common(app.add_subcommand("oracle-check",
                                "compare the analytic weak-drive model "
                                "against the exact steady state"),
             oracle_opts);
  add_common(app.add_subcommand(
                 "calibrate", "fit trap-noise amplitude and probe strength"),
             calib_opts);
  auto* spectrum =
      app.add_subcommand("spectrum", "transmission spectrum ensemble");
  add_common(spectrum, spec_opts);
  add_sweep(spectrum, spec_sweep);
  auto* lossrate =
      app.add_subcommand("lossrate", "probe-induced loss-rate ensemble");
  add_common(lossrate, loss_opts);
  add_sweep(lossrate, loss_sweep);
  auto* trajectory =
      app.add_subcommand("trajectory", "single-atom protocol dump");
  add_common(trajectory, traj_opts);
  trajectory->add_option("--detuning", traj_extra.detuning_mhz,
                         "probe cavity detuning, MHz");
  trajectory->add_option("--depth", traj_extra.depth_mk, "hold depth, mK")
      ->check(CLI::PositiveNumber);
  trajectory->add_option("--atom-index", traj_extra.atom_index,
                         "RNG stream / atom id");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("oracle-check")) return cmd_oracle_check(oracle_opts);
    if (app.got_subcommand("calibrate")) return cmd_calibrate(calib_opts);
    if (app.got_subcommand("spectrum")) return cmd_spectrum(spec_opts, spec_sweep);
    if (app.got_subcommand("lossrate")) return cmd_lossrate(loss_opts, loss_sweep);
    if (app.got_subcommand("trajectory")) return cmd_trajectory(traj_opts, traj_extra);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return 4;
  } catch (const ToleranceError& e) {
    std::cerr << "tolerance failure: " << e.what() << "\n";
    return 3;
  } catch (const FitError& e) {
    std::cerr << "fit failure: " << e.what() << "\n";
    return 3;
  } catch (const ModelValidityError& e) {
    std::cerr << "model validity failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
