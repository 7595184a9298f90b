#include "cavitymc/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "cavitymc/errors.hpp"
#include "cavitymc/physics.hpp"
#include "json.hpp"

namespace cavitymc {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json budget_to_json(const HeatingBudget& b) {
  return json{{"spont_recoil", b.spont_recoil},
              {"dipole_fluct", b.dipole_fluct},
              {"trap_noise", b.trap_noise},
              {"probe_work", b.probe_work}};
}

HeatingBudget budget_from_json(const json& j) {
  HeatingBudget b;
  b.spont_recoil = j.at("spont_recoil").get<double>();
  b.dipole_fluct = j.at("dipole_fluct").get<double>();
  b.trap_noise = j.at("trap_noise").get<double>();
  b.probe_work = j.at("probe_work").get<double>();
  return b;
}

json run_to_json(const AtomRunResult& r) {
  json intervals = json::array();
  for (const auto& rec : r.intervals) {
    json h = json::array();
    for (auto c : rec.axial_hist) h.push_back(c);
    intervals.push_back(
        json{{"kind", rec.kind == IntervalKind::probe ? "probe" : "cooling"},
             {"start", rec.start},
             {"end", rec.end},
             {"delta_c", rec.delta_c},
             {"mean_transmission_rel", rec.mean_transmission_rel},
             {"mean_coupling", rec.mean_coupling},
             {"mean_photon", rec.mean_photon},
             {"max_excitation", rec.max_excitation},
             {"qualified", rec.qualified},
             {"atom_present", rec.atom_present},
             {"exposure", rec.exposure},
             {"budget", budget_to_json(rec.budget)},
             {"axial_hist", std::move(h)}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"atom_index", r.atom_index},
              {"triggered", r.triggered},
              {"trigger_time", r.trigger_time},
              {"exit_time", r.exit_time},
              {"lost", r.lost},
              {"loss_during_probe", r.loss_during_probe},
              {"stark_at_antinode", r.stark_at_antinode},
              {"trap_depth_hold", r.trap_depth_hold},
              {"probe_delta_c", r.probe_delta_c},
              {"max_excitation", r.max_excitation},
              {"heating_budget", budget_to_json(r.heating_budget)},
              {"intervals", std::move(intervals)}};
}

AtomRunResult run_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("unsupported run schema version");
  AtomRunResult r;
  r.atom_index = j.at("atom_index").get<std::uint64_t>();
  r.triggered = j.at("triggered").get<bool>();
  r.trigger_time = j.at("trigger_time").get<double>();
  r.exit_time = j.at("exit_time").get<double>();
  r.lost = j.at("lost").get<bool>();
  r.loss_during_probe = j.at("loss_during_probe").get<bool>();
  r.stark_at_antinode = j.at("stark_at_antinode").get<double>();
  r.trap_depth_hold = j.at("trap_depth_hold").get<double>();
  r.probe_delta_c = j.at("probe_delta_c").get<double>();
  r.max_excitation = j.at("max_excitation").get<double>();
  r.heating_budget = budget_from_json(j.at("heating_budget"));
  for (const auto& ji : j.at("intervals")) {
    IntervalRecord rec;
    rec.kind = ji.at("kind").get<std::string>() == "probe"
                   ? IntervalKind::probe
                   : IntervalKind::cooling;
    rec.start = ji.at("start").get<double>();
    rec.end = ji.at("end").get<double>();
    rec.delta_c = ji.at("delta_c").get<double>();
    rec.mean_transmission_rel = ji.at("mean_transmission_rel").get<double>();
    rec.mean_coupling = ji.at("mean_coupling").get<double>();
    rec.mean_photon = ji.at("mean_photon").get<double>();
    rec.max_excitation = ji.at("max_excitation").get<double>();
    rec.qualified = ji.at("qualified").get<bool>();
    rec.atom_present = ji.at("atom_present").get<bool>();
    rec.exposure = ji.at("exposure").get<double>();
    rec.budget = budget_from_json(ji.at("budget"));
    const auto& h = ji.at("axial_hist");
    if (h.size() != kAxialBins)
      throw ConfigError("axial_hist has the wrong bin count");
    for (std::size_t k = 0; k < kAxialBins; ++k)
      rec.axial_hist[k] = h[k].get<std::uint32_t>();
    r.intervals.push_back(std::move(rec));
  }
  return r;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  return out;
}

// Fixed-format float for CSV cells: round-trip-exact is not needed there,
// but the text must be deterministic across platforms.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

SweepResult run_sweep(const SimConfig& cfg, const SweepSpec& sweep) {
  cfg.validate();
  if (sweep.atoms_per_point < 1)
    throw ConfigError("atoms_per_point must be >= 1");
  if (sweep.detunings.empty() || sweep.depths.empty())
    throw ConfigError("sweep needs at least one detuning and one depth");
  const std::size_t n_tasks = sweep.n_tasks();
  const int workers =
      int(std::min<std::size_t>(std::max(1, sweep.workers), n_tasks));

  std::vector<std::optional<AtomRunResult>> slots(n_tasks);
  std::vector<std::string> failure_messages;
  std::atomic<std::size_t> next{0};
  std::atomic<long> n_failures{0};
  std::mutex failure_mutex;

  const auto t_start = std::chrono::steady_clock::now();
  auto work = [&]() {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) return;
      const std::size_t atoms = std::size_t(sweep.atoms_per_point);
      const std::size_t point = task / atoms;
      ProtocolConfig proto = cfg.protocol;
      proto.probe_delta_c = sweep.detunings[point % sweep.detunings.size()];
      proto.trap_depth_hold = sweep.depths[point / sweep.detunings.size()];
      try {
        slots[task] = run_atom(proto, cfg.integrator, cfg.noise, cfg.physical,
                               cfg.integrator.rng_seed, task);
      } catch (const ModelValidityError& e) {
        n_failures.fetch_add(1);
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure_messages.size() < 16) failure_messages.emplace_back(e.what());
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SweepResult res;
  res.n_failures = n_failures.load();
  res.failure_messages = std::move(failure_messages);
  res.runs.reserve(n_tasks);
  for (auto& s : slots)
    if (s) res.runs.push_back(std::move(*s));
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  double exposure = 0.0;
  for (const auto& run : res.runs) {
    exposure += run.trigger_time;
    for (const auto& rec : run.intervals) exposure += rec.exposure;
  }
  res.total_steps = std::uint64_t(exposure / cfg.integrator.dt + 0.5);

  if (double(res.n_failures) > 0.01 * double(n_tasks)) {
    std::string msg = "sweep aborted: " + std::to_string(res.n_failures) +
                      " of " + std::to_string(n_tasks) +
                      " trajectories failed model validity";
    for (const auto& m : res.failure_messages) msg += "\n  " + m;
    throw ToleranceError(msg);
  }
  return res;
}

SimConfig run_calibration(const SimConfig& base) {
  base.validate();
  SimConfig cfg = base;

  CalibrationFixture fixture;
  fixture.trap_depth = cfg.protocol.trap_depth_hold;
  fixture.init_temperature = cfg.calib_temperature;
  fixture.n_trajectories = cfg.calib_trajectories;
  fixture.max_time = cfg.calib_max_time;
  fixture.dt = cfg.calib_dt;
  fixture.tau_noise = cfg.noise.tau_noise;
  cfg.noise.sigma_eps =
      calibrate_trap_noise(cfg.storage_target, fixture, cfg.physical);

  // Pinned-atom excitation maximum over a dense probe sweep at full trap
  // depth; |sigma|^2 scales as eta^2, so one downward rescale reaches the
  // target exactly and re-calibration is a no-op.
  const Vec3 antinode{0.0, 0.0, 0.0};
  double max_exc = 0.0;
  const double lo = -kTwoPi * 45e6, hi = kTwoPi * 45e6, step = kTwoPi * 0.05e6;
  for (double dc = lo; dc <= hi; dc += step) {
    const double da = delta_a_eff_at(antinode, cfg.protocol.trap_depth_hold,
                                     dc, cfg.physical);
    const auto resp = weak_drive_steady_state(
        cfg.physical.g0, dc, da, cfg.protocol.eta_probe, cfg.physical);
    max_exc = std::max(max_exc, resp.excitation);
  }
  if (max_exc > cfg.excitation_target)
    cfg.protocol.eta_probe *= std::sqrt(cfg.excitation_target / max_exc);
  return cfg;
}

void write_runs_jsonl(const std::vector<AtomRunResult>& runs,
                      const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : runs) out << run_to_json(r).dump() << "\n";
  if (!out) throw ConfigError("failed writing runs file: " + path);
}

std::vector<AtomRunResult> read_runs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open runs file: " + path);
  std::vector<AtomRunResult> runs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      runs.push_back(run_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError("runs file " + path + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return runs;
}

void write_spectrum_csv(const std::vector<SpectrumPoint>& qualified,
                        const std::vector<SpectrumPoint>& all,
                        const std::string& path) {
  auto out = open_out(path);
  out << "qualified,delta_c_mhz,trap_depth_mk,power_nw,mean_transmission,"
         "std_error,n_intervals,n_atoms\n";
  auto emit = [&](const std::vector<SpectrumPoint>& pts, int flag) {
    for (const auto& pt : pts)
      out << flag << ',' << num(pt.delta_c / mhz(1.0)) << ','
          << num(pt.trap_depth / (kBoltzmann * 1e-3)) << ','
          << num(pt.power_nw) << ',' << num(pt.mean_value) << ','
          << num(pt.std_error) << ',' << pt.n_intervals << ',' << pt.n_atoms
          << "\n";
  };
  emit(qualified, 1);
  emit(all, 0);
}

void write_lossrate_csv(const std::vector<LossRatePoint>& pts,
                        const std::string& path) {
  auto out = open_out(path);
  out << "delta_c_mhz,trap_depth_mk,power_nw,probe_rate_hz,baseline_rate_hz,"
         "excess_rate_hz,std_error_hz,n_loss_probe,n_loss_cooling,"
         "probe_exposure_s,cooling_exposure_s,n_atoms\n";
  for (const auto& pt : pts)
    out << num(pt.delta_c / mhz(1.0)) << ','
        << num(pt.trap_depth / (kBoltzmann * 1e-3)) << ',' << num(pt.power_nw)
        << ',' << num(pt.probe_rate) << ',' << num(pt.baseline_rate) << ','
        << num(pt.excess_rate) << ',' << num(pt.std_error) << ','
        << pt.n_loss_probe << ',' << pt.n_loss_cooling << ','
        << num(pt.probe_exposure) << ',' << num(pt.cooling_exposure) << ','
        << pt.n_atoms << "\n";
}

void write_coupling_hist_csv(const CouplingHistogram& qualified,
                             const CouplingHistogram& all,
                             const std::string& path) {
  auto out = open_out(path);
  out << "qualified,g_lo_mhz,g_hi_mhz,density_per_mhz\n";
  auto emit = [&](const CouplingHistogram& h, int flag) {
    for (std::size_t i = 0; i < h.density.size(); ++i)
      out << flag << ',' << num(h.edge(i) / mhz(1.0)) << ','
          << num(h.edge(i + 1) / mhz(1.0)) << ','
          << num(h.density[i] * mhz(1.0)) << "\n";
  };
  emit(qualified, 1);
  emit(all, 0);
}

void write_localization_csv(const LocalizationResult& all,
                            const LocalizationResult& qualified,
                            const PhysicalParams& p, const std::string& path) {
  auto out = open_out(path);
  out << "# axial density folded about the nearest trap antinode\n";
  out << "# fwhm_all_nm = " << num(all.fwhm * 1e9)
      << ", fwhm_qualified_nm = " << num(qualified.fwhm * 1e9)
      << ", n_samples_all = " << all.n_samples
      << ", n_samples_qualified = " << qualified.n_samples << "\n";
  out << "x_nm,density_all_per_nm,density_qualified_per_nm\n";
  const double bin = 0.5 * p.lambda_trap / double(kAxialBins);
  for (std::size_t i = 0; i < kAxialBins; ++i) {
    const double x = -0.25 * p.lambda_trap + (double(i) + 0.5) * bin;
    out << num(x * 1e9) << ',' << num(all.density[i] * 1e-9) << ','
        << num(qualified.density[i] * 1e-9) << "\n";
  }
}

void write_attribution_csv(const std::vector<AttributionPoint>& pts,
                           const std::string& path) {
  auto out = open_out(path);
  out << "delta_c_mhz,trap_depth_mk,defined,spont_share,dipole_share,"
         "spont_recoil_j,dipole_fluct_j,trap_noise_j,probe_work_j\n";
  for (const auto& pt : pts)
    out << num(pt.delta_c / mhz(1.0)) << ','
        << num(pt.trap_depth / (kBoltzmann * 1e-3)) << ','
        << (pt.defined ? 1 : 0) << ',' << num(pt.spont_share) << ','
        << num(pt.dipole_share) << ',' << num(pt.totals.spont_recoil) << ','
        << num(pt.totals.dipole_fluct) << ',' << num(pt.totals.trap_noise)
        << ',' << num(pt.totals.probe_work) << "\n";
}

void write_manifest(const SimConfig& cfg, const std::string& command,
                    const SweepSpec* sweep, const SweepResult* result,
                    const std::vector<std::string>& outputs,
                    const std::string& path) {
  json j{{"schema_version", kSchemaVersion},
         {"command", command},
         {"code_version", kCodeVersion},
         {"master_seed", cfg.integrator.rng_seed},
         {"config", write_config_text(cfg)},
         {"outputs", outputs}};
  if (sweep) {
    json dets = json::array(), deps = json::array();
    for (double d : sweep->detunings) dets.push_back(d / mhz(1.0));
    for (double d : sweep->depths) deps.push_back(d / (kBoltzmann * 1e-3));
    j["sweep"] = json{{"detunings_mhz", dets},
                      {"depths_mk", deps},
                      {"atoms_per_point", sweep->atoms_per_point},
                      {"workers", sweep->workers}};
  }
  if (result)
    j["metrics"] = json{{"wall_seconds", result->wall_seconds},
                        {"total_steps", result->total_steps},
                        {"n_runs", result->runs.size()},
                        {"n_failures", result->n_failures}};
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace cavitymc
