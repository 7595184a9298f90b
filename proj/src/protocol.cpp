#include "cavitymc/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "cavitymc/errors.hpp"
#include "cavitymc/physics.hpp"
#include "cavitymc/rng.hpp"

namespace cavitymc {

ParticleState sample_initial_atom(std::mt19937_64& rng,
                                  const PhysicalParams& p) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01;
  ParticleState st;
  st.r.x = (2.0 * u01(rng) - 1.0) * 5.0 * p.lambda_probe;
  st.r.y = -2.0 * p.waist;
  st.r.z = (2.0 * u01(rng) - 1.0) * 0.5 * p.waist;
  st.p.x = p.atom_mass * 0.01 * n01(rng);
  st.p.y = p.atom_mass * (0.03 + 0.07 * u01(rng));  // launched upward
  st.p.z = p.atom_mass * 0.01 * n01(rng);
  return st;
}

long detect_counts(double mean_photon_number, double kappa,
                   const TriggerConfig& trigger, std::mt19937_64& rng) {
  if (!(trigger.bin_time > 0.0))
    throw ConfigError("trigger bin_time must be > 0");
  const double mean = trigger.quantum_efficiency * 2.0 * kappa *
                      mean_photon_number * trigger.bin_time;
  if (!(mean > 0.0)) return 0;
  if (!trigger.use_shot_noise) return std::lround(mean);
  std::poisson_distribution<long> poisson(mean);
  return poisson(rng);
}

TriggerOutcome run_trigger_phase(ParticleState& state,
                                 const ProtocolConfig& cfg,
                                 const IntegratorConfig& integ,
                                 TrapNoiseProcess& noise,
                                 HeatingBudget& budget,
                                 const PhysicalParams& p,
                                 std::mt19937_64& rng) {
  DriveSettings drive;
  drive.delta_c = 0.0;
  drive.eta = cfg.eta_trigger;
  const double n_empty =
      cfg.eta_trigger * cfg.eta_trigger / (p.kappa * p.kappa);
  const double expected_empty = cfg.trigger.quantum_efficiency * 2.0 *
                                p.kappa * n_empty * cfg.trigger.bin_time;
  if (!(expected_empty > 0.0))
    throw ConfigError("trigger drive gives zero expected counts");

  const long long bins =
      std::max<long long>(1, std::llround(cfg.trigger.max_time / cfg.trigger.bin_time));
  TriggerOutcome out;
  for (long long i = 1; i <= bins; ++i) {
    SegmentSummary seg =
        simulate_segment(state, cfg.trigger.bin_time, drive,
                         cfg.trap_depth_guide, noise, budget, integ, p, rng);
    out.time = double(i) * cfg.trigger.bin_time;
    if (seg.exited) {
      out.lost = true;
      return out;
    }
    const long counts = detect_counts(seg.mean_photon, p.kappa, cfg.trigger, rng);
    if (double(counts) / expected_empty < cfg.trigger.threshold_rel) {
      out.triggered = true;
      return out;
    }
  }
  return out;
}

AtomRunResult run_trapping_sequence(ParticleState& state, double t0,
                                    const ProtocolConfig& cfg,
                                    const IntegratorConfig& integ,
                                    TrapNoiseProcess& noise,
                                    const PhysicalParams& p,
                                    std::mt19937_64& rng) {
  AtomRunResult res;
  res.triggered = true;
  res.trigger_time = t0;
  res.trap_depth_hold = cfg.trap_depth_hold;
  res.probe_delta_c = cfg.probe_delta_c;
  res.stark_at_antinode = p.stark_per_depth * cfg.trap_depth_hold / kHbar;

  const double dt = integ.dt;
  const long long n_cool = std::llround(cfg.cooling_duration / dt);
  const long long n_probe = std::llround(cfg.probe_duration / dt);
  if (n_cool < 1 || n_probe < 1)
    throw ConfigError("interval durations below one time step");
  const long long steps_total =
      cfg.max_run_time > t0 ? std::llround((cfg.max_run_time - t0) / dt) : 0;

  DriveSettings cool_drive;
  cool_drive.delta_c = 0.0;
  cool_drive.eta = cfg.eta_probe;
  DriveSettings probe_drive;
  probe_drive.delta_c = cfg.probe_delta_c;
  probe_drive.eta = cfg.eta_probe;

  // Interval boundaries come from integer step counts, so the timing
  // pattern is exactly reproducible offline.
  long long done = 0;
  bool cooling = true;
  while (done < steps_total) {
    const long long n =
        std::min(cooling ? n_cool : n_probe, steps_total - done);
    const DriveSettings& drive = cooling ? cool_drive : probe_drive;

    IntervalRecord rec;
    rec.kind = cooling ? IntervalKind::cooling : IntervalKind::probe;
    rec.start = t0 + double(done) * dt;
    rec.end = t0 + double(done + n) * dt;
    rec.delta_c = drive.delta_c;

    const HeatingBudget before = res.heating_budget;
    SegmentSummary seg =
        simulate_segment(state, double(n) * dt, drive, cfg.trap_depth_hold,
                         noise, res.heating_budget, integ, p, rng);
    rec.exposure = seg.exposure;
    rec.mean_photon = seg.mean_photon;
    rec.mean_transmission_rel =
        cfg.eta_probe > 0.0
            ? seg.mean_photon * p.kappa * p.kappa / (cfg.eta_probe * cfg.eta_probe)
            : 1.0;
    rec.mean_coupling = seg.mean_coupling;
    rec.max_excitation = seg.max_excitation;
    rec.atom_present = !seg.exited;
    rec.budget = res.heating_budget - before;
    rec.axial_hist = seg.axial_hist;
    res.intervals.push_back(rec);
    res.max_excitation = std::max(res.max_excitation, seg.max_excitation);

    done += n;
    if (seg.exited) {
      res.lost = true;
      if (!cooling) res.loss_during_probe = true;
      break;
    }
    cooling = !cooling;
  }

  res.exit_time = recompute_exit_time(res, cfg);
  qualify_intervals(res, cfg);
  return res;
}

void qualify_intervals(AtomRunResult& result, const ProtocolConfig& cfg) {
  const auto& iv = result.intervals;
  auto cool_below = [&](std::size_t i) {
    return iv[i].kind == IntervalKind::cooling &&
           iv[i].mean_transmission_rel < cfg.qualification_threshold;
  };
  for (std::size_t i = 0; i < iv.size(); ++i) {
    auto& rec = result.intervals[i];
    if (rec.kind != IntervalKind::probe) continue;
    rec.qualified =
        i > 0 && i + 1 < iv.size() && cool_below(i - 1) && cool_below(i + 1);
  }
}

double recompute_exit_time(const AtomRunResult& result,
                           const ProtocolConfig& cfg) {
  double t = result.trigger_time;
  for (const auto& rec : result.intervals)
    if (rec.kind == IntervalKind::cooling &&
        rec.mean_transmission_rel < cfg.exit_threshold)
      t = rec.end;
  return t;
}

AtomRunResult run_atom(const ProtocolConfig& cfg, const IntegratorConfig& integ,
                       const TrapNoiseProcess& noise_template,
                       const PhysicalParams& p, std::uint64_t master_seed,
                       std::uint64_t atom_index) {
  cfg.validate();
  p.validate();
  auto rng = make_stream(master_seed, atom_index);

  ParticleState state = sample_initial_atom(rng, p);
  TrapNoiseProcess noise = noise_template;
  noise.current_eps = 0.0;
  noise.clock = 0.0;
  HeatingBudget trigger_budget;

  const TriggerOutcome trig =
      run_trigger_phase(state, cfg, integ, noise, trigger_budget, p, rng);
  if (!trig.triggered) {
    AtomRunResult res;
    res.atom_index = atom_index;
    res.triggered = false;
    res.trigger_time = trig.time;
    res.lost = trig.lost;
    res.trap_depth_hold = cfg.trap_depth_hold;
    res.probe_delta_c = cfg.probe_delta_c;
    res.stark_at_antinode = p.stark_per_depth * cfg.trap_depth_hold / kHbar;
    res.heating_budget = trigger_budget;
    res.exit_time = trig.time;
    return res;
  }

  AtomRunResult res =
      run_trapping_sequence(state, trig.time, cfg, integ, noise, p, rng);
  res.atom_index = atom_index;
  res.heating_budget += trigger_budget;
  return res;
}

}  // namespace cavitymc
