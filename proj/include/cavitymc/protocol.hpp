#pragma once
#include <cstdint>
#include <vector>

#include "cavitymc/dynamics.hpp"
#include "cavitymc/params.hpp"

// Experiment state machine: fountain injection, photon-counting trigger,
// trap-depth step, alternating cooling/probe intervals, qualification and
// exit-time determination.

namespace cavitymc {

struct TriggerConfig {
  double bin_time = 10e-6;
  double threshold_rel = 0.05;  // relative-transmission trigger level
  double quantum_efficiency = 0.32;
  bool use_shot_noise = true;
  double max_time = 10e-3;  // give up if no trigger within the fountain pass

  void validate() const {
    if (!(bin_time > 0.0)) throw ConfigError("trigger bin_time must be > 0");
    if (!(threshold_rel > 0.0 && threshold_rel < 1.0))
      throw ConfigError("trigger threshold_rel must fall in (0, 1)");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
      throw ConfigError("quantum_efficiency must fall in (0, 1]");
    if (!(max_time > 0.0)) throw ConfigError("trigger max_time must be > 0");
  }
};

struct ProtocolConfig {
  double cooling_duration = 500e-6;
  double probe_duration = 100e-6;
  double probe_delta_c = 0.0;
  double trap_depth_guide = kBoltzmann * 0.4e-3;
  double trap_depth_hold = kBoltzmann * 1.6e-3;
  double qualification_threshold = 0.02;
  double exit_threshold = 0.80;
  TriggerConfig trigger;
  double max_run_time = 20e-3;
  // Drive amplitudes: the guide/trigger phase runs bright for counting
  // statistics, the trapped phase respects the excitation ceiling.
  double eta_probe = mhz(0.44);
  double eta_trigger = mhz(1.4) * 0.67082039324993690892;  // kappa*sqrt(0.45)

  void validate() const {
    trigger.validate();
    if (!(cooling_duration > 0.0 && probe_duration > 0.0))
      throw ConfigError("interval durations must be > 0");
    if (!(qualification_threshold > 0.0 &&
          qualification_threshold < exit_threshold && exit_threshold < 1.0))
      throw ConfigError(
          "need 0 < qualification_threshold < exit_threshold < 1");
    if (!(trap_depth_guide > 0.0 && trap_depth_hold > 0.0))
      throw ConfigError("trap depths must be > 0");
    if (!(max_run_time > 0.0)) throw ConfigError("max_run_time must be > 0");
    if (eta_probe < 0.0 || eta_trigger < 0.0)
      throw ConfigError("drive amplitudes must be >= 0");
  }
};

enum class IntervalKind { cooling, probe };

// One cooling or probe interval.  mean_transmission_rel is normalized to the
// resonant empty cavity (eta^2/kappa^2), the convention the spectra use; it
// coincides with the same-drive normalization at delta_c = 0 where all
// protocol decisions are made.
struct IntervalRecord {
  IntervalKind kind = IntervalKind::cooling;
  double start = 0.0;
  double end = 0.0;
  double delta_c = 0.0;
  double mean_transmission_rel = 1.0;
  double mean_coupling = 0.0;
  double mean_photon = 0.0;
  double max_excitation = 0.0;
  bool qualified = false;
  bool atom_present = false;  // present for the full interval
  double exposure = 0.0;      // time the atom was simulated in this interval
  HeatingBudget budget;       // energy added during this interval
  std::array<std::uint32_t, kAxialBins> axial_hist{};
};

struct AtomRunResult {
  std::uint64_t atom_index = 0;
  bool triggered = false;
  double trigger_time = 0.0;
  std::vector<IntervalRecord> intervals;
  double exit_time = 0.0;
  HeatingBudget heating_budget;
  bool lost = false;  // dynamical loss observed
  bool loss_during_probe = false;
  double stark_at_antinode = 0.0;
  double trap_depth_hold = 0.0;
  double probe_delta_c = 0.0;
  double max_excitation = 0.0;
};

// Fountain injection below the mode: slow upward launch with small
// transverse velocity spread; the guide trap is already on.
ParticleState sample_initial_atom(std::mt19937_64& rng,
                                  const PhysicalParams& p);

// Detector counts for one bin: Poisson around q.e. * 2 kappa |a|^2 * bin
// when shot noise is on, the rounded expectation when off.
long detect_counts(double mean_photon_number, double kappa,
                   const TriggerConfig& trigger, std::mt19937_64& rng);

struct TriggerOutcome {
  bool triggered = false;
  double time = 0.0;  // end of the triggering bin
  bool lost = false;  // atom dynamically left during the attempt
};

// Monitors binned counts against the empty-cavity expectation at the guide
// depth; on trigger the trap depth steps to the hold value instantaneously.
TriggerOutcome run_trigger_phase(ParticleState& state,
                                 const ProtocolConfig& cfg,
                                 const IntegratorConfig& integ,
                                 TrapNoiseProcess& noise,
                                 HeatingBudget& budget,
                                 const PhysicalParams& p,
                                 std::mt19937_64& rng);

// Alternating cooling/probe intervals from the trigger time until loss or
// max_run_time; fills interval records, exit time and qualification flags.
AtomRunResult run_trapping_sequence(ParticleState& state, double t0,
                                    const ProtocolConfig& cfg,
                                    const IntegratorConfig& integ,
                                    TrapNoiseProcess& noise,
                                    const PhysicalParams& p,
                                    std::mt19937_64& rng);

// Marks probe intervals qualified when both adjacent cooling intervals have
// mean relative transmission below the qualification threshold.
void qualify_intervals(AtomRunResult& result, const ProtocolConfig& cfg);

// Exit-time rule, applied offline to stored records: end of the last cooling
// interval whose mean relative transmission is below the exit threshold, or
// the trigger time when no interval qualifies.
double recompute_exit_time(const AtomRunResult& result,
                           const ProtocolConfig& cfg);

// Full single-atom run: injection, trigger, trapping sequence.  The RNG
// stream derives from (master_seed, atom_index) so ensembles are
// scheduling-independent.  sigma_eps/tau describe the calibrated trap noise.
AtomRunResult run_atom(const ProtocolConfig& cfg, const IntegratorConfig& integ,
                       const TrapNoiseProcess& noise_template,
                       const PhysicalParams& p, std::uint64_t master_seed,
                       std::uint64_t atom_index);

}  // namespace cavitymc
