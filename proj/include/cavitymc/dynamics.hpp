#pragma once
#include <array>
#include <cstdint>
#include <random>

#include "cavitymc/params.hpp"
#include "cavitymc/physics.hpp"

// Single-atom propagation: exact 2x2 linear field sub-steps, velocity-Verlet
// motion, Poisson/Gaussian stochastic kicks, piecewise-constant trap-depth
// noise, and a per-channel heating energy budget.

namespace cavitymc {

struct DriveSettings {
  double delta_c = 0.0;  // probe-cavity detuning
  double eta = 0.0;      // drive amplitude (rad/s * sqrt(photon))
  bool enabled = true;

  bool active() const { return enabled && eta > 0.0; }
};

// Piecewise-constant fractional trap-depth fluctuation: eps resampled from
// Normal(0, sigma_eps^2) every tau_noise; instantaneous depth (1+eps)*U0
// clamped at zero.
struct TrapNoiseProcess {
  double sigma_eps = 0.0;
  double tau_noise = 1e-6;
  double current_eps = 0.0;
  double clock = 0.0;  // time left until the next resampling
};

// Cumulative energy (J) injected per stochastic channel plus the signed work
// done by the mean probe dipole force.  Kick channels record the realized
// kinetic-energy change of each kick, so per-trajectory totals close the
// mechanical-energy balance; channel means grow monotonically while single
// increments carry a mean-zero p.dp/m cross term.
struct HeatingBudget {
  double spont_recoil = 0.0;
  double dipole_fluct = 0.0;
  double trap_noise = 0.0;
  double probe_work = 0.0;

  double total() const {
    return spont_recoil + dipole_fluct + trap_noise + probe_work;
  }
  HeatingBudget& operator+=(const HeatingBudget& o) {
    spont_recoil += o.spont_recoil;
    dipole_fluct += o.dipole_fluct;
    trap_noise += o.trap_noise;
    probe_work += o.probe_work;
    return *this;
  }
  friend HeatingBudget operator-(HeatingBudget a, const HeatingBudget& b) {
    a.spont_recoil -= b.spont_recoil;
    a.dipole_fluct -= b.dipole_fluct;
    a.trap_noise -= b.trap_noise;
    a.probe_work -= b.probe_work;
    return a;
  }
};

struct IntegratorConfig {
  double dt = 1e-9;
  int record_stride = 50;    // steps between statistics samples
  std::uint64_t rng_seed = 0;
};

struct ParticleState {
  double t = 0.0;
  Vec3 r;            // m, origin at a shared probe/trap antinode on the axis
  Vec3 p;            // kg m/s
  FieldState field;  // co-evolved intracavity field and dipole
};

inline constexpr int kAxialBins = 48;

// Per-segment statistics.  Transmission is normalized to the empty cavity at
// the same drive, |a_empty|^2 = eta^2/(kappa^2 + delta_c^2); mean_photon
// keeps the raw |a|^2 so other normalizations can be formed downstream.
struct SegmentSummary {
  double exposure = 0.0;  // time actually simulated before exit
  bool exited = false;
  double mean_transmission_rel = 1.0;
  double mean_photon = 0.0;
  double mean_coupling = 0.0;  // <g0 |psi(r)|>
  double max_excitation = 0.0;
  std::uint64_t n_samples = 0;
  std::array<std::uint32_t, kAxialBins> axial_hist{};  // x folded to one well
  HeatingBudget budget;  // energy added during this segment only
};

// Advances (a, sigma) by dt with coefficients frozen: exact matrix
// exponential of the 2x2 linear system with constant inhomogeneity eta.
// g_signed is the signed coupling at the midpoint position.  Throws
// ModelValidityError when the excitation leaves the weak-excitation domain
// (|sigma|^2 > 0.5).
FieldState field_update(const FieldState& f, double g_signed, double delta_c,
                        double delta_a_eff, double eta, double kappa,
                        double gamma, double dt);

// Velocity-Verlet step under trap + probe dipole (field frozen) + gravity.
void motion_step(ParticleState& state, double trap_depth, double dt,
                 const PhysicalParams& p);

// Spontaneous recoils (Poisson, each hbar*k in a uniform random direction)
// and the Gaussian axial dipole-fluctuation kick with variance 2*D_dip*dt.
// Budget channels receive the realized kinetic-energy change per kick.
void stochastic_kick(ParticleState& state, double dt, double delta_a_eff,
                     HeatingBudget& budget, std::mt19937_64& rng,
                     const PhysicalParams& p);

// Advances the depth-fluctuation process by dt, resampling eps when its
// clock expires.
void trap_noise_step(TrapNoiseProcess& proc, double dt, std::mt19937_64& rng);

// Full coupled propagation for `duration`.  Returns the summary; the state,
// noise process and budget are advanced in place.  An atom is lost when its
// mechanical energy in the trap is positive while moving radially outward
// past 2*w0, or when |x| exceeds 20 wavelengths.
SegmentSummary simulate_segment(ParticleState& state, double duration,
                                const DriveSettings& drive, double trap_depth,
                                TrapNoiseProcess& noise, HeatingBudget& budget,
                                const IntegratorConfig& cfg,
                                const PhysicalParams& p, std::mt19937_64& rng);

// Mechanical energy used by the loss criterion and the conservation tests:
// kinetic + trap potential + gravitational potential (zero at the origin).
double mechanical_energy(const ParticleState& state, double trap_depth,
                         const PhysicalParams& p);

// Probe-free storage-time calibration fixture: thermal atoms in the hold
// trap, integrated with a coarse step (no field dynamics).
struct CalibrationFixture {
  double trap_depth = kBoltzmann * 1.6e-3;
  double init_temperature = 150e-6;  // motional temperature after cooling
  int n_trajectories = 200;
  double max_time = 0.12;  // per-trajectory cap on the storage time
  double dt = 10e-9;
  double tau_noise = 1e-6;
  std::uint64_t seed = 20260801;
};

// Mean probe-free storage time at a given noise amplitude (trajectories
// capped at fixture.max_time; common random numbers across calls).
double probe_free_mean_storage_time(double sigma_eps,
                                    const CalibrationFixture& fixture,
                                    const PhysicalParams& p);

// Bisects sigma_eps until the mean storage time matches target_lifetime
// within 10%.  Throws CalibrationError when the target cannot be bracketed
// (e.g. the noise-free lifetime is already below target).
double calibrate_trap_noise(double target_lifetime,
                            const CalibrationFixture& fixture,
                            const PhysicalParams& p);

}  // namespace cavitymc
