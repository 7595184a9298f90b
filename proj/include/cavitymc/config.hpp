#pragma once

#include <string>

#include "cavitymc/dynamics.hpp"
#include "cavitymc/params.hpp"
#include "cavitymc/protocol.hpp"

namespace cavitymc {

// Full simulation configuration. The text form is flat `key = value` with
// unit-suffixed keys (g0_mhz, trap_depth_hold_mk, ...); units are converted
// exactly once, at parse time. Unknown or duplicate keys are rejected with
// line diagnostics.
struct SimConfig {
  PhysicalParams physical;
  ProtocolConfig protocol;
  TrapNoiseProcess noise;
  IntegratorConfig integrator;

  // Trap-noise calibration block.
  double storage_target = 30e-3;       // s, probe-free mean storage time
  int calib_trajectories = 200;
  double calib_max_time = 0.12;        // s, per-trajectory cap
  double calib_dt = 10e-9;             // s
  double calib_temperature = 150e-6;   // K, initial thermal ensemble
  double excitation_target = 0.014;    // max |sigma|^2 across the probe sweep

  // Reference-oracle block.  The default drive probes the linear-response
  // regime; the model/oracle deviation is first order in this photon number
  // and is dominated by the transmission interference dips.
  int oracle_n_max = 3;
  double oracle_n_empty = 1e-4;        // empty-cavity photon number for eta

  SimConfig();
  void validate() const;
};

SimConfig parse_config_text(const std::string& text);
std::string write_config_text(const SimConfig& cfg);

SimConfig load_config(const std::string& path);
void save_config(const SimConfig& cfg, const std::string& path);

}  // namespace cavitymc
