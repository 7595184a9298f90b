#pragma once

#include <string>
#include <vector>

#include "cavitymc/analysis.hpp"
#include "cavitymc/config.hpp"
#include "cavitymc/protocol.hpp"

namespace cavitymc {

inline constexpr const char* kCodeVersion = "0.1.0";

// A sweep is a flat queue of independent (depth, detuning, atom) tasks.
// Task index = (depth_i * n_detunings + det_i) * atoms_per_point + atom_i;
// it doubles as the atom's RNG stream id, so numeric output never depends
// on the worker count.
struct SweepSpec {
  std::vector<double> detunings;  // probe delta_c, rad/s
  std::vector<double> depths;     // trap_depth_hold, J
  int atoms_per_point = 50;
  int workers = 1;

  std::size_t n_tasks() const {
    return detunings.size() * depths.size() * std::size_t(atoms_per_point);
  }
};

struct SweepResult {
  std::vector<AtomRunResult> runs;  // task order, failed tasks excluded
  long n_failures = 0;              // model-validity aborts
  std::vector<std::string> failure_messages;  // first few, for diagnostics
  double wall_seconds = 0.0;
  std::uint64_t total_steps = 0;    // derived from integrated exposure
};

// Runs the full protocol for every task. Trajectories that abort on a
// model-validity violation are excluded; more than 1% of them aborts the
// sweep with a ToleranceError.
SweepResult run_sweep(const SimConfig& cfg, const SweepSpec& sweep);

// Trap-noise + probe-strength calibration: fits sigma_eps to the target
// probe-free storage time, then scales eta_probe down until the pinned-atom
// excitation maximum over the probe sweep is at the configured target.
SimConfig run_calibration(const SimConfig& base);

// Archived-run round trip (JSON lines, one AtomRunResult per line).
void write_runs_jsonl(const std::vector<AtomRunResult>& runs,
                      const std::string& path);
std::vector<AtomRunResult> read_runs_jsonl(const std::string& path);

// Tabular emission; column units are spelled in the header names.
void write_spectrum_csv(const std::vector<SpectrumPoint>& qualified,
                        const std::vector<SpectrumPoint>& all,
                        const std::string& path);
void write_lossrate_csv(const std::vector<LossRatePoint>& pts,
                        const std::string& path);
void write_coupling_hist_csv(const CouplingHistogram& qualified,
                             const CouplingHistogram& all,
                             const std::string& path);
void write_localization_csv(const LocalizationResult& all,
                            const LocalizationResult& qualified,
                            const PhysicalParams& p, const std::string& path);
void write_attribution_csv(const std::vector<AttributionPoint>& pts,
                           const std::string& path);

// Reproducibility manifest: config snapshot, seed, code version, outputs,
// and run metrics.
void write_manifest(const SimConfig& cfg, const std::string& command,
                    const SweepSpec* sweep, const SweepResult* result,
                    const std::vector<std::string>& outputs,
                    const std::string& path);

}  // namespace cavitymc
