#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cavitymc/dynamics.hpp"
#include "cavitymc/params.hpp"
#include "cavitymc/protocol.hpp"

namespace cavitymc {

// Trap depth that maps to a 280 nW transmitted trap-light power readout.
inline constexpr double kDepthPerDisplayNw = kBoltzmann * 1.6e-3 / 280.0;

inline double display_power_nw(double trap_depth) {
  return trap_depth / kDepthPerDisplayNw;
}

struct SpectrumPoint {
  double delta_c = 0.0;        // rad/s
  double trap_depth = 0.0;     // J
  double power_nw = 0.0;       // derived display axis
  double mean_value = 0.0;
  double std_error = 0.0;      // 0 when a single interval contributes
  long n_intervals = 0;
  long n_atoms = 0;
};

// Mean relative transmission of probe intervals, grouped by
// (delta_c, trap_depth). Groups with no contributing interval are omitted.
std::vector<SpectrumPoint> transmission_spectrum(
    const std::vector<AtomRunResult>& runs, bool qualified_only);

struct LossRatePoint {
  double delta_c = 0.0;
  double trap_depth = 0.0;
  double power_nw = 0.0;
  double probe_rate = 0.0;       // losses during probe / probe exposure (1/s)
  double baseline_rate = 0.0;    // cooling-interval hazard (1/s)
  double excess_rate = 0.0;      // probe_rate - baseline_rate
  double std_error = 0.0;        // Poisson error on the difference
  long n_loss_probe = 0;
  long n_loss_cooling = 0;
  double probe_exposure = 0.0;   // s, while the atom was present
  double cooling_exposure = 0.0;
  long n_atoms = 0;
};

// Probe-induced loss rate per (delta_c, trap_depth) group with the
// cooling-interval hazard subtracted as baseline. No qualification filter.
std::vector<LossRatePoint> loss_rate_spectrum(
    const std::vector<AtomRunResult>& runs);

struct CouplingHistogram {
  double bin_width = mhz(0.5);   // rad/s
  std::vector<double> density;   // unit area: sum(density)*bin_width = 1
  double mean = 0.0;             // rad/s
  long n_intervals = 0;

  double edge(std::size_t i) const { return double(i) * bin_width; }
  double fraction_below(double g) const;
};

// Distribution of per-interval mean coupling over probe intervals,
// one unit-weight entry per interval, normalized to unit area.
CouplingHistogram coupling_distribution(const std::vector<AtomRunResult>& runs,
                                        bool qualified_only,
                                        double bin_width = mhz(0.5));

struct LocalizationResult {
  double fwhm = 0.0;  // m
  std::array<double, kAxialBins> density{};  // unit area on [-lt/4, lt/4)
  std::uint64_t n_samples = 0;
};

// FWHM of the axial displacement from the nearest trap antinode, from
// position samples accumulated during probe intervals. Requires at least
// 1e3 samples.
LocalizationResult axial_localization(const std::vector<AtomRunResult>& runs,
                                      bool qualified_only,
                                      const PhysicalParams& p);

struct AttributionPoint {
  double delta_c = 0.0;
  double trap_depth = 0.0;
  bool defined = false;      // false when no probe-channel heat was recorded
  double spont_share = 0.0;  // share of spont + dipole heat in probe intervals
  double dipole_share = 0.0;
  HeatingBudget totals;      // raw probe-interval sums (J)
};

// Share of probe-induced heating carried by spontaneous recoil vs dipole
// force fluctuations, per (delta_c, trap_depth) group, probe intervals only.
std::vector<AttributionPoint> heating_attribution(
    const std::vector<AtomRunResult>& runs);

struct PeakFitResult {
  double center_lo = 0.0;  // rad/s, center_lo < center_hi
  double fwhm_lo = 0.0;
  double height_lo = 0.0;
  double center_hi = 0.0;
  double fwhm_hi = 0.0;
  double height_hi = 0.0;
  double background = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
};

// Least-squares double-Lorentzian fit on a flat background, seeded from the
// two largest local maxima. Throws FitError when the peaks merge, a peak
// amplitude collapses, or the residual stays above threshold. With per-point
// standard errors the residual threshold widens to 2x their RMS, so noisy
// rate curves are rejected only for misfit beyond the counting noise.
PeakFitResult fit_normal_modes(const std::vector<double>& delta_c,
                               const std::vector<double>& value,
                               const std::vector<double>& std_error = {});

}  // namespace cavitymc
