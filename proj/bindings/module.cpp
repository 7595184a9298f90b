#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cavitymc/analysis.hpp"
#include "cavitymc/config.hpp"
#include "cavitymc/errors.hpp"
#include "cavitymc/oracle.hpp"
#include "cavitymc/physics.hpp"
#include "cavitymc/runner.hpp"

namespace py = pybind11;
using namespace cavitymc;

namespace {

Vec3 to_vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

py::dict oracle_compare(const SimConfig& cfg, double g, double delta_c,
                        double delta_a_eff) {
  const double eta = cfg.physical.kappa * std::sqrt(cfg.oracle_n_empty);
  OracleConfig oc;
  oc.n_max = cfg.oracle_n_max;
  oc.g = g;
  oc.delta_c = delta_c;
  oc.delta_a_eff = delta_a_eff;
  oc.eta = eta;
  oc.gamma = cfg.physical.gamma;
  oc.kappa = cfg.physical.kappa;
  const auto rho = oracle_steady_state(oc);
  const auto obs = oracle_observables(rho, oc);
  const auto model = weak_drive_steady_state(g, delta_c, delta_a_eff, eta,
                                             cfg.physical);
  py::dict out;
  out["model_photon"] = model.photon_number;
  out["oracle_photon"] = obs.photon_number;
  out["model_excitation"] = model.excitation;
  out["oracle_excitation"] = obs.excitation;
  out["model_a"] = model.field.a;
  out["oracle_a"] = obs.mean_a;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semiclassical single-atom cavity QED trajectory simulator";

  py::register_exception<ModelValidityError>(m, "ModelValidityError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ToleranceError>(m, "ToleranceError");
  py::register_exception<CalibrationError>(m, "CalibrationError");
  py::register_exception<FitError>(m, "FitError");

  m.attr("code_version") = kCodeVersion;
  m.def("mhz", &mhz, "ordinary MHz -> rad/s");
  m.attr("hbar") = kHbar;
  m.attr("k_boltzmann") = kBoltzmann;

  py::class_<PhysicalParams>(m, "PhysicalParams")
      .def(py::init<>())
      .def_readwrite("g0", &PhysicalParams::g0)
      .def_readwrite("gamma", &PhysicalParams::gamma)
      .def_readwrite("kappa", &PhysicalParams::kappa)
      .def_readwrite("lambda_probe", &PhysicalParams::lambda_probe)
      .def_readwrite("lambda_trap", &PhysicalParams::lambda_trap)
      .def_readwrite("waist", &PhysicalParams::waist)
      .def_readwrite("cavity_length", &PhysicalParams::cavity_length)
      .def_readwrite("atom_mass", &PhysicalParams::atom_mass)
      .def_readwrite("delta_a0", &PhysicalParams::delta_a0)
      .def_readwrite("stark_per_depth", &PhysicalParams::stark_per_depth)
      .def("validate", &PhysicalParams::validate);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("physical", &SimConfig::physical)
      .def_property(
          "sigma_eps", [](const SimConfig& c) { return c.noise.sigma_eps; },
          [](SimConfig& c, double v) { c.noise.sigma_eps = v; })
      .def_property(
          "dt", [](const SimConfig& c) { return c.integrator.dt; },
          [](SimConfig& c, double v) { c.integrator.dt = v; })
      .def_property(
          "seed", [](const SimConfig& c) { return c.integrator.rng_seed; },
          [](SimConfig& c, std::uint64_t v) { c.integrator.rng_seed = v; })
      .def_property(
          "probe_delta_c",
          [](const SimConfig& c) { return c.protocol.probe_delta_c; },
          [](SimConfig& c, double v) { c.protocol.probe_delta_c = v; })
      .def_property(
          "trap_depth_hold",
          [](const SimConfig& c) { return c.protocol.trap_depth_hold; },
          [](SimConfig& c, double v) { c.protocol.trap_depth_hold = v; })
      .def_property(
          "max_run_time",
          [](const SimConfig& c) { return c.protocol.max_run_time; },
          [](SimConfig& c, double v) { c.protocol.max_run_time = v; })
      .def_property(
          "trigger_max_time",
          [](const SimConfig& c) { return c.protocol.trigger.max_time; },
          [](SimConfig& c, double v) { c.protocol.trigger.max_time = v; })
      .def_property(
          "eta_probe", [](const SimConfig& c) { return c.protocol.eta_probe; },
          [](SimConfig& c, double v) { c.protocol.eta_probe = v; })
      .def("validate", &SimConfig::validate);

  m.def("parse_config_text", &parse_config_text);
  m.def("write_config_text", &write_config_text);
  m.def("load_config", &load_config);
  m.def("save_config", &save_config);

  py::class_<SteadyStateResponse>(m, "SteadyStateResponse")
      .def_readonly("transmission_rel", &SteadyStateResponse::transmission_rel)
      .def_readonly("photon_number", &SteadyStateResponse::photon_number)
      .def_readonly("excitation", &SteadyStateResponse::excitation)
      .def_property_readonly(
          "a", [](const SteadyStateResponse& r) { return r.field.a; })
      .def_property_readonly(
          "sigma", [](const SteadyStateResponse& r) { return r.field.sigma; });

  m.def("weak_drive_steady_state", &weak_drive_steady_state, py::arg("g"),
        py::arg("delta_c"), py::arg("delta_a_eff"), py::arg("eta"),
        py::arg("params"));
  m.def("dressed_mode_frequencies", &dressed_mode_frequencies, py::arg("g"),
        py::arg("delta_ac"));
  m.def(
      "coupling_at",
      [](const std::array<double, 3>& r, const PhysicalParams& p) {
        return coupling_at(to_vec3(r), p);
      },
      py::arg("r"), py::arg("params"));
  m.def(
      "stark_shift_at",
      [](const std::array<double, 3>& r, double depth,
         const PhysicalParams& p) {
        return stark_shift_at(to_vec3(r), depth, p);
      },
      py::arg("r"), py::arg("trap_depth"), py::arg("params"));
  m.def(
      "delta_a_eff_at",
      [](const std::array<double, 3>& r, double depth, double delta_c,
         const PhysicalParams& p) {
        return delta_a_eff_at(to_vec3(r), depth, delta_c, p);
      },
      py::arg("r"), py::arg("trap_depth"), py::arg("delta_c"),
      py::arg("params"));
  m.def(
      "trap_potential",
      [](const std::array<double, 3>& r, double depth,
         const PhysicalParams& p) {
        return trap_potential(to_vec3(r), depth, p);
      },
      py::arg("r"), py::arg("trap_depth"), py::arg("params"));

  m.def("oracle_compare", &oracle_compare, py::arg("config"), py::arg("g"),
        py::arg("delta_c"), py::arg("delta_a_eff"),
        "analytic weak-drive model vs exact steady state at one point");

  py::enum_<IntervalKind>(m, "IntervalKind")
      .value("cooling", IntervalKind::cooling)
      .value("probe", IntervalKind::probe);

  py::class_<HeatingBudget>(m, "HeatingBudget")
      .def_readonly("spont_recoil", &HeatingBudget::spont_recoil)
      .def_readonly("dipole_fluct", &HeatingBudget::dipole_fluct)
      .def_readonly("trap_noise", &HeatingBudget::trap_noise)
      .def_readonly("probe_work", &HeatingBudget::probe_work)
      .def("total", &HeatingBudget::total);

  py::class_<IntervalRecord>(m, "IntervalRecord")
      .def_readonly("kind", &IntervalRecord::kind)
      .def_readonly("start", &IntervalRecord::start)
      .def_readonly("end", &IntervalRecord::end)
      .def_readonly("delta_c", &IntervalRecord::delta_c)
      .def_readonly("mean_transmission_rel",
                    &IntervalRecord::mean_transmission_rel)
      .def_readonly("mean_coupling", &IntervalRecord::mean_coupling)
      .def_readonly("mean_photon", &IntervalRecord::mean_photon)
      .def_readonly("max_excitation", &IntervalRecord::max_excitation)
      .def_readonly("qualified", &IntervalRecord::qualified)
      .def_readonly("atom_present", &IntervalRecord::atom_present)
      .def_readonly("exposure", &IntervalRecord::exposure)
      .def_readonly("budget", &IntervalRecord::budget)
      .def_property_readonly("axial_hist", [](const IntervalRecord& r) {
        return std::vector<std::uint32_t>(r.axial_hist.begin(),
                                          r.axial_hist.end());
      });

  py::class_<AtomRunResult>(m, "AtomRunResult")
      .def_readonly("atom_index", &AtomRunResult::atom_index)
      .def_readonly("triggered", &AtomRunResult::triggered)
      .def_readonly("trigger_time", &AtomRunResult::trigger_time)
      .def_readonly("intervals", &AtomRunResult::intervals)
      .def_readonly("exit_time", &AtomRunResult::exit_time)
      .def_readonly("heating_budget", &AtomRunResult::heating_budget)
      .def_readonly("lost", &AtomRunResult::lost)
      .def_readonly("loss_during_probe", &AtomRunResult::loss_during_probe)
      .def_readonly("stark_at_antinode", &AtomRunResult::stark_at_antinode)
      .def_readonly("trap_depth_hold", &AtomRunResult::trap_depth_hold)
      .def_readonly("probe_delta_c", &AtomRunResult::probe_delta_c)
      .def_readonly("max_excitation", &AtomRunResult::max_excitation);

  m.def(
      "run_atom",
      [](const SimConfig& cfg, std::uint64_t atom_index) {
        return run_atom(cfg.protocol, cfg.integrator, cfg.noise, cfg.physical,
                        cfg.integrator.rng_seed, atom_index);
      },
      py::arg("config"), py::arg("atom_index"),
      py::call_guard<py::gil_scoped_release>(),
      "full protocol for one atom; detuning/depth come from the config");

  m.def(
      "run_sweep",
      [](const SimConfig& cfg, const std::vector<double>& detunings,
         const std::vector<double>& depths, int atoms, int workers) {
        SweepSpec spec;
        spec.detunings = detunings;
        spec.depths = depths;
        spec.atoms_per_point = atoms;
        spec.workers = workers;
        return run_sweep(cfg, spec).runs;
      },
      py::arg("config"), py::arg("detunings"), py::arg("depths"),
      py::arg("atoms") = 50, py::arg("workers") = 1,
      py::call_guard<py::gil_scoped_release>());

  m.def("write_runs_jsonl", &write_runs_jsonl);
  m.def("read_runs_jsonl", &read_runs_jsonl);
  m.def("run_calibration", &run_calibration,
        py::call_guard<py::gil_scoped_release>());

  py::class_<SpectrumPoint>(m, "SpectrumPoint")
      .def_readonly("delta_c", &SpectrumPoint::delta_c)
      .def_readonly("trap_depth", &SpectrumPoint::trap_depth)
      .def_readonly("power_nw", &SpectrumPoint::power_nw)
      .def_readonly("mean_value", &SpectrumPoint::mean_value)
      .def_readonly("std_error", &SpectrumPoint::std_error)
      .def_readonly("n_intervals", &SpectrumPoint::n_intervals)
      .def_readonly("n_atoms", &SpectrumPoint::n_atoms);

  py::class_<LossRatePoint>(m, "LossRatePoint")
      .def_readonly("delta_c", &LossRatePoint::delta_c)
      .def_readonly("trap_depth", &LossRatePoint::trap_depth)
      .def_readonly("probe_rate", &LossRatePoint::probe_rate)
      .def_readonly("baseline_rate", &LossRatePoint::baseline_rate)
      .def_readonly("excess_rate", &LossRatePoint::excess_rate)
      .def_readonly("std_error", &LossRatePoint::std_error)
      .def_readonly("n_loss_probe", &LossRatePoint::n_loss_probe)
      .def_readonly("n_loss_cooling", &LossRatePoint::n_loss_cooling)
      .def_readonly("probe_exposure", &LossRatePoint::probe_exposure)
      .def_readonly("cooling_exposure", &LossRatePoint::cooling_exposure)
      .def_readonly("n_atoms", &LossRatePoint::n_atoms);

  py::class_<CouplingHistogram>(m, "CouplingHistogram")
      .def_readonly("bin_width", &CouplingHistogram::bin_width)
      .def_readonly("density", &CouplingHistogram::density)
      .def_readonly("mean", &CouplingHistogram::mean)
      .def_readonly("n_intervals", &CouplingHistogram::n_intervals)
      .def("fraction_below", &CouplingHistogram::fraction_below);

  py::class_<LocalizationResult>(m, "LocalizationResult")
      .def_readonly("fwhm", &LocalizationResult::fwhm)
      .def_readonly("n_samples", &LocalizationResult::n_samples)
      .def_property_readonly("density", [](const LocalizationResult& r) {
        return std::vector<double>(r.density.begin(), r.density.end());
      });

  py::class_<AttributionPoint>(m, "AttributionPoint")
      .def_readonly("delta_c", &AttributionPoint::delta_c)
      .def_readonly("trap_depth", &AttributionPoint::trap_depth)
      .def_readonly("defined", &AttributionPoint::defined)
      .def_readonly("spont_share", &AttributionPoint::spont_share)
      .def_readonly("dipole_share", &AttributionPoint::dipole_share)
      .def_readonly("totals", &AttributionPoint::totals);

  py::class_<PeakFitResult>(m, "PeakFitResult")
      .def_readonly("center_lo", &PeakFitResult::center_lo)
      .def_readonly("fwhm_lo", &PeakFitResult::fwhm_lo)
      .def_readonly("height_lo", &PeakFitResult::height_lo)
      .def_readonly("center_hi", &PeakFitResult::center_hi)
      .def_readonly("fwhm_hi", &PeakFitResult::fwhm_hi)
      .def_readonly("height_hi", &PeakFitResult::height_hi)
      .def_readonly("background", &PeakFitResult::background)
      .def_readonly("residual_rms", &PeakFitResult::residual_rms)
      .def_readonly("iterations", &PeakFitResult::iterations);

  m.def("transmission_spectrum", &transmission_spectrum, py::arg("runs"),
        py::arg("qualified_only"));
  m.def("loss_rate_spectrum", &loss_rate_spectrum, py::arg("runs"));
  m.def("coupling_distribution", &coupling_distribution, py::arg("runs"),
        py::arg("qualified_only"), py::arg("bin_width") = mhz(0.5));
  m.def(
      "axial_localization",
      [](const std::vector<AtomRunResult>& runs, bool qualified_only,
         const PhysicalParams& p) {
        return axial_localization(runs, qualified_only, p);
      },
      py::arg("runs"), py::arg("qualified_only"), py::arg("params"));
  m.def("heating_attribution", &heating_attribution, py::arg("runs"));
  m.def("fit_normal_modes", &fit_normal_modes, py::arg("delta_c"),
        py::arg("value"));
}
