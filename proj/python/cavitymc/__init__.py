"""Semiclassical Monte Carlo of a single atom in a driven optical cavity.

Thin wrapper over the C++ core: steady-state cavity response, an exact
small-basis quantum oracle, the full capture/cool/probe protocol for
individual atoms, ensemble sweeps, and the analysis operations
(spectra, loss rates, coupling histograms, localization, heating
attribution, double-Lorentzian fits).
"""

from ._core import (  # noqa: F401
    AtomRunResult,
    AttributionPoint,
    CalibrationError,
    ConfigError,
    CouplingHistogram,
    FitError,
    HeatingBudget,
    IntervalKind,
    IntervalRecord,
    LocalizationResult,
    LossRatePoint,
    ModelValidityError,
    PeakFitResult,
    PhysicalParams,
    SimConfig,
    SpectrumPoint,
    SteadyStateResponse,
    ToleranceError,
    axial_localization,
    code_version,
    coupling_at,
    coupling_distribution,
    delta_a_eff_at,
    dressed_mode_frequencies,
    fit_normal_modes,
    heating_attribution,
    hbar,
    k_boltzmann,
    load_config,
    loss_rate_spectrum,
    mhz,
    oracle_compare,
    parse_config_text,
    read_runs_jsonl,
    run_atom,
    run_calibration,
    run_sweep,
    save_config,
    stark_shift_at,
    transmission_spectrum,
    trap_potential,
    weak_drive_steady_state,
    write_config_text,
    write_runs_jsonl,
)

__version__ = code_version
