"""Calibrated exposure metrics and the per-scenario pipeline."""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import exposure, physics
from .antenna import Directivity, array_directivity
from .bioheat import BioheatResult, bioheat_solve
from .calibration import Calibration, calibration_for
from .config import SimulationConfig, dump_config
from .errors import SimulationError
from .exposure import DepthProfile, ExposureContext
from .physics import ScenarioPowers
from .scenario import EnergyReport, ScenarioId, constant_schedule, energy_consumed


def sar_depth(cfg: SimulationConfig, powers: ScenarioPowers, cal: Calibration,
              z_mm: Optional[np.ndarray] = None) -> DepthProfile:
    tissue = physics.sar_tissue(cfg, cal.exposed_mass_kg)
    absorbed = physics.absorbed_power(cfg, powers) * cal.sar_factor(powers.scenario)
    grid = physics.table1_grid(cfg) if z_mm is None else z_mm
    return exposure.sar_profile(absorbed, tissue, cfg.tissue.sar_frequency_ghz * 1e9, grid)


def er_surface(cfg: SimulationConfig, powers: ScenarioPowers, cal: Calibration):
    """ER over (time, depth); returns (times_s, depth_mm, grid)."""
    ctx = ExposureContext(cfg.exposure.location_factor, cal.pd_total_w_m2, cfg.exposure.duration_s)
    density = physics.pd_depth(cfg, powers)
    times = physics.er_times(cfg)
    grid = exposure.exposure_ratio_grid(ctx, density, times, cfg.exposure.ramp_tau_s,
                                        cal.er_factor(powers.scenario))
    return times, density.z_mm, grid


def er_at_reference(cfg: SimulationConfig, powers: ScenarioPowers, cal: Calibration) -> float:
    times, z, grid = er_surface(cfg, powers, cal)
    j = int(np.argmin(np.abs(z - cfg.exposure.er_reference_depth_mm)))
    return float(grid[-1, j])


def thermal(cfg: SimulationConfig, powers: ScenarioPowers, cal: Calibration) -> BioheatResult:
    grid = physics.thermal_grid(cfg)
    sar = sar_depth(cfg, powers, cal, grid)
    th = cfg.thermal
    duration = cfg.exposure.duration_s
    n = max(1, int(round(duration / th.sample_interval_s)))
    samples = np.linspace(0.0, duration, n + 1)
    return bioheat_solve(physics.sar_tissue(cfg, cal.exposed_mass_kg), sar, duration,
                         ambient_k=th.ambient_k, sample_times_s=samples,
                         surface_bc=th.surface_bc, surface_h=th.surface_h_w_m2k,
                         blood_density=th.blood_density_kg_m3,
                         blood_specific_heat=th.blood_specific_heat_j_kgk)


def scenario_energy(cfg: SimulationConfig, powers: ScenarioPowers,
                    duration_s: Optional[float] = None) -> EnergyReport:
    duration = cfg.energy.duration_s if duration_s is None else duration_s
    sched = constant_schedule(duration, powers.active_ul, powers.active_dl,
                              cfg.layout.per_antenna_power_w, powers.interference_w)
    return energy_consumed(sched)


def directivity_for(cfg: SimulationConfig, n_elements: int, frequency_ghz: float) -> Directivity:
    return array_directivity(n_elements, frequency_ghz * 1e9, cfg.layout.element_pitch_mm,
                             physics.element_gain(cfg))


@dataclass(frozen=True)
class ScenarioResult:
    scenario: ScenarioId
    config_text: str
    calibration: Dict[str, object]
    powers: ScenarioPowers
    frequencies_ghz: np.ndarray
    capacity_bps: np.ndarray
    directivity_frequencies_ghz: np.ndarray
    directivity_dbi: np.ndarray
    pd_far_w_m2: np.ndarray
    pd_depth: DepthProfile
    sar: DepthProfile
    er_times_s: np.ndarray
    er_depth_mm: np.ndarray
    er_percent: np.ndarray
    temperature: BioheatResult
    energy: EnergyReport


def run_scenario(scenario: ScenarioId, cfg: SimulationConfig,
                 calibration: Optional[Calibration] = None) -> ScenarioResult:
    """Compose every model for one scenario; deterministic for a given config."""
    scenario = ScenarioId(scenario)
    try:
        cal = calibration or calibration_for(cfg)
        powers = physics.scenario_powers(cfg, scenario)
        freqs = np.array(cfg.band.frequencies_ghz)
        dims = physics.channel_dims(powers)
        channels = physics.shared_channels(cfg, [dims])[dims]
        capacity = physics.capacity_curve(cfg, channels, freqs)
        dfreqs = np.array(cfg.band.directivity_frequencies_ghz)
        dirs = np.array([directivity_for(cfg, powers.active_elements, f).dbi for f in dfreqs])
        pd_far = np.array([physics.pd_far(cfg, powers, f) for f in freqs])
        times, z, er = er_surface(cfg, powers, cal)
        return ScenarioResult(
            scenario, dump_config(cfg), cal.as_dict(), powers, freqs, capacity, dfreqs, dirs,
            pd_far, physics.pd_depth(cfg, powers), sar_depth(cfg, powers, cal), times, z, er,
            thermal(cfg, powers, cal), scenario_energy(cfg, powers))
    except SimulationError as exc:
        raise type(exc)(f"scenario {scenario.value}: {exc}") from exc
