"""Per-scenario physical quantities derived from a :class:`SimulationConfig`.

Emitted power feeding the exposure metrics is the UL share of the active UL
elements, the DL share of the active DL elements and the adjacency
interference; :func:`antenna.radiated_power` (UL share plus interference) is
reported alongside it.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import antenna, exposure, mimo
from .antenna import ArrayLayout, Role, Substrate
from .config import SimulationConfig
from .exposure import DepthProfile, TissueStack
from .scenario import ScenarioId, apply_scenario

REFERENCE_2 = 'REF_2EL'  # 1 UL + 1 DL reference handset


@dataclass(frozen=True)
class ScenarioPowers:
    scenario: ScenarioId
    layout: ArrayLayout
    ledger: Dict[Tuple[int, int], float]
    ul_radiated_w: float
    ul_share_w: float
    total_emitted_w: float
    interference_w: float

    @property
    def active_ul(self) -> int:
        return self.layout.count(Role.UL)

    @property
    def active_dl(self) -> int:
        return self.layout.count(Role.DL)

    @property
    def active_elements(self) -> int:
        return self.active_ul + self.active_dl


def element_gain(cfg: SimulationConfig) -> float:
    return 10.0 ** (cfg.layout.element_gain_dbi / 10.0)


def base_layout(cfg: SimulationConfig) -> ArrayLayout:
    lay = cfg.layout
    substrate = Substrate(lay.substrate_thickness_mm, lay.substrate_dielectric_constant,
                          lay.substrate_loss_tangent)
    base = antenna.alternating_layout(8, lay.per_antenna_power_w, element_gain(cfg))
    return ArrayLayout(base.elements, substrate, (lay.frame_width_mm, lay.frame_length_mm))


def scenario_layout(cfg: SimulationConfig, scenario: ScenarioId) -> ArrayLayout:
    lay = cfg.layout
    return apply_scenario(base_layout(cfg), scenario, lay.case1_offload or None,
                          lay.case3_offload or None)


def scenario_powers(cfg: SimulationConfig, scenario: ScenarioId) -> ScenarioPowers:
    layout = scenario_layout(cfg, scenario)
    coeffs = antenna.default_coefficients(layout, cfg.interference.default_fraction,
                                          cfg.interference_overrides())
    alpha = cfg.layout.split_alpha
    ledger = antenna.interference_ledger(layout, coeffs)
    interference = float(sum(ledger.values()))
    ul_rad = antenna.radiated_power(layout, coeffs, alpha)
    total = antenna.total_emitted_power(layout, coeffs, alpha)
    return ScenarioPowers(ScenarioId(scenario), layout, ledger, ul_rad, ul_rad - interference,
                          total, interference)


def all_powers(cfg: SimulationConfig) -> Dict[ScenarioId, ScenarioPowers]:
    return {s: scenario_powers(cfg, s) for s in ScenarioId}


# -- tissue and grids -----------------------------------------------------

def er_tissue(cfg: SimulationConfig) -> TissueStack:
    return exposure.read_tissue_file(cfg.tissue.er_tissue_file, cfg.tissue.exposed_mass_kg)


def sar_tissue(cfg: SimulationConfig, mass_kg: float) -> TissueStack:
    return exposure.read_tissue_file(cfg.tissue.sar_tissue_file, mass_kg)


def table1_grid(cfg):
    return exposure.depth_grid(cfg.depth.table1_max_mm, cfg.depth.table1_step_mm)


def er_grid(cfg):
    return exposure.depth_grid(cfg.depth.er_max_mm, cfg.depth.er_step_mm)


def thermal_grid(cfg):
    return exposure.depth_grid(cfg.depth.thermal_max_mm, cfg.depth.thermal_step_mm)


def er_times(cfg) -> np.ndarray:
    e = cfg.exposure
    n = int(round(e.duration_s / e.time_step_s))
    times = np.round(np.arange(n + 1) * e.time_step_s, 9)
    if times[-1] < e.duration_s:
        times = np.append(times, e.duration_s)
    return times


# -- exposure quantities --------------------------------------------------

def far_field_gain(cfg: SimulationConfig, frequency_ghz: float) -> float:
    """Transmit gain of the full 8-element aperture toward the observer."""
    return antenna.array_directivity(8, frequency_ghz * 1e9, cfg.layout.element_pitch_mm,
                                     element_gain(cfg)).value


def pd_far(cfg: SimulationConfig, powers: ScenarioPowers, frequency_ghz: float,
           gain: Optional[float] = None) -> float:
    g = far_field_gain(cfg, frequency_ghz) if gain is None else gain
    return exposure.power_density_far(g, powers.total_emitted_w, cfg.exposure.far_field_distance_m)


def surface_density(cfg: SimulationConfig, powers: ScenarioPowers) -> float:
    """Incident density at the skin from every active element at the
    near-field distance (element gain per element)."""
    return exposure.power_density_far(element_gain(cfg), powers.total_emitted_w,
                                      cfg.exposure.near_field_distance_m)


def pd_depth(cfg: SimulationConfig, powers: ScenarioPowers) -> DepthProfile:
    return exposure.depth_attenuation(surface_density(cfg, powers), er_tissue(cfg),
                                      cfg.tissue.er_frequency_ghz * 1e9, er_grid(cfg))


def absorbed_power(cfg: SimulationConfig, powers: ScenarioPowers) -> float:
    return cfg.tissue.coupling_fraction * powers.total_emitted_w


def raw_er_reference(cfg: SimulationConfig, powers: ScenarioPowers, pd_total: float) -> float:
    """Uncalibrated ER at the reference depth and the end of the exposure."""
    ctx = exposure.ExposureContext(cfg.exposure.location_factor, pd_total, cfg.exposure.duration_s)
    density = pd_depth(cfg, powers).at(cfg.exposure.er_reference_depth_mm)
    ramp = float(exposure.exposure_ramp(cfg.exposure.duration_s, cfg.exposure.ramp_tau_s))
    return exposure.exposure_ratio(ctx, density) * ramp


# -- channel --------------------------------------------------------------

def channel_dims(powers: ScenarioPowers) -> Tuple[int, int]:
    """(receive, transmit) antenna counts: active DL by active UL."""
    return max(powers.active_dl, 1), max(powers.active_ul, 1)


def shared_channels(cfg: SimulationConfig, dims: Sequence[Tuple[int, int]]) -> Dict[Tuple[int, int], List[mimo.ChannelMatrix]]:
    """Decomposed channel realizations for every requested size.

    Realization ``s`` uses seed ``seed + s``; smaller arrays see the leading
    block of the same 4x4 draw, so capacity differences reflect topology only.
    """
    seed = cfg.simulation.seed
    out = {d: [] for d in dims}
    r_max = max(4, *(d[0] for d in dims))
    t_max = max(4, *(d[1] for d in dims))
    for s in range(cfg.channel.capacity_seeds):
        full = mimo.generate_channel(r_max, t_max, seed=seed + s, model=cfg.channel.model)
        for d in dims:
            out[d].append(mimo.svd_decompose(full.submatrix(*d)))
    return out


def link_snr(cfg: SimulationConfig, frequency_ghz: float) -> float:
    """Linear SNR falling with the square of frequency from the reference."""
    ch = cfg.channel
    return 10.0 ** (ch.snr_ref_db / 10.0) * (ch.snr_ref_frequency_ghz / frequency_ghz) ** 2


def bandwidth_hz(cfg: SimulationConfig, frequency_ghz: float) -> float:
    return cfg.channel.fractional_bandwidth * frequency_ghz * 1e9


def capacity_curve(cfg: SimulationConfig, channels: Sequence[mimo.ChannelMatrix],
                   frequencies_ghz: Sequence[float]) -> np.ndarray:
    return np.array([mimo.mean_capacity(channels, link_snr(cfg, f), bandwidth_hz(cfg, f))
                     for f in frequencies_ghz])
