"""Calibration of exposure constants against the reference SAR and ER values.

Two sets of constants are solved:

* the exposed tissue mass mapping baseline absorbed power to the baseline
  surface SAR target, plus one absorbed-power factor per case so that each
  case's surface SAR hits its target;
* the ambient total power density mapping the baseline ER at the reference
  depth and time to its target, plus one ER factor per case.

All constants apply uniformly at every depth and time.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping

from .config import SimulationConfig
from .errors import CalibrationError
from .physics import absorbed_power, all_powers, raw_er_reference
from .scenario import ScenarioId


@dataclass(frozen=True)
class Calibration:
    mode: str
    exposed_mass_kg: float
    sar_factors: Dict[str, float]
    pd_total_w_m2: float
    er_factors: Dict[str, float]
    reference_directivity_dbi: float = 17.3
    sar_targets: Dict[str, float] = field(default_factory=dict)
    er_targets: Dict[str, float] = field(default_factory=dict)

    def sar_factor(self, scenario: ScenarioId) -> float:
        return self.sar_factors[ScenarioId(scenario).value]

    def er_factor(self, scenario: ScenarioId) -> float:
        return self.er_factors[ScenarioId(scenario).value]

    def as_dict(self) -> dict:
        return {
            'mode': self.mode,
            'exposed_mass_kg': self.exposed_mass_kg,
            'sar_factors': dict(self.sar_factors),
            'pd_total_w_m2': self.pd_total_w_m2,
            'er_factors': dict(self.er_factors),
            'reference_directivity_dbi': self.reference_directivity_dbi,
            'sar_targets_w_kg': dict(self.sar_targets),
            'er_targets_percent': dict(self.er_targets),
        }


def solve_exposed_mass(absorbed_w: float, target_sar: float) -> float:
    """Mass (kg) for which ``absorbed_w / mass == target_sar``."""
    if not target_sar > 0:
        raise CalibrationError(f"target SAR must be > 0, got {target_sar}")
    mass = absorbed_w / target_sar
    if not mass > 0:
        raise CalibrationError(f"non-positive exposed mass {mass} (absorbed power {absorbed_w} W)")
    return mass


def case_factors(values: Mapping[str, float], targets: Mapping[str, float],
                 baseline: str = ScenarioId.BASELINE_8.value) -> Dict[str, float]:
    """Per-case multipliers mapping each case's value onto its target once the
    baseline is matched: (target_c / target_b) * (value_b / value_c)."""
    vb, tb = values[baseline], targets[baseline]
    out = {}
    for key, v in values.items():
        if not v > 0 or not targets[key] > 0:
            raise CalibrationError(f"{key}: cannot calibrate non-positive value {v}")
        f = (targets[key] / tb) * (vb / v)
        if not f > 0:
            raise CalibrationError(f"{key}: non-positive calibration factor {f}")
        out[key] = f
    return out


def _targets(seq) -> Dict[str, float]:
    return {s.value: float(v) for s, v in zip(ScenarioId, seq)}


def calibrate_table1(cfg: SimulationConfig) -> Calibration:
    powers = all_powers(cfg)
    sar_t = _targets(cfg.calibration.sar_targets_w_kg)
    er_t = _targets(cfg.calibration.er_targets_percent)
    base = ScenarioId.BASELINE_8.value

    absorbed = {s.value: absorbed_power(cfg, p) for s, p in powers.items()}
    mass = solve_exposed_mass(absorbed[base], sar_t[base])
    sar_f = case_factors(absorbed, sar_t)

    # ER scales as 1 / PD_total, so evaluate at unit ambient density first
    er_unit = {s.value: raw_er_reference(cfg, p, 1.0) for s, p in powers.items()}
    if not er_unit[base] > 0:
        raise CalibrationError("baseline exposure ratio is zero; cannot calibrate")
    pd_total = er_unit[base] / er_t[base]
    er_f = case_factors(er_unit, er_t)
    return Calibration('table1', mass, sar_f, pd_total, er_f,
                       cfg.calibration.reference_directivity_dbi, sar_t, er_t)


def uncalibrated(cfg: SimulationConfig) -> Calibration:
    ones = {s.value: 1.0 for s in ScenarioId}
    return Calibration('none', cfg.tissue.exposed_mass_kg, dict(ones), cfg.exposure.pd_total_w_m2,
                       dict(ones), cfg.calibration.reference_directivity_dbi)


def calibration_for(cfg: SimulationConfig) -> Calibration:
    if cfg.simulation.calibration == 'table1':
        return calibrate_table1(cfg)
    return uncalibrated(cfg)
