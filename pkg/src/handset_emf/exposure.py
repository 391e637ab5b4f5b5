"""RF dosimetry: far-field power density, depth absorption, SAR and exposure ratio."""

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.constants import epsilon_0, mu_0

from .errors import ParameterError

DEFAULT_EXPOSED_MASS = 0.010  # kg, regulatory 10 g averaging mass
DEFAULT_THERMAL_CONDUCTIVITY = 0.37  # W/(m K), skin

TISSUE_COLUMNS = ('name', 'thickness_mm', 'sigma_S_per_m', 'eps_r', 'rho_kg_m3',
                  'c_J_kgK', 'perfusion_per_s')


@dataclass(frozen=True)
class TissueLayer:
    name: str
    thickness_mm: float
    conductivity: float
    relative_permittivity: float
    mass_density: float
    specific_heat: float
    blood_perfusion: float
    thermal_conductivity: float = DEFAULT_THERMAL_CONDUCTIVITY

    def __post_init__(self):
        positive = ('thickness_mm', 'conductivity', 'relative_permittivity',
                    'mass_density', 'specific_heat', 'thermal_conductivity')
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"layer {self.name!r}: {name} must be > 0, got {value}")
        if not (np.isfinite(self.blood_perfusion) and self.blood_perfusion >= 0):
            raise ParameterError(f"layer {self.name!r}: blood_perfusion must be >= 0")


@dataclass(frozen=True)
class TissueStack:
    """Ordered tissue layers from the skin surface inwards.

    Depths past the last layer boundary are treated as continuing in the
    last layer.
    """
    layers: Tuple[TissueLayer, ...]
    exposed_mass: float = DEFAULT_EXPOSED_MASS

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))
        if not self.layers:
            raise ParameterError("tissue stack needs at least one layer")
        if not self.exposed_mass > 0:
            raise ParameterError(f"exposed mass must be > 0, got {self.exposed_mass}")

    @property
    def boundaries_mm(self) -> np.ndarray:
        """Start depth of each layer."""
        return np.concatenate([[0.0], np.cumsum([l.thickness_mm for l in self.layers])[:-1]])

    def layer_index(self, z_mm: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.boundaries_mm, np.asarray(z_mm), side='right') - 1

    def property_at(self, name: str, z_mm: np.ndarray) -> np.ndarray:
        values = np.array([getattr(l, name) for l in self.layers], dtype=float)
        return values[self.layer_index(z_mm)]

    def with_mass(self, mass: float) -> 'TissueStack':
        return TissueStack(self.layers, mass)


@dataclass(frozen=True)
class DepthProfile:
    """Scalar metric sampled on a uniform depth grid starting at 0 mm."""
    z_mm: np.ndarray
    values: np.ndarray
    unit: str = ''

    def __post_init__(self):
        z = np.array(self.z_mm, dtype=float)
        v = np.array(self.values, dtype=float)
        if z.ndim != 1 or z.shape != v.shape or z.size < 1:
            raise ParameterError("depth grid and values must have matching length")
        if z[0] != 0.0 or np.any(np.diff(z) <= 0):
            raise ParameterError("depth grid must start at 0 and strictly increase")
        if not np.all(np.isfinite(v)):
            raise ParameterError("profile values must be finite")
        z.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, 'z_mm', z)
        object.__setattr__(self, 'values', v)

    def at(self, z_mm: float) -> float:
        i = int(np.argmin(np.abs(self.z_mm - z_mm)))
        if abs(self.z_mm[i] - z_mm) > 1e-9:
            raise ParameterError(f"depth {z_mm} mm is not on the profile grid")
        return float(self.values[i])

    def scaled(self, factor: float, unit: Optional[str] = None) -> 'DepthProfile':
        return DepthProfile(self.z_mm, self.values * factor, self.unit if unit is None else unit)


@dataclass(frozen=True)
class ExposureContext:
    location_factor: float = 1.0
    pd_total: float = 100.0
    duration_s: float = 40.0

    def __post_init__(self):
        if not self.location_factor > 0:
            raise ParameterError(f"location factor must be > 0, got {self.location_factor}")
        if not self.pd_total > 0:
            raise ParameterError(f"total power density must be > 0, got {self.pd_total}")
        if self.duration_s < 0:
            raise ParameterError("duration must be >= 0")


def depth_grid(depth_max_mm: float, step_mm: float) -> np.ndarray:
    """Uniform grid 0..depth_max inclusive; nodes are exact multiples of step."""
    if not (depth_max_mm > 0 and step_mm > 0):
        raise ParameterError("depth range and step must be > 0")
    n = int(round(depth_max_mm / step_mm))
    if not math.isclose(n * step_mm, depth_max_mm, rel_tol=1e-9):
        raise ParameterError(f"depth {depth_max_mm} mm is not a multiple of step {step_mm} mm")
    return np.round(np.arange(n + 1) * step_mm, 12)


def read_tissue_file(path: Union[str, Path], exposed_mass: float = DEFAULT_EXPOSED_MASS) -> TissueStack:
    """Parse a whitespace-separated tissue file, one layer per row.

    Columns: name, thickness_mm, sigma_S_per_m, eps_r, rho_kg_m3, c_J_kgK,
    perfusion_per_s, and optionally a trailing thermal conductivity in
    W/(m K). Lines starting with '#' are ignored.
    """
    text = Path(path).read_text() if not str(path).startswith('builtin:') else \
        resources.files('handset_emf.data').joinpath(str(path)[len('builtin:'):]).read_text()
    layers = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        parts = line.split()
        if len(parts) not in (7, 8):
            raise ParameterError(f"{path}:{lineno}: expected 7 or 8 columns, got {len(parts)}")
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: {exc}") from None
        layers.append(TissueLayer(parts[0], *nums))
    return TissueStack(tuple(layers), exposed_mass)


def write_tissue_file(tissue: TissueStack, path: Union[str, Path]) -> None:
    lines = ['# ' + ' '.join(TISSUE_COLUMNS) + ' k_W_mK']
    for l in tissue.layers:
        lines.append(' '.join([l.name] + [repr(float(v)) for v in (
            l.thickness_mm, l.conductivity, l.relative_permittivity, l.mass_density,
            l.specific_heat, l.blood_perfusion, l.thermal_conductivity)]))
    Path(path).write_text('\n'.join(lines) + '\n')


def power_density_far(gain: float, radiated: float, distance: float) -> float:
    """Far-field power density G P / (4 pi d^2) in W/m^2."""
    if not distance > 0:
        raise ParameterError(f"distance must be > 0, got {distance}")
    if not gain > 0:
        raise ParameterError(f"gain must be > 0, got {gain}")
    if radiated < 0:
        raise ParameterError(f"radiated power must be >= 0, got {radiated}")
    return gain * radiated / (4.0 * math.pi * distance ** 2)


def power_density_array(gains: Sequence[float], powers: Sequence[float], distance: float) -> float:
    """Additive density of several radiating elements."""
    if len(gains) != len(powers):
        raise ParameterError("gains and powers must have equal length")
    return sum(power_density_far(g, p, distance) for g, p in zip(gains, powers))


def penetration_depth(frequency_hz: float, conductivity: float, relative_permittivity: float) -> float:
    """Field penetration depth 1/alpha (m) of a plane wave in a lossy dielectric."""
    if not (frequency_hz > 0 and conductivity > 0 and relative_permittivity > 0):
        raise ParameterError("frequency, conductivity and permittivity must be > 0")
    w = 2.0 * math.pi * frequency_hz
    eps = relative_permittivity * epsilon_0
    loss = conductivity / (w * eps)
    alpha = w * math.sqrt(mu_0 * eps / 2.0) * math.sqrt(math.sqrt(1.0 + loss ** 2) - 1.0)
    return 1.0 / alpha


def layer_penetration_depths_mm(tissue: TissueStack, frequency_hz: float) -> np.ndarray:
    return np.array([penetration_depth(frequency_hz, l.conductivity, l.relative_permittivity)
                     for l in tissue.layers]) * 1e3


def depth_attenuation(surface_density: float, tissue: TissueStack, frequency_hz: float,
                      z_mm: Optional[np.ndarray] = None) -> DepthProfile:
    """Power density inside the tissue, decaying as exp(-2 z / delta) per layer.

    Each layer starts from the density reached at its upper boundary, so the
    profile is continuous.
    """
    if surface_density < 0:
        raise ParameterError("surface density must be >= 0")
    if z_mm is None:
        z_mm = depth_grid(1.0, 0.05)
    z = np.asarray(z_mm, dtype=float)
    deltas = layer_penetration_depths_mm(tissue, frequency_hz)
    starts = tissue.boundaries_mm
    # log-attenuation accumulated at each layer start
    thick = np.diff(np.append(starts, np.inf))[:-1]
    start_exp = np.concatenate([[0.0], np.cumsum(-2.0 * thick / deltas[:-1])])
    idx = tissue.layer_index(z)
    exponent = start_exp[idx] - 2.0 * (z - starts[idx]) / deltas[idx]
    return DepthProfile(z, surface_density * np.exp(exponent), 'W/m^2')


def sar_profile(absorbed_power: float, tissue: TissueStack, frequency_hz: float,
                z_mm: Optional[np.ndarray] = None) -> DepthProfile:
    """SAR(z) in W/kg: absorbed power over exposed mass at the surface,
    decaying with depth like the absorbed power density."""
    if absorbed_power < 0:
        raise ParameterError("absorbed power must be >= 0")
    shape = depth_attenuation(1.0, tissue, frequency_hz, z_mm)
    return shape.scaled(absorbed_power / tissue.exposed_mass, 'W/kg')


def exposure_ratio(ctx: ExposureContext, signal_density: Union[float, np.ndarray]):
    """ER in percent: location factor times signal/total density times 100."""
    s = np.asarray(signal_density, dtype=float)
    if np.any(s < 0):
        raise ParameterError("signal power density must be >= 0")
    er = ctx.location_factor * s / ctx.pd_total * 100.0
    return float(er) if er.ndim == 0 else er


def exposure_ramp(t_s: np.ndarray, tau_s: float) -> np.ndarray:
    """Saturating build-up 1 - exp(-t / tau) of exposure over time."""
    if not tau_s > 0:
        raise ParameterError(f"ramp time constant must be > 0, got {tau_s}")
    return 1.0 - np.exp(-np.asarray(t_s, dtype=float) / tau_s)


def exposure_ratio_grid(ctx: ExposureContext, density: DepthProfile, times_s: np.ndarray,
                        tau_s: float = 10.0, weight: float = 1.0) -> np.ndarray:
    """ER over a (time, depth) grid; rows follow ``times_s``.

    ``weight`` is a multiplicative per-configuration calibration factor.
    """
    er_depth = exposure_ratio(ctx, density.values) * weight
    return np.outer(exposure_ramp(times_s, tau_s), er_depth)
