"""One-dimensional Pennes bioheat solver for layered tissue.

Solves

    rho c dT/dt = d/dz (k dT/dz) - rho_b c_b w (T - T_a) + rho SAR(z)

for the temperature rise above the arterial/ambient baseline with a
conservative finite-volume discretization on the SAR profile's grid.
The surface (z = 0) is either held at the baseline or cooled convectively;
the deepest node is held at the baseline. Time stepping is explicit; a step
above the positivity bound is refused, never silently subdivided.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import ParameterError, StabilityError
from .exposure import DepthProfile, TissueStack

BLOOD_DENSITY = 1050.0  # kg/m^3
BLOOD_SPECIFIC_HEAT = 3617.0  # J/(kg K)


@dataclass(frozen=True)
class BioheatResult:
    times_s: np.ndarray
    transient: np.ndarray  # (len(times_s), nz) temperature rise, K
    steady: DepthProfile
    dt_s: float
    ambient_k: float
    # discretization terms kept for heat-balance bookkeeping
    volumes: np.ndarray
    deposit: np.ndarray
    perfusion: np.ndarray
    k_faces: np.ndarray
    dz_m: float
    surface_bc: str
    surface_h: float

    @property
    def z_mm(self) -> np.ndarray:
        return self.steady.z_mm

    def profile_at(self, i: int) -> DepthProfile:
        return DepthProfile(self.z_mm, self.transient[i], 'K')


def _assemble(tissue, sar, surface_bc, surface_h, blood_density, blood_specific_heat):
    z = sar.z_mm
    if z.size < 3:
        raise ParameterError("bioheat grid needs at least 3 nodes")
    steps = np.diff(z)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ParameterError("bioheat solver requires a uniform depth grid")
    if np.any(sar.values < 0):
        raise ParameterError("SAR must be >= 0")
    if surface_bc not in ('convective', 'dirichlet'):
        raise ParameterError(f"unknown surface boundary {surface_bc!r}")
    if surface_bc == 'convective' and surface_h < 0:
        raise ParameterError("surface heat transfer coefficient must be >= 0")
    dz = steps[0] * 1e-3
    rho = tissue.property_at('mass_density', z)
    c = tissue.property_at('specific_heat', z)
    k = tissue.property_at('thermal_conductivity', z)
    w = tissue.property_at('blood_perfusion', z)
    k_faces = 2.0 * k[:-1] * k[1:] / (k[:-1] + k[1:])
    vol = np.full(z.size, dz)
    vol[0] = vol[-1] = dz / 2.0
    deposit = rho * sar.values * vol            # W/m^2 per node
    perf = blood_density * blood_specific_heat * w * vol
    cap = rho * c * vol
    # A T = f for the free nodes; diagonals of the full operator first
    diag = perf.copy()
    diag[:-1] += k_faces / dz
    diag[1:] += k_faces / dz
    if surface_bc == 'convective':
        diag[0] += surface_h
    off = -k_faces / dz
    return dz, cap, diag, off, deposit, perf, k_faces


def stable_time_step(cap: np.ndarray, diag: np.ndarray) -> float:
    """Largest explicit step keeping every update coefficient non-negative."""
    return float(np.min(cap / diag))


def bioheat_solve(tissue: TissueStack, sar: DepthProfile, duration_s: float,
                  ambient_k: float = 310.15, dt_s: Optional[float] = None,
                  sample_times_s: Optional[Sequence[float]] = None,
                  surface_bc: str = 'convective', surface_h: float = 10.0,
                  blood_density: float = BLOOD_DENSITY,
                  blood_specific_heat: float = BLOOD_SPECIFIC_HEAT,
                  safety: float = 0.9) -> BioheatResult:
    """Transient and steady temperature rise for a SAR depth profile.

    Parameters
    ----------
    tissue : TissueStack
        Layer properties, looked up at every grid node.
    sar : DepthProfile
        SAR in W/kg on a uniform grid; its last node is the fixed deep boundary.
    duration_s : float
        Simulated exposure time.
    dt_s : float, optional
        Explicit time step. Defaults to ``safety`` times the stability bound;
        an explicit value above the bound raises :class:`StabilityError`.
    sample_times_s : sequence of float, optional
        Times at which the transient is recorded (default: 11 evenly spaced
        samples over ``duration_s``).
    """
    if not duration_s > 0:
        raise ParameterError(f"duration must be > 0, got {duration_s}")
    dz, cap, diag, off, deposit, perf, k_faces = _assemble(
        tissue, sar, surface_bc, surface_h, blood_density, blood_specific_heat)
    n = sar.z_mm.size
    free = np.ones(n, dtype=bool)
    free[-1] = False
    if surface_bc == 'dirichlet':
        free[0] = False
    lo, hi = int(np.argmax(free)), n - 1  # free nodes are lo..hi-1

    dt_max = stable_time_step(cap[free], diag[free])
    if dt_s is None:
        dt_s = safety * dt_max
    elif dt_s > dt_max * (1 + 1e-12):
        raise StabilityError(f"time step {dt_s:g} s exceeds stability bound {dt_max:g} s")

    # steady state: tridiagonal solve on free nodes
    m = hi - lo
    ab = np.zeros((3, m))
    ab[0, 1:] = off[lo:hi - 1]
    ab[1] = diag[lo:hi]
    ab[2, :-1] = off[lo:hi - 1]
    steady = np.zeros(n)
    steady[lo:hi] = solve_banded((1, 1), ab, deposit[lo:hi])

    if sample_times_s is None:
        sample_times_s = np.linspace(0.0, duration_s, 11)
    times = np.asarray(sorted(sample_times_s), dtype=float)
    if times[0] < 0 or times[-1] > duration_s * (1 + 1e-12):
        raise ParameterError("sample times must lie within [0, duration]")

    f = deposit[lo:hi] / cap[lo:hi]
    d = diag[lo:hi] / cap[lo:hi]
    up = off[lo:hi - 1] / cap[lo:hi - 1]      # coupling to the next node
    dn = off[lo:hi - 1] / cap[lo + 1:hi]      # coupling to the previous node
    temp = np.zeros(m)
    out = np.zeros((times.size, n))
    t_now = 0.0
    for j, t_target in enumerate(times):
        span = t_target - t_now
        if span > 0:
            steps = int(np.ceil(span / dt_s - 1e-9))
            h = span / steps
            for _ in range(steps):
                r = f - d * temp
                r[:-1] -= up * temp[1:]
                r[1:] -= dn * temp[:-1]
                temp = temp + h * r
            t_now = t_target
        out[j, lo:hi] = temp
    return BioheatResult(times, out, DepthProfile(sar.z_mm, steady, 'K'), float(dt_s),
                         ambient_k, np.full(n, dz), deposit, perf, k_faces, dz,
                         surface_bc, surface_h)


def heat_balance(result: BioheatResult, sar: DepthProfile, tissue: TissueStack) -> dict:
    """Steady-state heat budget in W/m^2: deposited power (trapezoidal
    integral of rho SAR over depth) against perfusion, surface and deep
    conduction losses."""
    z_m = sar.z_mm * 1e-3
    rho = tissue.property_at('mass_density', sar.z_mm)
    deposited = float(np.trapezoid(rho * sar.values, z_m))
    t = result.steady.values
    perfusion = float(np.sum(result.perfusion * t))
    # a fixed-temperature node also absorbs the power deposited in its half cell
    deep = float(result.k_faces[-1] * (t[-2] - t[-1]) / result.dz_m + result.deposit[-1])
    if result.surface_bc == 'convective':
        surface = float(result.surface_h * t[0])
    else:
        surface = float(result.k_faces[0] * (t[1] - t[0]) / result.dz_m + result.deposit[0])
    removed = perfusion + deep + surface
    return {'deposited': deposited, 'perfusion': perfusion, 'surface': surface,
            'deep': deep, 'removed': removed,
            'relative_error': abs(removed - deposited) / deposited if deposited else 0.0}
